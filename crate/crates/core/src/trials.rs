//! Splitting one survival study into per-day binary trials, and rebuilding a
//! cohort from per-day counts.
//!
//! Day `i` runs over `0..=t_max`. `Y_i[j]` is 0 when subject `j` had the
//! event on or before day `i` and 1 otherwise, so a censored subject counts
//! as alive on every day. Everything here only changes on event days, so
//! curves are stored at the *change days* (day 0, each event day, `t_max`)
//! and are constant in between. That keeps studies with very long follow-up
//! cheap without changing any per-day value.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::adjust::AdjustedCurve;
use crate::cohort::{stratum_counts, Arm, CohortDataset, CohortError, StratumIndex};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrialError {
    #[error("positivity violated: no subjects with treatment={arm} in stratum {stratum}")]
    PositivityViolation { arm: Arm, stratum: String },
    #[error("adjusted counts for arm {arm} increase at day {day}")]
    NonMonotoneCounts { arm: Arm, day: u64 },
    #[error(transparent)]
    Cohort(#[from] CohortError),
}

/// Per-day survival indicators for every subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivalMatrix {
    t_max: u64,
    /// Day from which the subject is dead, `None` if never within the study.
    death_day: Vec<Option<u64>>,
    change_days: Vec<u64>,
}

pub fn to_daily_trials(cohort: &CohortDataset) -> SurvivalMatrix {
    let t_max = cohort.t_max();
    let death_day: Vec<Option<u64>> = cohort
        .subjects()
        .iter()
        .map(|s| (s.event && s.survival_time <= t_max).then_some(s.survival_time))
        .collect();
    let mut change_days: Vec<u64> = death_day.iter().flatten().copied().collect();
    change_days.push(0);
    change_days.push(t_max);
    change_days.sort_unstable();
    change_days.dedup();
    SurvivalMatrix { t_max, death_day, change_days }
}

impl SurvivalMatrix {
    pub fn t_max(&self) -> u64 {
        self.t_max
    }

    /// Number of subjects (columns).
    pub fn n(&self) -> usize {
        self.death_day.len()
    }

    /// `Y_day[subject]`, 1 = alive.
    pub fn get(&self, day: u64, subject: usize) -> u8 {
        match self.death_day[subject] {
            Some(d) if d <= day => 0,
            _ => 1,
        }
    }

    pub fn row(&self, day: u64) -> impl Iterator<Item = u8> + '_ {
        (0..self.n()).map(move |j| self.get(day, j))
    }

    pub fn alive_count(&self, day: u64) -> usize {
        self.row(day).filter(|&y| y == 1).count()
    }

    /// Day 0, every event day and `t_max`, sorted. Rows are identical
    /// between consecutive change days.
    pub fn change_days(&self) -> &[u64] {
        &self.change_days
    }

    pub fn death_day(&self, subject: usize) -> Option<u64> {
        self.death_day[subject]
    }

    /// Fully materialized `[day][subject]` array; only sensible for short
    /// studies.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..=self.t_max).map(|day| self.row(day).collect()).collect()
    }
}

/// Index of the last change day `<= day`.
pub(crate) fn step_index(days: &[u64], day: u64) -> usize {
    match days.binary_search(&day) {
        Ok(k) => k,
        Err(k) => k.saturating_sub(1),
    }
}

/// Empirical `P(Y_i = 1 | X = x, Z = z)` at each change day.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalTable {
    pub days: Vec<u64>,
    pub strata: StratumIndex,
    /// `alive[arm][stratum][k]` at `days[k]`
    pub alive: [Vec<Vec<usize>>; 2],
    pub proportions: [Vec<Vec<f64>>; 2],
}

impl SurvivalTable {
    pub fn proportion_at(&self, arm: Arm, stratum: usize, day: u64) -> f64 {
        self.proportions[arm.index()][stratum][step_index(&self.days, day)]
    }
}

/// `pseudocount` adds that many pseudo-subjects to each of the alive/dead
/// outcomes of every cell; with it, empty cells are allowed and get 1/2.
pub fn daily_survival_proportions<S: AsRef<str>>(
    matrix: &SurvivalMatrix,
    cohort: &CohortDataset,
    stratify_by: &[S],
    pseudocount: Option<f64>,
) -> Result<SurvivalTable, TrialError> {
    let strata = stratum_counts(cohort, stratify_by)?;
    if pseudocount.is_none() {
        if let Some(&(arm, s)) = strata.empty_cells().first() {
            return Err(TrialError::PositivityViolation { arm, stratum: strata.label(s) });
        }
    }
    let days = matrix.change_days().to_vec();
    let k = days.len();
    let mut deaths = [vec![vec![0usize; k]; strata.len()], vec![vec![0usize; k]; strata.len()]];
    for (j, subject) in cohort.subjects().iter().enumerate() {
        if let Some(d) = matrix.death_day(j) {
            let at = days.binary_search(&d).expect("death days are change days");
            deaths[subject.treatment.index()][strata.subject_stratum(j)][at] += 1;
        }
    }
    let mut alive = [Vec::new(), Vec::new()];
    let mut proportions = [Vec::new(), Vec::new()];
    for arm in Arm::BOTH {
        for s in 0..strata.len() {
            let n = strata.count(arm, s);
            let mut dead = 0;
            let mut alive_row = Vec::with_capacity(k);
            let mut p_row = Vec::with_capacity(k);
            for d in &deaths[arm.index()][s] {
                dead += d;
                let a = n - dead;
                alive_row.push(a);
                p_row.push(match pseudocount {
                    Some(c) => (a as f64 + c) / (n as f64 + 2.0 * c),
                    None => a as f64 / n as f64,
                });
            }
            alive[arm.index()].push(alive_row);
            proportions[arm.index()].push(p_row);
        }
    }
    Ok(SurvivalTable { days, strata, alive, proportions })
}

/// One reconstructed subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PseudoSubject {
    pub treatment: Arm,
    pub survival_time: u64,
    pub event: bool,
}

/// Individual-level cohort rebuilt from adjusted per-day counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedCohort {
    pub subjects: Vec<PseudoSubject>,
    pub days: Vec<u64>,
    /// Fractional adjusted counts the cohort was built from, `[arm][k]`.
    pub source_counts: [Vec<f64>; 2],
    /// Integerized alive counts realized by `subjects`, `[arm][k]`.
    pub integer_counts: [Vec<usize>; 2],
}

impl AdjustedCohort {
    pub fn times(&self) -> Vec<u64> {
        self.subjects.iter().map(|s| s.survival_time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.subjects.iter().map(|s| s.event).collect()
    }

    pub fn treatments(&self) -> Vec<Arm> {
        self.subjects.iter().map(|s| s.treatment).collect()
    }

    pub fn arm_size(&self, arm: Arm) -> usize {
        self.subjects.iter().filter(|s| s.treatment == arm).count()
    }
}

/// Round half up, absorbing floating noise just below a half.
fn round_half_up(x: f64) -> f64 {
    libm::floor(x + 0.5 + 1e-9)
}

/// Rebuilds individual subjects from adjusted alive counts: deaths are put on
/// the first day the count drops and survivors are censored at `t_max`.
///
/// Fractional counts are integerized on the cumulative death count: the
/// cumulative deaths up to each change day are rounded half-up, and the
/// per-day deaths are the differences. Totals per arm are preserved exactly,
/// a rounding tie goes to the earlier day, and the realized alive count never
/// drifts more than half a subject from the adjusted count.
pub fn from_adjusted_counts(curve: &AdjustedCurve, arm_sizes: [usize; 2]) -> Result<AdjustedCohort, TrialError> {
    let days = curve.days.clone();
    let t_max = *days.last().expect("curves always contain day 0");
    let mut subjects = Vec::new();
    let mut integer_counts = [Vec::new(), Vec::new()];
    for arm in Arm::BOTH {
        let size = arm_sizes[arm.index()];
        let counts = &curve.counts[arm.index()];
        let mut prev_count = size as f64;
        let mut dead_so_far = 0usize;
        for (k, (&day, &c)) in days.iter().zip(counts).enumerate() {
            if c > prev_count + 1e-9 * size.max(1) as f64 {
                return Err(TrialError::NonMonotoneCounts { arm, day });
            }
            prev_count = c;
            let cumulative = (round_half_up(size as f64 - c).max(0.0) as usize).clamp(dead_so_far, size);
            let died_today = cumulative - dead_so_far;
            dead_so_far = cumulative;
            subjects.extend((0..died_today).map(|_| PseudoSubject { treatment: arm, survival_time: day, event: true }));
            integer_counts[arm.index()].push(size - dead_so_far);
            debug_assert!(k < days.len());
        }
        subjects.extend(
            (0..size - dead_so_far).map(|_| PseudoSubject { treatment: arm, survival_time: t_max, event: false }),
        );
    }
    Ok(AdjustedCohort { subjects, days, source_counts: curve.counts.clone(), integer_counts })
}
