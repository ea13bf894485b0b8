//! Backdoor adjustment of the per-day survival trials.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cohort::{stratum_counts, Arm, CohortDataset, CohortError};
use crate::graph::AdjustmentSet;
use crate::trials::{daily_survival_proportions, step_index, SurvivalMatrix, TrialError};

/// Largest day the long-form oracle will enumerate (2^day outcome histories).
pub const BRUTE_FORCE_MAX_DAY: u64 = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdjustError {
    #[error("adjustment set {0} does not satisfy the backdoor criterion")]
    InvalidAdjustmentSet(String),
    #[error("positivity violated: no subjects with treatment={arm} in stratum {stratum}")]
    PositivityViolation { arm: Arm, stratum: String },
    #[error("day {day} is beyond the oracle limit of {limit}")]
    OracleTooLarge { day: u64, limit: u64 },
    #[error(transparent)]
    Cohort(#[from] CohortError),
}

impl From<TrialError> for AdjustError {
    fn from(e: TrialError) -> Self {
        match e {
            TrialError::PositivityViolation { arm, stratum } => AdjustError::PositivityViolation { arm, stratum },
            TrialError::Cohort(c) => AdjustError::Cohort(c),
            TrialError::NonMonotoneCounts { .. } => unreachable!("not produced by proportion estimation"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdjustOptions {
    /// Laplace pseudocount for near-empty strata; off by default.
    pub pseudocount: Option<f64>,
}

impl AdjustOptions {
    pub const LAPLACE: f64 = 0.5;

    pub fn laplace() -> Self {
        AdjustOptions { pseudocount: Some(Self::LAPLACE) }
    }
}

/// Per-arm survival probabilities under intervention, stored at change days
/// and constant between them.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedCurve {
    pub days: Vec<u64>,
    /// `survival[arm][k]`, the probability of being alive at `days[k]`.
    pub survival: [Vec<f64>; 2],
    /// `counts[arm][k] = survival[arm][k] * arm_sizes[arm]`
    pub counts: [Vec<f64>; 2],
    pub arm_sizes: [usize; 2],
    pub adjustment_set: Vec<String>,
}

impl AdjustedCurve {
    pub fn t_max(&self) -> u64 {
        *self.days.last().unwrap()
    }

    pub fn survival_at(&self, arm: Arm, day: u64) -> f64 {
        self.survival[arm.index()][step_index(&self.days, day)]
    }

    pub fn count_at(&self, arm: Arm, day: u64) -> f64 {
        self.counts[arm.index()][step_index(&self.days, day)]
    }
}

/// Applies `P(Y_i = 1 | do(x)) = sum_z P(Y_i = 1 | x, z) P(z)` for every day
/// and arm. The set must have passed the backdoor check.
pub fn adjust_curve(
    cohort: &CohortDataset,
    matrix: &SurvivalMatrix,
    z: &AdjustmentSet,
    options: AdjustOptions,
) -> Result<AdjustedCurve, AdjustError> {
    if !z.valid {
        return Err(AdjustError::InvalidAdjustmentSet(alloc::format!("{z}")));
    }
    adjust_on(cohort, matrix, &z.names(), options)
}

/// Per-arm survival proportions with no adjustment.
pub fn crude_curve(cohort: &CohortDataset, matrix: &SurvivalMatrix) -> AdjustedCurve {
    adjust_on::<&str>(cohort, matrix, &[], AdjustOptions::default()).expect("both arms are non-empty")
}

/// Adjustment over an arbitrary covariate list, with no graph check.
pub fn adjust_on<S: AsRef<str>>(
    cohort: &CohortDataset,
    matrix: &SurvivalMatrix,
    covariates: &[S],
    options: AdjustOptions,
) -> Result<AdjustedCurve, AdjustError> {
    let table = daily_survival_proportions(matrix, cohort, covariates, options.pseudocount)?;
    let n = cohort.len() as f64;
    let weights: Vec<f64> = (0..table.strata.len()).map(|s| table.strata.marginal(s) as f64 / n).collect();
    let arm_sizes = cohort.arm_sizes();
    let k = table.days.len();
    let mut survival = [vec![0.0; k], vec![0.0; k]];
    let mut counts = [vec![0.0; k], vec![0.0; k]];
    for arm in Arm::BOTH {
        let a = arm.index();
        for i in 0..k {
            let mut p = 0.0;
            for (s, w) in weights.iter().enumerate() {
                p += table.proportions[a][s][i] * w;
            }
            let p = p.min(1.0);
            survival[a][i] = p;
            counts[a][i] = p * arm_sizes[a] as f64;
        }
    }
    Ok(AdjustedCurve {
        days: table.days,
        survival,
        counts,
        arm_sizes,
        adjustment_set: table.strata.covariates().to_vec(),
    })
}

/// Long-form evaluation of the adjusted survival probability at `day`:
/// sums `P(Y_day = 1, Y_{day-1}, ..., Y_0 | x, z) P(z)` over every stratum and
/// every history `(Y_0, ..., Y_{day-1})` in `{0,1}^day`, each joint
/// probability read off the empirical distribution of histories in the cell.
/// Exponential in `day`; meant as a cross-check on small cohorts.
pub fn brute_force_do<S: AsRef<str>>(
    cohort: &CohortDataset,
    matrix: &SurvivalMatrix,
    covariates: &[S],
    day: u64,
    arm: Arm,
) -> Result<f64, AdjustError> {
    if day > BRUTE_FORCE_MAX_DAY {
        return Err(AdjustError::OracleTooLarge { day, limit: BRUTE_FORCE_MAX_DAY });
    }
    let strata = stratum_counts(cohort, covariates)?;
    let n = cohort.len() as f64;
    // history histogram per stratum: bit d of the key holds Y_d
    let mut histories: Vec<BTreeMap<u32, usize>> = vec![BTreeMap::new(); strata.len()];
    for (j, subject) in cohort.subjects().iter().enumerate() {
        if subject.treatment != arm {
            continue;
        }
        let key = (0..=day).fold(0u32, |acc, d| acc | (u32::from(matrix.get(d, j)) << d));
        *histories[strata.subject_stratum(j)].entry(key).or_default() += 1;
    }
    let mut total = 0.0;
    for (s, hist) in histories.iter().enumerate() {
        let cell = strata.count(arm, s);
        if cell == 0 {
            return Err(AdjustError::PositivityViolation { arm, stratum: strata.label(s) });
        }
        let p_z = strata.marginal(s) as f64 / n;
        let alive_today = 1u32 << day;
        for earlier in 0..(1u32 << day) {
            let joint = hist.get(&(earlier | alive_today)).copied().unwrap_or(0) as f64 / cell as f64;
            total += joint * p_z;
        }
    }
    Ok(total)
}
