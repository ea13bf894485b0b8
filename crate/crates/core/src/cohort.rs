//! Observational cohort records and covariate stratification.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CohortError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: treatment value `{value}` is not 0 or 1")]
    NonBinaryTreatment { row: usize, value: String },
    #[error("row {row}: event value `{value}` is not 0 or 1")]
    NonBinaryEvent { row: usize, value: String },
    #[error("row {row}: negative survival time `{value}`")]
    NegativeTime { row: usize, value: String },
    #[error("row {row}: survival time `{value}` is not an integer number of days")]
    NonIntegerTime { row: usize, value: String },
    #[error("row {row}: empty value in column `{column}`")]
    EmptyCell { row: usize, column: String },
    #[error("treatment arm {0} has no subjects")]
    EmptyArm(Arm),
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("covariate `{column}` looks continuous (value `{value}`); discretize it into categories first")]
    ContinuousCovariate { column: String, value: String },
    #[error("subject `{0}` has a different set of covariates from the first subject")]
    InconsistentCovariates(String),
    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),
}

/// Binary treatment assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arm {
    Control = 0,
    Treated = 1,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Control, Arm::Treated];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_bit(bit: bool) -> Arm {
        if bit {
            Arm::Treated
        } else {
            Arm::Control
        }
    }

    /// 0.0 for control, 1.0 for treated.
    pub fn indicator(self) -> f64 {
        self.index() as f64
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectRecord {
    pub id: String,
    pub treatment: Arm,
    /// Days from study start to event or censoring.
    pub survival_time: u64,
    /// `true` if the event happened at `survival_time`, `false` if censored.
    pub event: bool,
    pub covariates: BTreeMap<String, String>,
}

/// A validated cohort. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortDataset {
    subjects: Vec<SubjectRecord>,
    covariate_levels: BTreeMap<String, Vec<String>>,
    t_max: u64,
}

impl CohortDataset {
    pub fn new(subjects: Vec<SubjectRecord>) -> Result<Self, CohortError> {
        let mut arm_seen = [false; 2];
        let mut levels: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        if let Some(first) = subjects.first() {
            for key in first.covariates.keys() {
                levels.insert(key.clone(), BTreeSet::new());
            }
        }
        for s in &subjects {
            arm_seen[s.treatment.index()] = true;
            if s.covariates.len() != levels.len() || !s.covariates.keys().all(|k| levels.contains_key(k)) {
                return Err(CohortError::InconsistentCovariates(s.id.clone()));
            }
            for (k, v) in &s.covariates {
                if looks_continuous(v) {
                    return Err(CohortError::ContinuousCovariate { column: k.clone(), value: v.clone() });
                }
                levels.get_mut(k).unwrap().insert(v.clone());
            }
        }
        for arm in Arm::BOTH {
            if !arm_seen[arm.index()] {
                return Err(CohortError::EmptyArm(arm));
            }
        }
        let t_max = subjects.iter().map(|s| s.survival_time).max().unwrap_or(0);
        Ok(CohortDataset {
            subjects,
            covariate_levels: levels.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect(),
            t_max,
        })
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn t_max(&self) -> u64 {
        self.t_max
    }

    /// Covariate name to its sorted distinct level labels.
    pub fn covariate_levels(&self) -> &BTreeMap<String, Vec<String>> {
        &self.covariate_levels
    }

    pub fn covariate_names(&self) -> impl Iterator<Item = &str> {
        self.covariate_levels.keys().map(String::as_str)
    }

    pub fn arm_sizes(&self) -> [usize; 2] {
        let mut sizes = [0; 2];
        for s in &self.subjects {
            sizes[s.treatment.index()] += 1;
        }
        sizes
    }

    pub fn times(&self) -> Vec<u64> {
        self.subjects.iter().map(|s| s.survival_time).collect()
    }

    pub fn events(&self) -> Vec<bool> {
        self.subjects.iter().map(|s| s.event).collect()
    }

    pub fn treatments(&self) -> Vec<Arm> {
        self.subjects.iter().map(|s| s.treatment).collect()
    }

    /// Ends the study at `t_max`: anyone still under observation after that
    /// day is censored at `t_max`.
    pub fn truncate(&self, t_max: u64) -> Result<CohortDataset, CohortError> {
        let subjects = self
            .subjects
            .iter()
            .map(|s| {
                let mut s = s.clone();
                if s.survival_time > t_max {
                    s.survival_time = t_max;
                    s.event = false;
                }
                s
            })
            .collect();
        CohortDataset::new(subjects)
    }

    /// Drops subjects censored before the last day of the study.
    pub fn drop_early_censored(&self) -> Result<CohortDataset, CohortError> {
        let t_max = self.t_max;
        let subjects = self
            .subjects
            .iter()
            .filter(|s| s.event || s.survival_time >= t_max)
            .cloned()
            .collect();
        CohortDataset::new(subjects)
    }

    pub fn censored_before_end(&self) -> usize {
        self.subjects.iter().filter(|s| !s.event && s.survival_time < self.t_max).count()
    }
}

/// Non-integer numeric labels are treated as continuous measurements.
fn looks_continuous(v: &str) -> bool {
    match v.trim().parse::<f64>() {
        Ok(x) => x.is_finite() && x != libm::trunc(x),
        Err(_) => false,
    }
}

/// Per-arm and marginal subject counts over the cross product of covariate
/// levels. Strata with no subjects are kept, with count zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratumIndex {
    covariates: Vec<String>,
    strata: Vec<Vec<String>>,
    subject_stratum: Vec<usize>,
    counts: [Vec<usize>; 2],
}

impl StratumIndex {
    pub fn covariates(&self) -> &[String] {
        &self.covariates
    }

    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    /// Level labels of stratum `s`, one per covariate.
    pub fn levels(&self, s: usize) -> &[String] {
        &self.strata[s]
    }

    pub fn label(&self, s: usize) -> String {
        if self.covariates.is_empty() {
            return "(all)".to_string();
        }
        let parts: Vec<String> =
            self.covariates.iter().zip(&self.strata[s]).map(|(c, l)| format!("{c}={l}")).collect();
        parts.join(",")
    }

    pub fn subject_stratum(&self, subject: usize) -> usize {
        self.subject_stratum[subject]
    }

    /// n(x, z)
    pub fn count(&self, arm: Arm, s: usize) -> usize {
        self.counts[arm.index()][s]
    }

    /// n(z)
    pub fn marginal(&self, s: usize) -> usize {
        self.counts[0][s] + self.counts[1][s]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// (arm, stratum) cells with no subjects; these break positivity.
    pub fn empty_cells(&self) -> Vec<(Arm, usize)> {
        let mut out = Vec::new();
        for s in 0..self.len() {
            for arm in Arm::BOTH {
                if self.count(arm, s) == 0 {
                    out.push((arm, s));
                }
            }
        }
        out
    }
}

pub fn stratum_counts<S: AsRef<str>>(cohort: &CohortDataset, covariates: &[S]) -> Result<StratumIndex, CohortError> {
    let mut names: Vec<String> = Vec::new();
    for c in covariates {
        let c = c.as_ref();
        if !cohort.covariate_levels.contains_key(c) {
            return Err(CohortError::UnknownCovariate(c.to_string()));
        }
        if !names.iter().any(|n| n == c) {
            names.push(c.to_string());
        }
    }
    names.sort();
    let level_lists: Vec<&Vec<String>> = names.iter().map(|n| &cohort.covariate_levels[n]).collect();
    // mixed-radix enumeration, last covariate varying fastest
    let total: usize = level_lists.iter().map(|l| l.len()).product();
    let mut strata = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut combo = vec![String::new(); names.len()];
        for (k, levels) in level_lists.iter().enumerate().rev() {
            combo[k] = levels[code % levels.len()].clone();
            code /= levels.len();
        }
        strata.push(combo);
    }
    let mut counts = [vec![0; total], vec![0; total]];
    let mut subject_stratum = Vec::with_capacity(cohort.len());
    for s in &cohort.subjects {
        let mut code = 0;
        for (name, levels) in names.iter().zip(&level_lists) {
            let v = &s.covariates[name];
            code = code * levels.len() + levels.binary_search(v).expect("level recorded at load");
        }
        counts[s.treatment.index()][code] += 1;
        subject_stratum.push(code);
    }
    Ok(StratumIndex { covariates: names, strata, subject_stratum, counts })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn subject(id: usize, x: u8, t: u64, event: bool, z: &[(&str, &str)]) -> SubjectRecord {
        SubjectRecord {
            id: format!("s{id}"),
            treatment: Arm::from_bit(x == 1),
            survival_time: t,
            event,
            covariates: z.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    #[test]
    fn builds_levels_and_t_max() {
        let c = CohortDataset::new(vec![
            subject(0, 1, 5, true, &[("Z", "0")]),
            subject(1, 0, 3, true, &[("Z", "1")]),
            subject(2, 1, 8, true, &[("Z", "1")]),
            subject(3, 0, 2, true, &[("Z", "0")]),
        ])
        .unwrap();
        assert_eq!(c.t_max(), 8);
        assert_eq!(c.covariate_levels()["Z"], ["0", "1"]);
        assert_eq!(c.arm_sizes(), [2, 2]);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            CohortDataset::new(vec![subject(0, 1, 5, true, &[])]).unwrap_err(),
            CohortError::EmptyArm(Arm::Control)
        );
        assert!(matches!(
            CohortDataset::new(vec![subject(0, 1, 5, true, &[("Z", "0")]), subject(1, 0, 5, true, &[])]),
            Err(CohortError::InconsistentCovariates(_))
        ));
        assert!(matches!(
            CohortDataset::new(vec![subject(0, 1, 5, true, &[("Z", "0.37")]), subject(1, 0, 5, true, &[("Z", "1")])]),
            Err(CohortError::ContinuousCovariate { .. })
        ));
    }

    #[test]
    fn stratum_counts_biased_split() {
        let mut subjects = Vec::new();
        for i in 0..200 {
            let z = if i < 100 { "0" } else { "1" };
            let treated = if z == "0" { i % 4 != 0 } else { i % 4 == 0 };
            subjects.push(subject(i, treated as u8, 1, true, &[("Z", z)]));
        }
        let cohort = CohortDataset::new(subjects).unwrap();
        let idx = stratum_counts(&cohort, &["Z"]).unwrap();
        assert_eq!(idx.count(Arm::Treated, 0), 75);
        assert_eq!(idx.count(Arm::Treated, 1), 25);
        assert_eq!(idx.marginal(0), 100);
        assert_eq!(idx.total(), 200);
        assert!(idx.empty_cells().is_empty());
    }

    #[test]
    fn empty_stratification_is_one_stratum() {
        let cohort = CohortDataset::new(vec![
            subject(0, 1, 5, true, &[("Z", "a")]),
            subject(1, 0, 3, false, &[("Z", "b")]),
        ])
        .unwrap();
        let idx = stratum_counts::<&str>(&cohort, &[]).unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.count(Arm::Treated, 0) + idx.count(Arm::Control, 0), 2);
        assert!(matches!(stratum_counts(&cohort, &["W"]), Err(CohortError::UnknownCovariate(_))));
    }

    #[test]
    fn zero_cells_are_recorded() {
        let cohort = CohortDataset::new(vec![
            subject(0, 1, 5, true, &[("Z", "0")]),
            subject(1, 0, 3, true, &[("Z", "0")]),
            subject(2, 0, 4, true, &[("Z", "1")]),
        ])
        .unwrap();
        let idx = stratum_counts(&cohort, &["Z"]).unwrap();
        assert_eq!(idx.count(Arm::Treated, 1), 0);
        assert_eq!(idx.empty_cells(), vec![(Arm::Treated, 1)]);
        assert_eq!(idx.label(1), "Z=1");
    }

    #[test]
    fn truncation_and_strict_mode() {
        let cohort = CohortDataset::new(vec![
            subject(0, 1, 10, true, &[]),
            subject(1, 0, 3, false, &[]),
            subject(2, 0, 4, true, &[]),
            subject(3, 1, 2, true, &[]),
        ])
        .unwrap();
        let cut = cohort.truncate(5).unwrap();
        assert_eq!(cut.t_max(), 5);
        assert!(!cut.subjects()[0].event);
        assert_eq!(cohort.censored_before_end(), 1);
        let strict = cohort.drop_early_censored().unwrap();
        assert_eq!(strict.len(), 3);
    }
}
