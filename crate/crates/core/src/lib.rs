//! Backdoor-adjusted survival analysis.
//!
//! Given an observational cohort (treatment, integer survival days, event
//! flag, categorical covariates) and a causal DAG, this crate
//!
//! - finds a set of covariates satisfying the backdoor criterion,
//! - splits the single survival study into one binary "alive at day i" trial
//!   per day and applies backdoor adjustment to each of them,
//! - rebuilds an "as-if randomized" pseudo-cohort from the adjusted counts,
//! - fits Kaplan-Meier curves and a Cox proportional-hazards model.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! plotting live in the `hazcause` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adjust;
pub mod cohort;
pub mod cox;
pub mod graph;
pub mod km;
mod linalg;
pub mod pipeline;
pub mod sim;
pub mod trials;

pub use adjust::{adjust_curve, brute_force_do, crude_curve, AdjustError, AdjustOptions, AdjustedCurve};
pub use cohort::{stratum_counts, Arm, CohortDataset, CohortError, StratumIndex, SubjectRecord};
pub use cox::{cox_fit, hr_report, CoxError, CoxFit, CoxOptions, DesignMatrix, Ties};
pub use graph::{AdjustmentSet, CausalDag, GraphError};
pub use km::{km_fit, KmCurve, KmError};
pub use pipeline::{analyze, AdjustmentChoice, Analysis, AnalysisError, AnalysisReport, AnalysisSpec};
pub use sim::{generate_cohort, SimConfig, SimError};
pub use trials::{from_adjusted_counts, to_daily_trials, AdjustedCohort, SurvivalMatrix, TrialError};
