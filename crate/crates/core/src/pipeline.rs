//! End-to-end analysis: identify an adjustment set, adjust the per-day
//! survival trials, rebuild a pseudo-cohort and compare three hazard ratios
//! (crude, covariate-adjusted Cox, and Cox on the pseudo-cohort).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::adjust::{adjust_curve, crude_curve, AdjustError, AdjustOptions, AdjustedCurve};
use crate::cohort::{Arm, CohortDataset, CohortError};
use crate::cox::{cox_fit, hr_report_with, CoxOptions, DesignMatrix, Ties, Z95};
use crate::graph::{CausalDag, GraphError};
use crate::km::{km_fit, KmCurve};
use crate::trials::{from_adjusted_counts, to_daily_trials, AdjustedCohort, TrialError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error(transparent)]
    Adjust(#[from] AdjustError),
    #[error(transparent)]
    Trial(#[from] TrialError),
    #[error("effect of `{treatment}` on `{outcome}` is not identifiable by backdoor adjustment; open backdoor path: {path}")]
    NotIdentifiable { treatment: String, outcome: String, path: String },
    #[error("{set} does not satisfy the backdoor criterion; open backdoor path: {path}")]
    InvalidAdjustmentSet { set: String, path: String },
    #[error("adjustment variable `{0}` is not a covariate column of the data")]
    MissingCovariate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AdjustmentChoice {
    /// First minimal backdoor set.
    #[default]
    Auto,
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSpec {
    /// Graph node for the treatment column.
    pub treatment: String,
    /// Graph node for the survival outcome.
    pub outcome: String,
    pub adjustment: AdjustmentChoice,
    pub ties: Ties,
    /// Normal quantile for confidence intervals.
    pub z: f64,
    pub t_max: Option<u64>,
    pub strict_censoring: bool,
    pub pseudocount: Option<f64>,
}

impl AnalysisSpec {
    pub fn new(treatment: &str, outcome: &str) -> Self {
        AnalysisSpec {
            treatment: treatment.to_string(),
            outcome: outcome.to_string(),
            adjustment: AdjustmentChoice::Auto,
            ties: Ties::Efron,
            z: Z95,
            t_max: None,
            strict_censoring: false,
            pseudocount: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HrEntry {
    pub covariates: Vec<String>,
    pub beta: f64,
    pub se: f64,
    pub hr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub loglik: f64,
    pub iterations: usize,
}

/// A hazard ratio, or the reason it could not be computed.
pub type HrResult = Result<HrEntry, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    /// Cox on treatment alone, original data.
    pub crude: HrResult,
    /// Cox on treatment plus adjustment covariates, original data.
    pub traditional: HrResult,
    /// Cox on treatment alone, reconstructed pseudo-cohort.
    pub adjusted: HrResult,
    pub adjustment_set: Vec<String>,
    pub minimal_sets: Vec<Vec<String>>,
    pub t_max: u64,
    pub n: usize,
    pub arm_sizes: [usize; 2],
    pub ties: Ties,
    /// Per arm, the largest gap between the Kaplan-Meier curve of the
    /// pseudo-cohort and the adjusted survival probabilities.
    pub reconstruction_max_error: [f64; 2],
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub crude_curve: AdjustedCurve,
    pub adjusted_curve: AdjustedCurve,
    pub pseudo_cohort: AdjustedCohort,
    pub km_adjusted: KmCurve,
}

pub fn analyze(cohort: &CohortDataset, dag: &CausalDag, spec: &AnalysisSpec) -> Result<Analysis, AnalysisError> {
    let minimal = dag.minimal_backdoor_sets(&spec.treatment, &spec.outcome)?;
    let set = match &spec.adjustment {
        AdjustmentChoice::Auto => match minimal.first() {
            Some(s) => s.clone(),
            None => {
                let path = dag
                    .open_backdoor_path::<&str>(&[], &spec.treatment, &spec.outcome)?
                    .map(|p| p.to_string())
                    .unwrap_or_else(|| "(none found)".to_string());
                return Err(AnalysisError::NotIdentifiable {
                    treatment: spec.treatment.clone(),
                    outcome: spec.outcome.clone(),
                    path,
                });
            }
        },
        AdjustmentChoice::Explicit(names) => {
            let s = dag.satisfies_backdoor(names, &spec.treatment, &spec.outcome)?;
            if !s.valid {
                let path = dag
                    .open_backdoor_path(names, &spec.treatment, &spec.outcome)?
                    .map(|p| p.to_string())
                    .unwrap_or_else(|| "(blocked, but the set is unobserved or contains a descendant of the treatment)".into());
                return Err(AnalysisError::InvalidAdjustmentSet { set: s.to_string(), path });
            }
            s
        }
    };
    for v in &set.variables {
        if !cohort.covariate_levels().contains_key(v) {
            return Err(AnalysisError::MissingCovariate(v.clone()));
        }
    }

    let mut warnings = Vec::new();
    let mut data = match spec.t_max {
        Some(t) if t < cohort.t_max() => cohort.truncate(t)?,
        _ => cohort.clone(),
    };
    let early = data.censored_before_end();
    if early > 0 {
        if spec.strict_censoring {
            data = data.drop_early_censored()?;
            warnings.push(format!("strict censoring: dropped {early} subjects censored before day {}", data.t_max()));
        } else {
            warnings.push(format!(
                "{early} subjects censored before day {} are counted as alive on every day; survival may be overstated",
                data.t_max()
            ));
        }
    }
    if let Some(c) = spec.pseudocount {
        warnings.push(format!("pseudocount {c} applied to every stratum"));
    }

    let matrix = to_daily_trials(&data);
    let crude = crude_curve(&data, &matrix);
    let adjusted = adjust_curve(&data, &matrix, &set, AdjustOptions { pseudocount: spec.pseudocount })?;
    let arm_sizes = data.arm_sizes();
    let pseudo = from_adjusted_counts(&adjusted, arm_sizes)?;

    let pseudo_groups: Vec<usize> = pseudo.treatments().iter().map(|a| a.index()).collect();
    let km_adjusted = km_fit(&pseudo.times(), &pseudo.events(), &pseudo_groups).expect("pseudo-cohort is non-empty");
    let mut reconstruction_max_error = [0.0f64; 2];
    for arm in Arm::BOTH {
        let g = km_adjusted.group(arm.index()).expect("both arms present");
        let err = &mut reconstruction_max_error[arm.index()];
        for (k, &day) in adjusted.days.iter().enumerate() {
            *err = err.max((g.survival_at(day) - adjusted.survival[arm.index()][k]).abs());
        }
    }

    let options = CoxOptions { ties: spec.ties, ..CoxOptions::default() };
    let fit_entry = |label: &str, design: DesignMatrix, times: &[u64], events: &[bool], warnings: &mut Vec<String>| {
        let times: Vec<f64> = times.iter().map(|&t| t as f64).collect();
        let result = cox_fit(&design, &times, events, options).map_err(|e| e.to_string()).and_then(|fit| {
            let (hr, ci_low, ci_high) = hr_report_with(&fit, 0, spec.z).map_err(|e| e.to_string())?;
            Ok(HrEntry {
                covariates: fit.names.clone(),
                beta: fit.beta[0],
                se: fit.se[0],
                hr,
                ci_low,
                ci_high,
                loglik: fit.loglik,
                iterations: fit.iterations,
            })
        });
        if let Err(e) = &result {
            warnings.push(format!("{label} hazard ratio unavailable: {e}"));
        }
        result
    };

    let treat: Vec<f64> = data.treatments().iter().map(|a| a.indicator()).collect();
    let crude_fit = fit_entry(
        "crude",
        DesignMatrix::single(&spec.treatment, treat.clone()),
        &data.times(),
        &data.events(),
        &mut warnings,
    );
    let traditional_fit = fit_entry(
        "traditional",
        traditional_design(&data, &spec.treatment, treat, &set.names()),
        &data.times(),
        &data.events(),
        &mut warnings,
    );
    let pseudo_treat: Vec<f64> = pseudo.treatments().iter().map(|a| a.indicator()).collect();
    let adjusted_fit = fit_entry(
        "adjusted",
        DesignMatrix::single(&spec.treatment, pseudo_treat),
        &pseudo.times(),
        &pseudo.events(),
        &mut warnings,
    );

    let report = AnalysisReport {
        crude: crude_fit,
        traditional: traditional_fit,
        adjusted: adjusted_fit,
        adjustment_set: set.names(),
        minimal_sets: minimal.iter().map(|s| s.names()).collect(),
        t_max: data.t_max(),
        n: data.len(),
        arm_sizes,
        ties: spec.ties,
        reconstruction_max_error,
        warnings,
    };
    Ok(Analysis { report, crude_curve: crude, adjusted_curve: adjusted, pseudo_cohort: pseudo, km_adjusted })
}

/// Treatment column followed by one indicator per non-reference level of
/// each covariate (the first sorted level is the reference).
fn traditional_design(cohort: &CohortDataset, treatment: &str, treat: Vec<f64>, covariates: &[String]) -> DesignMatrix {
    let mut columns = vec![(treatment.to_string(), treat)];
    for name in covariates {
        let levels = &cohort.covariate_levels()[name];
        for level in levels.iter().skip(1) {
            let col = cohort.subjects().iter().map(|s| f64::from(u8::from(&s.covariates[name] == level))).collect();
            columns.push((format!("{name}={level}"), col));
        }
    }
    DesignMatrix::from_columns(columns)
}
