//! `report.json` and `curves.csv`.

use std::io::{self, Write};

use hazcause_core::pipeline::HrResult;
use hazcause_core::{AdjustedCurve, Analysis, Arm, Ties};
use serde::Serialize;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportJson {
    pub schema: &'static str,
    pub treatment: String,
    pub outcome: String,
    pub n: usize,
    pub t_max: u64,
    pub arm_sizes: ArmSizes,
    pub adjustment_set: Vec<String>,
    pub minimal_backdoor_sets: Vec<Vec<String>>,
    pub ties: &'static str,
    pub alpha: f64,
    pub hazard_ratios: HazardRatios,
    pub reconstruction_max_error: ArmErrors,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSizes {
    pub control: usize,
    pub treated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmErrors {
    pub control: f64,
    pub treated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardRatios {
    pub crude: HrJson,
    pub traditional: HrJson,
    pub adjusted: HrJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum HrJson {
    Estimate {
        covariates: Vec<String>,
        beta: f64,
        se: f64,
        hr: f64,
        ci_low: f64,
        ci_high: f64,
        loglik: f64,
        iterations: usize,
    },
    Failed {
        error: String,
    },
}

impl From<&HrResult> for HrJson {
    fn from(r: &HrResult) -> Self {
        match r {
            Ok(e) => HrJson::Estimate {
                covariates: e.covariates.clone(),
                beta: e.beta,
                se: e.se,
                hr: e.hr,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                loglik: e.loglik,
                iterations: e.iterations,
            },
            Err(error) => HrJson::Failed { error: error.clone() },
        }
    }
}

pub fn ties_name(ties: Ties) -> &'static str {
    match ties {
        Ties::Efron => "efron",
        Ties::Breslow => "breslow",
    }
}

impl ReportJson {
    pub fn new(analysis: &Analysis, treatment: &str, outcome: &str, alpha: f64) -> Self {
        let r = &analysis.report;
        ReportJson {
            schema: SCHEMA_VERSION,
            treatment: treatment.to_string(),
            outcome: outcome.to_string(),
            n: r.n,
            t_max: r.t_max,
            arm_sizes: ArmSizes { control: r.arm_sizes[0], treated: r.arm_sizes[1] },
            adjustment_set: r.adjustment_set.clone(),
            minimal_backdoor_sets: r.minimal_sets.clone(),
            ties: ties_name(r.ties),
            alpha,
            hazard_ratios: HazardRatios {
                crude: (&r.crude).into(),
                traditional: (&r.traditional).into(),
                adjusted: (&r.adjusted).into(),
            },
            reconstruction_max_error: ArmErrors {
                control: r.reconstruction_max_error[0],
                treated: r.reconstruction_max_error[1],
            },
            warnings: r.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// One row per change day, arm and variant. `count` is the (possibly
/// fractional) expected number alive in the arm.
pub fn write_curves_csv<W: Write>(sink: W, unadjusted: &AdjustedCurve, adjusted: &AdjustedCurve) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["variant", "arm", "day", "survival", "count"])?;
    for (variant, curve) in [("unadjusted", unadjusted), ("adjusted", adjusted)] {
        for arm in Arm::BOTH {
            let a = arm.index();
            for (k, day) in curve.days.iter().enumerate() {
                w.write_record([
                    variant.to_string(),
                    arm.to_string(),
                    day.to_string(),
                    curve.survival[a][k].to_string(),
                    curve.counts[a][k].to_string(),
                ])?;
            }
        }
    }
    w.flush()
}
