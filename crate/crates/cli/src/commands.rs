//! The `analyze`, `backdoor` and `simulate` subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hazcause_core::cox::Z95;
use hazcause_core::pipeline::AnalysisError;
use hazcause_core::sim::{CONFOUNDER, EVENT, TIME, TREATMENT};
use hazcause_core::{
    analyze, generate_cohort, AdjustError, AdjustmentChoice, AnalysisSpec, Arm, CausalDag, SimConfig, SimError, Ties,
};
use serde_json::json;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{load_cohort_file, read_header_file, write_cohort, ColumnMap, LoadError};
use crate::graph_file::{load_graph, GraphFileError};
use crate::report::{write_curves_csv, ReportJson};
use crate::svg::{analysis_series, render_svg, SvgError};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NOT_IDENTIFIABLE: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] LoadError),
    #[error(transparent)]
    Graph(#[from] GraphFileError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Svg(#[from] SvgError),
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("adjusted hazard ratio unavailable: {0}")]
    AdjustedFitFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Graph(_) | CliError::Write { .. } => EXIT_DATA,
            CliError::Sim(SimError::InvalidConfig(_)) => EXIT_USAGE,
            CliError::Sim(SimError::Cohort(_)) => EXIT_DATA,
            CliError::Analysis(e) => match e {
                AnalysisError::NotIdentifiable { .. } | AnalysisError::InvalidAdjustmentSet { .. } => {
                    EXIT_NOT_IDENTIFIABLE
                }
                AnalysisError::Adjust(AdjustError::PositivityViolation { .. })
                | AnalysisError::Trial(_) => EXIT_NUMERICAL,
                _ => EXIT_DATA,
            },
            CliError::Svg(_) | CliError::AdjustedFitFailed(_) => EXIT_NUMERICAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Graph(_) => "graph",
            CliError::Analysis(AnalysisError::NotIdentifiable { .. }) => "not_identifiable",
            CliError::Analysis(AnalysisError::InvalidAdjustmentSet { .. }) => "invalid_adjustment_set",
            CliError::Analysis(_) => "analysis",
            CliError::Sim(_) => "simulation",
            CliError::Svg(_) => "plot",
            CliError::Write { .. } => "io",
            CliError::AdjustedFitFailed(_) => "numerical",
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() }).to_string()
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.display().to_string(), source })
}

/// Two-sided normal quantile for a `1 - alpha` interval.
pub fn z_for_alpha(alpha: f64) -> Result<f64, CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha {alpha} must lie strictly between 0 and 1")));
    }
    if (alpha - 0.05).abs() < 1e-12 {
        return Ok(Z95);
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// `auto` or a comma-separated list; an empty list means "adjust for nothing".
pub fn parse_adjustment(text: &str) -> AdjustmentChoice {
    if text.trim().eq_ignore_ascii_case("auto") {
        AdjustmentChoice::Auto
    } else {
        AdjustmentChoice::Explicit(split_list(text))
    }
}

pub fn split_list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

pub fn parse_ties(text: &str) -> Result<Ties, CliError> {
    match text.to_ascii_lowercase().as_str() {
        "efron" => Ok(Ties::Efron),
        "breslow" => Ok(Ties::Breslow),
        other => Err(CliError::Usage(format!("unknown tie method `{other}` (expected efron or breslow)"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub data: PathBuf,
    pub graph: PathBuf,
    pub treatment: String,
    pub time: String,
    pub event: String,
    /// Graph node of the outcome; the time column name when `None`.
    pub outcome: Option<String>,
    /// Covariate columns; observed graph nodes present in the CSV when `None`.
    pub covariates: Option<Vec<String>>,
    pub adjustment: AdjustmentChoice,
    pub ties: Ties,
    pub alpha: f64,
    pub t_max: Option<u64>,
    pub strict_censoring: bool,
    pub laplace: bool,
    pub svg: bool,
    pub out: PathBuf,
}

impl AnalyzeOptions {
    pub fn new(data: &Path, graph: &Path, treatment: &str, time: &str, event: &str, out: &Path) -> Self {
        AnalyzeOptions {
            data: data.to_path_buf(),
            graph: graph.to_path_buf(),
            treatment: treatment.to_string(),
            time: time.to_string(),
            event: event.to_string(),
            outcome: None,
            covariates: None,
            adjustment: AdjustmentChoice::Auto,
            ties: Ties::Efron,
            alpha: 0.05,
            t_max: None,
            strict_censoring: false,
            laplace: false,
            svg: false,
            out: out.to_path_buf(),
        }
    }
}

/// What `analyze` produced.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOutput {
    pub report: ReportJson,
    pub files: Vec<PathBuf>,
}

fn default_covariates(dag: &CausalDag, header: &[String], exclude: &[&str]) -> Vec<String> {
    dag.node_names()
        .filter(|n| dag.is_observed(n).unwrap_or(false))
        .filter(|n| !exclude.contains(n))
        .filter(|n| header.iter().any(|h| h == n))
        .map(str::to_string)
        .collect()
}

pub fn run_analyze(opts: &AnalyzeOptions) -> Result<AnalyzeOutput, CliError> {
    let z = z_for_alpha(opts.alpha)?;
    let dag = load_graph(&opts.graph)?;
    let outcome = opts.outcome.clone().unwrap_or_else(|| opts.time.clone());
    let covariates = match &opts.covariates {
        Some(c) => c.clone(),
        None => {
            let header = read_header_file(&opts.data)?;
            default_covariates(&dag, &header, &[&opts.treatment, &opts.time, &opts.event, &outcome])
        }
    };
    let columns = ColumnMap::new(&opts.treatment, &opts.time, &opts.event).with_covariates(&covariates);
    let cohort = load_cohort_file(&opts.data, &columns)?;

    let spec = AnalysisSpec {
        adjustment: opts.adjustment.clone(),
        ties: opts.ties,
        z,
        t_max: opts.t_max,
        strict_censoring: opts.strict_censoring,
        pseudocount: opts.laplace.then_some(0.5),
        ..AnalysisSpec::new(&opts.treatment, &outcome)
    };
    let analysis = analyze(&cohort, &dag, &spec)?;
    let report = ReportJson::new(&analysis, &opts.treatment, &outcome, opts.alpha);

    fs::create_dir_all(&opts.out)
        .map_err(|source| CliError::Write { path: opts.out.display().to_string(), source })?;
    let mut files = Vec::new();
    let report_path = opts.out.join("report.json");
    write_file(&report_path, report.to_json().as_bytes())?;
    files.push(report_path);

    let curves_path = opts.out.join("curves.csv");
    let mut curves = Vec::new();
    write_curves_csv(&mut curves, &analysis.crude_curve, &analysis.adjusted_curve)
        .map_err(|source| CliError::Write { path: curves_path.display().to_string(), source })?;
    write_file(&curves_path, &curves)?;
    files.push(curves_path);

    if opts.svg {
        let svg_path = opts.out.join("curves.svg");
        let svg = render_svg(&analysis_series(&analysis.crude_curve, &analysis.adjusted_curve))?;
        write_file(&svg_path, svg.as_bytes())?;
        files.push(svg_path);
    }
    if let Err(e) = &analysis.report.adjusted {
        return Err(CliError::AdjustedFitFailed(e.clone()));
    }
    Ok(AnalyzeOutput { report, files })
}

/// Minimal backdoor sets, one `{A, B}` per line, or the not-identifiable
/// marker. The boolean is false in the latter case.
pub fn run_backdoor(graph: &Path, treatment: &str, outcome: &str) -> Result<(String, bool), CliError> {
    let dag = load_graph(graph)?;
    let sets = dag.minimal_backdoor_sets(treatment, outcome).map_err(AnalysisError::from)?;
    if sets.is_empty() {
        return Ok(("NOT IDENTIFIABLE (backdoor)\n".to_string(), false));
    }
    let mut out = String::new();
    for s in sets {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    Ok((out, true))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub arm_sizes: [usize; 2],
    /// Empirical P(X=1 | Z=0) and P(X=1 | Z=1); NaN for an empty stratum.
    pub treated_given_z: [f64; 2],
    pub t_max: u64,
}

impl std::fmt::Display for SimulateSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "arm sizes: control {}, treated {}", self.arm_sizes[0], self.arm_sizes[1])?;
        writeln!(
            f,
            "empirical P(X=1|Z=0) = {:.3}, P(X=1|Z=1) = {:.3}",
            self.treated_given_z[0], self.treated_given_z[1]
        )?;
        writeln!(f, "t_max: {}", self.t_max)
    }
}

/// Generates a cohort and writes it as CSV with columns `id,X,T,S,Z`.
pub fn run_simulate<W: Write>(config: &SimConfig, sink: W) -> Result<SimulateSummary, CliError> {
    let cohort = generate_cohort(config)?;
    let columns = ColumnMap::new(TREATMENT, TIME, EVENT).with_covariates(&[CONFOUNDER]);
    write_cohort(sink, &cohort, &columns).map_err(|e| CliError::Write { path: "<output>".into(), source: e.into() })?;
    let (mut treated, mut total) = ([0usize; 2], [0usize; 2]);
    for s in cohort.subjects() {
        let z = usize::from(s.covariates[CONFOUNDER] == "1");
        total[z] += 1;
        treated[z] += usize::from(s.treatment == Arm::Treated);
    }
    Ok(SimulateSummary {
        arm_sizes: cohort.arm_sizes(),
        treated_given_z: [0, 1].map(|z| treated[z] as f64 / total[z] as f64),
        t_max: cohort.t_max(),
    })
}

