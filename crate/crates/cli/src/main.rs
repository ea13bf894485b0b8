use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hazcause::commands::{
    parse_adjustment, parse_ties, run_analyze, run_backdoor, run_simulate, split_list, AnalyzeOptions, CliError,
    EXIT_NOT_IDENTIFIABLE,
};
use hazcause_core::SimConfig;

#[derive(Parser, Debug)]
#[command(name = "hazcause", version, about = "Backdoor-adjusted survival curves and hazard ratios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Crude, covariate-adjusted and backdoor-adjusted hazard ratios for a cohort
    Analyze {
        /// Cohort CSV
        #[arg(long)]
        data: PathBuf,
        /// Causal graph JSON
        #[arg(long)]
        graph: PathBuf,
        /// Treatment column (0/1); also its graph node
        #[arg(long)]
        treatment: String,
        /// Survival time column, whole days
        #[arg(long)]
        time: String,
        /// Event column (1 = event, 0 = censored)
        #[arg(long)]
        event: String,
        /// Outcome node in the graph [default: the time column name]
        #[arg(long)]
        outcome: Option<String>,
        /// Comma-separated covariate columns [default: observed graph nodes found in the CSV]
        #[arg(long)]
        covariates: Option<String>,
        /// `auto` or a comma-separated adjustment set
        #[arg(long, default_value = "auto")]
        adjustment_set: String,
        /// Tie handling in the Cox model: efron or breslow
        #[arg(long, default_value = "efron")]
        ties: String,
        /// Confidence intervals cover 1 - alpha
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// End the study at this day
        #[arg(long)]
        t_max: Option<u64>,
        /// Drop subjects censored before the last day
        #[arg(long)]
        strict_censoring: bool,
        /// Add 0.5 pseudo-subjects to every stratum's alive and dead counts
        #[arg(long)]
        laplace: bool,
        /// Also write curves.svg
        #[arg(long)]
        svg: bool,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// List minimal backdoor adjustment sets
    Backdoor {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        treatment: String,
        #[arg(long)]
        outcome: String,
    },
    /// Generate a synthetic confounded cohort
    Simulate {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// P(X=1|Z=0); P(X=1|Z=1) is 1 - bias
        #[arg(long, default_value_t = 0.75)]
        bias: f64,
        /// Output CSV [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Analyze {
            data,
            graph,
            treatment,
            time,
            event,
            outcome,
            covariates,
            adjustment_set,
            ties,
            alpha,
            t_max,
            strict_censoring,
            laplace,
            svg,
            out,
        } => {
            let opts = AnalyzeOptions {
                outcome,
                covariates: covariates.as_deref().map(split_list),
                adjustment: parse_adjustment(&adjustment_set),
                ties: parse_ties(&ties)?,
                alpha,
                t_max,
                strict_censoring,
                laplace,
                svg,
                ..AnalyzeOptions::new(&data, &graph, &treatment, &time, &event, &out)
            };
            let output = run_analyze(&opts)?;
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            for w in &output.report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(0)
        }
        Command::Backdoor { graph, treatment, outcome } => {
            let (listing, identifiable) = run_backdoor(&graph, &treatment, &outcome)?;
            print!("{listing}");
            Ok(if identifiable { 0 } else { EXIT_NOT_IDENTIFIABLE })
        }
        Command::Simulate { n, seed, bias, out } => {
            let config = SimConfig { n, seed, ..SimConfig::default() }.with_bias(bias);
            match &out {
                Some(path) => {
                    let file = File::create(path)
                        .map_err(|source| CliError::Write { path: path.display().to_string(), source })?;
                    print!("{}", run_simulate(&config, BufWriter::new(file))?);
                }
                None => eprint!("{}", run_simulate(&config, io::stdout().lock())?),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let _ = io::stdout().flush();
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
