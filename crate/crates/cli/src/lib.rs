//! File formats and subcommands for the `hazcause` command-line tool.
//!
//! The statistics live in [`hazcause_core`]; this crate reads cohort CSV and
//! causal graph JSON, writes `report.json`, `curves.csv` and an optional SVG
//! plot, and maps failures to exit codes.

pub mod commands;
pub mod data;
pub mod graph_file;
pub mod report;
pub mod svg;

pub use commands::{run_analyze, run_backdoor, run_simulate, AnalyzeOptions, CliError};
pub use data::{load_cohort, load_cohort_file, write_cohort, ColumnMap, LoadError};
pub use graph_file::{load_graph, parse_graph, GraphFileError};
pub use report::{write_curves_csv, ReportJson};
pub use svg::{render_svg, Series, SvgError};
