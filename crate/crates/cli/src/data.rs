//! Cohort CSV reading and writing.
//!
//! Input is comma-separated UTF-8 with a mandatory header row and RFC 4180
//! quoting. Treatment and event cells must be the literals `0` or `1`;
//! survival times must be whole, non-negative numbers of days. Row numbers
//! in errors are 1-based line numbers of the file (the header is line 1).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use hazcause_core::{Arm, CohortDataset, CohortError, SubjectRecord};

/// Which CSV columns hold what.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    /// Subject identifier; rows are numbered from 1 when absent.
    pub id: Option<String>,
    pub treatment: String,
    pub time: String,
    pub event: String,
    pub covariates: Vec<String>,
}

impl ColumnMap {
    pub fn new(treatment: &str, time: &str, event: &str) -> Self {
        ColumnMap {
            id: None,
            treatment: treatment.to_string(),
            time: time.to_string(),
            event: event.to_string(),
            covariates: Vec::new(),
        }
    }

    pub fn with_covariates<S: AsRef<str>>(mut self, covariates: &[S]) -> Self {
        self.covariates = covariates.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = Some(id.to_string());
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: malformed CSV: {message}")]
    Csv { line: u64, message: String },
    #[error("CSV input has no header row")]
    NoHeader,
    #[error(transparent)]
    Cohort(#[from] CohortError),
}

impl LoadError {
    fn from_csv(err: csv::Error) -> LoadError {
        let line = err.position().map_or(0, |p| p.line());
        match err.into_kind() {
            csv::ErrorKind::Io(e) => LoadError::Io { path: "<input>".into(), source: e },
            csv::ErrorKind::UnequalLengths { expected_len, len, pos } => {
                LoadError::Cohort(CohortError::RaggedRow {
                    row: pos.map_or(line, |p| p.line()) as usize,
                    expected: expected_len as usize,
                    found: len as usize,
                })
            }
            kind => LoadError::Csv { line, message: format!("{kind:?}") },
        }
    }
}

fn open(path: &Path) -> Result<File, LoadError> {
    File::open(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })
}

/// Column names of a CSV source, in file order.
pub fn read_header<R: Read>(source: R) -> Result<Vec<String>, LoadError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let header = reader.headers().map_err(LoadError::from_csv)?;
    if header.is_empty() {
        return Err(LoadError::NoHeader);
    }
    Ok(header.iter().map(str::to_string).collect())
}

pub fn read_header_file(path: &Path) -> Result<Vec<String>, LoadError> {
    read_header(open(path)?)
}

pub fn load_cohort<R: Read>(source: R, columns: &ColumnMap) -> Result<CohortDataset, LoadError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(source);
    let header = reader.headers().map_err(LoadError::from_csv)?.clone();
    if header.is_empty() {
        return Err(LoadError::NoHeader);
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LoadError::Cohort(CohortError::MissingColumn(name.to_string())))
    };
    let id_col = columns.id.as_deref().map(find).transpose()?;
    let treat_col = find(&columns.treatment)?;
    let time_col = find(&columns.time)?;
    let event_col = find(&columns.event)?;
    let cov_cols = columns.covariates.iter().map(|c| Ok((c.clone(), find(c)?))).collect::<Result<Vec<_>, LoadError>>()?;

    let mut subjects = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(LoadError::from_csv)?;
        let row = record.position().map_or(k as u64 + 2, |p| p.line()) as usize;
        let cell = |col: usize, name: &str| -> Result<&str, CohortError> {
            let v = record.get(col).unwrap_or("").trim();
            if v.is_empty() {
                Err(CohortError::EmptyCell { row, column: name.to_string() })
            } else {
                Ok(v)
            }
        };
        let treatment = match cell(treat_col, &columns.treatment)? {
            "0" => Arm::Control,
            "1" => Arm::Treated,
            v => return Err(CohortError::NonBinaryTreatment { row, value: v.to_string() }.into()),
        };
        let event = match cell(event_col, &columns.event)? {
            "0" => false,
            "1" => true,
            v => return Err(CohortError::NonBinaryEvent { row, value: v.to_string() }.into()),
        };
        let survival_time = parse_days(cell(time_col, &columns.time)?, row)?;
        let mut covariates = BTreeMap::new();
        for (name, col) in &cov_cols {
            covariates.insert(name.clone(), cell(*col, name)?.to_string());
        }
        let id = match id_col {
            Some(c) => cell(c, columns.id.as_deref().unwrap_or_default())?.to_string(),
            None => (k + 1).to_string(),
        };
        subjects.push(SubjectRecord { id, treatment, survival_time, event, covariates });
    }
    Ok(CohortDataset::new(subjects)?)
}

pub fn load_cohort_file(path: &Path, columns: &ColumnMap) -> Result<CohortDataset, LoadError> {
    load_cohort(open(path)?, columns)
}

fn parse_days(v: &str, row: usize) -> Result<u64, CohortError> {
    if let Ok(d) = v.parse::<u64>() {
        return Ok(d);
    }
    match v.parse::<f64>() {
        Ok(x) if x < 0.0 => Err(CohortError::NegativeTime { row, value: v.to_string() }),
        Ok(x) if x.is_finite() && x.fract() == 0.0 && x < u64::MAX as f64 => Ok(x as u64),
        _ => Err(CohortError::NonIntegerTime { row, value: v.to_string() }),
    }
}

/// Writes `id,<treatment>,<time>,<event>,<covariates...>` with one row per
/// subject. Covariates come out in name order.
pub fn write_cohort<W: Write>(sink: W, cohort: &CohortDataset, columns: &ColumnMap) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let names: Vec<&str> = cohort.covariate_names().collect();
    let id_name = columns.id.as_deref().unwrap_or("id");
    let mut header = vec![id_name, &columns.treatment, &columns.time, &columns.event];
    header.extend(&names);
    writer.write_record(&header)?;
    for s in cohort.subjects() {
        let mut row = vec![
            s.id.clone(),
            s.treatment.to_string(),
            s.survival_time.to_string(),
            u8::from(s.event).to_string(),
        ];
        row.extend(names.iter().map(|n| s.covariates[*n].clone()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
