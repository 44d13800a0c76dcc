//! Direct estimator access on CSV input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use infofit::estimators::{
    entropy_knn, kl_knn, mi_ksg, mi_lnc, mi_mixed, Estimate, EstimatorConfig, LabeledSampleSet, SampleSet, Units,
};

use crate::{CliError, EstimateKind, MiMethod};

#[derive(Debug, Clone)]
pub struct EstimateRequest {
    pub input: PathBuf,
    pub kind: EstimateKind,
    pub reference: Option<PathBuf>,
    pub method: MiMethod,
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub estimator: &'static str,
    pub n: usize,
    pub estimate: Estimate,
}

impl EstimateReport {
    pub fn report(&self, bits: bool) -> String {
        let mut s = format!(
            "estimator={} n={}\nvalue_nats={:.6}\n",
            self.estimator, self.n, self.estimate.value_nats
        );
        if bits {
            let _ = writeln!(s, "value_bits={:.6}", self.estimate.value_in(Units::Bits));
        }
        if !self.estimate.flags.is_empty() {
            let flags: Vec<String> = self
                .estimate
                .flags
                .iter()
                .map(|f| serde_json::to_string(f).unwrap_or_default().trim_matches('"').to_string())
                .collect();
            let _ = writeln!(s, "flags={}", flags.join(","));
        }
        s
    }
}

/// A numeric table read from CSV, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<&[f64], CliError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| CliError::Input(format!("no column named '{name}'")))
    }

    fn columns_named(&self, names: &[String]) -> Result<Vec<&[f64]>, CliError> {
        names.iter().map(|n| self.column(n)).collect()
    }

    fn with_prefix(&self, prefix: char) -> Vec<String> {
        self.headers.iter().filter(|h| h.starts_with(prefix)).cloned().collect()
    }
}

/// Read a headed CSV of numbers; lines starting with `#` are skipped.
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => CliError::Runtime(format!("{}: {e}", path.display())),
            _ => CliError::Input(format!("{}: {e}", path.display())),
        })?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().any(String::is_empty) {
        return Err(CliError::Input(format!("{}: missing or empty header", path.display())));
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}: row {} column '{}': '{field}' is not a number",
                    path.display(),
                    row + 1,
                    headers[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!("{}: row {} has a non-finite value", path.display(), row + 1)));
            }
            columns[j].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(Table { headers, columns })
}

fn sample_set(cols: &[&[f64]]) -> Result<SampleSet, CliError> {
    if cols.is_empty() {
        return Err(CliError::Input("no columns selected".into()));
    }
    SampleSet::from_columns(cols).map_err(|e| CliError::Input(e.to_string()))
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn run_estimate(req: &EstimateRequest, cfg: &EstimatorConfig) -> Result<EstimateReport, CliError> {
    let table = read_table(&req.input)?;
    let n = table.columns[0].len();
    let all: Vec<&[f64]> = table.columns.iter().map(Vec::as_slice).collect();
    let (estimator, estimate) = match req.kind {
        EstimateKind::Mi => {
            let xs = if req.x.is_empty() { table.with_prefix('x') } else { req.x.clone() };
            let ys = if req.y.is_empty() { table.with_prefix('y') } else { req.y.clone() };
            let x = sample_set(&table.columns_named(&xs)?)?;
            let y = sample_set(&table.columns_named(&ys)?)?;
            match req.method {
                MiMethod::Ksg => ("mi_ksg", mi_ksg(&x, &y, cfg).map_err(runtime)?),
                MiMethod::Lnc => ("mi_lnc", mi_lnc(&x, &y, cfg).map_err(runtime)?),
            }
        }
        EstimateKind::Mixed => {
            let labels = table.column(&req.label)?;
            let labels: Vec<i64> = labels
                .iter()
                .map(|&v| {
                    if v.fract() == 0.0 && v.abs() < 1e15 {
                        Ok(v as i64)
                    } else {
                        Err(CliError::Input(format!("label '{v}' is not an integer")))
                    }
                })
                .collect::<Result<_, _>>()?;
            let values: Vec<&[f64]> = table
                .headers
                .iter()
                .zip(&table.columns)
                .filter(|(h, _)| **h != req.label)
                .map(|(_, c)| c.as_slice())
                .collect();
            let s = LabeledSampleSet::new(sample_set(&values)?, labels).map_err(|e| CliError::Input(e.to_string()))?;
            ("mi_mixed", mi_mixed(&s, cfg).map_err(runtime)?)
        }
        EstimateKind::Kl => {
            let path = req
                .reference
                .as_ref()
                .ok_or_else(|| CliError::Config("--kind kl needs --reference".into()))?;
            let q = read_table(path)?;
            if q.columns.len() != table.columns.len() {
                return Err(CliError::Input("input and reference have different column counts".into()));
            }
            let qs: Vec<&[f64]> = q.columns.iter().map(Vec::as_slice).collect();
            ("kl_knn", kl_knn(&sample_set(&all)?, &sample_set(&qs)?, cfg).map_err(runtime)?)
        }
        EstimateKind::Entropy => ("entropy_knn", entropy_knn(&sample_set(&all)?, cfg).map_err(runtime)?),
    };
    Ok(EstimateReport { estimator, n, estimate })
}
