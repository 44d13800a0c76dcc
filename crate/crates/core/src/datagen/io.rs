//! On-disk dataset layout.
//!
//! ```text
//! <dir>/manifest.json               configs, seeds, generator version
//! <dir>/series_000.csv              task_index,t_end,A_end_true,outcome
//! <dir>/series_000_schedule.csv     phase_index,kind,duration
//! ```
//!
//! Every CSV starts with one `#` comment line. Floats are written in their
//! shortest round-trip form, so a dataset reloads bit-identically.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatagenError, Dataset, OutcomeModel, Result, ScheduleGenConfig, Series};
use crate::dynamics::{CogParams, IntegrationConfig, Phase, PhaseKind, TaskSchedule};
use crate::seed::SEED_SCHEME;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub generator: String,
    pub seed_scheme: String,
    pub master_seed: u64,
    pub gen_params: CogParams,
    pub schedule_config: ScheduleGenConfig,
    pub outcome_model: OutcomeModel,
    pub outcome_calibrated: bool,
    pub integration: IntegrationConfig,
    pub series: Vec<SeriesEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesEntry {
    pub index: usize,
    pub seed: u64,
    pub n_tasks: usize,
    pub file: String,
    pub schedule_file: String,
}

pub fn generator_version() -> String {
    format!("infofit {}", env!("CARGO_PKG_VERSION"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatagenError + '_ {
    move |source| DatagenError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> DatagenError {
    DatagenError::Format(format!("{}: {e}", path.display()))
}

/// Write `data` under `dir` (created if missing). `comment` becomes the first
/// line of every CSV, prefixed with `# `.
pub fn write_dataset(dir: &Path, data: &Dataset, comment: &str) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut entries = Vec::with_capacity(data.series.len());
    for (i, s) in data.series.iter().enumerate() {
        let file = format!("series_{i:03}.csv");
        let schedule_file = format!("series_{i:03}_schedule.csv");

        let mut out = format!("# {comment}\ntask_index,t_end,A_end_true,outcome\n");
        for (j, ((t, a), o)) in s.t_end.iter().zip(&s.a_end).zip(&s.outcomes).enumerate() {
            out.push_str(&format!("{j},{t},{a},{}\n", u8::from(*o)));
        }
        write_file(&dir.join(&file), &out)?;

        let mut out = format!("# {comment}\nphase_index,kind,duration\n");
        for (j, p) in s.schedule.phases().iter().enumerate() {
            let kind = match p.kind {
                PhaseKind::On => "on",
                PhaseKind::Off => "off",
            };
            out.push_str(&format!("{j},{kind},{}\n", p.duration));
        }
        write_file(&dir.join(&schedule_file), &out)?;

        entries.push(SeriesEntry {
            index: i,
            seed: s.seed,
            n_tasks: s.outcomes.len(),
            file,
            schedule_file,
        });
    }
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        generator: generator_version(),
        seed_scheme: SEED_SCHEME.to_string(),
        master_seed: data.master_seed,
        gen_params: data.gen_params,
        schedule_config: data.schedule_config,
        outcome_model: data.outcome_model,
        outcome_calibrated: data.outcome_calibrated,
        integration: data.integration,
        series: entries,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| DatagenError::Format(e.to_string()))?;
    write_file(&dir.join(MANIFEST_FILE), &(json + "\n"))?;
    Ok(manifest)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(contents.as_bytes()).map_err(io_err(path))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(f))
}

#[derive(Deserialize)]
struct TaskRow {
    task_index: usize,
    t_end: f64,
    #[serde(rename = "A_end_true")]
    a_end: f64,
    outcome: u8,
}

#[derive(Deserialize)]
struct PhaseRow {
    phase_index: usize,
    kind: PhaseKind,
    duration: f64,
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| DatagenError::Format(format!("{}: {e}", path.display())))?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(DatagenError::Format(format!(
            "unsupported manifest schema_version {}",
            manifest.schema_version
        )));
    }
    Ok(manifest)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_manifest(dir)?;
    let mut series = Vec::with_capacity(manifest.series.len());
    for entry in &manifest.series {
        let path = dir.join(&entry.schedule_file);
        let mut phases = Vec::new();
        for (i, row) in reader(&path)?.deserialize::<PhaseRow>().enumerate() {
            let row = row.map_err(|e| csv_err(&path, e))?;
            if row.phase_index != i {
                return Err(DatagenError::Format(format!("{}: phases out of order", path.display())));
            }
            phases.push(Phase {
                kind: row.kind,
                duration: row.duration,
            });
        }
        let schedule = TaskSchedule::new(phases)?;

        let path = dir.join(&entry.file);
        let (mut t_end, mut a_end, mut outcomes) = (Vec::new(), Vec::new(), Vec::new());
        for (i, row) in reader(&path)?.deserialize::<TaskRow>().enumerate() {
            let row = row.map_err(|e| csv_err(&path, e))?;
            if row.task_index != i || row.outcome > 1 {
                return Err(DatagenError::Format(format!("{}: bad row {i}", path.display())));
            }
            t_end.push(row.t_end);
            a_end.push(row.a_end);
            outcomes.push(row.outcome == 1);
        }
        if outcomes.len() != schedule.task_count() || outcomes.len() != entry.n_tasks {
            return Err(DatagenError::Format(format!(
                "{}: {} tasks, schedule has {}",
                path.display(),
                outcomes.len(),
                schedule.task_count()
            )));
        }
        series.push(Series {
            seed: entry.seed,
            schedule,
            t_end,
            a_end,
            outcomes,
        });
    }
    Ok(Dataset {
        series,
        gen_params: manifest.gen_params,
        outcome_model: manifest.outcome_model,
        outcome_calibrated: manifest.outcome_calibrated,
        schedule_config: manifest.schedule_config,
        integration: manifest.integration,
        master_seed: manifest.master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_dataset, OutcomeSpec};

    #[test]
    fn dataset_reloads_exactly() {
        let cfg = ScheduleGenConfig {
            n_tasks: 25,
            ..Default::default()
        };
        let data = generate_dataset(
            &CogParams::default(),
            &cfg,
            2,
            &OutcomeSpec::default(),
            4,
            &IntegrationConfig::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_dataset(dir.path(), &data, "test").unwrap();
        assert_eq!(manifest.series.len(), 2);
        assert_eq!(read_dataset(dir.path()).unwrap(), data);

        let first = fs::read_to_string(dir.path().join("series_000.csv")).unwrap();
        assert!(first.starts_with("# test\ntask_index,t_end,A_end_true,outcome\n0,"));
    }

    #[test]
    fn missing_manifest_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(DatagenError::Io { .. })));
    }
}
