//! CSV and JSON output for runs and sweeps.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::{ComparisonRow, EpisodeRecord, RunSummary, SlotRecord, TraceSink};

pub const SLOTS_FILE: &str = "slots.csv";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const COMPARISON_FILE: &str = "comparison.csv";

fn csv_err(e: csv::Error) -> Error {
    Error::Trace(e.to_string())
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Streams slot and episode rows to `slots.csv` and `episodes.csv`.
/// Rows are flushed when the writer is finished or dropped.
pub struct CsvTraceWriter {
    slots: csv::Writer<File>,
    episodes: csv::Writer<File>,
}

impl CsvTraceWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            slots: writer(&dir.join(SLOTS_FILE))?,
            episodes: writer(&dir.join(EPISODES_FILE))?,
        })
    }

    pub fn finish(mut self) -> Result<()> {
        self.slots
            .flush()
            .map_err(|e| Error::Trace(e.to_string()))?;
        self.episodes
            .flush()
            .map_err(|e| Error::Trace(e.to_string()))
    }
}

impl TraceSink for CsvTraceWriter {
    fn slot(&mut self, rec: &SlotRecord) -> Result<()> {
        self.slots.serialize(rec).map_err(csv_err)
    }

    fn episode(&mut self, rec: &EpisodeRecord) -> Result<()> {
        self.episodes.serialize(rec).map_err(csv_err)
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_slots(path: &Path) -> Result<Vec<SlotRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}

pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Trace(e.to_string()))?;
    text.push('\n');
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    summary_from_json(&text).map_err(|e| Error::Trace(format!("{}: {e}", path.display())))
}

/// Accepts either a bare summary or an object with a `summary` field.
fn summary_from_json(text: &str) -> std::result::Result<RunSummary, serde_json::Error> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    match v.get("summary") {
        Some(inner) => serde_json::from_value(inner.clone()),
        None => serde_json::from_value(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::profile::ModelProfile;
    use crate::sim;

    #[test]
    fn slots_round_trip_through_csv() {
        let mut cfg = ExperimentConfig::default().to_run_config().unwrap();
        cfg.episodes = 2;
        cfg.population.count = 6;
        let dir = tempfile::tempdir().unwrap();
        let mut w = CsvTraceWriter::create(dir.path()).unwrap();
        let summary = sim::run_with_sink(&cfg, &ModelProfile::bundled_lenet(), &mut w).unwrap();
        w.finish().unwrap();
        let back = read_slots(&dir.path().join(SLOTS_FILE)).unwrap();
        let mem = sim::run(&cfg, &ModelProfile::bundled_lenet()).unwrap();
        assert_eq!(back, mem.slots);

        let p = dir.path().join(SUMMARY_FILE);
        write_json(&p, &summary).unwrap();
        assert_eq!(read_summary(&p).unwrap(), summary);
        write_json(&p, &serde_json::json!({ "summary": summary })).unwrap();
        assert_eq!(read_summary(&p).unwrap(), summary);

        let header = std::fs::read_to_string(dir.path().join(SLOTS_FILE)).unwrap();
        assert!(header.starts_with("t,n,m,split,share,d_dev_comp,"));
    }
}
