//! The run directory: resolved configuration, sweep records and report.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anderson_core::model::PhysicsConfig;
use anderson_core::scaling::SweepRecord;

use crate::config::{parse_config, render_config};
use crate::CliError;

pub const CONFIG_FILE: &str = "config.toml";
pub const RECORDS_FILE: &str = "records.csv";
pub const REPORT_FILE: &str = "report.json";

/// Fixed column order of the records file.
pub const COLUMNS: [&str; 11] = [
    "run_id",
    "E",
    "L",
    "N",
    "log_abs_overlap",
    "I",
    "F",
    "xi",
    "hadamard_ok",
    "degenerate_at_E",
    "wall_ms",
];

#[derive(Debug, Clone)]
pub struct RunStore {
    dir: PathBuf,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl RunStore {
    /// Open a run directory, creating it if needed.
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(RunStore { dir: dir.to_path_buf() })
    }

    /// Open an existing run directory.
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("{} is not a run directory", dir.display())));
        }
        Ok(RunStore { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_config(&self, cfg: &PhysicsConfig) -> Result<(), CliError> {
        let path = self.path(CONFIG_FILE);
        fs::write(&path, render_config(cfg)?).map_err(|e| io_err(&path, e))
    }

    pub fn read_config(&self) -> Result<Option<PhysicsConfig>, CliError> {
        let path = self.path(CONFIG_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => parse_config(&text).map(Some),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path, e)),
        }
    }

    pub fn write_records(&self, records: &[SweepRecord]) -> Result<(), CliError> {
        let path = self.path(RECORDS_FILE);
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_records(file, records).map_err(|e| io_err(&path, e))
    }

    /// Records held by the run, empty if there are none yet.
    pub fn read_records(&self) -> Result<Vec<SweepRecord>, CliError> {
        let path = self.path(RECORDS_FILE);
        match fs::File::open(&path) {
            Ok(file) => read_records(file).map_err(|e| io_err(&path, e)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(io_err(&path, e)),
        }
    }

    pub fn write_report(&self, report: &impl serde::Serialize) -> Result<(), CliError> {
        let path = self.path(REPORT_FILE);
        let text = serde_json::to_string_pretty(report).map_err(|e| io_err(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
    }
}

/// Rust's float formatting is locale independent, prints the shortest string
/// that reads back to the same value and spells `-∞` as `-inf`.
fn float(x: f64) -> String {
    format!("{x}")
}

pub fn write_records<W: io::Write>(out: W, records: &[SweepRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record([
            r.run_id.clone(),
            float(r.energy),
            float(r.length),
            r.particles.to_string(),
            float(r.log_abs_overlap),
            float(r.anderson_integral),
            float(r.fixed_energy_integral),
            r.xi.to_string(),
            r.hadamard_ok.to_string(),
            r.degenerate_at_e.to_string(),
            float(r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize, line: usize) -> Result<T, csv::Error> {
    let raw = row.get(idx).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        csv::Error::from(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("line {line}: cannot parse column {} from {raw:?}", COLUMNS[idx]),
        ))
    })
}

pub fn read_records<R: io::Read>(input: R) -> Result<Vec<SweepRecord>, csv::Error> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(csv::Error::from(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unexpected header {header:?}"),
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        out.push(SweepRecord {
            run_id: row.get(0).unwrap_or("").to_string(),
            energy: field(&row, 1, line)?,
            length: field(&row, 2, line)?,
            particles: field(&row, 3, line)?,
            log_abs_overlap: field(&row, 4, line)?,
            anderson_integral: field(&row, 5, line)?,
            fixed_energy_integral: field(&row, 6, line)?,
            xi: field(&row, 7, line)?,
            hadamard_ok: field(&row, 8, line)?,
            degenerate_at_e: field(&row, 9, line)?,
            wall_ms: field(&row, 10, line)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(log_s: f64) -> SweepRecord {
        SweepRecord {
            run_id: "r1".into(),
            energy: 2.0,
            length: 100.0,
            particles: 45,
            log_abs_overlap: log_s,
            anderson_integral: 0.1234567890123,
            fixed_energy_integral: 1.1,
            xi: 1,
            hadamard_ok: true,
            degenerate_at_e: false,
            wall_ms: 12.5,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let recs = vec![record(-0.061_728_394_506_15), record(f64::NEG_INFINITY)];
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        assert!(text.contains(",-inf,"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_records(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let text = "E,L\n2,100\n";
        assert!(read_records(text.as_bytes()).is_err());
    }

    #[test]
    fn missing_records_read_as_empty() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::create(dir.path()).unwrap();
        assert!(store.read_records().unwrap().is_empty());
        assert!(store.read_config().unwrap().is_none());
    }
}
