//! Run directories: atomic file writes, NDJSON logs, CSV tables, reloading.
//!
//! Layout of a run directory:
//! `summary.json`, `timing.json`, `trajectories.ndjson`, `events.ndjson`
//! (unless disabled), `histograms/<name>.csv`, `maps/<name>.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::record::{EventRecord, TrajectoryOutput, TrajectoryRecord};
use crate::summary::Summary;

pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMING_FILE: &str = "timing.json";
pub const TRAJECTORIES_FILE: &str = "trajectories.ndjson";
pub const EVENTS_FILE: &str = "events.ndjson";

/// Writes `path` through a temporary file in the same directory and a rename.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w).map_err(|e| CliError::io(path, e))?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn summary_json(summary: &Summary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    write_atomic(path, |w| writeln!(w, "{text}"))
}

fn write_ndjson<'a, T: Serialize + 'a>(path: &Path, rows: impl Iterator<Item = &'a T>) -> Result<()> {
    write_atomic(path, |w| {
        for r in rows {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

fn read_ndjson<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| CliError::format(path, format!("line {}: {e}", k + 1)))?;
        out.push(row);
    }
    Ok(out)
}

/// File name for an observable; `/` becomes `.`.
pub fn table_name(name: &str) -> String {
    format!("{}.csv", name.replace('/', "."))
}

pub fn histogram_csv(block: &crate::summary::HistogramBlock) -> String {
    let mut s = String::from("bin_lo,bin_hi,count,density\n");
    for (lo, hi, c, d) in block.histogram.rows() {
        let _ = writeln!(s, "{lo},{hi},{c},{d}");
    }
    s
}

pub fn map_csv(block: &crate::summary::DensityBlock) -> String {
    let mut s = String::from("x_lo,x_hi,y_lo,y_hi,count,value\n");
    let (xe, ye) = (block.map.x_edges(), block.map.y_edges());
    for (ix, col) in block.map.counts().iter().enumerate() {
        for (iy, c) in col.iter().enumerate() {
            let v = block.normalized[ix][iy];
            let _ = writeln!(s, "{},{},{},{},{c},{v}", xe[ix], xe[ix + 1], ye[iy], ye[iy + 1]);
        }
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
    pub trajectories: usize,
    pub trajectories_per_second: f64,
}

/// Writes every file of a run directory.
pub fn write_run_dir(dir: &Path, summary: &Summary, outputs: &[TrajectoryOutput], timing: Option<&Timing>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut sorted: Vec<&TrajectoryOutput> = outputs.iter().collect();
    sorted.sort_by_key(|o| (o.record.seed, o.record.traj));
    write_ndjson(&dir.join(TRAJECTORIES_FILE), sorted.iter().map(|o| &o.record))?;
    if summary.config.write_events {
        write_ndjson(&dir.join(EVENTS_FILE), sorted.iter().flat_map(|o| o.events.iter()))?;
    }
    for (name, block) in &summary.histograms {
        let text = histogram_csv(block);
        write_atomic(&dir.join("histograms").join(table_name(name)), |w| w.write_all(text.as_bytes()))?;
    }
    for (name, block) in &summary.density_maps {
        let text = map_csv(block);
        write_atomic(&dir.join("maps").join(table_name(name)), |w| w.write_all(text.as_bytes()))?;
    }
    if let Some(t) = timing {
        write_json(&dir.join(TIMING_FILE), t)?;
    }
    // summary last: its presence marks a complete directory
    let text = summary_json(summary);
    write_atomic(&dir.join(SUMMARY_FILE), |w| w.write_all(text.as_bytes()))
}

/// Directory of a run given either the directory or its summary file.
pub fn run_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    }
}

pub fn read_summary(path: &Path) -> Result<serde_json::Value> {
    let file = if path.is_dir() { path.join(SUMMARY_FILE) } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(&file, e))
}

/// Configuration and trajectory outputs of a stored run.
pub fn load_run(path: &Path) -> Result<(RunConfig, Vec<TrajectoryOutput>)> {
    let dir = run_dir(path);
    let summary = read_summary(&dir)?;
    let config: RunConfig = serde_json::from_value(summary["config"].clone())
        .map_err(|e| CliError::format(&dir.join(SUMMARY_FILE), format!("config: {e}")))?;
    if !config.write_events {
        return Err(CliError::Incompatible(format!(
            "{} was run without an event log and cannot be merged",
            dir.display()
        )));
    }
    let records: Vec<TrajectoryRecord> = read_ndjson(&dir.join(TRAJECTORIES_FILE))?;
    let events: Vec<EventRecord> = read_ndjson(&dir.join(EVENTS_FILE))?;
    let mut by_key: BTreeMap<(u64, u64), Vec<EventRecord>> = BTreeMap::new();
    for e in events {
        by_key.entry((e.seed, e.traj)).or_default().push(e);
    }
    let outputs = records
        .into_iter()
        .map(|record| TrajectoryOutput {
            events: by_key.remove(&(record.seed, record.traj)).unwrap_or_default(),
            record,
        })
        .collect();
    if let Some(((seed, traj), _)) = by_key.into_iter().next() {
        return Err(CliError::format(
            &dir.join(EVENTS_FILE),
            format!("events for unknown trajectory {traj} (seed {seed})"),
        ));
    }
    Ok((config, outputs))
}
