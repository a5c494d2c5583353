//! Parameter sweeps over one numeric config key, run on a worker pool.

use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::format_float;
use crate::run::{run_quench, RunOutput};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: [&str; 7] = ["axis", "value", "status", "cusp_count", "cusp_times", "uncertainty", "error"];

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "DQPT_WORKERS";

#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// The value as given on the command line; also names the output directory.
    pub label: String,
    pub value: f64,
    pub dir: PathBuf,
    pub outcome: std::result::Result<SweepSuccess, String>,
}

#[derive(Debug, Clone)]
pub struct SweepSuccess {
    /// Cusp times in units of T.
    pub cusp_times: Vec<f64>,
    pub uncertainty: f64,
}

impl From<&RunOutput> for SweepSuccess {
    fn from(r: &RunOutput) -> Self {
        SweepSuccess {
            cusp_times: r.cusps.iter().map(|c| c.time).collect(),
            uncertainty: r.cusps.first().map_or(0.0, |c| c.uncertainty),
        }
    }
}

/// Splits a comma-separated value list.
pub fn parse_values(list: &str) -> Result<Vec<(String, f64)>> {
    let values: Vec<(String, f64)> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map(|v| (s.to_string(), v)).map_err(|_| CliError::config("values", format!("`{s}` is not a number"))))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(CliError::config("values", "no values given"));
    }
    Ok(values)
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::config(WORKERS_ENV, format!("`{s}` is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn run_point(base: &ExperimentConfig, axis: &str, label: &str, value: f64, root: &Path) -> SweepPoint {
    let dir = root.join(format!("{axis}={label}"));
    let outcome = base
        .with_axis(axis, value)
        .and_then(|mut cfg| {
            cfg.output.path = dir.clone();
            let out = run_quench(&cfg)?;
            out.write(&dir, cfg.output.precision)?;
            Ok(SweepSuccess::from(&out))
        })
        .map_err(|e| e.to_string());
    SweepPoint { label: label.to_string(), value, dir, outcome }
}

/// Runs one quench per value. Failed points are reported, not fatal; the
/// summary is written to `out/summary.csv` once every point is done.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: &str,
    values: &[(String, f64)],
    out: &Path,
    workers: usize,
) -> Result<Vec<SweepPoint>> {
    base.validate()?;
    let current = base.to_json_value();
    let existing = axis.split('.').try_fold(&current, |v, part| v.get(part));
    match existing {
        Some(v) if v.is_number() || v.as_str() == Some("inf") => {}
        Some(_) => return Err(CliError::config(axis, "is not a numeric config key")),
        None => return Err(CliError::config(axis, "no such config key")),
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::io(format!("cannot create {}", out.display()), e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Run(format!("cannot start worker pool: {e}")))?;
    let points: Vec<SweepPoint> =
        pool.install(|| values.par_iter().map(|(label, v)| run_point(base, axis, label, *v, out)).collect());
    write_summary(&out.join(SUMMARY_FILE), axis, &points, base.output.precision)?;
    Ok(points)
}

pub fn write_summary(path: &Path, axis: &str, points: &[SweepPoint], digits: usize) -> Result<()> {
    let fail = |e: &dyn std::fmt::Display| CliError::Output { path: path.to_path_buf(), reason: e.to_string() };
    let file = File::create(path).map_err(|e| fail(&e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(SUMMARY_HEADER).map_err(|e| fail(&e))?;
    for p in points {
        let row = match &p.outcome {
            Ok(s) => [
                axis.to_string(),
                p.label.clone(),
                "ok".into(),
                s.cusp_times.len().to_string(),
                s.cusp_times.iter().map(|t| format_float(*t, digits)).collect::<Vec<_>>().join(";"),
                format_float(s.uncertainty, digits),
                String::new(),
            ],
            Err(e) => [
                axis.to_string(),
                p.label.clone(),
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ],
        };
        w.write_record(row).map_err(|e| fail(&e))?;
    }
    w.flush().map_err(|e| fail(&e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists() {
        let v = parse_values("0, 0.1018,0.2827 ,").unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[1], ("0.1018".to_string(), 0.1018));
        assert!(parse_values("1,x").is_err());
        assert!(parse_values(" , ").is_err());
    }
}
