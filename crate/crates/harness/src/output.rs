//! CSV snapshots and ODE traces of a run.

use std::fs;
use std::path::{Path, PathBuf};

use adernet::config::NetworkConfig;

use crate::{run_recorded, simulation, Result, Sim, Trace};

/// Seventeen significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `ADERNET_OUT_DIR`, or `./out`.
pub fn out_dir() -> PathBuf {
    std::env::var_os("ADERNET_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Writes `x, h, q[, b]` of every live edge for the current time.
pub fn write_snapshot(sim: &Sim, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for (i, e) in sim.network.edges.iter().enumerate() {
        if sim.network.is_lumped(i) {
            continue;
        }
        let path = dir.join(format!("{}_t{}.csv", e.id, fmt_time(sim.time)));
        let mut w = csv::Writer::from_path(&path)?;
        let bottom = e.bottom.as_ref();
        if bottom.is_some() {
            w.write_record(["x", "h", "q", "b"])?;
        } else {
            w.write_record(["x", "h", "q"])?;
        }
        let dx = e.dx();
        for c in 0..e.cells {
            let mut rec = vec![
                fmt_num(e.cell_center(c)),
                fmt_num(e.u[0][c]),
                fmt_num(e.u[1][c]),
            ];
            if let Some(b) = bottom {
                rec.push(fmt_num(b.average(
                    dx * c as f64,
                    dx * (c + 1) as f64,
                    adernet::config::AVERAGING_POINTS,
                )));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

fn fmt_time(t: f64) -> String {
    format!("{t:.6}")
}

/// One file per vertex with an ODE (`t, w0, w1, ...`), plus `lumped.csv` with
/// the averaged states of lumped edges.
pub fn write_trace(sim: &Sim, trace: &Trace, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    let mut col = 0;
    for v in &sim.network.vertices {
        if !v.w.is_empty() {
            groups.push((v.id.clone(), (col..col + v.w.len()).collect()));
        }
        col += v.w.len();
    }
    if col < trace.labels.len() {
        groups.push(("lumped".into(), (col..trace.labels.len()).collect()));
    }
    let mut files = Vec::new();
    for (name, cols) in groups {
        let path = dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["t".to_string()];
        header.extend(cols.iter().map(|c| trace.labels[*c].clone()));
        w.write_record(&header)?;
        for (t, vals) in trace.times.iter().zip(&trace.values) {
            let mut rec = vec![fmt_num(*t)];
            rec.extend(cols.iter().map(|c| fmt_num(vals[*c])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

/// Runs a configuration and writes snapshots at the configured times and at
/// `t_end`, plus the ODE traces. Returns the written files.
pub fn run(config: &NetworkConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    config
        .validate()
        .map_err(|e| crate::HarnessError::Config(e.to_string()))?;
    fs::create_dir_all(dir)?;
    let mut sim = simulation(config)?;
    let mut files = Vec::new();
    let trace = run_recorded(&mut sim, config.run.t_end, &config.run.outputs, |s| {
        files.extend(write_snapshot(s, dir)?);
        Ok(())
    })?;
    files.extend(write_trace(&sim, &trace, dir)?);
    Ok(files)
}
