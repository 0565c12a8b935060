//! Human-diffable result files: time-series CSV (one row per recorded time),
//! normal-mode tables, and an optional matplotlib script for figure
//! reproduction. Floats are written in Rust's shortest round-trip form, so a
//! read-back reproduces the numbers bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::ensemble::EnsembleResult;
use crate::error::{Error, Result};
use crate::phonons::NormalModeBasis;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn timeseries_csv(result: &EnsembleResult) -> String {
    let mut out = String::new();
    out.push_str("time_fs, mean_polarization_eA, stderr_eA");
    for lvl in &result.watched_levels {
        let _ = write!(out, ", pop_{lvl}");
    }
    out.push('\n');
    for k in 0..result.times_fs.len() {
        let _ = write!(
            out,
            "{}, {}, {}",
            result.times_fs[k], result.mean_polarization[k], result.stderr_polarization[k]
        );
        for series in &result.mean_populations {
            let _ = write!(out, ", {}", series[k]);
        }
        out.push('\n');
    }
    out
}

pub fn write_timeseries_csv(path: &Path, result: &EnsembleResult) -> Result<()> {
    std::fs::write(path, timeseries_csv(result)).map_err(io_err(path))
}

/// Reads a time-series CSV back into an `EnsembleResult`. Only the columns
/// are recoverable; ensemble bookkeeping (seed, trajectory counts) is not
/// stored in the CSV and comes back zeroed.
pub fn read_timeseries_csv(path: &Path) -> Result<EnsembleResult> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_timeseries_csv(&text)
}

pub fn parse_timeseries_csv(text: &str) -> Result<EnsembleResult> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "time_fs" || cols[1] != "mean_polarization_eA" || cols[2] != "stderr_eA"
    {
        return Err(Error::InvalidInput(format!(
            "unrecognized CSV header: {header}"
        )));
    }
    let mut watched_levels = Vec::new();
    for col in &cols[3..] {
        let lvl = col
            .strip_prefix("pop_")
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::InvalidInput(format!("unrecognized CSV column: {col}")))?;
        watched_levels.push(lvl);
    }
    let mut times = Vec::new();
    let mut mean = Vec::new();
    let mut stderr = Vec::new();
    let mut pops = vec![Vec::new(); watched_levels.len()];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("CSV line {}: {e}", lineno + 2)))?;
        if fields.len() != cols.len() {
            return Err(Error::InvalidInput(format!(
                "CSV line {}: expected {} fields, got {}",
                lineno + 2,
                cols.len(),
                fields.len()
            )));
        }
        times.push(fields[0]);
        mean.push(fields[1]);
        stderr.push(fields[2]);
        for (w, pop) in pops.iter_mut().enumerate() {
            pop.push(fields[3 + w]);
        }
    }
    Ok(EnsembleResult {
        times_fs: times,
        mean_polarization: mean,
        stderr_polarization: stderr,
        watched_levels,
        mean_populations: pops,
        trajectories_completed: 0,
        trajectories_requested: 0,
        master_seed: 0,
    })
}

/// Mode table: index, frequency (fs^-1), quantum energy (eV), and
/// participation number (how many interior sites the eigenvector spans).
pub fn modes_csv(modes: &NormalModeBasis, hbar: f64) -> String {
    let mut out = String::from("j, omega_fs_inv, omega_eV, participation\n");
    for (j, &omega) in modes.frequencies.iter().enumerate() {
        let col = modes.modes.column(j);
        let p4: f64 = col.iter().map(|e| e.powi(4)).sum();
        let _ = writeln!(out, "{}, {}, {}, {}", j + 1, omega, hbar * omega, 1.0 / p4);
    }
    out
}

pub fn write_modes_csv(path: &Path, modes: &NormalModeBasis, hbar: f64) -> Result<()> {
    std::fs::write(path, modes_csv(modes, hbar)).map_err(io_err(path))
}

/// Relaxed-geometry table: site, displacement, and the bond-length change to
/// the next site.
pub fn geometry_csv(u0: &[f64]) -> String {
    let mut out = String::from("site, u_A, bond_delta_A\n");
    for (i, &u) in u0.iter().enumerate() {
        if i + 1 < u0.len() {
            let _ = writeln!(out, "{}, {}, {}", i + 1, u, u0[i + 1] - u);
        } else {
            let _ = writeln!(out, "{}, {}, ", i + 1, u);
        }
    }
    out
}

/// Python script that reads the CSV next to it and reproduces the standard
/// figure: mean polarization with its stderr band, plus any recorded level
/// populations in a second panel.
pub fn plot_script(csv_path: &Path) -> String {
    let csv_name = csv_path
        .file_name()
        .map_or_else(|| "ensemble.csv".into(), |n| n.to_string_lossy().into_owned());
    format!(
        r#"#!/usr/bin/env python3
"""Reproduce the polarization-decay figure from {csv_name}."""
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{csv_name}")) as fh:
    rows = list(csv.reader(fh))
header = [c.strip() for c in rows[0]]
data = {{name: [float(r[i]) for r in rows[1:]] for i, name in enumerate(header)}}

t = data["time_fs"]
mu = data["mean_polarization_eA"]
err = data["stderr_eA"]
pop_cols = [c for c in header if c.startswith("pop_")]

fig, axes = plt.subplots(
    2 if pop_cols else 1, 1, figsize=(7, 6 if pop_cols else 3.5), sharex=True, squeeze=False
)
ax = axes[0][0]
ax.plot(t, mu, lw=0.8, color="C0")
ax.fill_between(
    t, [m - e for m, e in zip(mu, err)], [m + e for m, e in zip(mu, err)],
    color="C0", alpha=0.3, lw=0,
)
ax.set_ylabel("mean polarization (e*A)")
ax.axhline(0.0, color="k", lw=0.5)
if pop_cols:
    ax2 = axes[1][0]
    for c in pop_cols:
        ax2.plot(t, data[c], lw=1.0, label=c.replace("pop_", "level "))
    ax2.set_ylabel("level population")
    ax2.legend(loc="best", fontsize=8)
    ax2.set_xlabel("time (fs)")
else:
    ax.set_xlabel("time (fs)")
out = os.path.join(here, "{stem}.png")
fig.tight_layout()
fig.savefig(out, dpi=160)
print(out)
"#,
        csv_name = csv_name,
        stem = csv_path
            .file_stem()
            .map_or_else(|| "ensemble".into(), |n| n.to_string_lossy().into_owned()),
    )
}

/// Writes the plot script alongside the CSV and returns its path.
pub fn emit_plot_script(csv_path: &Path) -> Result<PathBuf> {
    let script_path = csv_path.with_extension("plot.py");
    std::fs::write(&script_path, plot_script(csv_path)).map_err(io_err(&script_path))?;
    Ok(script_path)
}
