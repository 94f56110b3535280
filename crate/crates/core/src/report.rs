//! CSV output for step reports and state snapshots.
//!
//! Floats are written with 17 significant digits so a file parses back to
//! the exact `f64` values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::{StepReport, Trajectory};

pub const REPORT_HEADER: &str =
    "t,mass,energy_half,dissipation_cum,entropy,h32_cum,min_u,max_u,newton_iters,flux_L1";

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn report_row(r: &StepReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        fmt_f64(r.t),
        fmt_f64(r.mass),
        fmt_f64(r.energy_half),
        fmt_f64(r.dissipation_cum),
        fmt_f64(r.entropy),
        fmt_f64(r.h32_cum),
        fmt_f64(r.min_u),
        fmt_f64(r.max_u),
        r.newton_iters,
        fmt_f64(r.flux_l1),
    )
}

/// Renders the step table: a header, then one row per accepted step. The
/// initial state is not a step and has no row.
pub fn render_reports(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(200 * (traj.reports.len() + 2));
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for r in &traj.reports {
        out.push_str(&report_row(r));
        out.push('\n');
    }
    out
}

/// Writes the step table (header plus one row per report) to `path`.
pub fn write_reports(traj: &Trajectory, path: &Path) -> Result<()> {
    write_text(path, &render_reports(traj))
}

/// Snapshot table: `t,c_0,…,c_{N−1}`, one row per stored state.
pub fn write_snapshots(traj: &Trajectory, path: &Path) -> Result<()> {
    let modes = traj.final_state.modes();
    let mut out = String::from("t");
    for k in 0..modes {
        out.push_str(&format!(",c_{k}"));
    }
    out.push('\n');
    for s in &traj.snapshots {
        out.push_str(&fmt_f64(s.t));
        for &c in s.state.coeffs() {
            out.push(',');
            out.push_str(&fmt_f64(c));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads a report table back. Columns follow [`REPORT_HEADER`]; halvings and
/// clamp flags are not stored and come back as zero/false.
pub fn read_reports(path: &Path) -> Result<Vec<StepReport>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .unwrap_or_default();
    if header.trim() != REPORT_HEADER {
        return Err(Error::Parse(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("{}:{}: malformed row", path.display(), i + 2));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(bad());
        }
        let f = |j: usize| cols[j].trim().parse::<f64>().map_err(|_| bad());
        rows.push(StepReport {
            t: f(0)?,
            mass: f(1)?,
            energy_half: f(2)?,
            dissipation_cum: f(3)?,
            entropy: f(4)?,
            h32_cum: f(5)?,
            min_u: f(6)?,
            max_u: f(7)?,
            newton_iters: cols[8].trim().parse().map_err(|_| bad())?,
            flux_l1: f(9)?,
            halvings: 0,
            clamped: false,
        });
    }
    Ok(rows)
}
