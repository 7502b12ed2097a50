//! CSV and JSON emission.
//!
//! Estimate reports become one CSV row per sweep point with the columns of [`ESTIMATE_HEADER`];
//! the fitted slope, residual and verdict repeat on every row of a report. Floats are written
//! in scientific notation with 17 significant digits, so identical runs give identical bytes.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use dispersive_core::energy::EnergyRow;
use dispersive_core::EstimateReport;
use serde::Serialize;

pub const ESTIMATE_HEADER: [&str; 8] = ["estimate_id", "N", "lambda", "max_ratio", "mean_ratio", "slope", "residual", "verdict"];
pub const ENERGY_HEADER: [&str; 7] = ["t", "E0", "E1", "R4", "R6", "dE0_dt", "dE01_dt"];
pub const APRIORI_HEADER: [&str; 5] = ["sample", "t", "l2_norm", "energy", "hs_norm"];

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

pub fn write_estimates<W: Write>(w: W, reports: &[EstimateReport]) -> Result<()> {
    let mut out = writer(w, &ESTIMATE_HEADER)?;
    for r in reports {
        for p in &r.points {
            out.write_record([
                r.id.clone(),
                fmt(p.n),
                fmt(p.lambda),
                fmt(p.max_ratio),
                fmt(p.mean_ratio),
                fmt(r.slope),
                fmt(r.residual),
                r.verdict.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One parsed row of an estimates CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub id: String,
    pub n: f64,
    pub lambda: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub slope: f64,
    pub residual: f64,
    pub verdict: bool,
}

pub fn read_estimates<R: Read>(r: R) -> Result<Vec<EstimateRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    anyhow::ensure!(header == ESTIMATE_HEADER, "unexpected header {header:?}");
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> { rec[i].parse().with_context(|| format!("column {}", ESTIMATE_HEADER[i])) };
        rows.push(EstimateRow {
            id: rec[0].to_string(),
            n: num(1)?,
            lambda: num(2)?,
            max_ratio: num(3)?,
            mean_ratio: num(4)?,
            slope: num(5)?,
            residual: num(6)?,
            verdict: rec[7].parse().context("column verdict")?,
        });
    }
    Ok(rows)
}

/// `(id, verdict)` per report, in order of first appearance.
pub fn verdicts(rows: &[EstimateRow]) -> Vec<(String, bool)> {
    let mut out: Vec<(String, bool)> = Vec::new();
    for r in rows {
        if out.last().is_none_or(|(id, _)| *id != r.id) {
            out.push((r.id.clone(), r.verdict));
        }
    }
    out
}

pub fn write_energy<W: Write>(w: W, rows: &[EnergyRow]) -> Result<()> {
    let mut out = writer(w, &ENERGY_HEADER)?;
    for r in rows {
        out.write_record([r.t, r.e0, r.e1, r.r4, r.r6, r.de0, r.de01].map(fmt))?;
    }
    out.flush()?;
    Ok(())
}

/// `(sample, t, ‖u‖_{L²}, E(u), ‖u‖_{H^s})`
pub type AprioriRow = (usize, f64, f64, f64, f64);

pub fn write_apriori<W: Write>(w: W, rows: &[AprioriRow]) -> Result<()> {
    let mut out = writer(w, &APRIORI_HEADER)?;
    for &(i, t, l2, e, hs) in rows {
        out.write_record([i.to_string(), fmt(t), fmt(l2), fmt(e), fmt(hs)])?;
    }
    out.flush()?;
    Ok(())
}

/// A named pass/fail assertion of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub scenario: &'a str,
    pub config: &'a C,
    pub seed: u64,
    pub versions: Versions,
    pub wall_seconds: f64,
    pub threads: usize,
    pub checks: &'a [Check],
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub lab: &'static str,
    pub core: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Self { lab: env!("CARGO_PKG_VERSION"), core: dispersive_core::VERSION }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
