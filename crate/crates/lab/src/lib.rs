//! Config-driven experiment runner for `dispersive-core`.

// `!(x > 0.0)` is how parameter checks reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod criteria;
pub mod report;
pub mod scenarios;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};

use config::ExperimentConfig;
use report::{Manifest, Versions};
use scenarios::Outcome;

/// Runs the configured scenario and writes its CSV files plus `manifest.json` into
/// `output.dir`. Returns the outcome and the written paths.
pub fn run_and_emit(cfg: &ExperimentConfig) -> Result<(Outcome, Vec<PathBuf>)> {
    let start = Instant::now();
    let outcome = scenarios::run(cfg).with_context(|| format!("scenario {}", cfg.scenario))?;
    let wall = start.elapsed().as_secs_f64();
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    let create = |name: &str| -> Result<(std::fs::File, PathBuf)> {
        let p = dir.join(name);
        Ok((std::fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?, p))
    };
    if matches!(cfg.scenario.as_str(), "estimates" | "trilinear") || !outcome.estimates.is_empty() {
        let (f, p) = create("estimates.csv")?;
        report::write_estimates(f, &outcome.estimates)?;
        files.push(p);
    }
    if !outcome.energy.is_empty() {
        let (f, p) = create("energy.csv")?;
        report::write_energy(f, &outcome.energy)?;
        files.push(p);
    }
    if !outcome.apriori.is_empty() {
        let (f, p) = create("apriori.csv")?;
        report::write_apriori(f, &outcome.apriori)?;
        files.push(p);
    }
    let manifest_path = dir.join("manifest.json");
    let manifest = Manifest {
        scenario: &cfg.scenario,
        config: cfg,
        seed: cfg.ensemble.seed,
        versions: Versions::current(),
        wall_seconds: wall,
        threads: rayon::current_num_threads(),
        checks: &outcome.checks,
        files: files.iter().map(|p| p.display().to_string()).collect(),
    };
    report::write_json(&manifest_path, &manifest)?;
    files.push(manifest_path);
    Ok((outcome, files))
}
