//! Named scenarios. Each returns an [`Outcome`]: pass/fail checks plus the tabular data the
//! runner writes out.

use anyhow::{bail, Context, Result};
use dispersive_core::energy::{cancellation_check, DyadicSymbol, EnergyRow, Stencil};
use dispersive_core::evolution::{conserved_energy, evolve};
use dispersive_core::harness::{self, InteractionClass, SmoothingNormalization};
use dispersive_core::sampling::smooth_field;
use dispersive_core::{DataLaw, DispersionLaw, Ensemble, EstimateReport, FlowProblem, SpectralField, TorusGeometry};

use crate::config::{Equation, ExperimentConfig};
use crate::criteria;
use crate::report::{AprioriRow, Check};

#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub estimates: Vec<EstimateReport>,
    pub energy: Vec<EnergyRow>,
    pub apriori: Vec<AprioriRow>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, detail));
    }

    pub fn absorb(&mut self, other: Outcome) {
        self.checks.extend(other.checks);
        self.estimates.extend(other.estimates);
        self.energy.extend(other.energy);
        self.apriori.extend(other.apriori);
    }
}

const CRITERIA: [&str; 10] = [
    "criterion-1",
    "criterion-2",
    "criterion-3",
    "criterion-4",
    "criterion-5",
    "criterion-6",
    "criterion-7",
    "criterion-8",
    "criterion-9",
    "criterion-10",
];

pub fn names() -> Vec<&'static str> {
    let mut v = vec!["apriori", "estimates", "trilinear", "energy"];
    v.extend(CRITERIA);
    v
}

pub fn describe(name: &str) -> &'static str {
    match name {
        "apriori" => "sup_t ‖u(t)‖_{H^s}/‖u₀‖_{H^s} along small-data flows",
        "estimates" => "slope fits of the shorttime linear and bilinear estimates",
        "trilinear" => "ratio/α sweeps for each trilinear interaction class",
        "energy" => "modified-energy time series and cancellation check",
        "criterion-1" => "Plancherel and Parseval on random fields",
        "criterion-2" => "mass/energy drift and fourth-order self-convergence",
        "criterion-3" => "symmetrized quartic form equals the direct pairing",
        "criterion-4" => "sextic cancellation and contracted-vs-enumerated remainder",
        "criterion-5" => "correction-multiplier size bound and branch agreement",
        "criterion-6" => "boundary-term ratio across amplitudes and grids",
        "criterion-7" => "frequency-envelope axioms",
        "criterion-8" => "linear and bilinear estimate slopes",
        "criterion-9" => "trilinear interaction classes",
        "criterion-10" => "a priori tracking and energy-norm propagation",
        _ => "",
    }
}

pub fn class_by_label(label: &str) -> Option<InteractionClass> {
    InteractionClass::ALL.into_iter().find(|c| c.label() == label)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.scenario.as_str() {
        "apriori" => apriori(cfg),
        "estimates" => estimates(cfg),
        "trilinear" => trilinear(cfg),
        "energy" => energy(cfg),
        other => match CRITERIA.iter().position(|c| *c == other) {
            Some(i) => criteria::run(i + 1),
            None => bail!("unknown scenario {other:?}"),
        },
    }
}

/// Random real data with `‖u₀‖_{H^s}` = `amplitude`.
pub fn small_data(g: TorusGeometry<f64>, seed: u64, max_mode: i64, s: f64, amplitude: f64, real: bool) -> SpectralField<f64> {
    let u = smooth_field(g, seed, max_mode, 1.0, real);
    u.scale_real(amplitude / u.sobolev_norm(s))
}

/// Evolves `count` small-data samples and records `(t, ‖u‖_{L²}, E, ‖u‖_{H^s})`; checks the
/// growth of the `H^s` norm against `growth_bound`.
pub fn apriori(cfg: &ExperimentConfig) -> Result<Outcome> {
    if cfg.equation != Equation::Mbo {
        bail!("the apriori scenario tracks the real modified Benjamin-Ono flow");
    }
    let g = TorusGeometry::new(cfg.lambdas[0], cfg.grid)?;
    let dt = cfg.dt_for(&g);
    let steps = (cfg.horizon / dt).ceil() as usize;
    let every = (steps / 64).max(1);
    let mut out = Outcome::default();
    let mut worst: f64 = 0.0;
    for i in 0..cfg.ensemble.count {
        let u0 = small_data(g, cfg.ensemble.seed + i as u64, cfg.max_mode, cfg.s, cfg.amplitude, true);
        let prob = FlowProblem::new(DispersionLaw::BenjaminOno, cfg.sigma, u0.clone())?;
        let traj = evolve(&prob, dt, cfg.horizon, every).with_context(|| format!("sample {i}"))?;
        let h0 = u0.sobolev_norm(cfg.s);
        for (t, u) in traj.times.iter().zip(&traj.states) {
            let hs = u.sobolev_norm(cfg.s);
            worst = worst.max(hs / h0);
            out.apriori.push((i, *t, u.l2_norm(), conserved_energy(u, cfg.sigma)?, hs));
        }
    }
    out.check("apriori_growth", worst <= cfg.growth_bound, format!("max ratio {worst:.4} (bound {})", cfg.growth_bound));
    Ok(out)
}

pub fn estimate_report(id: &str, ns: &[usize], lambda: f64, ens: &Ensemble) -> Result<EstimateReport> {
    Ok(match id {
        "l4" => harness::l4_strichartz_ratio(ns, lambda, ens, DispersionLaw::BenjaminOno)?,
        "strichartz" => harness::shorttime_strichartz_ratio(6.0, 6.0, ns, lambda, ens)?,
        // block 0 sits at distance >= 2^n - 2 from block n, so separation mode admits n = 3
        "bilinear" => harness::bilinear_ratio(ns, 0, lambda, ens, false, true)?,
        "maximal" => harness::maximal_ratio(ns, lambda, ens, 1.0)?,
        "smoothing" => harness::smoothing_ratio(ns, lambda, ens, false, SmoothingNormalization::Power)?,
        "smoothing_log" => harness::smoothing_ratio(ns, lambda, ens, false, SmoothingNormalization::LogPower)?,
        other => bail!("unknown estimate {other:?}"),
    })
}

/// Pass/fail of a report: the fitted slope against the prediction, except for the
/// log-normalized smoothing ratio, which only has to stay bounded.
pub fn report_passes(id: &str, r: &EstimateReport) -> bool {
    if id == "smoothing_log" {
        r.slope <= r.predicted + r.tolerance
    } else {
        r.verdict
    }
}

pub fn estimates(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let ens = cfg.ensemble.ensemble();
    for id in &cfg.estimates.list {
        for &lambda in &cfg.lambdas {
            let r = estimate_report(id, &cfg.estimates.ns, lambda, &ens).with_context(|| format!("estimate {id}"))?;
            out.check(
                format!("{id}@lambda={lambda}"),
                report_passes(id, &r),
                format!("slope {:+.3} (predicted {:+.2} ± {}), residual {:.3}", r.slope, r.predicted, r.tolerance, r.residual),
            );
            out.estimates.push(r);
        }
    }
    Ok(out)
}

/// Block tuples, sweep abscissa and data law of one class.
pub type ClassSweep = (Vec<[usize; 4]>, fn([usize; 4]) -> usize, DataLaw);

/// The sweep used for each interaction class.
///
/// Each sweep moves the top frequency at fixed block gaps so the interaction keeps the same
/// shape; class (i) sweeps the low block that its `α` depends on, kept two blocks under `k₂`
/// (closer pairs add a coherent constant at the last point), and class (vi) stays in `k ≤ 2`.
pub fn class_sweep(class: InteractionClass) -> ClassSweep {
    use InteractionClass::*;
    match class {
        HighLowLow => ((0..=3).map(|k| [k, 5, 8, 8]).collect(), |k| k[0], DataLaw::Packet),
        HighHighLowToHigh => ((5..=7).map(|k| [0, k, k, k + 1]).collect(), |k| k[3], DataLaw::Packet),
        HighHighHigh => ((5..=7).map(|k| [k, k, k, k]).collect(), |k| k[3], DataLaw::Narrow),
        HighHighLowToLow => ((5..=7).map(|k| [k, k, 0, 0]).collect(), |k| k[0], DataLaw::Packet),
        HighHighHighToLow => ((5..=7).map(|k| [k, k, k + 1, k - 3]).collect(), |k| k[0], DataLaw::Packet),
        LowLowLow => ((0..=2).map(|k| [k, k, k, k]).collect(), |k| k[0], DataLaw::Packet),
    }
}

pub fn trilinear_report(class: InteractionClass, law: DispersionLaw, lambda: f64, seed: u64, count: usize) -> Result<EstimateReport> {
    let (tuples, sweep, data) = class_sweep(class);
    Ok(harness::trilinear_ratio(class, &tuples, sweep, lambda, &Ensemble::new(seed, count, data), law)?)
}

pub fn trilinear(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    for label in &cfg.trilinear.classes {
        let class = class_by_label(label).with_context(|| format!("class {label:?}"))?;
        let r = trilinear_report(class, cfg.equation.law(), cfg.lambdas[0], cfg.ensemble.seed, cfg.ensemble.count)?;
        out.check(&r.id, r.verdict, format!("slope {:+.3}, residual {:.3}", r.slope, r.residual));
        out.estimates.push(r);
    }
    Ok(out)
}

/// Modified-energy series along one trajectory, with the quartic and sextic cancellation
/// discrepancies checked against `energy.tolerance`.
pub fn energy(cfg: &ExperimentConfig) -> Result<Outcome> {
    let law = cfg.equation.law();
    let g = TorusGeometry::new(cfg.lambdas[0], cfg.grid)?;
    let u0 = small_data(g, cfg.ensemble.seed, cfg.max_mode, cfg.s, cfg.amplitude, law == DispersionLaw::BenjaminOno);
    let prob = FlowProblem::new(law, cfg.sigma, u0)?;
    let dt = cfg.dt_for(&g);
    // the difference stencils need equally spaced snapshots, so the horizon is rounded up to
    // whole snapshot intervals
    let steps = ((cfg.horizon / dt).ceil() as usize).div_ceil(cfg.energy.every) * cfg.energy.every;
    let traj = evolve(&prob, dt, steps as f64 * dt, cfg.energy.every)?;
    let a = DyadicSymbol::power(cfg.s, cfg.energy.symbol_blocks);
    let rep = cancellation_check(&traj, &a, law, cfg.sigma, Stencil::Fourth)?;
    let tol = cfg.energy.tolerance;
    let mut out = Outcome::default();
    out.check("quartic_rate", rep.r4_discrepancy <= tol, format!("|dE0/dt - R4| relative {:.3e}", rep.r4_discrepancy));
    out.check("sextic_rate", rep.r6_discrepancy <= tol, format!("|d(E0+E1)/dt - R6| relative {:.3e}", rep.r6_discrepancy));
    out.energy = rep.rows;
    Ok(out)
}
