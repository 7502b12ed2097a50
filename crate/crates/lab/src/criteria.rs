//! The ten acceptance criteria as self-contained scenarios with fixed parameters.

use std::time::{Duration, Instant};

use anyhow::Result;
use dispersive_core::energy::{
    b4_decomposed, b4_multiplier, b4_quotient, boundary_ratio, build_envelope, cancellation_check, propagation_constant, r4_form, r6_brute_force,
    r6_form, resonance, e0_rate_direct, DyadicSymbol, Stencil,
};
use dispersive_core::evolution::{conserved_energy, conserved_mass, default_dt, evolve};
use dispersive_core::harness::{self, InteractionClass};
use dispersive_core::sampling::{gaussian_field, smooth_field, stream_rng};
use dispersive_core::{DataLaw, DispersionLaw, Ensemble, FlowProblem, SpectralField, TorusGeometry};
use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::scenarios::{estimate_report, report_passes, small_data, trilinear_report, Outcome};

const LAWS: [DispersionLaw; 2] = [DispersionLaw::BenjaminOno, DispersionLaw::Schroedinger];

/// Wall-clock budget of each criterion.
pub fn budget(n: usize) -> Duration {
    let secs = match n {
        1 => 5,
        2 => 120,
        3 => 60,
        4 => 600,
        5 => 120,
        6 => 300,
        7 => 10,
        8 => 900,
        9 => 1200,
        10 => 600,
        _ => 0,
    };
    Duration::from_secs(secs)
}

pub fn run(n: usize) -> Result<Outcome> {
    match n {
        1 => spectral_identities(),
        2 => conservation(),
        3 => symmetrization(),
        4 => cancellation(),
        5 => multiplier_bounds(),
        6 => boundary_bound(),
        7 => envelopes(),
        8 => estimate_slopes(),
        9 => trilinear_classes(),
        10 => apriori_tracking(),
        _ => anyhow::bail!("there is no criterion {n}"),
    }
}

/// Runs criterion `n` and appends a runtime check against its budget.
pub fn run_timed(n: usize) -> Result<(Outcome, Duration)> {
    let start = Instant::now();
    let mut out = run(n)?;
    let took = start.elapsed();
    out.check("runtime", took <= budget(n), format!("{:.1}s of {}s", took.as_secs_f64(), budget(n).as_secs()));
    Ok((out, took))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_field(g: TorusGeometry<f64>, seed: u64, law: DispersionLaw, amp: f64) -> SpectralField<f64> {
    let mut rng = stream_rng(seed, 0);
    gaussian_field::<f64, _>(g, &mut rng, law == DispersionLaw::BenjaminOno, |_| true, |xi| 1.0 / (1.0 + xi.abs())).scale_real(amp)
}

fn symbols() -> Result<Vec<DyadicSymbol>> {
    let g = TorusGeometry::new(1.0, 256)?;
    let env = build_envelope(&smooth_field(g, 4, 100, 0.8, true), 0.3, 0.2)?;
    Ok(vec![
        DyadicSymbol::power(0.3, 8),
        DyadicSymbol::power(0.5, 8),
        DyadicSymbol::power(0.75, 8),
        DyadicSymbol::from_envelope(&env, 2)?,
        DyadicSymbol::from_envelope(&env, 5)?,
    ])
}

fn spectral_identities() -> Result<Outcome> {
    let mut worst_norm: f64 = 0.0;
    let mut worst_inner: f64 = 0.0;
    for lambda in [1.0, 2.0, 4.0] {
        let g = TorusGeometry::new(lambda, 256)?;
        let dx = g.dx();
        for i in 0..100 {
            let mut rng = stream_rng(1, i);
            let f = gaussian_field::<f64, _>(g, &mut rng, false, |_| true, |_| 1.0).scale_real(1.0 + i as f64);
            let h = gaussian_field::<f64, _>(g, &mut rng, false, |_| true, |_| 1.0);
            let (fs, hs) = (f.samples(), h.samples());
            let physical = (fs.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt();
            worst_norm = worst_norm.max(rel(physical, f.l2_norm()));
            let pair: Complex<f64> = fs.iter().zip(&hs).map(|(a, b)| a * b.conj()).sum::<Complex<f64>>() * dx;
            let spectral = f.inner(&h)?;
            worst_inner = worst_inner.max((pair - spectral).norm() / (f.l2_norm() * h.l2_norm()));
        }
    }
    let mut out = Outcome::default();
    out.check("plancherel", worst_norm <= 1e-12, format!("max relative error {worst_norm:.2e}"));
    out.check("parseval", worst_inner <= 1e-12, format!("max relative error {worst_inner:.2e}"));
    Ok(out)
}

fn conservation() -> Result<Outcome> {
    let law = DispersionLaw::BenjaminOno;
    let g = TorusGeometry::new(1.0, 256)?;
    let mut out = Outcome::default();
    let u0 = small_data(g, 11, 8, 0.3, 0.05, true);
    let prob = FlowProblem::new(law, 1.0, u0.clone())?;
    let traj = evolve(&prob, default_dt(&g, law), 1.0, usize::MAX)?;
    let u1 = traj.last();
    let dm = rel(conserved_mass(u1), conserved_mass(&u0));
    let de = rel(conserved_energy(u1, 1.0)?, conserved_energy(&u0, 1.0)?);
    out.check("mass_drift", dm <= 1e-8, format!("{dm:.2e}"));
    out.check("energy_drift", de <= 1e-6, format!("{de:.2e}"));
    let prob = FlowProblem::new(law, -1.0, small_data(g, 5, 8, 0.3, 0.05, true))?;
    let finals: Vec<SpectralField<f64>> = (7..=10).map(|k| Ok(evolve(&prob, 2f64.powi(-k), 1.0, usize::MAX)?.last().clone())).collect::<Result<_>>()?;
    let orders: Vec<f64> = finals
        .windows(3)
        .map(|w| Ok((w[0].sub(&w[1])?.l2_norm() / w[1].sub(&w[2])?.l2_norm()).log2()))
        .collect::<Result<_>>()?;
    out.check("self_convergence", orders.iter().all(|o| (o - 4.0).abs() <= 0.3), format!("observed orders {orders:.3?}"));
    Ok(out)
}

fn symmetrization() -> Result<Outcome> {
    let syms = symbols()?;
    let unit = DyadicSymbol::constant();
    let mut worst: f64 = 0.0;
    let mut unit_max: f64 = 0.0;
    for law in LAWS {
        for i in 0..50u64 {
            let g = TorusGeometry::new(if i % 2 == 0 { 1.0 } else { 2.0 }, 32)?;
            let u = random_field(g, 1000 + i, law, 0.6);
            for a in &syms {
                worst = worst.max(rel(r4_form(a, &u, law, -1.0)?, e0_rate_direct(a, &u, law, -1.0)?));
            }
            unit_max = unit_max.max(r4_form(&unit, &u, law, -1.0)?.abs());
        }
    }
    let mut out = Outcome::default();
    out.check("r4_equals_direct_pairing", worst <= 1e-10, format!("max relative difference {worst:.2e} (50 fields x 5 symbols x 2 laws)"));
    out.check("r4_vanishes_for_unit_symbol", unit_max == 0.0, format!("max |R4| {unit_max:.2e}"));
    Ok(out)
}

fn cancellation() -> Result<Outcome> {
    let mut out = Outcome::default();
    let a = DyadicSymbol::power(0.4, 6);
    for law in LAWS {
        let g = TorusGeometry::new(1.0, 32)?;
        let u0 = smooth_field(g, 5, 6, 1.0, law == DispersionLaw::BenjaminOno).scale_real(0.5);
        let prob = FlowProblem::new(law, 1.0, u0)?;
        let dt = default_dt(&g, law) / 8.0;
        let disc: Vec<f64> = [32usize, 16, 8]
            .iter()
            .map(|&every| Ok(cancellation_check(&evolve(&prob, dt, dt * (every * 8) as f64, every)?, &a, law, 1.0, Stencil::Fourth)?.r6_discrepancy))
            .collect::<Result<_>>()?;
        let orders: Vec<f64> = disc.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        out.check(
            format!("sextic_cancellation_{law:?}"),
            orders.iter().all(|o| (o - 4.0).abs() <= 0.5),
            format!("discrepancies {:?}, orders {orders:.2?} (4th-order stencil)", disc.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()),
        );
    }
    let syms = symbols()?;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for law in LAWS {
        for (i, a) in syms.iter().enumerate() {
            for m in [8, 16] {
                for seed in 0..2u64 {
                    let g = TorusGeometry::new(1.0 + seed as f64, m)?;
                    let u = random_field(g, 7 + 10 * i as u64 + seed, law, 0.8);
                    worst = worst.max(rel(r6_form(a, &u, law, 1.0)?, r6_brute_force(a, &u, law, 1.0)?));
                    cases += 1;
                }
            }
        }
    }
    out.check("contracted_r6_equals_enumeration", worst <= 1e-10, format!("max relative difference {worst:.2e} over {cases} instances"));
    Ok(out)
}

/// Random Γ₄ tuple with `ξ₁, ξ₂, ξ₃` in the given blocks on the lattice `ℤ/λ`.
fn tuple_in_blocks<R: Rng>(rng: &mut R, blocks: [usize; 3], lambda: f64) -> [f64; 4] {
    let mut x = [0.0; 4];
    for (i, &k) in blocks.iter().enumerate() {
        let (lo, hi) = if k == 0 { (0.0, 2.0) } else { ((k as f64).exp2(), ((k + 1) as f64).exp2()) };
        let m = rng.random_range((lo * lambda).ceil() as i64..(hi * lambda).ceil() as i64);
        x[i] = if rng.random::<bool>() { m as f64 } else { -(m as f64) } / lambda;
    }
    x[3] = -(x[0] + x[1] + x[2]);
    x
}

fn multiplier_bounds() -> Result<Outcome> {
    let g = TorusGeometry::new(1.0, 256)?;
    let env = build_envelope(&smooth_field(g, 9, 100, 0.8, true), 0.35, 0.2)?;
    let syms = [DyadicSymbol::power(0.35, 9), DyadicSymbol::power(0.75, 9), DyadicSymbol::from_envelope(&env, 3)?];
    let blocks = [0usize, 2, 4, 6];
    let mut patterns = Vec::new();
    for a in blocks {
        for b in blocks {
            for c in blocks {
                patterns.push([a, b, c]);
            }
        }
    }
    const PER_PATTERN: usize = 10_000;
    // (max |b₄|μ/a(μ), max branch mismatch, compared count)
    let stats: Vec<(f64, f64, usize)> = patterns
        .par_iter()
        .enumerate()
        .map(|(p, &blk)| {
            let mut rng = stream_rng(23, p as u64);
            let (mut c, mut mis, mut compared) = (0.0f64, 0.0f64, 0usize);
            for n in 0..PER_PATTERN {
                let xi = tuple_in_blocks(&mut rng, blk, 2.0);
                let mu = xi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if mu == 0.0 {
                    continue;
                }
                let law = LAWS[n % 2];
                for a in &syms {
                    let scale = a.eval(mu) / mu;
                    c = c.max(b4_multiplier(a, xi, law).norm() / scale);
                    if resonance(law, xi).abs() >= 1e-3 * mu * mu {
                        let q = b4_quotient(a, xi, law);
                        let (d, _) = b4_decomposed(a, xi, law);
                        mis = mis.max((q - d).norm() / q.norm().max(scale));
                        compared += 1;
                    }
                }
            }
            (c, mis, compared)
        })
        .collect();
    let c = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let mis = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let compared: usize = stats.iter().map(|s| s.2).sum();
    let mut out = Outcome::default();
    out.check(
        "b4_size_bound",
        c <= 20.0,
        format!("C = {c:.3} over {} patterns x {PER_PATTERN} tuples, both laws, {} symbols", patterns.len(), syms.len()),
    );
    out.check("branch_agreement", mis <= 1e-10, format!("max relative mismatch {mis:.2e} over {compared} nonresonant evaluations"));
    Ok(out)
}

fn boundary_bound() -> Result<Outcome> {
    let a = DyadicSymbol::power(0.4, 8);
    let mut out = Outcome::default();
    for law in LAWS {
        for seed in 0..2u64 {
            let mut vals = Vec::new();
            for m in [64usize, 128, 256] {
                let g = TorusGeometry::new(1.0, m)?;
                let u = smooth_field(g, 30 + seed, 24, 0.5, law == DispersionLaw::BenjaminOno);
                for amp in [1.0, 0.1, 0.01] {
                    vals.push(boundary_ratio(&a, &u.scale_real(amp), law, 1.0)?);
                }
            }
            let (lo, hi) = (vals.iter().copied().fold(f64::INFINITY, f64::min), vals.iter().copied().fold(0.0, f64::max));
            let c0 = vals[0];
            out.check(
                format!("boundary_ratio_{law:?}_seed{seed}"),
                c0.is_finite() && hi <= 1.2 * c0 && lo >= 0.8 * c0,
                format!("C = {c0:.4}, spread [{lo:.4}, {hi:.4}] over M in {{64,128,256}} x 3 amplitudes"),
            );
        }
    }
    Ok(out)
}

fn envelopes() -> Result<Outcome> {
    let g = TorusGeometry::new(1.0, 256)?;
    let (mut fails, mut worst_sum, mut bound) = (0, 0.0f64, 0.0f64);
    let mut violations = 0;
    for i in 0..100u64 {
        let mut rng = stream_rng(77, i);
        let s = rng.random_range(0.26..1.0);
        let eps = rng.random_range(0.05..0.3);
        let decay = rng.random_range(0.0..2.0);
        let u = smooth_field(g, i, rng.random_range(4..127), decay, i % 2 == 0);
        let chk = build_envelope(&u, s, eps)?.check();
        if !chk.passed() {
            fails += 1;
        }
        violations += chk.lipschitz_violations;
        worst_sum = worst_sum.max(chk.sum / chk.sum_bound);
        bound = bound.max(chk.sum_bound);
    }
    let mut out = Outcome::default();
    out.check(
        "envelope_axioms",
        fails == 0 && violations == 0,
        format!("{fails} failures, {violations} log-Lipschitz violations, max sum/bound {worst_sum:.3} (largest bound {bound:.2})"),
    );
    Ok(out)
}

fn estimate_slopes() -> Result<Outcome> {
    let ens = Ensemble::new(8, 64, DataLaw::Packet);
    let ns: Vec<usize> = (3..=8).collect();
    let mut out = Outcome::default();
    for id in ["bilinear", "maximal", "smoothing", "l4"] {
        let r = estimate_report(id, &ns, 1.0, &ens)?;
        out.check(
            &r.id,
            report_passes(id, &r),
            format!("slope {:+.3} (predicted {:+.2} ± {}), residual {:.3}", r.slope, r.predicted, r.tolerance, r.residual),
        );
        out.estimates.push(r);
    }
    let norms: Vec<(usize, f64)> = (1..=8).map(|p| Ok((1usize << p, harness::smoothing_grid_operator_norm(1 << p)?))).collect::<Result<_>>()?;
    let worst = norms.iter().filter(|(n, _)| *n >= 4).map(|(n, v)| v / (*n as f64).log2()).fold(0.0, f64::max);
    out.check("grid_operator_norm", worst <= 5.0, format!("max norm/log2 N = {worst:.3} for N <= 256"));
    Ok(out)
}

fn trilinear_classes() -> Result<Outcome> {
    let mut out = Outcome::default();
    for law in LAWS {
        for class in InteractionClass::ALL {
            let r = trilinear_report(class, law, 1.0, 11, 4)?;
            let pts: Vec<String> = r.points.iter().map(|p| format!("{}:{:.2e}", p.n, p.max_ratio)).collect();
            out.check(&r.id, r.verdict, format!("slope {:+.3} (|slope| <= {}), residual {:.3} [{}]", r.slope, r.tolerance, r.residual, pts.join(" ")));
            out.estimates.push(r);
        }
    }
    Ok(out)
}

/// Largest admissible propagation constant; the inequality is asserted as boundedness.
const PROPAGATION_CAP: f64 = 10.0;

fn apriori_tracking() -> Result<Outcome> {
    let law = DispersionLaw::BenjaminOno;
    let (s, amp) = (0.3, 0.05);
    let g = TorusGeometry::new(1.0, 128)?;
    let dt: f64 = default_dt(&g, law);
    let steps = (1.0 / dt).ceil() as usize;
    let every = (steps / 256).max(1);
    let rows: Vec<(f64, f64, f64)> = (0..10u64)
        .into_par_iter()
        .map(|i| {
            let u0 = small_data(g, 500 + i, 16, s, amp, true);
            let traj = evolve(&FlowProblem::new(law, 1.0, u0.clone())?, dt, 1.0, every)?;
            let h0 = u0.sobolev_norm(s);
            let growth = traj.states.iter().map(|u| u.sobolev_norm(s) / h0).fold(0.0, f64::max);
            let p = propagation_constant(&traj, law, s, 0.25)?;
            Ok((growth, p.constant, u0.l2_norm()))
        })
        .collect::<Result<_>>()?;
    let growth = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let c = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let l2 = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut out = Outcome::default();
    out.check("data_size", l2 <= amp, format!("max ‖u0‖_L2 {l2:.4}"));
    out.check("hs_growth", growth <= 4.0, format!("max sup_t ‖u‖_H^s/‖u0‖_H^s = {growth:.4} over 10 samples"));
    out.check("energy_propagation", c.is_finite() && c <= PROPAGATION_CAP, format!("max C = {c:.4} (cap {PROPAGATION_CAP})"));
    Ok(out)
}
