//! Ensemble measurements of the shorttime linear, bilinear and trilinear estimates.
//!
//! Every estimate is reduced to a ratio `LHS / RHS` evaluated on seeded random data. A report
//! holds the per-parameter maximum and mean ratios and a least-squares fit of `log₂(max ratio)`
//! against the sweep parameter, compared with the predicted exponent.
//!
//! The harness works in `f64` throughout; it is a diagnostics layer on top of the generic
//! field types.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{free_evolve, DispersionLaw};
use crate::sampling::{block_field, normalize, stream_rng};
use crate::spacetime::{eta0, fk_norm, nk_norm, SpaceTimeField};
use crate::spectral::{block_index, FourierPlan, SpectralField, TorusGeometry};

type Field = SpectralField<f64>;
type C64 = Complex<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataLaw {
    /// i.i.d. complex Gaussian coefficients on the block
    Gaussian,
    /// coherent packets: random moduli in `[1/2, 3/2]`, phases aligned to focus at a random
    /// point at a prescribed time (near-extremal data for dispersive estimates)
    Packet,
    /// packets on a random sub-band of width `2^{k/2}` inside the block, the widest band that
    /// stays coherent over a window of length `2^{-k}`
    Narrow,
}

/// Focusing data shared by the factors of one multilinear sample: position, time and the
/// relative position of the sub-band inside each block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Focus {
    pub x0: f64,
    pub tf: f64,
    pub band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub seed: u64,
    pub count: usize,
    pub law: DataLaw,
    pub real: bool,
}

impl Ensemble {
    pub fn new(seed: u64, count: usize, law: DataLaw) -> Self {
        Self { seed, count, law, real: false }
    }

    pub fn real(mut self, real: bool) -> Self {
        self.real = real;
        self
    }

    /// Sample `index` on block `I_k`. Packets focus at time `focus.0 + U·(focus.1 - focus.0)`
    /// under `disp`. `stream` separates independent factors drawn for the same index.
    pub fn sample(&self, index: usize, stream: u64, geometry: TorusGeometry<f64>, k: usize, disp: DispersionLaw, focus: (f64, f64)) -> Field {
        let mut rng = stream_rng(self.seed, (index as u64) << 8 | stream);
        match self.law {
            DataLaw::Gaussian => block_field(geometry, k, &mut rng, self.real),
            DataLaw::Packet | DataLaw::Narrow => {
                let f = draw_focus(&mut rng, geometry, focus);
                self.sample_at(index, stream, geometry, k, disp, &f)
            }
        }
    }

    /// Common focus for all factors of sample `index`.
    pub fn focus(&self, index: usize, geometry: TorusGeometry<f64>, times: (f64, f64)) -> Focus {
        let mut rng = stream_rng(self.seed, (index as u64) << 8 | 0xff);
        draw_focus(&mut rng, geometry, times)
    }

    /// Like [`Ensemble::sample`] but packets share the given focus; Gaussian data ignore it.
    pub fn sample_at(&self, index: usize, stream: u64, geometry: TorusGeometry<f64>, k: usize, disp: DispersionLaw, focus: &Focus) -> Field {
        let mut rng = stream_rng(self.seed, (index as u64) << 8 | stream);
        let band = match self.law {
            DataLaw::Gaussian => return block_field(geometry, k, &mut rng, self.real),
            DataLaw::Packet => None,
            DataLaw::Narrow => Some(sub_band(k, focus.band)),
        };
        packet_on(geometry, k, band, &mut rng, focus.x0, focus.tf, disp, self.real)
    }
}

fn draw_focus<R: Rng + ?Sized>(rng: &mut R, geometry: TorusGeometry<f64>, times: (f64, f64)) -> Focus {
    let x0 = rng.random::<f64>() * geometry.period();
    let tf = times.0 + rng.random::<f64>() * (times.1 - times.0);
    Focus { x0, tf, band: rng.random() }
}

/// `|ξ|` range of width `2^{k/2}` at relative position `at ∈ [0, 1]` inside block `k`.
fn sub_band(k: usize, at: f64) -> (f64, f64) {
    if k == 0 {
        return (0.0, 2.0);
    }
    let lo = (k as f64).exp2();
    let w = (k as f64 / 2.0).exp2();
    let start = lo + at * (lo - w);
    (start, start + w)
}

/// Unit-norm field on `I_k` whose free evolution under `disp` focuses at `x0` at time `tf`.
pub fn packet_field<R: Rng + ?Sized>(
    geometry: TorusGeometry<f64>,
    k: usize,
    rng: &mut R,
    x0: f64,
    tf: f64,
    disp: DispersionLaw,
    real: bool,
) -> Field {
    packet_on(geometry, k, None, rng, x0, tf, disp, real)
}

#[allow(clippy::too_many_arguments)]
fn packet_on<R: Rng + ?Sized>(
    geometry: TorusGeometry<f64>,
    k: usize,
    band: Option<(f64, f64)>,
    rng: &mut R,
    x0: f64,
    tf: f64,
    disp: DispersionLaw,
    real: bool,
) -> Field {
    let nyq = geometry.nyquist_index();
    let mut coeffs = vec![C64::new(0.0, 0.0); geometry.grid_size()];
    for (j, c) in coeffs.iter_mut().enumerate() {
        let xi = geometry.frequency(j);
        if j == nyq || block_index(xi) != k || (real && xi < 0.0) {
            continue;
        }
        if band.is_some_and(|(lo, hi)| xi.abs() < lo || xi.abs() >= hi) {
            continue;
        }
        let r = 0.5 + rng.random::<f64>();
        *c = C64::from_polar(r, -xi * x0 - disp.omega(xi) * tf);
    }
    if real {
        for j in 0..geometry.grid_size() {
            let m = geometry.mode(j);
            if m > 0 {
                if let Some(p) = geometry.index_of(-m) {
                    coeffs[p] = coeffs[j].conj();
                }
            }
        }
    }
    normalize(Field::from_coeffs(geometry, coeffs, real).expect("finite packet"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// root-mean-square residual
    pub residual: f64,
}

/// Ordinary least squares on `(x, y)` pairs.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 3 {
        return Err(Error::Invalid(format!("need at least 3 points to fit, got {}", points.len())));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("abscissae are all equal".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Fit { slope, intercept, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    /// sweep parameter (a dyadic exponent: `N = 2^n`)
    pub n: f64,
    pub lambda: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub samples: usize,
    pub skipped: usize,
}

impl RatioPoint {
    pub fn from_ratios(n: f64, lambda: f64, ratios: &[Option<f64>]) -> Self {
        let vals: Vec<f64> = ratios.iter().flatten().copied().collect();
        let max_ratio = vals.iter().copied().fold(0.0, f64::max);
        let mean_ratio = if vals.is_empty() { 0.0 } else { vals.iter().sum::<f64>() / vals.len() as f64 };
        Self { n, lambda, max_ratio, mean_ratio, samples: vals.len(), skipped: ratios.len() - vals.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub id: String,
    pub points: Vec<RatioPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub residual_cap: f64,
    pub verdict: bool,
}

impl EstimateReport {
    /// Fits `log₂(max_ratio)` against `n`; points with no usable samples are left out of the fit.
    pub fn from_points(id: impl Into<String>, points: Vec<RatioPoint>, predicted: f64, tolerance: f64, residual_cap: f64) -> Result<Self> {
        let xy: Vec<(f64, f64)> = points.iter().filter(|p| p.max_ratio > 0.0).map(|p| (p.n, p.max_ratio.log2())).collect();
        let fit = fit_exponent(&xy)?;
        let verdict = verdict(fit.slope, fit.residual, predicted, tolerance, residual_cap);
        Ok(Self {
            id: id.into(),
            points,
            slope: fit.slope,
            intercept: fit.intercept,
            residual: fit.residual,
            predicted,
            tolerance,
            residual_cap,
            verdict,
        })
    }

    pub fn max_ratio(&self) -> f64 {
        self.points.iter().map(|p| p.max_ratio).fold(0.0, f64::max)
    }
}

pub fn verdict(slope: f64, residual: f64, predicted: f64, tolerance: f64, residual_cap: f64) -> bool {
    (slope - predicted).abs() <= tolerance && residual <= residual_cap
}

/// Smallest power of two with at least `min` samples and ~4 samples per period of the
/// fastest phase `omega_span` over `length`.
fn time_samples(omega_span: f64, length: f64, min: usize) -> usize {
    let periods = omega_span * length / std::f64::consts::TAU;
    ((4.0 * periods).ceil() as usize + 1).max(min).next_power_of_two()
}

/// Geometry whose lattice resolves block `k` at scale `lambda`.
fn block_geometry(k: usize, lambda: f64) -> Result<TorusGeometry<f64>> {
    let need = ((k + 2) as f64).exp2() * lambda;
    TorusGeometry::new(lambda, (need.ceil() as usize).next_power_of_two().max(8))
}

/// Composite trapezoid rule on `n` equally spaced samples over an interval of length `len`.
fn trapezoid(vals: &[f64], len: f64) -> f64 {
    let n = vals.len();
    if n < 2 {
        return 0.0;
    }
    let h = len / (n - 1) as f64;
    h * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[n - 1]))
}

/// Physical samples of the free evolution at time `t` on a grid refined by `over`.
fn free_samples(u0: &Field, t: f64, law: DispersionLaw, plan: &FourierPlan<f64>) -> Vec<C64> {
    let up = u0.resample(plan.geometry().grid_size()).expect("refinement of a power of two");
    free_evolve(&up, t, law).samples_with(plan)
}

fn fine_plan(u0: &Field, factor: usize) -> FourierPlan<f64> {
    FourierPlan::new(u0.geometry().with_grid_size(u0.geometry().grid_size() * factor).expect("power of two"))
}

// ---------------------------------------------------------------------------------------------
// L⁴ estimate on modulation-localized fields

/// `(‖u‖_{L⁴_{t,x}}, ‖u‖_{L²_{t,x}})` for `u = η₀(2^j(t - tf))·e^{itω}u₀`.
pub fn l4_norms(u0: &Field, j: usize, tf: f64, law: DispersionLaw) -> (f64, f64) {
    let w = (-(j as f64)).exp2();
    let half = 1.6 * w;
    let span = 4.0 * u0.geometry().cutoff().powi(2) + 8.0 / w;
    let nt = time_samples(span, 2.0 * half, 256);
    let plan = fine_plan(u0, 4);
    let dx = plan.geometry().dx();
    let (q4, q2): (Vec<f64>, Vec<f64>) = (0..nt)
        .into_par_iter()
        .map(|i| {
            let t = tf - half + 2.0 * half * i as f64 / (nt - 1) as f64;
            let e = eta0((t - tf) / w);
            if e == 0.0 {
                return (0.0, 0.0);
            }
            let s = free_samples(u0, t, law, &plan);
            let a2: f64 = s.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
            let a4: f64 = s.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * dx;
            (e.powi(4) * a4, e * e * a2)
        })
        .unzip();
    (trapezoid(&q4, 2.0 * half).powf(0.25), trapezoid(&q2, 2.0 * half).sqrt())
}

/// `‖u‖_{L⁴}/(2^{3j/8}‖u‖_{L²})` over `j`, with data on block `k = ⌊j/2⌋`.
pub fn l4_strichartz_ratio(js: &[usize], lambda: f64, ens: &Ensemble, law: DispersionLaw) -> Result<EstimateReport> {
    let mut points = Vec::new();
    for &j in js {
        let k = j / 2;
        let g = block_geometry(k, lambda)?;
        let ratios: Vec<Option<f64>> = (0..ens.count)
            .into_par_iter()
            .map(|i| {
                let u0 = ens.sample(i, 0, g, k, law, (0.0, 0.0));
                let (l4, l2) = l4_norms(&u0, j, 0.0, law);
                (l2 > 0.0).then(|| l4 / ((3.0 * j as f64 / 8.0).exp2() * l2))
            })
            .collect();
        points.push(RatioPoint::from_ratios(j as f64, lambda, &ratios));
    }
    EstimateReport::from_points("l4_modulation", points, 0.0, 0.1, 0.25)
}

// ---------------------------------------------------------------------------------------------
// Shorttime Strichartz

pub fn check_admissible(q: f64, p: f64) -> Result<()> {
    let lhs = if q.is_infinite() { 0.0 } else { 2.0 / q } + 1.0 / p;
    if !(2.0..).contains(&p) || p.is_infinite() || q < 2.0 || (lhs - 0.5).abs() > 1e-12 {
        return Err(Error::Invalid(format!("(q, p) = ({q}, {p}) is not admissible with 2 <= p < ∞")));
    }
    Ok(())
}

/// `‖e^{it∂²}u₀‖_{L^q([0, len], L^p)}`.
pub fn strichartz_lhs(u0: &Field, q: f64, p: f64, len: f64) -> Result<f64> {
    check_admissible(q, p)?;
    let law = DispersionLaw::Schroedinger;
    let nt = time_samples(u0.geometry().cutoff().powi(2), len, 64);
    let vals: Vec<f64> = (0..nt)
        .into_par_iter()
        .map(|i| free_evolve(u0, len * i as f64 / (nt - 1) as f64, law).lebesgue_norm(p))
        .collect::<Result<_>>()?;
    if q.is_infinite() {
        return Ok(vals.into_iter().fold(0.0, f64::max));
    }
    let powered: Vec<f64> = vals.iter().map(|v| v.powf(q)).collect();
    Ok(trapezoid(&powered, len).powf(1.0 / q))
}

pub fn shorttime_strichartz_ratio(q: f64, p: f64, ns: &[usize], lambda: f64, ens: &Ensemble) -> Result<EstimateReport> {
    check_admissible(q, p)?;
    let law = DispersionLaw::Schroedinger;
    let mut points = Vec::new();
    for &n in ns {
        let g = block_geometry(n, lambda)?;
        let len = (-(n as f64)).exp2();
        let ratios: Vec<Option<f64>> = (0..ens.count)
            .map(|i| {
                let u0 = ens.sample(i, 0, g, n, law, (0.25 * len, 0.75 * len));
                let norm = u0.l2_norm();
                if norm == 0.0 {
                    return Ok(None);
                }
                Ok(Some(strichartz_lhs(&u0, q, p, len)? / norm))
            })
            .collect::<Result<_>>()?;
        points.push(RatioPoint::from_ratios(n as f64, lambda, &ratios));
    }
    EstimateReport::from_points(format!("strichartz_q{q}_p{p}"), points, 0.0, 0.1, 0.25)
}

// ---------------------------------------------------------------------------------------------
// Bilinear

/// `‖e^{it∂²}u₀ · e^{it∂²}v₀‖_{L²([0,len]×λ𝕋)}` (second factor conjugated if asked).
pub fn bilinear_lhs(u0: &Field, v0: &Field, len: f64, conjugate: bool) -> f64 {
    let law = DispersionLaw::Schroedinger;
    let plan = fine_plan(u0, 4);
    let dx = plan.geometry().dx();
    // phases of |uv|² are differences of two frequency sums
    let span = 2.0 * u0.geometry().cutoff().max(v0.geometry().cutoff()).powi(2);
    let nt = time_samples(span, len, 64);
    let vals: Vec<f64> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let t = len * i as f64 / (nt - 1) as f64;
            let a = free_samples(u0, t, law, &plan);
            let b = free_samples(v0, t, law, &plan);
            a.iter()
                .zip(&b)
                .map(|(x, y)| if conjugate { (x * y.conj()).norm_sqr() } else { (x * y).norm_sqr() })
                .sum::<f64>()
                * dx
        })
        .collect();
    trapezoid(&vals, len).sqrt()
}

fn support_distance(u: &Field, v: &Field) -> f64 {
    let freqs = |f: &Field| -> Vec<f64> {
        let g = f.geometry();
        (0..g.grid_size()).filter(|&j| f.coeffs()[j].norm_sqr() > 0.0).map(|j| g.frequency(j)).collect()
    };
    let a = freqs(u);
    let b = freqs(v);
    let mut d = f64::INFINITY;
    for x in &a {
        for y in &b {
            d = d.min((x - y).abs());
        }
    }
    d
}

/// Ratio `LHS/(‖u₀‖‖v₀‖)` for `u₀ ∈ I_n`, `v₀ ∈ I_k`; predicted slope `-1/2` in `n`.
///
/// Requires `n - k >= 4` unless `separated` is set, in which case the supports must be at
/// distance at least `2^n/4`.
pub fn bilinear_ratio(ns: &[usize], k: usize, lambda: f64, ens: &Ensemble, conjugate: bool, separated: bool) -> Result<EstimateReport> {
    let law = DispersionLaw::Schroedinger;
    let mut points = Vec::new();
    for &n in ns {
        if n < k + 4 && !separated {
            return Err(Error::Invalid(format!("bilinear estimate needs n - k >= 4 (n = {n}, k = {k}) or separation mode")));
        }
        let g = block_geometry(n.max(k), lambda)?;
        let len = (-(n as f64)).exp2();
        let ratios: Vec<Option<f64>> = (0..ens.count)
            .map(|i| {
                let u0 = ens.sample(i, 0, g, n, law, (0.0, len));
                let v0 = ens.sample(i, 1, g, k, law, (0.0, len));
                let denom = u0.l2_norm() * v0.l2_norm();
                if denom == 0.0 {
                    return Ok(None);
                }
                if separated && support_distance(&u0, &v0) < (n as f64).exp2() / 4.0 {
                    return Err(Error::Invalid(format!("supports of blocks {n} and {k} are not separated")));
                }
                Ok(Some(bilinear_lhs(&u0, &v0, len, conjugate) / denom))
            })
            .collect::<Result<_>>()?;
        points.push(RatioPoint::from_ratios(n as f64, lambda, &ratios));
    }
    let id = format!("bilinear{}", if conjugate { "_conj" } else { "" });
    EstimateReport::from_points(id, points, -0.5, 0.15, 0.25)
}

// ---------------------------------------------------------------------------------------------
// Maximal function and local smoothing

/// `(sup_t |u(t, x)|, ∫|u(t, x)|² dt)` on the refined spatial grid, `t ∈ [0, len]`.
fn pointwise_time_profile(u0: &Field, len: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let law = DispersionLaw::Schroedinger;
    let plan = fine_plan(u0, 2);
    let span = u0.geometry().cutoff().powi(2);
    // resolve the focusing time 1/N² as well as the fastest phase
    let nt = time_samples(span, len, 64).max((4.0 * len * span).ceil() as usize).next_power_of_two() + 1;
    let mf = plan.geometry().grid_size();
    let rows: Vec<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let t = len * i as f64 / (nt - 1) as f64;
            free_samples(u0, t, law, &plan).iter().map(|z| z.norm()).collect()
        })
        .collect();
    let mut sup = vec![0.0f64; mf];
    let mut l2 = vec![0.0f64; mf];
    let h = len / (nt - 1) as f64;
    for (i, r) in rows.iter().enumerate() {
        let w = if i == 0 || i == nt - 1 { 0.5 * h } else { h };
        for x in 0..mf {
            sup[x] = sup[x].max(r[x]);
            l2[x] += w * r[x] * r[x];
        }
    }
    (sup, l2, plan.geometry().dx())
}

/// `‖e^{it∂²}u₀‖_{L⁴_x L^∞_t([0, len])}`.
pub fn maximal_lhs(u0: &Field, len: f64) -> f64 {
    let (sup, _, dx) = pointwise_time_profile(u0, len);
    (sup.iter().map(|s| s.powi(4)).sum::<f64>() * dx).powf(0.25)
}

/// `‖e^{it∂²}u₀‖_{L^∞_x L²_t([0, len])}`.
pub fn smoothing_lhs(u0: &Field, len: f64) -> f64 {
    let (_, l2, _) = pointwise_time_profile(u0, len);
    l2.into_iter().fold(0.0, f64::max).sqrt()
}

/// Ratio `LHS/‖u₀‖` over the interval `[0, interval_scale·2^{-n}]`; predicted slope `+1/4`.
pub fn maximal_ratio(ns: &[usize], lambda: f64, ens: &Ensemble, interval_scale: f64) -> Result<EstimateReport> {
    let law = DispersionLaw::Schroedinger;
    let mut points = Vec::new();
    for &n in ns {
        let g = block_geometry(n, lambda)?;
        let len = interval_scale * (-(n as f64)).exp2();
        let ratios: Vec<Option<f64>> = (0..ens.count)
            .map(|i| {
                let u0 = ens.sample(i, 0, g, n, law, (0.25 * len, 0.75 * len));
                let norm = u0.l2_norm();
                (norm > 0.0).then(|| maximal_lhs(&u0, len) / norm)
            })
            .collect();
        points.push(RatioPoint::from_ratios(n as f64, lambda, &ratios));
    }
    EstimateReport::from_points("maximal", points, 0.25, 0.15, 0.25)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingNormalization {
    /// `N^{-1/2}`
    Power,
    /// `log₂N · N^{-1/2}`
    LogPower,
}

/// Ratio `LHS/(norm(N)‖u₀‖)` over `[0, 2^{-n}]`; predicted slope 0 in `n`.
pub fn smoothing_ratio(
    ns: &[usize],
    lambda: f64,
    ens: &Ensemble,
    positive_only: bool,
    normalization: SmoothingNormalization,
) -> Result<EstimateReport> {
    let law = DispersionLaw::Schroedinger;
    let mut points = Vec::new();
    for &n in ns {
        let g = block_geometry(n, lambda)?;
        let len = (-(n as f64)).exp2();
        let big_n = (n as f64).exp2();
        let scale = match normalization {
            SmoothingNormalization::Power => big_n.powf(-0.5),
            SmoothingNormalization::LogPower => (n as f64).max(1.0) * big_n.powf(-0.5),
        };
        let ratios: Vec<Option<f64>> = (0..ens.count)
            .map(|i| {
                let mut u0 = ens.sample(i, 0, g, n, law, (0.25 * len, 0.75 * len));
                if positive_only {
                    u0 = normalize(u0.apply_multiplier(false, |xi| C64::new(if xi > 0.0 { 1.0 } else { 0.0 }, 0.0)));
                }
                let norm = u0.l2_norm();
                (norm > 0.0).then(|| smoothing_lhs(&u0, len) / (scale * norm))
            })
            .collect();
        points.push(RatioPoint::from_ratios(n as f64, lambda, &ratios));
    }
    let id = match (normalization, positive_only) {
        (SmoothingNormalization::Power, false) => "smoothing",
        (SmoothingNormalization::Power, true) => "smoothing_positive",
        (SmoothingNormalization::LogPower, false) => "smoothing_log",
        (SmoothingNormalization::LogPower, true) => "smoothing_log_positive",
    };
    EstimateReport::from_points(id, points, 0.0, 0.1, 0.25)
}

/// ℓ²×ℓ² norm of `(a, b) ↦ Σ_{l<k} a_k b_l/(k - l)` on indices `N+1..=2N`.
pub fn smoothing_grid_operator_norm(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Invalid(format!("grid operator needs N >= 2, got {n}")));
    }
    let m = DMatrix::from_fn(n, n, |r, c| if c < r { 1.0 / (r - c) as f64 } else { 0.0 });
    Ok(m.singular_values().max())
}

// ---------------------------------------------------------------------------------------------
// Trilinear

/// Desk-scale analogues of the asymptotic constraints: separation gap 10 → 3, high threshold
/// 20 → 5; the "comparable" window |kᵢ - kⱼ| <= 5 is kept.
pub const GAP: usize = 3;
pub const HIGH: usize = 5;
pub const NEAR: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionClass {
    /// (i) high × low × low → high
    HighLowLow,
    /// (ii) high × high × low → high
    HighHighLowToHigh,
    /// (iii) high × high × high → high
    HighHighHigh,
    /// (iv) high × high × low → low
    HighHighLowToLow,
    /// (v) high × high × high → low
    HighHighHighToLow,
    /// (vi) low × low × low → low
    LowLowLow,
}

fn near(a: usize, b: usize) -> bool {
    a.abs_diff(b) <= NEAR
}

impl InteractionClass {
    pub const ALL: [Self; 6] = [
        Self::HighLowLow,
        Self::HighHighLowToHigh,
        Self::HighHighHigh,
        Self::HighHighLowToLow,
        Self::HighHighHighToLow,
        Self::LowLowLow,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::HighLowLow => "i",
            Self::HighHighLowToHigh => "ii",
            Self::HighHighHigh => "iii",
            Self::HighHighLowToLow => "iv",
            Self::HighHighHighToLow => "v",
            Self::LowLowLow => "vi",
        }
    }

    /// `α(k)` with the `0+` slack dropped.
    pub fn alpha(self, k: [usize; 4]) -> f64 {
        match self {
            Self::HighLowLow => (k[0] as f64 / 2.0).exp2(),
            Self::HighHighHigh => (k[3] as f64 / 2.0).exp2(),
            _ => 1.0,
        }
    }

    /// Checks the desk-scale constraints; `k = [k₁, k₂, k₃, k₄]` with `k₄` the output block.
    pub fn check(self, k: [usize; 4]) -> Result<()> {
        let [k1, k2, k3, k4] = k;
        let top = *k.iter().max().expect("four entries");
        let ok = match self {
            Self::HighLowLow => top >= HIGH && near(k3, k4) && k1 <= k2 && k2 + GAP <= k3,
            Self::HighHighLowToHigh => top >= HIGH && near(k3, k2) && k1 + GAP <= k3 && near(k3, k4),
            Self::HighHighHigh => top >= HIGH && k.iter().all(|&a| k.iter().all(|&b| near(a, b))),
            Self::HighHighLowToLow => top >= HIGH && near(k1, k2) && k3 + GAP <= k1 && k4 + GAP <= k1,
            Self::HighHighHighToLow => top >= HIGH && near(k1, k3) && near(k2, k3) && k4 + GAP <= k1,
            Self::LowLowLow => top <= HIGH,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("block tuple {k:?} violates the constraints of class ({})", self.label())))
        }
    }

    /// Classes whose constraints the tuple satisfies.
    pub fn diagnose(k: [usize; 4]) -> Vec<Self> {
        Self::ALL.into_iter().filter(|c| c.check(k).is_ok()).collect()
    }
}

/// Bound on the resonance function `|ω(ξ₄) ∓ ω(ξ₁) ± ω(ξ₂) ∓ ω(ξ₃)|` over the block tuple `k`.
pub fn resonance_bound(k: [usize; 4], law: DispersionLaw) -> f64 {
    let [a, b, c, d] = k.map(|ki| ((ki + 1) as f64).exp2());
    match law {
        // the Schrödinger resonance factors as 2(ξ₁ - ξ₂)(ξ₃ - ξ₂) = 2(ξ₄ - ξ₃)(ξ₄ - ξ₁)
        DispersionLaw::Schroedinger => 2.0 * (a + b).min(c + d) * (b + c).min(a + d),
        // |x|x| + y|y|| ≤ |x + y|(|x| + |y|) on each of the three pairings
        DispersionLaw::BenjaminOno => [a + b, c + d, a + c, b + d, b + c, a + d].into_iter().fold(f64::INFINITY, f64::min) * (a + b + c + d),
    }
}

/// `P_{k₄}∂_x` of the product of the free waves `η₀(t/width)·e^{itω}uᵢ`, stored on the smallest
/// grid holding block `k₄`.
fn trilinear_product(u0: [&Field; 3], law: DispersionLaw, k4: usize, width: f64, dt: f64, nt: usize) -> Result<SpaceTimeField<f64>> {
    let g = *u0[0].geometry();
    let m = g.grid_size();
    let out = g.with_grid_size(block_geometry(k4, g.lambda())?.grid_size().min(m))?;
    let fine = FourierPlan::new(g.with_grid_size(2 * m)?);
    let conj = law == DispersionLaw::Schroedinger;
    let keep: Vec<(usize, usize, f64)> = (0..out.grid_size())
        .filter(|&j| j != out.nyquist_index() && block_index(out.frequency(j)) == k4)
        .map(|j| (out.mode(j).rem_euclid(2 * m as i64) as usize, j, out.frequency(j)))
        .collect();
    let lift = |f: &Field| -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); 2 * m];
        for (j, &c) in f.coeffs().iter().enumerate() {
            if j != g.nyquist_index() {
                buf[g.mode(j).rem_euclid(2 * m as i64) as usize] = c;
            }
        }
        fine.inverse(&mut buf);
        buf
    };
    let t0 = -dt * (nt / 2) as f64;
    let half = 1.6 * width;
    let support = ((-half).max(t0), half.min(t0 + dt * (nt - 1) as f64));
    SpaceTimeField::from_fn(out, t0, dt, nt, support, |t| {
        let e = eta0(t / width);
        let mut row = vec![C64::new(0.0, 0.0); out.grid_size()];
        if e != 0.0 {
            let [a, b, c] = u0.map(|f| lift(&free_evolve(f, t, law)));
            let mut p: Vec<C64> = (0..2 * m).map(|i| a[i] * if conj { b[i].conj() } else { b[i] } * c[i]).collect();
            fine.forward(&mut p);
            for &(fi, j, xi) in &keep {
                row[j] = p[fi] * C64::new(0.0, xi * e * e * e);
            }
        }
        Field::from_coeffs(out, row, false).expect("finite product")
    })
}

/// One trilinear ratio `‖P_{k₄}∂_x(u v w)‖_{N_{k₄}} / Π‖uᵢ‖_{F_{kᵢ}}` (no `α`).
///
/// The factors are free waves tapered on the output time scale `2^{-k₄}`. A factor of higher
/// frequency sees that taper as flat, so its `F_{kᵢ}` norm is taken on a window of its own
/// length, where the sup over window positions is attained.
pub fn trilinear_sample(u0: [&Field; 3], k: [usize; 4], law: DispersionLaw) -> Result<Option<f64>> {
    let grid = |sigma: f64, width: f64| {
        let dt = std::f64::consts::PI / (2.0 * sigma);
        (dt, ((3.6 * width / dt).ceil() as usize).next_power_of_two())
    };
    let mut rhs = 1.0;
    for (f, &ki) in u0.iter().zip(&k[..3]) {
        let w = (-(ki.max(k[3]) as f64)).exp2();
        let (dt, nt) = grid(64.0 / w, w);
        rhs *= fk_norm(&SpaceTimeField::windowed_free(f, law, 0.0, w, dt, nt)?, ki, law)?;
    }
    if rhs == 0.0 {
        return Ok(None);
    }
    let width = (-(k[3] as f64)).exp2();
    let (dt, nt) = grid(resonance_bound(k, law) + 64.0 / width, width);
    let prod = trilinear_product(u0, law, k[3], width, dt, nt)?;
    Ok(Some(nk_norm(&prod, k[3], law)? / rhs))
}

/// Ratio/`α` over a sweep of block tuples; `sweep(k)` gives the abscissa for each tuple.
pub fn trilinear_ratio(
    class: InteractionClass,
    tuples: &[[usize; 4]],
    sweep: impl Fn([usize; 4]) -> usize,
    lambda: f64,
    ens: &Ensemble,
    law: DispersionLaw,
) -> Result<EstimateReport> {
    for &k in tuples {
        class.check(k)?;
    }
    let mut points = Vec::new();
    for &k in tuples {
        let top = *k.iter().max().expect("four entries");
        let g = block_geometry(top, lambda)?;
        let ens = ens.clone().real(law == DispersionLaw::BenjaminOno);
        let ratios: Vec<Option<f64>> = (0..ens.count)
            .map(|i| {
                let f = ens.focus(i, g, (0.0, 0.0));
                let a = ens.sample_at(i, 0, g, k[0], law, &f);
                let b = ens.sample_at(i, 1, g, k[1], law, &f);
                let c = ens.sample_at(i, 2, g, k[2], law, &f);
                Ok(trilinear_sample([&a, &b, &c], k, law)?.map(|r| r / class.alpha(k)))
            })
            .collect::<Result<_>>()?;
        points.push(RatioPoint::from_ratios(sweep(k) as f64, lambda, &ratios));
    }
    let tag = match law {
        DispersionLaw::BenjaminOno => "mbo",
        DispersionLaw::Schroedinger => "dnls",
    };
    EstimateReport::from_points(format!("trilinear_{}_{tag}", class.label()), points, 0.0, 0.2, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_power_law() {
        let pts: Vec<(f64, f64)> = (0..6).map(|n| (n as f64, -0.5 * n as f64 + 1.0)).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && f.residual < 1e-14);
        let flat: Vec<(f64, f64)> = (0..4).map(|n| (n as f64, 3.0)).collect();
        assert_eq!(fit_exponent(&flat).unwrap().slope, 0.0);
        assert!(fit_exponent(&pts[..2]).is_err());
    }

    #[test]
    fn admissibility() {
        assert!(check_admissible(f64::INFINITY, 2.0).is_ok());
        assert!(check_admissible(6.0, 6.0).is_ok());
        assert!(check_admissible(8.0, 4.0).is_ok());
        assert!(check_admissible(4.0, f64::INFINITY).is_err());
        assert!(check_admissible(4.0, 4.0).is_err());
    }

    #[test]
    fn grid_operator_small_cases() {
        // N = 2: a single entry 1/(4-3)
        assert!((smoothing_grid_operator_norm(2).unwrap() - 1.0).abs() < 1e-14);
        // N = 3: [[0,0,0],[1,0,0],[1/2,1,0]]
        let m = nalgebra::Matrix3::<f64>::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.5, 1.0, 0.0);
        let want = m.singular_values().max();
        assert!((smoothing_grid_operator_norm(3).unwrap() - want).abs() < 1e-14);
        assert!(smoothing_grid_operator_norm(1).is_err());
    }

    #[test]
    fn class_constraints() {
        assert!(InteractionClass::HighLowLow.check([1, 2, 6, 6]).is_ok());
        assert!(InteractionClass::HighLowLow.check([1, 4, 6, 6]).is_err());
        assert!(InteractionClass::LowLowLow.check([2, 2, 2, 2]).is_ok());
        assert!(InteractionClass::LowLowLow.check([6, 2, 2, 2]).is_err());
        assert!(InteractionClass::HighHighHigh.check([6, 6, 5, 6]).is_ok());
        assert!(InteractionClass::HighHighLowToLow.check([6, 6, 0, 0]).is_ok());
        let d = InteractionClass::diagnose([6, 6, 6, 0]);
        assert_eq!(d, vec![InteractionClass::HighHighHighToLow]);
    }
}
