//! Space-time fields and the shorttime restriction norms `X_k`, `F_k`, `N_k`, plus the
//! assembled `E^s`, `F^s`, `N^s` norms.
//!
//! A [`SpaceTimeField`] stores `û(t_n, ξ)` on a uniform time grid. Norms demodulate each mode
//! by `e^{-itω(ξ)}` before the time transform, so the transform variable is directly the
//! modulation `σ = τ - ω(ξ)`; the time step only has to resolve modulation, not `ω` itself.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{free_evolve, DispersionLaw, Trajectory};
use crate::scalar::{cst, Scalar};
use crate::spectral::{block_index, SpectralField, TorusGeometry};

const ETA_INNER: f64 = 1.25;
const ETA_OUTER: f64 = 1.6;
/// Zero-padding factor for the local time transforms inside `F_k`/`N_k` windows.
const LOCAL_PAD: usize = 8;

fn mollifier_exp(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    let a = mollifier_exp(t);
    let b = mollifier_exp(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// The even bump `η₀`: 1 on `[-5/4, 5/4]`, 0 outside `(-8/5, 8/5)`.
pub fn eta0(x: f64) -> f64 {
    1.0 - smooth_step((x.abs() - ETA_INNER) / (ETA_OUTER - ETA_INNER))
}

/// `η_j(τ) = η₀(τ/2^j) - η₀(τ/2^{j-1})` for `j >= 1`, `η₀` for `j = 0`.
pub fn eta(j: usize, x: f64) -> f64 {
    if j == 0 {
        eta0(x)
    } else {
        let s = (j as f64).exp2();
        eta0(x / s) - eta0(2.0 * x / s)
    }
}

/// Number of modulation blocks needed so that `Σ_{j<J} η_j ≡ 1` on `|σ| <= sigma_max`.
pub fn modulation_blocks(sigma_max: f64) -> usize {
    let mut j = 0;
    while ETA_INNER * (j as f64).exp2() < sigma_max {
        j += 1;
    }
    j + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    E,
    F,
    N,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField<T> {
    geometry: TorusGeometry<T>,
    t0: T,
    dt: T,
    nt: usize,
    /// row-major `[time][fft index]`
    values: Vec<Complex<T>>,
    support: (T, T),
}

impl<T: Scalar> SpaceTimeField<T> {
    pub fn new(geometry: TorusGeometry<T>, t0: T, dt: T, nt: usize, values: Vec<Complex<T>>, support: (T, T)) -> Result<Self> {
        if nt < 2 || !nt.is_power_of_two() {
            return Err(Error::Invalid(format!("time sample count must be a power of two, got {nt}")));
        }
        if !(dt > T::zero()) {
            return Err(Error::Invalid("time step must be positive".into()));
        }
        if values.len() != nt * geometry.grid_size() {
            return Err(Error::SizeMismatch { expected: nt * geometry.grid_size(), got: values.len() });
        }
        let t_end = t0 + dt * cst((nt - 1) as f64);
        if support.0 < t0 || support.1 > t_end || support.0 > support.1 {
            return Err(Error::Invalid("declared time support must lie inside the grid".into()));
        }
        Ok(Self { geometry, t0, dt, nt, values, support })
    }

    /// Samples `f(t)` on `t_n = t0 + n·dt`.
    pub fn from_fn(
        geometry: TorusGeometry<T>,
        t0: T,
        dt: T,
        nt: usize,
        support: (T, T),
        f: impl Fn(T) -> SpectralField<T> + Sync,
    ) -> Result<Self> {
        let rows: Vec<Vec<Complex<T>>> = (0..nt)
            .into_par_iter()
            .map(|n| f(t0 + dt * cst(n as f64)).into_coeffs())
            .collect();
        Self::new(geometry, t0, dt, nt, rows.concat(), support)
    }

    /// `η₀((t - center)/width) · e^{itω} u₀` on a grid of `nt` samples of spacing `dt`
    /// centred on `center`.
    pub fn windowed_free(u0: &SpectralField<T>, law: DispersionLaw, center: T, width: T, dt: T, nt: usize) -> Result<Self> {
        let t0 = center - dt * cst((nt / 2) as f64);
        let half = width * cst(ETA_OUTER);
        let t_end = t0 + dt * cst((nt - 1) as f64);
        let support = ((center - half).max(t0), (center + half).min(t_end));
        Self::from_fn(*u0.geometry(), t0, dt, nt, support, |t| {
            let w = eta0(crate::scalar::f64_of((t - center) / width));
            free_evolve(u0, t, law).scale_real(cst(w))
        })
    }

    /// Trajectory on `[0, T]` extended by the free flow of its end states and smoothly tapered
    /// to zero over `pad` on each side.
    pub fn from_trajectory(traj: &Trajectory<T>, law: DispersionLaw, pad: T) -> Result<Self> {
        let dt = traj.spacing();
        if traj.states.len() < 2 || !(dt > T::zero()) {
            return Err(Error::Invalid("trajectory needs at least two uniformly spaced snapshots".into()));
        }
        let n_pad = (pad / dt).ceil().to_usize().unwrap_or(0);
        let n_core = traj.states.len();
        let nt = (n_core + 2 * n_pad).next_power_of_two();
        let t0 = -dt * cst(n_pad as f64);
        let t_final = *traj.times.last().expect("nonempty");
        let first = &traj.states[0];
        let last = traj.last();
        let geometry = *first.geometry();
        let padf = crate::scalar::f64_of(dt * cst(n_pad.max(1) as f64));
        Self::from_fn(geometry, t0, dt, nt, (T::zero(), t_final), |t| {
            let n = ((t - t0) / dt).round().to_usize().unwrap_or(0);
            if n >= n_pad && n < n_pad + n_core {
                traj.states[n - n_pad].clone()
            } else if n < n_pad {
                let taper = 1.0 - smooth_step(crate::scalar::f64_of(-t) / padf);
                free_evolve(first, t, law).scale_real(cst(taper))
            } else {
                let s = t - t_final;
                let taper = 1.0 - smooth_step(crate::scalar::f64_of(s) / padf);
                free_evolve(last, s, law).scale_real(cst(taper))
            }
        })
    }

    pub fn geometry(&self) -> &TorusGeometry<T> {
        &self.geometry
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn support(&self) -> (T, T) {
        self.support
    }

    pub fn time(&self, n: usize) -> T {
        self.t0 + self.dt * cst(n as f64)
    }

    pub fn row(&self, n: usize) -> &[Complex<T>] {
        let m = self.geometry.grid_size();
        &self.values[n * m..(n + 1) * m]
    }

    pub fn slice(&self, n: usize) -> SpectralField<T> {
        SpectralField::from_coeffs(self.geometry, self.row(n).to_vec(), false).expect("finite values")
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    fn with_values(&self, values: Vec<Complex<T>>) -> Self {
        Self { values, ..self.clone() }
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        self.with_values(self.values.iter().map(|&v| v * c).collect())
    }

    /// Shifts the field in time by `s` (grid, values and support move together).
    pub fn translate(&self, s: T) -> Self {
        Self { t0: self.t0 + s, support: (self.support.0 + s, self.support.1 + s), ..self.clone() }
    }

    /// Applies `f` to every time slice.
    pub fn map_slices(&self, f: impl Fn(&SpectralField<T>) -> SpectralField<T> + Sync) -> Self {
        let rows: Vec<Vec<Complex<T>>> = (0..self.nt).into_par_iter().map(|n| f(&self.slice(n)).into_coeffs()).collect();
        self.with_values(rows.concat())
    }

    pub fn project(&self, k: usize) -> Self {
        let m = self.geometry.grid_size();
        let keep: Vec<bool> = (0..m).map(|j| block_index(self.geometry.frequency(j)) == k).collect();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if keep[i % m] { v } else { Complex::new(T::zero(), T::zero()) })
            .collect();
        self.with_values(values)
    }

    pub fn active_blocks(&self) -> Vec<usize> {
        let m = self.geometry.grid_size();
        let mut seen = vec![false; self.geometry.max_block() + 1];
        for (i, v) in self.values.iter().enumerate() {
            if v.norm_sqr() > T::zero() {
                seen[block_index(self.geometry.frequency(i % m))] = true;
            }
        }
        seen.iter().enumerate().filter(|(_, &s)| s).map(|(k, _)| k).collect()
    }

    /// Errors unless every coefficient outside `I_k` is negligible.
    pub fn check_block_support(&self, k: usize) -> Result<()> {
        let m = self.geometry.grid_size();
        let scale = self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max);
        let tol = scale * cst(1e-12);
        for (i, v) in self.values.iter().enumerate() {
            if v.norm() > tol && block_index(self.geometry.frequency(i % m)) != k {
                return Err(Error::Support { block: k });
            }
        }
        Ok(())
    }

    /// `sup_n ‖u(t_n)‖_{L²}`.
    pub fn sup_l2(&self) -> T {
        let w = T::one() / self.geometry.period();
        (0..self.nt)
            .map(|n| (self.row(n).iter().map(|c| c.norm_sqr()).sum::<T>() * w).sqrt())
            .fold(T::zero(), T::max)
    }

    /// `(∫∫|u|² dx dt)^{1/2}` by the rectangle rule in time.
    pub fn l2_spacetime(&self) -> T {
        let s: T = self.values.iter().map(|c| c.norm_sqr()).sum();
        (s * self.dt / self.geometry.period()).sqrt()
    }

    /// Full space-time transform `ṽ(ξ, τ_l)` on the grid's own `τ` lattice, row-major
    /// `[τ index][fft index]`.
    pub fn spacetime_transform(&self) -> Vec<Complex<T>> {
        let m = self.geometry.grid_size();
        let fft = FftPlanner::new().plan_fft_forward(self.nt);
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.values.len()];
        let mut col = vec![Complex::new(T::zero(), T::zero()); self.nt];
        let taus = self.tau_grid();
        for j in 0..m {
            for (n, c) in col.iter_mut().enumerate() {
                *c = self.values[n * m + j];
            }
            fft.process(&mut col);
            for (l, c) in col.iter().enumerate() {
                // account for the grid origin t0: e^{-i t0 τ}
                out[l * m + j] = *c * self.dt * Complex::from_polar(T::one(), -self.t0 * taus[l]);
            }
        }
        out
    }

    pub fn inverse_spacetime_transform(&self, transformed: &[Complex<T>]) -> Result<Self> {
        let m = self.geometry.grid_size();
        if transformed.len() != self.values.len() {
            return Err(Error::SizeMismatch { expected: self.values.len(), got: transformed.len() });
        }
        let fft = FftPlanner::new().plan_fft_inverse(self.nt);
        let taus = self.tau_grid();
        let mut values = vec![Complex::new(T::zero(), T::zero()); self.values.len()];
        let mut col = vec![Complex::new(T::zero(), T::zero()); self.nt];
        let w = T::one() / (self.dt * cst(self.nt as f64));
        for j in 0..m {
            for l in 0..self.nt {
                col[l] = transformed[l * m + j] * Complex::from_polar(T::one(), self.t0 * taus[l]);
            }
            fft.process(&mut col);
            for n in 0..self.nt {
                values[n * m + j] = col[n] * w;
            }
        }
        Ok(self.with_values(values))
    }

    pub fn tau_grid(&self) -> Vec<T> {
        tau_grid(self.nt, self.dt)
    }
}

fn tau_grid<T: Scalar>(p: usize, dt: T) -> Vec<T> {
    let d = T::TAU() / (dt * cst(p as f64));
    (0..p)
        .map(|l| if l < p / 2 { d * cst(l as f64) } else { d * cst(l as f64 - p as f64) })
        .collect()
}

/// What to do with `ṽ(ξ, ω+σ)` before the modulation decomposition.
#[derive(Clone, Copy)]
enum Weight {
    None,
    /// `(σ + i·2^k)^{-1}`
    Resolvent(f64),
}

/// Σ_j 2^{jb} ‖η_j(σ)·ṽ‖_{L²(λ^{-1}Σ_ξ) L²_σ} for the (already windowed) restriction of `f`
/// to time indices `lo..hi`.
#[allow(clippy::too_many_arguments)]
fn x_norm_window<T: Scalar>(
    f: &SpaceTimeField<T>,
    lo: usize,
    hi: usize,
    window: &dyn Fn(T) -> T,
    law: DispersionLaw,
    b: f64,
    weight: Weight,
    modes: &[usize],
    fft: &Arc<dyn Fft<T>>,
    p: usize,
) -> T {
    let m = f.geometry.grid_size();
    let dt = f.dt;
    let taus = tau_grid::<T>(p, dt);
    let dsigma = T::TAU() / (dt * cst(p as f64));
    let sigma_max = std::f64::consts::PI / crate::scalar::f64_of(dt);
    let nj = modulation_blocks(sigma_max);
    // each σ meets at most two of the η_j
    let eta_tab: Vec<Vec<(usize, f64)>> = taus
        .iter()
        .map(|&s| (0..nj).map(|j| (j, eta(j, crate::scalar::f64_of(s)))).filter(|e| e.1 != 0.0).collect())
        .collect();
    let mut acc = vec![0.0f64; nj];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); p];
    for &j in modes {
        let w = f.geometry.frequency(j);
        let om = law.omega(w);
        buf.iter_mut().for_each(|z| *z = Complex::new(T::zero(), T::zero()));
        for n in lo..hi {
            let t = f.time(n);
            let wt = window(t);
            if wt == T::zero() {
                continue;
            }
            buf[n - lo] = f.values[n * m + j] * Complex::from_polar(wt, -t * om);
        }
        fft.process(&mut buf);
        for (l, z) in buf.iter().enumerate() {
            let mut v = *z * dt;
            if let Weight::Resolvent(two_k) = weight {
                v /= Complex::new(taus[l], cst(two_k));
            }
            let a2 = crate::scalar::f64_of(v.norm_sqr());
            if a2 == 0.0 {
                continue;
            }
            for &(jj, e) in &eta_tab[l] {
                acc[jj] += e * e * a2;
            }
        }
    }
    let scale = crate::scalar::f64_of(dsigma / f.geometry.lambda());
    let total: f64 = acc
        .iter()
        .enumerate()
        .map(|(j, s)| (j as f64 * b).exp2() * (s * scale).sqrt())
        .sum();
    cst(total)
}

fn block_modes<T: Scalar>(g: &TorusGeometry<T>, k: usize) -> Vec<usize> {
    (0..g.grid_size())
        .filter(|&j| j != g.nyquist_index() && block_index(g.frequency(j)) == k)
        .collect()
}

/// `X_k` norm with modulation exponent `b` of the whole field.
pub fn xk_norm<T: Scalar>(f: &SpaceTimeField<T>, k: usize, b: f64, law: DispersionLaw) -> Result<T> {
    f.check_block_support(k)?;
    let p = f.nt * LOCAL_PAD;
    let fft = FftPlanner::new().plan_fft_forward(p);
    Ok(x_norm_window(f, 0, f.nt, &|_| T::one(), law, b, Weight::None, &block_modes(&f.geometry, k), &fft, p))
}

/// Window centres at spacing `2^{-k}/4` covering `[a, b]`.
pub fn window_centres<T: Scalar>(support: (T, T), k: usize) -> Vec<T> {
    let step: T = cst::<T>(0.25) / cst((k as f64).exp2());
    let count = ((support.1 - support.0) / step).floor().to_usize().unwrap_or(0);
    let mut c: Vec<T> = (0..=count).map(|i| support.0 + step * cst(i as f64)).collect();
    if *c.last().expect("nonempty") < support.1 {
        c.push(support.1);
    }
    c
}

fn windowed_sup<T: Scalar>(f: &SpaceTimeField<T>, k: usize, b: f64, law: DispersionLaw, weight: Weight) -> Result<T> {
    f.check_block_support(k)?;
    let modes = block_modes(&f.geometry, k);
    if modes.is_empty() {
        return Ok(T::zero());
    }
    let scale: T = cst((k as f64).exp2());
    let half = cst::<T>(ETA_OUTER) / scale;
    let len = ((half + half) / f.dt).ceil().to_usize().unwrap_or(1) + 2;
    let p = (len * LOCAL_PAD).next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(p);
    let centres = window_centres(f.support, k);
    let vals: Vec<T> = centres
        .par_iter()
        .map(|&c| {
            let lo_t = ((c - half - f.t0) / f.dt).floor().max(T::zero());
            let lo = lo_t.to_usize().unwrap_or(0).min(f.nt);
            let hi = (lo + len).min(f.nt);
            let window = move |t: T| cst::<T>(eta0(crate::scalar::f64_of((t - c) * scale)));
            x_norm_window(f, lo, hi, &window, law, b, weight, &modes, &fft, p)
        })
        .collect();
    Ok(vals.into_iter().fold(T::zero(), T::max))
}

/// `F_k`: sup over window centres of the `X_k` norm of `η₀(2^k(t - t_c))·u`.
pub fn fk_norm<T: Scalar>(u: &SpaceTimeField<T>, k: usize, law: DispersionLaw) -> Result<T> {
    windowed_sup(u, k, 0.5, law, Weight::None)
}

/// `F_k` with general modulation exponent `b`.
pub fn fk_norm_b<T: Scalar>(u: &SpaceTimeField<T>, k: usize, b: f64, law: DispersionLaw) -> Result<T> {
    windowed_sup(u, k, b, law, Weight::None)
}

/// `N_k`: as `F_k` with the resolvent weight `(τ - ω(ξ) + i2^k)^{-1}`.
pub fn nk_norm<T: Scalar>(v: &SpaceTimeField<T>, k: usize, law: DispersionLaw) -> Result<T> {
    windowed_sup(v, k, 0.5, law, Weight::Resolvent((k as f64).exp2()))
}

/// ℓ² sum over blocks of `2^{2ks}·(block value)²`.
pub fn assembled_norm<T: Scalar>(u: &SpaceTimeField<T>, s: f64, kind: NormKind, law: DispersionLaw) -> Result<T> {
    let mut acc = 0.0;
    for k in u.active_blocks() {
        let pk = u.project(k);
        let v = match kind {
            NormKind::E => pk.sup_l2(),
            NormKind::F => fk_norm(&pk, k, law)?,
            NormKind::N => nk_norm(&pk, k, law)?,
        };
        let v = crate::scalar::f64_of(v);
        acc += (2.0 * k as f64 * s).exp2() * v * v;
    }
    Ok(cst(acc.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_support_and_plateau() {
        assert_eq!(eta0(0.0), 1.0);
        assert_eq!(eta0(1.25), 1.0);
        assert_eq!(eta0(-1.2), 1.0);
        assert_eq!(eta0(1.6), 0.0);
        assert!(eta0(1.4) > 0.0 && eta0(1.4) < 1.0);
        for j in 1..8 {
            let s = (j as f64).exp2();
            assert_eq!(eta(j, 0.5 * s * 1.25 * 0.99), 0.0);
            assert_eq!(eta(j, s * 1.6 * 1.01), 0.0);
        }
    }

    #[test]
    fn partition_telescopes() {
        let nj = modulation_blocks(1000.0);
        for i in 0..2000 {
            let x = -1000.0 + i as f64;
            let s: f64 = (0..nj).map(|j| eta(j, x)).sum();
            assert!((s - 1.0).abs() < 1e-12, "x = {x}: {s}");
        }
    }

    #[test]
    fn centres_cover_support() {
        let c = window_centres((0.0f64, 1.0), 2);
        assert_eq!(c.len(), 17);
        assert_eq!(c[16], 1.0);
    }
}
