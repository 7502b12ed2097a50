//! Fourier analysis on the rescaled circle of circumference `2πλ`.
//!
//! Conventions: the lattice is `ξ = m/λ` with `m ∈ [-M/2, M/2)`, and
//!
//! ```text
//! f̂(ξ) = ∫_0^{2πλ} f(x) e^{-iξx} dx            (trapezoid rule, exact for band-limited f)
//! f(x) = (2πλ)^{-1} Σ_ξ f̂(ξ) e^{iξx}
//! ‖f‖²_{L²} = (2π)^{-1} λ^{-1} Σ_ξ |f̂(ξ)|²
//! ```
//!
//! The Nyquist bin `m = -M/2` is stored but treated as unresolved: odd multipliers
//! (derivative, Hilbert transform) send it to zero and down-sampling drops it.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{cst, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGeometry<T> {
    lambda: T,
    grid_size: usize,
}

impl<T: Scalar> TorusGeometry<T> {
    pub fn new(lambda: T, grid_size: usize) -> Result<Self> {
        if !lambda.is_finite() || lambda < T::one() {
            return Err(Error::Geometry(format!("lambda must be finite and >= 1, got {lambda}")));
        }
        if grid_size < 2 || !grid_size.is_power_of_two() {
            return Err(Error::Geometry(format!("grid size must be a power of two >= 2, got {grid_size}")));
        }
        Ok(Self { lambda, grid_size })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn period(&self) -> T {
        T::TAU() * self.lambda
    }

    pub fn dx(&self) -> T {
        self.period() / cst(self.grid_size as f64)
    }

    /// Largest resolved frequency `M/(2λ)`.
    pub fn cutoff(&self) -> T {
        cst::<T>((self.grid_size / 2) as f64) / self.lambda
    }

    pub fn nyquist_index(&self) -> usize {
        self.grid_size / 2
    }

    /// Integer mode number stored at FFT index `j`.
    pub fn mode(&self, j: usize) -> i64 {
        let m = self.grid_size as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    pub fn index_of(&self, mode: i64) -> Option<usize> {
        let m = self.grid_size as i64;
        if mode >= -m / 2 && mode < m / 2 {
            Some(mode.rem_euclid(m) as usize)
        } else {
            None
        }
    }

    pub fn frequency(&self, j: usize) -> T {
        cst::<T>(self.mode(j) as f64) / self.lambda
    }

    pub fn frequencies(&self) -> Vec<T> {
        (0..self.grid_size).map(|j| self.frequency(j)).collect()
    }

    pub fn points(&self) -> Vec<T> {
        let dx = self.dx();
        (0..self.grid_size).map(|n| dx * cst(n as f64)).collect()
    }

    pub fn with_grid_size(&self, grid_size: usize) -> Result<Self> {
        Self::new(self.lambda, grid_size)
    }

    /// Highest dyadic block index touched by the lattice.
    pub fn max_block(&self) -> usize {
        block_index(self.cutoff())
    }
}

/// Sharp Littlewood–Paley block: `I_0 = (-2, 2)`, `I_k = {2^k <= |ξ| < 2^{k+1}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicBlock {
    pub k: usize,
}

impl DyadicBlock {
    pub fn new(k: usize) -> Self {
        Self { k }
    }

    pub fn of<T: Scalar>(xi: T) -> Self {
        Self { k: block_index(xi) }
    }

    pub fn contains<T: Scalar>(&self, xi: T) -> bool {
        block_index(xi) == self.k
    }

    /// Lower edge of `|ξ|` on the block (0 for `I_0`).
    pub fn lower(&self) -> f64 {
        if self.k == 0 {
            0.0
        } else {
            (self.k as f64).exp2()
        }
    }

    pub fn upper(&self) -> f64 {
        ((self.k + 1) as f64).exp2()
    }
}

pub fn block_index<T: Scalar>(xi: T) -> usize {
    let a = xi.abs();
    let two: T = cst(2.0);
    if a < two {
        return 0;
    }
    let mut k = a.log2().floor().to_usize().unwrap_or(1).max(1);
    while k > 1 && two.powi(k as i32) > a {
        k -= 1;
    }
    while two.powi(k as i32 + 1) <= a {
        k += 1;
    }
    k
}

/// Cached forward/inverse FFT pair for one grid, carrying the torus normalization.
#[derive(Clone)]
pub struct FourierPlan<T: Scalar> {
    geometry: TorusGeometry<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> FourierPlan<T> {
    pub fn new(geometry: TorusGeometry<T>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(geometry.grid_size());
        let inverse = planner.plan_fft_inverse(geometry.grid_size());
        Self { geometry, forward, inverse }
    }

    pub fn geometry(&self) -> &TorusGeometry<T> {
        &self.geometry
    }

    /// Samples to coefficients, in place.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.forward.process(buf);
        let dx = self.geometry.dx();
        buf.iter_mut().for_each(|c| *c *= dx);
    }

    /// Coefficients to samples, in place.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.inverse.process(buf);
        let w = T::one() / self.geometry.period();
        buf.iter_mut().for_each(|c| *c *= w);
    }
}

/// Truncated Fourier coefficients of a function on the rescaled torus, in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    geometry: TorusGeometry<T>,
    coeffs: Vec<Complex<T>>,
    real: bool,
}

impl<T: Scalar> SpectralField<T> {
    pub fn zeros(geometry: TorusGeometry<T>, real: bool) -> Self {
        Self { geometry, coeffs: vec![Complex::new(T::zero(), T::zero()); geometry.grid_size()], real }
    }

    /// Builds a field from coefficients; with `real` set, conjugate symmetry is imposed exactly.
    pub fn from_coeffs(geometry: TorusGeometry<T>, coeffs: Vec<Complex<T>>, real: bool) -> Result<Self> {
        if coeffs.len() != geometry.grid_size() {
            return Err(Error::SizeMismatch { expected: geometry.grid_size(), got: coeffs.len() });
        }
        if let Some(i) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut f = Self { geometry, coeffs, real };
        if real {
            f.symmetrize();
        }
        Ok(f)
    }

    /// Single complex exponential `amp·e^{i m x/λ}` expressed through its coefficient.
    pub fn mode(geometry: TorusGeometry<T>, mode: i64, amp: Complex<T>) -> Result<Self> {
        let j = geometry
            .index_of(mode)
            .ok_or_else(|| Error::Invalid(format!("mode {mode} outside lattice")))?;
        let mut f = Self::zeros(geometry, false);
        f.coeffs[j] = amp;
        Ok(f)
    }

    pub fn geometry(&self) -> &TorusGeometry<T> {
        &self.geometry
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient at integer mode `m` (zero outside the lattice).
    pub fn at_mode(&self, mode: i64) -> Complex<T> {
        self.geometry.index_of(mode).map_or(Complex::new(T::zero(), T::zero()), |j| self.coeffs[j])
    }

    pub fn symmetrize(&mut self) {
        let n = self.geometry.grid_size();
        for j in 0..n {
            let m = self.geometry.mode(j);
            match self.geometry.index_of(-m) {
                Some(p) if p > j => {
                    let avg = (self.coeffs[j] + self.coeffs[p].conj()) * cst::<T>(0.5);
                    self.coeffs[j] = avg;
                    self.coeffs[p] = avg.conj();
                }
                Some(p) if p == j => self.coeffs[j].im = T::zero(),
                Some(_) => {}
                None => self.coeffs[j].im = T::zero(),
            }
        }
        self.real = true;
    }

    /// Largest deviation from `û(-ξ) = conj û(ξ)` over resolved modes.
    pub fn conjugate_symmetry_defect(&self) -> T {
        (0..self.geometry.grid_size())
            .filter_map(|j| {
                let m = self.geometry.mode(j);
                self.geometry.index_of(-m).map(|p| (self.coeffs[j] - self.coeffs[p].conj()).norm())
            })
            .fold(T::zero(), T::max)
    }

    pub fn samples_with(&self, plan: &FourierPlan<T>) -> Vec<Complex<T>> {
        let mut buf = self.coeffs.clone();
        plan.inverse(&mut buf);
        buf
    }

    pub fn samples(&self) -> Vec<Complex<T>> {
        inverse_transform(self)
    }

    pub fn real_samples(&self) -> Vec<T> {
        self.samples().into_iter().map(|c| c.re).collect()
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        let real = self.real && c.im == T::zero();
        Self { geometry: self.geometry, coeffs: self.coeffs.iter().map(|&z| z * c).collect(), real }
    }

    pub fn scale_real(&self, c: T) -> Self {
        self.scale(Complex::new(c, T::zero()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { geometry: self.geometry, coeffs, real: self.real && other.real })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_real(-T::one()))
    }

    pub fn conj(&self) -> Self {
        // (ū)^(ξ) = conj û(-ξ)
        let coeffs = (0..self.geometry.grid_size())
            .map(|j| self.at_mode(-self.geometry.mode(j)).conj())
            .collect();
        Self { geometry: self.geometry, coeffs, real: self.real }
    }

    /// Mirror `x ↦ -x`.
    pub fn reflect(&self) -> Self {
        let coeffs = (0..self.geometry.grid_size())
            .map(|j| self.at_mode(-self.geometry.mode(j)))
            .collect();
        Self { geometry: self.geometry, coeffs, real: self.real }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.geometry != other.geometry {
            return Err(Error::Geometry("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Applies a Fourier multiplier `m(ξ)`; `odd` multipliers vanish on the Nyquist bin.
    pub fn apply_multiplier(&self, odd: bool, m: impl Fn(T) -> Complex<T>) -> Self {
        let nyq = self.geometry.nyquist_index();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                if odd && j == nyq {
                    Complex::new(T::zero(), T::zero())
                } else {
                    c * m(self.geometry.frequency(j))
                }
            })
            .collect();
        Self { geometry: self.geometry, coeffs, real: self.real }
    }

    pub fn hilbert_transform(&self) -> Self {
        self.apply_multiplier(true, |xi| Complex::new(T::zero(), -signum0(xi)))
    }

    pub fn derivative(&self) -> Self {
        self.apply_multiplier(true, |xi| Complex::new(T::zero(), xi))
    }

    pub fn lp_project(&self, k: usize) -> Self {
        let block = DyadicBlock::new(k);
        self.apply_multiplier(false, |xi| {
            if block.contains(xi) {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
    }

    /// Blocks `0..=max_block` that carry a nonzero coefficient.
    pub fn active_blocks(&self) -> Vec<usize> {
        let mut seen = vec![false; self.geometry.max_block() + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() > T::zero() {
                seen[block_index(self.geometry.frequency(j))] = true;
            }
        }
        seen.iter().enumerate().filter(|(_, &s)| s).map(|(k, _)| k).collect()
    }

    /// `‖P_k f‖_{L²}` for every block up to the grid's highest.
    pub fn block_l2_norms(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.geometry.max_block() + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            acc[block_index(self.geometry.frequency(j))] += c.norm_sqr();
        }
        let w = T::one() / self.geometry.period();
        acc.into_iter().map(|s| (s * w).sqrt()).collect()
    }

    /// `‖f‖_{L²(λ𝕋)}` from the coefficients.
    pub fn l2_norm(&self) -> T {
        let s: T = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s / self.geometry.period()).sqrt()
    }

    /// `‖f̂‖` under the counting measure `λ^{-1}Σ_ξ`.
    pub fn coefficient_norm(&self) -> T {
        let s: T = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s / self.geometry.lambda()).sqrt()
    }

    /// `∫ f ḡ dx` through the coefficients.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.check_same(other)?;
        let s = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b.conj());
        Ok(s / self.geometry.period())
    }

    pub fn sobolev_norm(&self, s: T) -> T {
        let acc: T = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| japanese_bracket(self.geometry.frequency(j)).powf(s + s) * c.norm_sqr())
            .sum();
        (acc / self.geometry.lambda()).sqrt()
    }

    /// Same function on a grid of a different size (zero-padding or truncation).
    pub fn resample(&self, grid_size: usize) -> Result<Self> {
        let geometry = self.geometry.with_grid_size(grid_size)?;
        let mut out = Self::zeros(geometry, self.real);
        let old_nyq = -(self.geometry.grid_size() as i64) / 2;
        for (j, &c) in self.coeffs.iter().enumerate() {
            let m = self.geometry.mode(j);
            if grid_size > self.geometry.grid_size() && m == old_nyq {
                // split the unresolved bin symmetrically
                let half = c * cst::<T>(0.5);
                out.coeffs[geometry.index_of(m).expect("inside larger grid")] += half;
                out.coeffs[geometry.index_of(-m).expect("inside larger grid")] += half;
                continue;
            }
            if let Some(i) = geometry.index_of(m) {
                if i != geometry.nyquist_index() || grid_size >= self.geometry.grid_size() {
                    out.coeffs[i] += c;
                }
            }
        }
        Ok(out)
    }

    /// `‖f‖_{L^p}`; for `p ∉ {2, ∞}` the samples are first interpolated onto a 4× finer grid.
    pub fn lebesgue_norm(&self, p: f64) -> Result<T> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Exponent(p));
        }
        if p == 2.0 || p.is_infinite() {
            return lebesgue_norm_samples(&self.samples(), self.geometry.dx(), p);
        }
        let fine = self.resample(self.geometry.grid_size() * 4)?;
        lebesgue_norm_samples(&fine.samples(), fine.geometry.dx(), p)
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }
}

/// Trapezoid (periodic) quadrature of `(∫|f|^p)^{1/p}`; `p = ∞` is the sample maximum.
pub fn lebesgue_norm_samples<T: Scalar>(samples: &[Complex<T>], dx: T, p: f64) -> Result<T> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Exponent(p));
    }
    if p.is_infinite() {
        return Ok(samples.iter().map(|c| c.norm()).fold(T::zero(), T::max));
    }
    let pt: T = cst(p);
    let s: T = samples.iter().map(|c| c.norm().powf(pt)).sum();
    Ok((s * dx).powf(T::one() / pt))
}

pub fn forward_transform<T: Scalar>(geometry: TorusGeometry<T>, samples: &[Complex<T>]) -> Result<SpectralField<T>> {
    if samples.len() != geometry.grid_size() {
        return Err(Error::SizeMismatch { expected: geometry.grid_size(), got: samples.len() });
    }
    if let Some(i) = samples.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut buf = samples.to_vec();
    FourierPlan::new(geometry).forward(&mut buf);
    Ok(SpectralField { geometry, coeffs: buf, real: false })
}

pub fn forward_transform_real<T: Scalar>(geometry: TorusGeometry<T>, samples: &[T]) -> Result<SpectralField<T>> {
    let c: Vec<_> = samples.iter().map(|&x| Complex::new(x, T::zero())).collect();
    let mut f = forward_transform(geometry, &c)?;
    f.symmetrize();
    Ok(f)
}

pub fn inverse_transform<T: Scalar>(field: &SpectralField<T>) -> Vec<Complex<T>> {
    field.samples_with(&FourierPlan::new(field.geometry))
}

pub fn signum0<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
pub fn japanese_bracket<T: Scalar>(xi: T) -> T {
    (T::one() + xi * xi).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn geom(lambda: f64, m: usize) -> TorusGeometry<f64> {
        TorusGeometry::new(lambda, m).unwrap()
    }

    #[test]
    fn geometry_rejects_bad_parameters() {
        assert!(TorusGeometry::new(0.5, 16).is_err());
        assert!(TorusGeometry::new(1.0, 12).is_err());
        assert!(TorusGeometry::new(f64::NAN, 16).is_err());
    }

    #[test]
    fn mode_index_round_trip() {
        let g = geom(2.0, 16);
        for j in 0..16 {
            assert_eq!(g.index_of(g.mode(j)), Some(j));
        }
        assert_eq!(g.mode(8), -8);
        assert_eq!(g.index_of(8), None);
        assert_relative_eq!(g.frequency(3), 1.5);
    }

    #[test]
    fn constant_maps_to_two_pi_lambda() {
        for &lambda in &[1.0, 2.0, 4.0] {
            let g = geom(lambda, 32);
            let f = forward_transform_real(g, &vec![3.0; 32]).unwrap();
            assert_relative_eq!(f.coeffs()[0].re, 2.0 * PI * lambda * 3.0, max_relative = 1e-14);
            assert!(f.coeffs()[1..].iter().all(|c| c.norm() < 1e-12));
        }
    }

    #[test]
    fn single_exponential() {
        let g = geom(1.0, 16);
        let s: Vec<_> = g.points().iter().map(|&x| Complex::new(x.cos(), x.sin())).collect();
        let f = forward_transform(g, &s).unwrap();
        for (j, c) in f.coeffs().iter().enumerate() {
            let want = if g.mode(j) == 1 { 2.0 * PI } else { 0.0 };
            assert!((c.re - want).abs() < 1e-12 && c.im.abs() < 1e-12, "mode {j}: {c}");
        }
    }

    #[test]
    fn forward_rejects_bad_input() {
        let g = geom(1.0, 8);
        assert!(matches!(forward_transform_real(g, &[0.0; 4]), Err(Error::SizeMismatch { .. })));
        let mut s = vec![0.0; 8];
        s[3] = f64::NAN;
        assert_eq!(forward_transform_real(g, &s), Err(Error::NonFinite(3)));
    }

    #[test]
    fn hilbert_of_cosine_is_sine() {
        let g = geom(1.0, 32);
        let x = g.points();
        let f = forward_transform_real(g, &x.iter().map(|t| t.cos()).collect::<Vec<_>>()).unwrap();
        let h = f.hilbert_transform().real_samples();
        for (hx, t) in h.iter().zip(&x) {
            assert!((hx - t.sin()).abs() < 1e-13);
        }
        let c = forward_transform_real(g, &[1.0; 32]).unwrap();
        assert!(c.hilbert_transform().max_abs_coeff() == 0.0);
    }

    #[test]
    fn block_edges() {
        assert_eq!(block_index(1.99), 0);
        assert_eq!(block_index(-1.5), 0);
        assert_eq!(block_index(2.0), 1);
        assert_eq!(block_index(3.99), 1);
        assert_eq!(block_index(4.0), 2);
        assert_eq!(block_index(-1024.0), 10);
        assert_eq!(block_index(1023.9), 9);
    }

    #[test]
    fn projection_of_single_mode() {
        let g = geom(1.0, 16);
        let f = SpectralField::mode(g, 3, Complex::new(1.0, 0.0)).unwrap();
        assert_eq!(f.lp_project(1), f);
        assert_eq!(f.lp_project(0).max_abs_coeff(), 0.0);
    }

    #[test]
    fn sobolev_norm_of_unit_mode() {
        let g = geom(1.0, 16);
        let f = SpectralField::mode(g, 1, Complex::new(2.0 * PI, 0.0)).unwrap();
        for &s in &[0.0, 0.3, 1.0, -0.5] {
            assert_relative_eq!(f.sobolev_norm(s), 2.0 * PI * 2f64.powf(s / 2.0), max_relative = 1e-14);
        }
        assert_relative_eq!(f.sobolev_norm(0.0), f.coefficient_norm());
    }

    #[test]
    fn lebesgue_norm_examples() {
        let g = geom(1.0, 64);
        let one = forward_transform_real(g, &[1.0; 64]).unwrap();
        assert_relative_eq!(one.lebesgue_norm(2.0).unwrap(), (2.0 * PI).sqrt(), max_relative = 1e-14);
        let cos = forward_transform_real(g, &g.points().iter().map(|t| t.cos()).collect::<Vec<_>>()).unwrap();
        assert_relative_eq!(cos.lebesgue_norm(2.0).unwrap(), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(cos.lebesgue_norm(f64::INFINITY).unwrap(), 1.0, max_relative = 1e-14);
        // ∫cos⁴ = 3π/4
        assert_relative_eq!(cos.lebesgue_norm(4.0).unwrap(), (0.75 * PI).powf(0.25), max_relative = 1e-13);
        assert_eq!(cos.lebesgue_norm(0.5), Err(Error::Exponent(0.5)));
    }

    #[test]
    fn resample_preserves_function() {
        let g = geom(2.0, 16);
        let x = g.points();
        let f = forward_transform_real(g, &x.iter().map(|t| (0.5 * t).sin() + 0.25 * (1.5 * t).cos()).collect::<Vec<_>>())
            .unwrap();
        let up = f.resample(64).unwrap();
        assert_relative_eq!(up.l2_norm(), f.l2_norm(), max_relative = 1e-14);
        let back = up.resample(16).unwrap();
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let g = TorusGeometry::<f32>::new(1.0, 32).unwrap();
        let s: Vec<f32> = g.points().iter().map(|t| (2.0 * t).cos() + 0.5).collect();
        let f = forward_transform_real(g, &s).unwrap();
        for (a, b) in f.real_samples().iter().zip(&s) {
            assert!((a - b).abs() < 1e-5);
        }
    }
}
