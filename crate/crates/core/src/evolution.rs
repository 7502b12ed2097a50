//! Free propagators and an integrating-factor RK4 integrator for
//!
//! ```text
//! mBO:   ∂_t u + H∂_xx u = σ ∂_x(u³)/3          (real u)
//! dNLS:  i∂_t u + ∂_xx u = i ∂_x(|u|²u)
//! ```
//!
//! In Fourier variables both read `∂_t û = iω(ξ)û + N̂(u)(ξ)`, so the linear part is applied
//! exactly per mode and only the cubic term is stepped.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cst, Scalar};
use crate::spectral::{FourierPlan, SpectralField, TorusGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionLaw {
    /// `ω(ξ) = -ξ|ξ|`
    BenjaminOno,
    /// `ω(ξ) = -ξ²`
    Schroedinger,
}

impl DispersionLaw {
    pub fn omega<T: Scalar>(self, xi: T) -> T {
        match self {
            Self::BenjaminOno => -xi * xi.abs(),
            Self::Schroedinger => -xi * xi,
        }
    }

    pub fn max_abs_omega<T: Scalar>(self, geometry: &TorusGeometry<T>) -> T {
        let c = geometry.cutoff();
        c * c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowProblem<T> {
    law: DispersionLaw,
    sigma: T,
    initial: SpectralField<T>,
}

impl<T: Scalar> FlowProblem<T> {
    /// `sigma` must be `±1`; the Benjamin–Ono flow requires real data.
    pub fn new(law: DispersionLaw, sigma: T, initial: SpectralField<T>) -> Result<Self> {
        if (sigma.abs() - T::one()).abs() > T::zero() {
            return Err(Error::Invalid(format!("nonlinearity sign must be +1 or -1, got {sigma}")));
        }
        if law == DispersionLaw::BenjaminOno && !initial.is_real() {
            return Err(Error::NotReal);
        }
        Ok(Self { law, sigma, initial })
    }

    pub fn law(&self) -> DispersionLaw {
        self.law
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn initial(&self) -> &SpectralField<T> {
        &self.initial
    }
}

pub fn free_evolve<T: Scalar>(f: &SpectralField<T>, t: T, law: DispersionLaw) -> SpectralField<T> {
    f.apply_multiplier(false, |xi| Complex::from_polar(T::one(), t * law.omega(xi)))
}

/// `0.5 / max|ω|` on the grid.
pub fn default_dt<T: Scalar>(geometry: &TorusGeometry<T>, law: DispersionLaw) -> T {
    cst::<T>(0.5) / law.max_abs_omega(geometry)
}

/// Evaluates the cubic term `N̂(u)` exactly (no aliasing) on a grid padded to `2M`.
#[derive(Clone)]
pub struct Nonlinearity<T: Scalar> {
    law: DispersionLaw,
    sigma: T,
    geometry: TorusGeometry<T>,
    fine: FourierPlan<T>,
    /// derivative multiplier times the equation's constant
    factor: Vec<Complex<T>>,
    real: bool,
}

impl<T: Scalar> Nonlinearity<T> {
    pub fn new(law: DispersionLaw, sigma: T, geometry: TorusGeometry<T>) -> Self {
        let fine_geom = geometry.with_grid_size(2 * geometry.grid_size()).expect("doubling a power of two");
        let c = match law {
            DispersionLaw::BenjaminOno => sigma / cst(3.0),
            DispersionLaw::Schroedinger => T::one(),
        };
        let nyq = geometry.nyquist_index();
        let factor = (0..geometry.grid_size())
            .map(|j| if j == nyq { Complex::new(T::zero(), T::zero()) } else { Complex::new(T::zero(), c * geometry.frequency(j)) })
            .collect();
        Self { law, sigma, geometry, fine: FourierPlan::new(fine_geom), factor, real: law == DispersionLaw::BenjaminOno }
    }

    pub fn law(&self) -> DispersionLaw {
        self.law
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Coefficients of the cubic product itself: `(u³)^` for mBO, `(|u|²u)^` for dNLS.
    pub fn cubic(&self, u: &[Complex<T>]) -> Vec<Complex<T>> {
        let m = self.geometry.grid_size();
        let fine_m = 2 * m;
        let zero = Complex::new(T::zero(), T::zero());
        let mut buf = vec![zero; fine_m];
        let nyq = self.geometry.nyquist_index();
        for (j, &c) in u.iter().enumerate() {
            if j == nyq {
                continue;
            }
            let mode = self.geometry.mode(j);
            buf[mode.rem_euclid(fine_m as i64) as usize] = c;
        }
        self.fine.inverse(&mut buf);
        for z in buf.iter_mut() {
            *z = if self.real {
                let r = z.re;
                Complex::new(r * r * r, T::zero())
            } else {
                *z * z.norm_sqr()
            };
        }
        self.fine.forward(&mut buf);
        let mut out = vec![zero; m];
        for (j, o) in out.iter_mut().enumerate() {
            if j != nyq {
                *o = buf[self.geometry.mode(j).rem_euclid(fine_m as i64) as usize];
            }
        }
        out
    }

    /// `N̂(u)`: the full nonlinear part of `∂_t û`.
    pub fn eval(&self, u: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut w = self.cubic(u);
        for (z, f) in w.iter_mut().zip(&self.factor) {
            *z *= f;
        }
        w
    }
}

/// Nonlinear part of `∂_t û` for the field `u`.
pub fn nonlinear_term<T: Scalar>(u: &SpectralField<T>, law: DispersionLaw, sigma: T) -> SpectralField<T> {
    let n = Nonlinearity::new(law, sigma, *u.geometry());
    SpectralField::from_coeffs(*u.geometry(), n.eval(u.coeffs()), u.is_real()).expect("finite nonlinearity")
}

/// Integrating-factor RK4 with fixed step `dt`.
#[derive(Clone)]
pub struct Integrator<T: Scalar> {
    nonlinearity: Nonlinearity<T>,
    dt: T,
    full: Vec<Complex<T>>,
    half: Vec<Complex<T>>,
    nonlinear: bool,
}

impl<T: Scalar> Integrator<T> {
    pub fn new(law: DispersionLaw, sigma: T, geometry: TorusGeometry<T>, dt: T) -> Self {
        let omegas: Vec<T> = geometry.frequencies().into_iter().map(|xi| law.omega(xi)).collect();
        let full = omegas.iter().map(|&w| Complex::from_polar(T::one(), dt * w)).collect();
        let half = omegas.iter().map(|&w| Complex::from_polar(T::one(), dt * w / cst(2.0))).collect();
        Self { nonlinearity: Nonlinearity::new(law, sigma, geometry), dt, full, half, nonlinear: true }
    }

    pub fn for_problem(problem: &FlowProblem<T>, dt: T) -> Self {
        Self::new(problem.law, problem.sigma, *problem.initial.geometry(), dt)
    }

    /// Switches the cubic term off (free flow through the same code path).
    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    fn n(&self, u: &[Complex<T>]) -> Vec<Complex<T>> {
        if self.nonlinear {
            self.nonlinearity.eval(u)
        } else {
            vec![Complex::new(T::zero(), T::zero()); u.len()]
        }
    }

    pub fn step_coeffs(&self, u: &[Complex<T>]) -> Vec<Complex<T>> {
        let h = self.dt;
        let h2 = h / cst(2.0);
        let h6 = h / cst(6.0);
        let k1 = self.n(u);
        let a: Vec<_> = (0..u.len()).map(|i| self.half[i] * (u[i] + k1[i] * h2)).collect();
        let k2 = self.n(&a);
        let b: Vec<_> = (0..u.len()).map(|i| self.half[i] * u[i] + k2[i] * h2).collect();
        let k3 = self.n(&b);
        let c: Vec<_> = (0..u.len()).map(|i| self.full[i] * u[i] + self.half[i] * k3[i] * h).collect();
        let k4 = self.n(&c);
        (0..u.len())
            .map(|i| {
                self.full[i] * u[i]
                    + (self.full[i] * k1[i] + self.half[i] * (k2[i] + k3[i]) * cst::<T>(2.0) + k4[i]) * h6
            })
            .collect()
    }

    /// One step; `step_index` is reported if the result is not finite.
    pub fn step(&self, u: &SpectralField<T>, step_index: usize) -> Result<SpectralField<T>> {
        let next = self.step_coeffs(u.coeffs());
        if next.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Blowup { step: step_index });
        }
        SpectralField::from_coeffs(*u.geometry(), next, u.is_real())
    }
}

pub fn step_nonlinear<T: Scalar>(state: &SpectralField<T>, dt: T, problem: &FlowProblem<T>) -> Result<SpectralField<T>> {
    Integrator::new(problem.law, problem.sigma, *state.geometry(), dt).step(state, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<SpectralField<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn last(&self) -> &SpectralField<T> {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Uniform spacing between stored snapshots.
    pub fn spacing(&self) -> T {
        if self.times.len() < 2 {
            T::zero()
        } else {
            self.times[1] - self.times[0]
        }
    }
}

/// Integrates to `t_final` with a step no larger than `dt`, storing every `every`-th state.
pub fn evolve<T: Scalar>(problem: &FlowProblem<T>, dt: T, t_final: T, every: usize) -> Result<Trajectory<T>> {
    evolve_with(Integrator::for_problem(problem, step_for(dt, t_final)), problem.initial(), t_final, every)
}

fn step_for<T: Scalar>(dt: T, t_final: T) -> T {
    let n = (t_final / dt).ceil().max(T::one());
    t_final / n
}

pub fn evolve_with<T: Scalar>(integrator: Integrator<T>, u0: &SpectralField<T>, t_final: T, every: usize) -> Result<Trajectory<T>> {
    let steps = (t_final / integrator.dt()).round().to_usize().unwrap_or(0);
    let every = every.max(1);
    let mut u = u0.clone();
    let mut traj = Trajectory { times: vec![T::zero()], states: vec![u.clone()] };
    for s in 1..=steps {
        u = integrator.step(&u, s)?;
        if s % every == 0 || s == steps {
            traj.times.push(integrator.dt() * cst(s as f64));
            traj.states.push(u.clone());
        }
    }
    Ok(traj)
}

/// `∫|u|² dx`.
pub fn conserved_mass<T: Scalar>(u: &SpectralField<T>) -> T {
    let n = u.l2_norm();
    n * n
}

/// `(½∫(D^{1/2}u)², ∫u⁴)` for real `u`.
pub fn energy_parts<T: Scalar>(u: &SpectralField<T>) -> Result<(T, T)> {
    if !u.is_real() {
        return Err(Error::NotReal);
    }
    let g = u.geometry();
    let quad: T = u
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, c)| g.frequency(j).abs() * c.norm_sqr())
        .sum::<T>()
        / g.period()
        / cst(2.0);
    let quartic = u.lebesgue_norm(4.0)?.powi(4);
    Ok((quad, quartic))
}

/// `E(u) = ½∫(D^{1/2}u)² - σ∫u⁴/12`.
pub fn conserved_energy<T: Scalar>(u: &SpectralField<T>, sigma: T) -> Result<T> {
    let (q, p) = energy_parts(u)?;
    Ok(q - sigma * p / cst(12.0))
}

/// Maps `u` on `λ𝕋` to `r^{-1/2} u(x/r)` on `rλ𝕋`, `r = λ_new/λ` a power of two.
pub fn rescale<T: Scalar>(u: &SpectralField<T>, lambda_new: T) -> Result<SpectralField<T>> {
    let r = lambda_new / u.geometry().lambda();
    let lr = r.log2();
    if !lr.is_finite() || (lr - lr.round()).abs() > cst(1e-12) {
        return Err(Error::NonDyadicScale(crate::scalar::f64_of(r)));
    }
    let geometry = TorusGeometry::new(lambda_new, u.geometry().grid_size())?;
    // û_new(m/(rλ)) = r^{1/2} û(m/λ): the integer mode index is unchanged
    let s = r.sqrt();
    let coeffs = u.coeffs().iter().map(|&c| c * s).collect();
    SpectralField::from_coeffs(geometry, coeffs, u.is_real())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::forward_transform_real;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn cos_field(eps: f64, m: usize) -> SpectralField<f64> {
        let g = TorusGeometry::new(1.0, m).unwrap();
        forward_transform_real(g, &g.points().iter().map(|x: &f64| eps * x.cos()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn dispersion_parity() {
        for &x in &[0.5, 2.0, 7.25] {
            assert_eq!(DispersionLaw::BenjaminOno.omega(-x), -DispersionLaw::BenjaminOno.omega(x));
            assert_eq!(DispersionLaw::Schroedinger.omega(-x), DispersionLaw::Schroedinger.omega(x));
        }
        assert_eq!(DispersionLaw::BenjaminOno.omega(2.0), -4.0);
    }

    #[test]
    fn free_phase_of_single_mode() {
        let g = TorusGeometry::new(1.0, 16).unwrap();
        let f = SpectralField::mode(g, 2, Complex::new(1.0, 0.0)).unwrap();
        let t = 0.37;
        let e = free_evolve(&f, t, DispersionLaw::BenjaminOno);
        let want = Complex::from_polar(1.0, -4.0 * t);
        assert!((e.at_mode(2) - want).norm() < 1e-15);
        assert_eq!(free_evolve(&f, 0.0, DispersionLaw::BenjaminOno), f);
    }

    #[test]
    fn free_group_law() {
        let f = cos_field(1.0, 32).add(&cos_field(1.0, 32).derivative()).unwrap();
        for law in [DispersionLaw::BenjaminOno, DispersionLaw::Schroedinger] {
            let a = free_evolve(&free_evolve(&f, 0.3, law), 0.45, law);
            let b = free_evolve(&f, 0.75, law);
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = TorusGeometry::new(1.0, 32).unwrap();
        let z = SpectralField::zeros(g, true);
        let p = FlowProblem::new(DispersionLaw::BenjaminOno, 1.0, z.clone()).unwrap();
        assert_eq!(step_nonlinear(&z, 1e-3, &p).unwrap().max_abs_coeff(), 0.0);
    }

    #[test]
    fn mbo_rejects_complex_data() {
        let g = TorusGeometry::new(1.0, 16).unwrap();
        let f = SpectralField::mode(g, 1, Complex::new(1.0, 0.0)).unwrap();
        assert_eq!(FlowProblem::new(DispersionLaw::BenjaminOno, 1.0, f.clone()), Err(Error::NotReal));
        assert!(FlowProblem::new(DispersionLaw::Schroedinger, 1.0, f.clone()).is_ok());
        assert!(FlowProblem::new(DispersionLaw::Schroedinger, 0.5, f).is_err());
    }

    #[test]
    fn mass_and_energy_of_cosine() {
        let u = cos_field(1.0, 32);
        assert_relative_eq!(conserved_mass(&u), PI, max_relative = 1e-14);
        let eps = 0.3;
        let u = cos_field(eps, 32);
        let (q, p) = energy_parts(&u).unwrap();
        assert_relative_eq!(q, eps * eps * PI / 2.0, max_relative = 1e-14);
        assert_relative_eq!(p, eps.powi(4) * 0.75 * PI, max_relative = 1e-13);
        for sigma in [1.0, -1.0] {
            assert_relative_eq!(
                conserved_energy(&u, sigma).unwrap(),
                eps * eps * PI / 2.0 - sigma * eps.powi(4) * 0.75 * PI / 12.0,
                max_relative = 1e-13
            );
        }
        assert_eq!(conserved_energy(&SpectralField::zeros(*u.geometry(), true), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cubic_product_is_exact() {
        // cos³x = (3cos x + cos 3x)/4
        let u = cos_field(1.0, 16);
        let n = Nonlinearity::new(DispersionLaw::BenjaminOno, 1.0, *u.geometry());
        let w = n.cubic(u.coeffs());
        let two_pi = 2.0 * PI;
        assert!((w[1].re - two_pi * 3.0 / 8.0).abs() < 1e-12);
        assert!((w[3].re - two_pi / 8.0).abs() < 1e-12);
        assert!(w.iter().enumerate().filter(|(j, _)| ![1, 3, 13, 15].contains(j)).all(|(_, c)| c.norm() < 1e-12));
    }

    #[test]
    fn rescale_single_mode() {
        let g = TorusGeometry::new(1.0, 16).unwrap();
        let f = SpectralField::mode(g, 2, Complex::new(1.0, 0.0)).unwrap();
        let r = rescale(&f, 2.0).unwrap();
        assert_eq!(r.geometry().lambda(), 2.0);
        assert_eq!(r.geometry().frequency(2), 1.0);
        assert_relative_eq!(r.at_mode(2).re, 2f64.sqrt());
        assert_relative_eq!(r.l2_norm(), f.l2_norm(), max_relative = 1e-15);
        assert_eq!(rescale(&f, 1.0).unwrap(), f);
        assert_eq!(rescale(&f, 3.0), Err(Error::NonDyadicScale(3.0)));
    }

    #[test]
    fn rescaled_samples_match_substitution() {
        let u = cos_field(1.0, 32).add(&cos_field(0.5, 32).hilbert_transform()).unwrap();
        let r = rescale(&u, 4.0).unwrap();
        let xs = r.geometry().points();
        let rs = r.real_samples();
        for (x, v) in xs.iter().zip(&rs) {
            let y = x / 4.0;
            let want = 0.5 * (y.cos() + 0.5 * y.sin());
            assert!((v - want).abs() < 1e-13);
        }
    }
}
