//! Modified energies: dyadic symbols, frequency envelopes, the quartic correction and the
//! symmetrized quartic and sextic forms.
//!
//! Conventions. Γ₄ sums run over lattice tuples `(ξ₁, ξ₂, ξ₃, ξ₄)` with zero sum and measure
//! `λ^{-3}`; the Nyquist bin is excluded everywhere, matching the Galerkin cubic of
//! [`crate::evolution::Nonlinearity`]. For mBO the quartic product is `û₁û₂û₃û₄`; for dNLS it is
//! `û₁ ū₂ û₃ ū₄` with `ū(ξ) = conj û(-ξ)`.
//!
//! With `g(ξ) = ξa(ξ)` and `G = Σ g(ξⱼ)` the forms are
//!
//! * mBO: `R₄ = -σ/(6(2π)²) λ^{-3} Σ iG Π`, `E₁ = iσ/(3(2π)²) λ^{-3} Σ b₄ Π`,
//!   `b₄ = (i/2) G / Σξⱼ|ξⱼ|`;
//! * dNLS: `R₄ = -(i/2)(2π)^{-2} λ^{-3} Σ G Π`, `E₁ = (2π)^{-2} λ^{-3} Σ b₄ Π`,
//!   `b₄ = -G / (2(ξ₁² - ξ₂² + ξ₃² - ξ₄²))`,
//!
//! so that `dE₀/dt = R₄` and `d(E₀ + E₁)/dt = R₆` along the semi-discrete flow.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{nonlinear_term, DispersionLaw, Nonlinearity, Trajectory};
use crate::spacetime::{assembled_norm, NormKind, SpaceTimeField};
use crate::spectral::{block_index, SpectralField, TorusGeometry};

type C64 = Complex<f64>;
type Field = SpectralField<f64>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

// ---------------------------------------------------------------------------------------------
// Envelopes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSequence {
    pub s: f64,
    pub eps: f64,
    /// `γ_m = 2^{2ms}‖P_m u₀‖²/‖u₀‖²_{H^s}`
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    /// largest `γ_n/β_n`; at most 1
    pub domination: f64,
    pub sum: f64,
    /// a priori bound `2^{2s}(1 + 2/(2^{ε/2} - 1))` for the sum
    pub sum_bound: f64,
    /// pairs `(n, m)` with `|log₂β_n - log₂β_m| > (ε/2)|n - m|`
    pub lipschitz_violations: usize,
}

impl EnvelopeCheck {
    pub fn passed(&self) -> bool {
        self.domination <= 1.0 && self.sum.is_finite() && self.sum <= self.sum_bound && self.lipschitz_violations == 0
    }
}

pub fn build_envelope(u0: &Field, s: f64, eps: f64) -> Result<EnvelopeSequence> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("envelope needs eps > 0, got {eps}")));
    }
    let hs = u0.sobolev_norm(s).powi(2);
    if hs == 0.0 {
        return Err(Error::Invalid("envelope of the zero field".into()));
    }
    let g = u0.geometry();
    let mut mass = vec![0.0; g.max_block() + 1];
    for (j, c) in u0.coeffs().iter().enumerate() {
        mass[block_index(g.frequency(j))] += c.norm_sqr();
    }
    // same counting measure as the Sobolev norm
    let gamma: Vec<f64> = mass.iter().enumerate().map(|(m, p)| (2.0 * m as f64 * s).exp2() * p / g.lambda() / hs).collect();
    let beta = (0..gamma.len())
        .map(|n| {
            gamma
                .iter()
                .enumerate()
                .map(|(m, &gm)| gm * (-(eps / 2.0) * n.abs_diff(m) as f64).exp2())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(EnvelopeSequence { s, eps, gamma, beta })
}

impl EnvelopeSequence {
    pub fn check(&self) -> EnvelopeCheck {
        let domination = self.gamma.iter().zip(&self.beta).map(|(g, b)| g / b).fold(0.0, f64::max);
        let sum = self.beta.iter().sum();
        let sum_bound = (2.0 * self.s).exp2() * (1.0 + 2.0 / ((self.eps / 2.0).exp2() - 1.0));
        let mut lipschitz_violations = 0;
        for (n, bn) in self.beta.iter().enumerate() {
            for (m, bm) in self.beta.iter().enumerate() {
                // one ulp of slack for the log of a product computed in floating point
                if (bn.log2() - bm.log2()).abs() > (self.eps / 2.0) * n.abs_diff(m) as f64 * (1.0 + 1e-12) + 1e-12 {
                    lipschitz_violations += 1;
                }
            }
        }
        EnvelopeCheck { domination, sum, sum_bound, lipschitz_violations }
    }
}

// ---------------------------------------------------------------------------------------------
// Symbols

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Smooth symbol `a(ξ) = 2^{L(y)}`, `y = log₂⟨ξ⟩`, where `L` interpolates tabulated block values
/// `L_k ≈ log₂ a(2^k)` with softplus-smoothed ramps and continues with slope `2s` past the last
/// node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicSymbol {
    pub s: f64,
    pub eps: f64,
    nodes: Vec<f64>,
    tail: f64,
    sharpness: f64,
}

const SHARPNESS: f64 = 4.0;

impl DyadicSymbol {
    /// From block values `log₂ a(2^k)`, `k = 0..nodes.len()`.
    pub fn from_log_nodes(s: f64, eps: f64, nodes: Vec<f64>, tail: f64) -> Result<Self> {
        if nodes.is_empty() || nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("symbol needs finite node values".into()));
        }
        Ok(Self { s, eps, nodes, tail, sharpness: SHARPNESS })
    }

    /// `a ≡ 1`.
    pub fn constant() -> Self {
        Self { s: 0.0, eps: 0.0, nodes: vec![0.0], tail: 0.0, sharpness: SHARPNESS }
    }

    /// Smoothed `⟨ξ⟩^{2s}`.
    pub fn power(s: f64, blocks: usize) -> Self {
        let nodes = (0..=blocks).map(|k| 2.0 * k as f64 * s).collect();
        Self { s, eps: 0.0, nodes, tail: 2.0 * s, sharpness: SHARPNESS }
    }

    /// The symbol concentrating the energy at block `k0`:
    /// `ã_k = 2^{2ks} max(1, β_{k0}^{-1} 2^{-ε|k-k0|})`.
    pub fn from_envelope(env: &EnvelopeSequence, k0: usize) -> Result<Self> {
        let Some(&b) = env.beta.get(k0) else {
            return Err(Error::Invalid(format!("block {k0} outside the envelope range 0..{}", env.beta.len())));
        };
        if env.beta.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::Invalid("envelope has a zero entry".into()));
        }
        let nodes = (0..env.beta.len())
            .map(|k| 2.0 * k as f64 * env.s + (-b.log2() - env.eps * k.abs_diff(k0) as f64).max(0.0))
            .collect();
        Self::from_log_nodes(env.s, env.eps, nodes, 2.0 * env.s)
    }

    pub fn is_constant(&self) -> bool {
        self.tail == 0.0 && self.nodes.iter().all(|&v| v == self.nodes[0])
    }

    /// `(L, L', L'')` in `y`.
    fn log_profile(&self, y: f64) -> (f64, f64, f64) {
        let b = self.sharpness;
        let mut l = self.nodes[0];
        let (mut l1, mut l2) = (0.0, 0.0);
        for (k, w) in self.nodes.windows(2).enumerate() {
            let d = w[1] - w[0];
            if d == 0.0 {
                continue;
            }
            let t = y - k as f64;
            l += d * (softplus(b * t) - softplus(b * (t - 1.0))) / b;
            let (s0, s1) = (logistic(b * t), logistic(b * (t - 1.0)));
            l1 += d * (s0 - s1);
            l2 += d * b * (s0 * (1.0 - s0) - s1 * (1.0 - s1));
        }
        if self.tail != 0.0 {
            let t = y - (self.nodes.len() - 1) as f64;
            let s0 = logistic(b * t);
            l += self.tail * softplus(b * t) / b;
            l1 += self.tail * s0;
            l2 += self.tail * b * s0 * (1.0 - s0);
        }
        (l, l1, l2)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        if self.is_constant() {
            return self.nodes[0].exp2();
        }
        let y = 0.5 * (xi * xi).ln_1p() / LN_2;
        self.log_profile(y).0.exp2()
    }

    /// `(a, a', a'')` at `ξ`.
    pub fn eval_derivatives(&self, xi: f64) -> (f64, f64, f64) {
        if self.is_constant() {
            return (self.nodes[0].exp2(), 0.0, 0.0);
        }
        let q = 1.0 + xi * xi;
        let y = 0.5 * q.ln() / LN_2;
        let y1 = xi / (q * LN_2);
        let y2 = (1.0 - xi * xi) / (q * q * LN_2);
        let (l, l1, l2) = self.log_profile(y);
        let a = l.exp2();
        let d1 = a * LN_2 * l1 * y1;
        let d2 = a * LN_2 * (LN_2 * (l1 * y1).powi(2) + l2 * y1 * y1 + l1 * y2);
        (a, d1, d2)
    }

    /// `g(ξ) = ξa(ξ)` with its first two derivatives.
    pub fn g_derivatives(&self, xi: f64) -> (f64, f64, f64) {
        let (a, a1, a2) = self.eval_derivatives(xi);
        (xi * a, a + xi * a1, 2.0 * a1 + xi * a2)
    }

    /// Membership constants on `|ξ| <= xi_max`.
    pub fn check(&self, xi_max: f64) -> SymbolCheck {
        let mut slow = 1.0f64;
        let mut d1 = 0.0f64;
        let mut d2 = 0.0f64;
        let mut fd_mismatch = 0.0f64;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let n = 4000;
        for i in 0..=n {
            let xi = xi_max * i as f64 / n as f64;
            let (a, a1, a2) = self.eval_derivatives(xi);
            let b = (1.0 + xi * xi).sqrt();
            // second-order finite differences with a step proportional to ⟨ξ⟩
            let h = 1e-4 * b;
            let (ap, am) = (self.eval(xi + h), self.eval(xi - h));
            let f1 = (ap - am) / (2.0 * h);
            let f2 = (ap - 2.0 * a + am) / (h * h);
            fd_mismatch = fd_mismatch.max((f1 - a1).abs() * b / a).max((f2 - a2).abs() * b * b / a * 1e-2);
            d1 = d1.max(f1.abs() * b / a);
            d2 = d2.max(f2.abs() * b * b / a);
            for r in [0.5, 0.75, 1.5, 2.0] {
                let q = self.eval(xi * r) / a;
                slow = slow.max(q).max(1.0 / q);
            }
            if xi >= 4.0 {
                // local growth exponent d log a / d log(1 + ξ²)
                let e = a1 * (1.0 + xi * xi) / (2.0 * xi * a);
                lo = lo.min(e);
                hi = hi.max(e);
            }
        }
        SymbolCheck { slowly_varying: slow, first_derivative: d1, second_derivative: d2, fd_mismatch, growth: (lo, hi) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolCheck {
    /// largest `a(ξ)/a(ξ')` over `ξ'/ξ ∈ [1/2, 2]`
    pub slowly_varying: f64,
    /// largest `|a'|⟨ξ⟩/a` from finite differences
    pub first_derivative: f64,
    /// largest `|a''|⟨ξ⟩²/a` from finite differences
    pub second_derivative: f64,
    /// worst relative disagreement between analytic and finite-difference derivatives
    pub fd_mismatch: f64,
    /// range of `d log a / d log(1 + ξ²)` on `|ξ| >= 4`
    pub growth: (f64, f64),
}

impl SymbolCheck {
    pub fn in_class(&self, s: f64, eps: f64) -> bool {
        let tol = 1e-3;
        self.growth.0 >= s - eps - tol && self.growth.1 <= s + eps + tol
    }
}

// ---------------------------------------------------------------------------------------------
// Lattice simplices

/// Zero-sum lattice tuples of dimension `d` inside the truncation, excluding the Nyquist bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSimplex {
    geometry: TorusGeometry<f64>,
    dim: usize,
}

impl GridSimplex {
    pub fn new(geometry: TorusGeometry<f64>, dim: usize) -> Result<Self> {
        if ![2, 4, 6].contains(&dim) {
            return Err(Error::Invalid(format!("simplex dimension must be 2, 4 or 6, got {dim}")));
        }
        Ok(Self { geometry, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `λ^{-(d-1)}`
    pub fn measure(&self) -> f64 {
        self.geometry.lambda().powi(1 - self.dim as i32)
    }

    fn modes(&self) -> std::ops::Range<i64> {
        let h = self.geometry.grid_size() as i64 / 2;
        -h + 1..h
    }

    /// Every zero-sum tuple of integer modes; exponential in `d`, meant for small grids.
    pub fn points(&self) -> Vec<Vec<i64>> {
        let r = self.modes();
        let mut out = Vec::new();
        let mut cur = vec![0i64; self.dim];
        fn rec(depth: usize, partial: i64, cur: &mut Vec<i64>, r: &std::ops::Range<i64>, out: &mut Vec<Vec<i64>>) {
            let d = cur.len();
            if depth == d - 1 {
                let last = -partial;
                if r.contains(&last) {
                    cur[d - 1] = last;
                    out.push(cur.clone());
                }
                return;
            }
            for m in r.clone() {
                cur[depth] = m;
                rec(depth + 1, partial + m, cur, r, out);
            }
        }
        rec(0, 0, &mut cur, &r, &mut out);
        out
    }

    /// Number of lattice points, counted in closed form.
    pub fn count(&self) -> usize {
        // convolution powers of the indicator of the mode range
        let r = self.modes();
        let width = (r.end - r.start) as usize;
        let mut dist = vec![1usize; width];
        let mut offset = r.start;
        for _ in 1..self.dim - 1 {
            let mut next = vec![0usize; dist.len() + width - 1];
            for (i, &c) in dist.iter().enumerate() {
                for j in 0..width {
                    next[i + j] += c;
                }
            }
            dist = next;
            offset += r.start;
        }
        // the last coordinate is -(sum of the others) and must lie in range
        dist.iter().enumerate().filter(|(i, _)| r.contains(&-(offset + *i as i64))).map(|(_, &c)| c).sum()
    }

    /// `Σ f(j₁, j₂, j₃, j₄)` over Γ₄ by grid index, parallel over `j₁` with a fixed pairwise
    /// reduction order.
    pub fn sum4(&self, f: impl Fn(usize, usize, usize, usize) -> C64 + Sync) -> C64 {
        assert_eq!(self.dim, 4, "sum4 on a simplex of dimension {}", self.dim);
        let g = self.geometry;
        let m = g.grid_size();
        let nyq = g.nyquist_index();
        let partials: Vec<C64> = (0..m)
            .into_par_iter()
            .map(|j1| {
                if j1 == nyq {
                    return ZERO;
                }
                let m1 = g.mode(j1);
                let mut acc = ZERO;
                for j2 in (0..m).filter(|&j| j != nyq) {
                    let m12 = m1 + g.mode(j2);
                    for j3 in (0..m).filter(|&j| j != nyq) {
                        let Some(j4) = g.index_of(-(m12 + g.mode(j3))) else { continue };
                        if j4 != nyq {
                            acc += f(j1, j2, j3, j4);
                        }
                    }
                }
                acc
            })
            .collect();
        pairwise_sum(&partials)
    }
}

fn pairwise_sum(v: &[C64]) -> C64 {
    match v.len() {
        0 => ZERO,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

// ---------------------------------------------------------------------------------------------
// The multiplier b₄

/// `q(x, y) = (g(x) + g(y))/(x + y)`, the divided difference of the odd function `g` at `x`
/// and `-y`, with its Taylor form near `x + y = 0`.
pub fn q_value(a: &DyadicSymbol, x: f64, y: f64) -> f64 {
    let d = x + y;
    if d.abs() <= 1e-9 * (1.0 + x.abs()) {
        let (_, g1, g2) = a.g_derivatives(x);
        g1 - 0.5 * d * g2
    } else {
        (x * a.eval(x) + y * a.eval(y)) / d
    }
}

/// Dispersion-weighted sum: `Σξⱼ|ξⱼ|` for mBO, `ξ₁² - ξ₂² + ξ₃² - ξ₄²` for dNLS.
pub fn resonance(law: DispersionLaw, xi: [f64; 4]) -> f64 {
    match law {
        DispersionLaw::BenjaminOno => xi.iter().map(|x| x * x.abs()).sum(),
        DispersionLaw::Schroedinger => xi[0] * xi[0] - xi[1] * xi[1] + xi[2] * xi[2] - xi[3] * xi[3],
    }
}

fn g_sum(a: &DyadicSymbol, xi: [f64; 4]) -> f64 {
    xi.iter().map(|&x| x * a.eval(x)).sum()
}

/// The quotient form of `b₄`; undefined (non-finite) on the resonance set.
pub fn b4_quotient(a: &DyadicSymbol, xi: [f64; 4], law: DispersionLaw) -> C64 {
    let g = g_sum(a, xi);
    let h = resonance(law, xi);
    match law {
        DispersionLaw::BenjaminOno => C64::new(0.0, 0.5 * g / h),
        DispersionLaw::Schroedinger => C64::new(-0.5 * g / h, 0.0),
    }
}

/// Which factorization of the resonance function the decomposition used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum B4Case {
    /// mBO, two frequencies of each sign: `H = 2(ξ_a + ξ_c)(ξ_a + ξ_d)`
    TwoTwo,
    /// mBO, three frequencies of one sign: `H = ∓2 e₂` of the triple, never zero
    ThreeOne,
    /// dNLS, dividing by `ξ₁ + ξ₂`
    SchroedingerFirst,
    /// dNLS, dividing by `ξ₂ + ξ₃`
    SchroedingerSecond,
}

/// The decomposed (removable-singularity) form of `b₄` and the case it used.
pub fn b4_decomposed(a: &DyadicSymbol, xi: [f64; 4], law: DispersionLaw) -> (C64, B4Case) {
    match law {
        DispersionLaw::BenjaminOno => {
            let mut s = xi;
            s.sort_by(|x, y| y.total_cmp(x));
            if s[1] >= 0.0 && s[2] <= 0.0 {
                // positives p, q and negatives c, d; pair so the divisor is the larger factor
                let (p, q, c, d) = (s[0], s[1], s[2], s[3]);
                let (c, d) = if (p + d).abs() >= (p + c).abs() { (c, d) } else { (d, c) };
                let den = 2.0 * (p + d);
                let val = if den == 0.0 {
                    // double resonance (x, x, -x, -x)
                    0.5 * a.g_derivatives(p).2
                } else {
                    (q_value(a, p, c) - q_value(a, q, d)) / den
                };
                (C64::new(0.0, 0.5 * val), B4Case::TwoTwo)
            } else {
                let (triple, sign) = if s[2] > 0.0 { ([s[0], s[1], s[2]], 1.0) } else { ([s[1], s[2], s[3]], -1.0) };
                let e2 = triple[0] * triple[1] + triple[1] * triple[2] + triple[0] * triple[2];
                let h = -2.0 * sign * e2;
                (C64::new(0.0, 0.5 * g_sum(a, xi) / h), B4Case::ThreeOne)
            }
        }
        DispersionLaw::Schroedinger => {
            let [x1, x2, x3, x4] = xi;
            let (f12, f23) = (x1 + x2, x2 + x3);
            if f12 == 0.0 && f23 == 0.0 {
                // double resonance (x, -x, x, -x)
                return (C64::new(-0.25 * a.g_derivatives(x1).2, 0.0), B4Case::SchroedingerFirst);
            }
            if f23.abs() <= f12.abs() {
                (C64::new((q_value(a, x2, x3) - q_value(a, x1, x4)) / (4.0 * f12), 0.0), B4Case::SchroedingerFirst)
            } else {
                (C64::new((q_value(a, x1, x2) - q_value(a, x3, x4)) / (4.0 * f23), 0.0), B4Case::SchroedingerSecond)
            }
        }
    }
}

/// Relative resonance threshold: below `θ μ²`, `μ = max|ξⱼ|`, the decomposition is used.
pub const RESONANCE_THRESHOLD: f64 = 1e-6;

pub fn b4_multiplier(a: &DyadicSymbol, xi: [f64; 4], law: DispersionLaw) -> C64 {
    let mu = xi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sum = xi.iter().sum::<f64>();
    debug_assert!(sum.abs() <= 1e-9 * (1.0 + mu), "b4 off the zero-sum set: {xi:?}");
    if a.is_constant() || mu == 0.0 {
        return ZERO;
    }
    if resonance(law, xi).abs() >= RESONANCE_THRESHOLD * mu * mu {
        b4_quotient(a, xi, law)
    } else {
        b4_decomposed(a, xi, law).0
    }
}

// ---------------------------------------------------------------------------------------------
// Energies and forms

fn require_real(u: &Field, law: DispersionLaw) -> Result<()> {
    if law == DispersionLaw::BenjaminOno && !u.is_real() {
        return Err(Error::NotReal);
    }
    Ok(())
}

/// Per-index tables: frequencies, `a(ξ)`, `ξa(ξ)`.
struct Tables {
    xi: Vec<f64>,
    g: Vec<f64>,
}

impl Tables {
    fn new(a: &DyadicSymbol, geometry: &TorusGeometry<f64>) -> Self {
        let xi: Vec<f64> = geometry.frequencies();
        let g = xi.iter().map(|&x| x * a.eval(x)).collect();
        Self { xi, g }
    }
}

/// Coefficient table for the quartic product: `û` in odd slots, `ū` in even slots for dNLS.
fn slots(u: &Field, law: DispersionLaw) -> (Vec<C64>, Vec<C64>) {
    let odd = u.coeffs().to_vec();
    let even = match law {
        DispersionLaw::BenjaminOno => odd.clone(),
        DispersionLaw::Schroedinger => u.conj().coeffs().to_vec(),
    };
    (odd, even)
}

pub fn e0_energy(a: &DyadicSymbol, u: &Field, law: DispersionLaw) -> Result<f64> {
    require_real(u, law)?;
    let g = u.geometry();
    let s: f64 = u.coeffs().iter().enumerate().map(|(j, c)| a.eval(g.frequency(j)) * c.norm_sqr()).sum();
    Ok(s / g.lambda())
}

/// `dE₀/dt` from pairing `a·û` with the nonlinear part of `∂_t û`.
pub fn e0_rate_direct(a: &DyadicSymbol, u: &Field, law: DispersionLaw, sigma: f64) -> Result<f64> {
    require_real(u, law)?;
    let g = u.geometry();
    let n = nonlinear_term(u, law, sigma);
    let s: f64 = u
        .coeffs()
        .iter()
        .zip(n.coeffs())
        .enumerate()
        .map(|(j, (c, d))| a.eval(g.frequency(j)) * (d * c.conj()).re)
        .sum();
    Ok(2.0 * s / g.lambda())
}

fn quartic_constant(law: DispersionLaw, sigma: f64) -> (C64, C64) {
    let k = 1.0 / (4.0 * PI * PI);
    match law {
        // (R₄ prefactor including the i, E₁ prefactor)
        DispersionLaw::BenjaminOno => (C64::new(0.0, -sigma * k / 6.0), C64::new(0.0, sigma * k / 3.0)),
        DispersionLaw::Schroedinger => (C64::new(0.0, -0.5 * k), C64::new(k, 0.0)),
    }
}

/// Symmetrized quartic form `R₄`, summed over Γ₄.
pub fn r4_form(a: &DyadicSymbol, u: &Field, law: DispersionLaw, sigma: f64) -> Result<f64> {
    require_real(u, law)?;
    if a.is_constant() {
        return Ok(0.0);
    }
    let geom = *u.geometry();
    let t = Tables::new(a, &geom);
    let (odd, even) = slots(u, law);
    let sum = GridSimplex::new(geom, 4)?.sum4(|j1, j2, j3, j4| {
        let gs = t.g[j1] + t.g[j2] + t.g[j3] + t.g[j4];
        odd[j1] * even[j2] * odd[j3] * even[j4] * gs
    });
    let (c4, _) = quartic_constant(law, sigma);
    Ok((c4 * sum).re * geom.lambda().powi(-3))
}

fn b4_table_free(a: &DyadicSymbol, t: &Tables, j: [usize; 4], law: DispersionLaw) -> C64 {
    b4_multiplier(a, [t.xi[j[0]], t.xi[j[1]], t.xi[j[2]], t.xi[j[3]]], law)
}

/// The quartic correction `E₁`.
pub fn e1_correction(a: &DyadicSymbol, u: &Field, law: DispersionLaw, sigma: f64) -> Result<f64> {
    require_real(u, law)?;
    if a.is_constant() {
        return Ok(0.0);
    }
    let geom = *u.geometry();
    let t = Tables::new(a, &geom);
    let (odd, even) = slots(u, law);
    let sum = GridSimplex::new(geom, 4)?.sum4(|j1, j2, j3, j4| {
        let p = odd[j1] * even[j2] * odd[j3] * even[j4];
        if p == ZERO {
            return ZERO;
        }
        b4_table_free(a, &t, [j1, j2, j3, j4], law) * p
    });
    let (_, k1) = quartic_constant(law, sigma);
    Ok((k1 * sum).re * geom.lambda().powi(-3))
}

/// Sextic form `R₆`: the quartic correction with the nonlinear part of `∂_t û` in one slot,
/// contracted through the Galerkin cubic.
pub fn r6_form(a: &DyadicSymbol, u: &Field, law: DispersionLaw, sigma: f64) -> Result<f64> {
    require_real(u, law)?;
    if a.is_constant() {
        return Ok(0.0);
    }
    let geom = *u.geometry();
    let t = Tables::new(a, &geom);
    let (odd, even) = slots(u, law);
    let n = nonlinear_term(u, law, sigma);
    let (n_odd, n_even) = slots(&n, law);
    let (_, k1) = quartic_constant(law, sigma);
    let sum = GridSimplex::new(geom, 4)?.sum4(|j1, j2, j3, j4| {
        let p = match law {
            DispersionLaw::BenjaminOno => 4.0 * odd[j1] * odd[j2] * odd[j3] * n_odd[j4],
            DispersionLaw::Schroedinger => 2.0 * (n_odd[j1] * even[j2] + odd[j1] * n_even[j2]) * odd[j3] * even[j4],
        };
        if p == ZERO {
            return ZERO;
        }
        b4_table_free(a, &t, [j1, j2, j3, j4], law) * p
    });
    Ok((k1 * sum).re * geom.lambda().powi(-3))
}

/// `R₆` by direct enumeration of the sextic lattice sum; `O(M⁵)`, for small grids only.
pub fn r6_brute_force(a: &DyadicSymbol, u: &Field, law: DispersionLaw, sigma: f64) -> Result<f64> {
    require_real(u, law)?;
    let geom = *u.geometry();
    if geom.grid_size() > 32 {
        return Err(Error::Invalid(format!("brute-force sextic sum on M = {} is too large", geom.grid_size())));
    }
    let t = Tables::new(a, &geom);
    let (odd, even) = slots(u, law);
    let nyq = geom.nyquist_index();
    let idx: Vec<usize> = (0..geom.grid_size()).filter(|&j| j != nyq).collect();
    let at = |m: i64| geom.index_of(m).filter(|&j| j != nyq);
    let c3 = match law {
        DispersionLaw::BenjaminOno => sigma / 3.0,
        DispersionLaw::Schroedinger => 1.0,
    };
    let cube = 1.0 / (4.0 * PI * PI * geom.lambda() * geom.lambda());
    // N̂(ξ) = c·iξ·(2πλ)^{-2} Σ_{ξ₅+ξ₆+ξ₇=ξ} (product pattern)
    let mut total = ZERO;
    for &j1 in &idx {
        for &j2 in &idx {
            for &j3 in &idx {
                let m123 = geom.mode(j1) + geom.mode(j2) + geom.mode(j3);
                let Some(j4) = at(-m123) else { continue };
                let b = b4_table_free(a, &t, [j1, j2, j3, j4], law);
                for &j5 in &idx {
                    for &j6 in &idx {
                        match law {
                            DispersionLaw::BenjaminOno => {
                                let Some(j7) = at(geom.mode(j4) - geom.mode(j5) - geom.mode(j6)) else { continue };
                                let nhat = C64::new(0.0, c3 * t.xi[j4]) * cube * odd[j5] * odd[j6] * odd[j7];
                                total += 4.0 * b * odd[j1] * odd[j2] * odd[j3] * nhat;
                            }
                            DispersionLaw::Schroedinger => {
                                // slot 1: N̂(ξ₁) = iξ₁ Σ û₅ ū₆ û₇
                                if let Some(j7) = at(geom.mode(j1) - geom.mode(j5) - geom.mode(j6)) {
                                    let nhat = C64::new(0.0, t.xi[j1]) * cube * odd[j5] * even[j6] * odd[j7];
                                    total += 2.0 * b * nhat * even[j2] * odd[j3] * even[j4];
                                }
                                // slot 2: conj N̂(-ξ₂) = iξ₂ Σ ū₅ û₆ ū₇ over ξ₅+ξ₆+ξ₇ = ξ₂
                                if let Some(j7) = at(geom.mode(j2) - geom.mode(j5) - geom.mode(j6)) {
                                    let nbar = C64::new(0.0, t.xi[j2]) * cube * even[j5] * odd[j6] * even[j7];
                                    total += 2.0 * b * odd[j1] * nbar * odd[j3] * even[j4];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let (_, k1) = quartic_constant(law, sigma);
    Ok((k1 * total).re * geom.lambda().powi(-3))
}

/// `|E₁| / (‖u‖²_{L²} E₀)`.
pub fn boundary_ratio(a: &DyadicSymbol, u: &Field, law: DispersionLaw, sigma: f64) -> Result<f64> {
    let e0 = e0_energy(a, u, law)?;
    if e0 == 0.0 {
        return Err(Error::Invalid("boundary ratio of the zero field".into()));
    }
    Ok(e1_correction(a, u, law, sigma)?.abs() / (u.l2_norm().powi(2) * e0))
}

// ---------------------------------------------------------------------------------------------
// Cancellation along trajectories

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    Second,
    Fourth,
}

impl Stencil {
    fn half_width(self) -> usize {
        match self {
            Self::Second => 1,
            Self::Fourth => 2,
        }
    }

    fn apply(self, f: &[f64], i: usize, h: f64) -> f64 {
        match self {
            Self::Second => (f[i + 1] - f[i - 1]) / (2.0 * h),
            Self::Fourth => (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h),
        }
    }
}

/// One diagnostic row per interior snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub t: f64,
    pub e0: f64,
    pub e1: f64,
    pub r4: f64,
    pub r6: f64,
    pub de0: f64,
    pub de01: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    pub rows: Vec<EnergyRow>,
    /// `max|dE₀/dt - R₄| / max|R₄|` (absolute if `R₄ ≡ 0`)
    pub r4_discrepancy: f64,
    /// `max|d(E₀+E₁)/dt - R₆| / max|R₆|` (absolute if `R₆ ≡ 0`)
    pub r6_discrepancy: f64,
    pub spacing: f64,
}

fn relative(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

pub fn cancellation_check(traj: &Trajectory<f64>, a: &DyadicSymbol, law: DispersionLaw, sigma: f64, stencil: Stencil) -> Result<CancellationReport> {
    let hw = stencil.half_width();
    let n = traj.states.len();
    if n < 3 || n < 2 * hw + 1 {
        return Err(Error::Invalid(format!("cancellation check needs at least {} snapshots, got {n}", (2 * hw + 1).max(3))));
    }
    let h = traj.times[1] - traj.times[0];
    for w in traj.times.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs() {
            return Err(Error::Invalid("snapshots are not uniformly spaced".into()));
        }
    }
    let e0: Vec<f64> = traj.states.iter().map(|u| e0_energy(a, u, law)).collect::<Result<_>>()?;
    let e1: Vec<f64> = traj.states.iter().map(|u| e1_correction(a, u, law, sigma)).collect::<Result<_>>()?;
    let e01: Vec<f64> = e0.iter().zip(&e1).map(|(x, y)| x + y).collect();
    let mut rows = Vec::new();
    for i in hw..n - hw {
        let u = &traj.states[i];
        rows.push(EnergyRow {
            t: traj.times[i],
            e0: e0[i],
            e1: e1[i],
            r4: r4_form(a, u, law, sigma)?,
            r6: r6_form(a, u, law, sigma)?,
            de0: stencil.apply(&e0, i, h),
            de01: stencil.apply(&e01, i, h),
        });
    }
    let max = |f: &dyn Fn(&EnergyRow) -> f64| rows.iter().map(f).fold(0.0f64, f64::max);
    let r4_discrepancy = relative(max(&|r| (r.de0 - r.r4).abs()), max(&|r| r.r4.abs()));
    let r6_discrepancy = relative(max(&|r| (r.de01 - r.r6).abs()), max(&|r| r.r6.abs()));
    Ok(CancellationReport { rows, r4_discrepancy, r6_discrepancy, spacing: h })
}

// ---------------------------------------------------------------------------------------------
// Energy propagation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    /// `E^s(T)²`
    pub energy_sq: f64,
    pub data_sq: f64,
    /// `T · F^{s-ε̃}(T)⁶`
    pub nonlinear: f64,
    /// `E^s(T)² / (‖u₀‖²_{H^s} + T F⁶)`
    pub constant: f64,
}

/// `ε̃ = min(0.05, (s - 1/4)/2)`.
pub fn eps_tilde(s: f64) -> f64 {
    (0.5 * (s - 0.25)).min(0.05)
}

/// Measures the constant in `E^s(T)² <= C(‖u₀‖²_{H^s} + T F^{s-ε̃}(T)⁶)` on a trajectory.
pub fn propagation_constant(traj: &Trajectory<f64>, law: DispersionLaw, s: f64, pad: f64) -> Result<PropagationReport> {
    let field = SpaceTimeField::from_trajectory(traj, law, pad)?;
    let t = traj.times.last().copied().unwrap_or(0.0) - traj.times[0];
    let e = assembled_norm(&field, s, NormKind::E, law)?;
    let f = assembled_norm(&field, s - eps_tilde(s), NormKind::F, law)?;
    let data_sq = traj.states[0].sobolev_norm(s).powi(2);
    let energy_sq = e * e;
    let nonlinear = t * f.powi(6);
    Ok(PropagationReport { energy_sq, data_sq, nonlinear, constant: energy_sq / (data_sq + nonlinear) })
}

/// Galerkin cubic for callers that want `ŵ` itself.
pub fn cubic_coefficients(u: &Field, law: DispersionLaw) -> Vec<C64> {
    Nonlinearity::new(law, 1.0, *u.geometry()).cubic(u.coeffs())
}
