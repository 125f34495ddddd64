//! Spectral measures and the bridge between A and ρ.

use crate::amplitude::AmplitudeFunction;
use crate::error::{Error, Result};
use crate::model::{Family, Problem, ReferenceSet};
use crate::oracle::{rayleigh_E, DiscreteSpectrum};
use crate::quad::{gl16, gl_composite};
use crate::report::VerificationReport;
use crate::testfn::TestFunction;
use crate::weyl::{atkinson_m0, m_principal, ATKINSON_E};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Point masses of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Atoms {
    /// `(λ_j, c_j)` pairs.
    Finite(Vec<(f64, f64)>),
    /// `λ_n = π²(n − shift)²/b²` with weight `2λ_n/b`, n ≥ 1.
    Lattice { b: f64, shift: f64 },
}

impl Atoms {
    fn lattice_atom(b: f64, shift: f64, n: usize) -> (f64, f64) {
        let k = PI * (n as f64 - shift) / b;
        (k * k, 2.0 * k * k / b)
    }

    /// Atoms with `lo ≤ λ ≤ hi`.
    pub fn within(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        match self {
            Atoms::Finite(v) => v.iter().copied().filter(|a| a.0 >= lo && a.0 <= hi).collect(),
            Atoms::Lattice { b, shift } => {
                let mut out = Vec::new();
                for n in 1.. {
                    let at = Self::lattice_atom(*b, *shift, n);
                    if at.0 > hi {
                        break;
                    }
                    if at.0 >= lo {
                        out.push(at);
                    }
                }
                out
            }
        }
    }

    /// `Σ c_j g(λ_j)`; a lattice sum runs in blocks of 32 atoms until a block
    /// falls below `rel` times the largest term or sits on a rounding plateau.
    fn sum(&self, g: impl Fn(f64) -> f64, rel: f64) -> f64 {
        match self {
            Atoms::Finite(v) => v.iter().map(|&(l, c)| c * g(l)).sum(),
            Atoms::Lattice { b, shift } => {
                let mut s = 0.0;
                let mut stop = Stopper::new(rel);
                for block in 0..1_000_000usize {
                    let mut env: f64 = 0.0;
                    for n in 32 * block + 1..=32 * block + 32 {
                        let (l, c) = Self::lattice_atom(*b, *shift, n);
                        let t = c * g(l);
                        env = env.max(t.abs());
                        s += t;
                    }
                    if stop.done(env) {
                        break;
                    }
                }
                s
            }
        }
    }
}

/// Stopping rule for sums of decaying blocks: two blocks below `rel · max(peak, 1)`,
/// or blocks that no longer decrease once below `1e−6 · max(peak, 1)` (rounding noise).
struct Stopper {
    rel: f64,
    peak: f64,
    prev: f64,
    quiet: usize,
}

impl Stopper {
    fn new(rel: f64) -> Self {
        Self { rel, peak: 0.0, prev: f64::INFINITY, quiet: 0 }
    }

    fn done(&mut self, env: f64) -> bool {
        self.peak = self.peak.max(env);
        let scale = self.peak.max(1.0);
        let plateau = env < 1e-6 * scale && env > 0.7 * self.prev;
        self.prev = env;
        if env <= self.rel * scale || plateau {
            self.quiet += 1;
        } else {
            self.quiet = 0;
        }
        self.quiet >= 2
    }
}

/// User-supplied density on `[start, ∞)`.
#[derive(Clone)]
pub struct CustomDensity {
    pub start: f64,
    pub label: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity").field("start", &self.start).field("label", &self.label).finish()
    }
}

/// Absolutely continuous part; every variant behaves like `√λ/π` at +∞.
#[derive(Debug, Clone)]
pub enum Density {
    /// `√λ/π`.
    Free,
    /// `√(λ − q0)/π` for λ ≥ q0.
    Shifted { q0: f64 },
    /// `(λ + β²)/(λ + γ²) · √λ/π`.
    Rational { beta: f64, gamma: f64 },
    /// `(1 + h²)√λ / (π(λ + h²))`, the free measure for the boundary condition `u' + hu = 0`.
    HFree { h: f64 },
    Custom(CustomDensity),
}

impl Density {
    pub fn start(&self) -> f64 {
        match self {
            Density::Shifted { q0 } => *q0,
            Density::Custom(c) => c.start,
            _ => 0.0,
        }
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        if lambda < self.start() {
            return 0.0;
        }
        match self {
            Density::Free => lambda.sqrt() / PI,
            Density::Shifted { q0 } => (lambda - q0).sqrt() / PI,
            Density::Rational { beta, gamma } => (lambda + beta * beta) / (lambda + gamma * gamma) * lambda.sqrt() / PI,
            Density::HFree { h } => (1.0 + h * h) * lambda.sqrt() / (PI * (lambda + h * h)),
            Density::Custom(c) => (c.f)(lambda),
        }
    }

    /// `ρ'(λ₀ + t²) · 2t`, the density in the variable `t = √(λ − λ₀)`.
    fn in_t(&self, t: f64) -> f64 {
        let lambda = self.start() + t * t;
        match self {
            Density::Free => 2.0 * t * t / PI,
            Density::Shifted { .. } => 2.0 * t * t / PI,
            Density::Rational { beta, gamma } => 2.0 * t * t * (lambda + beta * beta) / (lambda + gamma * gamma) / PI,
            Density::HFree { h } => 2.0 * t * t * (1.0 + h * h) / (PI * (lambda + h * h)),
            Density::Custom(_) => self.eval(lambda) * 2.0 * t,
        }
    }

    fn tag(&self) -> String {
        match self {
            Density::Free => "free".into(),
            Density::Shifted { q0 } => format!("shifted(q0={q0})"),
            Density::Rational { beta, gamma } => format!("rational(beta={beta},gamma={gamma})"),
            Density::HFree { h } => format!("h_free(h={h})"),
            Density::Custom(c) => c.label.clone(),
        }
    }
}

/// Atoms plus an optional absolutely continuous part.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    pub atoms: Atoms,
    pub density: Option<Density>,
}

impl SpectralMeasure {
    pub fn new(atoms: Atoms, density: Option<Density>) -> Self {
        Self { atoms, density }
    }

    pub fn from_discrete(spectrum: &DiscreteSpectrum) -> Self {
        let atoms = spectrum.eigenvalues.iter().copied().zip(spectrum.weights.iter().copied()).collect();
        Self::new(Atoms::Finite(atoms), None)
    }

    pub fn validate(&self) -> Result<()> {
        if let Atoms::Finite(v) = &self.atoms {
            if v.iter().any(|a| !(a.1 > 0.0) || !a.0.is_finite()) {
                return Err(Error::InvalidArgument("atom weights must be positive".into()));
            }
        }
        if let Atoms::Lattice { b, .. } = self.atoms {
            if !(b > 0.0) {
                return Err(Error::InvalidArgument("lattice spacing must be positive".into()));
            }
        }
        if let Some(d) = &self.density {
            for k in 0..40 {
                let l = d.start() + 1e-3 * 1.5f64.powi(k);
                if !(d.eval(l) >= 0.0) {
                    return Err(Error::InvalidArgument(format!("density negative at {l}")));
                }
            }
        }
        Ok(())
    }

    /// `∫ g(λ) ρ'(λ) dλ` over `[lo, hi] ∩ [start, ∞)`, with panels of width `w` in `t = √(λ − start)`.
    fn density_integral(&self, g: impl Fn(f64) -> f64 + Sync, lo: f64, hi: f64, w: f64) -> f64 {
        let Some(d) = &self.density else { return 0.0 };
        let s = d.start();
        if hi <= s {
            return 0.0;
        }
        let t_lo = (lo - s).max(0.0).sqrt();
        let t_hi = (hi - s).sqrt();
        if t_hi <= t_lo {
            return 0.0;
        }
        let panels = ((t_hi - t_lo) / w).ceil().max(1.0) as usize;
        let h = (t_hi - t_lo) / panels as f64;
        let (x, wt) = gl16();
        (0..panels)
            .into_par_iter()
            .map(|p| {
                let mid = t_lo + (p as f64 + 0.5) * h;
                let mut acc = 0.0;
                for (xi, wi) in x.iter().zip(wt) {
                    let t = mid + 0.5 * h * xi;
                    acc += wi * g(s + t * t) * d.in_t(t);
                }
                acc * 0.5 * h
            })
            .collect::<Vec<_>>()
            .iter()
            .sum()
    }

    /// ρ([lo, hi]).
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let atoms: f64 = self.atoms.within(lo, hi).iter().map(|a| a.1).sum();
        let span = (hi - self.density.as_ref().map_or(0.0, |d| d.start())).max(0.0).sqrt();
        atoms + self.density_integral(|_| 1.0, lo, hi, (span / 2000.0).max(0.5))
    }

    /// ∫ dρ/(1 + λ²), with the `√λ/π` tail beyond `λ = 10⁸` added in closed form.
    pub fn herglotz_integral(&self) -> f64 {
        let g = |l: f64| 1.0 / (1.0 + l * l);
        let cut = 1e8;
        let atoms = match &self.atoms {
            Atoms::Finite(v) => v.iter().map(|&(l, c)| c * g(l)).sum(),
            Atoms::Lattice { .. } => {
                let below: f64 = self.atoms.within(f64::NEG_INFINITY, cut).iter().map(|&(l, c)| c * g(l)).sum();
                // 2λ/(b(1+λ²)) summed over the lattice beyond the cut ≈ (2/π) λ^{-1/2}
                below + 2.0 / PI / cut.sqrt()
            }
        };
        let dens = match &self.density {
            None => 0.0,
            Some(d) => {
                let s = d.start();
                let mut total = 0.0;
                let mut lo = s;
                let mut width = 1.0;
                while lo < cut {
                    let hi = (lo + width).min(cut);
                    total += self.density_integral(g, lo, hi, 1.0);
                    lo = hi;
                    width *= 2.0;
                }
                total + 2.0 / PI / cut.sqrt()
            }
        };
        atoms + dens
    }

    /// JSON: atoms, density samples on a log grid, tail tag.
    pub fn to_json(&self) -> serde_json::Value {
        let atoms: Vec<(f64, f64)> = match &self.atoms {
            Atoms::Finite(v) => v.clone(),
            Atoms::Lattice { b, shift } => (1..=50).map(|n| Atoms::lattice_atom(*b, *shift, n)).collect(),
        };
        let density = self.density.as_ref().map(|d| {
            let s = d.start();
            let samples: Vec<(f64, f64)> = (0..=80)
                .map(|k| {
                    let l = s + 10f64.powf(-3.0 + 9.0 * k as f64 / 80.0);
                    (l, d.eval(l))
                })
                .collect();
            serde_json::json!({ "kind": d.tag(), "start": s, "samples": samples })
        });
        serde_json::json!({
            "schema": 1,
            "atoms": atoms,
            "lattice": match self.atoms { Atoms::Lattice { b, shift } => Some(serde_json::json!({"b": b, "shift": shift})), _ => None },
            "density": density,
            "tail": "sqrt_over_pi",
        })
    }
}

/// Closed-form measure of a solvable family.
pub fn measure_for(family: Family) -> SpectralMeasure {
    ReferenceSet { family }.measure()
}

/// `sin(2α√λ)/√λ`, continued by `sinh(2α√−λ)/√−λ` for λ < 0.
pub fn sine_kernel(alpha: f64, lambda: f64) -> f64 {
    let x = 4.0 * alpha * alpha * lambda;
    if x.abs() < 1e-2 {
        // 2α Σ (−x)^k/(2k+1)!
        let mut term = 2.0 * alpha;
        let mut sum = term;
        for k in 1..10 {
            term *= -x / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
        }
        return sum;
    }
    if lambda > 0.0 {
        let s = lambda.sqrt();
        (2.0 * alpha * s).sin() / s
    } else {
        let s = (-lambda).sqrt();
        (2.0 * alpha * s).sinh() / s
    }
}

/// `cos(2β√λ)`, continued by `cosh` for λ < 0.
fn cosine_kernel(beta: f64, lambda: f64) -> f64 {
    if lambda >= 0.0 {
        (2.0 * beta * lambda.sqrt()).cos()
    } else {
        (2.0 * beta * (-lambda).sqrt()).cosh()
    }
}

/// Result of an ε → 0 extrapolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbelianValue {
    pub value: f64,
    pub error_estimate: f64,
    /// `(ε, value at ε)`.
    pub raw: Vec<(f64, f64)>,
    /// Differences of successive raw values.
    pub residuals: Vec<f64>,
}

/// Richardson table for ε halving with error O(ε); returns the entry of the last
/// row with the smallest difference to its neighbour.
pub(crate) fn abelian_extrapolate(raw: Vec<(f64, f64)>) -> Result<AbelianValue> {
    let n = raw.len();
    let residuals: Vec<f64> = raw.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let scale = raw.iter().map(|r| r.1.abs()).fold(1.0, f64::max);
    let noisy = residuals.iter().all(|r| *r < 1e-9 * scale);
    if n >= 3 && !noisy && residuals.windows(2).all(|r| r[1] >= r[0]) && residuals[0] > 0.0 {
        return Err(Error::DivergenceSuspected { raw, residuals });
    }
    if n == 1 {
        return Ok(AbelianValue { value: raw[0].1, error_estimate: f64::INFINITY, raw, residuals });
    }
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = vec![raw[k].1];
        for j in 1..=k {
            let p = 2f64.powi(j as i32);
            let prev = &table[k - 1];
            row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) / (p - 1.0));
        }
        table.push(row);
    }
    let last = &table[n - 1];
    let mut best = (last[0], (last[0] - table[n - 2][0]).abs());
    for j in 1..n {
        let est = (last[j] - last[j - 1]).abs();
        if est < best.1 {
            best = (last[j], est);
        }
    }
    Ok(AbelianValue { value: best.0, error_estimate: best.1, raw, residuals })
}

/// Default ε schedule: four halvings from `min(0.05, α²/40)`.
pub fn default_eps_schedule(alpha: f64) -> Vec<f64> {
    let e0 = (alpha * alpha / 40.0).min(0.05);
    (0..4).map(|k| e0 / 2f64.powi(k)).collect()
}

/// `−2∫ e^{−ελ} sin(2α√λ)/√λ dρ` at one ε; the density part is cut at `λ = 50/ε`.
pub fn damped_a_integral(rho: &SpectralMeasure, alpha: f64, eps: f64) -> f64 {
    let lmax = 50.0 / eps;
    let atoms = match &rho.atoms {
        Atoms::Finite(v) => v.iter().map(|&(l, c)| c * (-eps * l).exp() * sine_kernel(alpha, l)).sum::<f64>(),
        lattice => lattice.within(f64::NEG_INFINITY, lmax).iter().map(|&(l, c)| c * (-eps * l).exp() * sine_kernel(alpha, l)).sum(),
    };
    let w = (1.0 / alpha.max(1e-3)).min(0.5);
    let start = rho.density.as_ref().map_or(0.0, |d| d.start());
    let dens = rho.density_integral(|l| (-eps * l).exp() * sine_kernel(alpha, l), start, lmax, w);
    -2.0 * (atoms + dens)
}

/// A(α) from ρ by the Abelian limit ε ↓ 0.
pub fn a_from_rho_abelian(rho: &SpectralMeasure, alpha: f64, eps_schedule: Option<&[f64]>) -> Result<AbelianValue> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("α must be positive".into()));
    }
    let eps: Vec<f64> = eps_schedule.map(|s| s.to_vec()).unwrap_or_else(|| default_eps_schedule(alpha));
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("ε schedule must be positive and decreasing".into()));
    }
    let raw: Vec<(f64, f64)> = eps.par_iter().map(|&e| (e, damped_a_integral(rho, alpha, e))).collect();
    abelian_extrapolate(raw)
}

/// `2∫₀^∞ f(α) sin(2α√λ)/√λ dα` for odd f.
fn odd_transform(f: &TestFunction, lambda: f64) -> f64 {
    let (lo, hi) = f.positive_support();
    let panels = 4 + (lambda.abs().sqrt() * (hi - lo) / 2.0).ceil() as usize;
    2.0 * gl_composite(|a| f.eval(a) * sine_kernel(a, lambda), lo, hi, panels)
}

/// `∫_ℝ φ(β) cos(2β√λ) dβ` for even φ.
fn even_transform(phi: &TestFunction, lambda: f64) -> f64 {
    let (lo, hi) = phi.positive_support();
    let panels = 4 + (lambda.abs().sqrt() * (hi - lo) / 2.0).ceil() as usize;
    2.0 * gl_composite(|b| phi.eval(b) * cosine_kernel(b, lambda), lo, hi, panels)
}

/// `∫ g dρ` for a g that decays in λ but may be costly: the density part is summed
/// in batches of t-panels until the batch envelope stops mattering. `reach` is the
/// largest α in the kernel, so `g` oscillates at frequency `2·reach` in t.
fn decaying_integral(rho: &SpectralMeasure, g: impl Fn(f64) -> f64 + Sync, rel: f64, reach: f64) -> f64 {
    let atoms = rho.atoms.sum(&g, rel);
    let Some(d) = &rho.density else { return atoms };
    let s = d.start();
    let (x, wt) = gl16();
    let panel = (5.0 / reach.max(1.0)).clamp(0.25, 4.0);
    let mut total = 0.0;
    let mut t0 = 0.0;
    let mut stop = Stopper::new(rel);
    while t0 < 2e4 {
        let parts: Vec<(f64, f64)> = (0..16)
            .into_par_iter()
            .map(|p| {
                let a = t0 + p as f64 * panel;
                let mut acc = 0.0;
                let mut env: f64 = 0.0;
                for (xi, wi) in x.iter().zip(wt) {
                    let t = a + 0.5 * panel * (1.0 + xi);
                    let v = g(s + t * t) * d.in_t(t);
                    env = env.max(v.abs());
                    acc += 0.5 * panel * wi * v;
                }
                (acc, env)
            })
            .collect();
        let env = parts.iter().map(|p| p.1).fold(0.0, f64::max);
        total += parts.iter().map(|p| p.0).sum::<f64>();
        t0 += 16.0 * panel;
        if stop.done(env) {
            break;
        }
    }
    atoms + total
}

/// |LHS − RHS| of the smeared A–ρ identity for an odd test function.
pub fn smeared_identity_residual(rho: &SpectralMeasure, a: &AmplitudeFunction, f: &TestFunction) -> Result<f64> {
    if !f.is_odd() {
        return Err(Error::InvalidArgument("test function must be odd".into()));
    }
    let (lo, hi) = f.positive_support();
    if hi > a.alpha_max() {
        return Err(Error::Domain { x: hi, b: a.alpha_max() });
    }
    let lhs = -2.0 * decaying_integral(rho, |l| odd_transform(f, l), 1e-13, hi);
    let mut rhs = -f.deriv(0.0);
    if hi > lo {
        let panels = (((hi - lo) / a.d_alpha).ceil() as usize).clamp(16, 4000);
        let regular = gl_composite(|x| a.eval(x).unwrap_or(0.0) * f.eval(x), lo, hi, panels);
        if !regular.is_finite() {
            return Err(Error::Quadrature("amplitude integral not finite".into()));
        }
        rhs += 2.0 * regular;
    }
    for at in a.atoms(0.0) {
        if at.location > hi {
            break;
        }
        rhs += 2.0 * at.delta * f.eval(at.location) - at.delta_prime * f.deriv(at.location);
    }
    Ok((lhs - rhs).abs())
}

/// `R^{−3/2} ρ([−R, R])`.
pub fn tauberian_ratio(rho: &SpectralMeasure, r: f64) -> f64 {
    rho.mass(-r, r) / r.powf(1.5)
}

/// Negative-tail moment and the checks built on it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegativeTail {
    /// `∫_{−∞}^0 e^{2(1−δ)α₀√−λ} dρ`.
    pub tail: f64,
    /// Lowest Dirichlet eigenvalue on `(0, α₀+1)`, negated.
    pub e_alpha0: f64,
    pub reports: Vec<VerificationReport>,
}

/// Certified `C_a` for `∫ dρ/(1+λ²)` from the Atkinson bounds at one point.
pub fn moment_constant(problem: &Problem, a: f64) -> Result<f64> {
    let eta = problem.potential.l1(a);
    let re = ((6f64).ln() / a).max(4.0 * eta).max(2.0 * eta) + 1.0;
    let kappa = Complex64::new(re, -0.5 * re);
    // |m| ≤ |m − m₀| + |m₀ + κ| + |κ|
    let c1 = ATKINSON_E * kappa.norm_sqr() / kappa.im.abs() * (-2.0 * a * re).exp() + 2.0 * eta + kappa.norm();
    let z = -kappa * kappa;
    let (x, y) = (z.re, z.im);
    let tr = 1.0 + x * x + y * y;
    let sup = 0.5 * (tr + (tr * tr - 4.0 * y * y).max(0.0).sqrt());
    let _ = atkinson_m0(problem, kappa, a)?;
    Ok(c1 / y * sup)
}

/// Negative-tail moment against the exponential bound, plus the `∫ dρ/(1+λ²)` bound.
pub fn negative_tail_report(rho: &SpectralMeasure, problem: &Problem, alpha0: f64, delta: f64) -> Result<NegativeTail> {
    if !(alpha0 > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument("need α₀ > 0 and δ ∈ (0, 1)".into()));
    }
    let c = 2.0 * (1.0 - delta) * alpha0;
    let g = |l: f64| (c * (-l).max(0.0).sqrt()).exp();
    let atoms: f64 = rho.atoms.within(f64::NEG_INFINITY, 0.0).iter().map(|&(l, w)| w * g(l)).sum();
    let start = rho.density.as_ref().map_or(0.0, |d| d.start());
    let tail = atoms + rho.density_integral(g, start, 0.0, 0.25);

    let e = rayleigh_E(problem, alpha0)?;
    let mut reports = Vec::new();
    let name = "negative_tail";
    if e >= 0.0 {
        let k = 1.0 + problem.potential.l1(1.0_f64.min(problem.b_value()));
        let rhs = k * (1.0 + alpha0) + k * (1.0 + e * e) * (2.0 * (alpha0 + 1.0) * e.sqrt()).exp();
        reports.push(
            VerificationReport::le(name, alpha0 * delta * tail, rhs)
                .with_note(format!("empirical constants C1 = C2 = {k}")),
        );
    } else {
        reports.push(VerificationReport::inapplicable(name, format!("E(α₀) = {e} < 0")));
    }

    let a = 1.0_f64.min(0.5 * problem.b_value());
    let ca = moment_constant(problem, a)?;
    reports.push(VerificationReport::le("moment_bound", rho.herglotz_integral(), ca));
    Ok(NegativeTail { tail, e_alpha0: e, reports })
}

/// `4∫ |C(φ, λ)|² dρ(λ)` with `C(φ, λ) = ∫ φ(β) cos(2β√λ) dβ`.
pub fn krein_form(rho: &SpectralMeasure, phi: &TestFunction) -> Result<f64> {
    if !phi.is_even() {
        return Err(Error::InvalidArgument("φ must be even".into()));
    }
    Ok(4.0 * decaying_integral(rho, |l| even_transform(phi, l).powi(2), 1e-15, 2.0 * phi.positive_support().1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ProbeVerdict {
    Converged { limit: f64 },
    /// Envelope growing like `R^exponent`.
    OscillatingUnbounded { exponent: f64 },
    /// Envelope neither growing nor settling.
    Oscillating { exponent: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeTrace {
    /// `(R, ∫_{−∞}^R sin(2α√λ)/√λ dρ)`.
    pub partial: Vec<(f64, f64)>,
    pub verdict: ProbeVerdict,
    /// `(n, G(E_n + i a₀)/√E_n)` for a Dirichlet box.
    pub del_rio: Option<Vec<(usize, f64)>>,
}

/// `G(−κ²) = 2|κ| |e^{−2κb}| / |1 − e^{−2κb}|` at `z = E + i a₀`.
pub fn del_rio_g(b: f64, z: Complex64) -> f64 {
    let kappa = (-z).sqrt();
    let e = (-2.0 * kappa * b).exp();
    2.0 * kappa.norm() * e.norm() / (1.0 - e).norm()
}

/// `G(E_n + i a₀)/√E_n` for `n = 1..=n_max`.
pub fn del_rio_trace(b: f64, a0: f64, n_max: usize) -> Vec<(usize, f64)> {
    (1..=n_max)
        .map(|n| {
            let e = (PI * n as f64 / b).powi(2);
            (n, del_rio_g(b, Complex64::new(e, a0)) / e.sqrt())
        })
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Partial integrals `∫_{−∞}^R` over an increasing grid, with a growth verdict from
/// the envelope over octaves of R.
pub fn convergence_probe(rho: &SpectralMeasure, alpha: f64, r_grid: &[f64]) -> Result<ProbeTrace> {
    if r_grid.len() < 2 || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("R grid must be increasing".into()));
    }
    let start = rho.density.as_ref().map_or(0.0, |d| d.start());
    let below = rho.atoms.within(f64::NEG_INFINITY, r_grid[0]).iter().map(|&(l, c)| c * sine_kernel(alpha, l)).sum::<f64>()
        + rho.density_integral(|l| sine_kernel(alpha, l), start, r_grid[0], 0.05);
    let mut partial = vec![(r_grid[0], below)];
    let mut acc = below;
    for w in r_grid.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        acc += rho.atoms.within(lo, hi).iter().filter(|a| a.0 > lo).map(|&(l, c)| c * sine_kernel(alpha, l)).sum::<f64>();
        acc += rho.density_integral(|l| sine_kernel(alpha, l), lo, hi, 0.05);
        partial.push((hi, acc));
    }

    // envelope per octave of R
    let mut env: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < partial.len() {
        let r0 = partial[i].0;
        let mut j = i;
        let mut peak: f64 = 0.0;
        while j < partial.len() && partial[j].0 < 2.0 * r0 {
            peak = peak.max(partial[j].1.abs());
            j += 1;
        }
        if j < partial.len() || j - i > 4 {
            env.push((partial[j - 1].0, peak));
        }
        i = j;
    }
    let last = partial.last().unwrap().1;
    let tail_spread = partial[partial.len() * 3 / 4..].iter().map(|p| (p.1 - last).abs()).fold(0.0, f64::max);
    let verdict = if tail_spread < 1e-6 * last.abs().max(1.0) {
        ProbeVerdict::Converged { limit: last }
    } else {
        let pts: Vec<(f64, f64)> = env.iter().filter(|e| e.1 > 0.0).map(|e| (e.0.ln(), e.1.ln())).collect();
        let exponent = if pts.len() >= 2 { fit_slope(&pts) } else { 0.0 };
        if exponent > 0.1 {
            ProbeVerdict::OscillatingUnbounded { exponent }
        } else {
            ProbeVerdict::Oscillating { exponent }
        }
    };
    let del_rio = match rho.atoms {
        Atoms::Lattice { b, shift } if shift == 0.0 && rho.density.is_none() => Some(del_rio_trace(b, 1.0, 20)),
        _ => None,
    };
    Ok(ProbeTrace { partial, verdict, del_rio })
}

/// Herglotz check: `Im m(z) > 0` on sample points of the upper half-plane.
pub fn herglotz_report(problem: &Problem, points: &[Complex64]) -> Result<VerificationReport> {
    let mut worst = f64::INFINITY;
    for &z in points {
        if !(z.im > 0.0) {
            return Err(Error::InvalidArgument("sample points must have Im z > 0".into()));
        }
        let kappa = (-z).sqrt();
        let m = m_principal(problem, kappa)?.value;
        worst = worst.min(m.im);
    }
    Ok(VerificationReport::le("herglotz", 0.0, worst).with_note("residual 0, bound = min Im m"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::closed_form;
    use crate::model::{reference, BoundaryParam, Potential};

    #[test]
    fn kernel_is_continuous_through_zero() {
        for alpha in [0.05, 0.1, 0.15] {
            assert!((sine_kernel(alpha, 1e-8) - 2.0 * alpha).abs() < 1e-10);
            assert!((sine_kernel(alpha, -1e-8) - 2.0 * alpha).abs() < 1e-10);
        }
        for alpha in [0.3, 1.0, 2.5] {
            // series and closed form meet at the switch
            let x = 0.01 / (4.0 * alpha * alpha);
            for l in [x * (1.0 - 1e-9), x * (1.0 + 1e-9)] as [f64; 2] {
                let s = l.sqrt();
                assert!((sine_kernel(alpha, l) - (2.0 * alpha * s).sin() / s).abs() < 1e-12);
                let s = l.sqrt();
                assert!((sine_kernel(alpha, -l) - (2.0 * alpha * s).sinh() / s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_measures() {
        let bx = measure_for(Family::Box { b: 1.0, neumann: false });
        let first = bx.atoms.within(0.0, 10.0)[0];
        assert!((first.0 - 9.8696044).abs() < 1e-6 && (first.1 - 19.7392088).abs() < 1e-6);
        let free = measure_for(Family::Free);
        assert!((free.density.unwrap().eval(4.0) - 2.0 / PI).abs() < 1e-15);
        let c = measure_for(Family::Constant { q0: 1.0 });
        assert!((c.density.unwrap().eval(2.0) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn free_prelimit_closed_form() {
        let free = measure_for(Family::Free);
        let v = damped_a_integral(&free, 1.0, 0.1);
        let want = -2.0 / PI.sqrt() * 0.1f64.powf(-1.5) * (-10f64).exp();
        assert!((v - want).abs() < 1e-10, "{v} {want}");
        let r = a_from_rho_abelian(&free, 1.0, Some(&[0.2, 0.1, 0.05])).unwrap();
        assert!(r.value.abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn abelian_bargmann() {
        let one = measure_for(Family::BargmannOneEigenvalue { kappa1: 1.0, c1: 1.0 });
        let v = a_from_rho_abelian(&one, 0.5, None).unwrap().value;
        assert!((v + 2.0 * 1f64.sinh()).abs() < 1e-6, "{v}");
        let res = measure_for(Family::BargmannResonance { beta: 1.0, gamma: 2.0 });
        let v = a_from_rho_abelian(&res, 0.5, None).unwrap().value;
        assert!((v - 6.0 * (-2f64).exp()).abs() < 1e-5, "{v}");
    }

    #[test]
    fn divergent_sequence_is_flagged() {
        let raw = vec![(0.4, 1.0), (0.2, 2.0), (0.1, 4.0), (0.05, 8.0)];
        assert!(matches!(abelian_extrapolate(raw), Err(Error::DivergenceSuspected { .. })));
    }

    #[test]
    fn tauberian() {
        let free = measure_for(Family::Free);
        for r in [1.0, 37.0, 1e4] {
            assert!((tauberian_ratio(&free, r) - 2.0 / (3.0 * PI)).abs() < 1e-14);
        }
        // lattice sum Σ_{n ≤ 31} 2π²n² at R = 10⁴ sits 3% low
        let bx = measure_for(Family::Box { b: 1.0, neumann: false });
        let direct = 2.0 * PI * PI * (31.0 * 32.0 * 63.0 / 6.0) / 1e6;
        assert!((tauberian_ratio(&bx, 1e4) - direct).abs() < 1e-12);
        assert!((tauberian_ratio(&bx, 1e8) / (2.0 / (3.0 * PI)) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn smeared_identity_free_and_box() {
        let f = TestFunction::OddBump { center: 1.0, width: 0.6 };
        let p = Problem::half_line(Potential::Zero);
        let a = closed_form(&reference(&p).unwrap(), &p, 3.0, 1e-3).unwrap();
        let r = smeared_identity_residual(&measure_for(Family::Free), &a, &f).unwrap();
        assert!(r < 1e-8, "{r}");

        let ramp = TestFunction::Ramp { width: 1.0 };
        let r = smeared_identity_residual(&measure_for(Family::Free), &a, &ramp).unwrap();
        assert!(r < 1e-6, "{r}");

        let bx = Problem::interval(Potential::Zero, 1.0, BoundaryParam::Dirichlet);
        let a = closed_form(&reference(&bx).unwrap(), &bx, 0.9, 1e-3).unwrap();
        let mut a = a;
        // zero regular part extends past b
        a.values = vec![0.0; 3001];
        let f = TestFunction::OddBump { center: 1.7, width: 0.9 };
        let r = smeared_identity_residual(&measure_for(Family::Box { b: 1.0, neumann: false }), &a, &f).unwrap();
        assert!(r < 1e-4, "{r}");
    }

    #[test]
    fn krein_atom_only() {
        let phi = TestFunction::EvenBump { center: 0.0, width: 1.0 };
        let c = even_transform(&phi, -1.0);
        let rho = SpectralMeasure::new(Atoms::Finite(vec![(-1.0, 2.0)]), None);
        assert!((krein_form(&rho, &phi).unwrap() - 8.0 * c * c).abs() < 1e-12);
        assert!(krein_form(&measure_for(Family::Free), &phi).unwrap() > 0.0);
    }

    #[test]
    fn negative_tail_single_atom() {
        let rho = measure_for(Family::BargmannOneEigenvalue { kappa1: 1.0, c1: 1.0 });
        let p = Problem::half_line(Potential::BargmannOneEigenvalue { kappa1: 1.0, c1: 1.0 });
        let t = negative_tail_report(&rho, &p, 1.0, 0.5).unwrap();
        assert!((t.tail - std::f64::consts::E).abs() < 1e-14);
        assert!(t.reports.iter().all(|r| r.ok()), "{:?}", t.reports);
    }

    #[test]
    fn probes() {
        let bx = measure_for(Family::Box { b: 1.0, neumann: false });
        let grid: Vec<f64> = (1..=1200).map(|n| (PI * (n as f64 + 0.5)).powi(2)).collect();
        let tr = convergence_probe(&bx, 0.3, &grid).unwrap();
        match tr.verdict {
            ProbeVerdict::OscillatingUnbounded { exponent } => assert!((exponent - 0.5).abs() < 0.1),
            v => panic!("{v:?}"),
        }
        let d = tr.del_rio.unwrap();
        assert!(d[4..].windows(2).all(|w| w[1].1 > w[0].1));
    }
}
