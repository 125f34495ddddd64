//! Potentials, problem classes and the closed-form reference families.

use crate::amplitude::SingularAtom;
use crate::error::{Error, Result};
use crate::oracle::{i1, j1};
use crate::quad::adaptive_simpson;
use crate::spectral::{Atoms, Density, SpectralMeasure};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Piecewise-linear samples on a grid starting at 0; zero beyond the last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSamples", into = "RawSamples")]
pub struct Samples {
    xs: Vec<f64>,
    qs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSamples {
    xs: Vec<f64>,
    qs: Vec<f64>,
}

impl TryFrom<RawSamples> for Samples {
    type Error = Error;
    fn try_from(r: RawSamples) -> Result<Self> {
        Samples::new(r.xs, r.qs)
    }
}

impl From<Samples> for RawSamples {
    fn from(s: Samples) -> Self {
        RawSamples { xs: s.xs, qs: s.qs }
    }
}

impl Samples {
    pub fn new(xs: Vec<f64>, qs: Vec<f64>) -> Result<Self> {
        if xs.len() != qs.len() || xs.len() < 2 {
            return Err(Error::InvalidPotential("need at least two (x, q) samples of equal length".into()));
        }
        if xs[0] != 0.0 {
            return Err(Error::InvalidPotential("sample grid must start at 0".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPotential("sample grid must be strictly increasing".into()));
        }
        if xs.iter().chain(&qs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("samples must be finite".into()));
        }
        Ok(Self { xs, qs })
    }

    /// Uniform samples of `f` on `[0, len]`.
    pub fn from_fn(len: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let xs: Vec<f64> = (0..=n).map(|i| len * i as f64 / n as f64).collect();
        let qs = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, qs)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn qs(&self) -> &[f64] {
        &self.qs
    }

    pub fn end(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn eval(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.end() {
            return 0.0;
        }
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= self.xs.len() => self.xs.len() - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.qs[i] * (1.0 - t) + self.qs[i + 1] * t
    }

    /// Exact ∫|q| over `[0, a]` for the linear interpolant.
    fn l1(&self, a: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.xs.len() - 1 {
            let (x0, x1) = (self.xs[i], self.xs[i + 1]);
            if x0 >= a {
                break;
            }
            let hi = x1.min(a);
            let (q0, q1) = (self.qs[i], self.eval(hi));
            total += abs_linear_integral(q0, q1, hi - x0);
        }
        total
    }
}

/// ∫₀ᴸ |linear from v0 to v1|.
fn abs_linear_integral(v0: f64, v1: f64, len: f64) -> f64 {
    if v0 * v1 >= 0.0 {
        0.5 * (v0.abs() + v1.abs()) * len
    } else {
        let t = v0.abs() / (v0.abs() + v1.abs());
        0.5 * len * (v0.abs() * t + v1.abs() * (1.0 - t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Potential {
    Zero,
    Constant { q0: f64 },
    Sampled { samples: Samples },
    /// Rational Jost function `(k - iκ₁)/(k + iκ₁)`: one bound state at `-κ₁²` with weight `c₁`.
    BargmannOneEigenvalue { kappa1: f64, c1: f64 },
    /// Jost function `(k + iγ)/(k + iβ)`, no bound states.
    BargmannResonance { beta: f64, gamma: f64 },
    /// `inner · χ_[0, cutoff]`.
    Truncated { inner: Box<Potential>, cutoff: f64 },
}

impl Potential {
    pub fn sampled(xs: Vec<f64>, qs: Vec<f64>) -> Result<Self> {
        Ok(Potential::Sampled { samples: Samples::new(xs, qs)? })
    }

    pub fn truncated(inner: Potential, cutoff: f64) -> Self {
        Potential::Truncated { inner: Box::new(inner), cutoff }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Zero | Potential::Sampled { .. } => Ok(()),
            Potential::Constant { q0 } if q0.is_finite() => Ok(()),
            Potential::Constant { .. } => Err(Error::InvalidPotential("q0 must be finite".into())),
            Potential::BargmannOneEigenvalue { kappa1, c1 } => {
                if *kappa1 > 0.0 && *c1 > 0.0 && kappa1.is_finite() && c1.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidPotential("need kappa1 > 0 and c1 > 0".into()))
                }
            }
            Potential::BargmannResonance { beta, gamma } => {
                if *beta > 0.0 && *gamma >= 0.0 && beta.is_finite() && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidPotential("need beta > 0 and gamma >= 0".into()))
                }
            }
            Potential::Truncated { inner, cutoff } => {
                if !(*cutoff > 0.0) || !cutoff.is_finite() {
                    return Err(Error::InvalidPotential("cutoff must be positive and finite".into()));
                }
                inner.validate()
            }
        }
    }

    /// q(x) for x ≥ 0 without domain checks.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { q0 } => *q0,
            Potential::Sampled { samples } => samples.eval(x),
            Potential::BargmannOneEigenvalue { kappa1, c1 } => bargmann_one_q(*kappa1, *c1, x),
            Potential::BargmannResonance { beta, gamma } => {
                let r = (beta - gamma) / (beta + gamma);
                let e = (-2.0 * beta * x).exp();
                let d = 1.0 + r * e;
                -8.0 * beta * beta * r * e / (d * d)
            }
            Potential::Truncated { inner, cutoff } => {
                if x <= *cutoff {
                    inner.eval(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// End of the support when q vanishes identically beyond some point.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            Potential::Zero => Some(0.0),
            Potential::Sampled { samples } => Some(samples.end()),
            Potential::Truncated { inner, cutoff } => {
                Some(inner.support_end().map_or(*cutoff, |s| s.min(*cutoff)))
            }
            Potential::BargmannResonance { beta, gamma } if beta == gamma => Some(0.0),
            _ => None,
        }
    }

    /// Exponential decay rate of q at infinity (infinite for compact support).
    pub fn decay_rate(&self) -> Option<f64> {
        if self.support_end().is_some() {
            return Some(f64::INFINITY);
        }
        match self {
            Potential::BargmannOneEigenvalue { kappa1, .. } => Some(2.0 * kappa1),
            Potential::BargmannResonance { beta, .. } => Some(2.0 * beta),
            _ => None,
        }
    }

    /// Points in `(lo, hi)` where q or q' may jump.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(lo, hi, &mut out);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    fn collect_breakpoints(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        match self {
            Potential::Sampled { samples } => {
                out.extend(samples.xs.iter().copied().filter(|&x| x > lo && x < hi));
            }
            Potential::Truncated { inner, cutoff } => {
                if *cutoff > lo && *cutoff < hi {
                    out.push(*cutoff);
                }
                inner.collect_breakpoints(lo, hi.min(*cutoff), out);
            }
            _ => {}
        }
    }

    /// ∫₀ᵃ |q|; `a` may be infinite for potentials with a decay rate.
    pub fn l1(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { q0 } => q0.abs() * a,
            Potential::Sampled { samples } => samples.l1(a),
            Potential::Truncated { inner, cutoff } => inner.l1(a.min(*cutoff)),
            // one-signed
            Potential::BargmannResonance { .. } => self.integral(a).abs(),
            Potential::BargmannOneEigenvalue { kappa1, .. } => {
                let hi = if a.is_finite() { a } else { 40.0 / kappa1 };
                let pieces = (hi * kappa1).ceil().max(1.0) as usize;
                let h = hi / pieces as f64;
                (0..pieces)
                    .map(|i| {
                        adaptive_simpson(&|x| self.eval(x).abs(), i as f64 * h, (i + 1) as f64 * h, 1e-12)
                    })
                    .sum()
            }
        }
    }

    /// Signed ∫₀ᵃ q.
    pub fn integral(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { q0 } => q0 * a,
            Potential::Sampled { samples } => {
                let mut total = 0.0;
                for i in 0..samples.xs.len() - 1 {
                    let (x0, x1) = (samples.xs[i], samples.xs[i + 1]);
                    if x0 >= a {
                        break;
                    }
                    let hi = x1.min(a);
                    total += 0.5 * (samples.qs[i] + samples.eval(hi)) * (hi - x0);
                }
                total
            }
            Potential::Truncated { inner, cutoff } => inner.integral(a.min(*cutoff)),
            Potential::BargmannResonance { beta, gamma } => {
                let r = (beta - gamma) / (beta + gamma);
                let e = (-2.0 * beta * a).exp();
                -4.0 * beta * r * (1.0 - e) / ((1.0 + r) * (1.0 + r * e))
            }
            Potential::BargmannOneEigenvalue { kappa1, .. } => {
                let hi = if a.is_finite() { a } else { 40.0 / kappa1 };
                let pieces = (hi * kappa1).ceil().max(1.0) as usize;
                let h = hi / pieces as f64;
                (0..pieces)
                    .map(|i| adaptive_simpson(&|x| self.eval(x), i as f64 * h, (i + 1) as f64 * h, 1e-12))
                    .sum()
            }
        }
    }

    /// sup |q| over `[0, a]`.
    pub fn sup_abs(&self, a: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { q0 } => q0.abs(),
            Potential::Sampled { samples } => {
                let mut m = samples.eval(a.min(samples.end())).abs();
                for (x, q) in samples.xs.iter().zip(&samples.qs) {
                    if *x <= a {
                        m = m.max(q.abs());
                    }
                }
                m
            }
            Potential::Truncated { inner, cutoff } => inner.sup_abs(a.min(*cutoff)),
            Potential::BargmannResonance { .. } => self.eval(0.0).abs(),
            Potential::BargmannOneEigenvalue { kappa1, .. } => {
                // |q| rises from 0 to a single interior maximum, then decays.
                let hi = a.min(40.0 / kappa1);
                let n = 4000;
                let mut best = (0.0f64, 0.0f64);
                for i in 0..=n {
                    let x = hi * i as f64 / n as f64;
                    let v = self.eval(x).abs();
                    if v > best.1 {
                        best = (x, v);
                    }
                }
                let step = hi / n as f64;
                let (mut lo, mut up) = ((best.0 - step).max(0.0), (best.0 + step).min(hi));
                for _ in 0..80 {
                    let m1 = lo + (up - lo) / 3.0;
                    let m2 = up - (up - lo) / 3.0;
                    if self.eval(m1).abs() < self.eval(m2).abs() {
                        lo = m1;
                    } else {
                        up = m2;
                    }
                }
                best.1.max(self.eval(0.5 * (lo + up)).abs())
            }
        }
    }

    /// sup over x in `[0, a]` of ∫ₓ^{x+δ} |q|.
    pub fn window_l1_sup(&self, a: f64, delta: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { q0 } => q0.abs() * delta,
            _ => {
                let n = 400;
                let mut best: f64 = 0.0;
                let mut xs: Vec<f64> = (0..=n).map(|i| a * i as f64 / n as f64).collect();
                // windows of a piecewise-linear |q| peak when an edge sits on a node
                for bp in self.breakpoints(0.0, a + delta) {
                    xs.push(bp);
                    if bp - delta >= 0.0 {
                        xs.push(bp - delta);
                    }
                }
                for x in xs.into_iter().filter(|&x| x <= a) {
                    best = best.max(self.l1(x + delta) - self.l1(x));
                }
                best
            }
        }
    }
}

fn bargmann_one_q(kappa: f64, c: f64, x: f64) -> f64 {
    // D(x) = 1 + (c/κ²)(sinh(2κx)/(4κ) - x/2); every term below is D-type quantity times e^{-2κx}.
    let e = (-2.0 * kappa * x).exp();
    let one_minus_e = -(-2.0 * kappa * x).exp_m1();
    let k2 = kappa * kappa;
    let de = e + c / k2 * (one_minus_e * (1.0 + e) / (8.0 * kappa) - 0.5 * x * e);
    let d1e = c / k2 * one_minus_e * one_minus_e / 4.0;
    let d2e = c / kappa * one_minus_e * (1.0 + e) / 2.0;
    let r1 = d1e / de;
    -2.0 * (d2e / de - r1 * r1)
}

/// Extended real boundary parameter at the right endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryParam {
    /// `u(b) = 0`.
    Dirichlet,
    /// `u'(b) + h u(b) = 0`.
    Robin(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub potential: Potential,
    /// `None` for the half-line.
    pub b: Option<f64>,
    /// Boundary condition at `b`; ignored when `b` is `None`.
    pub h_at_b: BoundaryParam,
}

impl Problem {
    pub fn half_line(potential: Potential) -> Self {
        Self { potential, b: None, h_at_b: BoundaryParam::Dirichlet }
    }

    pub fn interval(potential: Potential, b: f64, h: BoundaryParam) -> Self {
        Self { potential, b: Some(b), h_at_b: h }
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        if let Some(b) = self.b {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::InvalidProblem("b must be positive and finite".into()));
            }
            if let BoundaryParam::Robin(h) = self.h_at_b {
                if !h.is_finite() {
                    return Err(Error::InvalidProblem("h must be finite (use Dirichlet for h = ∞)".into()));
                }
            }
        } else if let Potential::Sampled { .. } | Potential::Truncated { .. } = self.potential {
            // compactly supported, fine
        }
        Ok(())
    }

    pub fn b_value(&self) -> f64 {
        self.b.unwrap_or(f64::INFINITY)
    }

    /// h as an extended real (`INFINITY` for Dirichlet).
    pub fn h_value(&self) -> f64 {
        match self.h_at_b {
            BoundaryParam::Dirichlet => f64::INFINITY,
            BoundaryParam::Robin(h) => h,
        }
    }

    /// Potential restricted to the domain: on a finite interval q is cut at `b`.
    pub fn effective_potential(&self) -> Potential {
        match self.b {
            Some(b) => Potential::truncated(self.potential.clone(), b),
            None => self.potential.clone(),
        }
    }
}

/// q(x) with the domain check `0 ≤ x < b`.
pub fn eval_q(problem: &Problem, x: f64) -> Result<f64> {
    let b = problem.b_value();
    if !(x >= 0.0) || x >= b {
        return Err(Error::Domain { x, b });
    }
    Ok(problem.potential.eval(x))
}

/// ∫₀ᵃ |q| for finite `a ≤ b`.
pub fn q_l1(problem: &Problem, a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() || a > problem.b_value() {
        return Err(Error::Domain { x: a, b: problem.b_value() });
    }
    Ok(problem.potential.l1(a))
}

/// Solvable families with closed-form m, A and ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Free,
    /// q = 0 on `(0, b)` with Dirichlet (`neumann = false`) or Neumann condition at b.
    Box { b: f64, neumann: bool },
    Constant { q0: f64 },
    BargmannOneEigenvalue { kappa1: f64, c1: f64 },
    BargmannResonance { beta: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub family: Family,
}

/// Closed-form reference for a solvable problem.
pub fn reference(problem: &Problem) -> Result<ReferenceSet> {
    problem.validate()?;
    let family = match (&problem.potential, problem.b) {
        (Potential::Zero, None) => Family::Free,
        (Potential::Zero, Some(b)) => match problem.h_at_b {
            BoundaryParam::Dirichlet => Family::Box { b, neumann: false },
            BoundaryParam::Robin(h) if h == 0.0 => Family::Box { b, neumann: true },
            BoundaryParam::Robin(_) => {
                return Err(Error::NotAReference("box with general h".into()));
            }
        },
        (Potential::Constant { q0 }, None) => Family::Constant { q0: *q0 },
        (Potential::BargmannOneEigenvalue { kappa1, c1 }, None) => {
            Family::BargmannOneEigenvalue { kappa1: *kappa1, c1: *c1 }
        }
        (Potential::BargmannResonance { beta, gamma }, None) => {
            Family::BargmannResonance { beta: *beta, gamma: *gamma }
        }
        (p, _) => return Err(Error::NotAReference(format!("{p:?} on this domain"))),
    };
    Ok(ReferenceSet { family })
}

impl ReferenceSet {
    /// m(-κ²) in closed form.
    pub fn m(&self, kappa: Complex64) -> Complex64 {
        match self.family {
            Family::Free => -kappa,
            Family::Box { b, neumann } => {
                let e = (-2.0 * kappa * b).exp();
                if neumann {
                    -kappa * (1.0 - e) / (1.0 + e)
                } else {
                    -kappa * (1.0 + e) / (1.0 - e)
                }
            }
            Family::Constant { q0 } => -(kappa * kappa + q0).sqrt(),
            Family::BargmannOneEigenvalue { kappa1, c1 } => -kappa + c1 / (kappa * kappa - kappa1 * kappa1),
            Family::BargmannResonance { beta, gamma } => {
                -kappa - (gamma * gamma - beta * beta) / (kappa + gamma)
            }
        }
    }

    /// Regular part of the amplitude at α ≥ 0 (the α → 0 limit at α = 0).
    pub fn a(&self, alpha: f64) -> f64 {
        match self.family {
            Family::Free | Family::Box { .. } => 0.0,
            Family::Constant { q0 } => constant_amplitude(q0, alpha),
            Family::BargmannOneEigenvalue { kappa1, c1 } => -2.0 * c1 / kappa1 * (2.0 * alpha * kappa1).sinh(),
            Family::BargmannResonance { beta, gamma } => {
                2.0 * (gamma * gamma - beta * beta) * (-2.0 * alpha * gamma).exp()
            }
        }
    }

    /// δ/δ' atoms at α = bn (empty on the half-line).
    pub fn atoms(&self, count: usize) -> Vec<SingularAtom> {
        match self.family {
            Family::Box { b, neumann } => (1..=count)
                .map(|n| SingularAtom {
                    location: b * n as f64,
                    delta: 0.0,
                    delta_prime: if neumann && n % 2 == 1 { -2.0 } else { 2.0 },
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn measure(&self) -> SpectralMeasure {
        match self.family {
            Family::Free => SpectralMeasure::new(Atoms::Finite(vec![]), Some(Density::Free)),
            Family::Box { b, neumann } => SpectralMeasure::new(
                Atoms::Lattice { b, shift: if neumann { 0.5 } else { 0.0 } },
                None,
            ),
            Family::Constant { q0 } => SpectralMeasure::new(Atoms::Finite(vec![]), Some(Density::Shifted { q0 })),
            Family::BargmannOneEigenvalue { kappa1, c1 } => {
                SpectralMeasure::new(Atoms::Finite(vec![(-kappa1 * kappa1, c1)]), Some(Density::Free))
            }
            Family::BargmannResonance { beta, gamma } => {
                SpectralMeasure::new(Atoms::Finite(vec![]), Some(Density::Rational { beta, gamma }))
            }
        }
    }
}

/// √q0 J₁(2α√q0)/α for q0 > 0, -√|q0| I₁(2α√|q0|)/α for q0 < 0; q0 at α = 0.
pub fn constant_amplitude(q0: f64, alpha: f64) -> f64 {
    let s = q0.abs().sqrt();
    let x = 2.0 * alpha * s;
    if x < 1e-6 {
        // J₁(x)/x = 1/2 - x²/16, I₁(x)/x = 1/2 + x²/16
        let corr = if q0 > 0.0 { 1.0 - x * x / 8.0 } else { 1.0 + x * x / 8.0 };
        return q0 * corr;
    }
    if q0 > 0.0 {
        s * j1(x) / alpha
    } else {
        -s * i1(x) / alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bargmann_resonance_values() {
        let p = Potential::BargmannResonance { beta: 1.0, gamma: 2.0 };
        assert!((p.eval(0.0) - 6.0).abs() < 1e-14);
        let soliton = Potential::BargmannResonance { beta: 1.0, gamma: 0.0 };
        assert!((soliton.eval(0.0) + 2.0).abs() < 1e-14);
        for x in [0.3, 1.7, 5.0] {
            let sech = 1.0 / f64::cosh(x);
            assert!((soliton.eval(x) + 2.0 * sech * sech).abs() < 1e-13);
        }
        assert!((soliton.l1(10.0) - 2.0 * 10f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn bargmann_one_vanishes_at_origin_and_matches_finite_differences() {
        let p = Potential::BargmannOneEigenvalue { kappa1: 1.0, c1: 1.0 };
        assert!(p.eval(1e-9).abs() < 1e-8);
        // q = -2 (ln D)'' with D = 1 + sinh(2x)/4 - x/2
        let ln_d = |x: f64| (1.0 + (2.0 * x).sinh() / 4.0 - x / 2.0).ln();
        for x in [0.2, 1.0, 2.5] {
            let h = 1e-4;
            let fd = -2.0 * (ln_d(x + h) - 2.0 * ln_d(x) + ln_d(x - h)) / (h * h);
            assert!((p.eval(x) - fd).abs() < 1e-6, "x={x}");
        }
        assert!(p.eval(400.0).is_finite());
    }

    #[test]
    fn l1_norms() {
        assert_eq!(Potential::Zero.l1(3.0), 0.0);
        assert_eq!(Potential::Constant { q0: -2.0 }.l1(3.0), 6.0);
        let s = Potential::sampled(vec![0.0, 1.0, 2.0], vec![1.0, -1.0, 1.0]).unwrap();
        assert!((s.l1(2.0) - 1.0).abs() < 1e-15);
        assert!((s.l1(0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn eval_q_domain() {
        let p = Problem::interval(Potential::Constant { q0: 1.0 }, 1.0, BoundaryParam::Dirichlet);
        assert!(eval_q(&p, 1.0).is_err());
        assert!(eval_q(&p, -0.1).is_err());
        assert_eq!(eval_q(&p, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn reference_values() {
        let r = reference(&Problem::half_line(Potential::Constant { q0: 1.0 })).unwrap();
        assert!((r.m(c(2.0, 0.0)).re + 5f64.sqrt()).abs() < 1e-15);
        let bx = reference(&Problem::interval(Potential::Zero, 1.0, BoundaryParam::Dirichlet)).unwrap();
        assert!((bx.m(c(1.0, 0.0)).re + 1.3130352854993312).abs() < 1e-14);
        let b2 = reference(&Problem::half_line(Potential::BargmannResonance { beta: 1.0, gamma: 2.0 })).unwrap();
        assert!((b2.m(c(1.0, 0.0)).re + 2.0).abs() < 1e-15);
        let trivial = reference(&Problem::half_line(Potential::BargmannResonance { beta: 1.5, gamma: 1.5 })).unwrap();
        let k = c(2.0, -0.7);
        assert_eq!(trivial.m(k), -k);
        assert!(reference(&Problem::interval(Potential::Zero, 1.0, BoundaryParam::Robin(1.0))).is_err());
    }

    #[test]
    fn amplitude_limits_match_q_at_origin() {
        for q0 in [1.0, -1.0, 3.0] {
            let r = ReferenceSet { family: Family::Constant { q0 } };
            assert!((r.a(1e-4) - q0).abs() < 1e-6);
        }
        let b2 = ReferenceSet { family: Family::BargmannResonance { beta: 1.0, gamma: 2.0 } };
        assert!((b2.a(1e-8) - 6.0).abs() < 1e-6);
        assert!((b2.a(0.5) - 6.0 * (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn references_are_herglotz() {
        let fams = [
            Family::Free,
            Family::Box { b: 1.0, neumann: false },
            Family::Box { b: 2.0, neumann: true },
            Family::Constant { q0: 1.0 },
            Family::Constant { q0: -3.0 },
            Family::BargmannOneEigenvalue { kappa1: 1.0, c1: 1.0 },
            Family::BargmannResonance { beta: 1.0, gamma: 2.0 },
            Family::BargmannResonance { beta: 2.0, gamma: 0.5 },
        ];
        for f in fams {
            let r = ReferenceSet { family: f };
            for &(re, im) in &[(-3.0, 0.1), (0.5, 2.0), (10.0, 0.01), (-0.2, 5.0), (50.0, 1.0)] {
                let z = c(re, im);
                let kappa = (-z).sqrt();
                assert!(r.m(kappa).im > 0.0, "{f:?} z={z}");
            }
        }
    }
}
