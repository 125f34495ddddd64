//! m(−κ²) and m(−κ², x) from the Weyl solution, plus the a-priori comparison bounds.
//!
//! The linear system is integrated in the gauge `u(x) = e^{−κ(x − X)} w(x)`, where
//! `w'' = 2κ w' + q w`. Backward in x the `w'` mode decays, and `γ = m + κ = w'/w`
//! comes out with full relative accuracy instead of as a difference of two O(κ) numbers.

use crate::error::{Error, Result};
use crate::model::{BoundaryParam, Potential, Problem};
use crate::ode::{integrate, State, DEFAULT_TOL};
use crate::quad::exp_cell_weights;
use crate::report::VerificationReport;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;

/// Default sector half-angle margin (radians) for the bounds that need it.
pub const SECTOR_EPS: f64 = 0.05;

/// Atkinson's universal constant `3·2·12²/5`.
pub const ATKINSON_E: f64 = 3.0 * 2.0 * 144.0 / 5.0;

const X_CAP: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter {
    pub kappa: C,
}

impl SpectralParameter {
    pub fn new(kappa: C) -> Result<Self> {
        if !(kappa.re > 0.0) || !kappa.im.is_finite() || !kappa.re.is_finite() {
            return Err(Error::InvalidArgument(format!("need Re κ > 0, got κ = {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn real(kappa: f64) -> Result<Self> {
        Self::new(C::new(kappa, 0.0))
    }

    /// The energy `z = −κ²`.
    pub fn z(&self) -> C {
        -self.kappa * self.kappa
    }

    /// `arg κ ∈ (−π/2 + ε, −ε)`.
    pub fn in_sector(&self, eps: f64) -> bool {
        let arg = self.kappa.arg();
        arg > -PI / 2.0 + eps && arg < -eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DirectOde,
    AtkinsonM0,
    Reference,
    FixedStep,
    FromAmplitude,
    RiccatiSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MValue {
    pub value: C,
    pub method: Method,
    /// Estimated absolute error.
    pub error: f64,
}

/// Solution samples of the gauged system; true `w = stored · e^{log_scale}`.
pub(crate) struct Trace {
    pub(crate) xs: Vec<f64>,
    pub(crate) w: Vec<State>,
    pub(crate) log_scale: Vec<f64>,
    /// max over accepted steps of ln|u| (same normalization as `log_scale`).
    peak_log_u: f64,
}

impl Trace {
    fn gamma(&self, i: usize) -> C {
        self.w[i][1] / self.w[i][0]
    }

    /// `w(x_i) / w(x_j)` including rescalings.
    pub(crate) fn ratio(&self, i: usize, j: usize) -> C {
        self.w[i][0] / self.w[j][0] * (self.log_scale[i] - self.log_scale[j]).exp()
    }

    fn log_u(&self, i: usize, kappa: C, x_start: f64) -> f64 {
        self.w[i][0].norm().ln() + self.log_scale[i] + kappa.re * (x_start - self.xs[i])
    }
}

/// Integrate the gauged system from `x_start` down to every target (all `≤ x_start`).
pub(crate) fn solve_w(pot: &Potential, kappa: C, x_start: f64, w_start: State, targets: &[f64]) -> Result<Trace> {
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| targets[b].partial_cmp(&targets[a]).unwrap());
    let lowest = targets.iter().cloned().fold(x_start, f64::min);
    let mut stops: Vec<f64> = pot.breakpoints(lowest, x_start);
    stops.extend(targets.iter().copied());
    stops.push(lowest);
    stops.sort_by(|a, b| b.partial_cmp(a).unwrap());
    stops.dedup();

    let two_k = 2.0 * kappa;
    let mut results: Vec<Option<(State, f64)>> = vec![None; targets.len()];
    let mut y = w_start;
    let mut x = x_start;
    let mut log_scale = 0.0;
    let mut peak_log_u = f64::NEG_INFINITY;
    let h_init = (0.1 / kappa.norm()).min(0.05);
    let record = |x: f64, y: &State, log_scale: f64, results: &mut Vec<Option<(State, f64)>>| {
        for &i in &order {
            if results[i].is_none() && targets[i] == x {
                results[i] = Some((*y, log_scale));
            }
        }
    };
    record(x, &y, log_scale, &mut results);
    if y[0].norm() > 0.0 {
        peak_log_u = y[0].norm().ln();
    }
    for &stop in &stops {
        if stop >= x {
            continue;
        }
        let (lo, hi) = (stop, x);
        let pad = (1e-13 * hi.abs().max(1.0)).min(0.5 * (hi - lo));
        let rhs = |t: f64, s: &State| {
            let q = pot.eval(t.clamp(lo + pad, hi - pad));
            [s[1], two_k * s[1] + s[0] * q]
        };
        let mut ls = log_scale;
        let mut peak = peak_log_u;
        let end = integrate(&rhs, hi, y, lo, h_init, DEFAULT_TOL, |t, s: &mut State| {
            let mag = s[0].norm().max(s[1].norm());
            if mag > 1e150 || (mag < 1e-8 && mag > 0.0) {
                s[0] /= mag;
                s[1] /= mag;
                ls += mag.ln();
            }
            let lu = s[0].norm().ln() + ls + kappa.re * (x_start - t);
            peak = peak.max(lu);
        })
        .map_err(|_| Error::Quadrature(format!("ODE step size underflow near x = {x}")))?;
        log_scale = ls;
        peak_log_u = peak;
        y = end;
        x = stop;
        record(x, &y, log_scale, &mut results);
    }
    let mut trace = Trace { xs: Vec::new(), w: Vec::new(), log_scale: Vec::new(), peak_log_u };
    for (i, r) in results.into_iter().enumerate() {
        let (s, ls) = r.ok_or_else(|| Error::Quadrature("target not reached".into()))?;
        trace.xs.push(targets[i]);
        trace.w.push(s);
        trace.log_scale.push(ls);
    }
    Ok(trace)
}

/// Start point and data at the right end for a finite interval.
fn finite_start(problem: &Problem, kappa: C) -> (f64, State) {
    let b = problem.b.unwrap();
    let w = match problem.h_at_b {
        BoundaryParam::Dirichlet => [C::new(0.0, 0.0), C::new(-1.0, 0.0)],
        BoundaryParam::Robin(h) => [C::new(1.0, 0.0), kappa - h],
    };
    (b, w)
}

pub(crate) fn decaying_start() -> State {
    [C::new(1.0, 0.0), C::new(0.0, 0.0)]
}

/// Chosen start and the change in m seen when the cutoff was last doubled.
fn half_line_cutoff(pot: &Potential, kappa: C, beyond: f64) -> Result<(f64, f64)> {
    if let Some(s) = pot.support_end() {
        // (1, −κ) is exact past the support
        return Ok((s.max(beyond), 0.0));
    }
    let mut x = beyond + 15.0 / kappa.re;
    let mut prev: Option<C> = None;
    loop {
        if x > X_CAP {
            return Err(Error::Truncation { x_max: x, change: f64::NAN });
        }
        let t = solve_w(pot, kappa, x, decaying_start(), &[beyond])?;
        let g = t.gamma(0);
        if let Some(p) = prev {
            let change = (g - p).norm();
            let m = (g - kappa).norm();
            if change < 1e-10 * m.max(1.0) {
                return Ok((x, change));
            }
            if 2.0 * x > X_CAP {
                // no convergence because u(beyond) sits on a zero
                check_pole(&t, 0, kappa, x)?;
                return Err(Error::Truncation { x_max: x, change });
            }
        }
        prev = Some(g);
        x *= 2.0;
    }
}

fn check_pole(t: &Trace, i: usize, kappa: C, x_start: f64) -> Result<()> {
    let lu = t.log_u(i, kappa, x_start);
    if !(lu > (1e-9f64).ln() + t.peak_log_u) {
        return Err(Error::Pole { z: -kappa * kappa });
    }
    Ok(())
}

/// Start data and per-target gauged solution for the problem.
fn weyl_trace(problem: &Problem, kappa: C, targets: &[f64]) -> Result<(Trace, f64, f64)> {
    let hi = targets.iter().cloned().fold(0.0, f64::max);
    match problem.b {
        Some(_) => {
            let (x0, w0) = finite_start(problem, kappa);
            Ok((solve_w(&problem.potential, kappa, x0, w0, targets)?, x0, 0.0))
        }
        None => {
            let (x0, change) = half_line_cutoff(&problem.potential, kappa, hi)?;
            Ok((solve_w(&problem.potential, kappa, x0, decaying_start(), targets)?, x0, change))
        }
    }
}

/// m(−κ²) = u'(0)/u(0) for the Weyl (or boundary-condition) solution.
pub fn m_principal(problem: &Problem, kappa: C) -> Result<MValue> {
    Ok(m_at_x(problem, kappa, &[0.0])?.remove(0))
}

/// `γ = m + κ` with full relative accuracy.
pub fn gamma_principal(problem: &Problem, kappa: C) -> Result<C> {
    problem.validate()?;
    let sp = SpectralParameter::new(kappa)?;
    let (t, x0, _) = weyl_trace(problem, sp.kappa, &[0.0])?;
    check_pole(&t, 0, sp.kappa, x0)?;
    Ok(t.gamma(0))
}

/// m(−κ², x) along a grid, from the same Weyl solution.
pub fn m_at_x(problem: &Problem, kappa: C, xs: &[f64]) -> Result<Vec<MValue>> {
    problem.validate()?;
    let sp = SpectralParameter::new(kappa)?;
    let b = problem.b_value();
    if let Some(&x) = xs.iter().find(|&&x| !(x >= 0.0) || x >= b) {
        return Err(Error::Domain { x, b });
    }
    let (t, x0, change) = weyl_trace(problem, sp.kappa, xs)?;
    if let Some(i) = t.xs.iter().position(|&x| x == 0.0) {
        check_pole(&t, i, sp.kappa, x0)?;
    }
    Ok((0..xs.len())
        .map(|i| {
            let value = -sp.kappa + t.gamma(i);
            MValue { value, method: Method::DirectOde, error: change.max(1e-10 * value.norm()) }
        })
        .collect())
}

/// m₀(−κ²): terminal value −κ at `a`, i.e. the m-function of `q·χ_[0,a]`.
pub fn atkinson_m0(problem: &Problem, kappa: C, a: f64) -> Result<MValue> {
    if !(a > 0.0) || !a.is_finite() || a >= problem.b_value() {
        return Err(Error::Domain { x: a, b: problem.b_value() });
    }
    let truncated = Problem::half_line(Potential::truncated(problem.potential.clone(), a));
    let mut v = m_principal(&truncated, kappa)?;
    v.method = Method::AtkinsonM0;
    Ok(v)
}

/// `m₁(−κ²) − m₂(−κ²)` for two problems whose potentials agree on `[0, a]`,
/// propagated from `x = a` with `(m₁ − m₂)' = −(m₁ + m₂)(m₁ − m₂)` so no
/// cancellation occurs.
pub fn m_difference(p1: &Problem, p2: &Problem, kappa: C, a: f64) -> Result<C> {
    let sp = SpectralParameter::new(kappa)?;
    let kappa = sp.kappa;
    let mut parts = Vec::new();
    for p in [p1, p2] {
        p.validate()?;
        if a >= p.b_value() {
            return Err(Error::Domain { x: a, b: p.b_value() });
        }
        let (t, x0, _) = weyl_trace(p, kappa, &[a, 0.0])?;
        check_pole(&t, 1, kappa, x0)?;
        parts.push((t.gamma(0), t.ratio(0, 1)));
    }
    let (g1, r1) = parts[0];
    let (g2, r2) = parts[1];
    Ok((g1 - g2) * (-2.0 * kappa * a).exp() * r1 * r2)
}

/// `γ(0) = m + κ` for a half-line potential by product integration of
/// `γ(x) = −∫ₓ^X e^{−2κ(y−x)}[q − γ²] dy` on a uniform grid, with one Richardson
/// step over `dx` and `dx/2`. Meant for large `|κ|` where the ODE would need many
/// steps per oscillation.
pub(crate) fn gamma_sweep(pot: &Potential, kappa: C, dx: f64) -> C {
    // e^{−2κx} below 1e−15 past this point
    let reach = 18.0 / kappa.re;
    let x_end = pot.support_end().map_or(reach, |s| s.min(reach));
    if x_end <= 0.0 {
        return C::new(0.0, 0.0);
    }
    let n = (x_end / dx).ceil().max(1.0) as usize;
    let coarse = sweep_once(pot, kappa, x_end, n);
    let fine = sweep_once(pot, kappa, x_end, 2 * n);
    fine + (fine - coarse) / 3.0
}

fn sweep_once(pot: &Potential, kappa: C, x_end: f64, n: usize) -> C {
    let h = x_end / n as f64;
    let z = 2.0 * kappa * h;
    let (w0, w1) = exp_cell_weights(z);
    let decay = (-z).exp();
    let (wa, wb) = ((w0 - w1) * h, w1 * h);
    let mut gamma = C::new(0.0, 0.0);
    let mut g_right = C::new(pot.eval(x_end), 0.0);
    for i in (0..n).rev() {
        let x = i as f64 * h;
        let q = pot.eval(x + 1e-13 * h);
        let base = decay * gamma - wb * g_right;
        let mut next = gamma;
        for _ in 0..4 {
            let prev = next;
            next = base - wa * (q - next * next);
            if (next - prev).norm() <= 1e-16 * next.norm() {
                break;
            }
        }
        gamma = next;
        g_right = q - gamma * gamma;
        let q_left = pot.eval(x);
        if q_left != q {
            g_right = q_left - gamma * gamma;
        }
    }
    gamma
}

/// a-priori bound checks at one κ.
pub fn bound_report(problem: &Problem, kappa: C, a: f64, delta: f64) -> Result<Vec<VerificationReport>> {
    problem.validate()?;
    let sp = SpectralParameter::new(kappa)?;
    if !(delta > 0.0) || !(a > 0.0) || a + delta > problem.b_value() {
        return Err(Error::InvalidArgument("need a, δ > 0 and a + δ ≤ b".into()));
    }
    let k = sp.kappa;
    let eta_a = problem.potential.l1(a);
    let truncated = Problem::half_line(Potential::truncated(problem.potential.clone(), a));
    let diff = m_difference(problem, &truncated, k, a)?.norm();
    let m0 = atkinson_m0(problem, k, a)?;
    let mut out = Vec::new();

    // Atkinson gap
    let c31 = ((6f64).ln() / a).max(4.0 * eta_a);
    out.push(if k.im == 0.0 {
        VerificationReport::inapplicable("atkinson_gap", "Im κ = 0")
    } else if k.re < c31 {
        VerificationReport::inapplicable("atkinson_gap", format!("Re κ below {c31}"))
    } else {
        let rhs = ATKINSON_E * k.norm_sqr() / k.im.abs() * (-2.0 * a * k.re).exp();
        VerificationReport::le("atkinson_gap", diff, rhs)
    });

    // |m₀ + κ| ≤ 2η once Re κ > 2η
    let d = 2.0 * eta_a;
    out.push(if k.re > d {
        VerificationReport::le("atkinson_m0_bound", (m0.value + k).norm(), d)
    } else {
        VerificationReport::inapplicable("atkinson_m0_bound", format!("Re κ not above {d}"))
    });

    out.push(locality_report(problem, &truncated, k, a, delta)?);

    // Riccati comparison on [0, a] with C = sup |m_j(x) + κ|
    let n = 200;
    let xs: Vec<f64> = (0..=n).map(|i| a * i as f64 / n as f64).collect();
    let m_full = m_at_x(problem, k, &xs)?;
    let m_trunc = m_at_x(&truncated, k, &xs)?;
    let c = m_full
        .iter()
        .chain(&m_trunc)
        .map(|v| (v.value + k).norm())
        .fold(0.0, f64::max);
    let rhs = 2.0 * c * (-2.0 * a * (k.re - c)).exp();
    out.push(VerificationReport::le("riccati_comparison", diff, rhs).with_note("sup of |m + κ| sampled on 201 points"));
    Ok(out)
}

/// Locality bound for two problems agreeing on `[0, a]`.
pub fn locality_report(p1: &Problem, p2: &Problem, kappa: C, a: f64, delta: f64) -> Result<VerificationReport> {
    let k = SpectralParameter::new(kappa)?.kappa;
    let name = "locality";
    if a + delta > p1.b_value().min(p2.b_value()) {
        return Ok(VerificationReport::inapplicable(name, "a + δ exceeds b"));
    }
    let eta = p1.potential.window_l1_sup(a, delta).max(p2.potential.window_l1_sup(a, delta));
    let threshold = (4.0 * eta).max((6f64).ln() / delta);
    if k.im == 0.0 {
        return Ok(VerificationReport::inapplicable(name, "Im κ = 0"));
    }
    if k.re < threshold {
        return Ok(VerificationReport::inapplicable(name, format!("Re κ below {threshold}")));
    }
    let f = 2.0 * eta + 864.0 / 5.0 * k.norm_sqr() / k.im.abs() * (-2.0 * delta * k.re).exp();
    let rhs = 2.0 * f * (-2.0 * a * (k.re - f)).exp();
    let lhs = m_difference(p1, p2, k, a)?.norm();
    Ok(VerificationReport::le(name, lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reference;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn closed_form_values() {
        let m = m_principal(&Problem::half_line(Potential::Zero), c(1.5, 0.0)).unwrap();
        assert_eq!(m.value, c(-1.5, 0.0));
        let m = m_principal(&Problem::half_line(Potential::Constant { q0: 1.0 }), c(2.0, 0.0)).unwrap();
        assert!((m.value.re + 5f64.sqrt()).abs() < 1e-9);
        let p = Problem::interval(Potential::Zero, 1.0, BoundaryParam::Dirichlet);
        let m = m_principal(&p, c(1.0, 0.0)).unwrap();
        assert!((m.value.re + 1.3130352854993312).abs() < 1e-9);
        let mx = m_at_x(&p, c(1.0, 0.0), &[0.5]).unwrap();
        assert!((mx[0].value.re + 2.1639534137386525).abs() < 1e-9);
    }

    #[test]
    fn constant_m_is_translation_invariant() {
        let p = Problem::half_line(Potential::Constant { q0: 1.0 });
        let xs = [0.0, 0.7, 2.0, 5.0];
        for v in m_at_x(&p, c(2.0, 0.0), &xs).unwrap() {
            assert!((v.value + 5f64.sqrt()).norm() < 1e-8);
        }
    }

    #[test]
    fn atkinson_matches_truncated_problem() {
        let p = Problem::half_line(Potential::Constant { q0: 1.0 });
        let k = c(2.0, 0.0);
        let m0 = atkinson_m0(&p, k, 5.0).unwrap().value;
        assert!((m0 + 5f64.sqrt()).norm() < 3e-4);
        let t = Problem::half_line(Potential::truncated(Potential::Constant { q0: 1.0 }, 5.0));
        assert_eq!(m_principal(&t, k).unwrap().value, m0);
        let z = atkinson_m0(&Problem::half_line(Potential::Zero), c(1.0, 0.0), 1.0).unwrap();
        assert_eq!(z.value, c(-1.0, 0.0));
    }

    #[test]
    fn pole_at_dirichlet_eigenvalue() {
        // soliton −2 sech² has its bound state at −1, so κ = 1 is a pole of m
        let p = Problem::half_line(Potential::BargmannOneEigenvalue { kappa1: 1.0, c1: 1.0 });
        assert!(matches!(m_principal(&p, c(1.0, 0.0)), Err(Error::Pole { .. })));
    }

    #[test]
    fn difference_matches_closed_form() {
        // q = 1 vs q = χ_[0,3]: exact difference from the tanh solution
        let k = 5.0f64;
        let s = (k * k + 1.0).sqrt();
        let th = (s * 3.0).tanh();
        // m_trunc + s without cancellation
        let one_minus_th = 2.0 * (-6.0 * s).exp() / (1.0 + (-6.0 * s).exp());
        let exact = s * (s - k) * one_minus_th / (s + k * th);
        let full = Problem::half_line(Potential::Constant { q0: 1.0 });
        let trunc = Problem::half_line(Potential::truncated(Potential::Constant { q0: 1.0 }, 3.0));
        let d = m_difference(&trunc, &full, c(k, 0.0), 3.0).unwrap();
        assert!((d.re / exact - 1.0).abs() < 1e-7, "{} vs {}", d.re, exact);
    }

    #[test]
    fn sweep_agrees_with_ode() {
        for pot in [
            Potential::Constant { q0: 1.0 },
            Potential::BargmannResonance { beta: 1.0, gamma: 2.0 },
            Potential::truncated(Potential::Constant { q0: -2.0 }, 1.5),
        ] {
            for k in [c(5.0, 200.0), c(6.0, -350.0)] {
                let g = gamma_principal(&Problem::half_line(pot.clone()), k).unwrap();
                let s = gamma_sweep(&pot, k, 1e-3);
                assert!((g - s).norm() < 1e-7 * g.norm().max(1e-3), "{pot:?} {k}: {g} vs {s}");
            }
        }
    }

    #[test]
    fn reports_pass_for_constant() {
        let p = Problem::half_line(Potential::Constant { q0: 1.0 });
        let r = bound_report(&p, c(5.0, -1.0), 2.0, 1.0).unwrap();
        for x in &r {
            assert!(x.ok(), "{x:?}");
        }
        let m0 = r.iter().find(|x| x.name == "atkinson_m0_bound").unwrap();
        assert!((m0.residual - 0.0972009637883).abs() < 1e-8 && m0.bound == 4.0, "{m0:?}");
    }

    #[test]
    fn herglotz_against_reference() {
        let p = Problem::half_line(Potential::BargmannResonance { beta: 1.0, gamma: 2.0 });
        let r = reference(&p).unwrap();
        for k in [c(1.0, 0.0), c(3.0, -1.0), c(0.5, 2.0)] {
            let m = m_principal(&p, k).unwrap().value;
            assert!((m - r.m(k)).norm() < 1e-8 * m.norm());
        }
    }
}
