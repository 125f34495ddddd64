//! Jost solutions, scattering data, and A from scattering data.

use crate::error::{Error, Result};
use crate::model::{Potential, Problem};
use crate::oracle::fd_spectrum;
use crate::quad::{composite_nodes, gl_composite};
use crate::spectral::{abelian_extrapolate, default_eps_schedule, AbelianValue, Atoms, CustomDensity, Density, SpectralMeasure};
use crate::weyl::{decaying_start, solve_w};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

type C = Complex64;

/// Point beyond which `∫_x^∞ (1+t)|q(t)| dt < 1e−13`.
pub fn jost_cutoff(pot: &Potential) -> Result<f64> {
    if let Some(s) = pot.support_end() {
        return Ok(s);
    }
    let rate = pot
        .decay_rate()
        .ok_or_else(|| Error::Inapplicable("potential has no declared decay rate".into()))?;
    let span = 60.0 / rate;
    let mut x = 1.0 / rate;
    loop {
        let tail = gl_composite(|t| (1.0 + t) * pot.eval(t).abs(), x, x + span, 60);
        if tail < 1e-13 {
            return Ok(x);
        }
        x += 1.0 / rate;
        if x > 1e4 {
            return Err(Error::Truncation { x_max: x, change: tail });
        }
    }
}

fn half_line_only(problem: &Problem) -> Result<()> {
    problem.validate()?;
    if problem.b.is_some() {
        return Err(Error::Inapplicable("scattering needs the half-line".into()));
    }
    Ok(())
}

/// `f(x, z)` with `f ~ e^{i√z x}` at infinity, `Im √z ≥ 0`.
pub fn jost_solution(problem: &Problem, z: C, xs: &[f64]) -> Result<Vec<C>> {
    half_line_only(problem)?;
    let mut k = z.sqrt();
    if k.im < 0.0 {
        k = -k;
    }
    let x_inf = jost_cutoff(&problem.potential)?;
    let top = xs.iter().cloned().fold(x_inf, f64::max);
    let mut targets = xs.to_vec();
    targets.push(top);
    // f = e^{ikx} w with w(X) = 1, w'(X) = 0: the gauged system with κ = −ik
    let t = solve_w(&problem.potential, -C::i() * k, top, decaying_start(), &targets)?;
    let last = targets.len() - 1;
    Ok(xs.iter().enumerate().map(|(i, &x)| (C::i() * k * x).exp() * t.ratio(i, last)).collect())
}

/// `F(k) = f(0, k²)`.
fn jost_function(pot: &Potential, x_inf: f64, k: C) -> Result<C> {
    let t = solve_w(pot, -C::i() * k, x_inf, decaying_start(), &[0.0, x_inf])?;
    Ok(t.ratio(0, 1))
}

/// `F` sampled on a k-grid with a 1/k² + 1/k⁴ fit of `|F|⁻² − 1` beyond it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JostTable {
    pub k: Vec<f64>,
    pub f: Vec<C>,
    /// `|F(k)|⁻² − 1 ≈ c2/k² + c4/k⁴` past the last node.
    pub tail: (f64, f64),
}

impl JostTable {
    fn grid() -> Vec<f64> {
        let mut k: Vec<f64> = (0..500).map(|i| 0.02 * i as f64).collect();
        k.extend((0..400).map(|i| 10.0 + 0.1 * i as f64));
        k.extend((0..=150).map(|i| 50.0 + i as f64));
        k
    }

    fn build(pot: &Potential, x_inf: f64) -> Result<Self> {
        let k = Self::grid();
        let f = k.par_iter().map(|&k| jost_function(pot, x_inf, C::new(k, 0.0))).collect::<Result<Vec<_>>>()?;
        let d = |i: usize| 1.0 / f[i].norm_sqr() - 1.0;
        let n = k.len();
        let (k1, k2) = (k[n - 11], k[n - 1]);
        let (d1, d2) = (d(n - 11), d(n - 1));
        // solve d = c2/k² + c4/k⁴ at two nodes
        let (a1, b1, a2, b2) = (k1.powi(-2), k1.powi(-4), k2.powi(-2), k2.powi(-4));
        let det = a1 * b2 - a2 * b1;
        let c2 = (d1 * b2 - d2 * b1) / det;
        let c4 = (a1 * d2 - a2 * d1) / det;
        Ok(Self { k, f, tail: (c2, c4) })
    }

    pub fn k_max(&self) -> f64 {
        *self.k.last().unwrap()
    }

    /// `|F(k)|⁻² − 1` for k ≥ 0.
    pub fn d(&self, k: f64) -> f64 {
        let kmax = self.k_max();
        if k >= kmax {
            return self.tail.0 / (k * k) + self.tail.1 / k.powi(4);
        }
        // four-point Lagrange on the local spacing
        let i = self.k.partition_point(|&x| x <= k).saturating_sub(1);
        let lo = i.saturating_sub(1).min(self.k.len() - 4);
        let xs = &self.k[lo..lo + 4];
        let mut s = 0.0;
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (k - xs[b]) / (xs[a] - xs[b]);
                }
            }
            s += l * (1.0 / self.f[lo + a].norm_sqr() - 1.0);
        }
        s
    }

    pub fn modulus(&self, k: f64) -> f64 {
        (1.0 / (1.0 + self.d(k))).sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringData {
    /// `(κ_j, c_j)` with bound-state energies `−κ_j²`.
    pub bound_states: Vec<(f64, f64)>,
    pub jost: JostTable,
    /// True when q(0) = 0, so the undamped form converges absolutely.
    pub q_vanishes_at_zero: bool,
}

impl ScatteringData {
    /// Atoms `(−κ_j², c_j)` plus density `√λ / (π|F(√λ)|²)`.
    pub fn measure(&self) -> SpectralMeasure {
        let atoms = self.bound_states.iter().map(|&(k, c)| (-k * k, c)).collect();
        let table = Arc::new(self.jost.clone());
        let density = CustomDensity {
            start: 0.0,
            label: "jost".into(),
            f: Arc::new(move |l: f64| l.max(0.0).sqrt() / PI * (1.0 + table.d(l.max(0.0).sqrt()))),
        };
        SpectralMeasure::new(Atoms::Finite(atoms), Some(Density::Custom(density)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let table: Vec<(f64, f64)> = self.jost.k.iter().zip(&self.jost.f).map(|(k, f)| (k * k, f.norm())).collect();
        serde_json::json!({
            "schema": 1,
            "bound_states": self.bound_states.iter().map(|&(k, c)| serde_json::json!({"kappa": k, "c": c})).collect::<Vec<_>>(),
            "jost_modulus": table,
            "tail": self.jost.tail,
            "q_vanishes_at_zero": self.q_vanishes_at_zero,
        })
    }
}

/// `F(iκ)`, real for real κ.
fn jost_imag(pot: &Potential, x_inf: f64, kappa: f64) -> Result<f64> {
    Ok(jost_function(pot, x_inf, C::new(0.0, kappa))?.re)
}

fn bisect(g: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut glo = g(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-14 * mid {
            return Ok(mid);
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `‖φ‖⁻²` for the regular solution `φ(0) = 0, φ'(0) = 1` at `−κ²`.
fn norming_constant(pot: &Potential, x_inf: f64, kappa: f64) -> Result<f64> {
    let x_end = x_inf + 40.0 / kappa;
    let panels = (x_end * kappa.max(1.0) * 8.0).ceil() as usize;
    let nodes = composite_nodes(0.0, x_end, panels);
    let mut targets: Vec<f64> = nodes.iter().map(|n| n.0).collect();
    targets.push(0.0);
    let k = C::new(kappa, 0.0);
    let t = solve_w(pot, k, x_end, decaying_start(), &targets)?;
    let zero = targets.len() - 1;
    // φ(x) = u(x)/u'(0), u = e^{−κ(x − X)} w; at a zero of F, u'(0) ∝ w'(0)
    let slope = t.w[zero][1].re;
    let mut norm2 = 0.0;
    let phi = |i: usize, x: f64| (-kappa * x).exp() * t.w[i][0].re * (t.log_scale[i] - t.log_scale[zero]).exp() / slope;
    for (i, &(x, wt)) in nodes.iter().enumerate() {
        norm2 += wt * phi(i, x).powi(2);
    }
    // past x_end, φ is a multiple of e^{−κx}
    let last = nodes.len() - 1;
    norm2 += phi(last, nodes[last].0).powi(2) * (-2.0 * kappa * (x_end - nodes[last].0)).exp() / (2.0 * kappa);
    Ok(1.0 / norm2)
}

/// Bound states, norming constants and the Jost table.
pub fn scattering_data(problem: &Problem) -> Result<ScatteringData> {
    half_line_only(problem)?;
    let pot = &problem.potential;
    let x_inf = jost_cutoff(pot)?;

    // brackets from finite-box eigenvalues below 0
    let l = (x_inf + 10.0).max(20.0);
    let mut k_max = 8;
    let negatives = loop {
        let spectrum = fd_spectrum(problem, l, 4000, k_max)?;
        let neg: Vec<f64> = spectrum.eigenvalues.iter().copied().filter(|&e| e < 0.0).collect();
        if neg.len() < k_max || k_max >= 256 {
            break neg;
        }
        k_max *= 2;
    };
    let mut bound_states = Vec::new();
    for e in negatives {
        let est = (-e).sqrt();
        let g = |k: f64| jost_imag(pot, x_inf, k);
        let mut found = None;
        for width in [0.02, 0.05, 0.1, 0.2, 0.4] {
            let (lo, hi) = (est * (1.0 - width), est * (1.0 + width));
            if g(lo)?.signum() != g(hi)?.signum() {
                found = Some(bisect(g, lo, hi)?);
                break;
            }
        }
        let kappa = found.ok_or_else(|| Error::BoundState(format!("no sign change of F(iκ) near κ = {est}")))?;
        bound_states.push((kappa, norming_constant(pot, x_inf, kappa)?));
    }
    let jost = JostTable::build(pot, x_inf)?;
    Ok(ScatteringData { bound_states, jost, q_vanishes_at_zero: pot.eval(0.0) == 0.0 })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringAmplitude {
    pub abelian: AbelianValue,
    /// Undamped `|F|⁻² − 1` form, when q(0) = 0.
    pub direct: Option<f64>,
}

/// `−(2/π)∫₀^∞ e^{−εk²} (|F|⁻² − 1) sin(2αk) 2k dk`, cut where the damping is below e^{−40}.
fn damped_continuum(data: &ScatteringData, alpha: f64, eps: f64) -> f64 {
    let top = if eps > 0.0 { (40.0 / eps).sqrt() } else { data.jost.k_max() };
    let w = (0.5f64).min(1.0 / alpha);
    let panels = (top / w).ceil() as usize;
    let g = |k: f64| (-eps * k * k).exp() * data.jost.d(k) * (2.0 * alpha * k).sin() * 2.0 * k;
    -2.0 / PI * gl_composite(g, 0.0, top, panels)
}

/// A(α) from scattering data.
pub fn a_from_scattering(data: &ScatteringData, alpha: f64, eps_schedule: Option<&[f64]>) -> Result<ScatteringAmplitude> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("α must be positive".into()));
    }
    let bound: f64 = data.bound_states.iter().map(|&(k, c)| -2.0 * c / k * (2.0 * alpha * k).sinh()).sum();
    let eps = eps_schedule.map(|e| e.to_vec()).unwrap_or_else(|| default_eps_schedule(alpha));
    let raw: Vec<(f64, f64)> = eps
        .par_iter()
        .map(|&e| {
            let free = -2.0 * alpha / PI.sqrt() * e.powf(-1.5) * (-alpha * alpha / e).exp();
            (e, bound + free + damped_continuum(data, alpha, e))
        })
        .collect();
    let abelian = abelian_extrapolate(raw)?;
    let direct = data.q_vanishes_at_zero.then(|| {
        // the c4/k⁴ tail beyond the table contributes below |c4|/K²
        bound + damped_continuum(data, alpha, 0.0)
    });
    Ok(ScatteringAmplitude { abelian, direct })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_jost_is_plane_wave() {
        let p = Problem::half_line(Potential::Zero);
        let f = jost_solution(&p, C::new(4.0, 0.0), &[0.0, 0.7]).unwrap();
        assert!((f[1] - C::new(0.0, 1.4).exp()).norm() < 1e-12);
    }

    #[test]
    fn bargmann_jost_functions() {
        let p = Problem::half_line(Potential::BargmannResonance { beta: 1.0, gamma: 2.0 });
        let f = jost_solution(&p, C::new(1.0, 0.0), &[0.0]).unwrap()[0];
        assert!((f - C::new(1.0, 2.0) / C::new(1.0, 1.0)).norm() < 1e-8, "{f}");
        let p = Problem::half_line(Potential::BargmannOneEigenvalue { kappa1: 1.0, c1: 1.0 });
        let f = jost_solution(&p, C::new(1.0, 0.0), &[0.0]).unwrap()[0];
        assert!((f.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn soliton_bound_state() {
        let p = Problem::half_line(Potential::BargmannOneEigenvalue { kappa1: 1.0, c1: 1.0 });
        let d = scattering_data(&p).unwrap();
        assert_eq!(d.bound_states.len(), 1);
        let (k, c) = d.bound_states[0];
        assert!((k - 1.0).abs() < 1e-6 && (c - 1.0).abs() < 1e-6, "{k} {c}");
        let a = a_from_scattering(&d, 0.5, None).unwrap();
        assert!((a.abelian.value + 2.0 * 1f64.sinh()).abs() < 1e-4);
    }

    #[test]
    fn resonance_modulus_and_amplitude() {
        let p = Problem::half_line(Potential::BargmannResonance { beta: 1.0, gamma: 2.0 });
        let d = scattering_data(&p).unwrap();
        assert!(d.bound_states.is_empty());
        for k in [0.3, 2.0, 17.0, 120.0] {
            let want = (k * k + 1.0) / (k * k + 4.0);
            assert!((1.0 / d.jost.modulus(k).powi(2) - want).abs() < 1e-6);
        }
        let a = a_from_scattering(&d, 0.5, None).unwrap();
        assert!((a.abelian.value - 6.0 * (-2f64).exp()).abs() < 1e-4, "{:?}", a.abelian);
    }
}
