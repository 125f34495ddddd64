//! m-functions for the boundary condition `u'(0) + h u(0) = 0` and the B_h amplitude.

use crate::amplitude::{default_kappa0, gamma_auto, smeared_inversion, SmearedValue};
use crate::error::{Error, Result};
use crate::model::Problem;
use crate::oracle::{i1, i2, j1, j2};
use crate::spectral::{Atoms, Density, SpectralMeasure};
use crate::testfn::TestFunction;
use crate::weyl::{MValue, Method, SpectralParameter};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HValue {
    pub h0: f64,
}

impl HValue {
    pub fn new(h0: f64) -> Result<Self> {
        if !h0.is_finite() {
            return Err(Error::InvalidArgument("h must be finite".into()));
        }
        Ok(Self { h0 })
    }
}

/// `(hκ + 1)/(κ − h)`.
pub fn m_h_free(h: HValue, kappa: C) -> C {
    (h.h0 * kappa + 1.0) / (kappa - h.h0)
}

/// `m_h − m_h⁰ = (1 + h²)γ / ((m + h)(h − κ))` with `γ = m + κ`.
fn m_h_excess(problem: &Problem, h: HValue, kappa: C) -> Result<C> {
    let gamma = gamma_auto(problem, kappa)?;
    let m = gamma - kappa;
    let denom = (m + h.h0) * (h.h0 - kappa);
    if denom.norm() < 1e-13 * (m.norm() + h.h0.abs()) * (kappa.norm() + h.h0.abs()) {
        return Err(Error::Pole { z: -kappa * kappa });
    }
    Ok((1.0 + h.h0 * h.h0) * gamma / denom)
}

/// `m_h = (h m − 1)/(m + h)`.
pub fn m_h(problem: &Problem, h: HValue, kappa: C) -> Result<MValue> {
    let k = SpectralParameter::new(kappa)?.kappa;
    let value = m_h_free(h, k) + m_h_excess(problem, h, k)?;
    if !value.is_finite() {
        return Err(Error::Pole { z: -k * k });
    }
    Ok(MValue { value, method: Method::DirectOde, error: 0.0 })
}

/// Bump-averaged B_h at each center, by contour inversion of `κ²(m_h⁰ − m_h)`.
pub fn b_h_extract(problem: &Problem, h: HValue, centers: &[f64], width: f64) -> Result<Vec<SmearedValue>> {
    problem.validate()?;
    centers
        .par_iter()
        .map(|&c| {
            if c - 0.5 * width <= 0.0 || c + 0.5 * width >= problem.b_value() {
                return Err(Error::Domain { x: c, b: problem.b_value() });
            }
            let f = TestFunction::Bump { center: c, width };
            let k0 = default_kappa0(problem, &f).max(2.0 * h.h0.abs() + 2.0);
            let g = |k: C| -> Result<C> { Ok(-k * k * m_h_excess(problem, h, k)?) };
            smeared_inversion(g, &f, k0)
        })
        .collect()
}

/// B_h for constant q and h = 0.
pub fn constant_b_h(q0: f64, alpha: f64) -> f64 {
    let s = q0.abs().sqrt();
    let x = 2.0 * s * alpha;
    if x < 1e-6 {
        return q0;
    }
    if q0 >= 0.0 {
        s / alpha * j1(x) - 2.0 * q0 * j2(x)
    } else {
        -s / alpha * i1(x) - 2.0 * q0.abs() * i2(x)
    }
}

/// Free reference for a given h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HReference {
    pub h: HValue,
}

/// Residuals of a fitted large-κ expansion against the predicted coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientFit {
    pub fitted: Vec<f64>,
    pub expected: Vec<f64>,
    pub residuals: Vec<f64>,
}

pub fn h_reference(h: HValue) -> HReference {
    HReference { h }
}

impl HReference {
    pub fn m0(&self, kappa: C) -> C {
        m_h_free(self.h, kappa)
    }

    /// Density `(1 + h²)√λ/(π(λ + h²))` plus, for h > 0, the atom `2(1 + h²)h` at `−h²`.
    pub fn measure(&self) -> SpectralMeasure {
        let h = self.h.h0;
        let atoms = if h > 0.0 { vec![(-h * h, 2.0 * (1.0 + h * h) * h)] } else { vec![] };
        SpectralMeasure::new(Atoms::Finite(atoms), Some(Density::HFree { h }))
    }

    /// `R^{−1/2} ρ_h⁰([−R, R])`.
    pub fn tauberian_ratio(&self, r: f64) -> f64 {
        self.measure().mass(-r, r) / r.sqrt()
    }

    /// Predicted `κ⁰..κ⁻³` coefficients for a potential with `q(0⁺) = q_at_zero`.
    /// Expanding `h − (1 + h²)/(m + h)` with `m = −κ − q(0)/(2κ) + …` puts the
    /// factor `1 + h²` on the q(0) term.
    pub fn expected_coefficients(&self, q_at_zero: f64) -> [f64; 4] {
        let h = self.h.h0;
        let hh = 1.0 + h * h;
        [h, hh, h * hh, hh * (h * h - 0.5 * q_at_zero)]
    }

    /// Least-squares fit of `Σ_{j<7} c_j κ^{−j}` to `m_h` at 8 points on `arg κ = −π/4`,
    /// `|κ|` from 20 to 200.
    pub fn fit(&self, m_h: impl Fn(C) -> Result<C> + Sync, q_at_zero: f64) -> Result<CoefficientFit> {
        const TERMS: usize = 7;
        let scale = 20.0;
        let points: Vec<C> = (0..8)
            .map(|i| C::from_polar(scale * 10f64.powf(i as f64 / 7.0), -PI / 4.0))
            .collect();
        let values = points.par_iter().map(|&k| m_h(k)).collect::<Result<Vec<_>>>()?;
        // rows: real and imaginary parts; unknowns c_j scale^{-j}
        let mut rows = Vec::with_capacity(16);
        let mut rhs = Vec::with_capacity(16);
        for (k, v) in points.iter().zip(&values) {
            let basis: Vec<C> = (0..TERMS).map(|j| (scale / k).powi(j as i32)).collect();
            rows.push(basis.iter().map(|b| b.re).collect::<Vec<_>>());
            rhs.push(v.re);
            rows.push(basis.iter().map(|b| b.im).collect::<Vec<_>>());
            rhs.push(v.im);
        }
        let sol = least_squares(rows, rhs);
        let fitted: Vec<f64> = (0..4).map(|j| sol[j] * scale.powi(j as i32)).collect();
        let expected = self.expected_coefficients(q_at_zero).to_vec();
        let residuals = fitted.iter().zip(&expected).map(|(a, b)| (a - b).abs()).collect();
        Ok(CoefficientFit { fitted, expected, residuals })
    }
}

/// Householder QR solve of an overdetermined system.
fn least_squares(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let (m, n) = (a.len(), a[0].len());
    for j in 0..n {
        let norm = (j..m).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt();
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| a[i][j]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for col in j..n {
            let dot: f64 = (j..m).map(|i| v[i - j] * a[i][col]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in j..m {
                a[i][col] -= f * v[i - j];
            }
        }
        let dot: f64 = (j..m).map(|i| v[i - j] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in j..m {
            b[i] -= f * v[i - j];
        }
    }
    let mut x = vec![0.0; n];
    for j in (0..n).rev() {
        let s: f64 = (j + 1..n).map(|k| a[j][k] * x[k]).sum();
        x[j] = (b[j] - s) / a[j][j];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;
    use crate::quad::gl_composite;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn m_h_values() {
        let zero = Problem::half_line(Potential::Zero);
        assert!((m_h(&zero, HValue { h0: 1.0 }, c(2.0)).unwrap().value - 3.0).norm() < 1e-14);
        assert!((m_h(&zero, HValue { h0: 0.0 }, c(3.0)).unwrap().value - 1.0 / 3.0).norm() < 1e-14);
        let one = Problem::half_line(Potential::Constant { q0: 1.0 });
        let v = m_h(&one, HValue { h0: 0.0 }, c(2.0)).unwrap().value;
        assert!((v - 1.0 / 5f64.sqrt()).norm() < 1e-10);
    }

    #[test]
    fn closed_form_b_h() {
        assert!((constant_b_h(1.0, 1.0) + 0.1289432494744021).abs() < 1e-12);
        assert!((constant_b_h(1.0, 1e-9) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extraction_matches_closed_form() {
        let p = Problem::half_line(Potential::Constant { q0: 1.0 });
        let got = b_h_extract(&p, HValue { h0: 0.0 }, &[1.0], 0.4).unwrap()[0].value;
        let f = TestFunction::Bump { center: 1.0, width: 0.4 };
        let want = gl_composite(|a| f.eval(a) * constant_b_h(1.0, a), 0.8, 1.2, 32);
        assert!((got - want).abs() < 1e-3, "{got} {want}");
    }

    #[test]
    fn free_measure_atom_and_tauberian() {
        let r = h_reference(HValue { h0: 2.0 });
        assert_eq!(r.measure().atoms.within(-5.0, 0.0), vec![(-4.0, 20.0)]);
        for h in [0.0, 1.0, -2.0] {
            let r = h_reference(HValue { h0: h });
            let want = 2.0 * (1.0 + h * h) / PI;
            assert!((r.tauberian_ratio(1e6) / want - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn coefficient_fit() {
        let p = Problem::half_line(Potential::Constant { q0: 1.0 });
        for h in [0.0, 1.0, -2.0] {
            let hv = HValue { h0: h };
            let fit = h_reference(hv).fit(|k| Ok(m_h(&p, hv, k)?.value), 1.0).unwrap();
            let ok = fit.residuals.iter().zip(&fit.expected).all(|(r, e)| *r < 1e-3 * e.abs().max(1.0));
            assert!(ok, "{h}: {fit:?}");
        }
    }
}
