//! Brute-force ground truth: finite-difference spectra, a fixed-step m integrator,
//! the Rayleigh energy on a window, and Bessel functions.

use crate::error::{Error, Result};
use crate::model::{BoundaryParam, Potential, Problem};
use crate::weyl::{MValue, Method, SpectralParameter};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

// ---------------------------------------------------------------- Bessel

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesselOrder {
    J0,
    J1,
    J2,
    I1,
}

pub fn bessel(order: BesselOrder, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("Bessel argument {x}")));
    }
    Ok(match order {
        BesselOrder::J0 => bessel_j(0, x),
        BesselOrder::J1 => bessel_j(1, x),
        BesselOrder::J2 => bessel_j(2, x),
        BesselOrder::I1 => {
            if x.abs() > 700.0 {
                return Err(Error::Overflow(x));
            }
            bessel_i(1, x)
        }
    })
}

pub fn j0(x: f64) -> f64 {
    bessel_j(0, x)
}

pub fn j1(x: f64) -> f64 {
    bessel_j(1, x)
}

pub fn j2(x: f64) -> f64 {
    bessel_j(2, x)
}

/// I₁; infinite beyond the overflow guard.
pub fn i1(x: f64) -> f64 {
    if x.abs() > 700.0 {
        return f64::INFINITY.copysign(x);
    }
    bessel_i(1, x)
}

pub fn i2(x: f64) -> f64 {
    if x.abs() > 700.0 {
        return f64::INFINITY;
    }
    bessel_i(2, x)
}

fn bessel_j(n: u32, x: f64) -> f64 {
    let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    let v = if ax <= 12.0 {
        j_series(n, ax)
    } else if ax <= 200.0 {
        j_miller(n, ax)
    } else {
        j_hankel(n, ax)
    };
    sign * v
}

fn j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    let q = -half * half;
    for k in 1..80 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    sum
}

fn j_miller(n: u32, x: f64) -> f64 {
    let start = (x + 60.0 + 10.0 * x.cbrt()) as usize;
    let m = start + start % 2;
    let mut vals = vec![0.0f64; m + 2];
    vals[m] = 1e-30;
    for k in (1..=m).rev() {
        vals[k - 1] = 2.0 * k as f64 / x * vals[k] - vals[k + 1];
        if vals[k - 1].abs() > 1e250 {
            for v in vals.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    vals[n as usize] / norm
}

fn j_hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let (mut p, mut q) = (0.0, 0.0);
    let mut a = 1.0;
    for k in 0..30 {
        let term = a / x.powi(k);
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        let odd = (2 * k + 1) as f64;
        let next = a * (mu - odd * odd) / ((k + 1) as f64 * 8.0);
        if (next / x.powi(k + 1)).abs() > term.abs() || term.abs() < 1e-17 {
            break;
        }
        a = next;
    }
    let chi = x - (n as f64 * 0.5 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn bessel_i(n: u32, x: f64) -> f64 {
    let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    let v = if ax <= 30.0 {
        let half = 0.5 * ax;
        let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
        let mut sum = term;
        let q = half * half;
        for k in 1..200 {
            term *= q / (k as f64 * (k + n) as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    } else {
        let mu = 4.0 * (n * n) as f64;
        let mut sum = 0.0;
        let mut a = 1.0;
        for k in 0..40 {
            let term = a / ax.powi(k);
            sum += if k % 2 == 0 { term } else { -term };
            let odd = (2 * k + 1) as f64;
            let next = a * (mu - odd * odd) / ((k + 1) as f64 * 8.0);
            if (next / ax.powi(k + 1)).abs() > term.abs() || term.abs() < 1e-17 {
                break;
            }
            a = next;
        }
        // split the exponential so the prefactor does not overflow early
        let e = (0.5 * ax).exp();
        e * (sum / (2.0 * PI * ax).sqrt()) * e
    };
    sign * v
}

// ---------------------------------------------------------------- tridiagonal eigensolver

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub(crate) struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    fn len(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm count).
    fn count_below(&self, lambda: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - lambda - if i == 0 { 0.0 } else { b2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + lambda.abs()).max(1e-300);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The k-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs());
        lo -= 1e-10 * scale + 1e-300;
        hi += 1e-10 * scale + 1e-300;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * mid.abs() {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for a converged eigenvalue by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let (lo, hi) = self.gershgorin();
        let tiny = f64::EPSILON * (lo.abs().max(hi.abs())).max(1.0) * 1e-3;
        let mut x = vec![1.0; n];
        for _ in 0..3 {
            // Thomas elimination of (T - λ) y = x
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            let mut piv = self.diag[0] - lambda;
            if piv.abs() < tiny {
                piv = tiny;
            }
            c[0] = if n > 1 { self.off[0] / piv } else { 0.0 };
            d[0] = x[0] / piv;
            for i in 1..n {
                piv = self.diag[i] - lambda - self.off[i - 1] * c[i - 1];
                if piv.abs() < tiny {
                    piv = tiny;
                }
                c[i] = if i + 1 < n { self.off[i] / piv } else { 0.0 };
                d[i] = (x[i] - self.off[i - 1] * d[i - 1]) / piv;
            }
            let mut y = vec![0.0; n];
            y[n - 1] = d[n - 1];
            for i in (0..n - 1).rev() {
                y[i] = d[i] - c[i] * y[i + 1];
            }
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            x = y.into_iter().map(|v| v / norm).collect();
        }
        x
    }
}

// ---------------------------------------------------------------- finite-difference spectra

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteSpectrum {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
    /// Box length.
    pub l: f64,
    /// Number of grid cells.
    pub n: usize,
}

impl DiscreteSpectrum {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,weight\n");
        for (e, w) in self.eigenvalues.iter().zip(&self.weights) {
            s.push_str(&format!("{e:.16e},{w:.16e}\n"));
        }
        s
    }
}

struct FdSystem {
    matrix: SymTridiag,
    dx: f64,
    /// Robin end: the last unknown is scaled by 1/√2.
    robin: bool,
}

fn fd_system(potential: &Potential, l: f64, n: usize, robin_h: Option<f64>) -> FdSystem {
    let dx = l / n as f64;
    let inv = 1.0 / (dx * dx);
    let unknowns = if robin_h.is_some() { n } else { n - 1 };
    let mut diag: Vec<f64> = (1..=unknowns).map(|i| 2.0 * inv + potential.eval(i as f64 * dx)).collect();
    let mut off = vec![-inv; unknowns.saturating_sub(1)];
    if let Some(h) = robin_h {
        diag[unknowns - 1] = (2.0 + 2.0 * dx * h) * inv + potential.eval(l);
        if let Some(last) = off.last_mut() {
            *last = -std::f64::consts::SQRT_2 * inv;
        }
    }
    FdSystem { matrix: SymTridiag { diag, off }, dx, robin: robin_h.is_some() }
}

/// Lowest `k_max` eigenpairs of the three-point discretization on `(0, L)` with
/// Dirichlet at 0; the condition at `L` is taken from the problem when `b` is finite.
pub fn fd_spectrum(problem: &Problem, l: f64, n: usize, k_max: usize) -> Result<DiscreteSpectrum> {
    problem.validate()?;
    if n < 100 {
        return Err(Error::InvalidArgument("need N >= 100".into()));
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidArgument("box length must be positive".into()));
    }
    let robin_h = match problem.b {
        Some(b) => {
            if l > b * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!("L = {l} exceeds b = {b}")));
            }
            match problem.h_at_b {
                BoundaryParam::Robin(h) if (l - b).abs() <= 1e-12 * b => Some(h),
                _ => None,
            }
        }
        None => None,
    };
    let sys = fd_system(&problem.potential, l, n, robin_h);
    let size = sys.matrix.len();
    if k_max > size {
        return Err(Error::Eigen(format!("requested {k_max} eigenvalues of a {size}x{size} matrix")));
    }
    let mut eigenvalues = Vec::with_capacity(k_max);
    let mut weights = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let lambda = sys.matrix.eigenvalue(k);
        let mut v = sys.matrix.eigenvector(lambda);
        if sys.robin {
            *v.last_mut().unwrap() *= std::f64::consts::SQRT_2;
        }
        // φ'(0) = u₁/dx is second-order accurate because φ''(0) = 0
        let slope = v[0] / sys.dx;
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::Eigen(format!("degenerate eigenvector for eigenvalue {lambda}")));
        }
        let mut norm2 = v.iter().map(|u| u * u).sum::<f64>();
        if sys.robin {
            norm2 -= 0.5 * v.last().unwrap().powi(2);
        }
        norm2 *= sys.dx / (slope * slope);
        if !(norm2 > 0.0) {
            return Err(Error::Eigen("non-positive eigenvector norm".into()));
        }
        eigenvalues.push(lambda);
        weights.push(1.0 / norm2);
        v.clear();
    }
    Ok(DiscreteSpectrum { eigenvalues, weights, l, n })
}

/// Minus the lowest Dirichlet eigenvalue of the discretization on `(0, α₀ + 1)`.
#[allow(non_snake_case)]
pub fn rayleigh_E(problem: &Problem, alpha0: f64) -> Result<f64> {
    problem.validate()?;
    if !(alpha0 > 0.0) {
        return Err(Error::InvalidArgument("alpha0 must be positive".into()));
    }
    let l = alpha0 + 1.0;
    if l > problem.b_value() {
        return Err(Error::Domain { x: l, b: problem.b_value() });
    }
    // Richardson over N and 2N removes the O(N⁻²) eigenvalue error
    let n = 2000;
    let coarse = fd_system(&problem.potential, l, n, None).matrix.eigenvalue(0);
    let fine = fd_system(&problem.potential, l, 2 * n, None).matrix.eigenvalue(0);
    Ok(-(fine + (fine - coarse) / 3.0))
}

// ---------------------------------------------------------------- fixed-step m

/// m(−κ²) by classical RK4 on `(u, u')` with a fixed fine step, integrating from the
/// right end (or a cutoff on the half-line) to 0.
pub fn fd_m(problem: &Problem, kappa: Complex64) -> Result<MValue> {
    problem.validate()?;
    let sp = SpectralParameter::new(kappa)?;
    let kappa = sp.kappa;
    let k2 = kappa * kappa;
    let pot = &problem.potential;
    let (x_start, mut y) = match problem.b {
        Some(b) => {
            let data = match problem.h_at_b {
                BoundaryParam::Dirichlet => [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
                BoundaryParam::Robin(h) => [Complex64::new(1.0, 0.0), Complex64::new(-h, 0.0)],
            };
            (b, data)
        }
        None => {
            let reach = pot.support_end().unwrap_or(0.0);
            (reach + 40.0 / kappa.re, [Complex64::new(1.0, 0.0), -kappa])
        }
    };
    let dx_target = (0.0005 / kappa.norm().max(1.0)).min(1e-4);
    let steps = (x_start / dx_target).ceil().max(1.0) as usize;
    let dx = x_start / steps as f64;
    let rhs = |x: f64, s: &[Complex64; 2]| [s[1], (pot.eval(x) + k2) * s[0]];
    let mut peak: f64 = 0.0;
    let mut log_scale = 0.0f64;
    let mut x = x_start;
    for i in 0..steps {
        let h = -dx;
        let k1 = rhs(x, &y);
        let k2s = rhs(x + 0.5 * h, &[y[0] + k1[0] * (0.5 * h), y[1] + k1[1] * (0.5 * h)]);
        let k3 = rhs(x + 0.5 * h, &[y[0] + k2s[0] * (0.5 * h), y[1] + k2s[1] * (0.5 * h)]);
        let k4 = rhs(x + h, &[y[0] + k3[0] * h, y[1] + k3[1] * h]);
        for j in 0..2 {
            y[j] += (k1[j] + k2s[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
        x = x_start - (i + 1) as f64 * dx;
        let mag = y[0].norm().max(y[1].norm() / kappa.norm().max(1.0));
        peak = peak.max(mag);
        if mag > 1e100 {
            y[0] /= mag;
            y[1] /= mag;
            peak /= mag;
            log_scale += mag.ln();
        }
    }
    let _ = log_scale;
    if y[0].norm() < 1e-13 * peak {
        return Err(Error::Pole { z: sp.z() });
    }
    Ok(MValue { value: y[1] / y[0], method: Method::FixedStep, error: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gl_composite;

    #[test]
    fn bessel_frozen_values() {
        // mpmath, 30 digits
        let cases: [(BesselOrder, f64, f64); 10] = [
            (BesselOrder::J1, 2.0, 0.576724807756873387202448242269),
            (BesselOrder::J0, 2.0, 0.223890779141235668051827454650),
            (BesselOrder::J2, 2.0, 0.352834028615637719150620787619),
            (BesselOrder::I1, 2.0, 1.59063685463732906338225442240),
            (BesselOrder::J1, 11.5, -0.228378620665323474614342480478),
            (BesselOrder::J0, 25.0, 0.096266783275958116173503340754),
            (BesselOrder::J1, 150.0, -0.0651451636577273603045829737971),
            (BesselOrder::J2, 333.3, -0.0385907921317310562244945612462),
            (BesselOrder::I1, 50.0, 2.90307859010355679675143325543e20),
            (BesselOrder::I1, 12.0, 18141.3487816388316014252147956),
        ];
        for (o, x, want) in cases {
            let got = bessel(o, x).unwrap();
            let err = (got - want).abs();
            let tol = if x <= 12.0 { 1e-12 * want.abs().max(1.0) } else { 1e-10 * want.abs().max(1e-3) };
            assert!(err <= tol, "{o:?}({x}) = {got}, want {want}");
        }
        assert_eq!(j1(0.0), 0.0);
        assert!(matches!(bessel(BesselOrder::I1, 701.0), Err(Error::Overflow(_))));
        assert_eq!(j1(-2.0), -j1(2.0));
    }

    #[test]
    fn bessel_regimes_join_smoothly() {
        for n in 0..3 {
            let (a, b) = (j_series(n, 12.0), j_miller(n, 12.0));
            assert!((a - b).abs() < 1e-12, "J{n} at 12: {a} {b}");
            let (a, b) = (j_miller(n, 200.0), j_hankel(n, 200.0));
            assert!((a - b).abs() < 1e-13, "J{n} at 200: {a} {b}");
        }
        // the I₁ switch is continuous up to a derivative step of 2e-9
        let ratio = bessel_i(1, 30.0 - 1e-9) / bessel_i(1, 30.0 + 1e-9);
        assert!((ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn laplace_identity_of_j1() {
        // ∫₀^∞ e^{-2x} J₁(2x)/x dx = √2 − 1
        let v = gl_composite(|x| (-2.0 * x).exp() * j1(2.0 * x) / x, 0.0, 40.0, 400);
        assert!((v - (2f64.sqrt() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn i1_below_exponential() {
        for i in 0..200 {
            let x = i as f64 * 0.25;
            let v = i1(x);
            assert!(v >= 0.0 && v <= x.exp());
        }
    }

    #[test]
    fn box_spectrum_dirichlet_and_neumann() {
        let p = Problem::interval(Potential::Zero, 1.0, BoundaryParam::Dirichlet);
        let s = fd_spectrum(&p, 1.0, 10_000, 3).unwrap();
        for (k, (e, w)) in s.eigenvalues.iter().zip(&s.weights).enumerate() {
            let n = (k + 1) as f64;
            assert!((e / (PI * PI * n * n) - 1.0).abs() < 1e-3);
            assert!((w / (2.0 * PI * PI * n * n) - 1.0).abs() < 1e-3);
        }
        let p = Problem::interval(Potential::Zero, 1.0, BoundaryParam::Robin(0.0));
        let s = fd_spectrum(&p, 1.0, 10_000, 2).unwrap();
        assert!((s.eigenvalues[0] / (PI * PI / 4.0) - 1.0).abs() < 1e-3);
        assert!((s.weights[0] / (PI * PI / 2.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn constant_shift() {
        let free = Problem::interval(Potential::Zero, 1.0, BoundaryParam::Dirichlet);
        let shifted = Problem::interval(Potential::Constant { q0: 5.0 }, 1.0, BoundaryParam::Dirichlet);
        let a = fd_spectrum(&free, 1.0, 1000, 4).unwrap();
        let b = fd_spectrum(&shifted, 1.0, 1000, 4).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((y - x - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rayleigh_values() {
        let e = rayleigh_E(&Problem::half_line(Potential::Zero), 1.0).unwrap();
        assert!((e / (-PI * PI / 4.0) - 1.0).abs() < 1e-3);
        let e = rayleigh_E(&Problem::half_line(Potential::Constant { q0: -10.0 }), 1.0).unwrap();
        assert!((e - (10.0 - PI * PI / 4.0)).abs() < 1e-3);
    }

    #[test]
    fn fd_m_matches_closed_forms() {
        let k = Complex64::new(2.0, 0.0);
        let m = fd_m(&Problem::half_line(Potential::Constant { q0: 1.0 }), k).unwrap().value;
        assert!((m.re + 5f64.sqrt()).abs() < 1e-9);
        let m = fd_m(&Problem::half_line(Potential::BargmannResonance { beta: 1.0, gamma: 2.0 }), Complex64::new(1.0, 0.0))
            .unwrap()
            .value;
        assert!((m.re + 2.0).abs() < 1e-8);
        let m = fd_m(&Problem::interval(Potential::Zero, 1.0, BoundaryParam::Dirichlet), Complex64::new(1.0, 0.0))
            .unwrap()
            .value;
        assert!((m.re + 1.0 / 1f64.tanh()).abs() < 1e-9);
    }
}
