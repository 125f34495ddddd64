//! Quadrature helpers shared by every module.

use num_complex::Complex64;
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = p0;
            dp = nf * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Cached 16-point rule.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Nodes and weights of the composite 16-point rule on `[a, b]` with `panels` panels.
pub fn composite_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let (x, w) = gl16();
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(w) {
            out.push((mid + 0.5 * h * xi, 0.5 * h * wi));
        }
    }
    out
}

/// Composite 16-point Gauss–Legendre rule.
pub fn gl_composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gl16();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(mid + 0.5 * h * xi);
        }
        total += 0.5 * h * s;
    }
    total
}

pub fn gl_composite_c<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let (x, w) = gl16();
    let h = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut s = Complex64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(w) {
            s += f(mid + 0.5 * h * xi) * *wi;
        }
        total += s * (0.5 * h);
    }
    total
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `(∫₀¹ e^{-zs} ds, ∫₀¹ s e^{-zs} ds)`: cell weights for exact integration of a
/// linear interpolant against an exponential.
pub fn exp_cell_weights(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.1 {
        // Σ (-z)^n / (n! (n+1)) and Σ (-z)^n / (n! (n+2))
        let mut w0 = Complex64::new(0.0, 0.0);
        let mut w1 = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        for n in 0..14 {
            let nf = n as f64;
            w0 += p / (nf + 1.0);
            w1 += p / (nf + 2.0);
            p *= -z / (nf + 1.0);
        }
        (w0, w1)
    } else {
        let e = (-z).exp();
        let one = Complex64::new(1.0, 0.0);
        let w0 = (one - e) / z;
        let w1 = (one - (one + z) * e) / (z * z);
        (w0, w1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl16_integrates_polynomials_exactly() {
        let v = gl_composite(|x| x.powi(31) + 3.0 * x * x, -1.0, 1.0, 1);
        assert!((v - 2.0).abs() < 1e-14);
        let (_, w) = gl16();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_handles_kinks() {
        let v = adaptive_simpson(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((v - (0.045 + 0.245)).abs() < 1e-10);
    }

    #[test]
    fn cell_weights_match_on_both_branches() {
        for z in [Complex64::new(0.0999, 0.0), Complex64::new(0.1001, 0.0)] {
            let (w0, w1) = exp_cell_weights(z);
            let r0 = gl_composite_c(|s| (-z * s).exp(), 0.0, 1.0, 4);
            let r1 = gl_composite_c(|s| (-z * s).exp() * s, 0.0, 1.0, 4);
            assert!((w0 - r0).norm() < 1e-14);
            assert!((w1 - r1).norm() < 1e-14);
        }
    }
}
