//! Dormand–Prince 5(4) for two-component complex systems.

use num_complex::Complex64 as C;

pub(crate) type State = [C; 2];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

pub(crate) const DEFAULT_TOL: Tolerances = Tolerances { rtol: 1e-10, atol: 1e-12 };

#[derive(Debug)]
pub(crate) struct StepFailure;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &State, k: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, kk) in k {
        out[0] += kk[0] * (h * c);
        out[1] += kk[1] * (h * c);
    }
    out
}

/// Integrate `y' = f(x, y)` from `x0` to `x1` (either direction). `observe` is called
/// after every accepted step with the new point; it may rescale the state in place.
pub(crate) fn integrate<F, O>(
    f: &F,
    x0: f64,
    y0: State,
    x1: f64,
    h_init: f64,
    tol: Tolerances,
    mut observe: O,
) -> Result<State, StepFailure>
where
    F: Fn(f64, &State) -> State,
    O: FnMut(f64, &mut State),
{
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut h = h_init.abs().min(span.abs()).max(1e-14 * span.abs());
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut steps = 0usize;
    loop {
        let remaining = (x1 - x) * dir;
        if remaining <= 1e-15 * span.abs() {
            break;
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;
        let k2 = f(x + hs / 5.0, &axpy(&y, &[(A21, &k1)], hs));
        let k3 = f(x + 0.3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs));
        let k4 = f(x + 0.8 * hs, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs));
        let k5 = f(
            x + 8.0 / 9.0 * hs,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
        );
        let k6 = f(
            x + hs,
            &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs),
        );
        let ynew = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
        let xnew = if last { x1 } else { x + hs };
        let k7 = f(xnew, &ynew);
        let mut err: f64 = 0.0;
        for i in 0..2 {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
            let sc = tol.atol + tol.rtol * y[i].norm().max(ynew[i].norm());
            err = err.max(e.norm() / sc);
        }
        steps += 1;
        if steps > 20_000_000 || !err.is_finite() && h < 1e-300 {
            return Err(StepFailure);
        }
        if err <= 1.0 {
            x = xnew;
            y = ynew;
            observe(x, &mut y);
            k1 = if y == ynew { k7 } else { f(x, &y) };
            if last {
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
            if h < 1e-15 * span.abs() {
                return Err(StepFailure);
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_backward() {
        // y'' = -y on [0, 10] backward from 10 with (cos 10, -sin 10)
        let f = |_x: f64, y: &State| [y[1], -y[0]];
        let y0 = [C::new(10f64.cos(), 0.0), C::new(-10f64.sin(), 0.0)];
        let y = integrate(&f, 10.0, y0, 0.0, 0.1, DEFAULT_TOL, |_, _| {}).unwrap();
        assert!((y[0].re - 1.0).abs() < 1e-9);
        assert!(y[1].re.abs() < 1e-9);
    }
}
