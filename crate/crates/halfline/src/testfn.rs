//! Smooth compactly supported test functions built from the exponential bump.

use serde::{Deserialize, Serialize};

/// ∫₋₁¹ exp(−1/(1−t²)) dt.
const BUMP_MASS: f64 = 0.443_993_816_168_078_65;

/// Unit-mass bump on `[center − width/2, center + width/2]` and its derivative.
fn bump(center: f64, width: f64, x: f64) -> (f64, f64) {
    let half = 0.5 * width;
    let t = (x - center) / half;
    if t.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let s = 1.0 - t * t;
    let v = (-1.0 / s).exp() / (BUMP_MASS * half);
    (v, v * (-2.0 * t / (s * s)) / half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// Unit-mass bump; support `[center ± width/2]`.
    Bump { center: f64, width: f64 },
    /// `bump(α) − bump(−α)`.
    OddBump { center: f64, width: f64 },
    /// `bump(α) + bump(−α)`, or a single bump when centered at 0.
    EvenBump { center: f64, width: f64 },
    /// `α · bump(α)` for a bump centered at 0: odd with `f'(0) ≠ 0`.
    Ramp { width: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        self.both(x).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.both(x).1
    }

    fn both(&self, x: f64) -> (f64, f64) {
        match *self {
            TestFunction::Bump { center, width } => bump(center, width, x),
            TestFunction::OddBump { center, width } => {
                let (a, da) = bump(center, width, x);
                let (b, db) = bump(center, width, -x);
                (a - b, da + db)
            }
            TestFunction::EvenBump { center, width } => {
                if center == 0.0 {
                    return bump(0.0, width, x);
                }
                let (a, da) = bump(center, width, x);
                let (b, db) = bump(center, width, -x);
                (a + b, da - db)
            }
            TestFunction::Ramp { width } => {
                let (v, dv) = bump(0.0, width, x);
                (x * v, v + x * dv)
            }
        }
    }

    /// Support intersected with `[0, ∞)`.
    pub fn positive_support(&self) -> (f64, f64) {
        match *self {
            TestFunction::Bump { center, width }
            | TestFunction::OddBump { center, width }
            | TestFunction::EvenBump { center, width } => {
                let half = 0.5 * width;
                if center.abs() < half {
                    (0.0, center.abs() + half)
                } else {
                    (center.abs() - half, center.abs() + half)
                }
            }
            TestFunction::Ramp { width } => (0.0, 0.5 * width),
        }
    }

    pub fn is_odd(&self) -> bool {
        matches!(self, TestFunction::OddBump { .. } | TestFunction::Ramp { .. })
    }

    pub fn is_even(&self) -> bool {
        matches!(self, TestFunction::EvenBump { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gl_composite;

    #[test]
    fn unit_mass_and_derivative() {
        let f = TestFunction::Bump { center: 1.0, width: 0.2 };
        let mass = gl_composite(|x| f.eval(x), 0.9, 1.1, 64);
        assert!((mass - 1.0).abs() < 1e-12);
        for x in [0.93, 1.0, 1.07] {
            let h = 1e-6;
            let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
            assert!((fd - f.deriv(x)).abs() < 1e-5 * f.deriv(x).abs().max(1.0));
        }
    }

    #[test]
    fn parity() {
        let o = TestFunction::OddBump { center: 1.0, width: 0.5 };
        let e = TestFunction::EvenBump { center: 0.6, width: 0.5 };
        let r = TestFunction::Ramp { width: 1.0 };
        for x in [0.1, 0.4, 0.9, 1.2] {
            assert_eq!(o.eval(-x), -o.eval(x));
            assert_eq!(e.eval(-x), e.eval(x));
            assert!((r.eval(-x) + r.eval(x)).abs() < 1e-15);
        }
        assert!(r.deriv(0.0) > 0.0);
    }
}
