//! Numeric abstraction shared by the plain `f64` path and the reverse-mode tape.
//!
//! Kinematic signals and the trajectory decoder are written once against
//! [`Scalar`] so that the hard monitor and the differentiable monitor see
//! exactly the same arithmetic.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    /// Primal value.
    fn value(self) -> f64;
    /// A constant living in the same computation context as `self`.
    fn constant_like(self, c: f64) -> Self;
    fn add_const(self, c: f64) -> Self;
    fn mul_const(self, c: f64) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    /// Four-quadrant arctangent of `self / x`.
    fn atan2(self, x: Self) -> Self;
}

impl Scalar for f64 {
    fn value(self) -> f64 {
        self
    }
    fn constant_like(self, c: f64) -> Self {
        c
    }
    fn add_const(self, c: f64) -> Self {
        self + c
    }
    fn mul_const(self, c: f64) -> Self {
        self * c
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

/// Offset that maps `angle` into `(-π, π]` when added to it.
pub fn wrap_offset(angle: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut k = ((angle + PI) / two_pi).floor();
    // `angle + PI` landing exactly on a multiple of 2π means angle ≡ -π, which maps to +π.
    if angle - k * two_pi <= -PI {
        k -= 1.0;
    }
    -k * two_pi
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<S: Scalar>(angle: S) -> S {
    let offset = wrap_offset(angle.value());
    if offset == 0.0 {
        angle
    } else {
        angle.add_const(offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        for &a in &[0.0, PI, -PI, 3.0 * PI, -3.0 * PI, 7.5, -7.5, 1e-12, 2.0 * PI] {
            let w = wrap_angle(a);
            assert!(w > -PI && w <= PI, "{a} -> {w}");
            let k = (a - w) / (2.0 * PI);
            assert!((k - k.round()).abs() < 1e-9);
        }
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(0.25), 0.25);
    }
}
