//! Forward-mode dual numbers over `C64`, used for exact Jacobians of the
//! Bethe residuals and for `∂Λ/∂u_i`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::model::{C64, ONE, ZERO};

/// Field operations shared by `C64` and [`Dual`].
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn lift(z: C64) -> Self;
    fn value(self) -> C64;

    fn one() -> Self {
        Self::lift(ONE)
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn scale(self, z: C64) -> Self {
        self * Self::lift(z)
    }

    fn powu(self, n: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Scalar for C64 {
    fn lift(z: C64) -> Self {
        z
    }
    fn value(self) -> C64 {
        self
    }
}

/// `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub re: C64,
    pub eps: C64,
}

impl Dual {
    pub fn new(re: C64, eps: C64) -> Self {
        Dual { re, eps }
    }

    pub fn variable(re: C64) -> Self {
        Dual { re, eps: ONE }
    }
}

impl Scalar for Dual {
    fn lift(z: C64) -> Self {
        Dual { re: z, eps: ZERO }
    }
    fn value(self) -> C64 {
        self.re
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = o.re.inv();
        Dual::new(self.re * inv, (self.eps * o.re - self.re * o.eps) * inv * inv)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

/// `ω(u) = u − 1/u` for any [`Scalar`].
pub fn omega_s<S: Scalar>(u: S) -> S {
    u - u.recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn derivative_of_omega() {
        let u = c(0.7, -0.3);
        let d = omega_s(Dual::variable(u));
        assert!((d.re - (u - u.inv())).norm() < 1e-15);
        assert!((d.eps - (ONE + (u * u).inv())).norm() < 1e-14);
    }

    #[test]
    fn powu_matches_repeated_product() {
        let u = c(1.1, 0.4);
        let d = Dual::variable(u).powu(5);
        assert!((d.re - u.powi(5)).norm() < 1e-13);
        assert!((d.eps - u.powi(4) * 5.0).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn quotient_rule_matches_finite_difference(re in 0.3f64..2.0, im in -1.0f64..1.0) {
            let u = c(re, im);
            let f = |x: Dual| (x * x + Dual::lift(c(0.2, 0.1))) / (x - Dual::lift(c(3.0, 0.0)));
            let exact = f(Dual::variable(u)).eps;
            let h = 1e-6;
            let fd = (f(Dual::lift(u + h)).re - f(Dual::lift(u - h)).re) / (2.0 * h);
            prop_assert!((exact - fd).norm() < 1e-6 * (1.0 + exact.norm()));
        }
    }
}
