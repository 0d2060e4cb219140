//! Complex scalars with optional forward-mode derivative tracking.
//!
//! The scalar functions of the T-Q construction are written once over
//! [`Scalar`] and evaluated either on plain [`Cplx`] values or on [`Dual`]
//! numbers, which carry an exact first derivative along one direction.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::linalg::{Cplx, ZERO};

pub trait Scalar:
    Copy
    + Debug
    + From<Cplx>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<Cplx, Output = Self>
    + Sub<Cplx, Output = Self>
    + Mul<Cplx, Output = Self>
    + Div<Cplx, Output = Self>
    + Mul<f64, Output = Self>
{
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn exp(self) -> Self;
    fn value(self) -> Cplx;
}

impl Scalar for Cplx {
    fn sinh(self) -> Self {
        Cplx::sinh(self)
    }
    fn cosh(self) -> Self {
        Cplx::cosh(self)
    }
    fn exp(self) -> Self {
        Cplx::exp(self)
    }
    fn value(self) -> Cplx {
        self
    }
}

/// `v + d·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: Cplx,
    pub d: Cplx,
}

impl Dual {
    pub fn new(v: Cplx, d: Cplx) -> Self {
        Dual { v, d }
    }
    pub fn constant(v: Cplx) -> Self {
        Dual { v, d: ZERO }
    }
    /// The independent variable at `v`.
    pub fn variable(v: Cplx) -> Self {
        Dual { v, d: Cplx::new(1.0, 0.0) }
    }
}

impl From<Cplx> for Dual {
    fn from(v: Cplx) -> Self {
        Dual::constant(v)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        Dual::new(self.v * inv, (self.d - self.v * inv * o.d) * inv)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Add<Cplx> for Dual {
    type Output = Dual;
    fn add(self, o: Cplx) -> Dual {
        Dual::new(self.v + o, self.d)
    }
}

impl Sub<Cplx> for Dual {
    type Output = Dual;
    fn sub(self, o: Cplx) -> Dual {
        Dual::new(self.v - o, self.d)
    }
}

impl Mul<Cplx> for Dual {
    type Output = Dual;
    fn mul(self, o: Cplx) -> Dual {
        Dual::new(self.v * o, self.d * o)
    }
}

impl Div<Cplx> for Dual {
    type Output = Dual;
    fn div(self, o: Cplx) -> Dual {
        Dual::new(self.v / o, self.d / o)
    }
}

impl Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, o: f64) -> Dual {
        Dual::new(self.v * o, self.d * o)
    }
}

impl Scalar for Dual {
    fn sinh(self) -> Self {
        Dual::new(self.v.sinh(), self.d * self.v.cosh())
    }
    fn cosh(self) -> Self {
        Dual::new(self.v.cosh(), self.d * self.v.sinh())
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, self.d * e)
    }
    fn value(self) -> Cplx {
        self.v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f<S: Scalar>(x: S) -> S {
        let c = Cplx::new(0.3, -0.2);
        (x * 2.0 + c).sinh() * x.cosh() / (x.exp() + c) - x * c
    }

    #[test]
    fn dual_matches_central_difference() {
        let x = Cplx::new(0.41, 0.17);
        let h = 1e-6;
        let fd = (f(x + h) - f(x - h)) / (2.0 * h);
        let ad = f(Dual::variable(x));
        assert_eq!(ad.v, f(x));
        assert!((ad.d - fd).norm() < 1e-9);
    }

    #[test]
    fn constants_carry_no_derivative() {
        let d = f(Dual::constant(Cplx::new(-0.2, 0.5)));
        assert_eq!(d.d, ZERO);
    }

    proptest! {
        #[test]
        fn quotient_rule(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let x = Dual::variable(Cplx::new(a, b));
            let one = Dual::constant(Cplx::new(1.0, 0.0));
            let q = one / x.exp();
            let expect = -(-x.v).exp();
            prop_assert!((q.d - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
        }
    }
}
