//! Real numbers with an extended binary exponent.
//!
//! The lattice quantities mix factors like `q^{s^2}` (underflows near s = 32
//! for q = 0.5) with polynomial values of order `q^{-ns}` (overflows for
//! large n and s). Their products are ordinary numbers, so intermediate
//! results are carried as `mant * 2^exp` with `mant` in [0.5, 1).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, PartialEq)]
pub struct Scaled {
    mant: f64,
    exp: i64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mant: 0.0, exp: 0 };
    pub const ONE: Scaled = Scaled { mant: 0.5, exp: 1 };

    pub fn new(x: f64) -> Self {
        debug_assert!(x.is_finite(), "Scaled::new({x})");
        if x == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = libm::frexp(x);
        Scaled {
            mant: m,
            exp: e as i64,
        }
    }

    fn normalized(mant: f64, exp: i64) -> Self {
        if mant == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = libm::frexp(mant);
        Scaled {
            mant: m,
            exp: exp + e as i64,
        }
    }

    /// Nearest `f64`; underflows to zero and overflows to infinity.
    pub fn to_f64(self) -> f64 {
        if self.mant == 0.0 {
            return 0.0;
        }
        let e = self.exp.clamp(-2200, 2200) as i32;
        libm::ldexp(self.mant, e)
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    pub fn abs(self) -> Self {
        Scaled {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn signum(self) -> f64 {
        if self.mant == 0.0 {
            0.0
        } else {
            self.mant.signum()
        }
    }

    /// Square root of a nonnegative value.
    pub fn sqrt(self) -> Self {
        debug_assert!(self.mant >= 0.0);
        if self.mant == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = if self.exp % 2 == 0 {
            (self.mant, self.exp)
        } else {
            (self.mant * 2.0, self.exp - 1)
        };
        Self::normalized(m.sqrt(), e / 2)
    }

    /// Natural log of the magnitude.
    pub fn ln_abs(self) -> f64 {
        self.mant.abs().ln() + self.exp as f64 * std::f64::consts::LN_2
    }

    /// `self / other` as an `f64`, for comparing values of similar size.
    pub fn ratio(self, other: Scaled) -> f64 {
        (self / other).to_f64()
    }

    pub fn mul_f64(self, x: f64) -> Self {
        Self::normalized(self.mant * x, self.exp)
    }

    pub fn powi(self, n: u32) -> Self {
        (0..n).fold(Self::ONE, |acc, _| acc * self)
    }
}

impl From<f64> for Scaled {
    fn from(x: f64) -> Self {
        Scaled::new(x)
    }
}

impl Mul for Scaled {
    type Output = Scaled;
    fn mul(self, rhs: Scaled) -> Scaled {
        Scaled::normalized(self.mant * rhs.mant, self.exp + rhs.exp)
    }
}

impl Div for Scaled {
    type Output = Scaled;
    fn div(self, rhs: Scaled) -> Scaled {
        Scaled::normalized(self.mant / rhs.mant, self.exp - rhs.exp)
    }
}

impl Add for Scaled {
    type Output = Scaled;
    fn add(self, rhs: Scaled) -> Scaled {
        if self.mant == 0.0 {
            return rhs;
        }
        if rhs.mant == 0.0 {
            return self;
        }
        let top = self.exp.max(rhs.exp);
        let shift = |v: Scaled| {
            let d = (v.exp - top).max(-2000) as i32;
            libm::ldexp(v.mant, d)
        };
        Scaled::normalized(shift(self) + shift(rhs), top)
    }
}

impl Sub for Scaled {
    type Output = Scaled;
    fn sub(self, rhs: Scaled) -> Scaled {
        self + (-rhs)
    }
}

impl Neg for Scaled {
    type Output = Scaled;
    fn neg(self) -> Scaled {
        Scaled {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl PartialOrd for Scaled {
    fn partial_cmp(&self, other: &Scaled) -> Option<Ordering> {
        (*self - *other).mant.partial_cmp(&0.0)
    }
}

impl fmt::Debug for Scaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}

impl fmt::Display for Scaled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mant == 0.0 {
            return write!(f, "0");
        }
        let log10 = self.ln_abs() / std::f64::consts::LN_10;
        let e10 = log10.floor();
        let m10 = self.signum() * 10f64.powf(log10 - e10);
        write!(f, "{m10}e{e10}")
    }
}
