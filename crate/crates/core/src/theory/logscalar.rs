use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A real number stored as a sign and the natural log of its magnitude.
///
/// Carries quantities such as `(n/l)^l` that overflow every float format.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScalar {
    ln: f64,
    sign: i8,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        ln: f64::NEG_INFINITY,
        sign: 0,
    };
    pub const ONE: LogScalar = LogScalar { ln: 0.0, sign: 1 };

    /// Positive value `e^ln`.
    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { ln, sign: 1 }
        }
    }

    pub fn from_signed_ln(sign: i8, ln: f64) -> Self {
        if sign == 0 || ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self {
                ln,
                sign: sign.signum(),
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self {
                ln: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    /// Natural log of the magnitude; `-inf` for zero.
    #[inline]
    pub fn ln(self) -> f64 {
        self.ln
    }

    #[inline]
    pub fn sign(self) -> i8 {
        self.sign
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.sign > 0
    }

    /// The value as a float; saturates to `±inf` or `0`.
    pub fn to_f64(self) -> f64 {
        f64::from(self.sign) * self.ln.exp()
    }

    pub fn abs(self) -> Self {
        Self {
            ln: self.ln,
            sign: self.sign.abs(),
        }
    }

    pub fn powf(self, p: f64) -> Self {
        if self.is_zero() {
            return if p == 0.0 { Self::ONE } else { Self::ZERO };
        }
        assert!(
            self.sign > 0 || p.fract() == 0.0,
            "fractional power of a negative"
        );
        let sign = if self.sign < 0 && (p as i64) % 2 != 0 {
            -1
        } else {
            1
        };
        Self {
            ln: self.ln * p,
            sign,
        }
    }

    pub fn recip(self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Self {
            ln: -self.ln,
            sign: self.sign,
        }
    }

    /// Signed sum via log-sum-exp.
    fn add_impl(self, rhs: Self) -> Self {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.ln >= rhs.ln {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = (small.ln - big.ln).exp();
        if big.sign == small.sign {
            Self {
                ln: big.ln + d.ln_1p(),
                sign: big.sign,
            }
        } else if d == 1.0 {
            Self::ZERO
        } else {
            Self {
                ln: big.ln + (-d).ln_1p(),
                sign: big.sign,
            }
        }
    }
}

impl Default for LogScalar {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for LogScalar {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self {
            ln: self.ln + rhs.ln,
            sign: self.sign * rhs.sign,
        }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for LogScalar {
    type Output = LogScalar;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Add for LogScalar {
    type Output = LogScalar;
    fn add(self, rhs: Self) -> Self {
        self.add_impl(rhs)
    }
}

impl Neg for LogScalar {
    type Output = LogScalar;
    fn neg(self) -> Self {
        Self {
            ln: self.ln,
            sign: -self.sign,
        }
    }
}

impl Sub for LogScalar {
    type Output = LogScalar;
    fn sub(self, rhs: Self) -> Self {
        self.add_impl(-rhs)
    }
}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.ln.partial_cmp(&other.ln),
                _ => other.ln.partial_cmp(&self.ln),
            },
            ord => Some(ord),
        }
    }
}

impl fmt::Debug for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            1 => write!(f, "exp({})", self.ln),
            _ => write!(f, "-exp({})", self.ln),
        }
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let log10 = self.ln / std::f64::consts::LN_10;
        if log10.abs() < 15.0 {
            return write!(f, "{}", self.to_f64());
        }
        let exp = log10.floor();
        let mant = 10f64.powf(log10 - exp);
        let sign = if self.sign < 0 { "-" } else { "" };
        write!(f, "{sign}{mant:.6}e{exp}")
    }
}
