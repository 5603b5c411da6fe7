//! Arbitrary-precision scalars.
//!
//! Every number that flows through the operator engine is a [`BigComplex`]
//! backed by two MPFR floats. A computation runs at one [`Precision`]; the
//! arithmetic operators panic when handed operands of different precisions,
//! and the expression-level API in [`crate::algebra`] reports the same
//! condition as an error before it gets that far.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// log2(10), used to turn significant decimal digits into mantissa bits.
const LOG2_10: f64 = std::f64::consts::LOG2_10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("precision must be at least 1 decimal digit (got {0})")]
    ZeroPrecision(u32),
    #[error("precision mismatch: {0} vs {1} digits")]
    PrecisionMismatch(u32, u32),
    #[error("cannot parse {0:?} as a decimal number")]
    Parse(String),
}

/// Working precision in significant decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Precision(u32);

impl Precision {
    pub const DEFAULT_DIGITS: u32 = 60;

    pub fn new(digits: u32) -> Result<Self, ScalarError> {
        if digits == 0 {
            return Err(ScalarError::ZeroPrecision(digits));
        }
        Ok(Precision(digits))
    }

    pub fn digits(self) -> u32 {
        self.0
    }

    /// Mantissa bits carried by each MPFR float.
    pub fn bits(self) -> u32 {
        (f64::from(self.0) * LOG2_10).ceil() as u32
    }

    /// A real at this precision, converted exactly from `x`.
    pub fn real(self, x: f64) -> Float {
        Float::with_val(self.bits(), x)
    }

    pub fn real_from_int(self, n: i64) -> Float {
        Float::with_val(self.bits(), n)
    }

    /// Parse a decimal string (e.g. `"0.88"`, `"2e6"`) at this precision.
    pub fn parse_real(self, s: &str) -> Result<Float, ScalarError> {
        let parsed = Float::parse(s.trim()).map_err(|_| ScalarError::Parse(s.to_string()))?;
        Ok(Float::with_val(self.bits(), parsed))
    }

    pub fn pi(self) -> Float {
        Float::with_val(self.bits(), Constant::Pi)
    }

    /// `10^exponent` at this precision.
    pub fn pow10(self, exponent: i32) -> Float {
        Float::with_val(self.bits(), 10).pow(exponent)
    }

    /// Threshold under which a value is rounding dust relative to a scale of
    /// one: `10^(-digits + 5)`.
    pub fn dust(self) -> Float {
        self.pow10(-(self.0 as i32) + 5)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision(Self::DEFAULT_DIGITS)
    }
}

impl TryFrom<u32> for Precision {
    type Error = ScalarError;
    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Precision::new(value)
    }
}

impl From<Precision> for u32 {
    fn from(p: Precision) -> u32 {
        p.0
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} digits", self.0)
    }
}

/// Decimal rendering of a real with `digits` significant digits.
pub fn real_to_decimal(x: &Float, digits: u32) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(digits as usize))
}

/// Decimal rendering that parses back to the identical float.
pub fn real_to_exact_decimal(x: &Float) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, None)
}

/// Complex number with arbitrary-precision real and imaginary parts.
#[derive(Clone, PartialEq)]
pub struct BigComplex {
    re: Float,
    im: Float,
    prec: Precision,
}

impl BigComplex {
    pub fn zero(prec: Precision) -> Self {
        BigComplex { re: Float::new(prec.bits()), im: Float::new(prec.bits()), prec }
    }

    pub fn one(prec: Precision) -> Self {
        Self::from_f64(1.0, prec)
    }

    pub fn i(prec: Precision) -> Self {
        Self::from_parts_f64(0.0, 1.0, prec)
    }

    pub fn from_f64(re: f64, prec: Precision) -> Self {
        Self::from_parts_f64(re, 0.0, prec)
    }

    pub fn from_parts_f64(re: f64, im: f64, prec: Precision) -> Self {
        BigComplex { re: prec.real(re), im: prec.real(im), prec }
    }

    pub fn from_real(re: Float, prec: Precision) -> Self {
        Self::from_parts(re, Float::new(prec.bits()), prec)
    }

    /// Builds from two reals, rounding them to `prec` if they carry more bits.
    pub fn from_parts(re: Float, im: Float, prec: Precision) -> Self {
        let bits = prec.bits();
        let fix = |x: Float| if x.prec() == bits { x } else { Float::with_val(bits, x) };
        BigComplex { re: fix(re), im: fix(im), prec }
    }

    /// `e^{i theta}` for a real angle.
    pub fn cis(theta: &Float, prec: Precision) -> Self {
        let (s, c) = Float::with_val(prec.bits(), theta).sin_cos(Float::new(prec.bits()));
        BigComplex { re: c, im: s, prec }
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn into_parts(self) -> (Float, Float) {
        (self.re, self.im)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        BigComplex { re: self.re.clone(), im: Float::with_val(self.prec.bits(), -&self.im), prec: self.prec }
    }

    /// `|z|^2`.
    pub fn norm_sqr(&self) -> Float {
        let bits = self.prec.bits();
        let mut out = Float::with_val(bits, self.re.square_ref());
        out += Float::with_val(bits, self.im.square_ref());
        out
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec.bits(), self.re.hypot_ref(&self.im))
    }

    /// Principal argument in (-pi, pi].
    pub fn arg(&self) -> Float {
        Float::with_val(self.prec.bits(), self.im.atan2_ref(&self.re))
    }

    pub fn scale(&self, k: &Float) -> Self {
        let bits = self.prec.bits();
        BigComplex {
            re: Float::with_val(bits, &self.re * k),
            im: Float::with_val(bits, &self.im * k),
            prec: self.prec,
        }
    }

    /// Multiplication by `i`.
    pub fn mul_i(&self) -> Self {
        BigComplex {
            re: Float::with_val(self.prec.bits(), -&self.im),
            im: self.re.clone(),
            prec: self.prec,
        }
    }

    pub fn exp(&self) -> Self {
        let bits = self.prec.bits();
        let modulus = Float::with_val(bits, self.re.exp_ref());
        let (s, c) = self.im.clone().sin_cos(Float::new(bits));
        BigComplex { re: c * &modulus, im: s * &modulus, prec: self.prec }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        BigComplex { re: self.abs().ln(), im: self.arg(), prec: self.prec }
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let bits = self.prec.bits();
        // t = sqrt((|z| + |re|)/2) avoids cancellation; the other part is im/(2t)
        let t = (Float::with_val(bits, self.re.abs_ref()) + self.abs()) / 2u32;
        let t = t.sqrt();
        let other = Float::with_val(bits, &self.im / &t) / 2u32;
        if self.re.is_sign_positive() {
            BigComplex { re: t, im: other, prec: self.prec }
        } else {
            let re = other.abs();
            let im = if self.im.is_sign_negative() { -t } else { t };
            BigComplex { re, im, prec: self.prec }
        }
    }

    pub fn sin(&self) -> Self {
        // sin(x + iy) = sin x cosh y + i cos x sinh y
        let bits = self.prec.bits();
        let (s, c) = self.re.clone().sin_cos(Float::new(bits));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(bits));
        BigComplex { re: s * ch, im: c * sh, prec: self.prec }
    }

    pub fn cos(&self) -> Self {
        // cos(x + iy) = cos x cosh y - i sin x sinh y
        let bits = self.prec.bits();
        let (s, c) = self.re.clone().sin_cos(Float::new(bits));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(bits));
        BigComplex { re: c * ch, im: -(s * sh), prec: self.prec }
    }

    pub fn sinh(&self) -> Self {
        // sinh(x + iy) = sinh x cos y + i cosh x sin y
        let bits = self.prec.bits();
        let (s, c) = self.im.clone().sin_cos(Float::new(bits));
        let (sh, ch) = self.re.clone().sinh_cosh(Float::new(bits));
        BigComplex { re: sh * c, im: ch * s, prec: self.prec }
    }

    pub fn cosh(&self) -> Self {
        // cosh(x + iy) = cosh x cos y + i sinh x sin y
        let bits = self.prec.bits();
        let (s, c) = self.im.clone().sin_cos(Float::new(bits));
        let (sh, ch) = self.re.clone().sinh_cosh(Float::new(bits));
        BigComplex { re: ch * c, im: sh * s, prec: self.prec }
    }

    pub fn to_f64_parts(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    /// `|self - other| / max(|self|, |other|)`, zero when both vanish.
    pub fn rel_diff(&self, other: &BigComplex) -> Float {
        let bits = self.prec.bits().max(other.prec.bits());
        let diff_re = Float::with_val(bits, &self.re - &other.re);
        let diff_im = Float::with_val(bits, &self.im - &other.im);
        let diff = Float::with_val(bits, diff_re.hypot_ref(&diff_im));
        let scale = match self.abs().partial_cmp(&other.abs()) {
            Some(Ordering::Less) => other.abs(),
            _ => self.abs(),
        };
        if scale.is_zero() {
            return Float::new(bits);
        }
        diff / scale
    }

    /// Rendering with `digits` significant digits per part.
    pub fn to_decimal(&self, digits: u32) -> (String, String) {
        (real_to_decimal(&self.re, digits), real_to_decimal(&self.im, digits))
    }

    fn check(&self, other: &BigComplex) {
        assert_eq!(
            self.prec, other.prec,
            "precision mismatch in BigComplex arithmetic: {} vs {}",
            self.prec, other.prec
        );
    }
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_decimal(20);
        write!(f, "({re} + {im}i)")
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_decimal(self.prec.digits());
        write!(f, "({re} + {im}i)")
    }
}

impl Add<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn add(self, rhs: &BigComplex) -> BigComplex {
        self.check(rhs);
        let bits = self.prec.bits();
        BigComplex {
            re: Float::with_val(bits, &self.re + &rhs.re),
            im: Float::with_val(bits, &self.im + &rhs.im),
            prec: self.prec,
        }
    }
}

impl Sub<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn sub(self, rhs: &BigComplex) -> BigComplex {
        self.check(rhs);
        let bits = self.prec.bits();
        BigComplex {
            re: Float::with_val(bits, &self.re - &rhs.re),
            im: Float::with_val(bits, &self.im - &rhs.im),
            prec: self.prec,
        }
    }
}

impl Mul<&BigComplex> for &BigComplex {
    type Output = BigComplex;
    fn mul(self, rhs: &BigComplex) -> BigComplex {
        self.check(rhs);
        let bits = self.prec.bits();
        let re = Float::with_val(bits, self.re.mul_sub_mul_ref(&rhs.re, &self.im, &rhs.im));
        let im = Float::with_val(bits, self.re.mul_add_mul_ref(&rhs.im, &self.im, &rhs.re));
        BigComplex { re, im, prec: self.prec }
    }
}

impl Neg for &BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        let bits = self.prec.bits();
        BigComplex {
            re: Float::with_val(bits, -&self.re),
            im: Float::with_val(bits, -&self.im),
            prec: self.prec,
        }
    }
}

impl Neg for BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex { re: -self.re, im: -self.im, prec: self.prec }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $method(self, rhs: BigComplex) -> BigComplex {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&BigComplex> for BigComplex {
            type Output = BigComplex;
            fn $method(self, rhs: &BigComplex) -> BigComplex {
                (&self).$method(rhs)
            }
        }
        impl $tr<BigComplex> for &BigComplex {
            type Output = BigComplex;
            fn $method(self, rhs: BigComplex) -> BigComplex {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl AddAssign<&BigComplex> for BigComplex {
    fn add_assign(&mut self, rhs: &BigComplex) {
        self.check(rhs);
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&BigComplex> for BigComplex {
    fn sub_assign(&mut self, rhs: &BigComplex) {
        self.check(rhs);
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&BigComplex> for BigComplex {
    fn mul_assign(&mut self, rhs: &BigComplex) {
        *self = &*self * rhs;
    }
}
