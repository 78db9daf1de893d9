//! Numeric scalars the algebra engine is generic over.
//!
//! The engine runs exactly over [`BigRational`] by default. `f64` and `f32`
//! are supported for experiments where exactness is not needed; irrational
//! quantities (square roots of non-squares, most trig table entries) are
//! approximated from `f64` when the scalar type is exact.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// How a scalar value is written back into a condition body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueRepr {
    /// A terminating decimal literal such as `-2.5`.
    Decimal(String),
    /// A ratio of two integer literals, rendered as `Div(num,den)`.
    Fraction(String, String),
}

/// Field-like scalar with the few extra operations the solver needs.
pub trait Scalar:
    Clone + Debug + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// True when `+ - * /` never round.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Parses a decimal numeral (`12`, `-3.25`).
    fn parse_numeral(text: &str) -> Option<Self>;

    /// Nearest representable value to `x`; `None` for non-finite input.
    fn approximate(x: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Zero test used for pivoting. Exact types compare against zero, float
    /// types against a small absolute tolerance.
    fn is_negligible(&self) -> bool;

    /// Non-negative square root; `None` for negative input.
    fn sqrt_nonneg(&self) -> Option<Self>;

    /// The value as an `i64` when it is (numerically) an integer.
    fn as_small_integer(&self) -> Option<i64>;

    fn repr(&self) -> ValueRepr;

    /// Integer power, negative exponents allowed for non-zero bases.
    fn powi(&self, exp: i64) -> Option<Self> {
        if exp < 0 && self.is_zero() {
            return None;
        }
        let mut acc = Self::one();
        for _ in 0..exp.unsigned_abs() {
            acc = acc * self.clone();
        }
        Some(if exp < 0 { Self::one() / acc } else { acc })
    }

    /// Approximate equality at the goal-comparison tolerance.
    fn approx_eq(&self, other: &Self) -> bool {
        (self.to_f64() - other.to_f64()).abs() <= 1e-6
    }
}

fn trim_decimal(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn float_repr(x: f64) -> ValueRepr {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        ValueRepr::Decimal(trim_decimal(format!("{x:.0}")))
    } else {
        ValueRepr::Decimal(trim_decimal(format!("{x:.10}")))
    }
}

/// Splits `-12.50` into (negative, integer digits, fraction digits).
fn split_numeral(text: &str) -> Option<(bool, &str, &str)> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() || !digits(int) || !digits(frac) || (body.contains('.') && frac.is_empty()) {
        return None;
    }
    Some((neg, int, frac))
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn parse_numeral(text: &str) -> Option<Self> {
        let (neg, int, frac) = split_numeral(text)?;
        let numer: BigInt = format!("{int}{frac}").parse().ok()?;
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        let value = BigRational::new(numer, denom);
        Some(if neg { -value } else { value })
    }

    fn approximate(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn sqrt_nonneg(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let (n, d) = (self.numer(), self.denom());
        let (rn, rd) = (n.sqrt(), d.sqrt());
        if &(&rn * &rn) == n && &(&rd * &rd) == d {
            return Some(BigRational::new(rn, rd));
        }
        Self::approximate(Scalar::to_f64(self).sqrt())
    }

    fn as_small_integer(&self) -> Option<i64> {
        if self.is_integer() {
            self.to_integer().to_i64()
        } else {
            None
        }
    }

    fn repr(&self) -> ValueRepr {
        let denom = self.denom().clone();
        // Terminating decimals have denominators of the form 2^a 5^b.
        let mut rest = denom.clone();
        let (mut twos, mut fives) = (0usize, 0usize);
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        while rest.is_even() {
            rest /= &two;
            twos += 1;
        }
        while (&rest % &five).is_zero() {
            rest /= &five;
            fives += 1;
        }
        if rest.is_one() {
            let places = twos.max(fives);
            if places <= 12 {
                let scaled = self * BigRational::from_integer(num_traits::pow(BigInt::from(10), places));
                let digits = scaled.to_integer().abs().to_string();
                let sign = if self.is_negative() { "-" } else { "" };
                let text = if places == 0 {
                    format!("{sign}{digits}")
                } else {
                    let padded = format!("{digits:0>width$}", width = places + 1);
                    let (i, f) = padded.split_at(padded.len() - places);
                    format!("{sign}{i}.{f}")
                };
                return ValueRepr::Decimal(trim_decimal(text));
            }
        } else if self.numer().to_string().len() <= 12 && denom.to_string().len() <= 12 {
            return ValueRepr::Fraction(self.numer().to_string(), denom.to_string());
        }
        float_repr(Scalar::to_f64(self))
    }
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn parse_numeral(text: &str) -> Option<Self> {
                split_numeral(text)?;
                text.parse().ok()
            }

            fn approximate(x: f64) -> Option<Self> {
                x.is_finite().then_some(x as $t)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn is_negligible(&self) -> bool {
                self.abs() < $tol
            }

            fn sqrt_nonneg(&self) -> Option<Self> {
                if *self < -$tol {
                    None
                } else {
                    Some(self.max(0.0).sqrt())
                }
            }

            fn as_small_integer(&self) -> Option<i64> {
                let r = self.round();
                ((self - r).abs() < $tol && r.abs() < 1e15).then_some(r as i64)
            }

            fn repr(&self) -> ValueRepr {
                float_repr(*self as f64)
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-5);

/// `coefficient * sqrt(radicand)` with small integers.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Surd {
    num: i64,
    den: i64,
    radicand: i64,
}

const fn surd(num: i64, den: i64, radicand: i64) -> Surd {
    Surd { num, den, radicand }
}

impl Surd {
    fn eval<S: Scalar>(self) -> Option<S> {
        let coef = S::from_ratio(self.num, self.den);
        if self.radicand == 1 {
            return Some(coef);
        }
        Some(coef * S::from_ratio(self.radicand, 1).sqrt_nonneg()?)
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64 * (self.radicand as f64).sqrt()
    }
}

/// Angles (degrees) with exactly known trig values.
pub const TABLE_ANGLES: [i64; 9] = [0, 30, 45, 60, 90, 120, 135, 150, 180];

const SIN: [Surd; 9] = [
    surd(0, 1, 1),
    surd(1, 2, 1),
    surd(1, 2, 2),
    surd(1, 2, 3),
    surd(1, 1, 1),
    surd(1, 2, 3),
    surd(1, 2, 2),
    surd(1, 2, 1),
    surd(0, 1, 1),
];

const COS: [Surd; 9] = [
    surd(1, 1, 1),
    surd(1, 2, 3),
    surd(1, 2, 2),
    surd(1, 2, 1),
    surd(0, 1, 1),
    surd(-1, 2, 1),
    surd(-1, 2, 2),
    surd(-1, 2, 3),
    surd(-1, 1, 1),
];

// tan 90 is undefined; the slot is skipped by lookups.
const TAN: [Option<Surd>; 9] = [
    Some(surd(0, 1, 1)),
    Some(surd(1, 3, 3)),
    Some(surd(1, 1, 1)),
    Some(surd(1, 1, 3)),
    None,
    Some(surd(-1, 1, 3)),
    Some(surd(-1, 1, 1)),
    Some(surd(-1, 3, 3)),
    Some(surd(0, 1, 1)),
];

/// Trigonometric function over degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
    Tan,
}

impl Trig {
    fn table(self, slot: usize) -> Option<Surd> {
        match self {
            Trig::Sin => Some(SIN[slot]),
            Trig::Cos => Some(COS[slot]),
            Trig::Tan => TAN[slot],
        }
    }

    /// Value at `degrees` when it is a table angle.
    pub fn eval<S: Scalar>(self, degrees: &S) -> Option<S> {
        let deg = degrees.as_small_integer()?;
        let slot = TABLE_ANGLES.iter().position(|&a| a == deg)?;
        self.table(slot)?.eval()
    }

    /// The unique table angle strictly inside (0, 180) with the given value.
    /// Ambiguous inversions (sin has two) yield `None`.
    pub fn invert<S: Scalar>(self, value: &S) -> Option<S> {
        let v = value.to_f64();
        let hits: Vec<i64> = TABLE_ANGLES
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a > 0 && a < 180)
            .filter(|&(slot, _)| self.table(slot).is_some_and(|s| (s.value() - v).abs() < 1e-9))
            .map(|(_, &a)| a)
            .collect();
        match hits.as_slice() {
            [a] => Some(S::from_ratio(*a, 1)),
            _ => None,
        }
    }
}
