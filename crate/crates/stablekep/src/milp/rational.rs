//! Exact rational arithmetic on 64-bit numerator/denominator. Model
//! coefficients in this domain are small integers and reciprocals of cycle
//! lengths, so 64 bits are ample; arithmetic goes through 128-bit
//! intermediates and reports overflow instead of rounding.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RatError {
    #[error("rational overflow: {0}")]
    Overflow(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse '{0}' as a decimal number")]
    Parse(String),
}

/// An exact rational with positive denominator, always in lowest terms.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rat {
    num: i64,
    den: i64,
}

pub const ZERO: Rat = Rat { num: 0, den: 1 };
pub const ONE: Rat = Rat { num: 1, den: 1 };

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn reduce(num: i128, den: i128) -> Result<Rat, RatError> {
    if den == 0 {
        return Err(RatError::DivisionByZero);
    }
    let sign = if den < 0 { -1 } else { 1 };
    let g = gcd(num, den).max(1);
    let num = sign * num / g;
    let den = sign * den / g;
    if num < i64::MIN as i128 || num > i64::MAX as i128 || den > i64::MAX as i128 {
        return Err(RatError::Overflow(format!("{num}/{den}")));
    }
    Ok(Rat {
        num: num as i64,
        den: den as i64,
    })
}

impl Rat {
    pub fn new(num: i64, den: i64) -> Result<Rat, RatError> {
        reduce(num as i128, den as i128)
    }

    pub fn int(v: i64) -> Rat {
        Rat { num: v, den: 1 }
    }

    pub fn numer(self) -> i64 {
        self.num
    }

    pub fn denom(self) -> i64 {
        self.den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }

    pub fn is_positive(self) -> bool {
        self.num > 0
    }

    pub fn is_negative(self) -> bool {
        self.num < 0
    }

    pub fn neg(self) -> Rat {
        Rat {
            num: -self.num,
            den: self.den,
        }
    }

    pub fn abs(self) -> Rat {
        Rat {
            num: self.num.abs(),
            den: self.den,
        }
    }

    pub fn add(self, o: Rat) -> Result<Rat, RatError> {
        reduce(
            self.num as i128 * o.den as i128 + o.num as i128 * self.den as i128,
            self.den as i128 * o.den as i128,
        )
    }

    pub fn sub(self, o: Rat) -> Result<Rat, RatError> {
        self.add(o.neg())
    }

    pub fn mul(self, o: Rat) -> Result<Rat, RatError> {
        reduce(
            self.num as i128 * o.num as i128,
            self.den as i128 * o.den as i128,
        )
    }

    pub fn div(self, o: Rat) -> Result<Rat, RatError> {
        if o.num == 0 {
            return Err(RatError::DivisionByZero);
        }
        reduce(
            self.num as i128 * o.den as i128,
            self.den as i128 * o.num as i128,
        )
    }

    pub fn floor(self) -> i64 {
        self.num.div_euclid(self.den)
    }

    pub fn ceil(self) -> i64 {
        -(-self.num).div_euclid(self.den)
    }

    pub fn round_to_int(self) -> i64 {
        // Nearest integer, half away from zero; exact via 128-bit.
        let twice = 2 * self.num as i128;
        let den = self.den as i128;
        if self.num >= 0 {
            ((twice + den) / (2 * den)) as i64
        } else {
            ((twice - den) / (2 * den)) as i64
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Exact parse of a plain decimal string like `-3`, `0.25`, `1e-3` is not
    /// supported; solution files use plain decimals only.
    pub fn parse_decimal(s: &str) -> Result<Rat, RatError> {
        let s = s.trim();
        let bad = || RatError::Parse(s.to_string());
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (-1i128, rest),
            None => (1i128, s.strip_prefix('+').unwrap_or(s)),
        };
        if body.is_empty() {
            return Err(bad());
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || (int_part.is_empty() && frac_part.is_empty())
        {
            return Err(bad());
        }
        let mut num: i128 = 0;
        for c in int_part.chars().chain(frac_part.chars()) {
            num = num
                .checked_mul(10)
                .and_then(|n| n.checked_add((c as u8 - b'0') as i128))
                .ok_or_else(|| RatError::Overflow(s.to_string()))?;
        }
        let mut den: i128 = 1;
        for _ in 0..frac_part.len() {
            den = den
                .checked_mul(10)
                .ok_or_else(|| RatError::Overflow(s.to_string()))?;
        }
        reduce(sign * num, den)
    }

    /// Sums an iterator, propagating overflow.
    pub fn sum(iter: impl IntoIterator<Item = Rat>) -> Result<Rat, RatError> {
        let mut acc = ZERO;
        for r in iter {
            acc = acc.add(r)?;
        }
        Ok(acc)
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Rat) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Rat) -> Ordering {
        // Denominators are positive, cross-multiplication is exact in i128.
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl From<i64> for Rat {
    fn from(v: i64) -> Rat {
        Rat::int(v)
    }
}

impl From<u32> for Rat {
    fn from(v: u32) -> Rat {
        Rat::int(v as i64)
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
