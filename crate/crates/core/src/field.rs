//! Exact scalars over the rationals or a prime field.
//!
//! A [`Field`] is a runtime tag; every [`FieldElement`] remembers which field
//! it lives in. Combining elements of different fields is a programming error
//! and panics. Values that reach arithmetic have already been checked against
//! a common field by the validators upstream.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("unrecognized field `{0}` (expected `Q` or `Fp:<prime>`)")]
    BadFieldSpec(String),
    #[error("malformed scalar literal `{0}`")]
    BadLiteral(String),
    #[error("denominator of `{literal}` vanishes in {field}")]
    ZeroDenominator { literal: String, field: Field },
}

/// The scalar field all computations run over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Rationals,
    Prime(u64),
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl Field {
    /// The prime field of order `p`; rejects composite moduli.
    pub fn prime(p: u64) -> Result<Field, FieldError> {
        if is_prime(p) {
            Ok(Field::Prime(p))
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            Field::Rationals => 0,
            Field::Prime(p) => *p,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.from_i64(0)
    }

    pub fn one(&self) -> FieldElement {
        self.from_i64(1)
    }

    #[allow(clippy::wrong_self_convention)]
    pub fn from_i64(&self, n: i64) -> FieldElement {
        match *self {
            Field::Rationals => FieldElement::Rational(BigRational::from_integer(BigInt::from(n))),
            Field::Prime(p) => FieldElement::Modular {
                value: (n as i128).rem_euclid(p as i128) as u64,
                modulus: p,
            },
        }
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_bigint(&self, n: &BigInt) -> FieldElement {
        match *self {
            Field::Rationals => FieldElement::Rational(BigRational::from_integer(n.clone())),
            Field::Prime(p) => {
                let r = n.mod_floor(&BigInt::from(p));
                FieldElement::Modular {
                    value: r.to_u64().expect("residue fits in u64"),
                    modulus: p,
                }
            }
        }
    }

    /// Embeds the rational number `num/den`; fails when `den` vanishes in the field.
    pub fn from_ratio(&self, num: &BigInt, den: &BigInt) -> Option<FieldElement> {
        let den_el = self.from_bigint(den);
        if den_el.is_zero() {
            return None;
        }
        Some(self.from_bigint(num) * den_el.inv().expect("nonzero"))
    }

    /// Parses `n`, `-n` or `a/b`. Over a prime field the rational is reduced mod p.
    pub fn parse_scalar(&self, literal: &str) -> Result<FieldElement, FieldError> {
        let text = literal.trim();
        let bad = || FieldError::BadLiteral(literal.to_string());
        let (num, den) = match text.split_once('/') {
            Some((a, b)) => (
                a.trim().parse::<BigInt>().map_err(|_| bad())?,
                b.trim().parse::<BigInt>().map_err(|_| bad())?,
            ),
            None => (text.parse::<BigInt>().map_err(|_| bad())?, BigInt::one()),
        };
        self.from_ratio(&num, &den).ok_or_else(|| FieldError::ZeroDenominator {
            literal: literal.to_string(),
            field: *self,
        })
    }

    /// Every element of a prime field, in order `0, 1, ..., p-1`.
    pub fn elements(&self) -> Option<impl Iterator<Item = FieldElement>> {
        match *self {
            Field::Rationals => None,
            Field::Prime(p) => Some((0..p).map(move |value| FieldElement::Modular { value, modulus: p })),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rationals => write!(f, "Q"),
            Field::Prime(p) => write!(f, "Fp:{p}"),
        }
    }
}

impl FromStr for Field {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "Q" {
            return Ok(Field::Rationals);
        }
        if let Some(p) = s.strip_prefix("Fp:") {
            let p: u64 = p.trim().parse().map_err(|_| FieldError::BadFieldSpec(s.to_string()))?;
            return Field::prime(p);
        }
        Err(FieldError::BadFieldSpec(s.to_string()))
    }
}

/// An exact scalar. Rationals are kept in lowest terms with a positive
/// denominator; prime-field values are canonical representatives in `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldElement {
    Rational(BigRational),
    Modular { value: u64, modulus: u64 },
}

fn mod_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % p as u128) as u64;
        }
        base = ((base as u128 * base as u128) % p as u128) as u64;
        exp >>= 1;
    }
    acc
}

impl FieldElement {
    pub fn field(&self) -> Field {
        match self {
            FieldElement::Rational(_) => Field::Rationals,
            FieldElement::Modular { modulus, .. } => Field::Prime(*modulus),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldElement::Rational(r) => r.is_zero(),
            FieldElement::Modular { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            FieldElement::Rational(r) => r.is_one(),
            FieldElement::Modular { value, .. } => *value == 1,
        }
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<FieldElement> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            FieldElement::Rational(r) => FieldElement::Rational(r.recip()),
            FieldElement::Modular { value, modulus } => FieldElement::Modular {
                value: mod_pow(*value, modulus - 2, *modulus),
                modulus: *modulus,
            },
        })
    }

    /// Division; panics on a zero divisor.
    pub fn div(&self, other: &FieldElement) -> FieldElement {
        self * &other.inv().expect("division by zero")
    }
}

fn mismatch(a: &FieldElement, b: &FieldElement) -> ! {
    panic!("field mismatch: {} vs {}", a.field(), b.field())
}

impl Add<&FieldElement> for &FieldElement {
    type Output = FieldElement;

    fn add(self, rhs: &FieldElement) -> FieldElement {
        match (self, rhs) {
            (FieldElement::Rational(a), FieldElement::Rational(b)) => FieldElement::Rational(a + b),
            (
                FieldElement::Modular { value: a, modulus: p },
                FieldElement::Modular { value: b, modulus: q },
            ) if p == q => FieldElement::Modular {
                value: ((*a as u128 + *b as u128) % *p as u128) as u64,
                modulus: *p,
            },
            _ => mismatch(self, rhs),
        }
    }
}

impl Sub<&FieldElement> for &FieldElement {
    type Output = FieldElement;

    fn sub(self, rhs: &FieldElement) -> FieldElement {
        match (self, rhs) {
            (FieldElement::Rational(a), FieldElement::Rational(b)) => FieldElement::Rational(a - b),
            (
                FieldElement::Modular { value: a, modulus: p },
                FieldElement::Modular { value: b, modulus: q },
            ) if p == q => FieldElement::Modular {
                value: ((*a as u128 + (*p - *b) as u128) % *p as u128) as u64,
                modulus: *p,
            },
            _ => mismatch(self, rhs),
        }
    }
}

impl Mul<&FieldElement> for &FieldElement {
    type Output = FieldElement;

    fn mul(self, rhs: &FieldElement) -> FieldElement {
        match (self, rhs) {
            (FieldElement::Rational(a), FieldElement::Rational(b)) => FieldElement::Rational(a * b),
            (
                FieldElement::Modular { value: a, modulus: p },
                FieldElement::Modular { value: b, modulus: q },
            ) if p == q => FieldElement::Modular {
                value: ((*a as u128 * *b as u128) % *p as u128) as u64,
                modulus: *p,
            },
            _ => mismatch(self, rhs),
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        match self {
            FieldElement::Rational(a) => FieldElement::Rational(-a),
            FieldElement::Modular { value, modulus } => FieldElement::Modular {
                value: if *value == 0 { 0 } else { modulus - value },
                modulus: *modulus,
            },
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                (&self).$method(rhs)
            }
        }
        impl $tr<FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

impl AddAssign<&FieldElement> for FieldElement {
    fn add_assign(&mut self, rhs: &FieldElement) {
        match (&mut *self, rhs) {
            (FieldElement::Rational(a), FieldElement::Rational(b)) => *a += b,
            _ => *self = &*self + rhs,
        }
    }
}

impl SubAssign<&FieldElement> for FieldElement {
    fn sub_assign(&mut self, rhs: &FieldElement) {
        match (&mut *self, rhs) {
            (FieldElement::Rational(a), FieldElement::Rational(b)) => *a -= b,
            _ => *self = &*self - rhs,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElement::Rational(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            FieldElement::Modular { value, .. } => write!(f, "{value}"),
        }
    }
}

impl FieldElement {
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            FieldElement::Rational(x) => Some(x),
            FieldElement::Modular { .. } => None,
        }
    }

    /// True when the literal needs a sign in front of it when printed inside a sum.
    pub fn is_negative_rational(&self) -> bool {
        matches!(self, FieldElement::Rational(r) if r.is_negative())
    }
}
