//! Exact scalar arithmetic over the rationals and over prime fields F_p,
//! together with the fixed total order used to sort eigenvalues.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// The coefficient field: the rationals, or F_p for a prime p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    Rationals,
    PrimeField(u64),
}

impl FieldSpec {
    /// Builds a prime-field spec, rejecting composite moduli.
    pub fn prime(p: u64) -> Result<FieldSpec> {
        if is_prime(p) {
            Ok(FieldSpec::PrimeField(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn zero(self) -> FieldElement {
        match self {
            FieldSpec::Rationals => FieldElement::Rational(BigRational::zero()),
            FieldSpec::PrimeField(p) => FieldElement::Residue { value: 0, modulus: p },
        }
    }

    pub fn one(self) -> FieldElement {
        match self {
            FieldSpec::Rationals => FieldElement::Rational(BigRational::one()),
            FieldSpec::PrimeField(p) => FieldElement::Residue { value: 1 % p, modulus: p },
        }
    }

    pub fn from_i64(self, v: i64) -> FieldElement {
        match self {
            FieldSpec::Rationals => FieldElement::Rational(BigRational::from(BigInt::from(v))),
            FieldSpec::PrimeField(p) => {
                let r = v.rem_euclid(p as i64) as u64;
                FieldElement::Residue { value: r, modulus: p }
            }
        }
    }

    /// Parses an element in the textual form used by the JSON formats:
    /// "p" or "p/q" over the rationals, a residue "r" over F_p.
    pub fn parse_element(self, s: &str) -> Result<FieldElement> {
        let s = s.trim();
        match self {
            FieldSpec::Rationals => {
                let (num, den) = match s.split_once('/') {
                    Some((n, d)) => (n, d),
                    None => (s, "1"),
                };
                let n = BigInt::from_str(num.trim())
                    .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
                let d = BigInt::from_str(den.trim())
                    .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
                if d.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in {s:?}")));
                }
                Ok(FieldElement::Rational(BigRational::new(n, d)))
            }
            FieldSpec::PrimeField(p) => {
                let neg = s.starts_with('-');
                let body = if neg { &s[1..] } else { s };
                let v = u64::from_str(body.trim())
                    .map_err(|_| Error::Parse(format!("bad residue {s:?}")))?;
                if !neg && v >= p {
                    return Err(Error::Parse(format!("residue {v} out of range for F{p}")));
                }
                let r = v % p;
                Ok(FieldElement::Residue { value: if neg { (p - r) % p } else { r }, modulus: p })
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Rationals => write!(f, "Q"),
            FieldSpec::PrimeField(p) => write!(f, "F{p}"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<FieldSpec> {
        let s = s.trim();
        if s == "Q" {
            Ok(FieldSpec::Rationals)
        } else if let Some(p) = s.strip_prefix('F') {
            let p = u64::from_str(p).map_err(|_| Error::Parse(format!("bad field {s:?}")))?;
            FieldSpec::prime(p)
        } else {
            Err(Error::Parse(format!("bad field {s:?}")))
        }
    }
}

/// An exact scalar. Rationals are kept fully reduced with positive
/// denominator (num-rational maintains that); residues lie in 0..p-1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldElement {
    Rational(BigRational),
    Residue { value: u64, modulus: u64 },
}

/// Arithmetic operator selector for the checked entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl FieldElement {
    pub fn spec(&self) -> FieldSpec {
        match self {
            FieldElement::Rational(_) => FieldSpec::Rationals,
            FieldElement::Residue { modulus, .. } => FieldSpec::PrimeField(*modulus),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldElement::Rational(r) => r.is_zero(),
            FieldElement::Residue { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            FieldElement::Rational(r) => r.is_one(),
            FieldElement::Residue { value, modulus } => *value == 1 % *modulus,
        }
    }

    fn check_same(&self, other: &FieldElement) -> Result<()> {
        if self.spec() == other.spec() {
            Ok(())
        } else {
            Err(Error::FieldMismatch(self.spec().to_string(), other.spec().to_string()))
        }
    }

    /// Checked field arithmetic, the error-reporting entry point.
    pub fn arith(&self, other: &FieldElement, op: ArithOp) -> Result<FieldElement> {
        self.check_same(other)?;
        match op {
            ArithOp::Add => Ok(self.add(other)),
            ArithOp::Sub => Ok(self.sub(other)),
            ArithOp::Mul => Ok(self.mul(other)),
            ArithOp::Div => self.div(other),
        }
    }

    pub fn add(&self, other: &FieldElement) -> FieldElement {
        match (self, other) {
            (FieldElement::Rational(a), FieldElement::Rational(b)) => {
                FieldElement::Rational(a + b)
            }
            (
                FieldElement::Residue { value: a, modulus: p },
                FieldElement::Residue { value: b, modulus: q },
            ) if p == q => FieldElement::Residue {
                value: ((*a as u128 + *b as u128) % *p as u128) as u64,
                modulus: *p,
            },
            _ => panic!("field mismatch: {} vs {}", self.spec(), other.spec()),
        }
    }

    pub fn sub(&self, other: &FieldElement) -> FieldElement {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FieldElement {
        match self {
            FieldElement::Rational(a) => FieldElement::Rational(-a),
            FieldElement::Residue { value, modulus } => FieldElement::Residue {
                value: if *value == 0 { 0 } else { modulus - value },
                modulus: *modulus,
            },
        }
    }

    pub fn mul(&self, other: &FieldElement) -> FieldElement {
        match (self, other) {
            (FieldElement::Rational(a), FieldElement::Rational(b)) => {
                FieldElement::Rational(a * b)
            }
            (
                FieldElement::Residue { value: a, modulus: p },
                FieldElement::Residue { value: b, modulus: q },
            ) if p == q => FieldElement::Residue {
                value: ((*a as u128 * *b as u128) % *p as u128) as u64,
                modulus: *p,
            },
            _ => panic!("field mismatch: {} vs {}", self.spec(), other.spec()),
        }
    }

    pub fn inv(&self) -> Result<FieldElement> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        match self {
            FieldElement::Rational(a) => Ok(FieldElement::Rational(a.recip())),
            FieldElement::Residue { value, modulus } => Ok(FieldElement::Residue {
                value: mod_pow(*value, *modulus - 2, *modulus),
                modulus: *modulus,
            }),
        }
    }

    pub fn div(&self, other: &FieldElement) -> Result<FieldElement> {
        Ok(self.mul(&other.inv()?))
    }

    /// The fixed total order: numeric over the rationals, the order of
    /// canonical representatives 0 < 1 < ... < p-1 over F_p.
    pub fn cmp_order(&self, other: &FieldElement) -> Result<Ordering> {
        self.check_same(other)?;
        Ok(self.order(other))
    }

    /// Internal comparison; callers guarantee matching fields.
    pub fn order(&self, other: &FieldElement) -> Ordering {
        match (self, other) {
            (FieldElement::Rational(a), FieldElement::Rational(b)) => a.cmp(b),
            (FieldElement::Residue { value: a, .. }, FieldElement::Residue { value: b, .. }) => {
                a.cmp(b)
            }
            _ => panic!("field mismatch: {} vs {}", self.spec(), other.spec()),
        }
    }

    /// Rational numerator/denominator access, used by the rational root search.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            FieldElement::Rational(r) => Some(r),
            FieldElement::Residue { .. } => None,
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
            FieldElement::Residue { value, .. } => write!(f, "{value}"),
        }
    }
}

fn mod_pow(base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc: u128 = 1;
    let mut b = base as u128 % p as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % p as u128;
        }
        b = b * b % p as u128;
        exp >>= 1;
    }
    acc as u64
}

/// Deterministic Miller-Rabin for u64.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = (x as u128 * x as u128 % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
