//! The prime field F_p for the small primes this crate supports.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUPPORTED_PRIMES: [u32; 6] = [2, 3, 5, 7, 11, 13];

pub fn check_prime(p: u64) -> Result<u32> {
    match SUPPORTED_PRIMES.iter().find(|&&q| q as u64 == p) {
        Some(&q) => Ok(q),
        None => Err(Error::UnsupportedPrime(p)),
    }
}

/// Reduce a signed integer into `[0, p)`.
#[inline]
pub fn reduce_i64(x: i64, p: u32) -> u32 {
    x.rem_euclid(p as i64) as u32
}

/// Inverse of a nonzero residue, by Fermat.
#[inline]
pub(crate) fn inv_raw(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    pow_raw(a, (p - 2) as u64, p)
}

#[inline]
pub(crate) fn pow_raw(mut a: u32, mut e: u64, p: u32) -> u32 {
    let mut acc = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * a % p;
        }
        a = a * a % p;
        e >>= 1;
    }
    acc
}

/// An element of F_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fp {
    value: u32,
    p: u32,
}

impl Fp {
    pub fn new(value: i64, p: u32) -> Result<Self> {
        check_prime(p as u64)?;
        Ok(Fp { value: reduce_i64(value, p), p })
    }

    /// Caller guarantees that `p` is supported and `value < p`.
    pub(crate) fn from_raw(value: u32, p: u32) -> Self {
        debug_assert!(value < p);
        Fp { value, p }
    }

    pub fn zero(p: u32) -> Self {
        Fp { value: 0, p }
    }

    pub fn one(p: u32) -> Self {
        Fp { value: 1 % p, p }
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> u32 {
        self.p
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same(self, other: Fp) -> Result<()> {
        if self.p == other.p {
            Ok(())
        } else {
            Err(Error::ModulusMismatch(self.p, other.p))
        }
    }

    pub fn checked_add(self, rhs: Fp) -> Result<Fp> {
        self.same(rhs)?;
        Ok(Fp::from_raw((self.value + rhs.value) % self.p, self.p))
    }

    pub fn checked_sub(self, rhs: Fp) -> Result<Fp> {
        self.same(rhs)?;
        Ok(Fp::from_raw((self.value + self.p - rhs.value) % self.p, self.p))
    }

    pub fn checked_mul(self, rhs: Fp) -> Result<Fp> {
        self.same(rhs)?;
        Ok(Fp::from_raw(self.value * rhs.value % self.p, self.p))
    }

    pub fn checked_div(self, rhs: Fp) -> Result<Fp> {
        self.same(rhs)?;
        self.checked_mul(rhs.inv()?)
    }

    pub fn inv(self) -> Result<Fp> {
        if self.value == 0 {
            return Err(Error::DivisionByZero(self.p));
        }
        Ok(Fp::from_raw(inv_raw(self.value, self.p), self.p))
    }

    pub fn pow(self, e: u64) -> Fp {
        Fp::from_raw(pow_raw(self.value, e, self.p), self.p)
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        self.checked_add(rhs).expect("F_p modulus mismatch")
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        self.checked_sub(rhs).expect("F_p modulus mismatch")
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        self.checked_mul(rhs).expect("F_p modulus mismatch")
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp::from_raw((self.p - self.value) % self.p, self.p)
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
