//! Truncated Laurent series over F_p, i.e. elements of `K = F_p((t))` known up
//! to an absolute precision.
//!
//! A series carries the window of exponents it knows: every coefficient of
//! `t^e` with `e < N` is exact, nothing is known at or above `N`. Constants
//! such as `1` or the Artin-Schreier constant `f` are *exact* (`N = +inf`).
//! A series whose stored coefficients all vanish is "zero up to `t^N`", which
//! is a distinct value from the exact zero.

use std::cmp::{max, min};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::{check_prime, inv_raw, reduce_i64, Fp};

/// A valuation, or the certified lower bound when all known digits vanish.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Valuation {
    Exact(i64),
    AtLeast(i64),
    Infinite,
}

impl Valuation {
    pub fn exact(self) -> Option<i64> {
        match self {
            Valuation::Exact(v) => Some(v),
            _ => None,
        }
    }

    /// Largest integer known to be `<=` the valuation, `None` for +inf.
    pub fn lower_bound(self) -> Option<i64> {
        match self {
            Valuation::Exact(v) | Valuation::AtLeast(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    /// Decide `v >= c`. `None` when the available precision cannot tell.
    pub fn certify_at_least(self, c: i64) -> Option<bool> {
        match self {
            Valuation::Exact(v) => Some(v >= c),
            Valuation::AtLeast(b) if b >= c => Some(true),
            Valuation::AtLeast(_) => None,
            Valuation::Infinite => Some(true),
        }
    }

    /// Minimum of two valuations of summands with distinct leading terms.
    pub fn min(self, other: Valuation) -> Valuation {
        use Valuation::*;
        match (self, other) {
            (Infinite, x) | (x, Infinite) => x,
            (Exact(a), Exact(b)) => Exact(a.min(b)),
            (Exact(a), AtLeast(b)) | (AtLeast(b), Exact(a)) => {
                if a < b {
                    Exact(a)
                } else {
                    AtLeast(b)
                }
            }
            (AtLeast(a), AtLeast(b)) => AtLeast(a.min(b)),
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Exact(v) => write!(f, "{v}"),
            Valuation::AtLeast(v) => write!(f, ">={v}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

pub(crate) fn min_prec(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

/// Element of `F_p((t))` with absolute precision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SeriesRecord", into = "SeriesRecord")]
pub struct LaurentSeries {
    p: u32,
    /// Exponent of `coeffs[0]`; equals the precision for zero-up-to-precision values.
    start: i64,
    /// Normalized: no leading or trailing zeros.
    coeffs: Vec<u32>,
    /// `None` means exact.
    prec: Option<i64>,
}

/// Serialized form `{p, v, coeffs, N}`; `N = null` marks an exact series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub p: u32,
    pub v: i64,
    pub coeffs: Vec<i64>,
    #[serde(rename = "N")]
    pub n: Option<i64>,
}

impl TryFrom<SeriesRecord> for LaurentSeries {
    type Error = Error;
    fn try_from(r: SeriesRecord) -> Result<Self> {
        match r.n {
            Some(n) => LaurentSeries::new(r.p, r.v, &r.coeffs, n),
            None => LaurentSeries::exact(r.p, r.v, &r.coeffs),
        }
    }
}

impl From<LaurentSeries> for SeriesRecord {
    fn from(s: LaurentSeries) -> Self {
        SeriesRecord {
            p: s.p,
            v: s.start,
            coeffs: s.coeffs.iter().map(|&c| c as i64).collect(),
            n: s.prec,
        }
    }
}

impl LaurentSeries {
    /// `sum_k coeffs[k] t^(v+k) + O(t^prec)`.
    pub fn new(p: u32, v: i64, coeffs: &[i64], prec: i64) -> Result<Self> {
        check_prime(p as u64)?;
        if v + coeffs.len() as i64 > prec {
            return Err(Error::PrecisionWindowInvalid(format!(
                "{} coefficients from t^{v} exceed precision t^{prec}",
                coeffs.len()
            )));
        }
        let raw = coeffs.iter().map(|&c| reduce_i64(c, p)).collect();
        Ok(Self::from_parts(p, v, raw, Some(prec)))
    }

    /// An exact finite Laurent polynomial.
    pub fn exact(p: u32, v: i64, coeffs: &[i64]) -> Result<Self> {
        check_prime(p as u64)?;
        let raw = coeffs.iter().map(|&c| reduce_i64(c, p)).collect();
        Ok(Self::from_parts(p, v, raw, None))
    }

    pub(crate) fn from_parts(p: u32, start: i64, coeffs: Vec<u32>, prec: Option<i64>) -> Self {
        let mut s = LaurentSeries { p, start, coeffs, prec };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        if let Some(n) = self.prec {
            let keep = (n - self.start).clamp(0, self.coeffs.len() as i64) as usize;
            self.coeffs.truncate(keep);
        }
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|&&c| c == 0).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.start += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.start = self.prec.unwrap_or(0);
        }
    }

    pub fn zero(p: u32) -> Self {
        LaurentSeries { p, start: 0, coeffs: Vec::new(), prec: None }
    }

    /// The element known to be `0 + O(t^prec)`.
    pub fn zero_to(p: u32, prec: i64) -> Self {
        LaurentSeries { p, start: prec, coeffs: Vec::new(), prec: Some(prec) }
    }

    pub fn one(p: u32) -> Self {
        Self::monomial(p, 1, 0)
    }

    /// Exact `c * t^e`.
    pub fn monomial(p: u32, c: i64, e: i64) -> Self {
        Self::from_parts(p, e, vec![reduce_i64(c, p)], None)
    }

    pub fn from_fp(c: Fp) -> Self {
        Self::from_parts(c.modulus(), 0, vec![c.value()], None)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn precision(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// Exact zero (not merely zero up to precision).
    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.is_empty() && self.prec.is_none()
    }

    /// No nonzero coefficient is known: exact zero or zero up to precision.
    pub fn is_zero_to_precision(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn valuation(&self) -> Valuation {
        match (self.coeffs.is_empty(), self.prec) {
            (false, _) => Valuation::Exact(self.start),
            (true, Some(n)) => Valuation::AtLeast(n),
            (true, None) => Valuation::Infinite,
        }
    }

    /// Lowest exponent that may carry a nonzero coefficient, `None` for exact zero.
    fn low(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            self.prec
        } else {
            Some(self.start)
        }
    }

    /// Coefficient of `t^e`; `None` when `e` lies at or beyond the precision.
    pub fn coeff(&self, e: i64) -> Option<Fp> {
        if self.prec.is_some_and(|n| e >= n) {
            return None;
        }
        let idx = e - self.start;
        let v = if idx >= 0 && (idx as usize) < self.coeffs.len() {
            self.coeffs[idx as usize]
        } else {
            0
        };
        Some(Fp::from_raw(v, self.p))
    }

    pub(crate) fn raw_coeff(&self, e: i64) -> u32 {
        let idx = e - self.start;
        if idx >= 0 && (idx as usize) < self.coeffs.len() {
            self.coeffs[idx as usize]
        } else {
            0
        }
    }

    /// `(exponent, coefficient)` for every stored nonzero coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(move |(k, &c)| (self.start + k as i64, c))
    }

    /// Forget everything at or beyond `t^n`.
    pub fn truncate(&self, n: i64) -> Self {
        Self::from_parts(self.p, self.start, self.coeffs.clone(), min_prec(self.prec, Some(n)))
    }

    /// Multiply by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentSeries {
            p: self.p,
            start: self.start + k,
            coeffs: self.coeffs.clone(),
            prec: self.prec.map(|n| n + k),
        }
    }

    pub fn scale(&self, c: u32) -> Self {
        let c = c % self.p;
        if c == 0 {
            return Self::zero(self.p);
        }
        let coeffs = self.coeffs.iter().map(|&a| a * c % self.p).collect();
        LaurentSeries { p: self.p, start: self.start, coeffs, prec: self.prec }
    }

    fn combine(&self, rhs: &Self, sign: u32) -> Self {
        assert_eq!(self.p, rhs.p, "series modulus mismatch");
        let p = self.p;
        let prec = min_prec(self.prec, rhs.prec);
        let (a, b) = (self.coeffs.is_empty(), rhs.coeffs.is_empty());
        if a && b {
            return Self::from_parts(p, 0, Vec::new(), prec);
        }
        let start = match (a, b) {
            (false, false) => min(self.start, rhs.start),
            (false, true) => self.start,
            _ => rhs.start,
        };
        let mut end = max(self.start + self.coeffs.len() as i64, rhs.start + rhs.coeffs.len() as i64);
        if let Some(n) = prec {
            end = min(end, n);
        }
        let len = (end - start).max(0) as usize;
        let mut out = vec![0u32; len];
        for (k, slot) in out.iter_mut().enumerate() {
            let e = start + k as i64;
            let x = self.raw_coeff(e);
            let y = rhs.raw_coeff(e);
            *slot = (x + sign * y) % p;
        }
        Self::from_parts(p, start, out, prec)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        if self.p != rhs.p {
            return Err(Error::ModulusMismatch(self.p, rhs.p));
        }
        Ok(self.combine(rhs, 1))
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self> {
        if self.p != rhs.p {
            return Err(Error::ModulusMismatch(self.p, rhs.p));
        }
        Ok(self.combine(rhs, self.p - 1))
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        if self.p != rhs.p {
            return Err(Error::ModulusMismatch(self.p, rhs.p));
        }
        let p = self.p;
        let (Some(va), Some(vb)) = (self.low(), rhs.low()) else {
            return Ok(Self::zero(p));
        };
        let prec = min_prec(self.prec.map(|n| n + vb), rhs.prec.map(|n| n + va));
        if self.coeffs.is_empty() || rhs.coeffs.is_empty() {
            return Ok(Self::from_parts(p, 0, Vec::new(), prec));
        }
        let start = self.start + rhs.start;
        let mut len = self.coeffs.len() + rhs.coeffs.len() - 1;
        if let Some(n) = prec {
            len = len.min((n - start).max(0) as usize);
        }
        let mut acc = vec![0u64; len];
        for (i, &x) in self.coeffs.iter().enumerate() {
            if x == 0 || i >= len {
                continue;
            }
            let x = x as u64;
            for (j, &y) in rhs.coeffs.iter().take(len - i).enumerate() {
                acc[i + j] += x * y as u64;
            }
        }
        let out = acc.into_iter().map(|c| (c % p as u64) as u32).collect();
        Ok(Self::from_parts(p, start, out, prec))
    }

    /// Multiplicative inverse. Exact input must be a monomial; use
    /// [`LaurentSeries::truncate`] first to invert an exact polynomial to a
    /// chosen precision.
    pub fn inv(&self) -> Result<Self> {
        if self.coeffs.is_empty() {
            return Err(Error::NotInvertible(format!("{self} has no certified leading term")));
        }
        let p = self.p;
        let v = self.start;
        let u0_inv = inv_raw(self.coeffs[0], p);
        let Some(n) = self.prec else {
            if self.coeffs.len() == 1 {
                return Ok(Self::from_parts(p, -v, vec![u0_inv], None));
            }
            return Err(Error::PrecisionExhausted(format!(
                "inverse of the exact non-monomial {self} is an infinite series"
            )));
        };
        // relative precision of the unit part
        let rel = (n - v) as usize;
        let mut b = vec![0u32; rel];
        for k in 0..rel {
            let mut s: u64 = if k == 0 { 1 } else { 0 };
            for i in 1..=k.min(self.coeffs.len().saturating_sub(1)) {
                s += (p - self.coeffs[i]) as u64 * b[k - i] as u64;
            }
            b[k] = ((s % p as u64) as u32) * u0_inv % p;
        }
        Ok(Self::from_parts(p, -v, b, Some(n - 2 * v)))
    }

    /// True iff both series agree on every exponent both of them know.
    pub fn agrees_with(&self, other: &Self) -> bool {
        if self.p != other.p {
            return false;
        }
        match min_prec(self.prec, other.prec) {
            None => self == other,
            Some(n) => {
                let lo = [self.low(), other.low()].into_iter().flatten().min().unwrap_or(n);
                (lo..n).all(|e| self.raw_coeff(e) == other.raw_coeff(e))
            }
        }
    }

    /// Random series: valuation uniform in `[v_min, v_max]`, nonzero leading
    /// coefficient, uniform digits up to `t^prec`.
    pub fn random<R: Rng + ?Sized>(p: u32, v_min: i64, v_max: i64, prec: i64, rng: &mut R) -> Result<Self> {
        check_prime(p as u64)?;
        if v_min > v_max || v_max >= prec {
            return Err(Error::PrecisionWindowInvalid(format!(
                "need v_min <= v_max < N, got [{v_min}, {v_max}] with N={prec}"
            )));
        }
        let v = rng.gen_range(v_min..=v_max);
        let len = (prec - v) as usize;
        let mut coeffs = Vec::with_capacity(len);
        coeffs.push(rng.gen_range(1..p));
        coeffs.extend((1..len).map(|_| rng.gen_range(0..p)));
        Ok(Self::from_parts(p, v, coeffs, Some(prec)))
    }

    pub fn random_seeded(p: u32, v_min: i64, v_max: i64, prec: i64, seed: u64) -> Result<Self> {
        Self::random(p, v_min, v_max, prec, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (c, e) {
                (c, 0) => write!(f, "{c}")?,
                (1, 1) => write!(f, "t")?,
                (1, e) => write!(f, "t^{e}")?,
                (c, 1) => write!(f, "{c}*t")?,
                (c, e) => write!(f, "{c}*t^{e}")?,
            }
        }
        match (first, self.prec) {
            (true, None) => write!(f, "0"),
            (true, Some(n)) => write!(f, "O(t^{n})"),
            (false, Some(n)) => write!(f, " + O(t^{n})"),
            (false, None) => Ok(()),
        }
    }
}

impl Add for &LaurentSeries {
    type Output = LaurentSeries;
    fn add(self, rhs: &LaurentSeries) -> LaurentSeries {
        self.combine(rhs, 1)
    }
}

impl Sub for &LaurentSeries {
    type Output = LaurentSeries;
    fn sub(self, rhs: &LaurentSeries) -> LaurentSeries {
        assert_eq!(self.p, rhs.p, "series modulus mismatch");
        self.combine(rhs, self.p - 1)
    }
}

impl Mul for &LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, rhs: &LaurentSeries) -> LaurentSeries {
        self.checked_mul(rhs).expect("series modulus mismatch")
    }
}

impl Neg for &LaurentSeries {
    type Output = LaurentSeries;
    fn neg(self) -> LaurentSeries {
        self.scale(self.p - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ls(p: u32, v: i64, c: &[i64], n: i64) -> LaurentSeries {
        LaurentSeries::new(p, v, c, n).unwrap()
    }

    #[test]
    fn make_examples() {
        let one = ls(2, 0, &[1], 10);
        assert_eq!(one.valuation(), Valuation::Exact(0));
        let tm2 = ls(3, -2, &[1], 8);
        assert_eq!(tm2.valuation(), Valuation::Exact(-2));
        let z = ls(2, 0, &[0, 0], 2);
        assert!(z.is_zero_to_precision());
        assert!(!z.is_exact_zero());
        assert_eq!(z.valuation(), Valuation::AtLeast(2));
        assert!(matches!(LaurentSeries::new(2, 5, &[1, 1], 6), Err(Error::PrecisionWindowInvalid(_))));
        // leading zeros are absorbed into v
        assert_eq!(ls(5, 0, &[0, 0, 3], 9).valuation(), Valuation::Exact(2));
    }

    #[test]
    fn arith_examples() {
        let t = LaurentSeries::monomial(7, 1, 1);
        assert_eq!(&t * &t, LaurentSeries::monomial(7, 1, 2));
        let a = ls(2, 0, &[1, 1], 10);
        let s = &a + &a;
        assert!(s.is_zero_to_precision());
        assert_eq!(s.precision(), Some(10));
        let x = ls(3, -1, &[1], 10);
        let y = ls(3, 3, &[1], 10);
        let xy = &x * &y;
        assert_eq!(xy.valuation(), Valuation::Exact(2));
        // min(10 + 3, 10 - 1)
        assert_eq!(xy.precision(), Some(9));
    }

    #[test]
    fn inverse_examples() {
        let a = ls(3, 0, &[1, 1], 3);
        let b = a.inv().unwrap();
        assert_eq!(b, ls(3, 0, &[1, 2, 1], 3));
        let t = LaurentSeries::monomial(5, 1, 1);
        assert_eq!(t.inv().unwrap(), LaurentSeries::monomial(5, 1, -1));
        assert!(matches!(LaurentSeries::zero_to(5, 4).inv(), Err(Error::NotInvertible(_))));
        assert!(matches!(LaurentSeries::zero(5).inv(), Err(Error::NotInvertible(_))));
        let poly = LaurentSeries::exact(5, 0, &[1, 1]).unwrap();
        assert!(poly.inv().is_err());
        assert!(poly.truncate(6).inv().unwrap().agrees_with(&ls(5, 0, &[1, 4, 1, 4, 1, 4], 6)));
    }

    #[test]
    fn valuation_examples() {
        let a = ls(2, 2, &[1, 0, 0, 1], 20);
        assert_eq!(a.valuation(), Valuation::Exact(2));
        assert_eq!(LaurentSeries::zero_to(3, 12).valuation(), Valuation::AtLeast(12));
        assert_eq!(LaurentSeries::zero(3).valuation(), Valuation::Infinite);
        assert_eq!(Valuation::AtLeast(3).certify_at_least(4), None);
        assert_eq!(Valuation::AtLeast(5).certify_at_least(4), Some(true));
        assert_eq!(Valuation::Exact(2).certify_at_least(4), Some(false));
    }

    #[test]
    fn random_contract() {
        let a = LaurentSeries::random_seeded(5, -3, 4, 20, 42).unwrap();
        let b = LaurentSeries::random_seeded(5, -3, 4, 20, 42).unwrap();
        assert_eq!(a, b);
        for seed in 0..50 {
            let x = LaurentSeries::random_seeded(3, -3, 4, 20, seed).unwrap();
            let v = x.valuation().exact().unwrap();
            assert!((-3..=4).contains(&v));
            let u = LaurentSeries::random_seeded(3, 0, 0, 20, seed).unwrap();
            assert_eq!(u.valuation(), Valuation::Exact(0));
        }
        assert!(LaurentSeries::random_seeded(3, 2, 1, 20, 0).is_err());
        assert!(LaurentSeries::random_seeded(3, 0, 20, 20, 0).is_err());
    }

    #[test]
    fn serde_record() {
        let a = ls(3, -2, &[1, 0, 2], 8);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"p":3,"v":-2,"coeffs":[1,0,2],"N":8}"#);
        let back: LaurentSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        let bad = r#"{"p":3,"v":7,"coeffs":[1,1],"N":8}"#;
        assert!(serde_json::from_str::<LaurentSeries>(bad).is_err());
    }

    fn arb_series(p: u32) -> impl Strategy<Value = LaurentSeries> {
        (-4i64..6, any::<u64>()).prop_map(move |(v, seed)| {
            LaurentSeries::random_seeded(p, v, v, 24, seed).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(p in prop::sample::select(vec![2u32, 3, 5, 7]), seeds in any::<[u64; 3]>()) {
            let mk = |s: u64| LaurentSeries::random_seeded(p, -3, 5, 24, s).unwrap();
            let (a, b, c) = (mk(seeds[0]), mk(seeds[1]), mk(seeds[2]));
            prop_assert!((&(&a * &b) * &c).agrees_with(&(&a * &(&b * &c))));
            prop_assert!((&a * &(&b + &c)).agrees_with(&(&(&a * &b) + &(&a * &c))));
            prop_assert!((&a * &b).agrees_with(&(&b * &a)));
            prop_assert!((&(&a + &b) - &b).agrees_with(&a));
        }

        #[test]
        fn valuation_is_multiplicative_and_ultrametric(a in arb_series(5), b in arb_series(5)) {
            let (va, vb) = (a.valuation().exact().unwrap(), b.valuation().exact().unwrap());
            prop_assert_eq!((&a * &b).valuation(), Valuation::Exact(va + vb));
            let s = &a + &b;
            if va != vb {
                prop_assert_eq!(s.valuation(), Valuation::Exact(va.min(vb)));
            } else {
                prop_assert!(s.valuation().certify_at_least(va) != Some(false));
            }
        }

        #[test]
        fn inverse_round_trip(a in arb_series(7)) {
            let b = a.inv().unwrap();
            prop_assert_eq!(b.valuation().exact(), a.valuation().exact().map(|v| -v));
            prop_assert!((&a * &b).agrees_with(&LaurentSeries::one(7)));
        }
    }
}
