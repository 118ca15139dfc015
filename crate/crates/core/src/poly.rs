//! Sparse multivariate polynomials with exact integer coefficients, and their
//! reductions mod `p`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::extension::ExtElement;

/// At most this many variables; exponents are packed one byte per variable.
pub const MAX_VARS: usize = 16;

/// Exponent vector packed into a `u128`, byte `k` holding the exponent of variable `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(u128);

impl Monomial {
    pub fn one() -> Self {
        Monomial(0)
    }

    pub fn from_exponents(exps: &[u32]) -> Result<Self> {
        if exps.len() > MAX_VARS {
            return Err(Error::Domain(format!("{} variables exceed {MAX_VARS}", exps.len())));
        }
        let mut m = 0u128;
        for (k, &e) in exps.iter().enumerate() {
            if e > u8::MAX as u32 {
                return Err(Error::Domain(format!("exponent {e} too large")));
            }
            m |= (e as u128) << (8 * k);
        }
        Ok(Monomial(m))
    }

    pub fn var(k: usize) -> Self {
        Monomial(1u128 << (8 * k))
    }

    #[inline]
    pub fn exponent(self, k: usize) -> u32 {
        ((self.0 >> (8 * k)) & 0xff) as u32
    }

    pub fn exponents(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|k| self.exponent(k)).collect()
    }

    pub fn degree(self) -> u32 {
        self.0.to_le_bytes().iter().map(|&b| b as u32).sum()
    }

    /// Product; callers guarantee no per-variable exponent reaches 256.
    #[inline]
    fn mul(self, other: Monomial) -> Monomial {
        Monomial(self.0 + other.0)
    }

    fn max_exponent(self) -> u32 {
        self.0.to_le_bytes().iter().map(|&b| b as u32).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, BigInt>,
}

impl IntPolynomial {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "too many variables");
        IntPolynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(nvars);
        let c = c.into();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn var(k: usize, nvars: usize) -> Self {
        assert!(k < nvars);
        let mut p = Self::zero(nvars);
        p.terms.insert(Monomial::var(k), BigInt::one());
        p
    }

    /// Build from `(exponents, coefficient)` pairs; zero coefficients are dropped
    /// and repeated monomials are summed.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, BigInt)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(Error::Domain(format!("exponent vector of length {} for {nvars} variables", exps.len())));
            }
            p.add_term(Monomial::from_exponents(&exps)?, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &[u32]) -> BigInt {
        Monomial::from_exponents(exps)
            .ok()
            .and_then(|m| self.terms.get(&m).cloned())
            .unwrap_or_else(BigInt::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    fn max_exponent(&self) -> u32 {
        self.terms.keys().map(|m| m.max_exponent()).max().unwrap_or(0)
    }

    /// Variables that occur with a nonzero exponent.
    pub fn support(&self) -> Vec<usize> {
        (0..self.nvars).filter(|&k| self.terms.keys().any(|m| m.exponent(k) > 0)).collect()
    }

    fn check_arity(&self, other: &Self) {
        assert_eq!(self.nvars, other.nvars, "polynomial arity mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_arity(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        IntPolynomial { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect() }
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero(self.nvars);
        }
        IntPolynomial { nvars: self.nvars, terms: self.terms.iter().map(|(m, c)| (*m, c * k)).collect() }
    }

    /// Divide every coefficient by `k`, failing unless each division is exact.
    pub fn div_exact(&self, k: &BigInt) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let (q, r) = c.div_rem(k);
            if !r.is_zero() {
                return Err(Error::NotDivisible(format!(
                    "coefficient {c} of {:?} by {k}",
                    m.exponents(self.nvars)
                )));
            }
            terms.insert(*m, q);
        }
        Ok(IntPolynomial { nvars: self.nvars, terms })
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_arity(other);
        assert!(
            self.max_exponent() + other.max_exponent() <= u8::MAX as u32,
            "exponent overflow in packed monomial"
        );
        let mut acc: HashMap<Monomial, BigInt> = HashMap::with_capacity(self.len() * other.len() / 2 + 1);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(*mb);
                let prod = ca * cb;
                match acc.get_mut(&m) {
                    Some(c) => *c += prod,
                    None => {
                        acc.insert(m, prod);
                    }
                }
            }
        }
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        IntPolynomial { nvars: self.nvars, terms }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.nvars, 1);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Substitute variable `k` by variable `map[k]` of a ring with `nvars` variables.
    pub fn rename(&self, map: &[usize], nvars: usize) -> Self {
        assert_eq!(map.len(), self.nvars);
        let mut out = Self::zero(nvars);
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; nvars];
            for (k, &target) in map.iter().enumerate() {
                exps[target] += m.exponent(k);
            }
            out.add_term(Monomial::from_exponents(&exps).expect("valid rename"), c.clone());
        }
        out
    }

    /// Evaluate at integer points.
    pub fn eval_int(&self, point: &[BigInt]) -> BigInt {
        assert_eq!(point.len(), self.nvars);
        self.terms
            .iter()
            .map(|(m, c)| {
                (0..self.nvars).fold(c.clone(), |acc, k| acc * num_traits::pow(point[k].clone(), m.exponent(k) as usize))
            })
            .sum()
    }

    /// Coefficientwise reduction mod `p`, zero terms dropped.
    pub fn reduce_mod_p(&self, p: u32) -> FpPolynomial {
        let modulus = BigInt::from(p);
        let terms = self
            .terms
            .iter()
            .filter_map(|(m, c)| {
                let r = c.mod_floor(&modulus).to_u32().expect("small residue");
                (r != 0).then_some((*m, r))
            })
            .collect();
        FpPolynomial { p, nvars: self.nvars, terms }
    }

    /// Terms as `(exponent vector, decimal coefficient)`, in monomial order.
    pub fn to_decimal_terms(&self) -> Vec<(Vec<u32>, String)> {
        self.terms.iter().map(|(m, c)| (m.exponents(self.nvars), c.to_str_radix(10))).collect()
    }

    pub fn from_decimal_terms(nvars: usize, terms: &[(Vec<u32>, String)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|(e, c)| {
                BigInt::parse_bytes(c.as_bytes(), 10)
                    .map(|c| (e.clone(), c))
                    .ok_or_else(|| Error::Domain(format!("bad coefficient {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(nvars, parsed)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if idx > 0 || c.is_negative() {
                write!(f, "{}{sign} ", if idx > 0 { " " } else { "" })?;
            }
            let abs = c.abs();
            let mut factors: Vec<String> = (0..self.nvars)
                .filter(|&k| m.exponent(k) > 0)
                .map(|k| match m.exponent(k) {
                    1 => format!("v{k}"),
                    e => format!("v{k}^{e}"),
                })
                .collect();
            if !abs.is_one() || factors.is_empty() {
                factors.insert(0, abs.to_string());
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// A polynomial with coefficients in F_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpPolynomial {
    p: u32,
    nvars: usize,
    terms: Vec<(Monomial, u32)>,
}

impl FpPolynomial {
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Vec<u32>, u32)> + '_ {
        self.terms.iter().map(|(m, c)| (m.exponents(self.nvars), *c))
    }

    pub fn coefficient(&self, exps: &[u32]) -> u32 {
        let Ok(m) = Monomial::from_exponents(exps) else { return 0 };
        self.terms.iter().find(|(t, _)| *t == m).map_or(0, |(_, c)| *c)
    }

    /// Evaluate at scalars of F_p.
    pub fn eval_fp(&self, point: &[u32]) -> u32 {
        let p = self.p as u64;
        let mut acc = 0u64;
        for (m, c) in &self.terms {
            let mut t = *c as u64;
            for (k, &x) in point.iter().enumerate() {
                let e = m.exponent(k);
                if e > 0 {
                    t = t * crate::fp::pow_raw(x, e as u64, self.p) as u64 % p;
                }
            }
            acc = (acc + t) % p;
        }
        acc as u32
    }

    /// Evaluate at elements of `L`; unused variables may be anything.
    pub fn eval_ext(&self, point: &[ExtElement]) -> ExtElement {
        assert_eq!(point.len(), self.nvars);
        let ext = point.first().expect("at least one variable").ext();
        // powers[k][e] = point[k]^e, built up to the largest exponent used
        let mut powers: Vec<Vec<ExtElement>> = vec![Vec::new(); self.nvars];
        for (k, x) in point.iter().enumerate() {
            if x.is_exact_zero() {
                continue;
            }
            let max = self.terms.iter().map(|(m, _)| m.exponent(k)).max().unwrap_or(0) as usize;
            if max == 0 {
                continue;
            }
            let mut row = Vec::with_capacity(max + 1);
            row.push(ExtElement::one(ext));
            row.push(x.clone());
            for e in 2..=max {
                let next = row[e - 1].mul(x);
                row.push(next);
            }
            powers[k] = row;
        }
        let zero: Vec<bool> = point.iter().map(ExtElement::is_exact_zero).collect();
        let mut acc = ExtElement::zero(ext);
        for (m, c) in &self.terms {
            if (0..self.nvars).any(|k| zero[k] && m.exponent(k) > 0) {
                continue;
            }
            let mut term: Option<ExtElement> = None;
            for (k, row) in powers.iter().enumerate() {
                let e = m.exponent(k) as usize;
                if e == 0 {
                    continue;
                }
                term = Some(match term {
                    None => row[e].clone(),
                    Some(t) => t.mul(&row[e]),
                });
            }
            let term = term.unwrap_or_else(|| ExtElement::one(ext));
            acc = acc.add(&term.scale_fp(*c));
        }
        acc
    }
}
