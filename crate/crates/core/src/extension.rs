//! The Artin-Schreier extension `L = K(λ)`, `λ^p = λ + f`, of `K = F_p((t))`,
//! totally ramified of degree `p` with ramification break `s = -v_K(f)`.
//!
//! Elements of `L` are written on the basis `1, λ, ..., λ^(p-1)` with
//! coefficients in `K`. Since `v_L(λ) = -s` is prime to `p`, the terms
//! `a_i λ^i` have pairwise distinct valuations `p v_K(a_i) - i s`, which makes
//! both `v_L` and membership in `O_L` readable coefficientwise. The generator
//! of `Gal(L/K)` is fixed as `σ(λ) = λ + 1`.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinat::binomial;
use crate::error::{Error, Result};
use crate::fp::{check_prime, inv_raw, pow_raw};
use crate::linalg::rank_mod_p;
use crate::series::{LaurentSeries, Valuation};

/// `ceil(a / b)` for `b > 0`.
pub fn ceil_div(a: i64, b: i64) -> i64 {
    Integer::div_ceil(&a, &b)
}

/// Working precision used when nothing else is requested: `4 s p + 16`.
pub fn default_precision(p: u32, s: i64) -> i64 {
    4 * s * p as i64 + 16
}

#[derive(Debug)]
pub struct ASExtension {
    p: u32,
    s: i64,
    f: LaurentSeries,
    /// `reduction[k]` expresses `λ^(p+k)` on the basis, `0 <= k <= p-2`.
    reduction: Vec<Vec<LaurentSeries>>,
    /// `galois[j][k][i]`: coefficient of `λ^k` in `(λ + j)^i`.
    galois: Vec<Vec<Vec<u32>>>,
}

impl ASExtension {
    /// Build `K(λ)` with `λ^p - λ = f`; `f` defaults to `t^(-s)`.
    pub fn new(p: u32, s: i64, f_override: Option<LaurentSeries>) -> Result<Arc<Self>> {
        let p = check_prime(p as u64)?;
        if s <= 0 || s % p as i64 == 0 {
            return Err(Error::InvalidBreak { p, s });
        }
        let f = match f_override {
            None => LaurentSeries::monomial(p, 1, -s),
            Some(f) => {
                if f.p() != p {
                    return Err(Error::InvalidF(format!("f lives over F_{}, expected F_{p}", f.p())));
                }
                if f.valuation() != Valuation::Exact(-s) {
                    return Err(Error::InvalidF(format!(
                        "v_K(f) = {} but the break s={s} needs v_K(f) = {}",
                        f.valuation(),
                        -s
                    )));
                }
                f
            }
        };
        let pu = p as usize;
        let reduction = (0..pu - 1)
            .map(|k| {
                let mut row = vec![LaurentSeries::zero(p); pu];
                row[k + 1] = LaurentSeries::one(p);
                row[k] = f.clone();
                row
            })
            .collect();
        let galois = (0..p)
            .map(|j| {
                (0..pu)
                    .map(|k| {
                        (0..pu)
                            .map(|i| {
                                if k > i {
                                    return 0;
                                }
                                let b = binomial(i as u64, k as u64) % p;
                                let b: u32 = b.try_into().expect("small residue");
                                b * pow_raw(j, (i - k) as u64, p) % p
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Arc::new(ASExtension { p, s, f, reduction, galois }))
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Same `(p, s, f)`, hence the same field with the same basis.
    pub fn same_field(&self, other: &ASExtension) -> bool {
        std::ptr::eq(self, other) || (self.p == other.p && self.s == other.s && self.f == other.f)
    }

    pub fn s(&self) -> i64 {
        self.s
    }

    pub fn f(&self) -> &LaurentSeries {
        &self.f
    }

    pub fn galois_matrix(&self, j: u32) -> &[Vec<u32>] {
        &self.galois[(j % self.p) as usize]
    }

    pub fn reduction_row(&self, k: usize) -> &[LaurentSeries] {
        &self.reduction[k]
    }

    /// `ceil(i s / p)`: least `v_K(a_i)` allowed in `O_L`.
    pub fn integral_threshold(&self, i: usize) -> i64 {
        ceil_div(i as i64 * self.s, self.p as i64)
    }

    /// `ceil((i+1) s / p)`: least `v_K(a_i)` allowed in `(σ - 1) O_L`.
    pub fn coboundary_threshold(&self, i: usize) -> i64 {
        ceil_div((i as i64 + 1) * self.s, self.p as i64)
    }

    /// `ceil((p-1) s / p)`: `tr(O_L) = t^c O_K` for this `c`.
    pub fn trace_image_threshold(&self) -> i64 {
        self.integral_threshold(self.p as usize - 1)
    }
}

/// An element `sum a_i λ^i` of `L`.
#[derive(Clone, Debug)]
pub struct ExtElement {
    ext: Arc<ASExtension>,
    a: Vec<LaurentSeries>,
}

/// Serialized form `{p, s, f, a}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtRecord {
    pub p: u32,
    pub s: i64,
    pub f: LaurentSeries,
    pub a: Vec<LaurentSeries>,
}

impl Serialize for ExtElement {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ExtElement {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = ExtRecord::deserialize(deserializer)?;
        ExtElement::from_record(rec).map_err(serde::de::Error::custom)
    }
}

impl ExtElement {
    pub fn new(ext: &Arc<ASExtension>, a: Vec<LaurentSeries>) -> Result<Self> {
        if a.len() != ext.p as usize {
            return Err(Error::Domain(format!("expected {} coefficients, got {}", ext.p, a.len())));
        }
        if let Some(bad) = a.iter().find(|c| c.p() != ext.p) {
            return Err(Error::ModulusMismatch(ext.p, bad.p()));
        }
        Ok(ExtElement { ext: Arc::clone(ext), a })
    }

    pub fn to_record(&self) -> ExtRecord {
        ExtRecord { p: self.ext.p, s: self.ext.s, f: self.ext.f.clone(), a: self.a.clone() }
    }

    pub fn from_record(rec: ExtRecord) -> Result<Self> {
        let ext = ASExtension::new(rec.p, rec.s, Some(rec.f))?;
        ExtElement::new(&ext, rec.a)
    }

    pub fn zero(ext: &Arc<ASExtension>) -> Self {
        let p = ext.p;
        ExtElement { ext: Arc::clone(ext), a: vec![LaurentSeries::zero(p); p as usize] }
    }

    /// Embed `c ∈ K`.
    pub fn from_base(ext: &Arc<ASExtension>, c: LaurentSeries) -> Self {
        let mut x = Self::zero(ext);
        x.a[0] = c;
        x
    }

    pub fn one(ext: &Arc<ASExtension>) -> Self {
        Self::from_base(ext, LaurentSeries::one(ext.p))
    }

    /// Exact `c t^j λ^i`.
    pub fn monomial(ext: &Arc<ASExtension>, c: i64, j: i64, i: usize) -> Self {
        let mut x = Self::zero(ext);
        x.a[i] = LaurentSeries::monomial(ext.p, c, j);
        x
    }

    pub fn ext(&self) -> &Arc<ASExtension> {
        &self.ext
    }

    pub fn coeffs(&self) -> &[LaurentSeries] {
        &self.a
    }

    pub fn coeff(&self, i: usize) -> &LaurentSeries {
        &self.a[i]
    }

    fn same_ext(&self, other: &ExtElement) {
        assert!(self.ext.same_field(&other.ext), "elements of different extensions");
    }

    pub fn add(&self, rhs: &ExtElement) -> ExtElement {
        self.same_ext(rhs);
        let a = self.a.iter().zip(&rhs.a).map(|(x, y)| x + y).collect();
        ExtElement { ext: Arc::clone(&self.ext), a }
    }

    pub fn sub(&self, rhs: &ExtElement) -> ExtElement {
        self.same_ext(rhs);
        let a = self.a.iter().zip(&rhs.a).map(|(x, y)| x - y).collect();
        ExtElement { ext: Arc::clone(&self.ext), a }
    }

    pub fn neg(&self) -> ExtElement {
        ExtElement { ext: Arc::clone(&self.ext), a: self.a.iter().map(|x| -x).collect() }
    }

    /// Multiply by a scalar of `K`.
    pub fn scale(&self, c: &LaurentSeries) -> ExtElement {
        ExtElement { ext: Arc::clone(&self.ext), a: self.a.iter().map(|x| x * c).collect() }
    }

    pub fn scale_fp(&self, c: u32) -> ExtElement {
        ExtElement { ext: Arc::clone(&self.ext), a: self.a.iter().map(|x| x.scale(c)).collect() }
    }

    /// Product, reduced to the basis with `λ^(p+k) = λ^(k+1) + f λ^k`.
    pub fn mul(&self, rhs: &ExtElement) -> ExtElement {
        self.same_ext(rhs);
        let p = self.ext.p as usize;
        let mut c = vec![LaurentSeries::zero(self.ext.p); 2 * p - 1];
        for (i, x) in self.a.iter().enumerate() {
            if x.is_exact_zero() {
                continue;
            }
            for (j, y) in rhs.a.iter().enumerate() {
                if y.is_exact_zero() {
                    continue;
                }
                c[i + j] = &c[i + j] + &(x * y);
            }
        }
        for d in (p..2 * p - 1).rev() {
            let cd = std::mem::replace(&mut c[d], LaurentSeries::zero(self.ext.p));
            if cd.is_exact_zero() {
                continue;
            }
            for (k, entry) in self.ext.reduction[d - p].iter().enumerate() {
                if !entry.is_exact_zero() {
                    c[k] = &c[k] + &(&cd * entry);
                }
            }
        }
        c.truncate(p);
        ExtElement { ext: Arc::clone(&self.ext), a: c }
    }

    pub fn pow(&self, e: u64) -> ExtElement {
        let mut acc = ExtElement::one(&self.ext);
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

    /// `σ^j(x)`, coefficients transformed by the precomputed matrix for `j`.
    pub fn galois_apply(&self, j: u32) -> ExtElement {
        let m = self.ext.galois_matrix(j);
        let p = self.ext.p as usize;
        let a = (0..p)
            .map(|k| {
                let mut acc = LaurentSeries::zero(self.ext.p);
                for (&c, ai) in m[k].iter().zip(&self.a).skip(k) {
                    if c != 0 && !ai.is_exact_zero() {
                        acc = &acc + &ai.scale(c);
                    }
                }
                acc
            })
            .collect();
        ExtElement { ext: Arc::clone(&self.ext), a }
    }

    /// `v_L(x) = min_i (p v_K(a_i) - i s)`, or a certified lower bound.
    pub fn valuation(&self) -> Valuation {
        let (p, s) = (self.ext.p as i64, self.ext.s);
        self.a.iter().enumerate().fold(Valuation::Infinite, |acc, (i, c)| {
            let v = match c.valuation() {
                Valuation::Exact(v) => Valuation::Exact(p * v - i as i64 * s),
                Valuation::AtLeast(b) => Valuation::AtLeast(p * b - i as i64 * s),
                Valuation::Infinite => Valuation::Infinite,
            };
            acc.min(v)
        })
    }

    /// Membership in `O_L`: `v_K(a_i) >= ceil(i s / p)` for all `i`.
    pub fn in_integral_ring(&self) -> Result<bool> {
        let mut undecided = None;
        for (i, c) in self.a.iter().enumerate() {
            let threshold = self.ext.integral_threshold(i);
            match c.valuation().certify_at_least(threshold) {
                Some(true) => {}
                Some(false) => return Ok(false),
                None => undecided = Some((i, threshold, c.valuation())),
            }
        }
        match undecided {
            None => Ok(true),
            Some((i, threshold, v)) => Err(Error::PrecisionExhausted(format!(
                "coefficient a_{i} has v_K {v}, cannot certify >= {threshold}"
            ))),
        }
    }

    /// If every coefficient above degree 0 is certified zero, the `K`-part.
    pub fn as_base(&self) -> Result<LaurentSeries> {
        if let Some((i, c)) = self.a.iter().enumerate().skip(1).find(|(_, c)| !c.is_zero_to_precision()) {
            return Err(Error::ContractViolation(format!(
                "expected an element of K, found λ^{i} coefficient {c}"
            )));
        }
        Ok(self.a[0].clone())
    }

    /// `tr(x) = sum_j σ^j(x)`, computed from the Galois action.
    pub fn trace_direct(&self) -> Result<LaurentSeries> {
        let mut acc = ExtElement::zero(&self.ext);
        for j in 0..self.ext.p {
            acc = acc.add(&self.galois_apply(j));
        }
        acc.as_base()
    }

    /// `tr(x) = -a_(p-1)`.
    pub fn trace_formula(&self) -> LaurentSeries {
        -&self.a[self.ext.p as usize - 1]
    }

    pub fn trace(&self, mode: TraceMode) -> Result<LaurentSeries> {
        match mode {
            TraceMode::Direct => self.trace_direct(),
            TraceMode::Formula => Ok(self.trace_formula()),
        }
    }

    /// `a_(p-1) = 0`. A coefficient that is only zero up to `t^N` is accepted
    /// when `N` reaches the integrality threshold of that coefficient.
    pub fn is_trace_zero(&self) -> Result<bool> {
        let last = self.ext.p as usize - 1;
        let threshold = self.ext.integral_threshold(last);
        match self.a[last].valuation() {
            Valuation::Infinite => Ok(true),
            Valuation::Exact(_) => Ok(false),
            Valuation::AtLeast(b) if b >= threshold => Ok(true),
            Valuation::AtLeast(b) => Err(Error::PrecisionExhausted(format!(
                "a_{last} is zero only up to t^{b}, below t^{threshold}"
            ))),
        }
    }

    fn require_integral_trace_zero(&self) -> Result<()> {
        if !self.in_integral_ring()? {
            return Err(Error::Domain("element is not in O_L".into()));
        }
        if !self.is_trace_zero()? {
            return Err(Error::NotTraceZero);
        }
        Ok(())
    }

    /// Membership in `(σ - 1) O_L` for trace-zero `x ∈ O_L`:
    /// `v_K(a_i) >= ceil((i+1) s / p)` for `0 <= i <= p-2`.
    pub fn coboundary_test(&self) -> Result<bool> {
        self.require_integral_trace_zero()?;
        let mut undecided = None;
        for i in 0..self.ext.p as usize - 1 {
            let threshold = self.ext.coboundary_threshold(i);
            match self.a[i].valuation().certify_at_least(threshold) {
                Some(true) => {}
                Some(false) => return Ok(false),
                None => undecided = Some((i, threshold)),
            }
        }
        match undecided {
            None => Ok(true),
            Some((i, threshold)) => Err(Error::PrecisionExhausted(format!(
                "coefficient a_{i} known only to t^{:?}, threshold t^{threshold}",
                self.a[i].precision()
            ))),
        }
    }

    /// Solve `σ(y) - y = x` in `L` by back-substitution on
    /// `a_k = sum_{m > k} binom(m, k) b_m`, with `b_0 = 0`.
    pub fn coboundary_solve(&self) -> Result<ExtElement> {
        if !self.is_trace_zero()? {
            return Err(Error::NotTraceZero);
        }
        let p = self.ext.p;
        let pu = p as usize;
        let mut b = vec![LaurentSeries::zero(p); pu];
        for m in (1..pu).rev() {
            // row k = m - 1: a_{m-1} = m b_m + sum_{m' > m} binom(m', m-1) b_{m'}
            let mut rhs = self.a[m - 1].clone();
            for (mp, bmp) in b.iter().enumerate().skip(m + 1) {
                let c = binomial(mp as u64, (m - 1) as u64) % p;
                let c: u32 = c.try_into().expect("small residue");
                if c != 0 && !bmp.is_exact_zero() {
                    rhs = &rhs - &bmp.scale(c);
                }
            }
            b[m] = rhs.scale(inv_raw(m as u32 % p, p));
        }
        Ok(ExtElement { ext: Arc::clone(&self.ext), a: b })
    }

    /// Whether the class of trace-zero `x ∈ O_L` in `H^1(G, O_L)` vanishes.
    /// Also enforces that `v_L(x) >= s` forces a trivial class.
    pub fn h1_class_is_zero(&self) -> Result<bool> {
        let zero = self.coboundary_test()?;
        if !zero && self.valuation().certify_at_least(self.ext.s) == Some(true) {
            return Err(Error::ContractViolation(format!(
                "class of an element with v_L = {} >= s = {} is nonzero",
                self.valuation(),
                self.ext.s
            )));
        }
        Ok(zero)
    }

    /// Coefficientwise agreement within the common precision.
    pub fn agrees_with(&self, other: &ExtElement) -> bool {
        self.a.iter().zip(&other.a).all(|(x, y)| x.agrees_with(y))
    }

    pub fn is_exact_zero(&self) -> bool {
        self.a.iter().all(LaurentSeries::is_exact_zero)
    }

    /// Every coefficient certified zero up to its precision.
    pub fn is_zero_to_precision(&self) -> bool {
        self.a.iter().all(LaurentSeries::is_zero_to_precision)
    }

    /// Lower the precision of every coefficient to at most `t^n`.
    pub fn truncate(&self, n: i64) -> ExtElement {
        ExtElement { ext: Arc::clone(&self.ext), a: self.a.iter().map(|c| c.truncate(n)).collect() }
    }

    /// Random element of `O_L`: each `a_i` is zero (probability 1/5) or has
    /// valuation uniform in `[ceil(i s/p), ceil(i s/p) + margin]`. With
    /// `trace_zero`, `a_(p-1)` is zero.
    pub fn random_integral<R: Rng + ?Sized>(
        ext: &Arc<ASExtension>,
        prec: i64,
        margin: i64,
        trace_zero: bool,
        rng: &mut R,
    ) -> Result<ExtElement> {
        let pu = ext.p as usize;
        let mut a = Vec::with_capacity(pu);
        for i in 0..pu {
            let lo = ext.integral_threshold(i);
            if (trace_zero && i == pu - 1) || rng.gen_ratio(1, 5) {
                a.push(LaurentSeries::zero_to(ext.p, prec));
            } else {
                a.push(LaurentSeries::random(ext.p, lo, lo + margin, prec, rng)?);
            }
        }
        ExtElement::new(ext, a)
    }

    /// Random element of `L` whose coefficients straddle the integrality
    /// thresholds by up to `spread` in both directions.
    pub fn random_element<R: Rng + ?Sized>(
        ext: &Arc<ASExtension>,
        prec: i64,
        spread: i64,
        rng: &mut R,
    ) -> Result<ExtElement> {
        let a = (0..ext.p as usize)
            .map(|i| {
                let mid = ext.integral_threshold(i);
                if rng.gen_ratio(1, 6) {
                    Ok(LaurentSeries::zero_to(ext.p, prec))
                } else {
                    LaurentSeries::random(ext.p, mid - spread, mid + spread, prec, rng)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ExtElement::new(ext, a)
    }

    /// Random element of `O_L` with `v_L(x) = v` exactly, `v >= 0`.
    pub fn random_with_valuation<R: Rng + ?Sized>(
        ext: &Arc<ASExtension>,
        v: i64,
        prec: i64,
        margin: i64,
        rng: &mut R,
    ) -> Result<ExtElement> {
        let (p, s) = (ext.p as i64, ext.s);
        if v < 0 {
            return Err(Error::Domain(format!("valuation {v} is not integral")));
        }
        // the unique i with p | v + i s
        let lead = (0..p).find(|&i| (v + i * s) % p == 0).expect("s is prime to p") as usize;
        let j = (v + lead as i64 * s) / p;
        if j >= prec {
            return Err(Error::PrecisionWindowInvalid(format!("t^{j} beyond precision t^{prec}")));
        }
        let a = (0..p as usize)
            .map(|i| {
                if i == lead {
                    return LaurentSeries::random(ext.p, j, j, prec, rng);
                }
                // p v_K(a_i) - i s > v
                let lo = (v + i as i64 * s).div_euclid(p) + 1;
                if lo >= prec || rng.gen_ratio(1, 4) {
                    Ok(LaurentSeries::zero_to(ext.p, prec))
                } else {
                    LaurentSeries::random(ext.p, lo, (lo + margin).min(prec - 1), prec, rng)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ExtElement::new(ext, a)
    }

    /// Random trace-zero element of `O_L` with `v_L(x) = v` exactly. Such
    /// elements exist only for `v` not congruent to `s` mod `p`.
    pub fn random_trace_zero_with_valuation<R: Rng + ?Sized>(
        ext: &Arc<ASExtension>,
        v: i64,
        prec: i64,
        margin: i64,
        rng: &mut R,
    ) -> Result<ExtElement> {
        let p = ext.p as i64;
        if (v - ext.s).rem_euclid(p) == 0 {
            return Err(Error::Domain(format!("no trace-zero element has v_L = {v} (congruent to s mod p)")));
        }
        let mut x = Self::random_with_valuation(ext, v, prec, margin, rng)?;
        let last = ext.p as usize - 1;
        x.a[last] = LaurentSeries::zero_to(ext.p, prec);
        Ok(x)
    }
}

impl fmt::Display for ExtElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.a.iter().enumerate() {
            if c.is_exact_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})·λ")?,
                _ => write!(f, "({c})·λ^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceMode {
    Direct,
    Formula,
}

/// A representative `t^j λ^i` of a class in `H^1(G, O_L)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct H1Representative {
    pub i: usize,
    pub j: i64,
}

impl fmt::Display for H1Representative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.j {
            0 => String::new(),
            1 => "t".to_string(),
            j => format!("t^{j}"),
        };
        let l = match self.i {
            0 => String::new(),
            1 => "λ".to_string(),
            i => format!("λ^{i}"),
        };
        match (t.is_empty(), l.is_empty()) {
            (true, true) => write!(f, "1"),
            (false, true) => write!(f, "{t}"),
            (true, false) => write!(f, "{l}"),
            (false, false) => write!(f, "{t}·{l}"),
        }
    }
}

/// Dimension of `H^1(G, O_L)` over `F_p` from the two valuation lattices,
/// `sum_{i<p-1} (ceil((i+1)s/p) - ceil(is/p)) = ceil((p-1)s/p)`, with the
/// representatives `t^j λ^i`, `ceil(is/p) <= j < ceil((i+1)s/p)`.
pub fn h1_dimension(p: u32, s: i64) -> Result<(usize, Vec<H1Representative>)> {
    let ext = ASExtension::new(p, s, None)?;
    let mut basis = Vec::new();
    for i in 0..p as usize - 1 {
        for j in ext.integral_threshold(i)..ext.coboundary_threshold(i) {
            basis.push(H1Representative { i, j });
        }
    }
    debug_assert_eq!(basis.len() as i64, ext.trace_image_threshold());
    Ok((basis.len(), basis))
}

/// `dim Z - dim B` on `M = O_L / m_L^n`, where `Z` is the image of the
/// trace-zero elements of `O_L` and `B = (σ - 1) M`. Both maps are assembled
/// from [`ExtElement::galois_apply`] and ring arithmetic on the monomial basis
/// `t^j λ^i` of `M`. A class `x ∈ M` lifts to a trace-zero element exactly
/// when `tr(x̃) ∈ tr(m_L^n) = t^e O_K`, which is how `Z` is cut out.
pub fn h1_truncated_defect(ext: &Arc<ASExtension>, n: i64) -> Result<usize> {
    let (p, s) = (ext.p as i64, ext.s);
    let pu = ext.p as usize;
    let basis: Vec<(usize, i64)> = (0..pu)
        .flat_map(|i| {
            let lo = ext.integral_threshold(i);
            (lo..).take_while(move |&j| p * j - i as i64 * s < n).map(move |j| (i, j))
        })
        .collect();
    let trace = |x: &ExtElement| -> Result<LaurentSeries> {
        let mut acc = ExtElement::zero(ext);
        for j in 0..ext.p {
            acc = acc.add(&x.galois_apply(j));
        }
        acc.as_base()
    };
    // e = min v_K tr(y) over O_K-generators y of m_L^n
    let mut e = i64::MAX;
    for i in 0..pu {
        let j = ceil_div(n + i as i64 * s, p);
        if let Some(v) = trace(&ExtElement::monomial(ext, 1, j, i))?.valuation().exact() {
            e = e.min(v);
        }
    }
    if e == i64::MAX {
        return Err(Error::ContractViolation("trace vanishes on m_L^n".into()));
    }
    let coords = |x: &ExtElement| -> Result<Vec<u32>> {
        for (i, c) in x.coeffs().iter().enumerate() {
            if let Some(v) = c.valuation().exact() {
                if p * v - i as i64 * s < 0 {
                    return Err(Error::ContractViolation(format!("{x} left O_L")));
                }
            }
        }
        Ok(basis.iter().map(|&(i, j)| x.coeff(i).raw_coeff(j)).collect())
    };
    let mut trace_rows = Vec::with_capacity(basis.len());
    let mut cob_rows = Vec::with_capacity(basis.len());
    for &(i, j) in &basis {
        let x = ExtElement::monomial(ext, 1, j, i);
        let tr = trace(&x)?;
        if tr.valuation().certify_at_least(0) != Some(true) {
            return Err(Error::ContractViolation(format!("tr({x}) = {tr} is not in O_K")));
        }
        trace_rows.push((0..e).map(|k| tr.raw_coeff(k)).collect::<Vec<u32>>());
        cob_rows.push(coords(&x.galois_apply(1).sub(&x))?);
    }
    let cocycles = basis.len() - rank_mod_p(&trace_rows, ext.p);
    let coboundaries = rank_mod_p(&cob_rows, ext.p);
    Ok(cocycles - coboundaries)
}

/// [`h1_truncated_defect`] at `n - p`, `n`, `n + p`; the three values must agree.
pub fn h1_truncated_oracle(ext: &Arc<ASExtension>, n: i64) -> Result<usize> {
    let (p, s) = (ext.p as i64, ext.s);
    if n < 2 * s * p {
        return Err(Error::Domain(format!("oracle needs N >= 2 s p = {}, got {n}", 2 * s * p)));
    }
    let values = [n - p, n, n + p]
        .into_iter()
        .map(|m| h1_truncated_defect(ext, m))
        .collect::<Result<Vec<_>>>()?;
    if values.iter().any(|&v| v != values[0]) {
        return Err(Error::NotStabilized(values));
    }
    Ok(values[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::power_sum_mod_p;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ext(p: u32, s: i64) -> Arc<ASExtension> {
        ASExtension::new(p, s, None).unwrap()
    }

    fn mono(e: &Arc<ASExtension>, c: i64, j: i64, i: usize) -> ExtElement {
        ExtElement::monomial(e, c, j, i)
    }

    #[test]
    fn construction() {
        let e = ext(2, 1);
        assert_eq!(e.f(), &LaurentSeries::monomial(2, 1, -1));
        assert!(matches!(ASExtension::new(3, 3, None), Err(Error::InvalidBreak { .. })));
        assert!(matches!(ASExtension::new(3, 0, None), Err(Error::InvalidBreak { .. })));
        assert!(matches!(ASExtension::new(4, 1, None), Err(Error::UnsupportedPrime(4))));
        let f = LaurentSeries::exact(3, -2, &[1, 0, 1]).unwrap();
        let e = ASExtension::new(3, 2, Some(f)).unwrap();
        assert_eq!(e.f().valuation(), Valuation::Exact(-2));
        let bad = LaurentSeries::exact(3, -1, &[1]).unwrap();
        assert!(matches!(ASExtension::new(3, 2, Some(bad)), Err(Error::InvalidF(_))));
    }

    #[test]
    fn galois_matrices_form_a_cyclic_group() {
        for (p, s) in [(2, 1), (3, 2), (5, 3), (7, 1)] {
            let e = ext(p, s);
            let pu = p as usize;
            let m0 = e.galois_matrix(0);
            for (k, row) in m0.iter().enumerate().take(pu) {
                for (i, &c) in row.iter().enumerate().take(pu) {
                    assert_eq!(c, u32::from(k == i));
                }
            }
            for a in 0..p {
                for b in 0..p {
                    let (ma, mb, mab) = (e.galois_matrix(a), e.galois_matrix(b), e.galois_matrix(a + b));
                    for k in 0..pu {
                        for i in 0..pu {
                            let c: u32 = (0..pu).map(|l| ma[k][l] * mb[l][i]).sum::<u32>() % p;
                            assert_eq!(c, mab[k][i]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn defining_relation() {
        for (p, s) in [(2, 1), (3, 2), (5, 2)] {
            let e = ext(p, s);
            let lam = mono(&e, 1, 0, 1);
            let lhs = lam.pow(p as u64);
            let rhs = lam.add(&ExtElement::from_base(&e, e.f().clone()));
            assert!(lhs.agrees_with(&rhs));
            assert!(lam.mul(&mono(&e, 1, 0, p as usize - 1)).agrees_with(&rhs));
        }
        let e = ext(2, 1);
        let tl = mono(&e, 1, 1, 1);
        let want = mono(&e, 1, 2, 1).add(&mono(&e, 1, 1, 0));
        assert!(tl.mul(&tl).agrees_with(&want));
        assert!(tl.mul(&ExtElement::one(&e)).agrees_with(&tl));
    }

    #[test]
    fn galois_examples() {
        let e = ext(2, 1);
        let tl = mono(&e, 1, 1, 1);
        assert!(tl.galois_apply(0).agrees_with(&tl));
        let want = tl.add(&mono(&e, 1, 1, 0));
        assert!(tl.galois_apply(1).agrees_with(&want));
    }

    #[test]
    fn valuation_examples() {
        let e = ext(3, 2);
        assert_eq!(mono(&e, 1, 1, 1).valuation(), Valuation::Exact(1));
        assert_eq!(mono(&e, 1, 1, 2).valuation(), Valuation::Exact(-1));
        assert_eq!(ExtElement::one(&e).valuation(), Valuation::Exact(0));
        assert_eq!(ExtElement::zero(&e).valuation(), Valuation::Infinite);
        let mut z = ExtElement::zero(&e);
        z.a = vec![LaurentSeries::zero_to(3, 5); 3];
        // min_i (3*5 - 2i)
        assert_eq!(z.valuation(), Valuation::AtLeast(11));
    }

    #[test]
    fn integral_ring_examples() {
        let e = ext(3, 2);
        assert!(mono(&e, 1, 2, 2).in_integral_ring().unwrap());
        assert!(!mono(&e, 1, 1, 2).in_integral_ring().unwrap());
        assert!(ExtElement::one(&e).in_integral_ring().unwrap());
        let mut x = ExtElement::one(&e);
        x.a[2] = LaurentSeries::zero_to(3, 1);
        assert!(matches!(x.in_integral_ring(), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn trace_examples() {
        let e = ext(3, 2);
        let x = mono(&e, 1, 2, 2);
        let want = LaurentSeries::monomial(3, 2, 2);
        assert_eq!(x.trace(TraceMode::Formula).unwrap(), want);
        assert_eq!(x.trace(TraceMode::Direct).unwrap(), want);
        assert!(ExtElement::one(&e).trace_direct().unwrap().is_zero_to_precision());
        let e2 = ext(2, 1);
        assert_eq!(mono(&e2, 1, 1, 1).trace_direct().unwrap(), LaurentSeries::monomial(2, 1, 1));
    }

    #[test]
    fn trace_zero_examples() {
        let e = ext(3, 2);
        assert!(ExtElement::one(&e).is_trace_zero().unwrap());
        assert!(!mono(&e, 1, 2, 2).is_trace_zero().unwrap());
        let e2 = ext(2, 1);
        assert!(mono(&e2, 1, 1, 0).is_trace_zero().unwrap());
        let mut x = ExtElement::one(&e);
        x.a[2] = LaurentSeries::zero_to(3, 1);
        assert!(matches!(x.is_trace_zero(), Err(Error::PrecisionExhausted(_))));
        x.a[2] = LaurentSeries::zero_to(3, 2);
        assert!(x.is_trace_zero().unwrap());
    }

    #[test]
    fn coboundary_examples() {
        let e2 = ext(2, 1);
        assert!(mono(&e2, 1, 1, 0).coboundary_test().unwrap());
        assert!(!ExtElement::one(&e2).coboundary_test().unwrap());
        let e3 = ext(3, 2);
        let x = ExtElement::one(&e3).add(&mono(&e3, 1, 1, 1));
        assert!(!x.coboundary_test().unwrap());
        assert_eq!(mono(&e3, 1, 2, 2).coboundary_test(), Err(Error::NotTraceZero));
        assert!(matches!(mono(&e3, 1, -1, 0).coboundary_test(), Err(Error::Domain(_))));
    }

    #[test]
    fn coboundary_solve_examples() {
        let e2 = ext(2, 1);
        let x = mono(&e2, 1, 1, 0);
        let y = x.coboundary_solve().unwrap();
        assert!(y.agrees_with(&mono(&e2, 1, 1, 1)));
        assert!(y.galois_apply(1).sub(&y).agrees_with(&x));

        let zero = ExtElement::zero(&e2);
        assert!(zero.coboundary_solve().unwrap().is_zero_to_precision());
        assert!(zero.coboundary_test().unwrap());
        assert!(zero.h1_class_is_zero().unwrap());

        let e3 = ext(3, 2);
        let x = mono(&e3, 1, 2, 1);
        let y = x.coboundary_solve().unwrap();
        // b_2 = a_1 / 2 = 2 t^2 = -t^2, then a_0 = 0 = b_1 + b_2 gives b_1 = t^2
        assert_eq!(y.coeff(2), &LaurentSeries::monomial(3, 2, 2));
        assert_eq!(y.coeff(1), &LaurentSeries::monomial(3, 1, 2));
        assert!(y.galois_apply(1).sub(&y).agrees_with(&x));
        assert!(y.in_integral_ring().unwrap());
    }

    #[test]
    fn h1_class_examples() {
        let e2 = ext(2, 1);
        assert!(!ExtElement::one(&e2).h1_class_is_zero().unwrap());
        assert!(mono(&e2, 1, 1, 0).h1_class_is_zero().unwrap());
        let e3 = ext(3, 2);
        assert!(mono(&e3, 1, 1, 0).h1_class_is_zero().unwrap());
    }

    #[test]
    fn h1_dimension_examples() {
        let (d, basis) = h1_dimension(2, 1).unwrap();
        assert_eq!(d, 1);
        assert_eq!(basis, vec![H1Representative { i: 0, j: 0 }]);
        let (d, basis) = h1_dimension(3, 2).unwrap();
        assert_eq!(d, 2);
        let shown: Vec<String> = basis.iter().map(ToString::to_string).collect();
        assert_eq!(shown, vec!["1", "t·λ"]);
        assert_eq!(h1_dimension(5, 3).unwrap().0, 3);
    }

    #[test]
    fn truncated_oracle_examples() {
        assert_eq!(h1_truncated_defect(&ext(2, 1), 8).unwrap(), 1);
        assert_eq!(h1_truncated_oracle(&ext(2, 1), 8).unwrap(), 1);
        assert_eq!(h1_truncated_oracle(&ext(3, 2), 18).unwrap(), 2);
        assert!(matches!(h1_truncated_oracle(&ext(3, 2), 5), Err(Error::Domain(_))));
    }

    #[test]
    fn trace_formula_coefficients_come_from_power_sums() {
        // coefficient of λ^k in tr(λ^i) is binom(i, k) S_{i-k}
        for p in [2u32, 3, 5, 7] {
            let e = ext(p, 1);
            for i in 0..p as usize {
                let tr = mono(&e, 1, 0, i);
                let mut acc = ExtElement::zero(&e);
                for j in 0..p {
                    acc = acc.add(&tr.galois_apply(j));
                }
                for k in 0..=i {
                    let expect = (binomial(i as u64, k as u64) % p) * power_sum_mod_p((i - k) as u32, p).unwrap().value();
                    let expect: u32 = (expect % p).try_into().unwrap();
                    assert_eq!(acc.coeff(k).raw_coeff(0), expect, "p={p} i={i} k={k}");
                }
            }
        }
    }

    #[test]
    fn random_generators_respect_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (p, s) in [(2, 3), (3, 2), (5, 3)] {
            let e = ext(p, s);
            for _ in 0..30 {
                let x = ExtElement::random_integral(&e, 40, 4, true, &mut rng).unwrap();
                assert!(x.in_integral_ring().unwrap());
                assert!(x.is_trace_zero().unwrap());
                for v in 0..2 * s + 5 {
                    let y = ExtElement::random_with_valuation(&e, v, 40, 4, &mut rng).unwrap();
                    assert_eq!(y.valuation(), Valuation::Exact(v));
                }
            }
        }
    }

    #[test]
    fn record_round_trip() {
        let e = ext(3, 2);
        let x = mono(&e, 2, 1, 1).add(&ExtElement::one(&e));
        let json = serde_json::to_string(&x).unwrap();
        let back: ExtElement = serde_json::from_str(&json).unwrap();
        assert!(back.agrees_with(&x));
        assert_eq!(back.ext().s(), 2);
    }
}
