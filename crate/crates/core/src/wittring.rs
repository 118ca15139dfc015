//! Truncated Witt vectors `W_n(O_L)`: arithmetic by evaluating the reduced
//! structure polynomials in `L`, the Witt-level trace, the map `F`, and the
//! sequential construction of trace-zero Witt vectors.

use std::path::Path;
use std::sync::Arc;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{default_precision, ASExtension, ExtElement, ExtRecord};
use crate::poly::FpPolynomial;
use crate::series::{LaurentSeries, Valuation};
use crate::wittpoly::{self, WittKind};

/// Upper limit for the scaled working precision of Witt computations.
pub const PRECISION_CAP: i64 = 1024;

/// `F` is evaluated through the expanded `G` up to this prime and through
/// iterated level-one Witt sums beyond it.
pub const F_VIA_G_MAX_PRIME: u32 = 5;

/// Default precision for length-`n` Witt computations: `(4 s p + 16) p^(n-1)`,
/// capped at [`PRECISION_CAP`]. The flag reports whether the cap applied.
pub fn witt_precision(p: u32, s: i64, n: usize) -> (i64, bool) {
    let scale = (p as i64).checked_pow(n.saturating_sub(1) as u32).unwrap_or(i64::MAX);
    let n = default_precision(p, s).saturating_mul(scale);
    if n > PRECISION_CAP {
        (PRECISION_CAP, true)
    } else {
        (n, false)
    }
}

/// `s(p-1)/p · (1 + 1/p + ... + 1/p^(i-2))`, the lower bound for `v_L(x_(n-i))`
/// of a trace-zero Witt vector of length `n`.
pub fn step_bound(p: u32, s: i64, i: usize) -> Ratio<i64> {
    assert!(i >= 2, "step bounds start at i = 2");
    let p = p as i64;
    let geometric = (0..=(i - 2) as u32).fold(Ratio::from_integer(0), |acc, j| acc + Ratio::new(1, p.pow(j)));
    Ratio::new(s * (p - 1), p) * geometric
}

/// Least `M >= 2` with `step_bound(M) > s - 1`, so that `v_L(x_0) >= s` at length `M`.
pub fn step3_length(p: u32, s: i64) -> usize {
    let target = Ratio::from_integer(s - 1);
    (2..).find(|&i| step_bound(p, s, i) > target).expect("bounds converge to s")
}

/// Spread of valuations used by the random generators below.
pub fn default_margin(p: u32, s: i64) -> i64 {
    s + p as i64
}

/// `(x_0, ..., x_(n-1))` with every `x_i ∈ O_L`.
#[derive(Clone, Debug)]
pub struct WittVector {
    ext: Arc<ASExtension>,
    comps: Vec<ExtElement>,
}

/// Serialized form `{p, s, f, n, components}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WittRecord {
    pub p: u32,
    pub s: i64,
    pub f: LaurentSeries,
    pub n: usize,
    pub components: Vec<ExtRecord>,
}

impl Serialize for WittVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WittVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        WittVector::from_record(WittRecord::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}

impl WittVector {
    /// Checks that every component lies in `O_L`.
    pub fn new(ext: &Arc<ASExtension>, comps: Vec<ExtElement>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Domain("Witt vectors have length at least 1".into()));
        }
        for (i, x) in comps.iter().enumerate() {
            if !ext.same_field(x.ext()) {
                return Err(Error::Domain(format!("component {i} lives in a different extension")));
            }
            if !x.in_integral_ring()? {
                return Err(Error::Domain(format!("component {i} is not in O_L: {x}")));
            }
        }
        Ok(WittVector { ext: Arc::clone(ext), comps })
    }

    pub fn zero(ext: &Arc<ASExtension>, n: usize) -> Self {
        WittVector { ext: Arc::clone(ext), comps: vec![ExtElement::zero(ext); n] }
    }

    pub fn to_record(&self) -> WittRecord {
        WittRecord {
            p: self.ext.p(),
            s: self.ext.s(),
            f: self.ext.f().clone(),
            n: self.comps.len(),
            components: self.comps.iter().map(ExtElement::to_record).collect(),
        }
    }

    pub fn from_record(rec: WittRecord) -> Result<Self> {
        if rec.components.len() != rec.n {
            return Err(Error::Domain(format!("n = {} but {} components", rec.n, rec.components.len())));
        }
        let ext = ASExtension::new(rec.p, rec.s, Some(rec.f))?;
        let comps = rec
            .components
            .into_iter()
            .map(|c| ExtElement::new(&ext, c.a))
            .collect::<Result<Vec<_>>>()?;
        WittVector::new(&ext, comps)
    }

    pub fn ext(&self) -> &Arc<ASExtension> {
        &self.ext
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn components(&self) -> &[ExtElement] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &ExtElement {
        &self.comps[i]
    }

    /// `σ^j` applied coordinatewise.
    pub fn sigma(&self, j: u32) -> WittVector {
        WittVector { ext: Arc::clone(&self.ext), comps: self.comps.iter().map(|x| x.galois_apply(j)).collect() }
    }

    /// The first `m` components.
    pub fn truncate(&self, m: usize) -> Result<WittVector> {
        if m == 0 || m > self.comps.len() {
            return Err(Error::Domain(format!("cannot truncate length {} to {m}", self.comps.len())));
        }
        Ok(WittVector { ext: Arc::clone(&self.ext), comps: self.comps[..m].to_vec() })
    }

    pub fn is_zero_to_precision(&self) -> bool {
        self.comps.iter().all(ExtElement::is_zero_to_precision)
    }

    pub fn agrees_with(&self, other: &WittVector) -> bool {
        self.comps.len() == other.comps.len() && self.comps.iter().zip(&other.comps).all(|(a, b)| a.agrees_with(b))
    }
}

/// Outcome of [`WittRing::gen_trace_zero`].
#[derive(Clone, Debug)]
pub enum TraceZeroOutcome {
    Solved(WittVector),
    /// The trace equation at `level` asked for `tr(x_level) = -c` with
    /// `v_K(c)` below the trace image of `O_L`.
    Unsolvable {
        level: usize,
        valuation: Valuation,
        threshold: i64,
        prefix: Vec<ExtElement>,
    },
}

/// `W_n(O_L)` for a fixed extension and length, with the reduced structure
/// polynomials loaded.
#[derive(Clone, Debug)]
pub struct WittRing {
    ext: Arc<ASExtension>,
    n: usize,
    sum: Vec<FpPolynomial>,
    neg: Vec<FpPolynomial>,
    product: Vec<FpPolynomial>,
    precision: i64,
    margin: i64,
}

impl WittRing {
    pub fn new(ext: &Arc<ASExtension>, n: usize, cache_dir: Option<&Path>) -> Result<Self> {
        let p = ext.p();
        let load = |kind| wittpoly::structure(p, n, kind, cache_dir, false).map(|s| s.reduced());
        Ok(WittRing {
            ext: Arc::clone(ext),
            n,
            sum: load(WittKind::Sum)?,
            neg: load(WittKind::Negation)?,
            product: load(WittKind::Product)?,
            precision: witt_precision(p, ext.s(), n).0,
            margin: default_margin(p, ext.s()),
        })
    }

    pub fn with_precision(mut self, precision: i64) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_margin(mut self, margin: i64) -> Self {
        self.margin = margin;
        self
    }

    pub fn ext(&self) -> &Arc<ASExtension> {
        &self.ext
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn precision(&self) -> i64 {
        self.precision
    }

    pub fn zero(&self) -> WittVector {
        WittVector::zero(&self.ext, self.n)
    }

    fn member(&self, w: &WittVector) -> Result<()> {
        if !self.ext.same_field(&w.ext) {
            return Err(Error::Domain("Witt vector over a different extension".into()));
        }
        if w.len() != self.n {
            return Err(Error::Domain(format!("Witt vector of length {} in W_{}", w.len(), self.n)));
        }
        Ok(())
    }

    /// Levels `0..=upto` of a binary operation; higher levels are left zero.
    fn binary(&self, polys: &[FpPolynomial], a: &WittVector, b: &WittVector, upto: usize) -> WittVector {
        let point: Vec<ExtElement> = a.comps.iter().chain(&b.comps).cloned().collect();
        let mut comps = vec![ExtElement::zero(&self.ext); self.n];
        for (slot, poly) in comps.iter_mut().zip(polys).take(upto + 1) {
            *slot = poly.eval_ext(&point);
        }
        WittVector { ext: Arc::clone(&self.ext), comps }
    }

    pub fn add(&self, a: &WittVector, b: &WittVector) -> Result<WittVector> {
        self.member(a)?;
        self.member(b)?;
        Ok(self.binary(&self.sum, a, b, self.n - 1))
    }

    pub fn neg(&self, a: &WittVector) -> Result<WittVector> {
        self.member(a)?;
        let comps = self.neg.iter().map(|poly| poly.eval_ext(&a.comps)).collect();
        Ok(WittVector { ext: Arc::clone(&self.ext), comps })
    }

    pub fn sub(&self, a: &WittVector, b: &WittVector) -> Result<WittVector> {
        self.add(a, &self.neg(b)?)
    }

    pub fn mul(&self, a: &WittVector, b: &WittVector) -> Result<WittVector> {
        self.member(a)?;
        self.member(b)?;
        Ok(self.binary(&self.product, a, b, self.n - 1))
    }

    /// `w ⊞ σ(w) ⊞ ... ⊞ σ^(p-1)(w)` on levels `0..=upto`.
    fn trace_levels(&self, w: &WittVector, upto: usize) -> WittVector {
        (1..self.ext.p()).fold(w.clone(), |acc, j| self.binary(&self.sum, &acc, &w.sigma(j), upto))
    }

    /// The Witt-level trace; each component is asserted to lie in `K`.
    pub fn trace(&self, w: &WittVector) -> Result<WittVector> {
        self.member(w)?;
        let t = self.trace_levels(w, self.n - 1);
        for (i, c) in t.comps.iter().enumerate() {
            c.as_base()
                .map_err(|e| Error::ContractViolation(format!("trace component {i} is not Galois invariant: {e}")))?;
        }
        Ok(t)
    }

    /// Whether the trace vanishes: every component zero up to a precision at
    /// least the trace-image threshold.
    pub fn is_trace_zero(&self, w: &WittVector) -> Result<bool> {
        let t = self.trace(w)?;
        let threshold = self.ext.trace_image_threshold();
        for (i, c) in t.comps.iter().enumerate() {
            let c = c.as_base()?;
            match c.valuation() {
                Valuation::Infinite => {}
                Valuation::Exact(_) => return Ok(false),
                Valuation::AtLeast(b) if b >= threshold => {}
                Valuation::AtLeast(b) => {
                    return Err(Error::PrecisionExhausted(format!(
                        "trace component {i} is zero only up to t^{b}, below t^{threshold}"
                    )))
                }
            }
        }
        Ok(true)
    }

    /// A solution of `tr(x) = c` in `O_L`: `-c λ^(p-1)`, plus a random
    /// trace-zero element when `rng` is given.
    pub fn solve_trace(&self, c: &LaurentSeries, rng: Option<&mut ChaCha8Rng>) -> Result<ExtElement> {
        let threshold = self.ext.trace_image_threshold();
        match c.valuation() {
            Valuation::Exact(v) if v < threshold => {
                return Err(Error::TraceUnsolvable { valuation: v.to_string(), threshold });
            }
            Valuation::AtLeast(b) if b < threshold => {
                return Err(Error::PrecisionExhausted(format!(
                    "right-hand side known only to t^{b}, trace image starts at t^{threshold}"
                )));
            }
            _ => {}
        }
        let p = self.ext.p();
        let mut a = vec![LaurentSeries::zero(p); p as usize];
        a[p as usize - 1] = -c;
        let x = ExtElement::new(&self.ext, a)?;
        match rng {
            Some(rng) => Ok(x.add(&self.random_perturbation(rng)?)),
            None => Ok(x),
        }
    }

    /// Zero with probability 1/5, otherwise a trace-zero element with
    /// `v_L` uniform in `[thr, thr + margin]`, `thr = ceil((p-1)s/p)`,
    /// skipping valuations no trace-zero element has.
    pub fn random_perturbation(&self, rng: &mut ChaCha8Rng) -> Result<ExtElement> {
        if rng.gen_ratio(1, 5) {
            return Ok(ExtElement::zero(&self.ext));
        }
        let lo = self.ext.trace_image_threshold();
        self.random_trace_zero_in(lo, lo + self.margin, rng)
    }

    /// Random trace-zero `x_0` with `v_L` uniform in `[0, s + margin]`.
    pub fn random_x0(&self, rng: &mut ChaCha8Rng) -> Result<ExtElement> {
        self.random_trace_zero_in(0, self.ext.s() + self.margin, rng)
    }

    fn random_trace_zero_in(&self, lo: i64, hi: i64, rng: &mut ChaCha8Rng) -> Result<ExtElement> {
        let (p, s) = (self.ext.p() as i64, self.ext.s());
        let choices: Vec<i64> = (lo..=hi).filter(|v| (v - s).rem_euclid(p) != 0).collect();
        let v = choices[rng.gen_range(0..choices.len())];
        ExtElement::random_trace_zero_with_valuation(&self.ext, v, self.precision, self.margin, rng)
    }

    /// Random element of `W_n(O_L)`.
    pub fn random_vector(&self, rng: &mut ChaCha8Rng) -> Result<WittVector> {
        let comps = (0..self.n)
            .map(|_| ExtElement::random_integral(&self.ext, self.precision, self.margin, false, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(WittVector { ext: Arc::clone(&self.ext), comps })
    }

    /// Build a trace-zero vector component by component. At level `l` the
    /// trace component equals `tr(x_l) + c_l`, where `c_l` depends only on
    /// `x_0..x_(l-1)`, so `x_l` solves `tr(x_l) = -c_l`.
    pub fn gen_trace_zero(&self, x0: Option<ExtElement>, seed: u64) -> Result<TraceZeroOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = match x0 {
            Some(x) => {
                if !self.ext.same_field(x.ext()) || !x.in_integral_ring()? {
                    return Err(Error::Domain(format!("x_0 = {x} is not in O_L")));
                }
                if !x.is_trace_zero()? {
                    return Err(Error::NotTraceZero);
                }
                x
            }
            None => self.random_x0(&mut rng)?,
        };
        let mut comps = vec![ExtElement::zero(&self.ext); self.n];
        comps[0] = x0;
        for level in 1..self.n {
            let partial = WittVector { ext: Arc::clone(&self.ext), comps: comps.clone() };
            let c = self.trace_levels(&partial, level).comps[level].as_base()?;
            match self.solve_trace(&-&c, Some(&mut rng)) {
                Ok(x) => comps[level] = x,
                Err(Error::TraceUnsolvable { threshold, .. }) => {
                    return Ok(TraceZeroOutcome::Unsolvable {
                        level,
                        valuation: c.valuation(),
                        threshold,
                        prefix: comps[..level].to_vec(),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        let w = WittVector { ext: Arc::clone(&self.ext), comps };
        if !self.is_trace_zero(&w)? {
            return Err(Error::ContractViolation("constructed Witt vector has nonzero trace".into()));
        }
        Ok(TraceZeroOutcome::Solved(w))
    }
}

/// `F(x) = G(x, σx, ..., σ^(p-1)x)` for `x ∈ O_L`, returned as an element of
/// `O_K`. Asserts Galois invariance and `v_K(F(x)) = v_L(x)`.
pub fn f_map(x: &ExtElement) -> Result<LaurentSeries> {
    let p = x.ext().p();
    let fx = if p <= F_VIA_G_MAX_PRIME { f_map_via_g(x)? } else { f_map_via_carry(x)? };
    check_f_value(x, &fx)?;
    Ok(fx)
}

fn conjugates(x: &ExtElement) -> Result<Vec<ExtElement>> {
    if !x.in_integral_ring()? {
        return Err(Error::Domain(format!("F is defined on O_L; got {x}")));
    }
    Ok((0..x.ext().p()).map(|j| x.galois_apply(j)).collect())
}

fn into_base(fx: ExtElement) -> Result<LaurentSeries> {
    fx.as_base().map_err(|e| Error::ContractViolation(format!("F(x) is not Galois invariant: {e}")))
}

/// Evaluation of the reduced `G` at the conjugates.
pub fn f_map_via_g(x: &ExtElement) -> Result<LaurentSeries> {
    let conj = conjugates(x)?;
    into_base(wittpoly::g_reduced(x.ext().p())?.eval_ext(&conj))
}

/// `-F(x)` is the level-one component of `Σ_j [σ^j x]` in `W_2`, computed by
/// iterated level-one sums with the carry polynomial.
pub fn f_map_via_carry(x: &ExtElement) -> Result<LaurentSeries> {
    let conj = conjugates(x)?;
    let p = x.ext().p();
    let carry = wittpoly::carry_polynomial(p)?.reduce_mod_p(p);
    let mut level0 = conj[0].clone();
    let mut level1 = ExtElement::zero(x.ext());
    for y in &conj[1..] {
        level1 = level1.add(&carry.eval_ext(&[level0.clone(), y.clone()]));
        level0 = level0.add(y);
    }
    into_base(level1.neg())
}

fn check_f_value(x: &ExtElement, fx: &LaurentSeries) -> Result<()> {
    if fx.valuation().certify_at_least(0) == Some(false) {
        return Err(Error::ContractViolation(format!("F(x) = {fx} is not in O_K")));
    }
    let Some(v) = x.valuation().exact() else {
        return Ok(());
    };
    match fx.valuation() {
        Valuation::Exact(w) if w == v => Ok(()),
        Valuation::AtLeast(b) if b <= v => Err(Error::PrecisionExhausted(format!(
            "F(x) known to be zero only up to t^{b}, cannot certify v_K = {v}"
        ))),
        w => Err(Error::ContractViolation(format!("v_K(F(x)) = {w} but v_L(x) = {v} for x = {x}"))),
    }
}
