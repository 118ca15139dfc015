//! Universal Witt-vector polynomials over ℤ and the symmetric polynomial
//! `G = ((ΣX_i)^p - ΣX_i^p) / p`.
//!
//! Everything is generated over the integers with exact big-integer
//! coefficients and reduced mod `p` afterwards, so every division by a power
//! of `p` is checked rather than assumed.
//!
//! Variable layout: binary structure polynomials use `X_0..X_(n-1)` as
//! variables `0..n` and `Y_0..Y_(n-1)` as variables `n..2n`; negation uses
//! `X_0..X_(n-1)` only.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::One;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::combinat::{compositions, multinomial_div_p};
use crate::error::{Error, Result};
use crate::fp::check_prime;
use crate::poly::{FpPolynomial, IntPolynomial};

pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WittKind {
    Sum,
    Product,
    Negation,
}

impl WittKind {
    pub const ALL: [WittKind; 3] = [WittKind::Sum, WittKind::Product, WittKind::Negation];

    pub fn name(self) -> &'static str {
        match self {
            WittKind::Sum => "sum",
            WittKind::Product => "product",
            WittKind::Negation => "negation",
        }
    }

    fn arity(self, n: usize) -> usize {
        match self {
            WittKind::Negation => n,
            _ => 2 * n,
        }
    }
}

impl fmt::Display for WittKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WittKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(WittKind::Sum),
            "product" => Ok(WittKind::Product),
            "negation" => Ok(WittKind::Negation),
            other => Err(Error::Config(format!("unknown kind {other:?} (sum, product, negation)"))),
        }
    }
}

/// Largest Witt length generated symbolically for each prime.
pub fn max_length(p: u32) -> usize {
    match p {
        2 => 5,
        3 => 4,
        5 | 7 => 2,
        _ => 1,
    }
}

pub fn check_budget(p: u32, n: usize) -> Result<()> {
    check_prime(p as u64)?;
    let max = max_length(p);
    if n == 0 {
        return Err(Error::Config("Witt length must be at least 1".into()));
    }
    if n > max {
        return Err(Error::BudgetExceeded { p, n, max });
    }
    Ok(())
}

/// `w_i = Σ_{j<=i} p^j V_j^(p^(i-j))` with `V_j` the variable `block[j]`.
pub fn ghost_polynomial(p: u32, i: usize, block: &[usize], nvars: usize) -> IntPolynomial {
    let mut acc = IntPolynomial::zero(nvars);
    for (j, &v) in block.iter().enumerate().take(i + 1) {
        let term = IntPolynomial::var(v, nvars)
            .pow(p.pow((i - j) as u32))
            .scale(&BigInt::from(p).pow(j as u32));
        acc = acc.add(&term);
    }
    acc
}

fn blocks(kind: WittKind, n: usize) -> (Vec<usize>, Vec<usize>) {
    match kind {
        WittKind::Negation => ((0..n).collect(), Vec::new()),
        _ => ((0..n).collect(), (n..2 * n).collect()),
    }
}

/// Ghost side of the defining identity at level `i`.
fn ghost_target(p: u32, kind: WittKind, n: usize, i: usize) -> IntPolynomial {
    let nvars = kind.arity(n);
    let (xs, ys) = blocks(kind, n);
    let wx = ghost_polynomial(p, i, &xs, nvars);
    match kind {
        WittKind::Sum => wx.add(&ghost_polynomial(p, i, &ys, nvars)),
        WittKind::Product => wx.mul(&ghost_polynomial(p, i, &ys, nvars)),
        WittKind::Negation => wx.neg(),
    }
}

/// `Σ_{j<=i} p^j S_j^(p^(i-j))`, the `i`-th ghost component of `(S_0, S_1, ...)`.
fn ghost_of(p: u32, polys: &[IntPolynomial], i: usize) -> IntPolynomial {
    let nvars = polys[0].nvars();
    (0..=i).fold(IntPolynomial::zero(nvars), |acc, j| {
        acc.add(&polys[j].pow(p.pow((i - j) as u32)).scale(&BigInt::from(p).pow(j as u32)))
    })
}

/// The first `n` structure polynomials of one kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WittStructure {
    pub p: u32,
    pub n: usize,
    pub kind: WittKind,
    pub polys: Vec<IntPolynomial>,
}

impl WittStructure {
    /// Run the ghost recursion
    /// `S_i = (target_i - Σ_{j<i} p^j S_j^(p^(i-j))) / p^i`
    /// and verify the ghost identity before returning.
    pub fn generate(p: u32, n: usize, kind: WittKind) -> Result<Self> {
        check_budget(p, n)?;
        let nvars = kind.arity(n);
        let mut polys: Vec<IntPolynomial> = Vec::with_capacity(n);
        for i in 0..n {
            let mut rest = ghost_target(p, kind, n, i);
            for (j, sj) in polys.iter().enumerate() {
                let t = sj.pow(p.pow((i - j) as u32)).scale(&BigInt::from(p).pow(j as u32));
                rest = rest.sub(&t);
            }
            let si = rest.div_exact(&BigInt::from(p).pow(i as u32))?;
            debug_assert_eq!(si.nvars(), nvars);
            polys.push(si);
        }
        let out = WittStructure { p, n, kind, polys };
        out.verify_ghost_identity()?;
        Ok(out)
    }

    /// Check `w_i(S) = w_i(X) ⊕ w_i(Y)` symbolically for every level.
    pub fn verify_ghost_identity(&self) -> Result<()> {
        if self.polys.len() != self.n {
            return Err(Error::ContractViolation(format!("{} polynomials for n = {}", self.polys.len(), self.n)));
        }
        for i in 0..self.n {
            let lhs = ghost_of(self.p, &self.polys, i);
            let rhs = ghost_target(self.p, self.kind, self.n, i);
            if lhs != rhs {
                return Err(Error::ContractViolation(format!(
                    "ghost identity fails for {} polynomials at p={} level {i}",
                    self.kind, self.p
                )));
            }
        }
        Ok(())
    }

    /// For sums: `S_l - X_l - Y_l` only involves coordinates of index `< l`.
    pub fn check_sequential_shape(&self) -> Result<()> {
        if self.kind != WittKind::Sum {
            return Ok(());
        }
        let n = self.n;
        for (l, sl) in self.polys.iter().enumerate() {
            let nvars = sl.nvars();
            let rest = sl.sub(&IntPolynomial::var(l, nvars)).sub(&IntPolynomial::var(n + l, nvars));
            if let Some(&bad) = rest.support().iter().find(|&&k| k % n >= l) {
                return Err(Error::ContractViolation(format!(
                    "S_{l} - X_{l} - Y_{l} involves variable {bad}"
                )));
            }
        }
        Ok(())
    }

    /// For binary kinds: `S_i(X, Y) = S_i(Y, X)`.
    pub fn is_symmetric(&self) -> bool {
        if self.kind == WittKind::Negation {
            return true;
        }
        let n = self.n;
        let swap: Vec<usize> = (0..2 * n).map(|k| (k + n) % (2 * n)).collect();
        self.polys.iter().all(|s| s.rename(&swap, 2 * n) == *s)
    }

    pub fn reduced(&self) -> Vec<FpPolynomial> {
        self.polys.iter().map(|s| s.reduce_mod_p(self.p)).collect()
    }

    /// Copy with one coefficient of one polynomial perturbed by +1.
    pub fn corrupted(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        let level = rng.gen_range(0..self.n);
        let target = &out.polys[level];
        let terms: Vec<_> = target.terms().map(|(m, _)| m.exponents(target.nvars())).collect();
        let pick = terms[rng.gen_range(0..terms.len())].clone();
        let bump = IntPolynomial::from_terms(target.nvars(), [(pick, BigInt::one())]).expect("valid term");
        out.polys[level] = target.add(&bump);
        out
    }
}

/// Largest prime for which `G` is expanded symbolically (`p = 13` has 5.2M terms).
pub const G_MAX_PRIME: u32 = 11;

/// `G(X_1..X_p)`: sum over compositions `k` of `p` into `p` parts, all `< p`,
/// of `multinomial(p; k) / p · X^k`. The identity `p·G + ΣX_i^p = (ΣX_i)^p`
/// is verified before returning.
pub fn g_polynomial(p: u32) -> Result<IntPolynomial> {
    check_prime(p as u64)?;
    if p > G_MAX_PRIME {
        return Err(Error::BudgetExceeded { p, n: 1, max: 0 });
    }
    let nvars = p as usize;
    let mut terms = Vec::new();
    for comp in compositions(p, nvars) {
        if comp.contains(&p) {
            continue;
        }
        terms.push((comp.clone(), multinomial_div_p(p, &comp)?));
    }
    let g = IntPolynomial::from_terms(nvars, terms)?;
    let sum = (0..nvars).fold(IntPolynomial::zero(nvars), |acc, k| acc.add(&IntPolynomial::var(k, nvars)));
    let powers = (0..nvars).fold(IntPolynomial::zero(nvars), |acc, k| acc.add(&IntPolynomial::var(k, nvars).pow(p)));
    if g.scale(&BigInt::from(p)).add(&powers) != sum.pow(p) {
        return Err(Error::ContractViolation(format!("p·G + ΣX^p != (ΣX)^p at p={p}")));
    }
    Ok(g)
}

/// `G mod p`, generated once per process.
pub fn g_reduced(p: u32) -> Result<Arc<FpPolynomial>> {
    static MEMO: OnceLock<Mutex<HashMap<u32, Arc<FpPolynomial>>>> = OnceLock::new();
    let memo = MEMO.get_or_init(Default::default);
    if let Some(g) = memo.lock().expect("memo lock").get(&p) {
        return Ok(Arc::clone(g));
    }
    let g = Arc::new(g_polynomial(p)?.reduce_mod_p(p));
    memo.lock().expect("memo lock").insert(p, Arc::clone(&g));
    Ok(g)
}

/// The carry `(X^p + Y^p - (X+Y)^p) / p` in two variables, so that the level-one
/// Witt sum is `S_1 = X_1 + Y_1 + carry(X_0, Y_0)` for every `p`.
pub fn carry_polynomial(p: u32) -> Result<IntPolynomial> {
    check_prime(p as u64)?;
    let (x, y) = (IntPolynomial::var(0, 2), IntPolynomial::var(1, 2));
    x.pow(p).add(&y.pow(p)).sub(&x.add(&y).pow(p)).div_exact(&BigInt::from(p))
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format_version: u32,
    p: u32,
    n: usize,
    kind: WittKind,
    nvars: usize,
    polynomials: Vec<Vec<(Vec<u32>, String)>>,
    checksum: String,
}

fn checksum(polys: &[Vec<(Vec<u32>, String)>]) -> String {
    let bytes = serde_json::to_vec(polys).expect("serializable");
    hex::encode(Sha256::digest(&bytes))
}

pub fn cache_path(dir: &Path, p: u32, n: usize, kind: WittKind) -> PathBuf {
    dir.join(format!("witt-p{p}-n{n}-{kind}.json"))
}

/// Write a verified structure to `dir`, returning the file path.
pub fn cache_store(dir: &Path, s: &WittStructure) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let polynomials: Vec<_> = s.polys.iter().map(IntPolynomial::to_decimal_terms).collect();
    let file = CacheFile {
        format_version: CACHE_FORMAT_VERSION,
        p: s.p,
        n: s.n,
        kind: s.kind,
        nvars: s.kind.arity(s.n),
        checksum: checksum(&polynomials),
        polynomials,
    };
    let path = cache_path(dir, s.p, s.n, s.kind);
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_vec(&file).map_err(|e| Error::Io(e.to_string()))?)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Load `(p, n, kind)` from `dir`; with `paranoid` the ghost identity is re-verified.
pub fn cache_load(dir: &Path, p: u32, n: usize, kind: WittKind, paranoid: bool) -> Result<WittStructure> {
    let path = cache_path(dir, p, n, kind);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::CacheMiss(format!("{} not found", path.display())));
        }
        Err(e) => return Err(e.into()),
    };
    let file: CacheFile =
        serde_json::from_slice(&bytes).map_err(|e| Error::CacheCorrupt(format!("{}: {e}", path.display())))?;
    if file.format_version != CACHE_FORMAT_VERSION || file.p != p || file.n != n || file.kind != kind {
        return Err(Error::CacheMiss(format!(
            "{} holds version {} p={} n={} {}",
            path.display(),
            file.format_version,
            file.p,
            file.n,
            file.kind
        )));
    }
    if checksum(&file.polynomials) != file.checksum {
        return Err(Error::CacheCorrupt(format!("{}: checksum mismatch", path.display())));
    }
    if file.nvars != kind.arity(n) || file.polynomials.len() != n {
        return Err(Error::CacheCorrupt(format!("{}: shape mismatch", path.display())));
    }
    let polys = file
        .polynomials
        .iter()
        .map(|t| IntPolynomial::from_decimal_terms(file.nvars, t))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::CacheCorrupt(e.to_string()))?;
    let s = WittStructure { p, n, kind, polys };
    if paranoid {
        s.verify_ghost_identity().map_err(|e| Error::CacheCorrupt(e.to_string()))?;
    }
    Ok(s)
}

type Memo = Mutex<HashMap<(u32, usize, WittKind), Arc<WittStructure>>>;

fn memo() -> &'static Memo {
    static MEMO: OnceLock<Memo> = OnceLock::new();
    MEMO.get_or_init(Default::default)
}

/// Structure polynomials from the process memo, then `cache_dir`, then by
/// generation (storing to `cache_dir` when given). A corrupt cache file is
/// regenerated and overwritten.
pub fn structure(p: u32, n: usize, kind: WittKind, cache_dir: Option<&Path>, paranoid: bool) -> Result<Arc<WittStructure>> {
    check_budget(p, n)?;
    if let Some(s) = memo().lock().expect("memo lock").get(&(p, n, kind)) {
        return Ok(Arc::clone(s));
    }
    let loaded = match cache_dir {
        Some(dir) => match cache_load(dir, p, n, kind, paranoid) {
            Ok(s) => Some(s),
            Err(Error::CacheMiss(_)) => None,
            Err(Error::CacheCorrupt(msg)) => {
                log::warn!("regenerating corrupt cache entry: {msg}");
                None
            }
            Err(e) => return Err(e),
        },
        None => None,
    };
    let s = match loaded {
        Some(s) => s,
        None => {
            let s = WittStructure::generate(p, n, kind)?;
            if let Some(dir) = cache_dir {
                cache_store(dir, &s)?;
            }
            s
        }
    };
    let s = Arc::new(s);
    memo().lock().expect("memo lock").insert((p, n, kind), Arc::clone(&s));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(k: usize, n: usize) -> IntPolynomial {
        IntPolynomial::var(k, n)
    }

    #[test]
    fn ghost_examples() {
        assert_eq!(ghost_polynomial(2, 0, &[0, 1], 2), var(0, 2));
        let w1 = var(0, 2).pow(2).add(&var(1, 2).scale(&BigInt::from(2)));
        assert_eq!(ghost_polynomial(2, 1, &[0, 1], 2), w1);
        let w1 = var(0, 2).pow(3).add(&var(1, 2).scale(&BigInt::from(3)));
        assert_eq!(ghost_polynomial(3, 1, &[0, 1], 2), w1);
    }

    #[test]
    fn sum_polynomials_p2() {
        let s = WittStructure::generate(2, 2, WittKind::Sum).unwrap();
        // variables X0, X1, Y0, Y1
        assert_eq!(s.polys[0], var(0, 4).add(&var(2, 4)));
        let s1 = var(1, 4).add(&var(3, 4)).sub(&var(0, 4).mul(&var(2, 4)));
        assert_eq!(s.polys[1], s1);
        let r = s.reduced();
        assert_eq!(r[1].coefficient(&[1, 0, 1, 0]), 1);
        s.check_sequential_shape().unwrap();
        assert!(s.is_symmetric());
    }

    #[test]
    fn level_zero_and_negation() {
        for p in [2u32, 3, 5, 7] {
            let s = WittStructure::generate(p, 1, WittKind::Sum).unwrap();
            assert_eq!(s.polys[0], var(0, 2).add(&var(1, 2)));
            let m = WittStructure::generate(p, 1, WittKind::Product).unwrap();
            assert_eq!(m.polys[0], var(0, 2).mul(&var(1, 2)));
        }
        for p in [3u32, 5] {
            let neg = WittStructure::generate(p, 2, WittKind::Negation).unwrap();
            for (i, poly) in neg.polys.iter().enumerate() {
                assert_eq!(*poly, var(i, 2).neg());
            }
        }
        // -1 = (1, 1, 1, ...) in W(F_2), so negation is not coordinatewise
        let neg2 = WittStructure::generate(2, 2, WittKind::Negation).unwrap();
        assert_eq!(neg2.polys[1], var(1, 2).neg().sub(&var(0, 2).pow(2)));
    }

    #[test]
    fn budget() {
        assert!(matches!(WittStructure::generate(5, 4, WittKind::Sum), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(WittStructure::generate(2, 6, WittKind::Sum), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(check_budget(2, 0), Err(Error::Config(_))));
        assert!(check_budget(3, 4).is_ok());
    }

    #[test]
    fn g_examples() {
        let g2 = g_polynomial(2).unwrap();
        assert_eq!(g2, var(0, 2).mul(&var(1, 2)));
        let g3 = g_polynomial(3).unwrap();
        assert_eq!(g3.len(), 7);
        assert_eq!(g3.coefficient(&[2, 1, 0]), BigInt::from(1));
        assert_eq!(g3.coefficient(&[1, 1, 1]), BigInt::from(2));
        assert!(g_polynomial(13).is_err());
        assert_eq!(g2.reduce_mod_p(2).coefficient(&[1, 1]), 1);
    }

    #[test]
    fn carry_matches_level_one_sum() {
        for p in [2u32, 3, 5, 7] {
            let s = WittStructure::generate(p, 2, WittKind::Sum).unwrap();
            let carry = carry_polynomial(p).unwrap().rename(&[0, 2], 4);
            assert_eq!(s.polys[1], var(1, 4).add(&var(3, 4)).add(&carry));
        }
        assert_eq!(carry_polynomial(13).unwrap().len(), 12);
    }

    #[test]
    fn corrupted_structure_fails_verification() {
        let s = WittStructure::generate(3, 2, WittKind::Sum).unwrap();
        for seed in 0..5 {
            assert!(s.corrupted(seed).verify_ghost_identity().is_err());
        }
    }

    #[test]
    fn cache_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let s = WittStructure::generate(3, 3, WittKind::Sum).unwrap();
        let path = cache_store(dir.path(), &s).unwrap();
        assert_eq!(cache_load(dir.path(), 3, 3, WittKind::Sum, true).unwrap(), s);
        assert!(matches!(cache_load(dir.path(), 2, 3, WittKind::Sum, false), Err(Error::CacheMiss(_))));
        // metadata mismatch under the right file name is also a miss
        fs::copy(&path, cache_path(dir.path(), 3, 2, WittKind::Sum)).unwrap();
        assert!(matches!(cache_load(dir.path(), 3, 2, WittKind::Sum, false), Err(Error::CacheMiss(_))));
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(cache_load(dir.path(), 3, 3, WittKind::Sum, false), Err(Error::CacheCorrupt(_))));
        // a tampered coefficient breaks the checksum
        let text = String::from_utf8(bytes).unwrap().replacen("\"1\"", "\"2\"", 1);
        fs::write(&path, text).unwrap();
        assert!(matches!(cache_load(dir.path(), 3, 3, WittKind::Sum, false), Err(Error::CacheCorrupt(_))));
    }
}
