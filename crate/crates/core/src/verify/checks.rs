//! The named checks. Each one turns a statement about `K`, `L`, `O_L` or
//! `W_n(O_L)` into a deterministic, seeded computation with a pass/fail verdict.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::report::{CheckReport, ReportParams, Verdict, TOOL_VERSION};
use super::sampling::{first_successes, map_samples, sample_seed};
use crate::combinat::power_sum_mod_p;
use crate::error::{Error, Result};
use crate::extension::{
    default_precision, h1_dimension as h1_closed_form, h1_truncated_defect, ASExtension, ExtElement,
};
use crate::fp::check_prime;
use crate::poly::IntPolynomial;
use crate::series::{LaurentSeries, Valuation};
use crate::wittpoly::{self, g_polynomial, max_length, WittKind, G_MAX_PRIME};
use crate::wittring::{f_map, step3_length, step_bound, witt_precision, TraceZeroOutcome, WittRing};

pub const DEFAULT_SAMPLES: usize = 100;

/// Every check, in report order (sorted by name).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckName {
    CorBound,
    FindVanishingM,
    GIntegrality,
    GhostIdentities,
    H1Dimension,
    LemmaFValuation,
    LemmaSums,
    MainTheorem,
    PropH1,
    PropIntegralRing,
    StepBoundsSampled,
    TraceConsistency,
}

impl CheckName {
    pub const ALL: [CheckName; 12] = [
        CheckName::CorBound,
        CheckName::FindVanishingM,
        CheckName::GIntegrality,
        CheckName::GhostIdentities,
        CheckName::H1Dimension,
        CheckName::LemmaFValuation,
        CheckName::LemmaSums,
        CheckName::MainTheorem,
        CheckName::PropH1,
        CheckName::PropIntegralRing,
        CheckName::StepBoundsSampled,
        CheckName::TraceConsistency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckName::CorBound => "cor_bound",
            CheckName::FindVanishingM => "find_vanishing_m",
            CheckName::GIntegrality => "g_integrality",
            CheckName::GhostIdentities => "ghost_identities",
            CheckName::H1Dimension => "h1_dimension",
            CheckName::LemmaFValuation => "lemma_F_valuation",
            CheckName::LemmaSums => "lemma_sums",
            CheckName::MainTheorem => "main_theorem",
            CheckName::PropH1 => "prop_h1",
            CheckName::PropIntegralRing => "prop_integral_ring",
            CheckName::StepBoundsSampled => "step_bounds_sampled",
            CheckName::TraceConsistency => "trace_consistency",
        }
    }

    /// Checks whose statement involves the extension (and so `s` and `f`).
    fn uses_extension(self) -> bool {
        !matches!(self, CheckName::LemmaSums | CheckName::GhostIdentities | CheckName::GIntegrality)
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = CheckName::ALL.iter().map(|c| c.name()).collect();
            Error::Config(format!("unknown check {s:?}; known checks: {}", names.join(", ")))
        })
    }
}

#[derive(Clone, Debug)]
pub struct CheckParams {
    pub p: u32,
    pub s: i64,
    pub f: Option<LaurentSeries>,
    /// Witt length; each check has its own default.
    pub n: Option<usize>,
    /// Working precision; defaults to `4 s p + 16`, scaled for Witt checks.
    pub precision: Option<i64>,
    pub samples: usize,
    pub seed: u64,
    /// Level `n` of the transition map in `find_vanishing_m`.
    pub target_n: usize,
    pub m_max: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub paranoid: bool,
    /// Corrupt one structure polynomial before `ghost_identities` verifies it.
    pub inject_fault: bool,
}

impl CheckParams {
    pub fn new(p: u32, s: i64) -> Self {
        CheckParams {
            p,
            s,
            f: None,
            n: None,
            precision: None,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            target_n: 1,
            m_max: None,
            cache_dir: None,
            paranoid: false,
            inject_fault: false,
        }
    }

    fn extension(&self) -> Result<Arc<ASExtension>> {
        ASExtension::new(self.p, self.s, self.f.clone())
    }

    fn precision_or_default(&self) -> i64 {
        self.precision.unwrap_or_else(|| default_precision(self.p, self.s))
    }

    fn witt_ring(&self, ext: &Arc<ASExtension>, n: usize) -> Result<WittRing> {
        let ring = WittRing::new(ext, n, self.cache_dir.as_deref())?;
        let precision = self.precision.unwrap_or_else(|| {
            let (precision, capped) = witt_precision(self.p, self.s, n);
            if capped {
                log::warn!("precision for W_{n} capped at {precision}");
            }
            precision
        });
        Ok(ring.with_precision(precision))
    }

    fn margin(&self) -> i64 {
        self.s + self.p as i64
    }

    fn main_length(&self) -> usize {
        self.n.unwrap_or_else(|| step3_length(self.p, self.s))
    }

    fn step_length(&self) -> usize {
        self.n.unwrap_or_else(|| (step3_length(self.p, self.s) + 1).min(max_length(self.p)).max(2))
    }
}

/// What a check produced, before timing and parameters are attached.
struct Outcome {
    ok: bool,
    summary: String,
    details: Value,
    counterexample: Option<Value>,
    sampled: bool,
    n: Option<usize>,
    precision: Option<i64>,
    samples: Option<usize>,
}

impl Outcome {
    fn exact(ok: bool, summary: String, details: Value, counterexample: Option<Value>) -> Self {
        Outcome { ok, summary, details, counterexample, sampled: false, n: None, precision: None, samples: None }
    }
}

/// A failing sample: its inputs and what went wrong.
struct Failure {
    inputs: Value,
    reason: String,
}

type Sample = Option<Failure>;

/// Turn the result of a sample body into a sample verdict. Contract
/// violations are failures of the statement under test; precision loss is an
/// error carrying the offending inputs.
fn judge(inputs: Value, body: Result<Option<String>>) -> Result<Sample> {
    match body {
        Ok(None) => Ok(None),
        Ok(Some(reason)) => Ok(Some(Failure { inputs, reason })),
        Err(Error::ContractViolation(reason)) => Ok(Some(Failure { inputs, reason })),
        Err(Error::PrecisionExhausted(msg)) => Err(Error::PrecisionExhausted(format!("{msg}; inputs {inputs}"))),
        Err(e) => Err(e),
    }
}

fn element_json(x: &ExtElement) -> Value {
    serde_json::to_value(x.coeffs()).expect("serializable")
}

fn counterexample(master: u64, index: usize, failure: &Failure) -> Value {
    json!({
        "sample": index,
        "master_seed": master,
        "sample_seed": sample_seed(master, index as u64),
        "inputs": failure.inputs,
        "reason": failure.reason,
    })
}

struct Tally {
    count: usize,
    failures: usize,
    first: Option<Value>,
}

/// Run `body(seed)` for `count` samples and count failures.
fn run_samples<F>(count: usize, master: u64, body: F) -> Result<Tally>
where
    F: Fn(u64) -> Result<Sample> + Sync + Send,
{
    let results = map_samples(0, count, master, |_, seed| body(seed));
    let mut tally = Tally { count, failures: 0, first: None };
    for (index, result) in results.into_iter().enumerate() {
        if let Some(failure) = result? {
            tally.failures += 1;
            tally.first.get_or_insert_with(|| counterexample(master, index, &failure));
        }
    }
    Ok(tally)
}

/// `Ok(true)` if every coefficient of `x` is zero up to at least `t^floor`.
fn certified_zero(x: &ExtElement, floor: i64) -> Result<bool> {
    for (i, c) in x.coeffs().iter().enumerate() {
        match c.valuation() {
            Valuation::Infinite => {}
            Valuation::Exact(_) => return Ok(false),
            Valuation::AtLeast(b) if b >= floor => {}
            Valuation::AtLeast(b) => {
                return Err(Error::PrecisionExhausted(format!("coefficient {i} is zero only up to t^{b}")));
            }
        }
    }
    Ok(true)
}

fn certify(v: Valuation, bound: i64, what: &str) -> Result<bool> {
    v.certify_at_least(bound)
        .ok_or_else(|| Error::PrecisionExhausted(format!("{what} has v_L {v}, cannot compare with {bound}")))
}

fn lemma_sums(params: &CheckParams) -> Result<Outcome> {
    let p = check_prime(params.p as u64)?;
    let mut values = Vec::new();
    let mut bad = None;
    for k in 0..p {
        let v = power_sum_mod_p(k, p)?.value();
        let expected = if k == p - 1 { p - 1 } else { 0 };
        if v != expected && bad.is_none() {
            bad = Some(json!({"k": k, "value": v, "expected": expected}));
        }
        values.push(v);
    }
    let summary = format!("sum_(a<p) a^k mod {p} for k = 0..{}: {:?}", p - 1, values);
    Ok(Outcome::exact(bad.is_none(), summary, json!({"values": values}), bad))
}

fn ghost_identities(params: &CheckParams) -> Result<Outcome> {
    let p = check_prime(params.p as u64)?;
    let n = params.n.unwrap_or_else(|| max_length(p));
    wittpoly::check_budget(p, n)?;
    let cache = params.cache_dir.as_deref();
    let mut failure = None;
    let mut terms = serde_json::Map::new();
    for kind in WittKind::ALL {
        for len in 1..=n {
            let structure = wittpoly::structure(p, len, kind, cache, params.paranoid)?;
            let structure = if params.inject_fault && kind == WittKind::Sum && len == n {
                structure.corrupted(params.seed)
            } else {
                (*structure).clone()
            };
            let verdict = structure
                .verify_ghost_identity()
                .and_then(|()| structure.check_sequential_shape())
                .and_then(|()| {
                    if !structure.is_symmetric() {
                        return Err(Error::ContractViolation("not symmetric in X and Y".into()));
                    }
                    if kind == WittKind::Negation && p % 2 == 1 {
                        let nv = structure.polys[0].nvars();
                        if let Some(i) = (0..len).find(|&i| structure.polys[i] != IntPolynomial::var(i, nv).neg()) {
                            return Err(Error::ContractViolation(format!("I_{i} != -X_{i} for odd p")));
                        }
                    }
                    Ok(())
                });
            if let Err(e) = verdict {
                failure.get_or_insert_with(|| {
                    json!({"kind": kind, "n": len, "inject_fault": params.inject_fault, "seed": params.seed, "reason": e.to_string()})
                });
            }
            if len == n {
                terms.insert(kind.name().into(), json!(structure.polys.iter().map(IntPolynomial::len).collect::<Vec<_>>()));
            }
        }
    }
    let summary = format!("ghost identities, integrality, symmetry for sum/product/negation, n = 1..{n}");
    let mut out = Outcome::exact(failure.is_none(), summary, json!({"terms": terms}), failure);
    out.n = Some(n);
    Ok(out)
}

fn g_integrality(params: &CheckParams) -> Result<Outcome> {
    let p = check_prime(params.p as u64)?;
    if p > G_MAX_PRIME {
        return Err(Error::BudgetExceeded { p, n: 1, max: 0 });
    }
    let g = match g_polynomial(p) {
        Ok(g) => g,
        Err(e @ (Error::ContractViolation(_) | Error::NotDivisible(_))) => {
            let cx = json!({"p": p, "reason": e.to_string()});
            return Ok(Outcome::exact(false, "G is not integral".into(), Value::Null, Some(cx)));
        }
        Err(e) => return Err(e),
    };
    let nv = p as usize;
    let cyclic: Vec<usize> = (0..nv).map(|k| (k + 1) % nv).collect();
    let mut problems = Vec::new();
    if g.rename(&cyclic, nv) != g {
        problems.push("G is not invariant under cyclic shift".to_string());
    }
    if p == 2 && g != IntPolynomial::var(0, 2).mul(&IntPolynomial::var(1, 2)) {
        problems.push(format!("G(p=2) = {g}, expected X_1 X_2"));
    }
    let summary = format!("p·G = (ΣX)^p - ΣX^p over ℤ; {} terms, all integral", g.len());
    let details = json!({"terms": g.len(), "degree": g.total_degree()});
    let cx = problems.first().map(|r| json!({"p": p, "reason": r}));
    Ok(Outcome::exact(problems.is_empty(), summary, details, cx))
}

fn sampled(mut out: Outcome, n: Option<usize>, precision: i64, samples: usize) -> Outcome {
    out.sampled = true;
    out.n = n;
    out.precision = Some(precision);
    out.samples = Some(samples);
    out
}

fn tally_outcome(label: &str, tallies: &[(&str, &Tally)], extra: Value) -> Outcome {
    let failures: usize = tallies.iter().map(|(_, t)| t.failures).sum();
    let parts: Vec<String> = tallies.iter().map(|(name, t)| format!("{name} {}/{}", t.count - t.failures, t.count)).collect();
    let mut details = serde_json::Map::new();
    for (name, t) in tallies {
        details.insert((*name).into(), json!({"samples": t.count, "failures": t.failures}));
    }
    if let Value::Object(extra) = extra {
        details.extend(extra);
    }
    let first = tallies.iter().find_map(|(_, t)| t.first.clone());
    Outcome::exact(failures == 0, format!("{label}: {}", parts.join(", ")), Value::Object(details), first)
}

fn trace_consistency(params: &CheckParams) -> Result<Outcome> {
    let ext = params.extension()?;
    let (precision, margin) = (params.precision_or_default(), params.margin());
    let tally = run_samples(params.samples, params.seed, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ExtElement::random_integral(&ext, precision, margin, false, &mut rng)?;
        let body = (|| {
            let direct = x.trace_direct()?;
            let formula = x.trace_formula();
            if !direct.agrees_with(&formula) {
                return Ok(Some(format!("Σσ^j(x) = {direct} but -a_(p-1) = {formula}")));
            }
            if !certify(direct.valuation(), ext.trace_image_threshold(), "tr(x)")? {
                return Ok(Some(format!("tr(x) = {direct} below the trace image of O_L")));
            }
            Ok(None)
        })();
        judge(element_json(&x), body)
    })?;
    let out = tally_outcome("tr(x) direct = formula", &[("agree", &tally)], json!({}));
    Ok(sampled(out, None, precision, params.samples))
}

fn prop_integral_ring(params: &CheckParams) -> Result<Outcome> {
    let ext = params.extension()?;
    let (precision, spread) = (params.precision_or_default(), params.margin());
    let results = map_samples(0, params.samples, params.seed, |_, seed| -> Result<(bool, Sample)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // half straddle the integrality thresholds, half are drawn from O_L
        let x = if rng.gen_bool(0.5) {
            ExtElement::random_element(&ext, precision, spread, &mut rng)?
        } else {
            ExtElement::random_integral(&ext, precision, spread, false, &mut rng)?
        };
        let member = x.in_integral_ring()?;
        let body = certify(x.valuation(), 0, "x").map(|nonneg| {
            (member != nonneg).then(|| format!("in_integral_ring = {member} but v_L(x) = {}", x.valuation()))
        });
        Ok((member, judge(element_json(&x), body)?))
    });
    let mut tally = Tally { count: params.samples, failures: 0, first: None };
    let mut integral = 0;
    for (index, result) in results.into_iter().enumerate() {
        let (member, sample) = result?;
        integral += member as usize;
        if let Some(failure) = sample {
            tally.failures += 1;
            tally.first.get_or_insert_with(|| counterexample(params.seed, index, &failure));
        }
    }
    let extra = json!({"integral": integral, "not_integral": params.samples - integral});
    let mut out = tally_outcome("x ∈ O_L ⟺ v_L(x) ≥ 0", &[("equivalent", &tally)], extra);
    out.summary.push_str(&format!(" ({integral} integral)"));
    Ok(sampled(out, None, precision, params.samples))
}

/// Random trace-zero `x` with `v_K(a_i) >= ceil((i+1)s/p)` for `i <= p-2`.
fn random_described<R: Rng>(ext: &Arc<ASExtension>, precision: i64, margin: i64, rng: &mut R) -> Result<ExtElement> {
    let pu = ext.p() as usize;
    let a = (0..pu)
        .map(|i| {
            if i == pu - 1 || rng.gen_ratio(1, 5) {
                return Ok(LaurentSeries::zero_to(ext.p(), precision));
            }
            let lo = ext.coboundary_threshold(i);
            LaurentSeries::random(ext.p(), lo, lo + margin, precision, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    ExtElement::new(ext, a)
}

/// `y = coboundary_solve(x)` lies in `O_L` and `σ(y) - y = x` holds.
fn solved_in_integers(x: &ExtElement) -> Result<Option<String>> {
    let y = x.coboundary_solve()?;
    if !y.in_integral_ring()? {
        return Ok(Some(format!("solution y = {y} is not in O_L")));
    }
    if !certified_zero(&y.galois_apply(1).sub(&y).sub(x), x.ext().s() + 1)? {
        return Ok(Some(format!("σ(y) - y != x for y = {y}")));
    }
    Ok(None)
}

fn prop_h1(params: &CheckParams) -> Result<Outcome> {
    let ext = params.extension()?;
    let (precision, margin) = (params.precision_or_default(), params.margin());
    let forward = run_samples(params.samples, params.seed, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = ExtElement::random_integral(&ext, precision, margin, false, &mut rng)?;
        let x = y.galois_apply(1).sub(&y);
        let body = (|| {
            if !x.in_integral_ring()? {
                return Ok(Some("σ(y) - y is not in O_L".into()));
            }
            if !x.is_trace_zero()? {
                return Ok(Some("σ(y) - y is not trace-zero".into()));
            }
            if !x.coboundary_test()? {
                return Ok(Some(format!("σ(y) - y = {x} violates v_K(a_i) ≥ ⌈(i+1)s/p⌉")));
            }
            Ok(None)
        })();
        judge(json!({"y": element_json(&y)}), body)
    })?;
    let backward = run_samples(params.samples, !params.seed, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_described(&ext, precision, margin, &mut rng)?;
        judge(json!({"x": element_json(&x)}), solved_in_integers(&x))
    })?;
    let out = tally_outcome("(σ-1)O_L description", &[("forward", &forward), ("backward", &backward)], json!({}));
    Ok(sampled(out, None, precision, params.samples))
}

fn cor_bound(params: &CheckParams) -> Result<Outcome> {
    let ext = params.extension()?;
    let (precision, margin) = (params.precision_or_default(), params.margin());
    let (p, s) = (params.p as i64, params.s);
    let valuations: Vec<i64> = (s..=s + margin).filter(|v| (v - s).rem_euclid(p) != 0).collect();
    let tally = run_samples(params.samples, params.seed, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = valuations[rng.gen_range(0..valuations.len())];
        let x = ExtElement::random_trace_zero_with_valuation(&ext, v, precision, margin, &mut rng)?;
        let body = (|| {
            if !x.h1_class_is_zero()? {
                return Ok(Some(format!("v_L(x) = {v} >= s but the class is nonzero")));
            }
            solved_in_integers(&x)
        })();
        judge(json!({"x": element_json(&x), "v_L": v}), body)
    })?;
    let one = ExtElement::one(&ext);
    let witness_zero = one.h1_class_is_zero()?;
    let witness_v = one.valuation().exact().expect("v_L(1) = 0");
    let witness_ok = !witness_zero && witness_v < s;
    let extra = json!({"witness": {"x": "1", "v_L": witness_v, "class_zero": witness_zero}});
    let mut out = tally_outcome("v_L(x) ≥ s ⟹ class zero", &[("class_zero", &tally)], extra);
    out.summary.push_str(&format!("; witness x = 1: v_L = {witness_v}, class nonzero = {}", !witness_zero));
    if !witness_ok {
        out.ok = false;
        out.counterexample
            .get_or_insert_with(|| json!({"inputs": {"x": "1"}, "reason": "class of 1 is zero or v_L(1) > s - 1"}));
    }
    Ok(sampled(out, None, precision, params.samples))
}

fn lemma_f_valuation(params: &CheckParams) -> Result<Outcome> {
    let ext = params.extension()?;
    let (precision, margin) = (params.precision_or_default(), params.margin());
    let vmax = 2 * params.s + 5;
    let tally = run_samples(params.samples, params.seed, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = rng.gen_range(0..=vmax);
        let x = ExtElement::random_with_valuation(&ext, v, precision, margin, &mut rng)?;
        let body = (|| {
            let fx = f_map(&x)?;
            if fx.valuation() != Valuation::Exact(v) {
                return Ok(Some(format!("v_K(F(x)) = {} but v_L(x) = {v}", fx.valuation())));
            }
            let fsx = f_map(&x.galois_apply(1))?;
            if !fsx.agrees_with(&fx) {
                return Ok(Some(format!("F(σx) = {fsx} differs from F(x) = {fx}")));
            }
            Ok(None)
        })();
        judge(json!({"x": element_json(&x), "v_L": v}), body)
    })?;
    let out = tally_outcome(&format!("v_K(F(x)) = v_L(x), v_L(x) ∈ [0, {vmax}]"), &[("equal", &tally)], json!({}));
    Ok(sampled(out, None, precision, params.samples))
}

fn h1_dimension(params: &CheckParams) -> Result<Outcome> {
    let ext = params.extension()?;
    let (p, s) = (params.p as i64, params.s);
    let (dim, basis) = h1_closed_form(params.p, s)?;
    let middle = 2 * s * p + p;
    let values = [middle - p, middle, middle + p]
        .into_iter()
        .map(|m| h1_truncated_defect(&ext, m))
        .collect::<Result<Vec<_>>>()?;
    let stable = values.iter().all(|&v| v == values[1]);
    let ok = stable && values[1] == dim && basis.len() == dim;
    let basis: Vec<String> = basis.iter().map(ToString::to_string).collect();
    let summary = format!("formula {dim}, oracle {:?} at N = {}, {}, {}", values, middle - p, middle, middle + p);
    let details = json!({"formula": dim, "oracle": values, "oracle_N": middle, "basis": basis});
    let cx = (!ok).then(|| json!({"formula": dim, "oracle": values, "reason": "oracle unstable or unequal to formula"}));
    let mut out = Outcome::exact(ok, summary, details, cx);
    out.precision = Some(middle);
    Ok(out)
}

/// Step-1 and Step-2 bounds for a trace-zero vector `w` of length `n`.
fn step_bound_violation(w: &[ExtElement], p: u32, s: i64, with_step1: bool) -> Result<Option<String>> {
    let n = w.len();
    if with_step1 {
        let b1 = step_bound(p, s, 2).ceil().to_integer();
        for (l, x) in w.iter().enumerate().take(n.saturating_sub(1)) {
            if !certify(x.valuation(), b1, "x_l")? {
                return Ok(Some(format!("v_L(x_{l}) = {} < {b1}", x.valuation())));
            }
        }
    }
    for i in 2..=n {
        let b = step_bound(p, s, i).ceil().to_integer();
        let x = &w[n - i];
        if !certify(x.valuation(), b, "x_(n-i)")? {
            return Ok(Some(format!("v_L(x_{}) = {} < ⌈bound({i})⌉ = {b}", n - i, x.valuation())));
        }
    }
    Ok(None)
}

/// Unsolvable trace equations seen while sampling, by level.
fn failure_levels(failures: &[(usize, (usize, Valuation))], n: usize) -> Value {
    let mut by_level = vec![0usize; n];
    let mut max_v: Vec<Option<i64>> = vec![None; n];
    for (_, (level, v)) in failures {
        by_level[*level] += 1;
        if let Some(v) = v.exact() {
            max_v[*level] = Some(max_v[*level].map_or(v, |m: i64| m.max(v)));
        }
    }
    json!({"unsolvable_by_level": by_level, "max_unsolvable_v_K": max_v})
}

type Attempt = std::result::Result<Sample, (usize, Valuation)>;

fn generate_and_judge<F>(ring: &WittRing, seed: u64, judge_vector: F) -> Result<Attempt>
where
    F: Fn(&[ExtElement]) -> Result<Option<String>>,
{
    match ring.gen_trace_zero(None, seed)? {
        TraceZeroOutcome::Solved(w) => {
            let comps = w.components();
            let body = match ring.is_trace_zero(&w) {
                Ok(true) => judge_vector(comps),
                Ok(false) => Ok(Some("witt_trace(w) != 0".into())),
                Err(e) => Err(e),
            };
            let inputs = json!(comps.iter().map(element_json).collect::<Vec<_>>());
            Ok(Ok(judge(inputs, body)?))
        }
        TraceZeroOutcome::Unsolvable { level, valuation, .. } => Ok(Err((level, valuation))),
    }
}

fn max_attempts(samples: usize) -> usize {
    20 * samples + 20
}

fn main_theorem(params: &CheckParams) -> Result<Outcome> {
    let ext = params.extension()?;
    let (p, s) = (params.p, params.s);
    let m = step3_length(p, s);
    let n = params.main_length();
    if n < m {
        return Err(Error::Config(format!("main_theorem needs n >= step3_length = {m}, got {n}")));
    }
    wittpoly::check_budget(p, n)?;
    let ring = params.witt_ring(&ext, n)?;
    let run = first_successes(params.samples, max_attempts(params.samples), params.seed, |_, seed| {
        generate_and_judge(&ring, seed, |w| {
            if let Some(reason) = step_bound_violation(w, p, s, false)? {
                return Ok(Some(reason));
            }
            if !certify(w[0].valuation(), s, "x_0")? {
                return Ok(Some(format!("v_L(x_0) = {} < s", w[0].valuation())));
            }
            if !w[0].h1_class_is_zero()? {
                return Ok(Some("class of x_0 in H^1(G, O_L) is nonzero".into()));
            }
            Ok(None)
        })
    })?;
    // n = 1: the trace-zero element 1 has a nonzero class
    let one = ExtElement::one(&ext);
    let witness_solved = matches!(params.witt_ring(&ext, 1)?.gen_trace_zero(Some(one.clone()), 0)?, TraceZeroOutcome::Solved(_));
    let witness_nonzero = !one.h1_class_is_zero()?;

    let mut failures = 0;
    let mut first = None;
    for (index, sample) in &run.successes {
        if let Some(f) = sample {
            failures += 1;
            first.get_or_insert_with(|| counterexample(params.seed, *index, f));
        }
    }
    let got = run.successes.len();
    if got < params.samples {
        first.get_or_insert_with(|| {
            json!({"master_seed": params.seed, "attempts": run.attempts, "reason": format!("sampling inconclusive: {got} of {} trace-zero vectors", params.samples)})
        });
    }
    if !(witness_solved && witness_nonzero) {
        first.get_or_insert_with(|| json!({"inputs": {"n": 1, "x_0": "1"}, "reason": "x = 1 is not a trace-zero vector with nonzero class"}));
    }
    let ok = failures == 0 && got == params.samples && witness_solved && witness_nonzero;
    let mut details = failure_levels(&run.failures, n);
    details["step3_length"] = json!(m);
    details["attempts"] = json!(run.attempts);
    details["trace_zero_vectors"] = json!(got);
    details["failing_vectors"] = json!(failures);
    details["witness_n1"] = json!({"x_0": "1", "trace_zero": witness_solved, "class_nonzero": witness_nonzero});
    let summary = format!(
        "{}/{got} trace-zero W_{n} vectors with v_L(x_0) ≥ {s} and zero class ({} attempts); n = 1 witness x = 1 class nonzero = {witness_nonzero}",
        got - failures,
        run.attempts
    );
    let out = Outcome::exact(ok, summary, details, first);
    Ok(sampled(out, Some(n), ring.precision(), params.samples))
}

fn step_bounds_sampled(params: &CheckParams) -> Result<Outcome> {
    let ext = params.extension()?;
    let (p, s) = (params.p, params.s);
    let n = params.step_length();
    if n < 2 {
        return Err(Error::Config(format!("step bounds need n >= 2, got {n}")));
    }
    wittpoly::check_budget(p, n)?;
    let ring = params.witt_ring(&ext, n)?;
    let run = first_successes(params.samples, max_attempts(params.samples), params.seed, |_, seed| {
        generate_and_judge(&ring, seed, |w| step_bound_violation(w, p, s, true))
    })?;
    let mut failures = 0;
    let mut first = None;
    for (index, sample) in &run.successes {
        if let Some(f) = sample {
            failures += 1;
            first.get_or_insert_with(|| counterexample(params.seed, *index, f));
        }
    }
    let got = run.successes.len();
    if got < params.samples {
        first.get_or_insert_with(|| json!({"master_seed": params.seed, "attempts": run.attempts, "reason": "sampling inconclusive"}));
    }
    let bounds: Vec<String> = (2..=n).map(|i| step_bound(p, s, i).to_string()).collect();
    let mut details = failure_levels(&run.failures, n);
    details["bounds"] = json!(bounds);
    details["attempts"] = json!(run.attempts);
    let summary = format!(
        "{}/{got} trace-zero W_{n} vectors meet v_L(x_l) ≥ s(p-1)/p and v_L(x_(n-i)) ≥ ⌈bound(i)⌉, 2 ≤ i ≤ n",
        got - failures
    );
    let out = Outcome::exact(failures == 0 && got == params.samples, summary, details, first);
    Ok(sampled(out, Some(n), ring.precision(), params.samples))
}

/// One length `m` of a [`find_vanishing_m`] scan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingLevel {
    pub m: usize,
    pub samples: usize,
    pub nonzero_classes: usize,
    pub attempts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VanishingRecord {
    pub theoretical_m: usize,
    pub empirical_m: Option<usize>,
    pub levels: Vec<VanishingLevel>,
}

impl VanishingRecord {
    pub fn holds(&self) -> bool {
        self.empirical_m.is_some_and(|m| m <= self.theoretical_m)
    }
}

/// Least length `m` such that every sampled trace-zero vector in `W_m(O_L)`
/// maps to zero in `H^1(G, W_n(O_L))`. Only `n = 1` is supported, where the
/// class of `x_0` is decided exactly.
pub fn find_vanishing_m(params: &CheckParams, m_max: Option<usize>) -> Result<VanishingRecord> {
    let n = params.target_n;
    if n != 1 {
        return Err(Error::Config(format!("find_vanishing_m decides classes at level n = 1 only, got n = {n}")));
    }
    let ext = params.extension()?;
    let theoretical_m = step3_length(params.p, params.s) + n - 1;
    let m_max = m_max.unwrap_or(theoretical_m);
    if m_max < theoretical_m {
        return Err(Error::Config(format!("m_max = {m_max} is below the theoretical bound {theoretical_m}")));
    }
    wittpoly::check_budget(params.p, m_max)?;
    let mut levels = Vec::new();
    for m in 1..=m_max {
        let ring = params.witt_ring(&ext, m)?;
        let master = sample_seed(params.seed, 1_000_000 + m as u64);
        let run = first_successes(params.samples, max_attempts(params.samples), master, |_, seed| {
            Ok(match ring.gen_trace_zero(None, seed)? {
                TraceZeroOutcome::Solved(w) => Ok(w.component(0).h1_class_is_zero()?),
                TraceZeroOutcome::Unsolvable { level, .. } => Err(level),
            })
        })?;
        if run.successes.len() < params.samples {
            return Err(Error::SamplingInconclusive(format!(
                "{} of {} trace-zero vectors of length {m} after {} attempts",
                run.successes.len(),
                params.samples,
                run.attempts
            )));
        }
        let nonzero = run.successes.iter().filter(|(_, zero)| !zero).count();
        levels.push(VanishingLevel { m, samples: params.samples, nonzero_classes: nonzero, attempts: run.attempts });
    }
    // least m from which on no sampled class survives
    let empirical_m = (1..=m_max).find(|&m| levels[m - 1..].iter().all(|l| l.nonzero_classes == 0));
    Ok(VanishingRecord { theoretical_m, empirical_m, levels })
}

fn vanishing_check(params: &CheckParams) -> Result<Outcome> {
    let precision = params.precision;
    let m_max = params.m_max;
    let out = match find_vanishing_m(params, m_max) {
        Ok(record) => {
            let summary = format!(
                "theoretical M = {}, empirical m = {} (transition to n = {})",
                record.theoretical_m,
                record.empirical_m.map_or_else(|| "none".into(), |m| m.to_string()),
                params.target_n
            );
            let cx = (!record.holds()).then(|| json!({"master_seed": params.seed, "record": record, "reason": "empirical m exceeds theoretical M"}));
            let details = serde_json::to_value(&record).expect("serializable");
            Outcome::exact(record.holds(), summary, details, cx)
        }
        Err(Error::SamplingInconclusive(msg)) => {
            let cx = json!({"master_seed": params.seed, "reason": format!("sampling inconclusive: {msg}")});
            Outcome::exact(false, format!("sampling inconclusive: {msg}"), Value::Null, Some(cx))
        }
        Err(e) => return Err(e),
    };
    let mut out = sampled(out, Some(params.target_n), 0, params.samples);
    out.precision = precision;
    Ok(out)
}

/// Whether `check` can run at these parameters within the Witt budget.
pub fn applicable(check: CheckName, params: &CheckParams) -> bool {
    let p = params.p;
    let budget = max_length(p);
    match check {
        CheckName::GIntegrality => p <= G_MAX_PRIME,
        CheckName::GhostIdentities => params.n.is_none_or(|n| n <= budget),
        CheckName::MainTheorem => params.main_length() <= budget,
        CheckName::StepBoundsSampled => params.step_length() <= budget && params.step_length() >= 2,
        CheckName::FindVanishingM => {
            params.target_n == 1
                && params.m_max.unwrap_or_else(|| step3_length(p, params.s)) <= budget
                && step3_length(p, params.s) <= budget
        }
        _ => true,
    }
}

/// Run one check.
pub fn run_check(check: CheckName, params: &CheckParams) -> Result<CheckReport> {
    let start = Instant::now();
    let out = match check {
        CheckName::LemmaSums => lemma_sums(params),
        CheckName::GhostIdentities => ghost_identities(params),
        CheckName::GIntegrality => g_integrality(params),
        CheckName::TraceConsistency => trace_consistency(params),
        CheckName::PropIntegralRing => prop_integral_ring(params),
        CheckName::PropH1 => prop_h1(params),
        CheckName::CorBound => cor_bound(params),
        CheckName::LemmaFValuation => lemma_f_valuation(params),
        CheckName::H1Dimension => h1_dimension(params),
        CheckName::MainTheorem => main_theorem(params),
        CheckName::StepBoundsSampled => step_bounds_sampled(params),
        CheckName::FindVanishingM => vanishing_check(params),
    }?;
    let uses_ext = check.uses_extension();
    if uses_ext {
        params.extension()?;
    }
    let f = params.f.clone().unwrap_or_else(|| LaurentSeries::monomial(params.p, 1, -params.s));
    Ok(CheckReport {
        check: check.name().to_string(),
        params: ReportParams {
            p: params.p,
            s: uses_ext.then_some(params.s),
            f: uses_ext.then(|| f.to_string()),
            n: out.n,
            precision: out.precision,
            samples: out.samples,
            seed: params.seed,
        },
        verdict: Verdict::from_bool(out.ok),
        sampled: out.sampled,
        summary: out.summary,
        details: out.details,
        counterexample: out.counterexample,
        runtime_ms: start.elapsed().as_millis() as u64,
        tool_version: TOOL_VERSION.to_string(),
    })
}

/// Run every applicable check in name order; inapplicable ones are skipped
/// with a warning.
pub fn run_all(params: &CheckParams) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    for check in CheckName::ALL {
        if applicable(check, params) {
            reports.push(run_check(check, params)?);
        } else {
            log::warn!("skipping {check}: outside the Witt-length budget for p = {}", params.p);
        }
    }
    Ok(reports)
}
