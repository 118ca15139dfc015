use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Pow;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wittlab::extension::{ASExtension, ExtElement};
use wittlab::wittpoly::{cache_load, cache_store, WittKind, WittStructure};
use wittlab::wittring::{f_map, WittRing, WittVector};

const PRECISION: i64 = 30;

fn ring(p: u32, s: i64, n: usize) -> WittRing {
    let ext = ASExtension::new(p, s, None).unwrap();
    WittRing::new(&ext, n, None).unwrap().with_precision(PRECISION)
}

fn vectors(r: &WittRing, seed: u64, k: usize) -> Vec<WittVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k).map(|_| r.random_vector(&mut rng).unwrap()).collect()
}

/// Ghost component computed directly: `Σ_j p^j x_j^(p^(i-j))`.
fn ghost(p: u32, x: &[BigInt], i: usize) -> BigInt {
    (0..=i).map(|j| BigInt::from(p).pow(j as u32) * Pow::pow(&x[j], p.pow((i - j) as u32))).sum()
}

fn field() -> impl Strategy<Value = (u32, i64)> {
    prop_oneof![Just((2u32, 1i64)), Just((2, 3)), Just((3, 1)), Just((3, 2))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sum_and_product_respect_ghost_components(
        p in prop_oneof![Just(2u32), Just(3), Just(5)],
        xs in prop::collection::vec(-20i64..20, 6),
    ) {
        let n = 2;
        let x: Vec<BigInt> = xs[..n].iter().map(|&v| BigInt::from(v)).collect();
        let y: Vec<BigInt> = xs[3..3 + n].iter().map(|&v| BigInt::from(v)).collect();
        let point: Vec<BigInt> = x.iter().chain(&y).cloned().collect();
        let sum = WittStructure::generate(p, n, WittKind::Sum).unwrap();
        let prod = WittStructure::generate(p, n, WittKind::Product).unwrap();
        let s: Vec<BigInt> = sum.polys.iter().map(|q| q.eval_int(&point)).collect();
        let m: Vec<BigInt> = prod.polys.iter().map(|q| q.eval_int(&point)).collect();
        for i in 0..n {
            prop_assert_eq!(ghost(p, &s, i), ghost(p, &x, i) + ghost(p, &y, i));
            prop_assert_eq!(ghost(p, &m, i), ghost(p, &x, i) * ghost(p, &y, i));
        }
    }

    #[test]
    fn addition_is_an_abelian_group((p, s) in field(), seed in any::<u64>()) {
        let r = ring(p, s, 2);
        let v = vectors(&r, seed, 3);
        let (a, b, c) = (&v[0], &v[1], &v[2]);
        prop_assert!(r.add(a, b).unwrap().agrees_with(&r.add(b, a).unwrap()));
        let left = r.add(&r.add(a, b).unwrap(), c).unwrap();
        let right = r.add(a, &r.add(b, c).unwrap()).unwrap();
        prop_assert!(left.agrees_with(&right));
        prop_assert!(r.add(a, &r.zero()).unwrap().agrees_with(a));
        prop_assert!(r.sub(a, a).unwrap().is_zero_to_precision());
    }

    #[test]
    fn multiplication_commutes_and_distributes((p, s) in field(), seed in any::<u64>()) {
        let r = ring(p, s, 2);
        let v = vectors(&r, seed, 3);
        let (a, b, c) = (&v[0], &v[1], &v[2]);
        prop_assert!(r.mul(a, b).unwrap().agrees_with(&r.mul(b, a).unwrap()));
        let left = r.mul(a, &r.add(b, c).unwrap()).unwrap();
        let right = r.add(&r.mul(a, b).unwrap(), &r.mul(a, c).unwrap()).unwrap();
        prop_assert!(left.agrees_with(&right));
    }

    #[test]
    fn length_one_is_the_ring_itself((p, s) in field(), seed in any::<u64>()) {
        let r = ring(p, s, 1);
        let v = vectors(&r, seed, 2);
        let (x, y) = (v[0].component(0), v[1].component(0));
        prop_assert!(r.add(&v[0], &v[1]).unwrap().component(0).agrees_with(&x.add(y)));
        prop_assert!(r.mul(&v[0], &v[1]).unwrap().component(0).agrees_with(&x.mul(y)));
        let tr = r.trace(&v[0]).unwrap().component(0).as_base().unwrap();
        prop_assert!(tr.agrees_with(&x.trace_formula()));
    }

    #[test]
    fn truncation_is_a_homomorphism((p, s) in field(), seed in any::<u64>()) {
        let r2 = ring(p, s, 2);
        let r1 = ring(p, s, 1);
        let v = vectors(&r2, seed, 2);
        let (a, b) = (&v[0], &v[1]);
        let t = |w: &WittVector| w.truncate(1).unwrap();
        prop_assert!(t(&r2.add(a, b).unwrap()).agrees_with(&r1.add(&t(a), &t(b)).unwrap()));
        prop_assert!(t(&r2.mul(a, b).unwrap()).agrees_with(&r1.mul(&t(a), &t(b)).unwrap()));
    }

    #[test]
    fn coboundaries_have_zero_trace((p, s) in field(), seed in any::<u64>()) {
        let r = ring(p, s, 2);
        let u = &vectors(&r, seed, 1)[0];
        let d = r.sub(&u.sigma(1), u).unwrap();
        prop_assert!(r.trace(&d).unwrap().is_zero_to_precision());
    }

    #[test]
    fn f_is_galois_invariant((p, s) in field(), seed in any::<u64>()) {
        let ext = ASExtension::new(p, s, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ExtElement::random_integral(&ext, 40, s + 2, false, &mut rng).unwrap();
        prop_assume!(!x.is_zero_to_precision());
        let fx = f_map(&x).unwrap();
        for j in 1..p {
            prop_assert!(f_map(&x.galois_apply(j)).unwrap().agrees_with(&fx));
        }
    }
}

#[test]
fn vectors_round_trip_through_json() {
    let r = ring(3, 2, 2);
    let w = &vectors(&r, 11, 1)[0];
    let back: WittVector = serde_json::from_str(&serde_json::to_string(w).unwrap()).unwrap();
    assert!(back.agrees_with(w));
}

#[test]
fn cache_round_trip_preserves_structures() {
    let dir = tempfile::tempdir().unwrap();
    for kind in WittKind::ALL {
        let s = WittStructure::generate(3, 3, kind).unwrap();
        cache_store(dir.path(), &s).unwrap();
        assert_eq!(cache_load(dir.path(), 3, 3, kind, true).unwrap(), s);
    }
}

#[test]
fn rings_share_one_extension() {
    let ext = ASExtension::new(2, 3, None).unwrap();
    let r = WittRing::new(&ext, 2, None).unwrap();
    assert!(Arc::ptr_eq(r.ext(), &ext));
}
