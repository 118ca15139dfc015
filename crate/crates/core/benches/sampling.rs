use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wittlab::extension::{ASExtension, ExtElement};
use wittlab::verify::sampling::map_samples_sequential;
use wittlab::wittring::f_map;

const SAMPLES: usize = 64;

// One lemma_F_valuation-style sample: draw x, evaluate F(x), read off v_K.
fn sample_f(ext: &std::sync::Arc<ASExtension>, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = ExtElement::random_integral(ext, 40, 6, false, &mut rng).unwrap();
    f_map(&x).is_ok()
}

fn bench_sample_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_loop");
    group.sample_size(10);
    for (p, s) in [(2u32, 3i64), (3, 2), (5, 2)] {
        let ext = ASExtension::new(p, s, None).unwrap();
        let id = format!("p{p}_s{s}");
        group.bench_with_input(BenchmarkId::new("sequential", &id), &ext, |b, ext| {
            b.iter(|| map_samples_sequential(0, SAMPLES, 7, |_, seed| sample_f(ext, seed)))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", &id), &ext, |b, ext| {
            b.iter(|| wittlab::verify::sampling::map_samples_parallel(0, SAMPLES, 7, |_, seed| sample_f(ext, seed)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sample_loop);
criterion_main!(benches);
