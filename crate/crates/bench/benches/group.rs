use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vfac_core::scheme::global_setup;
use vfac_core::{pair, Scalar, SourceElement};

fn primitives(c: &mut Criterion) {
    let gp = global_setup(128).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let k = Scalar::random(&mut rng);
    let g = gp.generator().exp(&Scalar::random(&mut rng));
    let h = gp.hashes().hash_gid(b"bench").unwrap();
    let t = pair(&g, &h);

    c.bench_function("source exp", |b| b.iter(|| g.exp(&k)));
    c.bench_function("source multi-exp x2", |b| {
        b.iter(|| SourceElement::multi_exp(&[(&g, k), (&h, k)]))
    });
    c.bench_function("target exp", |b| b.iter(|| t.exp(&k)));
    c.bench_function("pairing", |b| b.iter(|| pair(&g, &h)));
    c.bench_function("hash to group", |b| b.iter(|| gp.hashes().hash_attribute("aa1:doctor").unwrap()));
}

criterion_group!(benches, primitives);
criterion_main!(benches);
