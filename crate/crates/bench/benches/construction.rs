use criterion::{criterion_group, criterion_main, Criterion};
use num_bigint::BigInt;
use parisian_bench::{half_params, stage_two};
use parisian_core::numerics::{rat, Rational};
use parisian_core::riesz::is_dissociate;
use parisian_core::{audit_stage, build_stages, generate_sequence, omega, LacunarySequence};

fn sequence(c: &mut Criterion) {
    c.bench_function("generate_sequence_depth3", |b| {
        b.iter(|| generate_sequence(&rat(1, 2), &BigInt::from(16), 3).unwrap())
    });
}

fn stages(c: &mut Criterion) {
    let params = half_params(2);
    c.bench_function("build_stages_2", |b| b.iter(|| build_stages(&params, 2).unwrap()));
}

fn audit(c: &mut Criterion) {
    let (params, family, mu) = stage_two();
    let finest = Rational::new(BigInt::from(1), params.n_at(2).clone());
    let mut group = c.benchmark_group("audit");
    group.sample_size(10);
    group.bench_function("stage2_three_exponents", |b| {
        b.iter(|| audit_stage(&params, &family, &mu, &[rat(1, 10), rat(1, 4), rat(2, 5)], &finest).unwrap())
    });
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let terms: Vec<u64> = (0..12).map(|j| 3u64.pow(j)).collect();
    let seq = LacunarySequence::from_u64(&terms).unwrap();
    c.bench_function("omega_depth12", |b| b.iter(|| omega(&seq, 12).unwrap()));
    let close = LacunarySequence::from_u64(&[1, 2, 3, 5, 8, 13, 21, 34, 55, 89]).unwrap();
    c.bench_function("dissociate_bruteforce_depth10", |b| b.iter(|| is_dissociate(&close, 10).unwrap()));
}

criterion_group!(benches, sequence, stages, audit, spectrum);
criterion_main!(benches);
