//! Compares the rayon-backed batch entry points against plain sequential
//! iteration on the two batch-heavy workloads: theorem verification over
//! seeded instances and Toeplitz norm tables over window sizes.
//!
//! `cargo bench` uses the default `parallel` feature; building with
//! `--no-default-features` makes both variants sequential, which measures
//! the overhead of the dispatch layer itself.

use criterion::{criterion_group, criterion_main, Criterion};
use ncpb_core::harness::{check_corollary31, random_instance, Profile};
use ncpb_core::numeric::Tolerance;
use ncpb_core::par;
use ncpb_core::toeplitz::{norm_table, LaurentPoly, ToeplitzElement};

fn verify_one(seed: u64, tol: &Tolerance) -> bool {
    let inst = random_instance(seed, Profile::SimpleB, 3, tol).unwrap();
    check_corollary31(&inst.algebra, &inst.channel, tol)
        .unwrap()
        .antecedent
}

fn instance_batch(c: &mut Criterion) {
    let tol = Tolerance::default();
    let seeds: Vec<u64> = (0..16).collect();
    let mut g = c.benchmark_group("instance-batch");
    g.sample_size(10);
    g.bench_function("data-parallel", |b| {
        b.iter(|| {
            par::map_collect(&seeds, |&s| verify_one(s, &tol))
                .iter()
                .filter(|&&x| x)
                .count()
        })
    });
    g.bench_function("sequential", |b| {
        b.iter(|| seeds.iter().filter(|&&s| verify_one(s, &tol)).count())
    });
    g.finish();
}

fn norm_table_windows(c: &mut Criterion) {
    let f = LaurentPoly::z().add(&LaurentPoly::z_bar());
    let x = ToeplitzElement::toeplitz(f);
    let windows: Vec<usize> = (1..=8).map(|k| 128 * k).collect();
    let mut g = c.benchmark_group("norm-table");
    g.sample_size(10);
    g.bench_function("data-parallel", |b| {
        b.iter(|| norm_table(&x, &windows).unwrap().len())
    });
    g.bench_function("sequential", |b| {
        b.iter(|| {
            windows
                .iter()
                .map(|&n| x.truncated_norm(n).unwrap())
                .fold(0.0, f64::max)
        })
    });
    g.finish();
}

criterion_group!(benches, instance_batch, norm_table_windows);
criterion_main!(benches);
