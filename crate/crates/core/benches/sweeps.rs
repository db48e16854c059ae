//! Parallel against sequential evaluation of independent cells.
//!
//! With `--no-default-features` both variants run sequentially, which gives
//! the baseline for the parallel build.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use funcspace_core::corpus::{generate_corpus, CorpusKind, CorpusParams};
use funcspace_core::dyadic::{decompose, square_function};
use funcspace_core::multipliers::{
    infty_operator_norm, make_auxiliary, Auxiliary, GridOperator, MultiplierOperator,
};
use funcspace_core::norms::luxemburg_norm;
use funcspace_core::par;

fn corpus_norms(c: &mut Criterion) {
    let params = CorpusParams {
        j: 12,
        ..Default::default()
    };
    let corpus = generate_corpus(CorpusKind::Mixture, 32, 1, &params).unwrap();
    let norm = |f: &funcspace_core::GridFunction| {
        let s = square_function(&decompose(f));
        luxemburg_norm(f, 2.0).unwrap() + luxemburg_norm(&s, 2.0).unwrap()
    };
    let mut g = c.benchmark_group("corpus_luxemburg_j12");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| black_box(par::map(&corpus, norm)))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| black_box(par::map_sequential(&corpus, norm)))
    });
    g.finish();
}

fn operator_cells(c: &mut Criterion) {
    let j = 10;
    let cells: Vec<(u32, f64)> = (1..=8)
        .flat_map(|k| (3..=8).map(move |e| (k, 2f64.powi(e))))
        .collect();
    let cell = |&(k, lambda): &(u32, f64)| {
        let m = MultiplierOperator::new(make_auxiliary(Auxiliary::Psi).scaled(lambda), j).unwrap();
        infty_operator_norm(
            &[GridOperator::Difference(k), GridOperator::Multiplier(m)],
            j,
        )
        .unwrap()
    };
    let mut g = c.benchmark_group("difference_operator_norms_j10");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| black_box(par::map(&cells, cell))));
    g.bench_function("sequential", |b| {
        b.iter(|| black_box(par::map_sequential(&cells, cell)))
    });
    g.finish();
}

criterion_group!(benches, corpus_norms, operator_cells);
criterion_main!(benches);
