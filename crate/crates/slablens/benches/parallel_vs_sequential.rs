//! Benchmarks comparing the data-parallel execution mode against the
//! sequential fallback on the three hot paths: the dissipation
//! quadrature, the four-term upper-bound chain, and the randomized
//! lemma sampler. With the `parallel` feature disabled both modes run
//! the same sequential code, so the comparison also measures the
//! dispatch overhead of the parallel wrappers.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slablens::bounds::{lemma_suite, upper_bound_chain, LemmaPlan};
use slablens::dissipation::{DissipationOptions, DissipationSolver};
use slablens::par::ExecMode;
use slablens::slab::SlabConfig;
use slablens::source::Source;

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

/// The bounded-regime rectangle geometry the verification suites use.
fn fixture() -> (SlabConfig, Source) {
    let source = Source::rectangle(1.0, 6.0, 6.0, 1.0, 1.0).expect("valid source");
    let beta = 0.5;
    let tau = (beta + 2.0) / (beta + 1.0);
    let a = source.near_edge() / tau;
    let slab = SlabConfig::new(a, 1.0, beta, 0.25 * a).expect("valid slab");
    (slab, source)
}

fn bench_dissipation(c: &mut Criterion) {
    let (slab, source) = fixture();
    let solver = DissipationSolver::new(slab, source).expect("solver");
    let opts = DissipationOptions::default();
    let mut group = c.benchmark_group("dissipation_evaluate");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                let result = solver.evaluate(1e-8, &opts, mode).expect("evaluates");
                assert!(result.converged);
                result.ln_value
            })
        });
    }
    group.finish();
}

fn bench_bound_chain(c: &mut Criterion) {
    let (slab, source) = fixture();
    let mut group = c.benchmark_group("upper_bound_chain");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                upper_bound_chain(&slab, &source, 1e-8, mode)
                    .expect("chain applies")
                    .ln_total
            })
        });
    }
    group.finish();
}

fn bench_lemma_sampler(c: &mut Criterion) {
    let (slab, source) = fixture();
    let mut group = c.benchmark_group("lemma_suite_100_samples");
    group.sample_size(20);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            let plan = LemmaPlan {
                samples_per_combo: 100,
                mode,
                ..LemmaPlan::default()
            };
            b.iter(|| {
                let report = lemma_suite(&slab, &source, &plan).expect("suite runs");
                assert!(report.pass);
                report.combos
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_dissipation, bench_bound_chain, bench_lemma_sampler);
criterion_main!(benches);
