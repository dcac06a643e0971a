use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use votepriv_bench::{impartial_culture, three_candidate_pair};
use votepriv_core::asymptotics::{
    hist2_delta_closed_form, histc_delta_mixture, majority_delta_exact,
};
use votepriv_core::rational::ratio;
use votepriv_core::{conditional_tables, delta_exact, Mechanism, Rational, VoteDistribution};

fn sweep(c: &mut Criterion) {
    let pi = impartial_culture();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for rule in ["plurality", "borda", "stv", "maximin"] {
        let (winner, score) = three_candidate_pair(rule);
        for n in [12u32, 20] {
            group.bench_with_input(BenchmarkId::new(rule, n), &n, |b, &n| {
                b.iter(|| conditional_tables(&[&winner, &score], &pi, black_box(n)).unwrap())
            });
        }
    }
    group.finish();
}

fn delta(c: &mut Criterion) {
    let one = Rational::from_integer(1.into());
    let mut group = c.benchmark_group("delta_exact");
    let pi = VoteDistribution::new(vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)]).unwrap();
    for n in [20u32, 60] {
        group.bench_with_input(BenchmarkId::new("histogram_c3", n), &n, |b, &n| {
            b.iter(|| delta_exact(&Mechanism::Histogram, &pi, black_box(n), &one).unwrap())
        });
    }
    let two = VoteDistribution::uniform(2).unwrap();
    let majority = Mechanism::alpha_majority(ratio(1, 2)).unwrap();
    for n in [101u32, 801] {
        group.bench_with_input(BenchmarkId::new("majority", n), &n, |b, &n| {
            b.iter(|| delta_exact(&majority, &two, black_box(n), &one).unwrap())
        });
    }
    let r = ratio(3, 2);
    group.bench_function("histogram_c3_ratio", |b| {
        b.iter(|| delta_exact(&Mechanism::Histogram, &pi, 30, black_box(&r)).unwrap())
    });
    group.finish();
}

fn closed_forms(c: &mut Criterion) {
    let half = ratio(1, 2);
    let mut group = c.benchmark_group("closed_form");
    group.bench_function("hist2_n801", |b| {
        b.iter(|| hist2_delta_closed_form(black_box(&half), 801).unwrap())
    });
    group.bench_function("majority_n801", |b| {
        b.iter(|| majority_delta_exact(black_box(&ratio(3, 5)), &half, 801).unwrap())
    });
    let pi =
        VoteDistribution::new(vec![ratio(1, 3), ratio(1, 3), ratio(1, 6), ratio(1, 6)]).unwrap();
    group.bench_function("mixture_c4_n25", |b| {
        b.iter(|| histc_delta_mixture(&pi, black_box(25), 0, 2).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sweep, delta, closed_forms);
criterion_main!(benches);
