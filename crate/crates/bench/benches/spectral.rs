use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mlg_bench::{config, reference_state};
use mlg_core::optimizer::CoherentObjective;
use mlg_core::{
    delta_matrix_elements, f12sq_eigenstate_closed, f12sq_expectation, gaussian_matrix_elements, optimize_coherent,
    F12Operator, Family, SearchDomain, TimeWindow,
};

fn tables(c: &mut Criterion) {
    let cfg = config(40);
    c.bench_function("delta_table_n40", |b| b.iter(|| delta_matrix_elements(black_box(&cfg))));
    c.bench_function("gaussian_table_n40_sigma0.5", |b| {
        b.iter(|| gaussian_matrix_elements(black_box(0.5), &cfg).unwrap())
    });
}

fn expectations(c: &mut Criterion) {
    let cfg = config(40);
    let delta = delta_matrix_elements(&cfg);
    let gauss = gaussian_matrix_elements(0.5, &cfg).unwrap();
    let state = reference_state(&cfg);
    let w = TimeWindow::new(0.0, 0.8).unwrap();
    c.bench_function("expectation_delta", |b| {
        b.iter(|| f12sq_expectation(black_box(&state), &w, &delta, &cfg).unwrap())
    });
    c.bench_function("expectation_gaussian", |b| {
        b.iter(|| f12sq_expectation(black_box(&state), &w, &gauss, &cfg).unwrap())
    });
    c.bench_function("eigenstate_closed_delta", |b| {
        b.iter(|| f12sq_eigenstate_closed(black_box(2), 1.2, &delta, &cfg).unwrap())
    });
    let op = F12Operator::new(&w, &gauss, &cfg).unwrap();
    c.bench_function("operator_expectation_gaussian", |b| {
        b.iter(|| op.expectation(black_box(state.amplitudes())))
    });
}

fn optimizer(c: &mut Criterion) {
    let cfg = config(40);
    let gauss = gaussian_matrix_elements(0.5, &cfg).unwrap();
    let objective = CoherentObjective::new(0.25, Family::Mlg3, &gauss, &cfg).unwrap();
    c.bench_function("objective_eval", |b| b.iter(|| objective.evaluate(black_box(0.6), black_box(-2.0))));
    let domain = SearchDomain {
        grid: (11, 11),
        ..SearchDomain::default()
    };
    let mut group = c.benchmark_group("optimize");
    group.sample_size(10);
    group.bench_function("mlg3_gaussian_11x11", |b| {
        b.iter(|| optimize_coherent(black_box(0.25), Family::Mlg3, &domain, &gauss, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, tables, expectations, optimizer);
criterion_main!(benches);
