//! Randomized invariants of the correlator, kernel and optimizer layers.

use mlg_core::inequalities::{mlg3_kernels, mlg4_kernels};
use mlg_core::optimizer::CoherentObjective;
use mlg_core::{
    apply_momentum, coherent_amplitudes, delta_matrix_elements, f12sq_eigenstate_closed, f12sq_expectation,
    gaussian_matrix_elements, sweep_grid, time_kernel_i, trajectory_probability_pair, F12Operator, Family,
    MatrixElementTable, OscillatorConfig, SearchDomain, Sign, StateVector, TimeWindow, TruncationPolicy,
};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

const LEVELS: usize = 12;

fn config() -> &'static OscillatorConfig {
    static C: OnceLock<OscillatorConfig> = OnceLock::new();
    C.get_or_init(|| OscillatorConfig::new(1.0, TruncationPolicy::new(LEVELS, 1e-8).unwrap()).unwrap())
}

fn gaussian() -> &'static MatrixElementTable {
    static T: OnceLock<MatrixElementTable> = OnceLock::new();
    T.get_or_init(|| gaussian_matrix_elements(0.5, config()).unwrap())
}

fn delta() -> &'static MatrixElementTable {
    static T: OnceLock<MatrixElementTable> = OnceLock::new();
    T.get_or_init(|| delta_matrix_elements(config()))
}

fn state_strategy() -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=6)
        .prop_filter_map("zero state", |v| {
            StateVector::normalized(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).ok()
        })
}

fn table_strategy() -> impl Strategy<Value = &'static MatrixElementTable> {
    prop_oneof![Just(()).prop_map(|_| gaussian()), Just(()).prop_map(|_| delta())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expectation_is_nonnegative(
        state in state_strategy(),
        table in table_strategy(),
        t1 in 0.0f64..3.0,
        tau in 0.01f64..3.0,
    ) {
        let w = TimeWindow::new(t1, t1 + tau).unwrap();
        let v = f12sq_expectation(&state, &w, table, config()).unwrap();
        prop_assert!(v.value >= -v.tail_estimate);
    }

    #[test]
    fn operator_is_hermitian(table in table_strategy(), t1 in 0.0f64..3.0, tau in 0.01f64..3.0) {
        let op = F12Operator::new(&TimeWindow::new(t1, t1 + tau).unwrap(), table, config()).unwrap();
        for m in 0..op.dim() {
            for n in 0..op.dim() {
                prop_assert!((op.element(m, n) - op.element(n, m).conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenstates_are_stationary(n in 0usize..6, s in 0.0f64..10.0, tau in 0.01f64..2.5) {
        let state = StateVector::fock(n, LEVELS);
        let base = f12sq_expectation(&state, &TimeWindow::new(0.0, tau).unwrap(), gaussian(), config()).unwrap();
        let moved = f12sq_expectation(&state, &TimeWindow::new(s, s + tau).unwrap(), gaussian(), config()).unwrap();
        prop_assert!((base.value - moved.value).abs() < 1e-10);
    }

    #[test]
    fn joined_window_obeys_triangle_bound(
        state in state_strategy(),
        table in table_strategy(),
        t1 in 0.0f64..2.0,
        a in 0.01f64..1.5,
        b in 0.01f64..1.5,
    ) {
        let f = |x: f64, y: f64| {
            let v = f12sq_expectation(&state, &TimeWindow::new(x, y).unwrap(), table, config()).unwrap();
            (v.value.max(0.0) + v.tail_estimate, v.tail_estimate)
        };
        let (f12, _) = f(t1, t1 + a);
        let (f23, _) = f(t1 + a, t1 + a + b);
        let (f13, tail) = f(t1, t1 + a + b);
        prop_assert!(f13 - tail <= (f12.sqrt() + f23.sqrt()).powi(2) * (1.0 + 1e-12));
    }

    #[test]
    fn kernel_pairs_reduce_to_correlators(
        f12 in 0.0f64..2.0, f23 in 0.0f64..2.0, f34 in 0.0f64..2.0, f13 in 0.0f64..2.0, td in 0.0f64..3.0,
    ) {
        let k = mlg3_kernels(f12, f23, f13, td);
        prop_assert!((k[0] + k[1] - 2.0 * f12).abs() < 1e-12);
        prop_assert!((k[0] + k[2] - 2.0 * f13).abs() < 1e-12);
        prop_assert!((k[1] + k[2] - 2.0 * f23).abs() < 1e-12);
        let k4 = mlg4_kernels(f12, f23, f34, f13);
        prop_assert!((k4[0] + k4[1] - 2.0 * (f12 + f23)).abs() < 1e-12);
        prop_assert!((k4[0] + k4[3] - 2.0 * (f23 + f34)).abs() < 1e-12);
    }

    #[test]
    fn trajectory_pairs_sum_to_two(c12 in -1.0f64..1.0, c23 in -1.0f64..1.0, c13 in -1.0f64..1.0) {
        let mut total = 0.0;
        for s1 in Sign::ALL {
            for s2 in Sign::ALL {
                for s3 in Sign::ALL {
                    total += trajectory_probability_pair(c12, c23, c13, s1, s2, s3);
                }
            }
        }
        prop_assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn frequency_scaling_at_fixed_phase(n in 0usize..5, x in 0.0f64..6.0) {
        let cfg = |w: f64| OscillatorConfig::new(w, TruncationPolicy::new(8, 1e-8).unwrap().with_sum_levels(400)).unwrap();
        let (c1, c2) = (cfg(1.0), cfg(2.0));
        let (t1, t2) = (delta_matrix_elements(&c1), delta_matrix_elements(&c2));
        let a = f12sq_eigenstate_closed(n, x, &t1, &c1).unwrap().value;
        let b = f12sq_eigenstate_closed(n, x / 2.0, &t2, &c2).unwrap().value;
        prop_assert!((a - 4.0 * b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn momentum_flips_parity(v in prop::collection::vec(-1.0f64..1.0, 1..=5)) {
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * v.len()];
        for (i, x) in v.iter().enumerate() {
            amps[2 * i] = Complex64::new(*x, 0.0);
        }
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let even = StateVector::normalized(amps).unwrap();
        let odd = apply_momentum(&even, config()).unwrap();
        for (n, c) in odd.amplitudes().iter().enumerate() {
            if n % 2 == 0 {
                prop_assert!(c.norm() == 0.0);
            }
        }
    }

    #[test]
    fn coherent_mean_number(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let alpha = Complex64::new(re, im);
        let state = coherent_amplitudes(alpha, &TruncationPolicy::new(60, 1e-12).unwrap()).unwrap();
        prop_assert!((state.mean_number() - alpha.norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn time_kernel_modulus(l in 0usize..30, k in 0usize..30, t1 in 0.0f64..5.0, tau in 0.0f64..4.0, s in -3.0f64..3.0) {
        let w = TimeWindow::new(t1, t1 + tau).unwrap();
        let moved = TimeWindow::new(t1 + s.max(-t1), t1 + s.max(-t1) + tau).unwrap();
        let a = time_kernel_i(l, k, &w, config());
        let b = time_kernel_i(l, k, &moved, config());
        prop_assert!((a.norm() - b.norm()).abs() < 1e-12);
        prop_assert!(a.norm() <= tau + 1e-12);
    }
}

#[test]
fn window_start_is_a_phase_rotation() {
    let cfg = OscillatorConfig::new(1.0, TruncationPolicy::new(24, 1e-8).unwrap()).unwrap();
    let table = delta_matrix_elements(&cfg);
    let tau = 0.4;
    let at_zero = CoherentObjective::new(tau, Family::Mlg3, &table, &cfg).unwrap();
    for t1 in [0.3, 1.1, 2.5] {
        let shifted = CoherentObjective::with_start(t1, tau, Family::Mlg3, &table, &cfg).unwrap();
        for r in [0.4, 1.2] {
            let real = coherent_amplitudes(Complex64::new(r, 0.0), &cfg.truncation).unwrap();
            let rotated = coherent_amplitudes(Complex64::from_polar(r, -t1), &cfg.truncation).unwrap();
            let a = shifted.report_amplitudes(real.amplitudes());
            let b = at_zero.report_amplitudes(rotated.amplitudes());
            for (x, y) in a.kernels.iter().zip(&b.kernels) {
                assert!((x - y).abs() < 1e-9, "t1 {t1}, r {r}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn sweep_is_deterministic_and_keeps_duplicates() {
    let cfg = OscillatorConfig::new(1.0, TruncationPolicy::new(24, 1e-8).unwrap()).unwrap();
    let table = gaussian_matrix_elements(0.5, &cfg).unwrap();
    let domain = SearchDomain {
        x0_range: (-2.0, 2.0),
        p0_range: (-2.0, 2.0),
        grid: (9, 9),
        refine_tol: 1e-8,
    };
    let taus = [0.3, 0.3, 0.6];
    let a = sweep_grid(&taus, Family::Mlg3, &domain, &table, &cfg).unwrap();
    let b = sweep_grid(&taus, Family::Mlg3, &domain, &table, &cfg).unwrap();
    assert_eq!(a.len(), 3);
    let ra: Vec<_> = a.iter().map(|r| *r.outcome.as_ref().unwrap()).collect();
    let rb: Vec<_> = b.iter().map(|r| *r.outcome.as_ref().unwrap()).collect();
    assert_eq!(ra, rb);
    assert_eq!(ra[0], ra[1]);
    assert!(ra.iter().all(|r| r.p0 <= 0.0));
}

#[test]
fn luders_trajectory_value() {
    let v = trajectory_probability_pair(-0.5, -0.5, -0.5, Sign::Plus, Sign::Plus, Sign::Plus);
    assert!((v + 0.125).abs() < 1e-15);
}
