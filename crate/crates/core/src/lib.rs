//! Waiting-detector correlators and modified Leggett–Garg inequalities for the
//! quantum harmonic oscillator.
//!
//! Units: ħ = m = 1, positions in the oscillator length, ψ₀(0)² = 1/√π.
//! Every quantity with units of time² scales as 1/ω² at fixed ωτ.

pub mod correlators;
pub mod coupling;
pub mod error;
pub mod export;
pub mod inequalities;
pub mod kernels;
pub mod nelder_mead;
pub mod optimizer;
pub mod oscillator;
pub mod quadrature;
pub mod sca;

pub use correlators::{
    dwell_time_sq, f12sq_curve, f12sq_eigenstate_closed, f12sq_element, f12sq_expectation, f12sq_p1_closed,
    standard_correlator_map, CorrelatorValue, DwellMethod, DwellTime, Exactness, F12Operator, MatrixElement,
};
pub use coupling::{
    delta_matrix_elements, gaussian_matrix_elements, matrix_elements, CouplingKind, CouplingSpec,
    MatrixElementTable, TableCache,
};
pub use error::{Error, Result};
pub use inequalities::{
    lg2_two_time_delta, mlg3_evaluate, mlg4_evaluate, stationary_kernels, trajectory_probability_pair, Family,
    InequalityReport, LudersScale, Sign, StationaryReport,
};
pub use kernels::{product_kernel_g, time_kernel_i, TimeWindow};
pub use optimizer::{optimize_coherent, sweep_grid, OptimumRecord, SearchDomain, SweepRow};
pub use oscillator::{
    alpha_from_phase_space, apply_momentum, coherent_amplitudes, psi_at_origin, OscillatorConfig, StateVector,
    TruncationPolicy,
};
pub use sca::{oscillatory_part, turnaround_time, CorrelatorCurve, Turnaround};
