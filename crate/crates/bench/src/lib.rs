//! Fixtures shared by the benchmarks in `benches/`.

use mlg_core::{
    alpha_from_phase_space, coherent_amplitudes, OscillatorConfig, StateVector, TruncationPolicy,
};

/// Unit frequency, tail tolerance 1e-8, Fock cutoff `max_level`.
pub fn config(max_level: usize) -> OscillatorConfig {
    OscillatorConfig::new(1.0, TruncationPolicy::new(max_level, 1e-8).expect("valid policy")).expect("valid config")
}

/// The coherent state at (x₀, p₀) = (0.60, −2).
pub fn reference_state(config: &OscillatorConfig) -> StateVector {
    coherent_amplitudes(alpha_from_phase_space(0.60, -2.0, config.omega()), &config.truncation).expect("fits cutoff")
}
