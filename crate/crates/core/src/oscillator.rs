//! Oscillator conventions, Fock-basis states and eigenfunction values at the origin.
//!
//! Units: ħ = m = 1 and positions are measured in the oscillator length
//! 1/√ω, so that the ground-state density at the origin is ψ₀(0)² = 1/√π
//! independently of ω. The detector coupling length for a point coupling is
//! absorbed into that convention. With it, the ground-state correlator
//! coefficients come out as 1/π (secular), 1/(4π) (cos 2ωτ) and 3/(64π)
//! (cos 4ωτ), i.e. the convention is fixed by matching those coefficients.
//! Quantities with units of time² therefore scale as 1/ω² at fixed ωτ.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fock cutoff and tolerance for dropped series tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Highest Fock level N_max kept in state vectors and square coupling tables.
    pub max_level: usize,
    /// Tolerance on dropped tails (relative, or in units of 1/ω² for time² sums).
    pub tail_tol: f64,
    /// Fixed cutoff for intermediate-level sums. `None` sizes it from `tail_tol`.
    #[serde(default)]
    pub sum_levels: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            max_level: 40,
            tail_tol: 1e-8,
            sum_levels: None,
        }
    }
}

impl TruncationPolicy {
    pub fn new(max_level: usize, tail_tol: f64) -> Result<Self> {
        let policy = Self {
            max_level,
            tail_tol,
            sum_levels: None,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Pin the intermediate-level cutoff instead of sizing it adaptively.
    pub fn with_sum_levels(mut self, levels: usize) -> Self {
        self.sum_levels = Some(levels);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_level < 2 {
            return Err(Error::invalid("max_level", "must be at least 2"));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol.is_finite()) {
            return Err(Error::invalid("tail_tol", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Oscillator frequency plus the truncation contract shared by all computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorConfig {
    omega: f64,
    pub truncation: TruncationPolicy,
}

impl OscillatorConfig {
    pub fn new(omega: f64, truncation: TruncationPolicy) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::invalid("omega", format!("must be positive, got {omega}")));
        }
        truncation.validate()?;
        Ok(Self { omega, truncation })
    }

    /// Unit frequency with the default truncation.
    pub fn unit() -> Self {
        Self {
            omega: 1.0,
            truncation: TruncationPolicy::default(),
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn max_level(&self) -> usize {
        self.truncation.max_level
    }

    pub fn tail_tol(&self) -> f64 {
        self.truncation.tail_tol
    }
}

/// ln((n−1)!!/n!!) for even n, accumulated term by term.
fn ln_double_factorial_ratio(n: usize) -> f64 {
    (1..=n / 2)
        .map(|j| ((2 * j - 1) as f64 / (2 * j) as f64).ln())
        .sum()
}

/// ψₙ(0) in scaled units: zero for odd n, (−1)^{n/2} π^{−1/4} √((n−1)!!/n!!) for even n.
pub fn psi_at_origin(n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let sign = if (n / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * PI.powf(-0.25) * (0.5 * ln_double_factorial_ratio(n)).exp()
}

/// ψₖ(0) for k = 0..=k_max, using the same log-space recurrence as [`psi_at_origin`].
pub fn origin_values(k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    let norm = PI.powf(-0.25);
    let mut ln_ratio = 0.0;
    let mut k = 0;
    while k <= k_max {
        if k > 0 {
            ln_ratio += ((k - 1) as f64 / k as f64).ln();
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        out[k] = sign * norm * (0.5 * ln_ratio).exp();
        k += 2;
    }
    out
}

/// Complex Fock-basis amplitudes c₀..c_N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wrap amplitudes that are already normalized to within `tol`.
    pub fn new(amplitudes: Vec<Complex64>, tol: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("amplitudes", "state vector is empty"));
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("amplitudes", "non-finite amplitude"));
        }
        let state = Self { amplitudes };
        let dev = (state.norm_sqr() - 1.0).abs();
        if dev > tol {
            return Err(Error::invalid(
                "amplitudes",
                format!("norm deviates from 1 by {dev:.3e} (tolerance {tol:.1e})"),
            ));
        }
        Ok(state)
    }

    /// Rescale arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroNorm("normalization"));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|c| c / norm).collect(),
        })
    }

    /// The energy eigenstate |n⟩ in a space of levels 0..=max_level.
    pub fn fock(n: usize, max_level: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); max_level.max(n) + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn max_level(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// Highest level carrying a nonzero amplitude.
    pub fn support(&self) -> usize {
        self.amplitudes
            .iter()
            .rposition(|c| c.norm_sqr() > 0.0)
            .unwrap_or(0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    fn lowering_expectation(&self) -> Complex64 {
        self.amplitudes
            .windows(2)
            .enumerate()
            .map(|(n, w)| w[0].conj() * w[1] * ((n + 1) as f64).sqrt())
            .sum()
    }

    pub fn expect_position(&self, omega: f64) -> f64 {
        (2.0 / omega).sqrt() * self.lowering_expectation().re
    }

    pub fn expect_momentum(&self, omega: f64) -> f64 {
        (2.0 * omega).sqrt() * self.lowering_expectation().im
    }

    /// Free evolution by time t: cₙ → cₙ e^{−iωnt} (zero-point phase dropped).
    pub fn evolved(&self, t: f64, omega: f64) -> Self {
        Self {
            amplitudes: self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(n, c)| c * Complex64::from_polar(1.0, -omega * n as f64 * t))
                .collect(),
        }
    }

    /// Rotate the global phase so the largest amplitude is real and positive.
    pub fn without_global_phase(&self) -> Self {
        let pivot = self
            .amplitudes
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        if pivot.norm_sqr() == 0.0 {
            return self.clone();
        }
        let phase = pivot.conj() / pivot.norm();
        Self {
            amplitudes: self.amplitudes.iter().map(|c| c * phase).collect(),
        }
    }
}

/// Coherent-state label for a phase-space point: α = (√ω x₀ + i p₀/√ω)/√2.
pub fn alpha_from_phase_space(x0: f64, p0: f64, omega: f64) -> Complex64 {
    Complex64::new(omega.sqrt() * x0, p0 / omega.sqrt()) / std::f64::consts::SQRT_2
}

/// Inverse of [`alpha_from_phase_space`]: returns (x₀, p₀).
pub fn phase_space_from_alpha(alpha: Complex64, omega: f64) -> (f64, f64) {
    let s = std::f64::consts::SQRT_2;
    (s * alpha.re / omega.sqrt(), s * alpha.im * omega.sqrt())
}

/// Poisson tail e^{−|α|²} Σ_{n>N} |α|^{2n}/n!.
pub fn coherent_tail(alpha: Complex64, max_level: usize) -> f64 {
    let r2 = alpha.norm_sqr();
    if r2 == 0.0 {
        return 0.0;
    }
    let ln_r2 = r2.ln();
    let mut ln_fact: f64 = (1..=max_level + 1).map(|k| (k as f64).ln()).sum();
    let mut n = max_level + 1;
    let mut tail = 0.0;
    loop {
        let term = (-r2 + n as f64 * ln_r2 - ln_fact).exp();
        tail += term;
        if n as f64 > r2 && term <= tail * 1e-17 {
            break;
        }
        n += 1;
        ln_fact += (n as f64).ln();
    }
    tail
}

/// Fock amplitudes cₙ = e^{−|α|²/2} αⁿ/√(n!) up to `policy.max_level`, not renormalized.
pub fn coherent_amplitudes(alpha: Complex64, policy: &TruncationPolicy) -> Result<StateVector> {
    policy.validate()?;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::invalid("alpha", "must be finite"));
    }
    let tail = coherent_tail(alpha, policy.max_level);
    if tail >= policy.tail_tol {
        return Err(Error::TruncationInsufficient {
            parameter: "max_level",
            tail,
            threshold: policy.tail_tol,
        });
    }
    let n_levels = policy.max_level + 1;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_levels];
    let r = alpha.norm();
    if r == 0.0 {
        amplitudes[0] = Complex64::new(1.0, 0.0);
        return Ok(StateVector { amplitudes });
    }
    let (ln_r, theta) = (r.ln(), alpha.arg());
    let mut ln_fact = 0.0;
    for (n, c) in amplitudes.iter_mut().enumerate() {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let modulus = (-0.5 * r * r + n as f64 * ln_r - 0.5 * ln_fact).exp();
        *c = Complex64::from_polar(modulus, n as f64 * theta);
    }
    Ok(StateVector { amplitudes })
}

/// Normalized p̂|φ⟩ with p̂ = i√(ω/2)(a† − a). The result has one more level than φ.
pub fn apply_momentum(phi: &StateVector, config: &OscillatorConfig) -> Result<StateVector> {
    let c = phi.amplitudes();
    let scale = (config.omega() / 2.0).sqrt();
    let i = Complex64::new(0.0, 1.0);
    let out: Vec<Complex64> = (0..=c.len())
        .map(|n| {
            let raise = if n >= 1 { c[n - 1] * (n as f64).sqrt() } else { 0.0.into() };
            let lower = if n + 1 < c.len() {
                c[n + 1] * ((n + 1) as f64).sqrt()
            } else {
                0.0.into()
            };
            i * scale * (raise - lower)
        })
        .collect();
    let norm_sqr: f64 = out.iter().map(|z| z.norm_sqr()).sum();
    if norm_sqr <= config.tail_tol() * config.omega() * phi.norm_sqr() {
        return Err(Error::ZeroNorm("the momentum operator"));
    }
    StateVector::normalized(out)
}

/// The normalized state p̂|n⟩.
pub fn momentum_fock_state(n: usize, config: &OscillatorConfig) -> Result<StateVector> {
    apply_momentum(&StateVector::fock(n, n + 1), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn origin_values_follow_double_factorials() {
        assert_eq!(psi_at_origin(1), 0.0);
        assert_relative_eq!(psi_at_origin(0).powi(2), 1.0 / PI.sqrt(), epsilon = 1e-15);
        let r2 = (psi_at_origin(2) / psi_at_origin(0)).powi(2);
        let r4 = (psi_at_origin(4) / psi_at_origin(0)).powi(2);
        assert_relative_eq!(r2, 0.5, epsilon = 1e-14);
        assert_relative_eq!(r4, 3.0 / 8.0, epsilon = 1e-14);
        assert!(psi_at_origin(2) < 0.0 && psi_at_origin(4) > 0.0);
        let table = origin_values(300);
        for n in 0..=300 {
            assert_relative_eq!(table[n], psi_at_origin(n), max_relative = 1e-12);
        }
    }

    #[test]
    fn large_index_does_not_overflow() {
        let v = psi_at_origin(100_000);
        assert!(v.is_finite() && v != 0.0);
        // (n−1)!!/n!! ≈ √(2/(πn))
        let expected = PI.powf(-0.5) * (2.0 / (PI * 100_000.0)).sqrt();
        assert_relative_eq!(v * v, expected, max_relative = 1e-5);
    }

    #[test]
    fn vacuum_coherent_state() {
        let s = coherent_amplitudes(Complex64::new(0.0, 0.0), &TruncationPolicy::default()).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn coherent_normalization_and_ratio() {
        let policy = TruncationPolicy::new(30, 1e-8).unwrap();
        let s = coherent_amplitudes(Complex64::new(1.0, 0.0), &policy).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        let alpha = Complex64::new(0.7, -1.3);
        let s = coherent_amplitudes(alpha, &policy).unwrap();
        let ratio = s.amplitudes()[1] / s.amplitudes()[0];
        assert_relative_eq!(ratio.re, alpha.re, epsilon = 1e-14);
        assert_relative_eq!(ratio.im, alpha.im, epsilon = 1e-14);
    }

    #[test]
    fn coherent_truncation_error() {
        let policy = TruncationPolicy::new(5, 1e-8).unwrap();
        let err = coherent_amplitudes(Complex64::new(3.0, 0.0), &policy).unwrap_err();
        assert!(matches!(err, Error::TruncationInsufficient { parameter: "max_level", .. }));
    }

    #[test]
    fn phase_space_map_round_trips() {
        for &omega in &[0.5, 1.0, 3.0] {
            let alpha = alpha_from_phase_space(0.6, -2.0, omega);
            let (x0, p0) = phase_space_from_alpha(alpha, omega);
            assert_relative_eq!(x0, 0.6, epsilon = 1e-14);
            assert_relative_eq!(p0, -2.0, epsilon = 1e-14);
            let s = coherent_amplitudes(alpha, &TruncationPolicy::default()).unwrap();
            assert_relative_eq!(s.expect_position(omega), 0.6, epsilon = 1e-9);
            assert_relative_eq!(s.expect_momentum(omega), -2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn momentum_on_ground_and_first_excited() {
        let cfg = OscillatorConfig::unit();
        let s = apply_momentum(&StateVector::fock(0, 3), &cfg).unwrap().without_global_phase();
        assert_relative_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-15);

        let s = momentum_fock_state(1, &cfg).unwrap();
        // before phase removal the amplitudes are purely imaginary
        assert!(s.amplitudes().iter().all(|c| c.re.abs() < 1e-15));
        let s = s.without_global_phase();
        let a = s.amplitudes();
        assert_relative_eq!(a[2].re, (2.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(a[0].re, -(1.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        assert!(a[1].norm() < 1e-15 && a[3].norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(OscillatorConfig::new(0.0, TruncationPolicy::default()).is_err());
        assert!(OscillatorConfig::new(-1.0, TruncationPolicy::default()).is_err());
        assert!(TruncationPolicy::new(1, 1e-8).is_err());
        assert!(TruncationPolicy::new(10, 0.0).is_err());
    }
}
