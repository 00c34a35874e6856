//! Modified correlators ⟨F²₁₂⟩, dwell times and the standard-correlator map.
//!
//! With F₁₂ = ∫ f(x̂(t)) dt over [t₁, t₂],
//!
//! ```text
//! ⟨k|F₁₂|n⟩ = Mₖₙ Iₖₙ,   ⟨F²₁₂⟩ = Σₖ |Σₙ Mₖₙ Iₖₙ cₙ|²
//! ```
//!
//! so every value is a sum of squares and positivity holds term by term.
//! The sum over the intermediate level k is truncated at the table's
//! `sum_levels`; the dropped part is bounded by [`MatrixElementTable`]'s tail
//! model and reported as `tail_estimate`.
//!
//! Far from the state support the kernel is split as
//! Iₖₙ = i(e^{iω(k−n)t₁} − e^{iω(k−n)t₂})/(ω(k−n)), which turns the inner sum
//! into two short dot products per k.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingKind, MatrixElementTable};
use crate::error::{Error, Result};
use crate::kernels::{kernel_i_signed, TimeWindow};
use crate::oscillator::{OscillatorConfig, StateVector};

/// Below this ωτ the truncated δ-coupling sum is reported with an enlarged tail.
pub const SHORT_WINDOW: f64 = 1e-3;
/// Levels past the state support that use the direct kernel.
const NEAR_BAND: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    /// Truncated spectral sum with a tail bound.
    Spectral,
    /// Closed form built on C(s,t) ≈ cos ω(t−s).
    CosApproximation,
}

/// ⟨F²⟩ in units of time², with a bound on the dropped part of the k-sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorValue {
    pub value: f64,
    pub tail_estimate: f64,
    pub exactness: Exactness,
    pub coupling: Option<CouplingKind>,
}

impl CorrelatorValue {
    fn spectral(value: f64, tail_estimate: f64, coupling: CouplingKind) -> Self {
        Self {
            value,
            tail_estimate,
            exactness: Exactness::Spectral,
            coupling: Some(coupling),
        }
    }

    /// Exact value with no truncation, for inputs assembled by hand.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            tail_estimate: 0.0,
            exactness: Exactness::Spectral,
            coupling: None,
        }
    }
}

/// ⟨m|F²₁₂|n⟩ with its tail bound √(TₘTₙ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixElement {
    pub value: Complex64,
    pub tail_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DwellMethod {
    /// ⟨F²⟩ over a window of length π/ω.
    WindowPi,
    /// (π/ω)² Σ |cₙ|² Mₙₙ².
    Spectral,
}

impl std::fmt::Display for DwellMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DwellMethod::WindowPi => write!(f, "window_pi"),
            DwellMethod::Spectral => write!(f, "spectral"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellTime {
    pub tau_d_sq: f64,
    pub method: DwellMethod,
}

impl DwellTime {
    pub fn new(tau_d_sq: f64, method: DwellMethod) -> Result<Self> {
        if !(tau_d_sq >= 0.0 && tau_d_sq.is_finite()) {
            return Err(Error::invalid("tau_d_sq", format!("must be finite and nonnegative, got {tau_d_sq}")));
        }
        Ok(Self { tau_d_sq, method })
    }
}

fn check_levels(state: &StateVector, table: &MatrixElementTable) -> Result<()> {
    if state.max_level() > table.state_levels() {
        return Err(Error::invalid(
            "max_level",
            format!(
                "state has levels up to {} but the table stops at {}",
                state.max_level(),
                table.state_levels()
            ),
        ));
    }
    Ok(())
}

/// Apply the truncation contract to a finished sum.
fn finish(
    value: f64,
    bound: f64,
    half_value: f64,
    tau: f64,
    table: &MatrixElementTable,
    config: &OscillatorConfig,
) -> Result<CorrelatorValue> {
    let omega = config.omega();
    let mut tail = bound;
    if omega * tau < SHORT_WINDOW {
        tail = tail.max((value - half_value).abs());
    } else if !table.is_pinned() {
        let threshold = config.tail_tol() * value.abs().max(1.0 / (omega * omega));
        if tail > threshold {
            return Err(Error::TruncationInsufficient {
                parameter: "sum_levels",
                tail,
                threshold,
            });
        }
    }
    Ok(CorrelatorValue::spectral(value, tail, table.spec().kind()))
}

/// Σₖ |Σₙ Mₖₙ Iₖₙ bₙ|² and the same sum stopped at K/2.
fn amplitude_sum(b: &[Complex64], window: &TimeWindow, table: &MatrixElementTable, omega: f64) -> (f64, f64) {
    let k_max = table.sum_levels();
    let half = k_max / 2;
    if let Some(v) = table.rank_one_factor() {
        return rank_one_amplitude_sum(v, b, window, omega, k_max);
    }
    let mut row = vec![0.0; b.len()];
    let mut total = 0.0;
    let mut at_half = 0.0;
    for k in 0..=k_max {
        table.row_into(k, &mut row);
        let mut inner = Complex64::new(0.0, 0.0);
        for (n, (&m, &c)) in row.iter().zip(b).enumerate() {
            if m != 0.0 && c != Complex64::new(0.0, 0.0) {
                inner += c * m * kernel_i_signed(k as i64 - n as i64, window, omega);
            }
        }
        total += inner.norm_sqr();
        if k == half {
            at_half = total;
        }
    }
    (total, at_half)
}

fn rank_one_amplitude_sum(v: &[f64], b: &[Complex64], window: &TimeWindow, omega: f64, k_max: usize) -> (f64, f64) {
    let support: Vec<(usize, Complex64)> = b
        .iter()
        .enumerate()
        .filter(|(n, c)| v[*n] != 0.0 && c.norm_sqr() > 0.0)
        .map(|(n, c)| (n, c * v[n]))
        .collect();
    let Some(&(s_max, _)) = support.last() else {
        return (0.0, 0.0);
    };
    let half = k_max / 2;
    let near_end = (s_max + NEAR_BAND).min(k_max);
    let mut total = 0.0;
    let mut at_half = 0.0;
    // only even k have vₖ ≠ 0
    for k in (0..=near_end).step_by(2) {
        let inner: Complex64 = support
            .iter()
            .map(|&(n, bn)| bn * kernel_i_signed(k as i64 - n as i64, window, omega))
            .sum();
        total += v[k] * v[k] * inner.norm_sqr();
        if k <= half {
            at_half = total;
        }
    }
    let (t1, t2) = (window.t1(), window.t2());
    let beta: Vec<(f64, Complex64, Complex64)> = support
        .iter()
        .map(|&(n, bn)| {
            let nf = n as f64;
            (
                nf,
                bn * Complex64::from_polar(1.0, -omega * nf * t1),
                bn * Complex64::from_polar(1.0, -omega * nf * t2),
            )
        })
        .collect();
    let mut k = near_end + 2;
    while k <= k_max {
        let kf = k as f64;
        let mut s1 = Complex64::new(0.0, 0.0);
        let mut s2 = Complex64::new(0.0, 0.0);
        for &(nf, b1, b2) in &beta {
            let inv = 1.0 / (kf - nf);
            s1 += b1 * inv;
            s2 += b2 * inv;
        }
        let inner = Complex64::from_polar(1.0, omega * kf * t1) * s1 - Complex64::from_polar(1.0, omega * kf * t2) * s2;
        total += v[k] * v[k] * inner.norm_sqr() / (omega * omega);
        if k <= half {
            at_half = total;
        }
        k += 2;
    }
    (total, at_half)
}

/// ⟨m|F²₁₂|n⟩ = Σₖ Mₘₖ Mₖₙ I*ₖₘ Iₖₙ.
pub fn f12sq_element(
    m: usize,
    n: usize,
    window: &TimeWindow,
    table: &MatrixElementTable,
    config: &OscillatorConfig,
) -> Result<MatrixElement> {
    let levels = table.state_levels();
    if m > levels || n > levels {
        return Err(Error::invalid("level", format!("({m}, {n}) exceeds table cutoff {levels}")));
    }
    let omega = config.omega();
    let op = F12Operator::build(window, table, config, m.max(n))?;
    let value = op.element(m, n);
    let tail = op.tails[m].sqrt() * op.tails[n].sqrt();
    if omega * window.length() >= SHORT_WINDOW && !table.is_pinned() {
        let threshold = config.tail_tol() * value.norm().max(1.0 / (omega * omega));
        if tail > threshold {
            return Err(Error::TruncationInsufficient {
                parameter: "sum_levels",
                tail,
                threshold,
            });
        }
    }
    let tail = if omega * window.length() < SHORT_WINDOW {
        tail.max((value - op.half_element(m, n)).norm())
    } else {
        tail
    };
    Ok(MatrixElement {
        value,
        tail_estimate: tail,
    })
}

/// ⟨ψ|F²₁₂|ψ⟩ for a truncated Fock state.
pub fn f12sq_expectation(
    state: &StateVector,
    window: &TimeWindow,
    table: &MatrixElementTable,
    config: &OscillatorConfig,
) -> Result<CorrelatorValue> {
    check_levels(state, table)?;
    let omega = config.omega();
    let (value, half) = amplitude_sum(state.amplitudes(), window, table, omega);
    let weights: Vec<f64> = state.amplitudes().iter().map(|c| c.norm()).collect();
    let bound = table.tail_bound(&weights, window.length(), omega);
    finish(value, bound, half, window.length(), table, config)
}

/// ⟨F²₁₂⟩ over a batch of windows, in input order.
pub fn f12sq_curve(
    state: &StateVector,
    windows: &[TimeWindow],
    table: &MatrixElementTable,
    config: &OscillatorConfig,
) -> Result<Vec<CorrelatorValue>> {
    windows
        .par_iter()
        .map(|w| f12sq_expectation(state, w, table, config))
        .collect()
}

/// Energy-eigenstate closed form, stationary in the window start:
/// τ²Mₙₙ² + (2/ω²) Σ_{k≠n} Mₙₖ² (1 − cos ωτ(n−k))/(n−k)².
pub fn f12sq_eigenstate_closed(
    n: usize,
    tau: f64,
    table: &MatrixElementTable,
    config: &OscillatorConfig,
) -> Result<CorrelatorValue> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", format!("must be finite and nonnegative, got {tau}")));
    }
    if n > table.state_levels() {
        return Err(Error::invalid("level", format!("{n} exceeds table cutoff {}", table.state_levels())));
    }
    let omega = config.omega();
    let k_max = table.sum_levels();
    let half = k_max / 2;
    let mnn = table.get(n, n);
    let mut total = tau * tau * mnn * mnn;
    let mut at_half = total;
    let factor = table.rank_one_factor();
    let scale = 4.0 / (omega * omega);
    let step = if factor.is_some() { 2 } else { 1 };
    if mnn == 0.0 && step == 2 {
        // odd level under the point coupling: every Mₙₖ vanishes
        return Ok(CorrelatorValue::spectral(0.0, 0.0, table.spec().kind()));
    }
    let half_angle = 0.5 * omega * tau;
    // e^{iθ(n−k)/2} advanced by rotation, re-seeded periodically to bound drift
    let rot = Complex64::from_polar(1.0, -half_angle * step as f64);
    let mut k = n % step;
    let mut phase = Complex64::from_polar(1.0, half_angle * (n as f64 - k as f64));
    let mut since_seed = 0;
    while k <= k_max {
        if k != n {
            let m = match factor {
                Some(v) => v[n] * v[k],
                None => table.get(n, k),
            };
            let d = n as f64 - k as f64;
            // 1 − cos x = 2 sin²(x/2)
            let s = phase.im * m / d;
            total += s * s * scale;
        }
        if k <= half {
            at_half = total;
        }
        k += step;
        since_seed += 1;
        if since_seed == 256 {
            phase = Complex64::from_polar(1.0, half_angle * (n as f64 - k as f64));
            since_seed = 0;
        } else {
            phase *= rot;
        }
    }
    let mut weights = vec![0.0; n + 1];
    weights[n] = 1.0;
    let bound = table.tail_bound(&weights, tau, omega);
    finish(total, bound, at_half, tau, table, config)
}

/// Closed form for the p̂|1⟩ state under the cos approximation:
/// (1 + 2ω²τ² + 2ωτ sin 2ωτ − cos 2ωτ)/(8ω²).
pub fn f12sq_p1_closed(tau: f64, config: &OscillatorConfig) -> Result<CorrelatorValue> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", format!("must be finite and nonnegative, got {tau}")));
    }
    let w = config.omega();
    let x = w * tau;
    // 1 − cos 2x = 2 sin² x keeps the small-τ end accurate
    let s = x.sin();
    let value = (2.0 * s * s + 2.0 * x * x + 2.0 * x * (2.0 * x).sin()) / (8.0 * w * w);
    Ok(CorrelatorValue {
        value,
        tail_estimate: 0.0,
        exactness: Exactness::CosApproximation,
        coupling: None,
    })
}

/// ⟨τ_D²⟩ by either route.
pub fn dwell_time_sq(
    state: &StateVector,
    table: &MatrixElementTable,
    config: &OscillatorConfig,
    method: DwellMethod,
) -> Result<DwellTime> {
    check_levels(state, table)?;
    let omega = config.omega();
    let tau_d_sq = match method {
        DwellMethod::WindowPi => {
            let window = TimeWindow::new(0.0, PI / omega)?;
            f12sq_expectation(state, &window, table, config)?.value.max(0.0)
        }
        DwellMethod::Spectral => {
            let diag: f64 = state
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(n, c)| {
                    let m = table.get(n, n);
                    c.norm_sqr() * m * m
                })
                .sum();
            (PI / omega).powi(2) * diag
        }
    };
    DwellTime::new(tau_d_sq, method)
}

/// C₁₂ = 1 − 2⟨F²₁₂⟩/⟨τ_D²⟩. Exact for a free particle, approximate here.
pub fn standard_correlator_map(f12sq: &CorrelatorValue, dwell: &DwellTime) -> Result<f64> {
    if !(dwell.tau_d_sq > f64::EPSILON) {
        return Err(Error::DegenerateDwellTime(dwell.tau_d_sq));
    }
    Ok(1.0 - 2.0 * f12sq.value / dwell.tau_d_sq)
}

/// Gram matrix Hₘₙ = ⟨m|F²₁₂|n⟩ on levels 0..=dim−1 for one window.
///
/// Expectations become cᴴHc, which is what the optimizer evaluates
/// repeatedly for a fixed window.
#[derive(Debug, Clone)]
pub struct F12Operator {
    dim: usize,
    window: TimeWindow,
    matrix: Vec<Complex64>,
    half: Vec<Complex64>,
    /// Tail bound for each basis vector.
    tails: Vec<f64>,
    coupling: CouplingKind,
}

impl F12Operator {
    pub fn new(window: &TimeWindow, table: &MatrixElementTable, config: &OscillatorConfig) -> Result<Self> {
        Self::build(window, table, config, table.state_levels())
    }

    fn build(window: &TimeWindow, table: &MatrixElementTable, config: &OscillatorConfig, top: usize) -> Result<Self> {
        let omega = config.omega();
        let dim = top + 1;
        let (matrix, half) = match table.rank_one_factor() {
            Some(v) => rank_one_gram(v, dim, window, omega, table.sum_levels()),
            None => dense_gram(table, dim, window, omega),
        };
        let tails = (0..dim)
            .map(|n| {
                let mut w = vec![0.0; n + 1];
                w[n] = 1.0;
                table.tail_bound(&w, window.length(), omega)
            })
            .collect();
        Ok(Self {
            dim,
            window: *window,
            matrix,
            half,
            tails,
            coupling: table.spec().kind(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn element(&self, m: usize, n: usize) -> Complex64 {
        self.matrix[m * self.dim + n]
    }

    fn half_element(&self, m: usize, n: usize) -> Complex64 {
        self.half[m * self.dim + n]
    }

    /// cᴴHc for amplitudes on levels below `dim`; the tail uses the diagonal bounds.
    pub fn expectation(&self, amplitudes: &[Complex64]) -> CorrelatorValue {
        let d = self.dim.min(amplitudes.len());
        let mut value = 0.0;
        for m in 0..d {
            let cm = amplitudes[m];
            if cm.norm_sqr() == 0.0 {
                continue;
            }
            let row = &self.matrix[m * self.dim..m * self.dim + d];
            let hc: Complex64 = row.iter().zip(&amplitudes[..d]).map(|(h, c)| h * c).sum();
            value += (cm.conj() * hc).re;
        }
        let root: f64 = amplitudes[..d]
            .iter()
            .zip(&self.tails)
            .map(|(c, t)| c.norm() * t.sqrt())
            .sum();
        CorrelatorValue::spectral(value, root * root, self.coupling)
    }
}

fn rank_one_gram(
    v: &[f64],
    dim: usize,
    window: &TimeWindow,
    omega: f64,
    k_max: usize,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let evens: Vec<usize> = (0..dim).filter(|n| v[*n] != 0.0).collect();
    let e = evens.len();
    let zero = Complex64::new(0.0, 0.0);
    // reduced sums without the vₘvₙ prefactor, upper triangle i ≤ j of the even list
    let mut near = vec![zero; e * e];
    let mut a0 = vec![0.0; e * e];
    let mut a1 = vec![zero; e * e];
    let half = k_max / 2;
    let near_end = (dim + NEAR_BAND).min(k_max);
    let mut snapshot: Option<(Vec<Complex64>, Vec<f64>, Vec<Complex64>)> = None;
    let mut u = vec![zero; e];
    for k in (0..=k_max).step_by(2) {
        let w = v[k] * v[k];
        if k <= near_end {
            for (slot, &n) in u.iter_mut().zip(&evens) {
                *slot = kernel_i_signed(k as i64 - n as i64, window, omega);
            }
            for i in 0..e {
                let ui = u[i].conj() * w;
                for j in i..e {
                    near[i * e + j] += ui * u[j];
                }
            }
        } else {
            let z = Complex64::from_polar(1.0, omega * k as f64 * window.length());
            let kf = k as f64;
            for i in 0..e {
                let ri = w / (kf - evens[i] as f64);
                for j in i..e {
                    let r = ri / (kf - evens[j] as f64);
                    a0[i * e + j] += r;
                    a1[i * e + j] += z * r;
                }
            }
        }
        if k <= half && k + 2 > half {
            snapshot = Some((near.clone(), a0.clone(), a1.clone()));
        }
    }
    let assemble = |near: &[Complex64], a0: &[f64], a1: &[Complex64]| {
        let mut out = vec![zero; dim * dim];
        let (t1, t2) = (window.t1(), window.t2());
        for i in 0..e {
            for j in i..e {
                let (m, n) = (evens[i] as f64, evens[j] as f64);
                let far = (Complex64::from_polar(1.0, omega * (m - n) * t1)
                    + Complex64::from_polar(1.0, omega * (m - n) * t2))
                    * a0[i * e + j]
                    - Complex64::from_polar(1.0, omega * (m * t1 - n * t2)) * a1[i * e + j]
                    - Complex64::from_polar(1.0, omega * (m * t2 - n * t1)) * a1[i * e + j].conj();
                let h = (near[i * e + j] + far / (omega * omega)) * (v[evens[i]] * v[evens[j]]);
                out[evens[i] * dim + evens[j]] = h;
                out[evens[j] * dim + evens[i]] = h.conj();
            }
        }
        out
    };
    let full = assemble(&near, &a0, &a1);
    let half_matrix = match snapshot {
        Some((n, z0, z1)) => assemble(&n, &z0, &z1),
        None => full.clone(),
    };
    (full, half_matrix)
}

fn dense_gram(table: &MatrixElementTable, dim: usize, window: &TimeWindow, omega: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let zero = Complex64::new(0.0, 0.0);
    let k_max = table.sum_levels();
    let half_k = k_max / 2;
    let mut out = vec![zero; dim * dim];
    let mut half = out.clone();
    let mut row = vec![0.0; dim];
    let mut u = vec![zero; dim];
    for k in 0..=k_max {
        table.row_into(k, &mut row);
        for n in 0..dim {
            u[n] = if row[n] == 0.0 {
                zero
            } else {
                kernel_i_signed(k as i64 - n as i64, window, omega) * row[n]
            };
        }
        for m in 0..dim {
            if u[m] == zero {
                continue;
            }
            let um = u[m].conj();
            for n in m..dim {
                out[m * dim + n] += um * u[n];
            }
        }
        if k == half_k {
            half.copy_from_slice(&out);
        }
    }
    for buf in [&mut out, &mut half] {
        for m in 0..dim {
            for n in 0..m {
                buf[m * dim + n] = buf[n * dim + m].conj();
            }
        }
    }
    (out, half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{delta_matrix_elements, gaussian_matrix_elements};
    use crate::oscillator::{momentum_fock_state, TruncationPolicy};
    use approx::assert_relative_eq;

    fn config(omega: f64, n: usize, k: Option<usize>) -> OscillatorConfig {
        let mut p = TruncationPolicy::new(n, 1e-8).unwrap();
        if let Some(k) = k {
            p = p.with_sum_levels(k);
        }
        OscillatorConfig::new(omega, p).unwrap()
    }

    fn ground_k4(omega: f64, tau: f64) -> f64 {
        let x = omega * tau;
        (19.0 + 64.0 * x * x - 16.0 * (2.0 * x).cos() - 3.0 * (4.0 * x).cos()) / (64.0 * PI * omega * omega)
    }

    #[test]
    fn ground_state_four_levels() {
        let cfg = config(1.0, 4, Some(4));
        let t = delta_matrix_elements(&cfg);
        let psi = StateVector::fock(0, 4);
        for &tau in &[0.1, 0.7, 2.0, 5.5] {
            let w = TimeWindow::new(0.3, 0.3 + tau).unwrap();
            let a = f12sq_expectation(&psi, &w, &t, &cfg).unwrap().value;
            let b = f12sq_eigenstate_closed(0, tau, &t, &cfg).unwrap().value;
            assert_relative_eq!(a, ground_k4(1.0, tau), epsilon = 1e-13);
            assert_relative_eq!(b, ground_k4(1.0, tau), epsilon = 1e-13);
        }
    }

    #[test]
    fn half_period_diagonal_survival() {
        let cfg = config(1.0, 12, None);
        let t = delta_matrix_elements(&cfg);
        let w = TimeWindow::new(0.0, PI).unwrap();
        let e = f12sq_element(0, 0, &w, &t, &cfg).unwrap();
        assert_relative_eq!(e.value.re, PI, epsilon = 1e-9);
        assert!(e.value.im.abs() < 1e-12);
        let psi = StateVector::fock(0, 12);
        assert_relative_eq!(f12sq_expectation(&psi, &w, &t, &cfg).unwrap().value, PI, epsilon = 1e-9);
    }

    #[test]
    fn split_and_direct_kernels_agree() {
        let cfg = config(1.3, 8, Some(600));
        let t = delta_matrix_elements(&cfg);
        let amps: Vec<Complex64> = (0..=8).map(|n| Complex64::new(0.3 + 0.1 * n as f64, 0.2 - 0.05 * n as f64)).collect();
        let psi = StateVector::normalized(amps).unwrap();
        let w = TimeWindow::new(0.4, 1.45).unwrap();
        let fast = f12sq_expectation(&psi, &w, &t, &cfg).unwrap().value;
        let mut slow = 0.0;
        for k in 0..=600usize {
            let mut inner = Complex64::new(0.0, 0.0);
            for (n, c) in psi.amplitudes().iter().enumerate() {
                inner += c * t.get(k, n) * kernel_i_signed(k as i64 - n as i64, &w, 1.3);
            }
            slow += inner.norm_sqr();
        }
        assert_relative_eq!(fast, slow, max_relative = 1e-12);
        let op = F12Operator::new(&w, &t, &cfg).unwrap();
        assert_relative_eq!(op.expectation(psi.amplitudes()).value, slow, max_relative = 1e-11);
    }

    #[test]
    fn hermitian_elements() {
        let cfg = config(1.0, 10, None);
        let t = delta_matrix_elements(&cfg);
        let w = TimeWindow::new(0.2, 1.1).unwrap();
        let a = f12sq_element(0, 2, &w, &t, &cfg).unwrap().value;
        let b = f12sq_element(2, 0, &w, &t, &cfg).unwrap().value;
        assert_relative_eq!(a.re, b.re, epsilon = 1e-14);
        assert_relative_eq!(a.im, -b.im, epsilon = 1e-14);
        let zero = TimeWindow::new(0.7, 0.7).unwrap();
        assert_eq!(f12sq_element(2, 4, &zero, &t, &cfg).unwrap().value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn odd_states_are_dark() {
        let cfg = config(1.0, 9, None);
        let t = delta_matrix_elements(&cfg);
        let w = TimeWindow::new(0.0, 1.0).unwrap();
        let v = f12sq_expectation(&StateVector::fock(1, 9), &w, &t, &cfg).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn p1_closed_form_values() {
        let cfg = config(2.0, 4, None);
        let v = f12sq_p1_closed(PI / 2.0, &cfg).unwrap().value;
        assert_relative_eq!(v, PI * PI / 16.0, epsilon = 1e-15);
        let unit = config(1.0, 4, None);
        assert_relative_eq!(f12sq_p1_closed(PI / 2.0, &unit).unwrap().value, 0.25 + PI * PI / 16.0, epsilon = 1e-15);
        assert_eq!(f12sq_p1_closed(0.0, &unit).unwrap().value, 0.0);
    }

    #[test]
    fn dwell_routes_agree() {
        let cfg = config(1.0, 12, None);
        let t = delta_matrix_elements(&cfg);
        let p1 = momentum_fock_state(1, &cfg).unwrap();
        let a = dwell_time_sq(&p1, &t, &cfg, DwellMethod::Spectral).unwrap();
        let b = dwell_time_sq(&p1, &t, &cfg, DwellMethod::WindowPi).unwrap();
        assert_relative_eq!(a.tau_d_sq, PI / 2.0, epsilon = 1e-14);
        assert_relative_eq!(b.tau_d_sq, PI / 2.0, epsilon = 1e-9);
        let f2 = dwell_time_sq(&StateVector::fock(2, 12), &t, &cfg, DwellMethod::Spectral).unwrap();
        assert_relative_eq!(f2.tau_d_sq, PI / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn correlator_map_fixed_points() {
        let d = DwellTime::new(2.0, DwellMethod::Spectral).unwrap();
        assert_eq!(standard_correlator_map(&CorrelatorValue::exact(0.0), &d).unwrap(), 1.0);
        assert_eq!(standard_correlator_map(&CorrelatorValue::exact(2.0), &d).unwrap(), -1.0);
        assert_eq!(standard_correlator_map(&CorrelatorValue::exact(1.0), &d).unwrap(), 0.0);
        let zero = DwellTime::new(0.0, DwellMethod::Spectral).unwrap();
        assert!(standard_correlator_map(&CorrelatorValue::exact(1.0), &zero).is_err());
    }

    #[test]
    fn gaussian_gram_matches_amplitude_route() {
        let cfg = config(1.0, 8, None);
        let t = gaussian_matrix_elements(0.5, &cfg).unwrap();
        let amps: Vec<Complex64> = (0..=8).map(|n| Complex64::new(1.0 / (1.0 + n as f64), 0.1 * n as f64)).collect();
        let psi = StateVector::normalized(amps).unwrap();
        let w = TimeWindow::new(0.1, 0.9).unwrap();
        let a = f12sq_expectation(&psi, &w, &t, &cfg).unwrap();
        let op = F12Operator::new(&w, &t, &cfg).unwrap();
        assert_relative_eq!(op.expectation(psi.amplitudes()).value, a.value, max_relative = 1e-12);
    }

    #[test]
    fn too_few_levels_is_reported() {
        let cfg = OscillatorConfig::new(1.0, TruncationPolicy::new(4, 1e-12).unwrap()).unwrap();
        let t = delta_matrix_elements(&cfg).truncated_unpinned(40);
        let w = TimeWindow::new(0.0, 1.0).unwrap();
        let err = f12sq_expectation(&StateVector::fock(0, 4), &w, &t, &cfg).unwrap_err();
        assert!(matches!(err, Error::TruncationInsufficient { parameter: "sum_levels", .. }));
    }
}
