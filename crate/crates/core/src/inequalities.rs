//! Modified Leggett–Garg kernels built from ⟨F²ᵢⱼ⟩ and ⟨τ_D²⟩.
//!
//! Three-time kernels (each ≥ 0 under macrorealism):
//!
//! ```text
//! K₁ =  F₁₂ + F₁₃ − F₂₃          K₃ = −F₁₂ + F₁₃ + F₂₃
//! K₂ =  F₁₂ − F₁₃ + F₂₃          K₄ = −F₁₂ − F₁₃ − F₂₃ + 2τ_D²
//! ```
//!
//! so K₁+K₂ = 2F₁₂, K₁+K₃ = 2F₁₃ and K₂+K₃ = 2F₂₃. Four-time kernels carry
//! one minus sign among F₁₂, F₂₃, F₃₄, F₁₄ and lie in [0, 2τ_D²].

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::correlators::{f12sq_eigenstate_closed, CorrelatorValue, DwellMethod, DwellTime};
use crate::coupling::{CouplingKind, MatrixElementTable};
use crate::error::{Error, Result};
use crate::kernels::TimeWindow;
use crate::oscillator::OscillatorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "mLG3")]
    Mlg3,
    #[serde(rename = "mLG4")]
    Mlg4,
    Stat3,
    Stat4,
    TwoTimeDelta,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Mlg3 => "mLG3",
            Family::Mlg4 => "mLG4",
            Family::Stat3 => "Stat3",
            Family::Stat4 => "Stat4",
            Family::TwoTimeDelta => "TwoTimeDelta",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlg3" => Ok(Family::Mlg3),
            "mlg4" => Ok(Family::Mlg4),
            "stat3" => Ok(Family::Stat3),
            "stat4" => Ok(Family::Stat4),
            "lg2" | "twotimedelta" | "two-time-delta" => Ok(Family::TwoTimeDelta),
            other => Err(Error::invalid("family", format!("unknown family `{other}`"))),
        }
    }
}

/// Quantum reference scale for violations; `upper` only for two-sided families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LudersScale {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl LudersScale {
    pub fn three_time(tau_d_sq: f64) -> Self {
        Self {
            lower: -0.25 * tau_d_sq,
            upper: None,
        }
    }

    pub fn four_time(tau_d_sq: f64) -> Self {
        Self {
            lower: (1.0 - SQRT_2) * tau_d_sq,
            upper: Some((1.0 + SQRT_2) * tau_d_sq),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub family: Family,
    pub kernels: Vec<f64>,
    pub violated: Vec<bool>,
    pub luders_scale: LudersScale,
    /// Macrorealistic upper bound, when the family has one.
    pub upper_bound: Option<f64>,
    /// Summed tail estimates of the inputs; bounds the error of every kernel.
    pub tail_estimate: f64,
    pub tau_d_sq: f64,
}

impl InequalityReport {
    fn build(family: Family, kernels: Vec<f64>, upper: Option<f64>, luders: LudersScale, tail: f64, tau_d_sq: f64) -> Self {
        let tol = violation_tolerance(tail);
        let violated = kernels
            .iter()
            .map(|&k| k < -tol || upper.is_some_and(|u| k > u + tol))
            .collect();
        Self {
            family,
            kernels,
            violated,
            luders_scale: luders,
            upper_bound: upper,
            tail_estimate: tail,
            tau_d_sq,
        }
    }

    pub fn any_violated(&self) -> bool {
        self.violated.iter().any(|&v| v)
    }

    /// Most negative kernel and its index.
    pub fn min_kernel(&self) -> (usize, f64) {
        self.kernels
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, k)| if k < best.1 { (i, k) } else { best })
    }
}

/// Threshold below which a negative kernel is attributed to truncation.
pub fn violation_tolerance(tail: f64) -> f64 {
    (3.0 * tail).max(1e-12)
}

/// t₁ < t₂ < t₃ with F₁₃ spanning the union.
pub fn check_three_windows(w12: &TimeWindow, w23: &TimeWindow, w13: &TimeWindow) -> Result<()> {
    let joined = w12.join(w23)?;
    if joined != *w13 {
        return Err(Error::WindowMismatch(format!(
            "outer window [{}, {}] is not the union [{}, {}]",
            w13.t1(),
            w13.t2(),
            joined.t1(),
            joined.t2()
        )));
    }
    Ok(())
}

/// t₁ < t₂ < t₃ < t₄ with F₁₄ spanning the union.
pub fn check_four_windows(w12: &TimeWindow, w23: &TimeWindow, w34: &TimeWindow, w14: &TimeWindow) -> Result<()> {
    let joined = w12.join(w23)?.join(w34)?;
    if joined != *w14 {
        return Err(Error::WindowMismatch(format!(
            "outer window [{}, {}] is not the union [{}, {}]",
            w14.t1(),
            w14.t2(),
            joined.t1(),
            joined.t2()
        )));
    }
    Ok(())
}

/// Contiguous windows [t₁ + jτ, t₁ + (j+1)τ] for j < count.
pub fn equal_windows(t1: f64, tau: f64, count: usize) -> Result<Vec<TimeWindow>> {
    if !(tau >= 0.0) {
        return Err(Error::invalid("tau", format!("must be nonnegative, got {tau}")));
    }
    (0..count)
        .map(|j| TimeWindow::new(t1 + j as f64 * tau, t1 + (j + 1) as f64 * tau))
        .collect()
}

/// The four three-time kernels.
pub fn mlg3_kernels(f12: f64, f23: f64, f13: f64, tau_d_sq: f64) -> [f64; 4] {
    [
        f12 + f13 - f23,
        f12 - f13 + f23,
        -f12 + f13 + f23,
        -f12 - f13 - f23 + 2.0 * tau_d_sq,
    ]
}

/// The four four-time kernels; the minus sign sits on F₁₄, F₃₄, F₂₃, F₁₂ in turn.
pub fn mlg4_kernels(f12: f64, f23: f64, f34: f64, f14: f64) -> [f64; 4] {
    [
        f12 + f23 + f34 - f14,
        f12 + f23 - f34 + f14,
        f12 - f23 + f34 + f14,
        -f12 + f23 + f34 + f14,
    ]
}

pub fn mlg3_evaluate(f12: &CorrelatorValue, f23: &CorrelatorValue, f13: &CorrelatorValue, dwell: &DwellTime) -> InequalityReport {
    let tail = f12.tail_estimate + f23.tail_estimate + f13.tail_estimate;
    InequalityReport::build(
        Family::Mlg3,
        mlg3_kernels(f12.value, f23.value, f13.value, dwell.tau_d_sq).to_vec(),
        None,
        LudersScale::three_time(dwell.tau_d_sq),
        tail,
        dwell.tau_d_sq,
    )
}

/// [`mlg3_evaluate`] after checking that the windows nest.
pub fn mlg3_evaluate_windows(
    values: [(&CorrelatorValue, &TimeWindow); 3],
    dwell: &DwellTime,
) -> Result<InequalityReport> {
    let [(f12, w12), (f23, w23), (f13, w13)] = values;
    check_three_windows(w12, w23, w13)?;
    Ok(mlg3_evaluate(f12, f23, f13, dwell))
}

pub fn mlg4_evaluate(
    f12: &CorrelatorValue,
    f23: &CorrelatorValue,
    f34: &CorrelatorValue,
    f14: &CorrelatorValue,
    dwell: &DwellTime,
) -> InequalityReport {
    let tail = f12.tail_estimate + f23.tail_estimate + f34.tail_estimate + f14.tail_estimate;
    InequalityReport::build(
        Family::Mlg4,
        mlg4_kernels(f12.value, f23.value, f34.value, f14.value).to_vec(),
        Some(2.0 * dwell.tau_d_sq),
        LudersScale::four_time(dwell.tau_d_sq),
        tail,
        dwell.tau_d_sq,
    )
}

/// [`mlg4_evaluate`] after checking that the windows nest.
pub fn mlg4_evaluate_windows(
    values: [(&CorrelatorValue, &TimeWindow); 4],
    dwell: &DwellTime,
) -> Result<InequalityReport> {
    let [(f12, w12), (f23, w23), (f34, w34), (f14, w14)] = values;
    check_four_windows(w12, w23, w34, w14)?;
    Ok(mlg4_evaluate(f12, f23, f34, f14, dwell))
}

/// Stat3 = 2F(τ) − F(2τ) and Stat4 = 3F(τ) − F(3τ) for an energy eigenstate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub stat3: InequalityReport,
    pub stat4: InequalityReport,
}

impl StationaryReport {
    pub fn kernels(&self) -> (f64, f64) {
        (self.stat3.kernels[0], self.stat4.kernels[0])
    }
}

pub fn stationary_kernels(
    n: usize,
    tau: f64,
    table: &MatrixElementTable,
    config: &OscillatorConfig,
) -> Result<StationaryReport> {
    let f1 = f12sq_eigenstate_closed(n, tau, table, config)?;
    let f2 = f12sq_eigenstate_closed(n, 2.0 * tau, table, config)?;
    let f3 = f12sq_eigenstate_closed(n, 3.0 * tau, table, config)?;
    let mnn = table.get(n, n);
    let tau_d_sq = (PI / config.omega()).powi(2) * mnn * mnn;
    let stat3 = InequalityReport::build(
        Family::Stat3,
        vec![2.0 * f1.value - f2.value],
        None,
        LudersScale::three_time(tau_d_sq),
        2.0 * f1.tail_estimate + f2.tail_estimate,
        tau_d_sq,
    );
    let stat4 = InequalityReport::build(
        Family::Stat4,
        vec![3.0 * f1.value - f3.value],
        Some(2.0 * tau_d_sq),
        LudersScale::four_time(tau_d_sq),
        3.0 * f1.tail_estimate + f3.tail_estimate,
        tau_d_sq,
    );
    Ok(StationaryReport { stat3, stat4 })
}

/// τ_D² − ½τ_D² − ½τ_D² + ⟨F²₁₂⟩ for the point coupling, which reduces to ⟨F²₁₂⟩.
pub fn lg2_two_time_delta(f12: &CorrelatorValue, dwell: &DwellTime) -> Result<f64> {
    if f12.coupling == Some(CouplingKind::Gaussian) {
        return Err(Error::UnsupportedCoupling(
            "the two-time reduction holds only for the point coupling".into(),
        ));
    }
    let t = dwell.tau_d_sq;
    Ok(t - 0.5 * t - 0.5 * t + f12.value)
}

/// Report form of [`lg2_two_time_delta`].
pub fn lg2_report(f12: &CorrelatorValue, dwell: &DwellTime) -> Result<InequalityReport> {
    let k = lg2_two_time_delta(f12, dwell)?;
    Ok(InequalityReport::build(
        Family::TwoTimeDelta,
        vec![k],
        None,
        LudersScale::three_time(dwell.tau_d_sq),
        f12.tail_estimate,
        dwell.tau_d_sq,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub const ALL: [Sign; 2] = [Sign::Plus, Sign::Minus];
}

/// ¼(1 + s₁s₂C₁₂ + s₂s₃C₂₃ + s₁s₃C₁₃); negative values signal a violation.
pub fn trajectory_probability_pair(c12: f64, c23: f64, c13: f64, s1: Sign, s2: Sign, s3: Sign) -> f64 {
    let (a, b, c) = (s1.value(), s2.value(), s3.value());
    0.25 * (1.0 + a * b * c12 + b * c * c23 + a * c * c13)
}

/// Dwell time that leaves every kernel unchanged when ω is rescaled at fixed ωτ.
pub fn spectral_dwell_for_eigenstate(n: usize, table: &MatrixElementTable, config: &OscillatorConfig) -> DwellTime {
    let m = table.get(n, n);
    DwellTime {
        tau_d_sq: (PI / config.omega()).powi(2) * m * m,
        method: DwellMethod::Spectral,
    }
}
