//! Measurement windows and the time-integral kernels of the spectral sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillator::OscillatorConfig;

/// Measurement interval [t₁, t₂] in oscillator time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    t1: f64,
    t2: f64,
}

impl TimeWindow {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1.is_finite() && t2.is_finite()) {
            return Err(Error::invalid("window", "endpoints must be finite"));
        }
        if t2 < t1 {
            return Err(Error::invalid("window", format!("t2 = {t2} precedes t1 = {t1}")));
        }
        Ok(Self { t1, t2 })
    }

    /// [start, start + length].
    pub fn from_start(start: f64, length: f64) -> Result<Self> {
        Self::new(start, start + length)
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn length(&self) -> f64 {
        self.t2 - self.t1
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t1 + self.t2)
    }

    pub fn shifted(&self, s: f64) -> Self {
        Self {
            t1: self.t1 + s,
            t2: self.t2 + s,
        }
    }

    /// Union of two windows that share an endpoint, `self` first.
    pub fn join(&self, later: &TimeWindow) -> Result<Self> {
        if self.t2 != later.t1 {
            return Err(Error::WindowMismatch(format!(
                "[{}, {}] and [{}, {}] are not contiguous",
                self.t1, self.t2, later.t1, later.t2
            )));
        }
        Self::new(self.t1, later.t2)
    }
}

/// Iₗₖ(t₁,t₂) = ∫ e^{iω(ℓ−k)t} dt over the window.
///
/// Evaluated as 2 sin(ωdτ/2) e^{iωd t̄}/(ωd) with d = ℓ−k, which equals
/// i(e^{iωdt₁} − e^{iωdt₂})/(ωd) and stays continuous as τ → 0.
pub fn time_kernel_i(l: usize, k: usize, window: &TimeWindow, config: &OscillatorConfig) -> Complex64 {
    kernel_i_signed(l as i64 - k as i64, window, config.omega())
}

pub(crate) fn kernel_i_signed(d: i64, window: &TimeWindow, omega: f64) -> Complex64 {
    let tau = window.length();
    if d == 0 {
        return Complex64::new(tau, 0.0);
    }
    let wd = omega * d as f64;
    let modulus = 2.0 * (0.5 * wd * tau).sin() / wd;
    Complex64::from_polar(1.0, wd * window.midpoint()) * modulus
}

/// Gₙₗₖ = Iₗₖ Iₖₙ.
pub fn product_kernel_g(
    n: usize,
    l: usize,
    k: usize,
    window: &TimeWindow,
    config: &OscillatorConfig,
) -> Complex64 {
    time_kernel_i(l, k, window, config) * time_kernel_i(k, n, window, config)
}
