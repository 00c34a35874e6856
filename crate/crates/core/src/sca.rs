//! Oscillatory part of eigenstate correlators and where it turns around.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::f12sq_eigenstate_closed;
use crate::coupling::MatrixElementTable;
use crate::error::{Error, Result};
use crate::oscillator::OscillatorConfig;

/// Default sampling step in ωτ.
pub const DEFAULT_STEP: f64 = PI / 400.0;

/// Samples (ωτ, value) with ωτ strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorCurve {
    samples: Vec<(f64, f64)>,
    /// The removed secular term is this times τ².
    pub secular_coefficient: f64,
}

impl CorrelatorCurve {
    pub fn new(samples: Vec<(f64, f64)>, secular_coefficient: f64) -> Result<Self> {
        if samples.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
            return Err(Error::invalid("curve", "samples must be finite"));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("curve", "omega_tau must be strictly increasing"));
        }
        Ok(Self {
            samples,
            secular_coefficient,
        })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Uniform ωτ grid 0, h, 2h, … up to and including `end` (within rounding).
pub fn uniform_grid(end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && end >= 0.0 && end.is_finite()) {
        return Err(Error::invalid("grid", format!("need step > 0 and end >= 0, got {step}, {end}")));
    }
    let count = (end / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| i as f64 * step).collect())
}

/// f12sq_eigenstate_closed(n, τ) − τ²Mₙₙ² on an ωτ grid.
pub fn oscillatory_part(
    n: usize,
    omega_tau_grid: &[f64],
    table: &MatrixElementTable,
    config: &OscillatorConfig,
) -> Result<CorrelatorCurve> {
    let omega = config.omega();
    let mnn = table.get(n, n);
    let secular = mnn * mnn;
    let samples = omega_tau_grid
        .par_iter()
        .map(|&x| {
            let tau = x / omega;
            let f = f12sq_eigenstate_closed(n, tau, table, config)?;
            Ok((x, f.value - secular * tau * tau))
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelatorCurve::new(samples, secular)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "omega_tau", rename_all = "snake_case")]
pub enum Turnaround {
    Found(f64),
    /// No qualifying point inside the sampled range.
    Open,
}

impl Turnaround {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Turnaround::Found(x) => Some(x),
            Turnaround::Open => None,
        }
    }

    /// Windows up to this ωτ are consistent with a single crossing.
    pub fn single_crossing_plausible(&self, omega_tau: f64) -> bool {
        match *self {
            Turnaround::Found(x) => omega_tau <= x,
            Turnaround::Open => true,
        }
    }
}

/// Vertex of the parabola through three consecutive samples.
fn parabola_vertex(s: &[(f64, f64)], i: usize) -> f64 {
    let (x0, y0) = s[i - 1];
    let (x1, y1) = s[i];
    let (x2, y2) = s[i + 1];
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature == 0.0 {
        return x1;
    }
    // y = y0 + d01(x − x0) + curvature(x − x0)(x − x1)
    let vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
    vertex.clamp(x0, x2)
}

fn first_sign_change(curve: &CorrelatorCurve, falling_then_rising: bool) -> Turnaround {
    let s = curve.samples();
    if s.len() < 3 {
        return Turnaround::Open;
    }
    for i in 1..s.len() - 1 {
        let before = s[i].1 - s[i - 1].1;
        let after = s[i + 1].1 - s[i].1;
        let hit = if falling_then_rising {
            before < 0.0 && after >= 0.0
        } else {
            (before > 0.0 && after <= 0.0) || (before < 0.0 && after >= 0.0)
        };
        if hit && s[i].0 > 0.0 {
            return Turnaround::Found(parabola_vertex(s, i));
        }
    }
    Turnaround::Open
}

/// First local minimum of the oscillatory part after τ = 0.
///
/// The oscillatory part rises from zero while the state crosses and falls
/// back as it returns; the minimum marks the return.
pub fn turnaround_time(curve: &CorrelatorCurve) -> Turnaround {
    first_sign_change(curve, true)
}

/// First ωτ > 0 where the discrete derivative changes sign (maximum or minimum).
pub fn first_stationary_point(curve: &CorrelatorCurve) -> Turnaround {
    first_sign_change(curve, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::delta_matrix_elements;
    use crate::oscillator::TruncationPolicy;
    use approx::assert_relative_eq;

    #[test]
    fn synthetic_sine_squared() {
        let grid = uniform_grid(2.0 * PI, DEFAULT_STEP).unwrap();
        let c = CorrelatorCurve::new(grid.iter().map(|&x| (x, x.sin().powi(2))).collect(), 0.0).unwrap();
        assert_relative_eq!(first_stationary_point(&c).value().unwrap(), PI / 2.0, epsilon = DEFAULT_STEP);
        assert_relative_eq!(turnaround_time(&c).value().unwrap(), PI, epsilon = 1e-6);
    }

    #[test]
    fn ground_state_truncated_form() {
        let cfg = OscillatorConfig::new(1.0, TruncationPolicy::new(4, 1e-8).unwrap().with_sum_levels(4)).unwrap();
        let t = delta_matrix_elements(&cfg);
        let grid = uniform_grid(PI, PI / 50.0).unwrap();
        let c = oscillatory_part(0, &grid, &t, &cfg).unwrap();
        for &(x, v) in c.samples() {
            let want = (19.0 - 16.0 * (2.0 * x).cos() - 3.0 * (4.0 * x).cos()) / (64.0 * PI);
            assert_relative_eq!(v, want, epsilon = 1e-13);
        }
        assert_eq!(c.samples()[0].1, 0.0);
    }

    #[test]
    fn open_when_monotone() {
        let c = CorrelatorCurve::new((0..10).map(|i| (i as f64, i as f64)).collect(), 0.0).unwrap();
        assert_eq!(turnaround_time(&c), Turnaround::Open);
        assert!(Turnaround::Open.single_crossing_plausible(5.0));
    }

    #[test]
    fn rejects_unsorted_samples() {
        assert!(CorrelatorCurve::new(vec![(0.0, 0.0), (0.0, 1.0)], 0.0).is_err());
        assert!(CorrelatorCurve::new(vec![(0.0, f64::NAN)], 0.0).is_err());
    }
}
