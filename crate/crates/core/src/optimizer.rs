//! Search over coherent states for the most negative mLG kernel at fixed τ.
//!
//! Free evolution maps α to αe^{−iωt}, so shifting the window start is the
//! same as rotating α. The search therefore fixes t₁ = 0 and scans complex
//! α through (x₀, p₀).
//!
//! Each window's F² operator is assembled once; a candidate state then costs
//! one quadratic form per window.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::{CorrelatorValue, DwellMethod, DwellTime, F12Operator};
use crate::coupling::MatrixElementTable;
use crate::error::{Error, Result};
use crate::inequalities::{equal_windows, mlg3_evaluate, mlg4_evaluate, Family, InequalityReport};
use crate::nelder_mead::{minimize, SimplexOptions};
use crate::oscillator::{alpha_from_phase_space, coherent_amplitudes, phase_space_from_alpha, OscillatorConfig};

/// Rectangle in (x₀, p₀) with a coarse grid and a simplex tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchDomain {
    pub x0_range: (f64, f64),
    pub p0_range: (f64, f64),
    pub grid: (usize, usize),
    pub refine_tol: f64,
}

impl Default for SearchDomain {
    fn default() -> Self {
        Self {
            x0_range: (-4.0, 4.0),
            p0_range: (-4.0, 4.0),
            grid: (41, 41),
            refine_tol: 1e-8,
        }
    }
}

impl SearchDomain {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ok(self.x0_range) || !ok(self.p0_range) {
            return Err(Error::EmptyDomain(format!(
                "ranges x0 {:?}, p0 {:?} must be finite with lo <= hi",
                self.x0_range, self.p0_range
            )));
        }
        if self.grid.0 < 2 || self.grid.1 < 2 {
            return Err(Error::EmptyDomain(format!("grid {:?} needs at least 2 points per axis", self.grid)));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::invalid("refine_tol", "must be positive"));
        }
        Ok(())
    }

    fn node(&self, i: usize, j: usize) -> (f64, f64) {
        let lerp = |(lo, hi): (f64, f64), k: usize, n: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
        (lerp(self.x0_range, i, self.grid.0), lerp(self.p0_range, j, self.grid.1))
    }

    fn spacing(&self) -> (f64, f64) {
        (
            (self.x0_range.1 - self.x0_range.0) / (self.grid.0 - 1) as f64,
            (self.p0_range.1 - self.p0_range.0) / (self.grid.1 - 1) as f64,
        )
    }

    fn contains(&self, x0: f64, p0: f64) -> bool {
        (self.x0_range.0..=self.x0_range.1).contains(&x0) && (self.p0_range.0..=self.p0_range.1).contains(&p0)
    }

    /// Same rectangle reflected through the origin.
    pub fn mirrored(&self) -> Self {
        Self {
            x0_range: (-self.x0_range.1, -self.x0_range.0),
            p0_range: (-self.p0_range.1, -self.p0_range.0),
            ..*self
        }
    }
}

/// Best kernel found for one τ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumRecord {
    pub omega_tau: f64,
    pub alpha: (f64, f64),
    pub x0: f64,
    pub p0: f64,
    pub best_kernel: f64,
    pub kernel_index: usize,
    pub tau_d_sq: f64,
    /// Best value on the coarse grid, before refinement.
    pub grid_kernel: f64,
    pub converged: bool,
    /// Grid nodes skipped because the Fock cutoff could not hold the state.
    pub skipped_nodes: usize,
}

impl OptimumRecord {
    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.alpha.0, self.alpha.1)
    }
}

/// F² operators for the windows of one family at t₁ = 0.
pub struct CoherentObjective<'a> {
    family: Family,
    operators: Vec<F12Operator>,
    table: &'a MatrixElementTable,
    config: &'a OscillatorConfig,
}

impl<'a> CoherentObjective<'a> {
    pub fn new(tau: f64, family: Family, table: &'a MatrixElementTable, config: &'a OscillatorConfig) -> Result<Self> {
        Self::with_start(0.0, tau, family, table, config)
    }

    /// Windows starting at `t1` instead of 0.
    pub fn with_start(
        t1: f64,
        tau: f64,
        family: Family,
        table: &'a MatrixElementTable,
        config: &'a OscillatorConfig,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid("tau", format!("must be positive, got {tau}")));
        }
        let count = match family {
            Family::Mlg3 => 2,
            Family::Mlg4 => 3,
            other => {
                return Err(Error::invalid(
                    "family",
                    format!("{other} is not a coherent-state family; use mLG3 or mLG4"),
                ))
            }
        };
        let parts = equal_windows(t1, tau, count)?;
        let outer = crate::kernels::TimeWindow::new(t1, t1 + count as f64 * tau)?;
        let mut windows = parts;
        windows.push(outer);
        let operators = windows
            .par_iter()
            .map(|w| F12Operator::new(w, table, config))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            family,
            operators,
            table,
            config,
        })
    }

    /// Spectral dwell time of the state with amplitudes `c`.
    fn dwell(&self, c: &[Complex64]) -> DwellTime {
        let omega = self.config.omega();
        let diag: f64 = c
            .iter()
            .enumerate()
            .map(|(n, a)| {
                let m = self.table.get(n, n);
                a.norm_sqr() * m * m
            })
            .sum();
        DwellTime {
            tau_d_sq: (std::f64::consts::PI / omega).powi(2) * diag,
            method: DwellMethod::Spectral,
        }
    }

    /// Full report for the coherent state at (x₀, p₀).
    pub fn report(&self, x0: f64, p0: f64) -> Result<InequalityReport> {
        let alpha = alpha_from_phase_space(x0, p0, self.config.omega());
        let state = coherent_amplitudes(alpha, &self.config.truncation)?;
        Ok(self.report_amplitudes(state.amplitudes()))
    }

    pub fn report_amplitudes(&self, c: &[Complex64]) -> InequalityReport {
        let f: Vec<CorrelatorValue> = self.operators.iter().map(|op| op.expectation(c)).collect();
        let dwell = self.dwell(c);
        match self.family {
            Family::Mlg3 => mlg3_evaluate(&f[0], &f[1], &f[2], &dwell),
            _ => mlg4_evaluate(&f[0], &f[1], &f[2], &f[3], &dwell),
        }
    }

    /// (most negative kernel, its index, τ_D²), or None when the state does not fit the cutoff.
    pub fn evaluate(&self, x0: f64, p0: f64) -> Option<(f64, usize, f64)> {
        let r = self.report(x0, p0).ok()?;
        let (i, k) = r.min_kernel();
        Some((k, i, r.tau_d_sq))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    kernel: f64,
    radius: f64,
    index: usize,
    x0: f64,
    p0: f64,
}

/// Ordering by kernel, then |α|, then grid position.
fn better(a: &Candidate, b: &Candidate) -> bool {
    let scale = a.kernel.abs().max(b.kernel.abs()).max(f64::MIN_POSITIVE);
    if (a.kernel - b.kernel).abs() > 1e-12 * scale {
        return a.kernel < b.kernel;
    }
    if a.radius != b.radius {
        return a.radius < b.radius;
    }
    a.index < b.index
}

/// Representative of the (x₀, p₀) ↔ (−x₀, −p₀) pair with p₀ ≤ 0.
fn canonical(x0: f64, p0: f64) -> (f64, f64) {
    if p0 > 0.0 || (p0 == 0.0 && x0 < 0.0) {
        (-x0, -p0)
    } else {
        (x0, p0)
    }
}

/// Grid scan then simplex refinement of the lowest cells.
pub fn optimize_coherent(
    tau: f64,
    family: Family,
    domain: &SearchDomain,
    table: &MatrixElementTable,
    config: &OscillatorConfig,
) -> Result<OptimumRecord> {
    domain.validate()?;
    let objective = CoherentObjective::new(tau, family, table, config)?;
    optimize_with(&objective, tau, domain, config)
}

/// [`optimize_coherent`] with a prebuilt objective.
pub fn optimize_with(
    objective: &CoherentObjective<'_>,
    tau: f64,
    domain: &SearchDomain,
    config: &OscillatorConfig,
) -> Result<OptimumRecord> {
    domain.validate()?;
    let omega = config.omega();
    let (nx, np) = domain.grid;
    let cells: Vec<Option<Candidate>> = (0..nx * np)
        .into_par_iter()
        .map(|idx| {
            let (x0, p0) = domain.node(idx / np, idx % np);
            objective.evaluate(x0, p0).map(|(kernel, _, _)| Candidate {
                kernel,
                radius: alpha_from_phase_space(x0, p0, omega).norm(),
                index: idx,
                x0,
                p0,
            })
        })
        .collect();
    let skipped = cells.iter().filter(|c| c.is_none()).count();
    let mut ranked: Vec<Candidate> = cells.into_iter().flatten().collect();
    if ranked.is_empty() {
        return Err(Error::EmptyDomain(
            "no grid node fits the Fock cutoff; raise max_level or shrink the domain".into(),
        ));
    }
    ranked.sort_by(|a, b| {
        a.kernel
            .total_cmp(&b.kernel)
            .then(a.radius.total_cmp(&b.radius))
            .then(a.index.cmp(&b.index))
    });
    let grid_best = ranked
        .iter()
        .copied()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("nonempty");

    let (dx, dp) = domain.spacing();
    let options = SimplexOptions {
        f_tol: domain.refine_tol,
        x_tol: 1e-6 * dx.max(dp).max(f64::MIN_POSITIVE),
        max_iterations: 4000,
    };
    let mut starts: Vec<Candidate> = vec![grid_best];
    starts.extend(ranked.iter().filter(|c| c.index != grid_best.index).take(3).copied());
    let refined: Vec<(Candidate, bool)> = starts
        .par_iter()
        .map(|s| {
            let f = |x: &[f64]| {
                if !domain.contains(x[0], x[1]) {
                    return f64::INFINITY;
                }
                objective.evaluate(x[0], x[1]).map_or(f64::INFINITY, |e| e.0)
            };
            let r = minimize(f, &[s.x0, s.p0], &[0.5 * dx.max(1e-3), 0.5 * dp.max(1e-3)], &options);
            let cand = if r.f < s.kernel {
                Candidate {
                    kernel: r.f,
                    radius: alpha_from_phase_space(r.x[0], r.x[1], omega).norm(),
                    index: s.index,
                    x0: r.x[0],
                    p0: r.x[1],
                }
            } else {
                *s
            };
            (cand, r.converged)
        })
        .collect();
    let (best, converged) = refined
        .iter()
        .copied()
        .reduce(|a, b| if better(&b.0, &a.0) { b } else { a })
        .expect("at least one start");

    let (x0, p0) = canonical(best.x0, best.p0);
    let (_, index, tau_d_sq) = objective
        .evaluate(x0, p0)
        .expect("refined point was feasible before reflection");
    let alpha = alpha_from_phase_space(x0, p0, omega);
    Ok(OptimumRecord {
        omega_tau: omega * tau,
        alpha: (alpha.re, alpha.im),
        x0,
        p0,
        best_kernel: best.kernel,
        kernel_index: index,
        tau_d_sq,
        grid_kernel: grid_best.kernel,
        converged,
        skipped_nodes: skipped,
    })
}

/// One sweep row: the τ used and its outcome.
#[derive(Debug)]
pub struct SweepRow {
    pub tau: f64,
    pub outcome: Result<OptimumRecord>,
}

/// [`optimize_coherent`] for each τ, in input order; failures stay in their row.
pub fn sweep_grid(
    tau_values: &[f64],
    family: Family,
    domain: &SearchDomain,
    table: &MatrixElementTable,
    config: &OscillatorConfig,
) -> Result<Vec<SweepRow>> {
    if tau_values.is_empty() {
        return Err(Error::invalid("tau_values", "at least one window length is required"));
    }
    domain.validate()?;
    Ok(tau_values
        .iter()
        .map(|&tau| SweepRow {
            tau,
            outcome: optimize_coherent(tau, family, domain, table, config),
        })
        .collect())
}

/// Rows `omega_tau,x0,p0,best_kernel,kernel_index,tau_d_sq` for the successful records.
pub fn write_sweep_csv<W: std::io::Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    use crate::export::fmt_f64;
    writeln!(out, "omega_tau,x0,p0,best_kernel,kernel_index,tau_d_sq")?;
    for row in rows {
        if let Ok(r) = &row.outcome {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f64(r.omega_tau),
                fmt_f64(r.x0),
                fmt_f64(r.p0),
                fmt_f64(r.best_kernel),
                r.kernel_index,
                fmt_f64(r.tau_d_sq)
            )?;
        }
    }
    Ok(())
}

/// Index where a curve that starts by decreasing stops doing so appreciably.
///
/// Steps are compared with the largest drop seen so far; the first step
/// whose drop falls below `fraction` of it marks the plateau.
pub fn plateau_onset(values: &[f64], fraction: f64) -> Option<usize> {
    let mut largest: f64 = 0.0;
    for i in 1..values.len() {
        let drop = values[i - 1] - values[i];
        if largest > 0.0 && drop < fraction * largest {
            return Some(i - 1);
        }
        largest = largest.max(drop);
    }
    None
}

/// Map α back to phase space, for reporting.
pub fn record_phase_space(record: &OptimumRecord, omega: f64) -> (f64, f64) {
    phase_space_from_alpha(record.alpha(), omega)
}
