//! Plain-text output helpers: CSV number formatting and the versioned JSON report.

use std::io::Write;

use serde::Serialize;

use crate::correlators::CorrelatorValue;
use crate::inequalities::{Family, InequalityReport, LudersScale};

/// Schema tag carried by every JSON document.
pub const SCHEMA: &str = "mlg-1";

/// 17 significant digits; re-parses to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // keep the sign of negative zero out of the files
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// Write rows of floats under a fixed header.
pub fn write_csv_rows<W: Write>(mut out: W, header: &str, rows: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(out, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// `omega_tau,value,tail_estimate` curve.
pub fn write_correlator_curve<W: Write>(
    out: W,
    omega_tau: &[f64],
    values: &[CorrelatorValue],
) -> std::io::Result<()> {
    let rows: Vec<Vec<f64>> = omega_tau
        .iter()
        .zip(values)
        .map(|(&x, v)| vec![x, v.value, v.tail_estimate])
        .collect();
    write_csv_rows(out, "omega_tau,value,tail_estimate", &rows)
}

/// Unit and method conventions recorded alongside every JSON document.
#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub units: &'static str,
    pub position_unit: &'static str,
    pub origin_density: &'static str,
    pub gaussian_window: &'static str,
    pub coherent_map: &'static str,
    pub dwell_method: String,
    pub mlg4_upper_bound: &'static str,
}

impl Conventions {
    pub fn new(dwell_method: impl Into<String>) -> Self {
        Self {
            units: "hbar = m = 1",
            position_unit: "oscillator length 1/sqrt(omega); point-coupling length absorbed",
            origin_density: "psi_0(0)^2 = 1/sqrt(pi)",
            gaussian_window: "f(x) = exp(-x^2/(2 sigma^2)) / (sigma sqrt(2 pi))",
            coherent_map: "alpha = (sqrt(omega) x0 + i p0 / sqrt(omega)) / sqrt(2)",
            dwell_method: dwell_method.into(),
            mlg4_upper_bound: "2 tau_D^2",
        }
    }
}

/// What a report was computed for.
#[derive(Debug, Clone, Serialize)]
pub struct ReportInputs {
    pub state: String,
    pub coupling: String,
    pub omega: f64,
    /// [t₁, t₂] of every window entering the kernels.
    pub windows: Vec<[f64; 2]>,
}

/// One JSON report: `{schema, family, kernels, violated, luders_scale, inputs, conventions}`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub schema: &'static str,
    pub family: Family,
    pub kernels: Vec<f64>,
    pub violated: Vec<bool>,
    pub luders_scale: LudersScale,
    pub tau_d_sq: f64,
    pub tail_estimate: f64,
    pub inputs: ReportInputs,
    pub conventions: Conventions,
}

impl ReportDocument {
    pub fn new(report: &InequalityReport, inputs: ReportInputs, conventions: Conventions) -> Self {
        Self {
            schema: SCHEMA,
            family: report.family,
            kernels: report.kernels.clone(),
            violated: report.violated.clone(),
            luders_scale: report.luders_scale,
            tau_d_sq: report.tau_d_sq,
            tail_estimate: report.tail_estimate,
            inputs,
            conventions,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
