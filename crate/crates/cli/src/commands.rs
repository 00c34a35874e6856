//! Subcommand bodies. Each returns the exit code on failure.

use std::f64::consts::PI;

use mlg_core::export::{Conventions, ReportDocument, ReportInputs};
use mlg_core::inequalities::{
    equal_windows, lg2_report, mlg3_evaluate_windows, mlg4_evaluate_windows, spectral_dwell_for_eigenstate,
};
use mlg_core::optimizer::write_sweep_csv;
use mlg_core::oscillator::momentum_fock_state;
use mlg_core::{
    alpha_from_phase_space, coherent_amplitudes, dwell_time_sq, f12sq_curve, f12sq_expectation, f12sq_p1_closed, matrix_elements, stationary_kernels, standard_correlator_map, sweep_grid,
    CorrelatorValue, CouplingSpec, DwellMethod, Error, Family, InequalityReport, MatrixElementTable,
    OscillatorConfig, StateVector, TimeWindow,
};

use crate::config::{Format, RunConfig, StateSpec};
use crate::output::{emit, Cell, Table};

pub const USAGE: u8 = 2;
pub const NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub type Outcome = Result<(), Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter { .. }
            | Error::WindowMismatch(_)
            | Error::UnsupportedCoupling(_)
            | Error::EmptyDomain(_) => USAGE,
            Error::TruncationInsufficient { .. }
            | Error::ZeroNorm(_)
            | Error::SeriesNonconvergence { .. }
            | Error::DegenerateDwellTime(_) => NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: NUMERICAL,
            message: format!("writing output: {e}"),
        }
    }
}

struct Setup {
    osc: OscillatorConfig,
    table: MatrixElementTable,
}

fn setup(config: &RunConfig) -> Result<Setup, Failure> {
    let osc = OscillatorConfig::new(config.omega, config.truncation)?;
    let table = matrix_elements(&config.coupling, &osc)?;
    Ok(Setup { osc, table })
}

fn build_state(spec: StateSpec, osc: &OscillatorConfig) -> Result<StateVector, Failure> {
    let n_max = osc.max_level();
    match spec {
        StateSpec::Fock { n } if n > n_max => Err(usage(format!("state level {n} exceeds max_level {n_max}"))),
        StateSpec::Fock { n } => Ok(StateVector::fock(n, n_max)),
        StateSpec::Coherent { x0, p0 } => {
            Ok(coherent_amplitudes(alpha_from_phase_space(x0, p0, osc.omega()), &osc.truncation)?)
        }
        StateSpec::Pstate { n } if n + 1 > n_max => {
            Err(usage(format!("pstate:{n} needs max_level >= {}", n + 1)))
        }
        StateSpec::Pstate { n } => Ok(momentum_fock_state(n, osc)?),
    }
}

fn taus(config: &RunConfig) -> Result<Vec<(f64, f64)>, Failure> {
    let xs = config.omega_tau_values().map_err(usage)?;
    if let Some(x) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(usage(format!("omega_tau values must be finite and nonnegative, got {x}")));
    }
    Ok(xs.into_iter().map(|x| (x, x / config.omega)).collect())
}

pub fn correlator(config: &RunConfig) -> Outcome {
    let Setup { osc, table } = setup(config)?;
    let state = build_state(config.state, &osc)?;
    let points = taus(config)?;
    let windows = points
        .iter()
        .map(|&(_, tau)| TimeWindow::new(config.t1, config.t1 + tau))
        .collect::<Result<Vec<_>, _>>()?;
    let values = f12sq_curve(&state, &windows, &table, &osc)?;

    let closed_form = matches!(config.state, StateSpec::Pstate { n: 1 });
    if closed_form && config.t1 != 0.0 {
        return Err(usage("the pstate:1 closed form is defined for windows starting at t1 = 0"));
    }
    let fock_level = match config.state {
        StateSpec::Fock { n } => Some(n),
        _ => None,
    };
    if config.oscillatory && fock_level.is_none() {
        return Err(usage("the oscillatory part is defined for Fock states only"));
    }
    let dwell = if config.mapped {
        Some(dwell_time_sq(&state, &table, &osc, config.dwell)?)
    } else {
        None
    };

    let mut columns = vec!["omega_tau"];
    columns.extend(if closed_form { vec!["closed", "exact"] } else { vec!["value"] });
    columns.push("tail_estimate");
    if config.oscillatory {
        columns.push("oscillatory");
    }
    if config.mapped {
        if closed_form {
            columns.extend(["closed_mapped", "exact_mapped"]);
        } else {
            columns.push("mapped");
        }
    }
    let mut table_out = Table::new(columns);
    for (&(x, tau), value) in points.iter().zip(&values) {
        let mut row = vec![Cell::Float(x)];
        let closed = if closed_form { Some(f12sq_p1_closed(tau, &osc)?) } else { None };
        if let Some(c) = &closed {
            row.push(Cell::Float(c.value));
        }
        row.push(Cell::Float(value.value));
        row.push(Cell::Float(value.tail_estimate));
        if let Some(n) = fock_level.filter(|_| config.oscillatory) {
            let m = table.get(n, n);
            row.push(Cell::Float(value.value - tau * tau * m * m));
        }
        if let Some(d) = &dwell {
            if let Some(c) = &closed {
                row.push(Cell::Float(standard_correlator_map(c, &closed_p1_dwell(&osc))?));
            }
            row.push(Cell::Float(standard_correlator_map(value, d)?));
        }
        table_out.push(row);
    }
    emit("correlator", config, &table_out, None)?;
    Ok(())
}

/// π²/(4ω²), the dwell time paired with the p̂|1⟩ closed form.
fn closed_p1_dwell(osc: &OscillatorConfig) -> mlg_core::DwellTime {
    mlg_core::DwellTime {
        tau_d_sq: PI * PI / (4.0 * osc.omega() * osc.omega()),
        method: DwellMethod::WindowPi,
    }
}

fn windows_for(family: Family, t1: f64, tau: f64) -> Result<Vec<TimeWindow>, Error> {
    let count = match family {
        Family::Mlg3 => 2,
        Family::Mlg4 => 3,
        _ => 1,
    };
    let mut w = equal_windows(t1, tau, count)?;
    if count > 1 {
        w.push(TimeWindow::new(t1, t1 + count as f64 * tau)?);
    }
    Ok(w)
}

fn report_at(
    config: &RunConfig,
    state: &StateVector,
    tau: f64,
    table: &MatrixElementTable,
    osc: &OscillatorConfig,
) -> Result<(InequalityReport, Vec<TimeWindow>), Failure> {
    let family = config.family;
    match family {
        Family::Stat3 | Family::Stat4 => {
            let StateSpec::Fock { n } = config.state else {
                return Err(usage(format!("{family} applies to Fock states only")));
            };
            let r = stationary_kernels(n, tau, table, osc)?;
            let (report, span) = if family == Family::Stat3 { (r.stat3, 2.0) } else { (r.stat4, 3.0) };
            let windows = vec![
                TimeWindow::new(config.t1, config.t1 + tau)?,
                TimeWindow::new(config.t1, config.t1 + span * tau)?,
            ];
            Ok((report, windows))
        }
        Family::TwoTimeDelta => {
            let w = TimeWindow::new(config.t1, config.t1 + tau)?;
            let f = f12sq_expectation(state, &w, table, osc)?;
            let dwell = dwell_for(config, state, table, osc)?;
            Ok((lg2_report(&f, &dwell)?, vec![w]))
        }
        Family::Mlg3 | Family::Mlg4 => {
            let windows = windows_for(family, config.t1, tau)?;
            let f: Vec<CorrelatorValue> = windows
                .iter()
                .map(|w| f12sq_expectation(state, w, table, osc))
                .collect::<Result<_, _>>()?;
            let dwell = dwell_for(config, state, table, osc)?;
            let report = if family == Family::Mlg3 {
                // inputs ordered (12, 23, 13)
                mlg3_evaluate_windows([(&f[0], &windows[0]), (&f[1], &windows[1]), (&f[2], &windows[2])], &dwell)?
            } else {
                mlg4_evaluate_windows(
                    [
                        (&f[0], &windows[0]),
                        (&f[1], &windows[1]),
                        (&f[2], &windows[2]),
                        (&f[3], &windows[3]),
                    ],
                    &dwell,
                )?
            };
            Ok((report, windows))
        }
    }
}

fn dwell_for(
    config: &RunConfig,
    state: &StateVector,
    table: &MatrixElementTable,
    osc: &OscillatorConfig,
) -> Result<mlg_core::DwellTime, Failure> {
    match (config.state, config.dwell) {
        (StateSpec::Fock { n }, DwellMethod::Spectral) => Ok(spectral_dwell_for_eigenstate(n, table, osc)),
        _ => Ok(dwell_time_sq(state, table, osc, config.dwell)?),
    }
}

pub fn inequalities(config: &RunConfig) -> Outcome {
    let Setup { osc, table } = setup(config)?;
    let state = build_state(config.state, &osc)?;
    let points = taus(config)?;
    let kernel_count = match config.family {
        Family::Mlg3 | Family::Mlg4 => 4,
        _ => 1,
    };
    let mut columns = vec!["omega_tau".to_string()];
    columns.extend((1..=kernel_count).map(|i| format!("kernel_{i}")));
    columns.extend((1..=kernel_count).map(|i| format!("violated_{i}")));
    columns.extend(["min_kernel", "luders_scale", "tau_d_sq", "tail_estimate"].map(String::from));
    let mut out = Table::new(columns);
    let mut documents = Vec::new();
    for &(x, tau) in &points {
        if tau <= 0.0 {
            return Err(usage("inequality windows need omega_tau > 0"));
        }
        let (report, windows) = report_at(config, &state, tau, &table, &osc)?;
        let mut row = vec![Cell::Float(x)];
        row.extend(report.kernels.iter().map(|&k| Cell::Float(k)));
        row.extend(report.violated.iter().map(|&v| Cell::Bool(v)));
        row.push(Cell::Float(report.min_kernel().1));
        row.push(Cell::Float(report.luders_scale.lower));
        row.push(Cell::Float(report.tau_d_sq));
        row.push(Cell::Float(report.tail_estimate));
        out.push(row);
        if config.format == Format::Json {
            let inputs = ReportInputs {
                state: config.state.to_string(),
                coupling: config.coupling.to_string(),
                omega: config.omega,
                windows: windows.iter().map(|w| [w.t1(), w.t2()]).collect(),
            };
            documents.push(ReportDocument::new(&report, inputs, Conventions::new(config.dwell.to_string())));
        }
    }
    let extra = (config.format == Format::Json).then(|| ("reports", serde_json::to_value(&documents).unwrap_or_default()));
    emit("inequalities", config, &out, extra)?;
    Ok(())
}

pub fn optimize(config: &RunConfig) -> Outcome {
    let Setup { osc, table } = setup(config)?;
    if !matches!(config.family, Family::Mlg3 | Family::Mlg4) {
        return Err(usage(format!("optimize supports mLG3 and mLG4, not {}", config.family)));
    }
    let points = taus(config)?;
    if let Some(&(x, _)) = points.iter().find(|p| p.1 <= 0.0) {
        return Err(usage(format!("optimize needs omega_tau > 0, got {x}")));
    }
    let tau_values: Vec<f64> = points.iter().map(|p| p.1).collect();
    let rows = sweep_grid(&tau_values, config.family, &config.domain, &table, &osc)?;
    let failure = rows.iter().find_map(|r| r.outcome.as_ref().err().cloned());
    match config.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &rows)?;
            match &config.output {
                Some(p) => std::fs::write(p, buf)?,
                None => std::io::Write::write_all(&mut std::io::stdout().lock(), &buf)?,
            }
        }
        Format::Json => {
            let mut out = Table::new([
                "omega_tau",
                "x0",
                "p0",
                "best_kernel",
                "kernel_index",
                "tau_d_sq",
            ]);
            let mut records = Vec::new();
            for r in rows.iter().filter_map(|r| r.outcome.as_ref().ok()) {
                out.push(vec![
                    Cell::Float(r.omega_tau),
                    Cell::Float(r.x0),
                    Cell::Float(r.p0),
                    Cell::Float(r.best_kernel),
                    Cell::Int(r.kernel_index),
                    Cell::Float(r.tau_d_sq),
                ]);
                records.push(*r);
            }
            let extra = ("records", serde_json::to_value(&records).unwrap_or_default());
            emit("optimize", config, &out, Some(extra))?;
        }
    }
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

pub fn dwell(config: &RunConfig) -> Outcome {
    let Setup { osc, table } = setup(config)?;
    let state = build_state(config.state, &osc)?;
    let mut out = Table::new(["method", "tau_d_sq"]);
    for method in [DwellMethod::Spectral, DwellMethod::WindowPi] {
        let d = dwell_time_sq(&state, &table, &osc, method)?;
        out.push(vec![Cell::Text(method.to_string()), Cell::Float(d.tau_d_sq)]);
    }
    emit("dwell", config, &out, None)?;
    Ok(())
}

pub fn gaussian_table(config: &RunConfig) -> Outcome {
    if !matches!(config.coupling, CouplingSpec::Gaussian { .. }) {
        return Err(usage("gaussian-table needs --coupling gaussian:SIGMA"));
    }
    let Setup { osc, table } = setup(config)?;
    let n = osc.max_level();
    let mut out = Table::new(["n", "k", "M"]);
    for i in 0..=n {
        for k in 0..=n {
            out.push(vec![Cell::Int(i), Cell::Int(k), Cell::Float(table.get(i, k))]);
        }
    }
    emit("gaussian-table", config, &out, None)?;
    Ok(())
}
