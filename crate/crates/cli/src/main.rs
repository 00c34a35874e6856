//! `mlg`: correlator curves, inequality kernels and coherent-state optima as CSV or JSON.
//!
//! Exit status: 0 success, 2 usage or configuration error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "mlg", version, about = "Waiting-detector correlators and modified Leggett-Garg kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// <F12^2> against omega*tau, optionally with the oscillatory part and mapped correlator.
    Correlator(Settings),
    /// Inequality kernels against omega*tau.
    Inequalities(Settings),
    /// Coherent-state optimum of the most negative kernel for each omega*tau.
    Optimize(Settings),
    /// Dwell time by both methods.
    Dwell(Settings),
    /// Gaussian-window matrix elements M_nk for n, k <= max_level.
    GaussianTable(Settings),
}

/// Flags mirror the `key=value` config keys; flags override the file.
#[derive(Args, Debug, Default)]
struct Settings {
    /// key=value file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// delta | gaussian:SIGMA
    #[arg(long)]
    coupling: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    /// fock:N | coherent:X0,P0 | pstate:N
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    #[arg(long)]
    max_level: Option<String>,
    #[arg(long)]
    tail_tol: Option<String>,
    /// Intermediate-level cutoff, or `auto`.
    #[arg(long)]
    sum_levels: Option<String>,
    /// Start of the first window.
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<String>,
    /// omega*tau grid START:END:STEP.
    #[arg(long)]
    grid: Option<String>,
    /// Comma-separated omega*tau values; replaces --grid.
    #[arg(long)]
    omega_tau: Option<String>,
    /// mLG3 | mLG4 | stat3 | stat4 | lg2
    #[arg(long)]
    family: Option<String>,
    /// spectral | window_pi
    #[arg(long)]
    dwell: Option<String>,
    /// LO:HI
    #[arg(long, allow_hyphen_values = true)]
    x0_range: Option<String>,
    /// LO:HI
    #[arg(long, allow_hyphen_values = true)]
    p0_range: Option<String>,
    /// NXxNP
    #[arg(long)]
    grid_nodes: Option<String>,
    #[arg(long)]
    refine_tol: Option<String>,
    /// Add the oscillatory part (Fock states only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    oscillatory: Option<String>,
    /// Add the mapped standard correlator.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    mapped: Option<String>,
    /// Output file; stdout when absent or `-`.
    #[arg(long, short)]
    output: Option<String>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Print the resolved configuration as key=value and exit.
    #[arg(long)]
    print_config: bool,
}

impl Settings {
    fn flags(&self) -> [(&'static str, &Option<String>); 19] {
        [
            ("coupling", &self.coupling),
            ("omega", &self.omega),
            ("state", &self.state),
            ("max_level", &self.max_level),
            ("tail_tol", &self.tail_tol),
            ("sum_levels", &self.sum_levels),
            ("t1", &self.t1),
            ("grid", &self.grid),
            ("omega_tau", &self.omega_tau),
            ("family", &self.family),
            ("dwell", &self.dwell),
            ("x0_range", &self.x0_range),
            ("p0_range", &self.p0_range),
            ("grid_nodes", &self.grid_nodes),
            ("refine_tol", &self.refine_tol),
            ("oscillatory", &self.oscillatory),
            ("mapped", &self.mapped),
            ("output", &self.output),
            ("format", &self.format),
        ]
    }

    fn resolve(&self) -> Result<RunConfig, String> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
            cfg.apply_file_text(&text)?;
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (settings, run): (&Settings, fn(&RunConfig) -> commands::Outcome) = match &cli.command {
        Command::Correlator(s) => (s, commands::correlator),
        Command::Inequalities(s) => (s, commands::inequalities),
        Command::Optimize(s) => (s, commands::optimize),
        Command::Dwell(s) => (s, commands::dwell),
        Command::GaussianTable(s) => (s, commands::gaussian_table),
    };
    let config = match settings.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(commands::USAGE);
        }
    };
    if settings.print_config {
        print!("{}", config.to_kv());
        return ExitCode::SUCCESS;
    }
    match run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
