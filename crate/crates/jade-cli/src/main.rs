//! `jade`: synthesize array snapshots, estimate multipath parameters,
//! print estimation bounds, and run Monte Carlo sweeps.
//!
//! All commands read the same JSON configuration document. Angles are
//! degrees and delays nanoseconds everywhere a human sees them; exit
//! codes are 0 success, 2 configuration, 3 I/O, 4 numerical degeneracy.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use jade_core::config::read_config_file;
use jade_core::nalgebra::DMatrix;
use jade_core::csi_io::{read_csi_file, write_csi_file};
use jade_core::mc::{self, child_seed, SweepSpec};
use jade_core::model::synthesize_csi;
use jade_core::{aml, crb, doa_only, Error, Result};

#[derive(Parser)]
#[command(
    name = "jade",
    version,
    about = "Joint azimuth and delay estimation from frequency-domain array snapshots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a (optionally noisy) snapshot file from a configuration
    Simulate {
        /// JSON configuration document
        #[arg(long)]
        config: PathBuf,
        /// Snapshot file to write
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the configured estimator on a snapshot file
    Estimate {
        /// JSON configuration document
        #[arg(long)]
        config: PathBuf,
        /// Snapshot file to read
        #[arg(long)]
        csi: PathBuf,
    },
    /// Print estimation bounds for the configured scenario
    Crb {
        /// JSON configuration document
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a Monte Carlo sweep and write a CSV of RMSE and bound curves
    Sweep {
        /// JSON configuration document with a sweep section
        #[arg(long)]
        config: PathBuf,
        /// CSV file to write
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured trial count
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides the configured seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Serialize)]
struct ComplexOut {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct AmlBlock {
    theta_deg: Vec<f64>,
    tau_ns: Vec<f64>,
    beta: Vec<ComplexOut>,
    residual: f64,
    iterations: usize,
}

#[derive(Serialize)]
struct DoaOnlyBlock {
    theta_deg: Vec<f64>,
    objective: f64,
    sweeps: usize,
}

#[derive(Serialize)]
struct EstimateOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    aml: Option<AmlBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    doa_only: Option<DoaOnlyBlock>,
}

#[derive(Serialize)]
struct CrbOutput {
    sigma2: f64,
    sqrt_crb_theta_joint_deg: Vec<f64>,
    sqrt_crb_tau_joint_ns: Vec<f64>,
    sqrt_crb_theta_only_deg: Vec<f64>,
    /// Smallest eigenvalue of (azimuth-only bound − joint azimuth bound),
    /// rad²; nonnegative up to rounding.
    lambda_min_bound_gap_rad2: f64,
    crb_theta_joint_rad2: Vec<Vec<f64>>,
    crb_tau_joint_s2: Vec<Vec<f64>>,
    crb_theta_only_rad2: Vec<Vec<f64>>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter()
        .map(|r| r.iter().copied().collect())
        .collect()
}

fn sqrt_diag_scaled(m: &DMatrix<f64>, to_unit: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..m.nrows()).map(|i| to_unit(m[(i, i)].sqrt())).collect()
}

fn cmd_simulate(config: &Path, out: &Path, seed_override: Option<u64>) -> Result<()> {
    let scenario = read_config_file(config)?.to_scenario()?;
    let seed = seed_override.unwrap_or(scenario.master_seed);
    let truth = scenario.resolve_paths(child_seed(seed, 1))?;
    let clean = synthesize_csi(
        &scenario.geometry,
        &scenario.grid,
        &scenario.spectrum,
        &truth,
    )?;
    let sigma2 = scenario.noise.sigma2_for(&clean)?;
    let noisy = jade_core::model::add_noise(&clean, sigma2, child_seed(seed, 2))?;
    write_csi_file(&noisy, out)?;
    eprintln!(
        "wrote {} sensors x {} bins to {}",
        noisy.n_sensors(),
        noisy.n_bins(),
        out.display()
    );
    Ok(())
}

fn cmd_estimate(config: &Path, csi_path: &Path) -> Result<()> {
    let scenario = read_config_file(config)?.to_scenario()?;
    let file = read_csi_file(csi_path)?;
    if file.grid != scenario.grid {
        return Err(Error::DimensionMismatch(format!(
            "snapshot file grid ({} total bins, {} active, spacing {} Hz) does not match \
             the configured grid ({} total bins, {} active, spacing {} Hz)",
            file.grid.total_bins(),
            file.grid.n_active(),
            file.grid.spacing_hz(),
            scenario.grid.total_bins(),
            scenario.grid.n_active(),
            scenario.grid.spacing_hz()
        )));
    }
    let csi = file.into_csi_matrix(&scenario.geometry)?;
    let mut output = EstimateOutput {
        aml: None,
        doa_only: None,
    };
    if scenario.estimator.wants_aml() {
        let est = aml::aml_estimate(&csi, &scenario.spectrum, &scenario.aml)?;
        output.aml = Some(AmlBlock {
            theta_deg: est.theta_hat_rad.iter().map(|t| t.to_degrees()).collect(),
            tau_ns: est.tau_hat_s.iter().map(|t| t * 1e9).collect(),
            beta: est
                .beta_hat
                .iter()
                .map(|b| ComplexOut { re: b.re, im: b.im })
                .collect(),
            residual: est.residual,
            iterations: est.iterations_used,
        });
    }
    if scenario.estimator.wants_doa_only() {
        let (thetas, trace) = doa_only::doa_only_estimate_traced(&csi, &scenario.doa_only)?;
        let objective = doa_only::doa_only_objective(&csi, &thetas)?;
        output.doa_only = Some(DoaOnlyBlock {
            theta_deg: thetas.iter().map(|t| t.to_degrees()).collect(),
            objective,
            sweeps: trace.len(),
        });
    }
    println!("{}", serde_json::to_string_pretty(&output).expect("serializable output"));
    Ok(())
}

fn cmd_crb(config: &Path) -> Result<()> {
    let scenario = read_config_file(config)?.to_scenario()?;
    let nominal = scenario.nominal_paths()?;
    let clean = synthesize_csi(
        &scenario.geometry,
        &scenario.grid,
        &scenario.spectrum,
        &nominal,
    )?;
    let sigma2 = scenario.noise.sigma2_for(&clean)?;
    let report = crb::crb_report(
        &scenario.geometry,
        &scenario.grid,
        &scenario.spectrum,
        &nominal,
        sigma2,
    )?;
    let lambda_min = crb::check_bound_ordering(
        &scenario.geometry,
        &scenario.grid,
        &scenario.spectrum,
        &nominal,
        sigma2,
    )?;
    let output = CrbOutput {
        sigma2,
        sqrt_crb_theta_joint_deg: sqrt_diag_scaled(&report.crb_theta_joint, f64::to_degrees),
        sqrt_crb_tau_joint_ns: sqrt_diag_scaled(&report.crb_tau_joint, |v| v * 1e9),
        sqrt_crb_theta_only_deg: sqrt_diag_scaled(&report.crb_theta_only, f64::to_degrees),
        lambda_min_bound_gap_rad2: lambda_min,
        crb_theta_joint_rad2: matrix_rows(&report.crb_theta_joint),
        crb_tau_joint_s2: matrix_rows(&report.crb_tau_joint),
        crb_theta_only_rad2: matrix_rows(&report.crb_theta_only),
    };
    println!("{}", serde_json::to_string_pretty(&output).expect("serializable output"));
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    out: &Path,
    trials_override: Option<usize>,
    seed_override: Option<u64>,
) -> Result<()> {
    let mut spec: SweepSpec = read_config_file(config)?.to_sweep_spec()?;
    if let Some(trials) = trials_override {
        spec.scenario.n_trials = trials;
    }
    if let Some(seed) = seed_override {
        spec.scenario.master_seed = seed;
    }
    spec.validate()?;
    let total = spec.values.len();
    let variable = spec.variable;
    let result = mc::run_sweep_with(&spec, |vi, row| {
        eprintln!(
            "[{}/{total}] {}={}: {} trials, {} failures",
            vi + 1,
            variable.name(),
            row.swept_value,
            row.n_trials,
            row.failures
        );
    })?;
    let mut buf = Vec::new();
    mc::write_sweep_csv(&result, &mut buf)?;
    std::fs::write(out, buf).map_err(|source| Error::IoAt {
        path: out.to_owned(),
        source,
    })?;
    eprintln!("wrote {} rows to {}", result.rows.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { config, out, seed } => cmd_simulate(config, out, *seed),
        Command::Estimate { config, csi } => cmd_estimate(config, csi),
        Command::Crb { config } => cmd_crb(config),
        Command::Sweep {
            config,
            out,
            trials,
            seed,
        } => cmd_sweep(config, out, *trials, *seed),
    }
}

fn main() -> ExitCode {
    // Rust ignores SIGPIPE by default, which turns a downstream `head`
    // closing the pipe into a broken-pipe panic inside the print macros.
    // Restore the default disposition so the process dies quietly instead.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
