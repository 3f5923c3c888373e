//! Command-line front end: `run`, `sweep`, `validate` and `oracle`.
//!
//! Exit codes: 0 success, 1 usage or validation failure, 2 experiment or
//! IO failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{db_to_linear, ConfigError, Decibel, NetworkConfig, ThetaModel};
use crate::contention::{contention_summary, theta_closed_form, theta_gamma_function, thinning_oracle};
use crate::geometry::mean_path_loss;
use crate::harness::{
    builtin_scenario, emit_csv, gain_report, manifest, run_experiment, run_realization, Scheme, FAST_REALIZATIONS,
    FULL_REALIZATIONS, SCENARIOS,
};
use crate::link::{stp_monte_carlo, Direction};
use crate::throughput::{fd_stp, representative_path_loss};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "densewlan",
    version,
    about = "Dense full-duplex WLAN simulator and optimizer"
)]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. `--set lambda_s=0.9`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Use the closed-form contention area instead of quadrature.
    #[arg(long)]
    pub paper_theta: bool,
    /// Base seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every scheme on one network realization.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Write `run.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in experiment and write CSV plus manifest.
    Sweep {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SCENARIOS))]
        scenario: String,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// 10^3 realizations instead of 10^4.
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Check a configuration and print its canonical form and hash.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compare analytic models against simulation.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Ul,
    Dl,
    Fd,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Ul => Direction::Ul,
            DirectionArg::Dl => Direction::Dl,
            DirectionArg::Fd => Direction::Fd,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Matérn retention: analytic vs simulated.
    Thinning {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        radius: f64,
        #[arg(short = 'n', long, default_value_t = 10_000)]
        realizations: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Typical-link STP: Monte-Carlo vs closed form.
    Stp {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value = "fd")]
        direction: DirectionArg,
        #[arg(short = 'n', long, default_value_t = 10_000)]
        realizations: usize,
    },
    /// Contention area under both models.
    Theta {
        /// PCS threshold, dBm.
        #[arg(long, default_value_t = -70.0, allow_negative_numbers = true)]
        pcs: f64,
        #[arg(long, default_value_t = 3.4)]
        alpha: f64,
        /// Density used by the closed form's path-loss argument.
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) | Self::Config(_) => EXIT_INVALID,
            Self::Failed(_) => EXIT_FAILED,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Failed(format!("{}: {e}", path.display()))
}

fn read_config_file(args: &ConfigArgs) -> Result<NetworkConfig, CliError> {
    match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?;
            Ok(NetworkConfig::from_config_str(&text)?)
        }
        None => Ok(NetworkConfig::default()),
    }
}

/// Applies `--set`, `--paper-theta` and `--seed` to `cfg` and validates.
pub fn apply_overrides(mut cfg: NetworkConfig, args: &ConfigArgs) -> Result<NetworkConfig, CliError> {
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if args.paper_theta {
        cfg.theta_model = ThetaModel::ClosedForm;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg.validate()?)
}

/// Builds the validated config from file, overrides and flags.
pub fn load_config(args: &ConfigArgs) -> Result<NetworkConfig, CliError> {
    apply_overrides(read_config_file(args)?, args)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn cmd_run(args: &ConfigArgs, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let mut records = Vec::new();
    for scheme in Scheme::ALL {
        let r = run_realization(&cfg, scheme, cfg.seed).map_err(|e| CliError::Failed(format!("{scheme}: {e}")))?;
        println!(
            "{:<20} CAP {:.6e}  STP {:.6e}  SDT {:.6e}  PCS {:.6e} mW",
            scheme.name(),
            r.cap,
            r.stp,
            r.sdt,
            r.gamma_pcs
        );
        records.push(r);
    }
    if let Some(dir) = out {
        let doc = json!({
            "config": cfg.canonical_string(),
            "config_hash": cfg.content_hash(),
            "theta_model": cfg.theta_model.to_string(),
            "seed": cfg.seed,
            "records": records,
        });
        write_file(&dir.join("run.json"), &pretty(&doc))?;
    }
    Ok(())
}

fn cmd_sweep(
    scenario: &str,
    args: &ConfigArgs,
    out: &Path,
    fast: bool,
    realizations: Option<usize>,
) -> Result<(), CliError> {
    // Scenario settings sit between the file and the command-line overrides.
    let file_cfg = read_config_file(args)?.validate()?;
    let n = realizations.unwrap_or(if fast { FAST_REALIZATIONS } else { FULL_REALIZATIONS });
    if n == 0 {
        return Err(CliError::Invalid("--realizations must be at least 1".into()));
    }
    let mut s =
        builtin_scenario(scenario, &file_cfg, n, file_cfg.seed).map_err(|e| CliError::Invalid(e.to_string()))?;
    s.base = apply_overrides(s.base, args)?;
    s.base_seed = s.base.seed;
    let m = manifest(&s).map_err(|e| CliError::Invalid(e.to_string()))?;
    let result = run_experiment(&s).map_err(|e| CliError::Failed(e.to_string()))?;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let csv = out.join(format!("{scenario}.csv"));
    emit_csv(&result, &csv).map_err(|e| io_err(&csv, e))?;
    write_file(&out.join(format!("{scenario}.manifest.json")), &pretty(&m))?;
    eprintln!(
        "{}: {} rows, {} failed realizations -> {}",
        scenario,
        result.cells.len(),
        result.failures(),
        csv.display()
    );
    for line in gain_report(&result) {
        eprintln!("  {line}");
    }
    Ok(())
}

fn cmd_validate(args: &ConfigArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    print!("{}", cfg.canonical_string());
    println!("hash = {}", cfg.content_hash());
    Ok(())
}

fn cmd_oracle(cmd: &OracleCommand) -> Result<(), CliError> {
    match cmd {
        &OracleCommand::Thinning {
            lambda,
            radius,
            realizations,
            seed,
        } => {
            if lambda.is_nan() || lambda <= 0.0 || radius.is_nan() || radius <= 0.0 || realizations < 2 {
                return Err(CliError::Invalid(
                    "--lambda and --radius must be positive and -n at least 2".into(),
                ));
            }
            let o =
                thinning_oracle(lambda, radius, realizations, seed).map_err(|e| CliError::Invalid(e.to_string()))?;
            println!(
                "load (lambda*pi*R^2) = {:.6}",
                lambda * std::f64::consts::PI * radius * radius
            );
            println!("analytic retention   = {:.8}", o.analytic);
            println!(
                "empirical retention  = {:.8} +- {:.2e} ({} points)",
                o.empirical, o.stderr, o.points
            );
            println!("relative error       = {:.3e} ({:.2} stderr)", o.rel_error, o.z());
            println!("hard-core violations = {}", o.hard_core_violations);
        }
        OracleCommand::Stp {
            config,
            direction,
            realizations,
        } => {
            let cfg = load_config(config)?;
            let (lt_s, lt_a) =
                crate::contention::hd_active_densities(&cfg).map_err(|e| CliError::Failed(e.to_string()))?;
            let ell = representative_path_loss(&cfg);
            let analytic = match Direction::from(*direction) {
                Direction::Ul => crate::link::stp_laplace(&cfg, 1.0, ell, lt_s),
                Direction::Dl => crate::link::stp_laplace(&cfg, 1.0, ell, lt_a),
                Direction::Fd => fd_stp(&cfg, 1.0, ell, lt_s, lt_a).0,
            };
            let mc = stp_monte_carlo(&cfg, (*direction).into(), (*realizations).max(1));
            println!("closed form (representative pair) = {analytic:.8}");
            println!(
                "Monte-Carlo (nearest AP)          = {:.8} +- {:.2e} (n = {})",
                mc.estimate, mc.stderr, mc.n
            );
        }
        &OracleCommand::Theta { pcs, alpha, lambda } => {
            let cfg = NetworkConfig {
                pcs: db_to_linear(Decibel(pcs)),
                alpha,
                ..Default::default()
            }
            .validate()?;
            let numeric = contention_summary(&cfg, lambda).map_err(|e| CliError::Failed(e.to_string()))?;
            println!("numeric quadrature   = {:.12e}", numeric.theta);
            println!("gamma-function form  = {:.12e}", theta_gamma_function(cfg.pcs, alpha));
            println!(
                "closed form          = {:.12e}",
                theta_closed_form(cfg.pcs, mean_path_loss(lambda, alpha))
            );
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
        }
    };
    let res = match &cli.command {
        Command::Run { config, out } => cmd_run(config, out.as_deref()),
        Command::Sweep {
            scenario,
            config,
            out,
            fast,
            realizations,
        } => cmd_sweep(scenario, config, out, *fast, *realizations),
        Command::Validate { config } => cmd_validate(config),
        Command::Oracle(o) => cmd_oracle(o),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main_with_args() -> i32 {
    parse_and_dispatch(std::env::args_os())
}
