//! Command-line driver: configuration files, subcommands, run directories
//! and plot scripts.

pub mod check;
pub mod config;
pub mod plots;
pub mod store;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anderson_core::model::{validate_config, GeometryKind, PhysicsConfig};
use anderson_core::overlap::anderson_report;
use anderson_core::scaling::{
    compare_report, run_sweep, standard_fits, ComparisonReport, FitQuantity, FitResult, SweepRecord,
};
use anderson_core::scattering::{
    phase_shifts_3d, predict_gamma, require_scattering_setting, s_matrix_1d, GammaPrediction,
};
use anderson_core::spectra::{spectrum_below, spectrum_pair, working_threshold, ChannelKey, Operator};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{apply_workers_override, load_config, WORKERS_ENV};
use crate::store::RunStore;

/// Failures of the driver, each mapped to an exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid configuration.
    Usage(String),
    /// The computation itself failed.
    Numerical(String),
    /// Not enough data for the requested analysis.
    InsufficientData(String),
    /// Reading or writing the run directory failed.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
            CliError::InsufficientData(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::InsufficientData(m) => write!(f, "insufficient data: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<anderson_core::Error> for CliError {
    fn from(e: anderson_core::Error) -> Self {
        use anderson_core::Error as E;
        match e {
            E::Validation(_) | E::Domain(_) | E::Mismatch(_) => CliError::Usage(e.to_string()),
            E::Numerical(_) => CliError::Numerical(e.to_string()),
            E::InsufficientData(_) => CliError::InsufficientData(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "anderson", version, about = "Orthogonality catastrophe laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// TOML configuration file.
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    Unperturbed,
    Perturbed,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues below E for one box length.
    Spectrum {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Box length; defaults to the first of the schedule.
        #[arg(short = 'L', long)]
        length: Option<f64>,
        /// Upper cut; defaults to the largest Fermi energy.
        #[arg(short = 'E', long)]
        energy: Option<f64>,
        #[arg(long, value_enum, default_value = "unperturbed")]
        operator: Which,
        /// Angular momentum of the radial channel.
        #[arg(long, default_value_t = 0)]
        channel: u32,
    },
    /// One overlap report: ln|S|, I, F and the spectral shift.
    Overlap {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(short = 'L', long)]
        length: Option<f64>,
        #[arg(short = 'E', long)]
        energy: Option<f64>,
    },
    /// The full (E, L) schedule, resumable in a run directory.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Run directory; records are printed as CSV when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "run")]
        run_id: String,
    },
    /// 1D S-matrix or 3D phase shifts.
    Phases {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(short = 'E', long)]
        energy: Option<f64>,
    },
    /// Predicted decay exponent from scattering data.
    Gamma {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(short = 'E', long)]
        energy: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Fit the records of a run and compare with the prediction.
    Compare {
        /// Run directory written by `sweep`.
        #[arg(long)]
        out: PathBuf,
        /// Restrict the fits to lengths in [LMIN, LMAX].
        #[arg(long, num_args = 2, value_names = ["LMIN", "LMAX"])]
        window: Option<Vec<f64>>,
        /// Also write gnuplot scripts into the run directory.
        #[arg(long)]
        plots: bool,
    },
    /// Identities and inequalities on a small built-in instance.
    Check,
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let workers = std::env::var(WORKERS_ENV).ok();
    match run(cli.command, workers.as_deref()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn resolved(arg: &ConfigArg, workers: Option<&str>) -> Result<PhysicsConfig, CliError> {
    let mut cfg = load_config(&arg.config)?;
    apply_workers_override(&mut cfg, workers)?;
    let report = validate_config(&cfg);
    if !report.is_ok() {
        let lines: Vec<String> = report.violations.iter().map(|v| format!("  {v}")).collect();
        return Err(CliError::Usage(format!(
            "{} fails validation:\n{}",
            arg.config.display(),
            lines.join("\n")
        )));
    }
    Ok(cfg)
}

fn first_length(cfg: &PhysicsConfig, length: Option<f64>) -> f64 {
    length.unwrap_or(cfg.sweep.lengths[0])
}

fn energies(cfg: &PhysicsConfig, energy: Option<f64>) -> Vec<f64> {
    energy.map_or_else(|| cfg.sweep.energies.clone(), |e| vec![e])
}

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cmd: Command, workers: Option<&str>) -> Result<i32, CliError> {
    match cmd {
        Command::Spectrum {
            cfg,
            length,
            energy,
            operator,
            channel,
        } => {
            let cfg = resolved(&cfg, workers)?;
            let l = first_length(&cfg, length);
            let e = energy.unwrap_or_else(|| cfg.max_energy());
            let key = match cfg.geometry.kind {
                GeometryKind::Interval1D if channel != 0 => {
                    return Err(CliError::Usage("the interval has a single channel".into()))
                }
                GeometryKind::Interval1D => ChannelKey::line(),
                GeometryKind::RadialChannels3D => ChannelKey::new(channel),
            };
            let which = match operator {
                Which::Unperturbed => Operator::Unperturbed,
                Which::Perturbed => Operator::Perturbed,
            };
            let s = spectrum_below(&cfg, which, key, l, e)?;
            println!(
                "# L = {l}, E = {e}, channel {}, {} levels at or below E",
                key.l,
                s.values().len()
            );
            for v in s.values() {
                println!("{v:.15e}");
            }
            Ok(0)
        }
        Command::Overlap { cfg, length, energy } => {
            let mut cfg = resolved(&cfg, workers)?;
            let l = first_length(&cfg, length);
            let e = energy.unwrap_or(cfg.sweep.energies[0]);
            // the working threshold follows the energy actually requested
            cfg.sweep.energies = vec![e];
            let pair = spectrum_pair(&cfg, l, working_threshold(&cfg, l))?;
            print_json(&anderson_report(&pair, e, &cfg.tolerances)?)?;
            Ok(0)
        }
        Command::Sweep { cfg, out, run_id } => sweep(&resolved(&cfg, workers)?, out.as_deref(), &run_id),
        Command::Phases { cfg, energy } => {
            let cfg = resolved(&cfg, workers)?;
            require_scattering_setting(&cfg)?;
            let v = &cfg.potential.perturbation;
            for e in energies(&cfg, energy) {
                match cfg.geometry.kind {
                    GeometryKind::Interval1D => print_json(&s_matrix_1d(v, e, cfg.grid.scattering_step())?)?,
                    GeometryKind::RadialChannels3D => {
                        print_json(&phase_shifts_3d(v, e, cfg.sweep.lmax, &cfg.grid, &cfg.tolerances)?)?
                    }
                }
            }
            Ok(0)
        }
        Command::Gamma { cfg, energy, json } => {
            let cfg = resolved(&cfg, workers)?;
            let preds: Vec<GammaPrediction> = energies(&cfg, energy)
                .into_iter()
                .map(|e| predict_gamma(&cfg, e))
                .collect::<anderson_core::Result<_>>()?;
            if json {
                print_json(&preds)?;
            } else {
                for p in &preds {
                    println!("E = {} gamma = {}", p.energy, p.gamma);
                }
            }
            Ok(0)
        }
        Command::Compare { out, window, plots } => {
            let window = window.map(|w| (w[0], w[1]));
            compare(&out, window, plots)
        }
        Command::Check => {
            let outcomes = check::run_checks()?;
            let mut ok = true;
            for c in &outcomes {
                ok &= c.pass;
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if ok { 0 } else { 2 })
        }
    }
}

/// Configurations agree up to the worker count, which does not change results.
fn same_run(a: &PhysicsConfig, b: &PhysicsConfig) -> bool {
    let mut a = a.clone();
    let mut b = b.clone();
    a.sweep.workers = None;
    b.sweep.workers = None;
    a == b
}

fn sweep(cfg: &PhysicsConfig, out: Option<&Path>, run_id: &str) -> Result<i32, CliError> {
    let store = out.map(RunStore::create).transpose()?;
    let existing = match &store {
        Some(s) => match s.read_config()? {
            Some(prev) if !same_run(&prev, cfg) => {
                return Err(CliError::Usage(format!(
                    "{} holds a run with a different configuration",
                    s.dir().display()
                )))
            }
            _ => s.read_records()?,
        },
        None => Vec::new(),
    };
    let outcome = run_sweep(cfg, run_id, &existing)?;
    for f in &outcome.failures {
        eprintln!("failed at E = {}, L = {}: {}", f.energy, f.length, f.error);
    }
    match &store {
        Some(s) => {
            s.write_config(cfg)?;
            s.write_records(&outcome.records)?;
            eprintln!(
                "{} new points, {} records in {}",
                outcome.computed,
                outcome.records.len(),
                s.dir().display()
            );
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            store::write_records(&mut lock, &outcome.records).map_err(|e| CliError::Io(e.to_string()))?;
            lock.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(if outcome.failures.is_empty() { 0 } else { 2 })
}

#[derive(Debug, Serialize)]
struct EnergyReport {
    #[serde(flatten)]
    comparison: ComparisonReport,
    prediction: GammaPrediction,
    fits: Vec<FitResult>,
}

#[derive(Debug, Serialize)]
struct RunReport {
    run_ids: Vec<String>,
    window: Option<(f64, f64)>,
    reports: Vec<EnergyReport>,
}

fn compare(dir: &Path, window: Option<(f64, f64)>, plots: bool) -> Result<i32, CliError> {
    let store = RunStore::open(dir)?;
    let records = store.read_records()?;
    if records.is_empty() {
        return Err(CliError::InsufficientData(format!(
            "no records in {}; run `anderson sweep` first",
            dir.display()
        )));
    }
    let cfg = store
        .read_config()?
        .ok_or_else(|| CliError::Usage(format!("{} has records but no configuration", dir.display())))?;
    let energies: BTreeSet<u64> = records.iter().map(|r| r.energy.to_bits()).collect();
    let mut reports = Vec::new();
    for bits in energies {
        let e = f64::from_bits(bits);
        let prediction = predict_gamma(&cfg, e)?;
        let fits = standard_fits(&records, e, window)?;
        let comparison = compare_report(&records, &fits, &prediction, &cfg.tolerances)?;
        print_summary(&comparison, &fits);
        if plots {
            write_plots(&store, e, prediction.gamma, &fits)?;
        }
        reports.push(EnergyReport {
            comparison,
            prediction,
            fits,
        });
    }
    let run_ids: BTreeSet<String> = records.iter().map(|r: &SweepRecord| r.run_id.clone()).collect();
    store.write_report(&RunReport {
        run_ids: run_ids.into_iter().collect(),
        window,
        reports,
    })?;
    Ok(0)
}

fn print_summary(c: &ComparisonReport, fits: &[FitResult]) {
    let verdict = |p: bool| if p { "pass" } else { "FAIL" };
    println!("E = {}: gamma = {:.6e} ({} records)", c.energy, c.gamma, c.records);
    for f in fits {
        println!(
            "  {:?} slope {:.6e} +- {:.2e} over {} points",
            f.quantity, f.slope, f.stderr, f.points_used
        );
    }
    if let Some(v) = &c.f_slope {
        println!("  F slope vs gamma: {}", verdict(v.pass));
    }
    if let Some(v) = &c.bound_direction {
        println!("  bound direction: {}", verdict(v.pass));
    }
    println!("  Hadamard on all records: {}", verdict(c.hadamard_all));
    println!("  sandwich on all records: {}", verdict(c.sandwich_all));
    for n in &c.notes {
        println!("  note: {n}");
    }
}

fn write_plots(store: &RunStore, energy: f64, gamma: f64, fits: &[FitResult]) -> Result<(), CliError> {
    let find = |q| fits.iter().find(|f| f.quantity == q);
    let tag = format!("E{energy}");
    let scripts = [
        (
            format!("F_vs_lnL_{tag}"),
            plots::f_script(energy, gamma, find(FitQuantity::FVsLnL), &format!("F_vs_lnL_{tag}")),
        ),
        (
            format!("logS_vs_lnL_{tag}"),
            plots::log_s_script(
                energy,
                gamma,
                find(FitQuantity::LogSVsLnL),
                &format!("logS_vs_lnL_{tag}"),
            ),
        ),
    ];
    for (stem, text) in scripts {
        let path = store.path(&format!("{stem}.gp"));
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
