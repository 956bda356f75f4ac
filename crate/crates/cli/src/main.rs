use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use nsac_core::harness::{run_experiment, run_sharp, ExperimentConfig, InterfaceSpec, RunMode};
use nsac_core::profile::{quartic_profile, solve_profile, Quartic, DEFAULT_HALF_WIDTH, DEFAULT_SAMPLES};
use nsac_core::spectral::{verify_spectral_bound, ProbeBoundary, ProbeField, ProbeGeometry};
use nsac_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_ABORT: u8 = 3;

#[derive(Parser)]
#[command(name = "nsac", version, about = "Diffuse-interface Navier-Stokes/Allen-Cahn laboratory")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the optimal profile table as CSV.
    Profile {
        /// Output file; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_HALF_WIDTH)]
        half_width: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Run the diffuse solver for every eps of the config.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Run the front tracker alone.
    Sharp {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Full sweep: diffuse runs, tracker, error norms and rate fits.
    Converge {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Smallest eigenvalues of the linearized operator on the config's circle.
    Spectrum {
        #[arg(short, long)]
        config: PathBuf,
        /// Common lower bound -C tested for every eps.
        #[arg(long, default_value_t = 10.0)]
        c_budget: f64,
        /// Probe the constant field 0 instead of the glued profile.
        #[arg(long)]
        zero_field: bool,
        /// Use Neumann instead of Dirichlet data on the box.
        #[arg(long)]
        neumann: bool,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::load(path)
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Profile { out, half_width, samples } => {
            let table = if half_width == DEFAULT_HALF_WIDTH && samples == DEFAULT_SAMPLES {
                quartic_profile()
            } else {
                solve_profile(&Quartic::default(), half_width, samples)?
            };
            eprintln!("sigma = {:.12}, alpha = {:.12}", table.sigma, table.alpha);
            write_or_print(out.as_deref(), &table.to_csv())?;
            Ok(0)
        }
        Command::Simulate { config } => sweep(&config, RunMode::Diffuse),
        Command::Converge { config } => sweep(&config, RunMode::Compare),
        Command::Sharp { config } => {
            let cfg = load(&config)?;
            let report = run_sharp(&cfg)?;
            let last = report.curves.last().expect("initial curve is always present");
            println!(
                "tracked to t = {} ({} frames), final area {:.6e}; output in {}",
                report.times.last().copied().unwrap_or(0.0),
                report.curves.len(),
                last.area(),
                cfg.output_dir.display()
            );
            Ok(0)
        }
        Command::Spectrum { config, c_budget, zero_field, neumann, tol } => {
            let cfg = load(&config)?;
            let InterfaceSpec::Circle { center, r0 } = cfg.interface else {
                return Err(Error::Config("the spectral probe needs interface.kind = circle".into()).into());
            };
            if cfg.lx != cfg.ly {
                return Err(Error::Config("the spectral probe needs a square domain".into()).into());
            }
            let setup = ProbeGeometry {
                center,
                radius: r0,
                side: cfg.lx,
                nx_ratio: cfg.nx_ratio,
                delta: cfg.delta,
                markers: cfg.markers,
                boundary: if neumann { ProbeBoundary::Neumann } else { ProbeBoundary::Dirichlet },
            };
            let field = if zero_field { ProbeField::Zero } else { ProbeField::Approx };
            let report = verify_spectral_bound(&setup, &quartic_profile(), &cfg.eps, c_budget, field, tol)?;
            std::fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
            let csv = report.to_csv();
            write_or_print(Some(&cfg.output_dir.join("spectrum.csv")), &csv)?;
            print!("{csv}");
            for row in &report.rows {
                println!("# eps = {}: naive potential bound {:.6e}", row.eps, row.potential_min);
            }
            println!("# bound -{c_budget}: {}", if report.pass() { "PASS" } else { "FAIL" });
            Ok(0)
        }
    }
}

fn sweep(config: &Path, mode: RunMode) -> anyhow::Result<u8> {
    let cfg = load(config)?;
    let report = run_experiment(&cfg, mode)?;
    print!("{}", report.errors_csv());
    if mode == RunMode::Compare {
        print!("{}", report.rates_csv());
    }
    Ok(if report.all_ok() { 0 } else { EXIT_ABORT })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config() => EXIT_CONFIG,
        Some(Error::Abort(_) | Error::NoConvergence { .. } | Error::NonFinite(_)) => EXIT_ABORT,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
