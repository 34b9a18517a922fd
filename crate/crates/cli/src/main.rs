use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sppfetd::harness::{
    run_convergence_study, run_simulation, scenario, ConvergenceMode, PreparedRun, SimulationConfig,
};
use sppfetd::Error;

#[derive(Parser)]
#[command(name = "sppfetd", version, about = "Edge-element FETD solver for graphene SPPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Manufactured-solution convergence study.
    Convergence {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Comma-separated mesh sizes, e.g. `1/10,1/20,1/40`.
        #[arg(long, value_delimiter = ',', value_parser = parse_size, required = true)]
        h: Vec<f64>,
        /// Time step (fixed mode only).
        #[arg(long)]
        tau: Option<f64>,
        /// Final time.
        #[arg(long = "T")]
        final_time: Option<f64>,
        /// `h / τ` in coupled mode.
        #[arg(long, default_value_t = 200.0)]
        ratio: f64,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write a built-in scenario's config into DIR and run it there.
    Scenario {
        name: String,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report the CFL bound for a config without running it.
    CheckCfl { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fixed,
    Coupled,
}

fn parse_size(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            num / den
        }
        None => s.parse().map_err(|_| format!("bad mesh size {s:?}"))?,
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("mesh size must be positive, got {s:?}"))
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::MeshParse { .. }
        | Error::MeshInvariant(_)
        | Error::Snap(_) => 2,
        Error::BlowUp { .. } | Error::NonFinite(_) => 3,
        _ => 1,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("SPPFETD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("SPPFETD_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable value")
}

fn run_config(mut config: SimulationConfig, out: Option<PathBuf>, snapshot_every: Option<usize>) -> Result<(), Error> {
    if let Some(n) = snapshot_every {
        config.snapshot_every = Some(n);
    }
    let out = out.or_else(|| config.output_dir.clone());
    config.validate()?;
    let summary = run_simulation(&config, out.as_deref())?;
    println!("{}", to_json(&summary));
    Ok(())
}

fn convergence(
    mode: Mode,
    hs: &[f64],
    tau: Option<f64>,
    final_time: Option<f64>,
    ratio: f64,
    json: Option<&Path>,
) -> Result<(), Error> {
    let mode = match mode {
        Mode::Fixed => {
            let tau = tau.unwrap_or(1e-4);
            let final_time = final_time.unwrap_or(0.1);
            if !(tau > 0.0 && final_time >= 0.0) {
                return Err(Error::Config("need τ > 0 and T ≥ 0".into()));
            }
            let steps = (final_time / tau).round() as usize;
            ConvergenceMode::Fixed { tau, steps }
        }
        Mode::Coupled => {
            if tau.is_some() {
                return Err(Error::Config("--tau is fixed by --ratio in coupled mode".into()));
            }
            ConvergenceMode::Coupled {
                ratio,
                final_time: final_time.unwrap_or(0.01),
            }
        }
    };
    let table = run_convergence_study(mode, hs)?;
    print!("{table}");
    if let Some(path) = json {
        std::fs::write(path, to_json(&table)).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

fn check_cfl(path: &Path) -> Result<(), Error> {
    let config = SimulationConfig::load(path)?;
    let report = PreparedRun::new(&config)?.cfl()?;
    println!("{}", to_json(&report));
    if !report.satisfied {
        eprintln!(
            "warning: τ = {:e} exceeds the CFL bound {:e} (h = {:e})",
            report.tau, report.limit, report.h
        );
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::Run {
            config,
            out,
            snapshot_every,
        } => run_config(SimulationConfig::load(&config)?, out, snapshot_every),
        Command::Convergence {
            mode,
            h,
            tau,
            final_time,
            ratio,
            json,
        } => convergence(mode, &h, tau, final_time, ratio, json.as_deref()),
        Command::Scenario { name, steps, out } => {
            let mut config = scenario(&name)?;
            if let Some(n) = steps {
                config.steps = n;
            }
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            config.output_dir = Some(out.clone());
            config.save(&out.join("config.json"))?;
            run_config(config, Some(out), None)
        }
        Command::CheckCfl { config } => check_cfl(&config),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
