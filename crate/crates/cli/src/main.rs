use clap::{Parser, Subcommand};
use dsm_bocd::detector::{build_dm, run_detector};
use dsm_bocd::io::bench::{bench_complexity, suite};
use dsm_bocd::io::config::{DetectorConfig, DetectorKind, OmegaPolicy};
use dsm_bocd::io::output::write_outputs;
use dsm_bocd::io::{load_csv, write_csv, StreamSpec};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Robust Bayesian online changepoint detection.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a detector over a CSV stream and write its artefacts.
    Detect {
        #[arg(long)]
        data: PathBuf,
        /// Config file (`key = value` lines).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a synthetic stream as CSV plus a ground-truth sidecar.
    Generate {
        /// A JSON stream spec file, or `preset:<synthetic|contamination|single_change>`.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Calibrate the learning rate on the config's window and print it.
    Calibrate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Time detector configurations and print a JSON report.
    Bench {
        /// complexity | dimension | unpruned | quick
        #[arg(long, default_value = "quick")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".truth.json");
    out.with_file_name(name)
}

fn detect(data: &Path, config: &Path, out_dir: &Path, seed: Option<u64>) -> AnyResult<bool> {
    let mut cfg = DetectorConfig::from_file(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let series = load_csv(data, &cfg.csv)?;
    let run = run_detector(&cfg, &series)?;
    write_outputs(out_dir, &run)?;
    if let Some(w) = run.omega {
        log::info!("learning rate ω = {w:e}");
    }
    println!("{}", serde_json::to_string(&run.result.map_changepoints)?);
    if let Some(e) = &run.result.error {
        eprintln!("error: stopped after {} steps: {e}", run.result.len());
        return Ok(false);
    }
    Ok(true)
}

fn generate(spec: &str, out: &Path, seed: Option<u64>) -> AnyResult<()> {
    let mut stream = match spec.strip_prefix("preset:") {
        Some(name) => StreamSpec::preset(name, 0)?,
        None => serde_json::from_str::<StreamSpec>(&std::fs::read_to_string(spec)?)?,
    };
    if let Some(s) = seed {
        stream = stream.with_seed(s);
    }
    let g = stream.generate()?;
    write_csv(out, &g.data)?;
    let truth = serde_json::json!({ "changepoints": g.changepoints, "contaminated": g.contaminated });
    std::fs::write(sidecar_path(out), serde_json::to_string_pretty(&truth)?)?;
    Ok(())
}

fn calibrate(data: &Path, config: &Path) -> AnyResult<()> {
    let cfg = DetectorConfig::from_file(config)?;
    cfg.validate()?;
    if cfg.detector != DetectorKind::Dm || !matches!(cfg.omega, OmegaPolicy::Auto(_)) {
        return Err("calibration needs `detector = dm` and `omega = auto:<t*>`".into());
    }
    let series = load_csv(data, &cfg.csv)?;
    let cal = build_dm(&cfg, &series)?.calibration.expect("auto policy calibrates");
    if cal.at_boundary {
        eprintln!("warning: the optimum lies at the edge of the search bracket");
    }
    println!("{}", cal.omega);
    Ok(())
}

fn bench(name: &str, seed: u64) -> AnyResult<()> {
    let (cases, t_grid, d_grid) = suite(name)?;
    let report = bench_complexity(&cases, &t_grid, &d_grid, seed)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Detect { data, config, out_dir, seed } => detect(data, config, out_dir, *seed),
        Command::Generate { spec, out, seed } => generate(spec, out, *seed).map(|_| true),
        Command::Calibrate { data, config } => calibrate(data, config).map(|_| true),
        Command::Bench { suite, seed } => bench(suite, *seed).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
