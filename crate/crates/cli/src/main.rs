use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracwave_cli::{run_optimize, simulate, verify, CliError, RunConfig, Study};

#[derive(Parser)]
#[command(
    name = "fracwave",
    version,
    about = "Fractionally damped Westervelt simulation and optimal control"
)]
struct Cli {
    /// Worker threads for parallel studies.
    #[arg(long, global = true, env = "FRACWAVE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one forward solve.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Optimize controls, or run one of the study drivers.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// perturbation | vanishing-reg
        #[arg(long)]
        study: Option<Study>,
    },
    /// Run oracle suites and print a JSON report.
    Verify {
        /// Suite to run; repeat for several. All suites when omitted.
        #[arg(long)]
        suite: Vec<String>,
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = load(&config, seed)?;
            let manifest = simulate(&cfg, &out_dir(&cfg, out))?;
            println!("{}", manifest.display());
        }
        Command::Optimize {
            config,
            out,
            seed,
            study,
        } => {
            let cfg = load(&config, seed)?;
            let manifest = run_optimize(&cfg, &out_dir(&cfg, out), study)?;
            println!("{}", manifest.display());
        }
        Command::Verify {
            suite,
            tol_scale,
            seed,
            out,
        } => {
            let report = verify::run(&suite, tol_scale, seed)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
            println!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("verify.json"), format!("{text}\n"))?;
            }
            if !report.passed {
                return Err(CliError::Verify(format!(
                    "failed suites: {}",
                    report.failed_suites().join(", ")
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
