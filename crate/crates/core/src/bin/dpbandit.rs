use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dpbandit::harness::{self, ExperimentConfig, ExperimentKind};
use dpbandit::stats::{max_info_bound, pvalue_correction};
use dpbandit::Error;

/// Private bandit experiments: bias, regret and p-value corrections.
#[derive(Parser)]
#[command(name = "dpbandit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set reps=1000`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bias and regret of private UCB over a grid of privacy budgets.
    Sweep {
        /// Optional base config; the experiment kind is forced to `sweep`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the corrected p-value threshold γ(α) for ε-DP gathering.
    Correct {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long = "T", value_name = "T")]
        horizon: u64,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn load(
    path: Option<&PathBuf>,
    overrides: &[String],
    threads: Option<usize>,
    out: Option<&PathBuf>,
) -> Result<ExperimentConfig, Error> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            ExperimentConfig::parse_text(&text)?
        }
        None => ExperimentConfig::default(),
    };
    for o in overrides {
        cfg.apply_override(o)?;
    }
    if let Some(t) = threads {
        cfg.threads = t;
    }
    if let Some(o) = out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn run(cfg: &ExperimentConfig) -> Result<(), Error> {
    let (out, secs) = harness::run_and_write(cfg)?;
    print!("{}", out.summary);
    println!(
        "wrote {} files to {} in {secs:.1}s",
        out.files.len() + 1,
        cfg.out.display()
    );
    Ok(())
}

fn correct(alpha: f64, beta: f64, eps: f64, horizon: u64) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config("alpha and beta must lie in [0, 1]".into()));
    }
    let k = if eps == 0.0 {
        0.0
    } else {
        max_info_bound(eps, horizon, beta)?
    };
    Ok(pvalue_correction(alpha, beta, k))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            overrides,
            threads,
            out,
        } => {
            // An unreadable config file is a config error, not a runtime one.
            load(Some(&config), &overrides, threads, out.as_ref())
                .map_err(|e| match e {
                    Error::Io { path, source } => {
                        Error::Config(format!("cannot read {}: {source}", path.display()))
                    }
                    other => other,
                })
                .and_then(|cfg| run(&cfg))
        }
        Command::Sweep {
            config,
            overrides,
            threads,
            out,
        } => load(config.as_ref(), &overrides, threads, out.as_ref()).and_then(|mut cfg| {
            cfg.experiment = ExperimentKind::Sweep;
            run(&cfg)
        }),
        Command::Correct {
            alpha,
            beta,
            eps,
            horizon,
        } => correct(alpha, beta, eps, horizon).map(|g| println!("{g}")),
        Command::Selftest => {
            let checks = dpbandit::selftest::run_all();
            let mut failed = 0;
            for c in &checks {
                match &c.outcome {
                    Ok(()) => println!("ok    {}", c.name),
                    Err(msg) => {
                        failed += 1;
                        println!("FAIL  {}: {msg}", c.name)
                    }
                }
            }
            println!("{} checks, {failed} failed", checks.len());
            if failed > 0 {
                return ExitCode::from(3);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
