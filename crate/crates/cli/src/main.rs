use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fock_cli::cache::GramCache;
use fock_cli::commands::{self, Artifacts, Session};
use fock_cli::config::{ConfigError, ExperimentConfig, DEFAULT_PRESET};

/// Exit status for configs that fail validation.
const EXIT_INVALID_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "focklab", version, about = "Fock-space approximation experiments")]
struct Cli {
    /// TOML experiment config; overrides --preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: the config's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Built-in preset: positive-constant, positive-exponential, counterexample-default.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Worker threads for the compute kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a named function at points such as 2+0.5i.
    Eval {
        function: String,
        #[arg(allow_hyphen_values = true)]
        points: Vec<String>,
    },
    /// Distance profile d_n of the target from polynomial multiples of the weight.
    Distance,
    /// Extremal growth table log K_n(x0).
    Keyest,
    /// Parseval-type lattice sum against the Cauchy transform.
    Cauchy,
    /// Run the acceptance checks; exit 0 when all pass.
    Verify,
    /// Print the resolved config in canonical form.
    Config,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut c = match (&cli.config, &cli.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(p)) => ExperimentConfig::preset(p)?,
        (None, None) => ExperimentConfig::preset(DEFAULT_PRESET)?,
    };
    if let Some(out) = &cli.out {
        c.output_dir = out.clone();
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli, config: ExperimentConfig) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out = config.output_dir.clone();
    let cache = GramCache::from_env(&out);
    let mut session = Session::new(config, cache);
    let (name, artifacts): (&str, Artifacts) = match &cli.command {
        Command::Eval { function, points } => {
            let pts = points.iter().map(|p| commands::parse_point(p)).collect::<Result<Vec<_>>>()?;
            ("eval", commands::eval(&mut session, function, &pts)?)
        }
        Command::Distance => ("distance", commands::distance(&mut session)?),
        Command::Keyest => ("keyest", commands::keyest(&mut session)?),
        Command::Cauchy => ("cauchy", commands::cauchy(&mut session)?),
        Command::Verify => ("verify", commands::verify(&mut session)?),
        Command::Config => {
            print!("{}", session.config.to_toml());
            return Ok(0);
        }
    };
    let mut artifacts = artifacts;
    if let Some(obj) = artifacts.summary.as_object_mut() {
        obj.entry("warnings").or_insert_with(|| serde_json::json!(session.warnings));
    }
    artifacts.write(&out, name, &session)?;
    println!("{}", serde_json::to_string_pretty(&artifacts.summary)?);
    for w in &session.warnings {
        eprintln!("warning: {w}");
    }
    Ok(artifacts.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("focklab: {e}");
            let summary = serde_json::json!({ "error": "config", "detail": e.to_string() });
            println!("{summary}");
            return ExitCode::from(EXIT_INVALID_CONFIG);
        }
    };
    match run(cli, config) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("focklab: {e:#}");
            ExitCode::FAILURE
        }
    }
}
