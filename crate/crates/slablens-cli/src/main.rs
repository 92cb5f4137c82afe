//! Command-line front end for the slab lens library.
//!
//! Four subcommands cover the workflows the library exposes:
//!
//! - `slablens sweep` runs the configured loss sweep and writes the
//!   dataset (CSV or JSON) to the configured path, `--out`, or stdout,
//!   with a human-readable digest on stderr.
//! - `slablens eval` computes a single dataset row and prints it as JSON.
//! - `slablens verify` runs the self-check suites and prints the report
//!   as JSON, with a digest on stderr.
//! - `slablens presets` lists the bundled example configurations or
//!   prints one as TOML, ready to edit and pass back via `--config`.
//!
//! Exit codes: 0 on success, 1 when a verification suite fails, 2 for
//! configuration or input errors, and 3 when a sweep or evaluation
//! completes with numeric warnings (the dataset is still written; the
//! affected rows carry empty or degraded columns).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slablens::sweep::{self, RunConfig};
use slablens::Error;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "slablens",
    version,
    about = "Lossy slab lens: dissipation sweeps, bounds, and verification",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the run configuration comes from: a file or a bundled preset.
#[derive(Args, Debug)]
struct ConfigSource {
    /// Path to a TOML run configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of a bundled example configuration (see `slablens presets`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

impl ConfigSource {
    fn load(&self) -> Result<RunConfig, Error> {
        match (&self.config, &self.preset) {
            (Some(path), None) => RunConfig::load(path),
            (None, Some(name)) => sweep::preset(name),
            (None, None) => Err(Error::Config(
                "pass --config PATH or --preset NAME".into(),
            )),
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        }
    }
}

/// Command-line overrides applied on top of the loaded configuration.
#[derive(Args, Debug)]
struct Overrides {
    /// Write the primary output here instead of the configured path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Dataset format override: "csv" or "json".
    #[arg(long, value_name = "FORMAT")]
    format: Option<String>,
    /// Cap the worker-thread count; results are identical for any value.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Relative tolerance override for the dissipation integration.
    #[arg(long, value_name = "REL")]
    tol: Option<f64>,
}

impl Overrides {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(format) = &self.format {
            config.output.format = format.clone();
        }
        if let Some(tol) = self.tol {
            config.tolerances.rel_tol = tol;
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured loss sweep and write the dataset.
    Sweep {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compute one dataset row and print it as JSON.
    Eval {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        overrides: Overrides,
        /// Loss exponent; defaults to the first configured value.
        #[arg(long)]
        beta: Option<f64>,
        /// Loss value; defaults to the largest configured value.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run the verification suites and print the report as JSON.
    Verify {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        overrides: Overrides,
        /// Mutation switch override: "none" or "flip-closed-form-sign"
        /// (the latter must make the oracle suite fail).
        #[arg(long, value_name = "MODE")]
        mutate: Option<String>,
    },
    /// List bundled presets, or print one as TOML.
    Presets {
        /// Preset to print; omit to list all of them.
        name: Option<String>,
    },
}

fn write_output(out: &Option<PathBuf>, configured: Option<&str>, text: &str) -> Result<(), Error> {
    let dest = out
        .clone()
        .or_else(|| configured.map(PathBuf::from));
    match dest {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Sweep { source, overrides } => {
            let mut config = source.load()?;
            overrides.apply(&mut config);
            let outcome = sweep::run_sweep(&config, overrides.workers)?;
            let text = sweep::render_dataset(&outcome.rows, &config.output.format)?;
            write_output(&overrides.out, config.output.path.as_deref(), &text)?;
            eprint!("{}", outcome.summary.render());
            Ok(if outcome.summary.total_warnings > 0 {
                ExitCode::from(EXIT_NUMERIC)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Eval {
            source,
            overrides,
            beta,
            delta,
        } => {
            let mut config = source.load()?;
            overrides.apply(&mut config);
            let row = sweep::run_eval(&config, beta, delta)?;
            let mut text = serde_json::to_string_pretty(&row).expect("row serializes");
            text.push('\n');
            write_output(&overrides.out, None, &text)?;
            Ok(if let Some(warning) = &row.warning {
                eprintln!("warning: {warning}");
                ExitCode::from(EXIT_NUMERIC)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Verify {
            source,
            overrides,
            mutate,
        } => {
            let mut config = source.load()?;
            overrides.apply(&mut config);
            if let Some(mode) = mutate {
                config.verify.mutate = mode;
            }
            let report = sweep::run_verify(&config, overrides.workers)?;
            write_output(&overrides.out, None, &report.to_json())?;
            eprint!("{}", report.render());
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY_FAILED)
            })
        }
        Command::Presets { name } => {
            match name {
                Some(name) => print!("{}", sweep::preset(&name)?.to_toml()),
                None => {
                    for name in sweep::PRESET_NAMES {
                        println!("{name}: {}", sweep::preset_summary(name));
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            // Numeric convergence failures surface as a distinct code so
            // scripts can tell bad inputs from hard integrals.
            match error {
                Error::Integration { .. } => ExitCode::from(EXIT_NUMERIC),
                _ => ExitCode::from(EXIT_CONFIG),
            }
        }
    }
}
