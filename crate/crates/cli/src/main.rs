use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use geocast_core::sim::{self, compare_models, MetricsLedger, ScenarioConfig};

/// Directory for run outputs; defaults to `./out`.
const OUT_DIR_VAR: &str = "GEOCAST_OUT_DIR";

#[derive(Parser)]
#[command(name = "geocast", version, about = "Location-based message dissemination simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write events.jsonl, disseminations.csv and epochs.csv.
    Run { config: PathBuf },
    /// Summarize one or more disseminations.csv ledgers across models.
    Compare {
        #[arg(required = true)]
        ledgers: Vec<PathBuf>,
    },
    /// Run oracle cross-checks on a reduced version of a scenario.
    Verify { config: PathBuf },
    /// Print the default scenario as TOML.
    DefaultConfig,
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn run(config: &Path) -> Result<bool> {
    let config = ScenarioConfig::load(config)?;
    let (log, ledger) = sim::run(&config)?;
    let dir = out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    log.write_jsonl(create(&dir, "events.jsonl")?)?;
    ledger.write_disseminations(create(&dir, "disseminations.csv")?)?;
    ledger.write_epochs(create(&dir, "epochs.csv")?)?;
    println!(
        "{} events, {} dissemination rows, {} epochs written to {}",
        log.len(),
        ledger.disseminations().len(),
        ledger.epochs().len(),
        dir.display()
    );
    if let Ok(summary) = compare_models(ledger.disseminations()) {
        println!("{summary}");
    }
    report_violations(&ledger.audit())
}

fn report_violations(violations: &[String]) -> Result<bool> {
    for v in violations {
        eprintln!("violation: {v}");
    }
    Ok(violations.is_empty())
}

fn compare(ledgers: &[PathBuf]) -> Result<bool> {
    let mut rows = Vec::new();
    for path in ledgers {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        rows.extend(MetricsLedger::read_disseminations(file).with_context(|| format!("reading {}", path.display()))?);
    }
    let summary = compare_models(&rows)?;
    println!("{summary}");
    Ok(summary.delivered_mismatches == 0)
}

fn verify(config: &Path) -> Result<bool> {
    let config = ScenarioConfig::load(config)?;
    let checks = sim::verify(&config)?;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config } => run(config),
        Command::Compare { ledgers } => compare(ledgers),
        Command::Verify { config } => verify(config),
        Command::DefaultConfig => {
            print!("{}", ScenarioConfig::default().to_toml());
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
