use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arstage::bundle::{bundle_dir, timestamp_label, Bundle};
use arstage::config::{ScenarioConfig, ScenarioKind};
use arstage::report::emit_report;
use arstage::scenario::{run_scenario, trace_scene};
use arstage::{verify, HarnessError};
use clap::{Args, Parser, Subcommand};

/// Headless AR-theater simulator.
#[derive(Parser)]
#[command(name = "arstage", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run folder name; defaults to the current UTC time.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Extrude a traced scene file into an OBJ venue.
    Trace {
        /// Scene file (JSON) with traced joints and segments.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        label: Option<String>,
    },
    /// Run a theater, distortion or bubbles scenario.
    Simulate(Common),
    /// Train corridor agents.
    Train {
        #[command(flatten)]
        common: Common,
        /// Overrides the PPO step budget.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Roll out a corridor policy.
    Rollout {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Recompute results and plots for a bundle.
    Report { dir: PathBuf },
    /// Re-check the hashes listed in a bundle manifest.
    Verify { dir: PathBuf },
}

fn load(common: &Common, allowed: &[&str]) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = ScenarioConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if !allowed.contains(&cfg.scenario.name()) {
        return Err(HarnessError::Config(format!(
            "{} scenarios are not run by this subcommand (expected {})",
            cfg.scenario.name(),
            allowed.join(", ")
        )));
    }
    Ok(cfg)
}

fn write(bundle: &Bundle, out: &Path, label: Option<&str>) -> Result<PathBuf, HarnessError> {
    let label = label.map_or_else(timestamp_label, str::to_owned);
    let dir = bundle_dir(out, &bundle.name, &label);
    bundle.write(&dir)?;
    Ok(dir)
}

fn run_common(common: &Common, cfg: &ScenarioConfig) -> Result<(), HarnessError> {
    let bundle = run_scenario(cfg)?;
    let dir = write(&bundle, &common.out, common.label.as_deref())?;
    println!("{}", dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Trace { config, out, label } => {
            let bundle = trace_scene(&config)?;
            println!("{}", write(&bundle, &out, label.as_deref())?.display());
        }
        Command::Simulate(common) => {
            let cfg = load(&common, &["theater", "distortion", "bubbles"])?;
            run_common(&common, &cfg)?;
        }
        Command::Train { common, steps } => {
            let mut cfg = load(&common, &["train"])?;
            if let (Some(n), ScenarioKind::Train { steps, .. }) = (steps, &mut cfg.scenario) {
                *steps = n;
            }
            run_common(&common, &cfg)?;
        }
        Command::Rollout { common, episodes } => {
            let mut cfg = load(&common, &["rollout"])?;
            if let (Some(n), ScenarioKind::Rollout { episodes, .. }) = (episodes, &mut cfg.scenario) {
                *episodes = n;
            }
            run_common(&common, &cfg)?;
        }
        Command::Report { dir } => {
            let report = emit_report(&dir)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Command::Verify { dir } => {
            let r = verify(&dir)?;
            for p in &r.missing {
                eprintln!("missing: {p}");
            }
            for p in &r.mismatched {
                eprintln!("mismatch: {p}");
            }
            if !r.ok() {
                return Err(HarnessError::Verify(format!("{} of {} files failed", r.missing.len() + r.mismatched.len(), r.checked)));
            }
            println!("ok: {} files", r.checked);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
