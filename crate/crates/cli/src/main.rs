//! `clmid`: composite load simulation and identification from the command line.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clmid_core::config::RunConfig;
use clmid_core::harness;
use clmid_core::ClmError;

#[derive(Parser, Debug)]
#[command(name = "clmid", version, about = "Composite load model simulation and two-stage identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (all cores when omitted).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Simulate the reference model and write voltage and P/Q traces.
    Simulate,
    /// Two-stage identification against the reference.
    Identify,
    /// Re-simulate an identified model across a fault-scenario sweep.
    Robustness,
    /// Compare the Q-learning search with PSO and GA.
    Compare,
    /// Mean best-of-n fitting loss versus sample count.
    LossStudy,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Identify => "identify",
            Command::Robustness => "robustness",
            Command::Compare => "compare",
            Command::LossStudy => "loss-study",
        }
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn load_config(cli: &Cli) -> Result<RunConfig, ClmError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<serde_json::Value, ClmError> {
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("clmid-out").join(cli.command.name()));
    let summary = match cli.command {
        Command::Simulate => {
            let r = harness::cmd_simulate(cfg, &out)?;
            serde_json::json!({
                "samples": r.samples,
                "initial_p": r.initial_p,
                "initial_q": r.initial_q,
            })
        }
        Command::Identify => {
            let r = harness::cmd_identify(cfg, &out)?;
            serde_json::json!({
                "composition": r.result.chosen_composition,
                "p_rmse": r.result.p_rmse,
                "q_rmse": r.result.q_rmse,
                "dynamic_share": r.dynamic_share,
            })
        }
        Command::Robustness => {
            let r = harness::cmd_robustness(cfg, &out)?;
            serde_json::to_value(
                r.groups
                    .iter()
                    .map(|g| serde_json::json!({"group": g.group, "p_rmse": g.p_rmse, "q_rmse": g.q_rmse}))
                    .collect::<Vec<_>>(),
            )?
        }
        Command::Compare => {
            let r = harness::cmd_compare(cfg, &out)?;
            serde_json::json!({ "rows": r.rows, "summary": r.summary })
        }
        Command::LossStudy => {
            let r = harness::cmd_loss_study(cfg, &out)?;
            let last = r.study.rows.last().map(|row| row.losses.clone());
            serde_json::json!({ "labels": r.study.labels, "final_losses": last })
        }
    };
    Ok(serde_json::json!({ "command": cli.command.name(), "out": out, "summary": summary }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cli, &cfg) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) if e.is_config_error() => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
