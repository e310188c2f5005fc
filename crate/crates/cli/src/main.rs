use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use combweave::config::{load_config, PipelineConfig};
use combweave::export::export_artifacts;
use combweave::pipeline::{run_pipeline, RunSummary, Status};

/// Build and verify hypercubic cluster states woven from optical frequency combs.
#[derive(Parser)]
#[command(name = "combweave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write the configured exports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's sampling seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_FAIL: u8 = 2;
const EXIT_ERROR: u8 = 1;

fn describe(cfg: &PipelineConfig) -> String {
    format!(
        "D = {}, window [{}, {}], {} qumodes, copies = {}, alpha = {}, {} thetas, samples = {}",
        cfg.dimension(),
        cfg.window.n_min,
        cfg.window.n_max,
        cfg.num_modes(),
        cfg.copies(),
        cfg.alpha,
        cfg.thetas.len(),
        cfg.samples
    )
}

fn print_summary(summary: &RunSummary) {
    for c in &summary.report.checks {
        let tag = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        println!("[{tag}] {}: {}", c.name, c.detail);
    }
    let total: f64 = summary.timings.iter().map(|t| t.seconds).sum();
    let stages: Vec<String> = summary
        .timings
        .iter()
        .map(|t| format!("{} {:.3}s", t.stage, t.seconds))
        .collect();
    println!("timings: {} (total {total:.3}s)", stages.join(", "));
}

fn run(config: PathBuf, out: PathBuf, seed: Option<u64>) -> combweave::Result<bool> {
    let mut cfg = load_config(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    println!("{}", describe(&cfg));
    let state = run_pipeline(&cfg)?;
    print_summary(&state.summary);
    let written = export_artifacts(&state, &cfg.exports, &out)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    let pass = state.summary.pass();
    println!("verdict: {}", if pass { "pass" } else { "FAIL" });
    Ok(pass)
}

fn main() -> ExitCode {
    // clap's own usage errors would exit with 2, which is reserved for failed verdicts
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run { config, out, seed } => run(config, out, seed),
        Command::Validate { config } => load_config(&config).map(|cfg| {
            println!("config ok: {}", describe(&cfg));
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error [{}]: {e}", e.module());
            ExitCode::from(EXIT_ERROR)
        }
    }
}
