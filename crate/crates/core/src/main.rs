//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 solver did not converge,
//! 3 a scientific threshold failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use plaplace::config::{RunConfig, Selection};
use plaplace::experiments::{self, envelope_rows_table, DEFAULT_SEED};
use plaplace::pipeline::{run_diagnose, run_solve};

const OK: u8 = 0;
const USAGE: u8 = 1;
const NOT_CONVERGED: u8 = 2;
const THRESHOLD: u8 = 3;

#[derive(Parser)]
#[command(name = "plaplace", version, about = "Game-theoretic p-Laplacian torsion lab")]
struct Cli {
    /// Worker threads for solver sweeps and diagnostics (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the randomized experiments.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write a checkpoint plus report.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run diagnostics on a checkpoint header (`u.json`).
    Diagnose {
        checkpoint: PathBuf,
        /// Take the diagnostics selection from a run config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated subset of: symmetry, viscosity, pucci, p-function, residual.
        #[arg(long, conflicts_with = "config")]
        select: Option<String>,
        /// Assert that the domain looks like a ball: constancy score below this.
        #[arg(long)]
        ball_threshold: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run one acceptance experiment and print its pass/fail table.
    Reproduce {
        name: String,
        /// Also write the outcome as JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form envelopes against the 720-direction brute force.
    EnvelopeTable {
        /// Rows to print (all 200 are always checked).
        #[arg(long, default_value_t = 20)]
        rows: usize,
    },
}

fn read_config(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    RunConfig::parse(&text).map_err(|e| format!("{}:{e}", path.display()))
}

fn verdict(pass: bool) -> u8 {
    if pass {
        OK
    } else {
        THRESHOLD
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Solve { config, out } => {
            let cfg = read_config(&config)?;
            let out = out.or_else(|| cfg.output_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
            let s = run_solve(&cfg, &out).map_err(|e| e.to_string())?;
            let r = &s.report;
            println!(
                "{} after {} sweeps (update {:.3e}, residual {:.3e}, masked {:.2}%) in {:.2} s",
                if r.converged { "converged" } else { "NOT converged" },
                r.iterations,
                r.final_update,
                r.residual,
                100.0 * r.masked_fraction,
                r.wall_time_s
            );
            println!("checkpoint: {}", s.checkpoint.display());
            Ok(if r.converged { OK } else { NOT_CONVERGED })
        }
        Command::Diagnose { checkpoint, config, select, ball_threshold, out } => {
            let mut selection = match (config, select) {
                (Some(path), _) => read_config(&path)?.selection(),
                (None, Some(list)) => Selection::parse_list(&list)?,
                (None, None) => Selection::default(),
            };
            if ball_threshold.is_some() {
                selection.ball_threshold = ball_threshold;
            }
            let report = run_diagnose(&checkpoint, &selection, &out).map_err(|e| e.to_string())?;
            if let Some(sym) = &report.symmetry {
                if let Some(s) = sym.score {
                    println!("Neumann trace: mean {:.5}, constancy score {:.5}", s.mean, s.spread);
                }
                println!("boundary identity max |residual| {:.4}", sym.identity_max);
                if let Some(w) = sym.min_plane_w() {
                    println!("moving plane min w {w:.3e}");
                }
            }
            for n in &report.notes {
                println!("note: {n}");
            }
            for t in &report.thresholds {
                println!("{:<34} {:>12.5e}  {:<22} {}", t.name, t.value, t.bound, if t.pass { "pass" } else { "FAIL" });
            }
            Ok(verdict(report.passed()))
        }
        Command::Reproduce { name, out } => {
            let outcome = experiments::run(&name, cli.seed).map_err(|e| e.to_string())?;
            print!("{}", outcome.table());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                let path = dir.join(format!("{name}.json"));
                let text = serde_json::to_string_pretty(&outcome).expect("outcome serializes");
                plaplace::checkpoint::write_atomic(&path, text.as_bytes()).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            Ok(verdict(outcome.passed()))
        }
        Command::EnvelopeTable { rows } => {
            let (outcome, table) = experiments::envelope_table(cli.seed);
            print!("{}", envelope_rows_table(&table[..rows.min(table.len())]));
            print!("{}", outcome.table());
            Ok(verdict(outcome.passed()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(USAGE);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
    }
}
