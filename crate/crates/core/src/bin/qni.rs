use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qni_core::config::RunConfig;
use qni_core::{output, pipeline, Error, Result};

/// Noise-imaging simulator: overlap sweeps, the alphabet test and squeezing calibration.
#[derive(Parser)]
#[command(name = "qni", version)]
struct Cli {
    /// TOML run configuration; defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level random seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rotate a bow-tie LO against a bow-tie mask and analyse noise versus overlap.
    Sweep,
    /// Try every letter of the font as the LO shape against a letter mask.
    Alphabet {
        #[arg(long)]
        mask: char,
    },
    /// Solve for the squeezing parameter that gives the target detected squeezing.
    Calibrate {
        /// Squeezing magnitude in dB below the shot-noise limit.
        #[arg(long, allow_hyphen_values = true)]
        db: f64,
    },
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.acquisition.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.output.dir = o;
    }
    let dir = cfg.output.dir.clone();
    let (files, summary) = match cli.command {
        Command::Sweep => {
            let rep = pipeline::run_sweep(&cfg)?;
            let summary = serde_json::json!({
                "r": rep.r,
                "enhancement": rep.enhancement.factor,
                "enhancement_sigma": rep.enhancement.sigma,
                "o_cross": rep.o_cross,
            });
            (output::write_sweep(&dir, &cfg, &rep)?, summary)
        }
        Command::Alphabet { mask } => {
            let rep = pipeline::run_alphabet(&cfg, mask)?;
            let summary = serde_json::json!({
                "quantum_best": rep.quantum.best.to_string(),
                "classical_best": rep.classical.best.to_string(),
                "sub_snl_letters": rep.sub_snl_letters.iter().collect::<String>(),
            });
            (output::write_alphabet(&dir, &cfg, mask, &rep)?, summary)
        }
        Command::Calibrate { db } => {
            let cal = pipeline::run_calibrate(&cfg, db)?;
            let summary = serde_json::json!({ "r": cal.r, "detected_db": cal.detected_db });
            (output::write_calibration(&dir, &cal)?, summary)
        }
    };
    Ok(serde_json::json!({
        "result": summary,
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.kind(), "message": e.to_string() })
            );
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::UnknownLetter(_) => 2,
        Error::Io { .. } => 3,
        Error::Unachievable { .. } => 4,
        _ => 1,
    }
}
