//! `cat-telecor`: one subcommand per table or figure. Each run writes its
//! CSV artifacts into `--out-dir` and then a `<command>.manifest.json`
//! listing parameters, cutoffs and a sha256 per artifact.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 cutoff exhausted,
//! 4 unreachable target, 1 anything else.

mod commands;
mod output;

use anyhow::Result;
use clap::{Parser, Subcommand};
use commands::*;
use output::{publish, Cache, Report, RunManifest, UsageError, VERSION};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "cat-telecor", version, about = "Cat-code telecorrection simulator")]
struct Cli {
    /// Worker threads; defaults to the logical CPU count
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for CSV artifacts and the manifest
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Skip the result cache ($CAT_TELECOR_CACHE, default .cache/)
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Photon-number histogram of a lossy codeword, split into correctable and uncorrectable loss
    FockHist(FockHist),
    /// Pauli correction and deformation for every (n, m) cell
    PauliMap(PauliMap),
    /// Channel fidelity after N corrected segments
    Fidelity(Fidelity),
    /// Minimum segments and amplitude reaching each fidelity target
    Table1(Table1),
    /// Fidelity over an (L, N, alpha) grid read from a JSON config
    Sweep(Sweep),
    /// Mean error probability of Pauli-eigenstate pairs
    Mep(Mep),
    /// Monte Carlo of deformation-corrected transmission
    DeformMc(DeformMc),
    /// Success probability of biased-ancilla teleportation
    Bias(Bias),
    /// Codeword normalization mismatch and R_X overlap
    Mismatch(Mismatch),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::FockHist(_) => "fock-hist",
            Command::PauliMap(_) => "pauli-map",
            Command::Fidelity(_) => "fidelity",
            Command::Table1(_) => "table1",
            Command::Sweep(_) => "sweep",
            Command::Mep(_) => "mep",
            Command::DeformMc(_) => "deform-mc",
            Command::Bias(_) => "bias",
            Command::Mismatch(_) => "mismatch",
        }
    }

    fn params(&self) -> Result<serde_json::Value> {
        Ok(match self {
            Command::FockHist(a) => serde_json::to_value(a)?,
            Command::PauliMap(a) => serde_json::to_value(a)?,
            Command::Fidelity(a) => serde_json::to_value(a)?,
            Command::Table1(a) => serde_json::to_value(a)?,
            Command::Sweep(a) => serde_json::to_value(a)?,
            Command::Mep(a) => serde_json::to_value(a)?,
            Command::DeformMc(a) => serde_json::to_value(a)?,
            Command::Bias(a) => serde_json::to_value(a)?,
            Command::Mismatch(a) => serde_json::to_value(a)?,
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.jobs {
        if k == 0 {
            return Err(output::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    let cache = Cache::from_env(!cli.no_cache);
    let start = Instant::now();
    let mut params = cli.command.params()?;
    let report: Report = match &cli.command {
        Command::FockHist(a) => fock_hist(a)?,
        Command::PauliMap(a) => pauli_map(a)?,
        Command::Fidelity(a) => fidelity(a, &cache)?,
        Command::Table1(a) => table1(a, &cache)?,
        Command::Sweep(a) => {
            let (r, cfg) = sweep(a, &cache)?;
            params["config_contents"] = cfg;
            r
        }
        Command::Mep(a) => mep(a)?,
        Command::DeformMc(a) => deform_mc(a, &cache)?,
        Command::Bias(a) => bias(a)?,
        Command::Mismatch(a) => mismatch(a)?,
    };
    let stdout = report.stdout.clone();
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        params,
        gamma_total: None,
        cutoffs: serde_json::Value::Null,
        completeness_deficit: None,
        seed: None,
        rng: None,
        jobs: rayon::current_num_threads(),
        cache_hits: cache.hits(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        results: serde_json::Value::Null,
        artifacts: Vec::new(),
        tool_version: VERSION,
    };
    let path = publish(&cli.out_dir, manifest, report)?;
    if let Some(s) = stdout {
        println!("{s}");
    }
    log::info!("wrote {}", path.display());
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use cat_telecor::Error;
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::InvalidParameter(_)) => 2,
        Some(Error::CutoffExhausted { .. } | Error::BudgetExceeded { .. }) => 3,
        Some(Error::Unreachable(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on bad arguments by itself
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
