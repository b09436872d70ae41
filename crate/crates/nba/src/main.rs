//! Thin command-line driver over the library: run experiments from JSON
//! configs or presets, run the verification suites, dump the constants
//! ledger, write CSV/JSON outputs.
//!
//! Exit codes: 0 success, 2 config error, 3 runtime/resource error,
//! 4 internal assertion, 5 verification violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nba::constants;
use nba::harness::{self, ExperimentConfig, SweepPoint};
use nba::oracle::verify::{self, SuiteKind, VerifyOptions};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_INTERNAL: u8 = 4;
const EXIT_VIOLATION: u8 = 5;

#[derive(Parser)]
#[command(
    name = "nba",
    about = "Balls-into-bins simulation and verification under noisy load information",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run experiments from a JSON config file or a named preset.
    Run {
        /// JSON file holding one experiment config or an array of them.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Named preset to run instead of a config file.
        #[arg(long)]
        preset: Option<String>,
        /// Output directory for runs.csv / summary.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (falls back to NBA_WORKERS, then all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the master seed of every loaded config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a parameter sweep from a JSON file with `base` and `grid` keys.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the configurations of a named preset as JSON.
    Preset {
        /// One of: table3, table4, fig7, fig8, lower_bounds, scaled_desk.
        name: String,
    },
    /// Run the exact-oracle verification suites and emit a JSON report.
    Verify {
        /// Comma-separated suite names (default: all). Available:
        /// superexp_drop, lambda_good_step, lambda_any_step,
        /// quadratic_adv_comp, gamma_bound, enumeration.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0xBA115)]
        seed: u64,
        /// Feed deliberately corrupted vectors; the suites must flag them.
        #[arg(long)]
        negative_controls: bool,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the constants ledger and layer plan for (g, n) as JSON.
    Constants {
        #[arg(long)]
        g: u64,
        #[arg(long)]
        n: u64,
    },
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("NBA_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn load_configs(path: &Path) -> Result<Vec<ExperimentConfig>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    // a single config object or an array of them
    let parsed: Result<Vec<ExperimentConfig>, _> = serde_json::from_str(&text);
    match parsed {
        Ok(list) => Ok(list),
        Err(_) => serde_json::from_str::<ExperimentConfig>(&text)
            .map(|c| vec![c])
            .map_err(|e| format!("invalid config {}: {e}", path.display())),
    }
}

fn cmd_run(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: PathBuf,
    workers: usize,
    seed: Option<u64>,
) -> Result<(), (u8, String)> {
    let mut configs = match (&config, &preset) {
        (Some(path), None) => load_configs(path).map_err(|e| (EXIT_CONFIG, e))?,
        (None, Some(name)) => {
            harness::preset(name).map_err(|e| (EXIT_CONFIG, e.to_string()))?
        }
        _ => {
            return Err((
                EXIT_CONFIG,
                "exactly one of --config or --preset is required".into(),
            ))
        }
    };
    if let Some(seed) = seed {
        for cfg in &mut configs {
            cfg.master_seed = seed;
        }
    }
    for cfg in &configs {
        cfg.validate().map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    }
    let mut results = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let result =
            harness::run_experiment(cfg, workers).map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
        println!(
            "{}: mean gap {:.4} (sd {:.4}) over {} runs in {} ms",
            result.config_id,
            result.summary.mean,
            result.summary.std_dev,
            cfg.repetitions,
            result.runtime_ms
        );
        results.push(result);
    }
    harness::write_outputs(&out, &results).map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
    println!("wrote {}", out.join("runs.csv").display());
    Ok(())
}

#[derive(serde::Deserialize)]
struct SweepFile {
    base: ExperimentConfig,
    grid: Vec<SweepPoint>,
}

fn cmd_sweep(
    config: PathBuf,
    out: PathBuf,
    workers: usize,
    seed: Option<u64>,
) -> Result<(), (u8, String)> {
    let text = std::fs::read_to_string(&config)
        .map_err(|e| (EXIT_CONFIG, format!("cannot read {}: {e}", config.display())))?;
    let mut file: SweepFile = serde_json::from_str(&text)
        .map_err(|e| (EXIT_CONFIG, format!("invalid sweep config: {e}")))?;
    if let Some(seed) = seed {
        file.base.master_seed = seed;
    }
    file.base
        .validate()
        .map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    let rows = harness::sweep(&file.base, &file.grid, workers)
        .map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    std::fs::create_dir_all(&out).map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
    let mut csv = String::from("label,mean_gap,std_dev,error\n");
    for row in &rows {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.label,
            fmt(row.mean_gap),
            fmt(row.std_dev),
            row.error.clone().unwrap_or_default()
        ));
        println!(
            "{}: {}",
            row.label,
            row.mean_gap
                .map(|m| format!("mean gap {m:.4}"))
                .or_else(|| row.error.clone())
                .unwrap_or_default()
        );
    }
    std::fs::write(out.join("sweep.csv"), csv).map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
    let json =
        serde_json::to_string_pretty(&rows).map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
    std::fs::write(out.join("sweep.json"), json).map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
    Ok(())
}

fn cmd_preset(name: &str) -> Result<(), (u8, String)> {
    let configs = harness::preset(name).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    let json =
        serde_json::to_string_pretty(&configs).map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
    println!("{json}");
    Ok(())
}

fn cmd_verify(
    suite: Option<String>,
    trials: u64,
    seed: u64,
    negative_controls: bool,
    out: Option<PathBuf>,
) -> Result<(), (u8, String)> {
    if trials == 0 {
        return Err((EXIT_CONFIG, "trials must be at least 1".into()));
    }
    let kinds: Vec<SuiteKind> = match suite {
        None => SuiteKind::all().to_vec(),
        Some(names) => {
            let mut kinds = Vec::new();
            for name in names.split(',') {
                let name = name.trim();
                let kind = SuiteKind::parse(name).ok_or_else(|| {
                    (
                        EXIT_CONFIG,
                        format!(
                            "unknown suite '{name}'; available: {}",
                            SuiteKind::all().map(|k| k.name()).join(", ")
                        ),
                    )
                })?;
                kinds.push(kind);
            }
            kinds
        }
    };
    let opts = VerifyOptions {
        trials,
        seed,
        negative_control: negative_controls,
    };
    let reports = verify::run_suites(&kinds, &opts);
    let json =
        serde_json::to_string_pretty(&reports).map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
    println!("{json}");
    if let Some(path) = out {
        std::fs::write(&path, format!("{json}\n"))
            .map_err(|e| (EXIT_RUNTIME, e.to_string()))?;
    }
    let violations: u64 = reports.iter().map(|r| r.violations).sum();
    if violations > 0 {
        return Err((
            EXIT_VIOLATION,
            format!("{violations} inequality violation(s); see report"),
        ));
    }
    Ok(())
}

fn cmd_constants(g: u64, n: u64) -> Result<(), (u8, String)> {
    let ledger = constants::constants(g, n).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    let (layer_plan, layer_plan_note) = match constants::layer_plan(g, n) {
        Ok(plan) => (Some(plan), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let ell = constants::ell_lower_bound(g, n).ok();
    let doc = serde_json::json!({
        "g": g,
        "n": n,
        "constants": ledger.entries(),
        "layer_plan": layer_plan,
        "layer_plan_note": layer_plan_note,
        "ell_lower_bound": ell,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(|e| (EXIT_INTERNAL, e.to_string()))?
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), (u8, String)> {
    match cli.command {
        Command::Run {
            config,
            preset,
            out,
            workers,
            seed,
        } => cmd_run(config, preset, out, resolve_workers(workers), seed),
        Command::Sweep {
            config,
            out,
            workers,
            seed,
        } => cmd_sweep(config, out, resolve_workers(workers), seed),
        Command::Preset { name } => cmd_preset(&name),
        Command::Verify {
            suite,
            trials,
            seed,
            negative_controls,
            out,
        } => cmd_verify(suite, trials, seed, negative_controls, out),
        Command::Constants { g, n } => cmd_constants(g, n),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(cli)));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err((code, msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            eprintln!("internal assertion failed: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
