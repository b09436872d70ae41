//! Reproducible, parallel experiment execution.
//!
//! One [`ExperimentConfig`] describes `repetitions` independent runs of a
//! process at `(n, m)`. Repetition `r` always draws from
//! `RngStream::substream(master_seed, r)`, so results are byte-identical
//! across worker counts and across invocations of the same build; rayon
//! only decides *when* each repetition runs, never what it sees.
//!
//! Gap statistics mirror the reporting format of the experiment tables:
//! per-run final gaps, mean/std/min/max, and a percentage histogram of the
//! gap rounded to the nearest integer. Raw per-run values are always kept
//! alongside the rounded histogram.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{PotentialError, PotentialSpec};
use crate::process::{ProcessError, ProcessSpec, Simulation};
use crate::rng::RngStream;

/// Hard ceiling on `repetitions * m`, checked before any simulation starts.
pub const MAX_TOTAL_ALLOCATIONS: u64 = 1_000_000_000_000;
/// Hard ceiling on the number of checkpoints per run.
pub const MAX_CHECKPOINTS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown preset '{name}'; available: {available}")]
    UnknownPreset { name: String, available: String },
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A reproducible experiment: process, scale, repetitions, seed, sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Stable identifier used in output files; derived when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub process: ProcessSpec,
    pub n: u64,
    pub m: u64,
    pub repetitions: u32,
    pub master_seed: u64,
    /// Steps between gap/potential samples; 0 means final-only unless
    /// potentials are requested, in which case it defaults to `m / 100`.
    #[serde(default)]
    pub checkpoint_interval: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub potentials: Vec<PotentialSpec>,
}

impl ExperimentConfig {
    pub fn new(process: ProcessSpec, n: u64, m: u64, repetitions: u32, master_seed: u64) -> Self {
        ExperimentConfig {
            id: None,
            process,
            n,
            m,
            repetitions,
            master_seed,
            checkpoint_interval: 0,
            potentials: Vec::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn config_id(&self) -> String {
        if let Some(id) = &self.id {
            return id.clone();
        }
        let param = self.process.param();
        let param_part = if param.is_empty() {
            String::new()
        } else {
            format!("_{param}")
        };
        format!(
            "{}{}_n{}_m{}",
            self.process.name(),
            param_part,
            self.n,
            self.m
        )
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.process
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        for p in &self.potentials {
            p.validate()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if self.n == 0 {
            return Err(HarnessError::Config("n must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(HarnessError::Config("m must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(HarnessError::Config("repetitions must be at least 1".into()));
        }
        if self.n > 100_000_000 {
            return Err(HarnessError::Config(format!(
                "n = {} exceeds the 1e8 bin guard",
                self.n
            )));
        }
        let total = self.m.saturating_mul(self.repetitions as u64);
        if total > MAX_TOTAL_ALLOCATIONS {
            return Err(HarnessError::Config(format!(
                "m * repetitions = {total} exceeds the {MAX_TOTAL_ALLOCATIONS} allocation guard"
            )));
        }
        let interval = self.effective_checkpoint_interval();
        if interval > 0 && self.m / interval > MAX_CHECKPOINTS {
            return Err(HarnessError::Config(format!(
                "checkpoint_interval {} yields {} checkpoints (max {MAX_CHECKPOINTS})",
                interval,
                self.m / interval
            )));
        }
        Ok(())
    }

    /// The interval actually used: explicit value, or `m/100` when
    /// potentials were requested without one.
    pub fn effective_checkpoint_interval(&self) -> u64 {
        if self.checkpoint_interval == 0 && !self.potentials.is_empty() {
            (self.m / 100).max(1)
        } else {
            self.checkpoint_interval
        }
    }
}

/// One repetition's outcome. `seed` is the initial substream state, kept so
/// any single run can be replayed in isolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub repetition: u32,
    pub seed: u64,
    pub final_gap: f64,
    pub final_gap_rounded: i64,
}

/// One sampling point of one repetition.
#[derive(Debug, Clone, Serialize)]
pub struct CheckpointRecord {
    pub repetition: u32,
    pub t: u64,
    pub gap: f64,
    /// `(potential name, value)` pairs, in config order.
    pub potentials: Vec<(String, f64)>,
}

/// Statistics over the per-run final gaps.
#[derive(Debug, Clone, Serialize)]
pub struct GapSummary {
    pub gaps: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    /// `(rounded gap, percentage of runs)` in ascending gap order.
    pub histogram: Vec<(i64, f64)>,
    /// Mean gap per checkpoint step, when checkpoints were taken.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_mean_gaps: Option<Vec<(u64, f64)>>,
}

impl GapSummary {
    fn from_runs(runs: &[RunRecord], checkpoints: &[CheckpointRecord]) -> GapSummary {
        let gaps: Vec<f64> = runs.iter().map(|r| r.final_gap).collect();
        let count = gaps.len() as f64;
        let mean = gaps.iter().sum::<f64>() / count;
        let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / count;
        let mut hist_counts: std::collections::BTreeMap<i64, u32> = Default::default();
        for r in runs {
            *hist_counts.entry(r.final_gap_rounded).or_insert(0) += 1;
        }
        let histogram = hist_counts
            .into_iter()
            .map(|(k, v)| (k, 100.0 * v as f64 / count))
            .collect();
        let checkpoint_mean_gaps = if checkpoints.is_empty() {
            None
        } else {
            let mut by_t: std::collections::BTreeMap<u64, (f64, u32)> = Default::default();
            for c in checkpoints {
                let e = by_t.entry(c.t).or_insert((0.0, 0));
                e.0 += c.gap;
                e.1 += 1;
            }
            Some(
                by_t.into_iter()
                    .map(|(t, (sum, cnt))| (t, sum / cnt as f64))
                    .collect(),
            )
        };
        GapSummary {
            mean,
            std_dev: var.sqrt(),
            min: gaps.iter().copied().fold(f64::INFINITY, f64::min),
            max: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            histogram,
            checkpoint_mean_gaps,
            gaps,
        }
    }

    /// Percentage of runs whose rounded gap lies in `[lo, hi]`.
    pub fn mass_in(&self, lo: i64, hi: i64) -> f64 {
        self.histogram
            .iter()
            .filter(|(g, _)| (lo..=hi).contains(g))
            .map(|(_, pct)| pct)
            .sum()
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub config_id: String,
    pub summary: GapSummary,
    pub runs: Vec<RunRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<CheckpointRecord>,
    /// Wall-clock time of the whole experiment. Lives only in the summary:
    /// per-run CSV rows stay byte-reproducible across worker counts.
    pub runtime_ms: u64,
}

fn run_single(
    cfg: &ExperimentConfig,
    repetition: u32,
) -> Result<(RunRecord, Vec<CheckpointRecord>), HarnessError> {
    let rng = RngStream::substream(cfg.master_seed, repetition as u64);
    let seed = rng.state();
    let mut sim = Simulation::new(cfg.process.clone(), cfg.n as usize, rng)?;
    let interval = cfg.effective_checkpoint_interval();
    let mut checkpoints = Vec::new();
    if interval == 0 {
        sim.run(cfg.m);
    } else {
        let mut done = 0u64;
        while done < cfg.m {
            let burst = interval.min(cfg.m - done);
            sim.run(burst);
            done += burst;
            let view = sim.state.normalized();
            let mut values = Vec::with_capacity(cfg.potentials.len());
            for p in &cfg.potentials {
                values.push((p.name(), p.eval(&view)?));
            }
            checkpoints.push(CheckpointRecord {
                repetition,
                t: done,
                gap: view.gap(),
                potentials: values,
            });
        }
    }
    let final_gap = sim.state.gap();
    Ok((
        RunRecord {
            repetition,
            seed,
            final_gap,
            final_gap_rounded: final_gap.round() as i64,
        },
        checkpoints,
    ))
}

/// Runs all repetitions, `workers` at a time (0 = rayon default). Results
/// are merged by repetition index, so the output is independent of both the
/// worker count and scheduling order.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let started = Instant::now();
    let outcomes: Vec<Result<(RunRecord, Vec<CheckpointRecord>), HarnessError>> =
        if workers == 1 {
            (0..cfg.repetitions).map(|r| run_single(cfg, r)).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            pool.install(|| {
                (0..cfg.repetitions)
                    .into_par_iter()
                    .map(|r| run_single(cfg, r))
                    .collect()
            })
        };
    let mut runs = Vec::with_capacity(cfg.repetitions as usize);
    let mut checkpoints = Vec::new();
    for outcome in outcomes {
        let (run, mut cps) = outcome?;
        runs.push(run);
        checkpoints.append(&mut cps);
    }
    let summary = GapSummary::from_runs(&runs, &checkpoints);
    Ok(ExperimentResult {
        config_id: cfg.config_id(),
        config: cfg.clone(),
        summary,
        runs,
        checkpoints,
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub label: String,
    pub process: ProcessSpec,
}

/// Long-format sweep output row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub mean_gap: Option<f64>,
    pub std_dev: Option<f64>,
    pub error: Option<String>,
}

/// Runs `base` once per grid point with the point's process substituted.
/// Every point reuses the base master seed (common random numbers, which
/// sharpens comparisons along the grid); per-point failures are recorded
/// and the sweep continues.
pub fn sweep(
    base: &ExperimentConfig,
    grid: &[SweepPoint],
    workers: usize,
) -> Result<Vec<SweepRow>, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::Config("sweep grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for point in grid {
        let mut cfg = base.clone();
        cfg.process = point.process.clone();
        cfg.id = Some(format!("{}_{}", base.config_id(), point.label));
        match run_experiment(&cfg, workers) {
            Ok(result) => rows.push(SweepRow {
                label: point.label.clone(),
                mean_gap: Some(result.summary.mean),
                std_dev: Some(result.summary.std_dev),
                error: None,
            }),
            Err(err) => rows.push(SweepRow {
                label: point.label.clone(),
                mean_gap: None,
                std_dev: None,
                error: Some(err.to_string()),
            }),
        }
    }
    Ok(rows)
}

pub const PRESET_NAMES: [&str; 6] = [
    "table3",
    "table4",
    "fig7",
    "fig8",
    "lower_bounds",
    "scaled_desk",
];

/// The pre-registered experiment families. `table3`, `table4`, `fig7` and
/// `fig8` are the full-scale configurations (hours of CPU); `scaled_desk`
/// is the n = 10^4 working set plus n = 10^3 smoke variants, sized so the
/// whole list finishes in tens of minutes on a laptop.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let noisy_family = |param: u64| -> Vec<(String, ProcessSpec)> {
        // the 0 column of the noisy families is the noiseless process
        vec![
            (
                format!("g_bounded_g{param}"),
                if param == 0 {
                    ProcessSpec::two_choice()
                } else {
                    ProcessSpec::GBounded { g: param }
                },
            ),
            (
                format!("g_myopic_comp_g{param}"),
                if param == 0 {
                    ProcessSpec::two_choice()
                } else {
                    ProcessSpec::GMyopicComp { g: param }
                },
            ),
            (
                format!("sigma_noisy_load_sigma{param}"),
                if param == 0 {
                    ProcessSpec::two_choice()
                } else {
                    ProcessSpec::SigmaNoisyLoad {
                        sigma: param as f64,
                        mode: Default::default(),
                    }
                },
            ),
        ]
    };
    let mut configs = Vec::new();
    let mut push = |tag: &str, process: ProcessSpec, n: u64, m: u64, reps: u32, seed: u64| {
        configs.push(
            ExperimentConfig::new(process, n, m, reps, seed).with_id(format!("{tag}_n{n}_m{m}")),
        );
    };
    let mut counter = 0u64;
    match name {
        "table3" => {
            for &n in &[10_000u64, 50_000, 100_000] {
                for &p in &[0u64, 1, 2, 4, 8, 16] {
                    for (tag, process) in noisy_family(p) {
                        counter += 1;
                        push(&format!("table3_{tag}"), process, n, 1000 * n, 100, 3_000 + counter);
                    }
                }
            }
        }
        "table4" => {
            let batches = [5u64, 10, 50, 100, 500, 1_000, 5_000, 10_000, 50_000, 100_000, 500_000];
            let n = 10_000u64;
            for &b in &batches {
                counter += 1;
                push(
                    &format!("table4_b_batch_b{b}"),
                    ProcessSpec::BBatch { b },
                    n,
                    1000 * n,
                    100,
                    4_000 + counter,
                );
            }
            for &b in &batches {
                counter += 1;
                push(
                    &format!("table4_one_choice_m{b}"),
                    ProcessSpec::OneChoice,
                    n,
                    b,
                    100,
                    4_000 + counter,
                );
            }
        }
        "fig7" => {
            for &n in &[10_000u64, 50_000, 100_000] {
                for p in 1..=20u64 {
                    for (tag, process) in noisy_family(p) {
                        counter += 1;
                        push(&format!("fig7_{tag}"), process, n, 1000 * n, 100, 7_000 + counter);
                    }
                }
            }
        }
        "fig8" => {
            let n = 10_000u64;
            for &b in &[5u64, 10, 50, 100, 500, 1_000, 5_000, 10_000, 50_000, 100_000, 500_000] {
                counter += 1;
                push(
                    &format!("fig8_b_batch_b{b}"),
                    ProcessSpec::BBatch { b },
                    n,
                    1000 * n,
                    100,
                    8_000 + counter,
                );
                counter += 1;
                push(
                    &format!("fig8_one_choice_m{b}"),
                    ProcessSpec::OneChoice,
                    n,
                    b,
                    100,
                    8_000 + counter,
                );
            }
        }
        "lower_bounds" => {
            let n = 10_000u64;
            // slow-rise construction: myopic noise held at g, half a ball
            // of average load per g; the gap should already be >= g/35
            push(
                "lower_bounds_g_myopic_comp_g16",
                ProcessSpec::GMyopicComp { g: 16 },
                n,
                n * 16 / 2,
                100,
                5_001,
            );
            // first batch of a large-b batch run versus one-choice with the
            // same ball count
            push(
                "lower_bounds_b_batch_b100000",
                ProcessSpec::BBatch { b: 100_000 },
                n,
                100_000,
                100,
                5_002,
            );
            push(
                "lower_bounds_one_choice_m100000",
                ProcessSpec::OneChoice,
                n,
                100_000,
                100,
                5_003,
            );
            // sigma lower bound: m = sigma^{4/5} n / 2 at sigma = 32
            push(
                "lower_bounds_sigma_noisy_load_sigma32",
                ProcessSpec::SigmaNoisyLoad {
                    sigma: 32.0,
                    mode: Default::default(),
                },
                n,
                16 * n / 2,
                100,
                5_004,
            );
            // two-choice at m = n for the log2 log n observation
            push(
                "lower_bounds_two_choice_mn",
                ProcessSpec::two_choice(),
                n,
                n,
                100,
                5_005,
            );
        }
        "scaled_desk" => {
            let n = 10_000u64;
            let m = 1000 * n;
            for &g in &[0u64, 1, 2, 4, 8, 16] {
                let process = if g == 0 {
                    ProcessSpec::two_choice()
                } else {
                    ProcessSpec::GBounded { g }
                };
                push(&format!("desk_g_bounded_g{g}"), process, n, m, 100, 6_100 + g);
            }
            push(
                "desk_g_myopic_comp_g16",
                ProcessSpec::GMyopicComp { g: 16 },
                n,
                m,
                100,
                6_201,
            );
            push(
                "desk_sigma_noisy_load_sigma8",
                ProcessSpec::SigmaNoisyLoad {
                    sigma: 8.0,
                    mode: Default::default(),
                },
                n,
                m,
                100,
                6_202,
            );
            push(
                "desk_b_batch_b10000",
                ProcessSpec::BBatch { b: 10_000 },
                n,
                m,
                100,
                6_203,
            );
            push("desk_one_choice_m10000", ProcessSpec::OneChoice, n, n, 100, 6_204);
            // n = 10^3 smoke variants: seconds, for quick sanity checks
            let (sn, sm) = (1_000u64, 1_000_000u64);
            push(
                "smoke_g_bounded_g4",
                ProcessSpec::GBounded { g: 4 },
                sn,
                sm,
                20,
                6_301,
            );
            push("smoke_two_choice", ProcessSpec::two_choice(), sn, sm, 20, 6_302);
            push(
                "smoke_b_batch_b1000",
                ProcessSpec::BBatch { b: 1_000 },
                sn,
                sm,
                20,
                6_303,
            );
        }
        other => {
            return Err(HarnessError::UnknownPreset {
                name: other.to_string(),
                available: PRESET_NAMES.join(", "),
            })
        }
    }
    Ok(configs)
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

pub const RUNS_CSV_HEADER: &str =
    "config_id,process,g_or_param,n,m,repetition,seed,final_gap,final_gap_rounded,runtime_ms";
pub const CHECKPOINTS_CSV_HEADER: &str =
    "config_id,repetition,checkpoint_t,gap,potential_name,potential_value";

/// Per-run rows. The runtime_ms column is intentionally left empty: run
/// rows must be byte-identical across worker counts, and wall-clock noise
/// would break that; timings live in `summary.json`.
pub fn runs_csv(results: &[ExperimentResult]) -> String {
    let mut out = String::from(RUNS_CSV_HEADER);
    out.push('\n');
    for r in results {
        for run in &r.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},\n",
                r.config_id,
                r.config.process.name(),
                r.config.process.param(),
                r.config.n,
                r.config.m,
                run.repetition,
                run.seed,
                run.final_gap,
                run.final_gap_rounded,
            ));
        }
    }
    out
}

pub fn checkpoints_csv(results: &[ExperimentResult]) -> String {
    let mut out = String::from(CHECKPOINTS_CSV_HEADER);
    out.push('\n');
    for r in results {
        for cp in &r.checkpoints {
            if cp.potentials.is_empty() {
                out.push_str(&format!(
                    "{},{},{},{},,\n",
                    r.config_id, cp.repetition, cp.t, cp.gap
                ));
            } else {
                for (name, value) in &cp.potentials {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        r.config_id, cp.repetition, cp.t, cp.gap, name, value
                    ));
                }
            }
        }
    }
    out
}

/// Writes `runs.csv`, `summary.json` and (when checkpoints were taken)
/// `checkpoints.csv` under `out_dir`.
pub fn write_outputs(out_dir: &Path, results: &[ExperimentResult]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let mut runs = std::fs::File::create(out_dir.join("runs.csv"))?;
    runs.write_all(runs_csv(results).as_bytes())?;
    let mut summary = std::fs::File::create(out_dir.join("summary.json"))?;
    let docs: Vec<serde_json::Value> = results
        .iter()
        .map(|r| {
            serde_json::json!({
                "config_id": r.config_id,
                "config": r.config,
                "mean_gap": r.summary.mean,
                "std_dev": r.summary.std_dev,
                "min_gap": r.summary.min,
                "max_gap": r.summary.max,
                "histogram": r.summary.histogram,
                "checkpoint_mean_gaps": r.summary.checkpoint_mean_gaps,
                "runtime_ms": r.runtime_ms,
            })
        })
        .collect();
    summary.write_all(serde_json::to_string_pretty(&docs)?.as_bytes())?;
    summary.write_all(b"\n")?;
    if results.iter().any(|r| !r.checkpoints.is_empty()) {
        let mut cps = std::fs::File::create(out_dir.join("checkpoints.csv"))?;
        cps.write_all(checkpoints_csv(results).as_bytes())?;
    }
    Ok(())
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Config(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(process: ProcessSpec, n: u64, m: u64, reps: u32) -> ExperimentConfig {
        ExperimentConfig::new(process, n, m, reps, 42)
    }

    #[test]
    fn determinism_across_worker_counts_and_reruns() {
        let cfg = quick(ProcessSpec::GBounded { g: 2 }, 100, 5_000, 8);
        let a = run_experiment(&cfg, 1).unwrap();
        let b = run_experiment(&cfg, 8).unwrap();
        let c = run_experiment(&cfg, 1).unwrap();
        assert_eq!(a.runs, b.runs);
        assert_eq!(a.runs, c.runs);
        assert_eq!(runs_csv(&[a]), runs_csv(&[b]));
    }

    #[test]
    fn summary_statistics_are_consistent() {
        let cfg = quick(ProcessSpec::two_choice(), 50, 2_000, 40);
        let res = run_experiment(&cfg, 0).unwrap();
        let s = &res.summary;
        let mean: f64 = s.gaps.iter().sum::<f64>() / s.gaps.len() as f64;
        assert!((s.mean - mean).abs() < 1e-9);
        let pct: f64 = s.histogram.iter().map(|(_, p)| p).sum();
        assert!((pct - 100.0).abs() < 1e-9);
        assert!(s.min <= s.mean && s.mean <= s.max);
    }

    #[test]
    fn checkpoints_and_potentials_sampled() {
        let mut cfg = quick(ProcessSpec::two_choice(), 20, 1_000, 3);
        cfg.potentials = vec![PotentialSpec::Quadratic, PotentialSpec::AbsoluteValue];
        let res = run_experiment(&cfg, 0).unwrap();
        // default interval m/100 = 10 steps, 100 checkpoints per run
        assert_eq!(res.checkpoints.len(), 300);
        assert!(res.checkpoints.iter().all(|c| c.potentials.len() == 2));
        assert!(res.summary.checkpoint_mean_gaps.is_some());
        let series = res.summary.checkpoint_mean_gaps.unwrap();
        assert_eq!(series.len(), 100);
        assert_eq!(series.last().unwrap().0, 1_000);
    }

    #[test]
    fn config_guards() {
        assert!(quick(ProcessSpec::OneChoice, 0, 10, 1).validate().is_err());
        assert!(quick(ProcessSpec::OneChoice, 10, 0, 1).validate().is_err());
        assert!(quick(ProcessSpec::OneChoice, 10, 10, 0).validate().is_err());
        let mut cfg = quick(ProcessSpec::OneChoice, 10, 1_000_000, 1);
        cfg.checkpoint_interval = 1;
        assert!(cfg.validate().is_err()); // too many checkpoints
        let cfg = quick(ProcessSpec::OneChoice, 10, u64::MAX / 2, 100);
        assert!(cfg.validate().is_err()); // allocation guard
        let cfg = quick(ProcessSpec::BBatch { b: 0 }, 10, 10, 1);
        assert!(cfg.validate().is_err()); // invalid process propagates
    }

    #[test]
    fn sweep_runs_grid_and_records_errors() {
        let base = quick(ProcessSpec::two_choice(), 50, 2_000, 5);
        let grid = vec![
            SweepPoint {
                label: "g1".into(),
                process: ProcessSpec::GBounded { g: 1 },
            },
            SweepPoint {
                label: "bad".into(),
                process: ProcessSpec::OnePlusBeta { beta: 0.0 },
            },
            SweepPoint {
                label: "g4".into(),
                process: ProcessSpec::GBounded { g: 4 },
            },
        ];
        let rows = sweep(&base, &grid, 0).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].mean_gap.is_some());
        assert!(rows[1].error.is_some());
        assert!(rows[2].mean_gap.is_some());
        assert!(sweep(&base, &[], 0).is_err());
    }

    #[test]
    fn presets_build_and_validate() {
        for name in PRESET_NAMES {
            let configs = preset(name).unwrap();
            assert!(!configs.is_empty(), "{name}");
            for cfg in &configs {
                cfg.validate().expect("preset config invalid");
            }
            // ids unique within the preset
            let mut ids: Vec<String> = configs.iter().map(|c| c.config_id()).collect();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), configs.len(), "{name} has duplicate ids");
        }
        assert!(matches!(
            preset("tableX"),
            Err(HarnessError::UnknownPreset { .. })
        ));
    }

    #[test]
    fn preset_round_trips_through_json() {
        for name in PRESET_NAMES {
            let configs = preset(name).unwrap();
            let json = serde_json::to_string(&configs).unwrap();
            let back: Vec<ExperimentConfig> = serde_json::from_str(&json).unwrap();
            assert_eq!(configs, back, "{name}");
        }
    }

    #[test]
    fn table3_preset_matches_published_grid() {
        let configs = preset("table3").unwrap();
        // 3 processes x 6 parameters x 3 bin counts
        assert_eq!(configs.len(), 54);
        assert!(configs
            .iter()
            .all(|c| c.m == 1000 * c.n && c.repetitions == 100));
        assert!(configs
            .iter()
            .any(|c| matches!(c.process, ProcessSpec::GBounded { g: 16 }) && c.n == 100_000));
    }

    #[test]
    fn fig8_preset_pairs_batch_with_one_choice() {
        let configs = preset("fig8").unwrap();
        for &b in &[10u64, 1_000, 100_000] {
            assert!(configs
                .iter()
                .any(|c| matches!(c.process, ProcessSpec::BBatch { b: pb } if pb == b)));
            assert!(configs
                .iter()
                .any(|c| matches!(c.process, ProcessSpec::OneChoice) && c.m == b));
        }
    }

    #[test]
    fn lower_bounds_preset_uses_half_ng() {
        let configs = preset("lower_bounds").unwrap();
        let myopic = configs
            .iter()
            .find(|c| matches!(c.process, ProcessSpec::GMyopicComp { g: 16 }))
            .unwrap();
        assert_eq!(myopic.m, myopic.n * 16 / 2);
    }

    #[test]
    fn stochastic_dominance_of_adversarial_noise() {
        // mean gap of greedy-max adversarial noise at m = n exceeds the
        // noiseless two-choice mean by a clear margin
        let n = 10_000;
        let reps = 1_000;
        let noisy = run_experiment(
            &quick(
                ProcessSpec::GAdvComp {
                    g: 8,
                    adversary: crate::process::AdversaryKind::GreedyMax,
                    strict: false,
                },
                n,
                n,
                reps,
            ),
            0,
        )
        .unwrap();
        let clean = run_experiment(&quick(ProcessSpec::two_choice(), n, n, reps), 0).unwrap();
        let diff = noisy.summary.mean - clean.summary.mean;
        let se = (noisy.summary.std_dev.powi(2) + clean.summary.std_dev.powi(2)).sqrt()
            / (reps as f64).sqrt();
        assert!(diff > 3.0 * se, "diff {diff} vs 3se {}", 3.0 * se);
    }

    #[test]
    fn throughput_target() {
        // engineering target: >= 1e7 allocations per second per core
        let cfg = quick(ProcessSpec::GBounded { g: 4 }, 10_000, 20_000_000, 1);
        let started = std::time::Instant::now();
        let _ = run_experiment(&cfg, 1).unwrap();
        let rate = 20_000_000.0 / started.elapsed().as_secs_f64();
        assert!(rate > 1.0e7, "throughput {rate:.2e} alloc/s");
    }
}
