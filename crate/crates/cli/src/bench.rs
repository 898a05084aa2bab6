//! Repeated planner runs over a set of scenarios and the resulting report.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use mcgpmp::baselines::{astar_plan, fmm_plan, rrt_star_plan};
use mcgpmp::geometry::{mean_turn_angle, path_length, resample};
use mcgpmp::{mc_gpmp2_star, PlanningFields};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::scenario::{LoadedScenario, PlannerKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    /// Per-run wall-clock limit, seconds.
    pub timeout_s: f64,
    /// Run every job on the calling thread for clean timings.
    pub serial: bool,
    /// Planning iterations of MC-GPMP2* per run. The comparison protocol
    /// runs every planner once.
    pub mc_replans: usize,
    /// Overrides each scenario's repetition count.
    pub repetitions: Option<usize>,
    /// Overrides each scenario's base seed.
    pub seed: Option<u64>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            timeout_s: 30.0,
            serial: false,
            mc_replans: 1,
            repetitions: None,
            seed: None,
        }
    }
}

/// Seed of repetition `rep` under base seed `base`.
pub fn derive_seed(base: u64, rep: usize) -> u64 {
    base ^ (rep as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub planner: PlannerKind,
    pub repetition: usize,
    pub seed: u64,
    pub success: bool,
    pub error: Option<String>,
    pub time_ms: f64,
    pub length: Option<f64>,
    /// Mean energy rate along the path, percent.
    pub energy_pct: Option<f64>,
    /// Mean absolute turn angle, radians.
    pub smoothness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Stat> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        Some(Stat {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Aggregate of one planner on one scenario. Failed runs are counted and
/// left out of every statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: String,
    pub planner: PlannerKind,
    pub runs: usize,
    pub successes: usize,
    pub success: bool,
    pub time_ms: Option<Stat>,
    pub length: Option<Stat>,
    pub energy_pct: Option<Stat>,
    pub smoothness: Option<Stat>,
    /// Path of the first successful repetition, for plotting.
    pub path: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub options: BenchOptions,
    /// Field precomputation per scenario, milliseconds.
    pub precompute_ms: Vec<(String, f64)>,
    pub rows: Vec<BenchRow>,
    pub runs: Vec<RunRecord>,
}

impl BenchReport {
    pub fn row(&self, scenario: &str, planner: PlannerKind) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.planner == planner)
    }

    /// Copy with every wall-clock figure zeroed, for reproducibility checks.
    pub fn masked(&self) -> BenchReport {
        let mut r = self.clone();
        for (_, t) in &mut r.precompute_ms {
            *t = 0.0;
        }
        for row in &mut r.rows {
            row.time_ms = row.time_ms.map(|_| Stat {
                mean: 0.0,
                min: 0.0,
                max: 0.0,
            });
        }
        for run in &mut r.runs {
            run.time_ms = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Scenario(format!("bad report: {e}")))
    }

    /// One line per (scenario, planner) row.
    pub fn write_summary_csv(&self, w: impl Write) -> CliResult<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "scenario",
            "planner",
            "runs",
            "successes",
            "time_ms_mean",
            "time_ms_min",
            "time_ms_max",
            "length_mean",
            "length_min",
            "length_max",
            "energy_pct_mean",
            "smoothness_mean",
        ])
        .map_err(csv_err)?;
        let cell = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for r in &self.rows {
            out.write_record([
                r.scenario.clone(),
                r.planner.to_string(),
                r.runs.to_string(),
                r.successes.to_string(),
                cell(r.time_ms.map(|s| s.mean)),
                cell(r.time_ms.map(|s| s.min)),
                cell(r.time_ms.map(|s| s.max)),
                cell(r.length.map(|s| s.mean)),
                cell(r.length.map(|s| s.min)),
                cell(r.length.map(|s| s.max)),
                cell(r.energy_pct.map(|s| s.mean)),
                cell(r.smoothness.map(|s| s.mean)),
            ])
            .map_err(csv_err)?;
        }
        out.flush()
            .map_err(|e| CliError::io("writing summary CSV", e))
    }

    /// Every repetition.
    pub fn write_runs_csv(&self, w: impl Write) -> CliResult<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.runs {
            out.serialize(r).map_err(csv_err)?;
        }
        out.flush().map_err(|e| CliError::io("writing runs CSV", e))
    }

    /// Writes `report.json`, `summary.csv` and `runs.csv` into `dir`.
    pub fn write_all(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        let create = |name: &str| {
            let p = dir.join(name);
            std::fs::File::create(&p)
                .map(std::io::BufWriter::new)
                .map_err(|e| CliError::io(format!("creating {}", p.display()), e))
        };
        create("report.json")?
            .write_all(self.to_json().as_bytes())
            .map_err(|e| CliError::io("writing report.json", e))?;
        self.write_summary_csv(create("summary.csv")?)?;
        self.write_runs_csv(create("runs.csv")?)
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Scenario(format!("CSV output: {e}"))
}

/// Loads every scenario first, so a bad file aborts before any run, then
/// benchmarks them.
pub fn run_benchmark(paths: &[impl AsRef<Path>], opts: &BenchOptions) -> CliResult<BenchReport> {
    let loaded = paths
        .iter()
        .map(|p| LoadedScenario::load(p.as_ref()))
        .collect::<CliResult<Vec<_>>>()?;
    run_loaded(&loaded, opts)
}

pub fn run_loaded(scenarios: &[LoadedScenario], opts: &BenchOptions) -> CliResult<BenchReport> {
    if !(opts.timeout_s > 0.0) || opts.mc_replans == 0 || opts.repetitions == Some(0) {
        return Err(CliError::Usage(
            "timeout, replans and repetitions must be positive".into(),
        ));
    }
    let mut jobs = Vec::new();
    for (si, ls) in scenarios.iter().enumerate() {
        let reps = opts.repetitions.unwrap_or(ls.scenario.repetitions);
        for &planner in &ls.scenario.planners {
            for rep in 0..reps {
                jobs.push((si, planner, rep));
            }
        }
    }
    let run = |&(si, planner, rep): &(usize, PlannerKind, usize)| {
        let ls = &scenarios[si];
        let seed = derive_seed(opts.seed.unwrap_or(ls.scenario.seed), rep);
        run_once(ls, planner, rep, seed, opts)
    };
    let results: Vec<(RunRecord, Vec<[f64; 2]>)> = if opts.serial {
        jobs.iter().map(run).collect()
    } else {
        jobs.par_iter().map(run).collect()
    };

    let mut rows = Vec::new();
    for ls in scenarios {
        for &planner in &ls.scenario.planners {
            let mine: Vec<_> = results
                .iter()
                .filter(|(r, _)| r.scenario == ls.scenario.name && r.planner == planner)
                .collect();
            let ok: Vec<&RunRecord> = mine.iter().map(|(r, _)| r).filter(|r| r.success).collect();
            rows.push(BenchRow {
                scenario: ls.scenario.name.clone(),
                planner,
                runs: mine.len(),
                successes: ok.len(),
                success: ok.len() == mine.len(),
                time_ms: Stat::of(ok.iter().map(|r| r.time_ms)),
                length: Stat::of(ok.iter().filter_map(|r| r.length)),
                energy_pct: Stat::of(ok.iter().filter_map(|r| r.energy_pct)),
                smoothness: Stat::of(ok.iter().filter_map(|r| r.smoothness)),
                path: mine
                    .iter()
                    .find(|(r, _)| r.success)
                    .map(|(_, p)| p.clone())
                    .unwrap_or_default(),
            });
        }
    }
    Ok(BenchReport {
        options: *opts,
        precompute_ms: scenarios
            .iter()
            .map(|ls| (ls.scenario.name.clone(), ls.precompute_s * 1e3))
            .collect(),
        rows,
        runs: results.into_iter().map(|(r, _)| r).collect(),
    })
}

/// Plans once with `planner` and returns the path, or a failure message.
/// The returned duration covers the planner call only.
pub fn plan_path(
    ls: &LoadedScenario,
    planner: PlannerKind,
    seed: u64,
    mc_replans: usize,
    timeout_s: f64,
) -> (f64, Result<Vec<[f64; 2]>, String>) {
    let s = &ls.scenario;
    let f = &ls.fields;
    let clock = Instant::now();
    let result = match planner {
        PlannerKind::McGpmp2Star | PlannerKind::Gpmp2 => {
            let (params, replans) = if planner == PlannerKind::Gpmp2 {
                (s.gpmp2_params(), 1)
            } else {
                (s.planner_params(), mc_replans)
            };
            mc_gpmp2_star(f, s.start, s.goal, &params, replans, seed)
                .map_err(|e| e.to_string())
                .and_then(|r| {
                    if r.collision_free {
                        Ok(r.positions())
                    } else {
                        Err(format!(
                            "no collision-free path (min clearance {:.2} m)",
                            r.min_clearance
                        ))
                    }
                })
        }
        PlannerKind::Astar => {
            let p = mcgpmp::baselines::GridSearchParams {
                timeout_s,
                ..s.astar_params()
            };
            astar_plan(&f.sdf, s.start, s.goal, &p)
                .map(|r| r.path)
                .map_err(|e| e.to_string())
        }
        PlannerKind::RrtStar => {
            let p = mcgpmp::baselines::RrtStarParams {
                timeout_s,
                ..s.rrt_params()
            };
            rrt_star_plan(&f.sdf, s.start, s.goal, &p, seed)
                .map(|r| r.path)
                .map_err(|e| e.to_string())
        }
        PlannerKind::Fmm => fmm_plan(&f.sdf, &f.env, s.start, s.goal, &s.fmm_params())
            .map(|r| r.path)
            .map_err(|e| e.to_string()),
    };
    let elapsed = clock.elapsed().as_secs_f64();
    let result = if elapsed > timeout_s {
        Err(format!("timed out after {elapsed:.1} s"))
    } else {
        result
    };
    (elapsed, result)
}

fn run_once(
    ls: &LoadedScenario,
    planner: PlannerKind,
    repetition: usize,
    seed: u64,
    opts: &BenchOptions,
) -> (RunRecord, Vec<[f64; 2]>) {
    let (elapsed, result) = plan_path(ls, planner, seed, opts.mc_replans, opts.timeout_s);
    let mut record = RunRecord {
        scenario: ls.scenario.name.clone(),
        planner,
        repetition,
        seed,
        success: false,
        error: None,
        time_ms: elapsed * 1e3,
        length: None,
        energy_pct: None,
        smoothness: None,
    };
    match result {
        Ok(path) => {
            record.success = true;
            record.length = Some(path_length(&path));
            record.energy_pct = Some(100.0 * mean_energy_rate(&ls.fields, &path));
            record.smoothness = Some(mean_turn_angle(&path, ls.scenario.params.step as f64));
            (record, path)
        }
        Err(e) => {
            record.error = Some(e);
            (record, Vec::new())
        }
    }
}

/// Mean energy rate over the path sampled once per cell.
pub fn mean_energy_rate(fields: &PlanningFields, path: &[[f64; 2]]) -> f64 {
    let pts = resample(path, fields.grid.shape().cell_size);
    if pts.is_empty() {
        return 0.0;
    }
    pts.iter()
        .map(|&p| fields.env.sample_energy(p).value)
        .sum::<f64>()
        / pts.len() as f64
}
