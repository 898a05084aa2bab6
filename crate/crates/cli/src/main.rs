use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcgpmp::mc_gpmp2_star;
use mcgpmp_cli::bench::{plan_path, run_benchmark, BenchOptions, BenchReport};
use mcgpmp_cli::generate::{write_builtin, BuiltinName, SIZES};
use mcgpmp_cli::mission::{plan_and_fly, MissionOptions};
use mcgpmp_cli::plot::{write_mission_plots, write_plan_plots, write_report_plots};
use mcgpmp_cli::scenario::{LoadedScenario, PlannerKind};
use mcgpmp_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "mcgpmp", version, about = "GP motion planning benchmarks for surface vessels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write built-in scenarios (maps and JSON documents).
    GenScenarios {
        /// Names such as `problem3+currents/500`. Defaults to every problem
        /// at 500 x 500.
        names: Vec<String>,
        /// Generate every problem at every size.
        #[arg(long, conflicts_with = "names")]
        all_sizes: bool,
        #[arg(short, long, default_value = "scenarios")]
        out: PathBuf,
    },
    /// Plan one path and write it with its diagnostics.
    Plan {
        scenario: PathBuf,
        #[arg(short, long, default_value = "mc-gpmp2-star")]
        planner: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Planning iterations of MC-GPMP2*; defaults to the scenario's.
        #[arg(long)]
        replans: Option<usize>,
        #[arg(long, default_value_t = 30.0)]
        timeout: f64,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every selected planner on every scenario and write the report.
    Bench {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
        /// Planning iterations of MC-GPMP2* per run.
        #[arg(long, default_value_t = 1)]
        replans: usize,
        #[arg(long, default_value_t = 30.0)]
        timeout: f64,
        /// Run jobs one at a time for clean timings.
        #[arg(long)]
        serial: bool,
        /// Worker threads; defaults to the number of cores.
        #[arg(short, long)]
        jobs: Option<usize>,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Plan a path and fly it with the simulated vessel.
    Mission {
        scenario: PathBuf,
        #[arg(short, long, default_value = "mc-gpmp2-star")]
        planner: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Cruise speed, m/s.
        #[arg(long, default_value_t = 5.0)]
        speed: f64,
        #[arg(long, default_value_t = 30.0)]
        timeout: f64,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Render SVG figures (and their CSV data) from earlier outputs.
    Plot {
        /// Scenario files the inputs refer to.
        #[arg(long = "scenario", required = true)]
        scenarios: Vec<PathBuf>,
        /// A `bench` report.
        #[arg(long, conflicts_with = "plan")]
        report: Option<PathBuf>,
        /// A `plan` result of MC-GPMP2* or GPMP2.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(short, long, default_value = "plots")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::GenScenarios {
            names,
            all_sizes,
            out,
        } => {
            let names: Vec<BuiltinName> = if names.is_empty() {
                BuiltinName::all()
                    .into_iter()
                    .filter(|n| all_sizes || n.size == SIZES[0])
                    .collect()
            } else {
                names.iter().map(|n| n.parse()).collect::<CliResult<_>>()?
            };
            for n in names {
                let path = write_builtin(&n, &out)?;
                println!("{n} -> {}", path.display());
            }
            Ok(())
        }
        Command::Plan {
            scenario,
            planner,
            seed,
            replans,
            timeout,
            out,
        } => {
            let planner: PlannerKind = planner.parse()?;
            let ls = LoadedScenario::load(&scenario)?;
            let s = &ls.scenario;
            let seed = seed.unwrap_or(s.seed);
            let stem = format!("{}-{planner}", s.name);
            match planner {
                PlannerKind::McGpmp2Star | PlannerKind::Gpmp2 => {
                    let (params, replans) = if planner == PlannerKind::Gpmp2 {
                        (s.gpmp2_params(), 1)
                    } else {
                        (s.planner_params(), replans.unwrap_or(s.replans))
                    };
                    let plan = mc_gpmp2_star(&ls.fields, s.start, s.goal, &params, replans, seed)?;
                    write(&out.join(format!("{stem}.json")), &plan.to_json())?;
                    write_plan_plots(&plan, &ls, &out)?;
                    println!(
                        "{}: length {:.2} m, collision free {}, {:.1} ms",
                        s.name,
                        plan.length,
                        plan.collision_free,
                        plan.duration_s * 1e3
                    );
                    if !plan.collision_free {
                        return Err(CliError::Planning(format!(
                            "no collision-free path; best has clearance {:.2} m",
                            plan.min_clearance
                        )));
                    }
                }
                _ => {
                    let (elapsed, path) = plan_path(&ls, planner, seed, 1, timeout);
                    let path = path.map_err(CliError::Planning)?;
                    let mut csv = String::from("x,y\n");
                    for p in &path {
                        csv.push_str(&format!("{},{}\n", p[0], p[1]));
                    }
                    write(&out.join(format!("{stem}.csv")), &csv)?;
                    println!(
                        "{}: length {:.2} m, {:.1} ms",
                        s.name,
                        mcgpmp::geometry::path_length(&path),
                        elapsed * 1e3
                    );
                }
            }
            Ok(())
        }
        Command::Bench {
            scenarios,
            seed,
            repetitions,
            replans,
            timeout,
            serial,
            jobs,
            out,
        } => {
            if let Some(n) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            }
            let opts = BenchOptions {
                timeout_s: timeout,
                serial,
                mc_replans: replans,
                repetitions,
                seed,
            };
            let report = run_benchmark(&scenarios, &opts)?;
            report.write_all(&out)?;
            for r in &report.rows {
                let f = |s: Option<mcgpmp_cli::bench::Stat>| {
                    s.map_or("-".to_string(), |s| format!("{:.2}", s.mean))
                };
                println!(
                    "{:<28} {:<14} {}/{} ok  T {} ms  L {} m  P {} %",
                    r.scenario,
                    r.planner.to_string(),
                    r.successes,
                    r.runs,
                    f(r.time_ms),
                    f(r.length),
                    f(r.energy_pct)
                );
            }
            Ok(())
        }
        Command::Mission {
            scenario,
            planner,
            seed,
            speed,
            timeout,
            out,
        } => {
            let ls = LoadedScenario::load(&scenario)?;
            let opts = MissionOptions {
                planner: planner.parse()?,
                seed,
                speed,
                timeout_s: timeout,
                ..MissionOptions::default()
            };
            let run = plan_and_fly(&ls, &opts)?;
            write(
                &out.join(format!("{}-mission.json", ls.scenario.name)),
                &serde_json::to_string_pretty(&run.summary).expect("summary serializes"),
            )?;
            write_mission_plots(&run.log, &run.path, &ls, &out)?;
            let s = &run.summary;
            println!(
                "{}: completed {}, final distance {:.2} m, mean cross-track {:.2} m, {:.0} s",
                s.scenario, s.completed, s.final_distance, s.mean_cross_track, s.duration_s
            );
            Ok(())
        }
        Command::Plot {
            scenarios,
            report,
            plan,
            out,
        } => {
            let loaded = scenarios
                .iter()
                .map(|p| LoadedScenario::load(p))
                .collect::<CliResult<Vec<_>>>()?;
            let files = match (report, plan) {
                (Some(r), _) => write_report_plots(&BenchReport::from_json(&read(&r)?)?, &loaded, &out)?,
                (None, Some(p)) => {
                    let plan: mcgpmp::PlanResult = serde_json::from_str(&read(&p)?)
                        .map_err(|e| CliError::Scenario(format!("{}: {e}", p.display())))?;
                    write_plan_plots(&plan, &loaded[0], &out)?
                }
                (None, None) => {
                    return Err(CliError::Usage("pass --report or --plan".into()));
                }
            };
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}
