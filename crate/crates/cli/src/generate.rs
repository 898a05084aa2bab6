//! Built-in benchmark scenarios.
//!
//! The five problems are structurally analogous to the usual benchmark
//! families (empty water, one obstacle, scattered obstacles, a narrow
//! passage, a coastline). They are synthesized here and do not reproduce
//! any published map imagery. Geometry is authored on a 500 m square and
//! scaled to the requested size; cells are 1 m.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mcgpmp::{OccupancyGrid, VortexSpec};

use crate::error::{CliError, CliResult};
use crate::scenario::{Currents, GpSettings, MapParams, PlannerKind, Scenario};

pub const SIZES: [usize; 3] = [500, 1000, 2000];

/// `problemK[+currents]/SIZE`, e.g. `problem3+currents/500`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BuiltinName {
    pub problem: u8,
    pub currents: bool,
    pub size: usize,
}

impl BuiltinName {
    pub fn all() -> Vec<BuiltinName> {
        let mut out = Vec::new();
        for size in SIZES {
            for problem in 1..=5 {
                for currents in [false, true] {
                    out.push(BuiltinName {
                        problem,
                        currents,
                        size,
                    });
                }
            }
        }
        out
    }

    /// File stem used for the scenario document, e.g. `problem3-currents-500`.
    pub fn stem(&self) -> String {
        if self.currents {
            format!("problem{}-currents-{}", self.problem, self.size)
        } else {
            format!("problem{}-{}", self.problem, self.size)
        }
    }

    /// Map file name; shared by the with- and without-currents variants.
    pub fn map_file(&self) -> String {
        format!("problem{}-{}.pgm", self.problem, self.size)
    }
}

impl fmt::Display for BuiltinName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = if self.currents { "+currents" } else { "" };
        write!(f, "problem{}{c}/{}", self.problem, self.size)
    }
}

impl FromStr for BuiltinName {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let usage = || {
            CliError::Usage(format!(
                "unknown scenario '{s}'; expected problem1..problem5, optionally with \
                 '+currents', followed by /500, /1000 or /2000 (e.g. problem3+currents/500)"
            ))
        };
        let (head, size) = s.split_once('/').ok_or_else(usage)?;
        let size: usize = size.parse().map_err(|_| usage())?;
        if !SIZES.contains(&size) {
            return Err(usage());
        }
        let (problem, currents) = match head.strip_suffix("+currents") {
            Some(p) => (p, true),
            None => (head, false),
        };
        let problem: u8 = problem
            .strip_prefix("problem")
            .and_then(|n| n.parse().ok())
            .filter(|n| (1..=5).contains(n))
            .ok_or_else(usage)?;
        Ok(BuiltinName {
            problem,
            currents,
            size,
        })
    }
}

fn disc(x: f64, y: f64, cx: f64, cy: f64, r: f64) -> bool {
    (x - cx).powi(2) + (y - cy).powi(2) < r * r
}

fn ellipse(x: f64, y: f64, cx: f64, cy: f64, a: f64, b: f64) -> bool {
    ((x - cx) / a).powi(2) + ((y - cy) / b).powi(2) < 1.0
}

/// Passage through the problem 4 wall, in 500 m units.
pub const PASSAGE_X: (f64, f64) = (225.0, 275.0);
pub const PASSAGE_Y: (f64, f64) = (262.0, 322.0);

/// Occupancy of problem `k` at a point given in 500 m units.
fn occupied(problem: u8, x: f64, y: f64) -> bool {
    match problem {
        1 => false,
        2 => disc(x, y, 250.0, 240.0, 70.0),
        3 => {
            disc(x, y, 135.0, 282.0, 38.0)
                || disc(x, y, 250.0, 205.0, 42.0)
                || disc(x, y, 365.0, 286.0, 36.0)
                || disc(x, y, 205.0, 390.0, 30.0)
                || disc(x, y, 330.0, 110.0, 32.0)
                || (x > 60.0 && x < 95.0 && y > 120.0 && y < 185.0)
        }
        4 => {
            let in_wall = x >= PASSAGE_X.0 && x < PASSAGE_X.1;
            in_wall && !(y >= PASSAGE_Y.0 && y < PASSAGE_Y.1)
        }
        5 => {
            let shore = 150.0
                + 35.0 * (std::f64::consts::TAU * x / 260.0).sin()
                + 14.0 * (std::f64::consts::TAU * x / 95.0 + 1.3).sin();
            y < shore
                || ellipse(x, y, 250.0, 215.0, 40.0, 90.0)
                || disc(x, y, 150.0, 300.0, 26.0)
                || disc(x, y, 345.0, 310.0, 24.0)
                || ellipse(x, y, 420.0, 390.0, 30.0, 18.0)
        }
        _ => unreachable!("problem index checked on parse"),
    }
}

fn endpoints(problem: u8) -> ([f64; 2], [f64; 2]) {
    match problem {
        5 => ([40.0, 262.0], [465.0, 262.0]),
        _ => ([30.0, 250.0], [470.0, 250.0]),
    }
}

/// Vortices of the with-currents variant, in 500 m units.
fn vortices(problem: u8) -> Vec<VortexSpec> {
    let v = |cx: f64, cy: f64, circulation: f64, core: f64| VortexSpec {
        center: [cx, cy],
        circulation,
        core_radius: core,
    };
    match problem {
        1 => vec![v(180.0, 295.0, 900.0, 30.0), v(340.0, 195.0, -900.0, 30.0)],
        2 => vec![v(120.0, 180.0, 800.0, 25.0), v(390.0, 330.0, -800.0, 25.0)],
        3 => vec![v(300.0, 380.0, 900.0, 30.0), v(90.0, 330.0, -700.0, 25.0)],
        // Centered in the upper wall mass so the saturated ring spans the
        // whole passage.
        4 => vec![v(250.0, 342.0, 1100.0, 30.0)],
        5 => vec![v(300.0, 420.0, 900.0, 30.0), v(80.0, 380.0, -700.0, 25.0)],
        _ => unreachable!(),
    }
}

pub const MAX_CURRENT: f64 = 2.0;

pub fn build_map(name: &BuiltinName) -> CliResult<OccupancyGrid> {
    let s = 500.0 / name.size as f64;
    Ok(OccupancyGrid::from_fn(
        name.size,
        name.size,
        1.0,
        |ix, iy| occupied(name.problem, ix as f64 * s, iy as f64 * s),
    )?)
}

pub fn build_scenario(name: &BuiltinName) -> Scenario {
    let k = name.size as f64 / 500.0;
    let scale = |p: [f64; 2]| [p[0] * k, p[1] * k];
    let (start, goal) = endpoints(name.problem);
    let currents = name.currents.then(|| Currents {
        max_current: MAX_CURRENT,
        vortices: vortices(name.problem)
            .into_iter()
            .map(|v| VortexSpec {
                center: scale(v.center),
                // Circulation scales with length squared over time; keep the
                // peak speed fixed by scaling linearly with length.
                circulation: v.circulation * k,
                core_radius: v.core_radius * k,
            })
            .collect(),
    });
    let planners = if name.currents {
        vec![PlannerKind::McGpmp2Star, PlannerKind::Fmm]
    } else {
        vec![
            PlannerKind::McGpmp2Star,
            PlannerKind::Gpmp2,
            PlannerKind::Astar,
            PlannerKind::RrtStar,
        ]
    };
    Scenario {
        name: name.stem(),
        map: PathBuf::from(name.map_file()),
        start: scale(start),
        goal: scale(goal),
        params: MapParams::for_size(name.size),
        gp: GpSettings::default(),
        currents,
        planners,
        replans: 5,
        seed: 1,
        repetitions: 5,
    }
}

/// Writes the map (if not already present) and the scenario document into
/// `dir`, returning the scenario path.
pub fn write_builtin(name: &BuiltinName, dir: &Path) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let scenario = build_scenario(name);
    let map_path = dir.join(&scenario.map);
    build_map(name)?.save_pgm(&map_path)?;
    let path = dir.join(format!("{}.json", name.stem()));
    std::fs::write(&path, scenario.to_json())
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}
