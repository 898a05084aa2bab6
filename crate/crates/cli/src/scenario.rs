//! JSON scenario documents and their loaded form.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mcgpmp::baselines::{FmmParams, GridSearchParams, RrtStarParams};
use mcgpmp::{
    synth_vortex_field, EnvironmentField, GraphParams, InterpolationMode, OccupancyGrid,
    PlannerParams, PlanningFields, VortexSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    McGpmp2Star,
    Gpmp2,
    Astar,
    RrtStar,
    Fmm,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::McGpmp2Star,
        PlannerKind::Gpmp2,
        PlannerKind::Astar,
        PlannerKind::RrtStar,
        PlannerKind::Fmm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::McGpmp2Star => "mc-gpmp2-star",
            PlannerKind::Gpmp2 => "gpmp2",
            PlannerKind::Astar => "astar",
            PlannerKind::RrtStar => "rrt-star",
            PlannerKind::Fmm => "fmm",
        }
    }

    /// Whether repeated runs use different seeds.
    pub fn is_stochastic(self) -> bool {
        matches!(self, PlannerKind::McGpmp2Star | PlannerKind::RrtStar)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PlannerKind::ALL.iter().map(|p| p.name()).collect();
                CliError::Usage(format!(
                    "unknown planner '{s}', expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// The per-resolution parameter row shared by every planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    /// Safety distance, meters.
    pub epsilon: f64,
    pub sigma_obs: f64,
    pub sigma_env: f64,
    /// Trajectory duration, seconds.
    pub t_max: f64,
    /// Number of GP segments.
    pub segments: usize,
    /// Lattice / steering step of A* and RRT*, pixels.
    pub step: usize,
}

impl MapParams {
    /// Parameter row for a square map of `size` pixels.
    pub fn for_size(size: usize) -> Self {
        let p = PlannerParams::for_map_size(size);
        MapParams {
            epsilon: 20.0,
            sigma_obs: 0.05,
            sigma_env: 0.005,
            t_max: p.total_time,
            segments: p.segments,
            step: 10,
        }
    }
}

/// Settings of the GP planners that are not part of [`MapParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpSettings {
    pub qc: f64,
    pub lambda: f64,
    pub max_interp: usize,
    pub mc_samples: usize,
    /// Interpolated states per segment for the fixed-count variant.
    pub fixed_interp: usize,
    pub body_radius: f64,
    pub dense_resolution: usize,
}

impl Default for GpSettings {
    fn default() -> Self {
        let p = PlannerParams::default();
        GpSettings {
            qc: p.qc,
            lambda: p.graph.lambda,
            max_interp: p.graph.max_interp,
            mc_samples: p.graph.mc_samples,
            fixed_interp: p.graph.lambda as usize,
            body_radius: p.body.max_radius(),
            dense_resolution: p.dense_resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Currents {
    pub max_current: f64,
    pub vortices: Vec<VortexSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// PGM map, relative to the scenario file.
    pub map: PathBuf,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub params: MapParams,
    #[serde(default)]
    pub gp: GpSettings,
    #[serde(default)]
    pub currents: Option<Currents>,
    pub planners: Vec<PlannerKind>,
    pub replans: usize,
    pub seed: u64,
    pub repetitions: usize,
}

impl Scenario {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| {
            Err(CliError::Scenario(format!(
                "scenario '{}': {msg}",
                self.name
            )))
        };
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.replans == 0 {
            return bad("replans must be at least 1".into());
        }
        if self.planners.is_empty() {
            return bad("no planners selected".into());
        }
        if self.params.segments == 0 || !(self.params.t_max > 0.0) || self.params.step == 0 {
            return bad("segments, t_max and step must be positive".into());
        }
        if !(self.params.epsilon >= 0.0
            && self.params.sigma_obs > 0.0
            && self.params.sigma_env > 0.0)
        {
            return bad("epsilon must be non-negative and sigmas positive".into());
        }
        if let Some(c) = &self.currents {
            if !(c.max_current > 0.0) {
                return bad("max_current must be positive".into());
            }
            for v in &c.vortices {
                v.validate()
                    .map_err(|e| CliError::Scenario(format!("scenario '{}': {e}", self.name)))?;
            }
        }
        Ok(())
    }

    pub fn has_currents(&self) -> bool {
        self.currents
            .as_ref()
            .is_some_and(|c| !c.vortices.is_empty())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Reads and validates a scenario file, resolving its map path against
    /// the file's directory. The map must exist.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading scenario {}", path.display()), e))?;
        let mut s: Scenario = serde_json::from_str(&text)
            .map_err(|e| CliError::Scenario(format!("{}: {e}", path.display())))?;
        if s.map.is_relative() {
            if let Some(dir) = path.parent() {
                s.map = dir.join(&s.map);
            }
        }
        s.validate()?;
        if !s.map.is_file() {
            return Err(CliError::Scenario(format!(
                "scenario '{}': map file {} does not exist",
                s.name,
                s.map.display()
            )));
        }
        Ok(s)
    }

    pub fn planner_params(&self) -> PlannerParams {
        let gp = &self.gp;
        PlannerParams {
            graph: GraphParams {
                epsilon: self.params.epsilon,
                sigma_obs: self.params.sigma_obs,
                sigma_env: self.params.sigma_env,
                lambda: gp.lambda,
                max_interp: gp.max_interp,
                mc_samples: gp.mc_samples,
                interpolation: InterpolationMode::MonteCarlo,
                ..GraphParams::default()
            },
            qc: gp.qc,
            total_time: self.params.t_max,
            segments: self.params.segments,
            body: mcgpmp::RobotBodyModel::single(gp.body_radius).expect("validated radius"),
            dense_resolution: gp.dense_resolution,
            ..PlannerParams::default()
        }
    }

    pub fn gpmp2_params(&self) -> PlannerParams {
        self.planner_params()
            .fixed_interpolation(self.gp.fixed_interp)
    }

    pub fn astar_params(&self) -> GridSearchParams {
        GridSearchParams {
            step: self.params.step,
            inflation: self.params.epsilon,
            ..GridSearchParams::default()
        }
    }

    pub fn rrt_params(&self) -> RrtStarParams {
        RrtStarParams {
            step: self.params.step as f64,
            inflation: self.params.epsilon,
            ..RrtStarParams::default()
        }
    }

    pub fn fmm_params(&self) -> FmmParams {
        FmmParams {
            inflation: self.params.epsilon,
            ..FmmParams::default()
        }
    }
}

/// A scenario with its map and fields in memory.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub fields: PlanningFields,
    /// Seconds spent building the distance and environment rasters.
    pub precompute_s: f64,
}

impl LoadedScenario {
    pub fn load(path: &Path) -> CliResult<Self> {
        let scenario = Scenario::load(path)?;
        let grid = OccupancyGrid::load_pgm(&scenario.map)?;
        Self::from_parts(scenario, grid)
    }

    pub fn from_parts(scenario: Scenario, grid: OccupancyGrid) -> CliResult<Self> {
        scenario.validate()?;
        let clock = std::time::Instant::now();
        let env = match &scenario.currents {
            Some(c) if !c.vortices.is_empty() => {
                synth_vortex_field(&c.vortices, *grid.shape(), c.max_current)?
            }
            _ => EnvironmentField::calm(*grid.shape())?,
        };
        let fields = PlanningFields::precompute(grid, env)?;
        Ok(LoadedScenario {
            scenario,
            fields,
            precompute_s: clock.elapsed().as_secs_f64(),
        })
    }
}
