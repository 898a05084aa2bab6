//! Plans a path on a scenario and flies it with the simulated vessel.

use mcgpmp::usv::{run_mission, timed_waypoints, ControllerGains, MissionLog, MissionParams};
use serde::{Deserialize, Serialize};

use crate::bench::plan_path;
use crate::error::{CliError, CliResult};
use crate::scenario::{LoadedScenario, PlannerKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionOptions {
    pub planner: PlannerKind,
    pub seed: u64,
    /// Cruise speed used to time the waypoints, m/s.
    pub speed: f64,
    /// Waypoint spacing along the path, meters. Defaults to the scenario's
    /// planner step, which keeps the vertices of lattice and tree paths.
    pub spacing: Option<f64>,
    pub timeout_s: f64,
}

impl Default for MissionOptions {
    fn default() -> Self {
        MissionOptions {
            planner: PlannerKind::McGpmp2Star,
            seed: 1,
            speed: 5.0,
            spacing: None,
            timeout_s: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSummary {
    pub scenario: String,
    pub planner: PlannerKind,
    pub path_length: f64,
    pub waypoints: usize,
    pub completed: bool,
    pub final_distance: f64,
    pub duration_s: f64,
    pub mean_cross_track: f64,
    pub max_cross_track: f64,
    pub mean_heading_change: f64,
}

pub struct MissionRun {
    pub path: Vec<[f64; 2]>,
    pub log: MissionLog,
    pub summary: MissionSummary,
}

/// Plans with `opts.planner` (MC-GPMP2* uses the scenario's replan count)
/// and runs the autopilot along the result, inside the scenario's currents.
pub fn plan_and_fly(ls: &LoadedScenario, opts: &MissionOptions) -> CliResult<MissionRun> {
    let spacing = opts
        .spacing
        .unwrap_or(ls.scenario.params.step as f64 * ls.fields.grid.cell_size());
    if !(opts.speed > 0.0 && spacing > 0.0) {
        return Err(CliError::Usage("speed and spacing must be positive".into()));
    }
    let (_, result) = plan_path(
        ls,
        opts.planner,
        opts.seed,
        ls.scenario.replans,
        opts.timeout_s,
    );
    let path = result.map_err(CliError::Planning)?;
    let waypoints = timed_waypoints(&path, spacing, opts.speed);
    let env = ls.scenario.has_currents().then_some(&ls.fields.env);
    let log = run_mission(
        &waypoints,
        &ControllerGains::default(),
        env,
        &MissionParams::default(),
    )?;
    let summary = MissionSummary {
        scenario: ls.scenario.name.clone(),
        planner: opts.planner,
        path_length: mcgpmp::geometry::path_length(&path),
        waypoints: waypoints.len(),
        completed: log.completed,
        final_distance: log.final_distance,
        duration_s: log.duration(),
        mean_cross_track: log.mean_cross_track(),
        max_cross_track: log.max_cross_track(),
        mean_heading_change: log.mean_heading_change(),
    };
    Ok(MissionRun { path, log, summary })
}
