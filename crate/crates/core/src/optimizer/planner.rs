//! Replanning GP planner: rebuild a Monte-Carlo factor graph, solve it from
//! the straight line, keep the result only if it is collision free and
//! strictly shorter than the incumbent.

use std::io::Write;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factors::{
    build_factor_graph, GraphParams, GraphProblem, InterpolationMode, RobotBodyModel,
};
use crate::fields::{compute_sdf, EnvironmentField, OccupancyGrid, SignedDistanceField};
use crate::geometry::path_length;
use crate::gp::{GpModel, PlannerState};
use crate::optimizer::lm::{lm_solve, LmSettings};
use crate::optimizer::path::{collision_check, densify, DenseState};

/// Planner configuration. Defaults follow the 500 x 500 map row of the
/// benchmark parameter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub graph: GraphParams,
    /// Isotropic power-spectral density of the acceleration noise.
    pub qc: f64,
    pub total_time: f64,
    /// Number of segments `N`; the trajectory has `N + 1` support states.
    pub segments: usize,
    pub body: RobotBodyModel,
    pub lm: LmSettings,
    /// Output states per segment when densifying the solution.
    pub dense_resolution: usize,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            graph: GraphParams::default(),
            qc: 10.0,
            total_time: 2.0,
            segments: 5,
            body: RobotBodyModel::default(),
            lm: LmSettings::default(),
            dense_resolution: 32,
        }
    }
}

impl PlannerParams {
    /// Benchmark presets for square maps of 500, 1000 and 2000 cells.
    pub fn for_map_size(size: usize) -> Self {
        let (total_time, segments) = match size {
            0..=750 => (2.0, 5),
            751..=1500 => (4.0, 10),
            _ => (8.0, 20),
        };
        PlannerParams {
            total_time,
            segments,
            ..PlannerParams::default()
        }
    }

    /// The fixed-interpolation variant (plain GPMP2) with `per_segment`
    /// interpolated states everywhere.
    pub fn fixed_interpolation(mut self, per_segment: usize) -> Self {
        self.graph.interpolation = InterpolationMode::Fixed(per_segment);
        self
    }

    pub fn model(&self) -> Result<GpModel> {
        GpModel::uniform(2, self.qc, self.total_time, self.segments)
    }
}

/// Occupancy grid with its precomputed signed distance and environment
/// fields.
#[derive(Debug, Clone)]
pub struct PlanningFields {
    pub grid: OccupancyGrid,
    pub sdf: SignedDistanceField,
    pub env: EnvironmentField,
}

impl PlanningFields {
    pub fn precompute(grid: OccupancyGrid, env: EnvironmentField) -> Result<Self> {
        if env.shape().width != grid.width() || env.shape().height != grid.height() {
            return Err(Error::invalid(
                "environment and occupancy rasters differ in size",
            ));
        }
        let sdf = compute_sdf(&grid, SignedDistanceField::default_cap(grid.shape()))?;
        Ok(PlanningFields { grid, sdf, env })
    }

    /// Obstacles only, still water.
    pub fn calm(grid: OccupancyGrid) -> Result<Self> {
        let env = EnvironmentField::calm(*grid.shape())?;
        Self::precompute(grid, env)
    }
}

/// Diagnostics of one replanning iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub iteration: usize,
    pub graph_seed: u64,
    pub interp_counts: Vec<usize>,
    /// `None` when the solve failed numerically.
    pub length: Option<f64>,
    pub objective: Option<f64>,
    pub collision_free: bool,
    pub min_clearance: Option<f64>,
    pub lm_iterations: usize,
    pub accepted: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub support_states: Vec<Vec<f64>>,
    pub dense_path: Vec<DenseState>,
    pub length: f64,
    pub collision_free: bool,
    pub min_clearance: f64,
    pub objective: f64,
    pub replans: Vec<ReplanRecord>,
    pub seed: u64,
    /// Wall-clock time of the planning loop, seconds.
    pub duration_s: f64,
}

impl PlanResult {
    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.dense_path.iter().map(DenseState::xy).collect()
    }

    /// Lengths of the accepted paths in acceptance order.
    pub fn accepted_lengths(&self) -> Vec<f64> {
        self.replans
            .iter()
            .filter(|r| r.accepted)
            .filter_map(|r| r.length)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan result serializes")
    }

    /// Path-only CSV: `t,x,y,vx,vy`.
    pub fn write_path_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,x,y,vx,vy")?;
        for d in &self.dense_path {
            writeln!(
                w,
                "{},{},{},{},{}",
                d.t, d.state[0], d.state[1], d.state[2], d.state[3]
            )?;
        }
        Ok(())
    }
}

struct Candidate {
    states: Vec<PlannerState>,
    dense: Vec<DenseState>,
    length: f64,
    objective: f64,
    collision_free: bool,
    min_clearance: f64,
}

/// Plans from `start` to `goal` with `replans` Monte-Carlo graph rebuilds.
///
/// Each iteration solves from the constant-velocity straight line. A new
/// path replaces the incumbent only when it is collision free and strictly
/// shorter. If no iteration is collision free the lowest-objective solution
/// is returned with `collision_free = false`.
pub fn mc_gpmp2_star(
    fields: &PlanningFields,
    start: [f64; 2],
    goal: [f64; 2],
    params: &PlannerParams,
    replans: usize,
    seed: u64,
) -> Result<PlanResult> {
    if replans == 0 {
        return Err(Error::invalid(
            "at least one planning iteration is required",
        ));
    }
    if params.dense_resolution == 0 {
        return Err(Error::invalid("dense resolution must be at least 1"));
    }
    for (name, p) in [("start", start), ("goal", goal)] {
        if !fields.grid.shape().contains(p) || fields.grid.is_occupied_at(p) {
            return Err(Error::invalid(format!(
                "{name} {p:?} is outside the map or inside an obstacle"
            )));
        }
    }
    let clock = Instant::now();
    let model = params.model()?;
    let init = model.straight_line(&start, &goal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut records = Vec::with_capacity(replans);
    let mut incumbent: Option<Candidate> = None;
    let mut fallback: Option<Candidate> = None;
    let mut failures = Vec::new();

    for iteration in 0..replans {
        let graph_seed = rng.next_u64();
        let mut record = ReplanRecord {
            iteration,
            graph_seed,
            interp_counts: Vec::new(),
            length: None,
            objective: None,
            collision_free: false,
            min_clearance: None,
            lm_iterations: 0,
            accepted: false,
            error: None,
        };
        match solve_once(fields, &model, &init, params, graph_seed, &mut record) {
            Ok(cand) => {
                record.length = Some(cand.length);
                record.objective = Some(cand.objective);
                record.collision_free = cand.collision_free;
                record.min_clearance = Some(cand.min_clearance);
                let better = match &incumbent {
                    None => cand.collision_free,
                    Some(inc) => cand.collision_free && cand.length < inc.length,
                };
                if better {
                    record.accepted = true;
                    incumbent = Some(cand);
                } else if incumbent.is_none()
                    && fallback
                        .as_ref()
                        .is_none_or(|f| cand.objective < f.objective)
                {
                    fallback = Some(cand);
                }
            }
            Err(e) => {
                record.error = Some(e.to_string());
                failures.push(e.to_string());
            }
        }
        records.push(record);
    }

    let best = incumbent.or(fallback).ok_or_else(|| {
        Error::PlanningFailed(format!(
            "every planning iteration failed: {}",
            failures.join("; ")
        ))
    })?;
    Ok(PlanResult {
        support_states: best
            .states
            .iter()
            .map(|s| s.0.iter().copied().collect())
            .collect(),
        dense_path: best.dense,
        length: best.length,
        collision_free: best.collision_free,
        min_clearance: best.min_clearance,
        objective: best.objective,
        replans: records,
        seed,
        duration_s: clock.elapsed().as_secs_f64(),
    })
}

fn solve_once(
    fields: &PlanningFields,
    model: &GpModel,
    init: &[PlannerState],
    params: &PlannerParams,
    graph_seed: u64,
    record: &mut ReplanRecord,
) -> Result<Candidate> {
    let graph = build_factor_graph(model, &fields.grid, init, &params.graph, graph_seed)?;
    record.interp_counts = graph.interp_counts().to_vec();
    let problem = GraphProblem::new(&graph, &fields.sdf, &fields.env, &params.body)?;
    let outcome = lm_solve(&problem, init, &params.lm)?;
    record.lm_iterations = outcome.iterations;
    let dense = densify(&outcome.states, model, params.dense_resolution)?;
    let positions: Vec<[f64; 2]> = dense.iter().map(DenseState::xy).collect();
    let collision = collision_check(&positions, &fields.sdf, &params.body)?;
    Ok(Candidate {
        objective: outcome.final_cost(),
        states: outcome.states,
        length: path_length(&positions),
        collision_free: collision.collision_free,
        min_clearance: collision.min_clearance,
        dense,
    })
}
