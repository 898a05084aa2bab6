use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factors::mc::{mc_estimate_obstacle_space, McEstimate, SamplingRegion};
use crate::fields::OccupancyGrid;
use crate::gp::{GpModel, PlannerState};

/// How many interpolated states each segment receives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMode {
    /// `N_j = round(lambda * P_obs)` from a Monte-Carlo estimate per segment.
    MonteCarlo,
    /// The same fixed count on every segment (plain GPMP2 behaviour).
    Fixed(usize),
}

/// Weights and sampling settings for factor-graph construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphParams {
    /// Safety distance of the hinge obstacle cost, meters.
    pub epsilon: f64,
    pub sigma_obs: f64,
    pub sigma_env: f64,
    /// Scaling term turning an obstacle fraction into an interpolation count.
    pub lambda: f64,
    pub max_interp: usize,
    /// Monte-Carlo samples drawn per segment region.
    pub mc_samples: usize,
    pub prior_sigma_pos: f64,
    pub prior_sigma_vel: f64,
    pub interpolation: InterpolationMode,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            epsilon: 20.0,
            sigma_obs: 0.05,
            sigma_env: 0.005,
            lambda: 10.0,
            max_interp: 50,
            mc_samples: 32,
            prior_sigma_pos: 1e-3,
            prior_sigma_vel: 1e-1,
            interpolation: InterpolationMode::MonteCarlo,
        }
    }
}

impl GraphParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("sigma_obs", self.sigma_obs),
            ("sigma_env", self.sigma_env),
            ("prior_sigma_pos", self.prior_sigma_pos),
            ("prior_sigma_vel", self.prior_sigma_vel),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("mc_samples must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Prior,
    GpPrior,
    Obstacle,
    InterpObstacle,
    Environment,
    InterpEnvironment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    /// Pins a support state to `mean` with separate position/velocity sigmas.
    Prior {
        state: usize,
        mean: Vec<f64>,
        sigma_pos: f64,
        sigma_vel: f64,
    },
    /// Constant-velocity prior between support states `segment`, `segment + 1`.
    GpPrior {
        segment: usize,
    },
    Obstacle {
        state: usize,
    },
    /// Obstacle cost at absolute time `tau` inside `segment`.
    InterpObstacle {
        segment: usize,
        tau: f64,
    },
    Environment {
        state: usize,
    },
    InterpEnvironment {
        segment: usize,
        tau: f64,
    },
}

impl Factor {
    pub fn kind(&self) -> FactorKind {
        match self {
            Factor::Prior { .. } => FactorKind::Prior,
            Factor::GpPrior { .. } => FactorKind::GpPrior,
            Factor::Obstacle { .. } => FactorKind::Obstacle,
            Factor::InterpObstacle { .. } => FactorKind::InterpObstacle,
            Factor::Environment { .. } => FactorKind::Environment,
            Factor::InterpEnvironment { .. } => FactorKind::InterpEnvironment,
        }
    }

    /// Support states the factor's residual depends on.
    pub fn states(&self) -> Vec<usize> {
        match *self {
            Factor::Prior { state, .. }
            | Factor::Obstacle { state }
            | Factor::Environment { state } => vec![state],
            Factor::GpPrior { segment }
            | Factor::InterpObstacle { segment, .. }
            | Factor::InterpEnvironment { segment, .. } => vec![segment, segment + 1],
        }
    }

    pub fn tau(&self) -> Option<f64> {
        match *self {
            Factor::InterpObstacle { tau, .. } | Factor::InterpEnvironment { tau, .. } => Some(tau),
            _ => None,
        }
    }
}

/// Factors over the support states of one planning problem.
#[derive(Debug, Clone, Serialize)]
pub struct FactorGraph {
    #[serde(skip)]
    model: GpModel,
    params: GraphParams,
    support_count: usize,
    factors: Vec<Factor>,
    interp_counts: Vec<usize>,
    estimates: Vec<Option<McEstimate>>,
    /// Segments whose interpolation count hit `max_interp`.
    capped_segments: Vec<usize>,
}

impl FactorGraph {
    /// An empty graph over the support states of `model`.
    pub fn new(model: GpModel, params: GraphParams) -> Result<Self> {
        params.validate()?;
        let segments = model.segments();
        Ok(FactorGraph {
            support_count: model.support_count(),
            model,
            params,
            factors: Vec::new(),
            interp_counts: vec![0; segments],
            estimates: vec![None; segments],
            capped_segments: Vec::new(),
        })
    }

    pub fn push(&mut self, factor: Factor) -> Result<()> {
        let n = self.support_count;
        let ok = match &factor {
            Factor::Prior { state, mean, .. } => *state < n && mean.len() == self.model.state_dim(),
            Factor::Obstacle { state } | Factor::Environment { state } => *state < n,
            Factor::GpPrior { segment } => *segment + 1 < n,
            Factor::InterpObstacle { segment, tau }
            | Factor::InterpEnvironment { segment, tau } => {
                *segment + 1 < n && {
                    let (a, b) = self.model.segment_bounds(*segment);
                    *tau >= a && *tau <= b
                }
            }
        };
        if !ok {
            return Err(Error::invalid(format!(
                "factor does not fit graph: {factor:?}"
            )));
        }
        if let Factor::InterpObstacle { segment, .. } = factor {
            self.interp_counts[segment] += 1;
        }
        self.factors.push(factor);
        Ok(())
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn support_count(&self) -> usize {
        self.support_count
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Interpolated-state count `N_j` per segment.
    pub fn interp_counts(&self) -> &[usize] {
        &self.interp_counts
    }

    pub fn estimates(&self) -> &[Option<McEstimate>] {
        &self.estimates
    }

    pub fn capped_segments(&self) -> &[usize] {
        &self.capped_segments
    }

    pub fn count(&self, kind: FactorKind) -> usize {
        self.factors.iter().filter(|f| f.kind() == kind).count()
    }

    /// Plain-JSON structure dump for debugging and snapshots.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("factor graph serializes")
    }
}

/// MC-driven factor graph (`N_j = round(lambda * P_obs)` per segment).
pub fn build_factor_graph_mc(
    model: &GpModel,
    grid: &OccupancyGrid,
    init: &[PlannerState],
    params: &GraphParams,
    seed: u64,
) -> Result<FactorGraph> {
    let mut p = params.clone();
    p.interpolation = InterpolationMode::MonteCarlo;
    build_factor_graph(model, grid, init, &p, seed)
}

/// Builds the graph: start prior, then per segment an obstacle and an
/// environment factor on the segment's end state, the GP prior, and `N_j`
/// interpolated obstacle/environment pairs at evenly spaced interior times;
/// finally the goal prior.
///
/// `init` supplies the prior means for the first and last states and the
/// support positions whose inflated bounding boxes define each segment's
/// sampling region.
pub fn build_factor_graph(
    model: &GpModel,
    grid: &OccupancyGrid,
    init: &[PlannerState],
    params: &GraphParams,
    seed: u64,
) -> Result<FactorGraph> {
    if init.len() != model.support_count() {
        return Err(Error::invalid(format!(
            "expected {} initial states, got {}",
            model.support_count(),
            init.len()
        )));
    }
    if init.iter().any(|s| s.0.len() != model.state_dim()) {
        return Err(Error::invalid("initial state dimension mismatch"));
    }
    let mut graph = FactorGraph::new(model.clone(), params.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.segments();

    graph.push(Factor::Prior {
        state: 0,
        mean: init[0].0.iter().copied().collect(),
        sigma_pos: params.prior_sigma_pos,
        sigma_vel: params.prior_sigma_vel,
    })?;

    for seg in 0..n {
        graph.push(Factor::Obstacle { state: seg + 1 })?;
        graph.push(Factor::Environment { state: seg + 1 })?;
        graph.push(Factor::GpPrior { segment: seg })?;

        let wanted = match params.interpolation {
            InterpolationMode::Fixed(k) => k,
            InterpolationMode::MonteCarlo => {
                let region = SamplingRegion::around_segment(
                    grid,
                    init[seg].xy(),
                    init[seg + 1].xy(),
                    params.epsilon,
                )?;
                let est =
                    mc_estimate_obstacle_space(grid, &region, params.mc_samples, rng.next_u64())?;
                graph.estimates[seg] = Some(est);
                (params.lambda * est.p_obs).round() as usize
            }
        };
        let count = if wanted > params.max_interp {
            graph.capped_segments.push(seg);
            params.max_interp
        } else {
            wanted
        };

        let (a, b) = model.segment_bounds(seg);
        for k in 1..=count {
            let tau = a + (b - a) * k as f64 / (count + 1) as f64;
            graph.push(Factor::InterpObstacle { segment: seg, tau })?;
            graph.push(Factor::InterpEnvironment { segment: seg, tau })?;
        }
    }

    graph.push(Factor::Prior {
        state: n,
        mean: init[n].0.iter().copied().collect(),
        sigma_pos: params.prior_sigma_pos,
        sigma_vel: params.prior_sigma_vel,
    })?;
    Ok(graph)
}
