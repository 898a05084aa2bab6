//! Whitened residuals and Jacobians of every factor kind.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factors::{Factor, FactorGraph, RobotBodyModel};
use crate::fields::{EnvironmentField, SignedDistanceField};
use crate::gp::{gp_prior_error, InterpolationCoeffs, PlannerState, SegmentPrior};
use crate::optimizer::{LeastSquaresProblem, Linearized};

/// Residual vector (one entry per body circle) and its Jacobian with respect
/// to the full stacked state.
#[derive(Debug, Clone)]
pub struct StateResidual {
    pub residual: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

/// Hinge obstacle cost per body circle,
/// `max(0, epsilon + radius - sdf(center)) / sigma_obs`.
pub fn obstacle_error(
    state: &PlannerState,
    sdf: &SignedDistanceField,
    body: &RobotBodyModel,
    epsilon: f64,
    sigma_obs: f64,
) -> StateResidual {
    let m = body.len();
    let mut residual = DVector::zeros(m);
    let mut jacobian = DMatrix::zeros(m, state.0.len());
    for (j, (center, radius)) in body.centers(state.xy()).enumerate() {
        let s = sdf.sample(center);
        let hinge = epsilon + radius - s.value;
        if hinge > 0.0 {
            residual[j] = hinge / sigma_obs;
            jacobian[(j, 0)] = -s.gradient[0] / sigma_obs;
            jacobian[(j, 1)] = -s.gradient[1] / sigma_obs;
        }
    }
    StateResidual { residual, jacobian }
}

/// Energy-rate cost per body circle, `e(center) / sigma_env`.
pub fn environment_error(
    state: &PlannerState,
    env: &EnvironmentField,
    body: &RobotBodyModel,
    sigma_env: f64,
) -> StateResidual {
    let m = body.len();
    let mut residual = DVector::zeros(m);
    let mut jacobian = DMatrix::zeros(m, state.0.len());
    for (j, (center, _)) in body.centers(state.xy()).enumerate() {
        let s = env.sample_energy(center);
        residual[j] = s.value / sigma_env;
        jacobian[(j, 0)] = s.gradient[0] / sigma_env;
        jacobian[(j, 1)] = s.gradient[1] / sigma_env;
    }
    StateResidual { residual, jacobian }
}

/// A factor graph bound to the fields it is evaluated against, with the
/// per-segment prior and interpolation coefficients precomputed.
pub struct GraphProblem<'a> {
    graph: &'a FactorGraph,
    sdf: &'a SignedDistanceField,
    env: &'a EnvironmentField,
    body: &'a RobotBodyModel,
    segment_priors: Vec<SegmentPrior>,
    prior_blocks: Vec<PriorBlocks>,
    coeffs: Vec<Option<InterpolationCoeffs>>,
}

/// Constant normal-equation pieces of one GP prior factor over the stacked
/// pair `[x_i; x_{i+1}]`.
struct PriorBlocks {
    /// `Q^{-1}`.
    info: DMatrix<f64>,
    /// `J^T J` with `J = W [Phi, -I]`.
    joint: DMatrix<f64>,
    /// `J^T W`, mapping the raw error `Phi x_i - x_{i+1}` to `J^T r`.
    gradient_map: DMatrix<f64>,
}

impl PriorBlocks {
    fn new(prior: &SegmentPrior) -> Self {
        let n = prior.phi.nrows();
        let mut jac = DMatrix::zeros(n, 2 * n);
        jac.view_mut((0, 0), (n, n)).copy_from(&prior.whitened_phi);
        jac.view_mut((0, n), (n, n)).copy_from(&(-&prior.whiten));
        PriorBlocks {
            info: prior.whiten.tr_mul(&prior.whiten),
            joint: jac.tr_mul(&jac),
            gradient_map: jac.tr_mul(&prior.whiten),
        }
    }
}

impl<'a> GraphProblem<'a> {
    pub fn new(
        graph: &'a FactorGraph,
        sdf: &'a SignedDistanceField,
        env: &'a EnvironmentField,
        body: &'a RobotBodyModel,
    ) -> Result<Self> {
        let model = graph.model();
        if model.dim() < 2 {
            return Err(Error::invalid("field factors need a planar workspace"));
        }
        let segment_priors = (0..model.segments())
            .map(|s| model.segment_prior(s))
            .collect::<Result<Vec<_>>>()?;
        let prior_blocks = segment_priors.iter().map(PriorBlocks::new).collect();
        let coeffs = graph
            .factors()
            .iter()
            .map(|f| match *f {
                Factor::InterpObstacle { segment, tau }
                | Factor::InterpEnvironment { segment, tau } => {
                    let (a, b) = model.segment_bounds(segment);
                    InterpolationCoeffs::new(model.dim(), a, b, tau).map(Some)
                }
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphProblem {
            graph,
            sdf,
            env,
            body,
            segment_priors,
            prior_blocks,
            coeffs,
        })
    }

    pub fn graph(&self) -> &FactorGraph {
        self.graph
    }

    fn check_arity(&self, states: &[PlannerState]) -> Result<()> {
        if states.len() != self.graph.support_count() {
            return Err(Error::invalid(format!(
                "graph has {} support states, got {}",
                self.graph.support_count(),
                states.len()
            )));
        }
        let sd = self.graph.model().state_dim();
        if states.iter().any(|s| s.0.len() != sd) {
            return Err(Error::invalid("state dimension mismatch"));
        }
        Ok(())
    }

    /// Residual and Jacobian blocks of factor `index`.
    pub fn linearize_factor(&self, index: usize, states: &[PlannerState]) -> Linearized {
        let params = self.graph.params();
        let factor = &self.graph.factors()[index];
        match factor {
            Factor::Prior {
                state,
                mean,
                sigma_pos,
                sigma_vel,
            } => {
                let s = &states[*state].0;
                let n = s.len();
                let d = n / 2;
                let inv: Vec<f64> = (0..n)
                    .map(|k| {
                        if k < d {
                            1.0 / sigma_pos
                        } else {
                            1.0 / sigma_vel
                        }
                    })
                    .collect();
                let residual = DVector::from_iterator(n, (0..n).map(|k| (s[k] - mean[k]) * inv[k]));
                let jac = DMatrix::from_diagonal(&DVector::from_vec(inv));
                Linearized {
                    residual,
                    blocks: vec![(*state, jac)],
                }
            }
            Factor::GpPrior { segment } => {
                let e = gp_prior_error(
                    &states[*segment],
                    &states[segment + 1],
                    &self.segment_priors[*segment],
                );
                Linearized {
                    residual: e.residual,
                    blocks: vec![(*segment, e.jac_first), (segment + 1, e.jac_second)],
                }
            }
            Factor::Obstacle { state } => {
                let r = obstacle_error(
                    &states[*state],
                    self.sdf,
                    self.body,
                    params.epsilon,
                    params.sigma_obs,
                );
                Linearized {
                    residual: r.residual,
                    blocks: vec![(*state, r.jacobian)],
                }
            }
            Factor::Environment { state } => {
                let r = environment_error(&states[*state], self.env, self.body, params.sigma_env);
                Linearized {
                    residual: r.residual,
                    blocks: vec![(*state, r.jacobian)],
                }
            }
            Factor::InterpObstacle { segment, .. } | Factor::InterpEnvironment { segment, .. } => {
                let c = self.coeffs[index]
                    .as_ref()
                    .expect("interpolated factor has coefficients");
                let interp = c.apply(&states[*segment], &states[segment + 1]);
                let r = if matches!(factor, Factor::InterpObstacle { .. }) {
                    obstacle_error(
                        &interp,
                        self.sdf,
                        self.body,
                        params.epsilon,
                        params.sigma_obs,
                    )
                } else {
                    environment_error(&interp, self.env, self.body, params.sigma_env)
                };
                // Only the two planar position columns of the inner Jacobian
                // are non-zero.
                let jp = r.jacobian.columns(0, 2);
                let first = jp * c.lambda.rows(0, 2);
                let second = jp * c.psi.rows(0, 2);
                Linearized {
                    residual: r.residual,
                    blocks: vec![(*segment, first), (segment + 1, second)],
                }
            }
        }
    }

    /// Half squared norm of factor `index`'s whitened residual.
    pub fn factor_cost(&self, index: usize, states: &[PlannerState]) -> f64 {
        0.5 * self.linearize_factor(index, states).residual.norm_squared()
    }

    /// `1/2 sum ||r||^2` over every factor.
    pub fn objective(&self, states: &[PlannerState]) -> Result<f64> {
        self.check_arity(states)?;
        Ok(self.cost(states))
    }
}

impl LeastSquaresProblem for GraphProblem<'_> {
    fn state_count(&self) -> usize {
        self.graph.support_count()
    }

    fn state_dim(&self) -> usize {
        self.graph.model().state_dim()
    }

    fn cost(&self, states: &[PlannerState]) -> f64 {
        self.total_cost(states)
    }

    fn neighbours_only(&self) -> bool {
        true
    }

    fn linearize(&self, states: &[PlannerState]) -> Vec<Linearized> {
        (0..self.graph.factors().len())
            .map(|i| self.linearize_factor(i, states))
            .collect()
    }

    // Exploits the structure of each factor: priors are diagonal, field
    // factors touch only the planar position columns, and the GP prior
    // blocks are constant.
    fn accumulate_normal_equations(
        &self,
        states: &[PlannerState],
        h: &mut DMatrix<f64>,
        g: &mut DVector<f64>,
    ) {
        let sd = self.state_dim();
        let params = self.graph.params();
        let mut raw = DVector::zeros(sd);
        let mut jab = DVector::zeros(2 * sd);
        // Calm water has identically zero environment residuals.
        let calm = self.env.is_calm();
        for (index, factor) in self.graph.factors().iter().enumerate() {
            match factor {
                Factor::Prior {
                    state,
                    mean,
                    sigma_pos,
                    sigma_vel,
                } => {
                    let s = &states[*state].0;
                    for k in 0..sd {
                        let w = if k < sd / 2 { *sigma_pos } else { *sigma_vel }.powi(-2);
                        let i = state * sd + k;
                        h[(i, i)] += w;
                        g[i] += w * (s[k] - mean[k]);
                    }
                }
                Factor::GpPrior { segment } => {
                    let blocks = &self.prior_blocks[*segment];
                    let prior = &self.segment_priors[*segment];
                    prior_raw(
                        prior,
                        &states[*segment].0,
                        &states[segment + 1].0,
                        raw.as_mut_slice(),
                    );
                    let a = segment * sd;
                    let mut hs = h.view_mut((a, a), (2 * sd, 2 * sd));
                    hs += &blocks.joint;
                    g.rows_mut(a, 2 * sd)
                        .gemv(1.0, &blocks.gradient_map, &raw, 1.0);
                }
                Factor::Environment { .. } | Factor::InterpEnvironment { .. } if calm => {}
                Factor::Obstacle { state } | Factor::Environment { state } => {
                    let base = state * sd;
                    let p = states[*state].xy();
                    let obstacle = matches!(factor, Factor::Obstacle { .. });
                    for (center, radius) in self.body.centers(p) {
                        let Some((r, j)) = self.field_residual(obstacle, center, radius, params)
                        else {
                            continue;
                        };
                        for u in 0..2 {
                            g[base + u] += j[u] * r;
                            for v in 0..2 {
                                h[(base + u, base + v)] += j[u] * j[v];
                            }
                        }
                    }
                }
                Factor::InterpObstacle { segment, .. }
                | Factor::InterpEnvironment { segment, .. } => {
                    let c = self.coeffs[index]
                        .as_ref()
                        .expect("interpolated factor has coefficients");
                    let p = interp_position(c, &states[*segment].0, &states[segment + 1].0);
                    let obstacle = matches!(factor, Factor::InterpObstacle { .. });
                    let a = segment * sd;
                    for (center, radius) in self.body.centers(p) {
                        let Some((r, j)) = self.field_residual(obstacle, center, radius, params)
                        else {
                            continue;
                        };
                        for k in 0..sd {
                            jab[k] = j[0] * c.lambda[(0, k)] + j[1] * c.lambda[(1, k)];
                            jab[sd + k] = j[0] * c.psi[(0, k)] + j[1] * c.psi[(1, k)];
                        }
                        h.view_mut((a, a), (2 * sd, 2 * sd))
                            .ger(1.0, &jab, &jab, 1.0);
                        g.rows_mut(a, 2 * sd).axpy(r, &jab, 1.0);
                    }
                }
            }
        }
    }
}

impl GraphProblem<'_> {
    /// Whitened residual of one body circle and its gradient with respect to
    /// the circle center, or `None` for an inactive hinge.
    fn field_residual(
        &self,
        obstacle: bool,
        center: [f64; 2],
        radius: f64,
        params: &crate::factors::GraphParams,
    ) -> Option<(f64, [f64; 2])> {
        if obstacle {
            let s = self.sdf.sample(center);
            let hinge = params.epsilon + radius - s.value;
            (hinge > 0.0).then(|| {
                let k = 1.0 / params.sigma_obs;
                (hinge * k, [-s.gradient[0] * k, -s.gradient[1] * k])
            })
        } else {
            let s = self.env.sample_energy(center);
            let k = 1.0 / params.sigma_env;
            Some((s.value * k, [s.gradient[0] * k, s.gradient[1] * k]))
        }
    }

    // Half squared residual norm summed over all factors, evaluated without
    // building Jacobians.
    fn total_cost(&self, states: &[PlannerState]) -> f64 {
        let params = self.graph.params();
        let mut raw = vec![0.0; self.state_dim()];
        let mut total = 0.0;
        let calm = self.env.is_calm();
        for (index, factor) in self.graph.factors().iter().enumerate() {
            let (p, obstacle) = match factor {
                Factor::Environment { .. } | Factor::InterpEnvironment { .. } if calm => continue,
                Factor::Prior {
                    state,
                    mean,
                    sigma_pos,
                    sigma_vel,
                } => {
                    let s = &states[*state].0;
                    let d = s.len() / 2;
                    for k in 0..s.len() {
                        let sigma = if k < d { sigma_pos } else { sigma_vel };
                        total += 0.5 * ((s[k] - mean[k]) / sigma).powi(2);
                    }
                    continue;
                }
                Factor::GpPrior { segment } => {
                    let sp = &self.segment_priors[*segment];
                    prior_raw(sp, &states[*segment].0, &states[segment + 1].0, &mut raw);
                    total += 0.5 * quad_form(&self.prior_blocks[*segment].info, &raw);
                    continue;
                }
                Factor::Obstacle { state } => (states[*state].xy(), true),
                Factor::Environment { state } => (states[*state].xy(), false),
                Factor::InterpObstacle { segment, .. }
                | Factor::InterpEnvironment { segment, .. } => {
                    let c = self.coeffs[index]
                        .as_ref()
                        .expect("interpolated factor has coefficients");
                    let p = interp_position(c, &states[*segment].0, &states[segment + 1].0);
                    (p, matches!(factor, Factor::InterpObstacle { .. }))
                }
            };
            for (center, radius) in self.body.centers(p) {
                let r = self
                    .field_residual(obstacle, center, radius, params)
                    .map_or(0.0, |(r, _)| r);
                total += 0.5 * r * r;
            }
        }
        total
    }
}

fn prior_raw(prior: &SegmentPrior, a: &DVector<f64>, b: &DVector<f64>, out: &mut [f64]) {
    // The transition is a 2 x 2 kernel expanded over the identity, so row
    // `i` only touches the position and velocity entries of axis `i % d`.
    let d = a.len() / 2;
    for (i, o) in out.iter_mut().enumerate() {
        let (p, v) = (i % d, i % d + d);
        *o = prior.phi[(i, p)] * a[p] + prior.phi[(i, v)] * a[v] - b[i];
    }
}

fn quad_form(m: &DMatrix<f64>, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            total += x[i] * m[(i, j)] * x[j];
        }
    }
    total
}

fn interp_position(c: &InterpolationCoeffs, a: &DVector<f64>, b: &DVector<f64>) -> [f64; 2] {
    let mut p = [0.0; 2];
    let d = a.len() / 2;
    for (r, out) in p.iter_mut().enumerate() {
        for k in [r, r + d] {
            *out += c.lambda[(r, k)] * a[k] + c.psi[(r, k)] * b[k];
        }
    }
    p
}

/// Objective of `graph` at `states`: half the squared norm of all whitened
/// residuals, i.e. the negative log posterior up to a constant.
pub fn graph_objective(
    graph: &FactorGraph,
    sdf: &SignedDistanceField,
    env: &EnvironmentField,
    body: &RobotBodyModel,
    states: &[PlannerState],
) -> Result<f64> {
    GraphProblem::new(graph, sdf, env, body)?.objective(states)
}
