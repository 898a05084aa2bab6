//! Levenberg-Marquardt over stacked support states.

use nalgebra::{Cholesky, DMatrix, DVector, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::PlannerState;

/// Whitened residual of one factor with its Jacobian blocks, keyed by the
/// support-state index each block multiplies.
#[derive(Debug, Clone)]
pub struct Linearized {
    pub residual: DVector<f64>,
    pub blocks: Vec<(usize, DMatrix<f64>)>,
}

/// A sum-of-squares objective over a sequence of equally sized states.
pub trait LeastSquaresProblem {
    fn state_count(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// `1/2 sum ||r||^2`.
    fn cost(&self, states: &[PlannerState]) -> f64;
    fn linearize(&self, states: &[PlannerState]) -> Vec<Linearized>;

    /// True when every factor touches at most two consecutive states, which
    /// makes the normal matrix block-tridiagonal. Otherwise its bandwidth is
    /// measured every iteration.
    fn neighbours_only(&self) -> bool {
        false
    }

    /// Adds `J^T J` and `J^T r` at `states` into `hessian` and `gradient`.
    /// The default assembles them from [`LeastSquaresProblem::linearize`].
    fn accumulate_normal_equations(
        &self,
        states: &[PlannerState],
        hessian: &mut DMatrix<f64>,
        gradient: &mut DVector<f64>,
    ) {
        assemble_normal_equations(&self.linearize(states), self.state_dim(), hessian, gradient);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmSettings {
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub max_iterations: usize,
    /// Stop once the cost itself falls below this value.
    pub absolute_tolerance: f64,
    /// Stop once an accepted step improves the cost by less than this fraction.
    pub relative_tolerance: f64,
    /// Damping ceiling; reaching it without an improving step ends the solve.
    pub max_damping: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings {
            initial_damping: 1e-4,
            damping_up: 10.0,
            damping_down: 10.0,
            max_iterations: 100,
            absolute_tolerance: 1e-18,
            relative_tolerance: 1e-6,
            max_damping: 1e10,
        }
    }
}

impl LmSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_damping > 0.0) {
            return Err(Error::invalid("initial damping must be positive"));
        }
        if !(self.damping_up > 1.0 && self.damping_down > 1.0) {
            return Err(Error::invalid("damping multipliers must exceed 1"));
        }
        if !(self.absolute_tolerance > 0.0 && self.relative_tolerance > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if !(self.max_damping > self.initial_damping) {
            return Err(Error::invalid(
                "max damping must exceed the initial damping",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    AbsoluteTolerance,
    RelativeTolerance,
    MaxIterations,
    /// No damping level produced a cheaper iterate.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub states: Vec<PlannerState>,
    /// Cost at the start followed by the cost after every accepted step.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl LmOutcome {
    pub fn final_cost(&self) -> f64 {
        *self
            .cost_trace
            .last()
            .expect("trace holds the initial cost")
    }
}

/// Damped Gauss-Newton with a multiplicative damping schedule. Only steps
/// that strictly lower the cost are accepted.
pub fn lm_solve<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    initial: &[PlannerState],
    settings: &LmSettings,
) -> Result<LmOutcome> {
    settings.validate()?;
    let count = problem.state_count();
    let sd = problem.state_dim();
    if initial.len() != count || initial.iter().any(|s| s.0.len() != sd) {
        return Err(Error::invalid("initial states do not match the problem"));
    }
    if initial.iter().any(|s| s.0.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("initial states must be finite"));
    }
    let n = count * sd;
    let mut states = initial.to_vec();
    let mut cost = problem.cost(&states);
    let mut trace = vec![cost];
    let mut damping = settings.initial_damping;
    let mut iterations = 0;
    let mut hessian = DMatrix::zeros(n, n);
    let mut gradient = DVector::zeros(n);
    let mut factor = Vec::new();

    let termination = loop {
        if cost < settings.absolute_tolerance {
            break Termination::AbsoluteTolerance;
        }
        if iterations >= settings.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;

        hessian.fill(0.0);
        gradient.fill(0.0);
        problem.accumulate_normal_equations(&states, &mut hessian, &mut gradient);
        let tridiagonal = problem.neighbours_only();
        let bandwidth = if tridiagonal {
            2 * sd - 1
        } else {
            bandwidth(&hessian)
        };
        let rhs = -&gradient;
        let mut accepted = None;
        while accepted.is_none() {
            let step = if tridiagonal && sd == 4 {
                block_tridiagonal_solve4(&hessian, damping, &rhs)
            } else {
                banded_cholesky_solve(&hessian, damping, &rhs, bandwidth, &mut factor)
            };
            let Some(step) = step else {
                damping *= settings.damping_up;
                if damping > settings.max_damping {
                    return Err(Error::NumericConditioning {
                        reason: "damped normal equations stayed singular".into(),
                        last_iterate: Some(
                            states
                                .iter()
                                .map(|s| s.0.iter().copied().collect())
                                .collect(),
                        ),
                    });
                }
                continue;
            };
            let candidate: Vec<PlannerState> = states
                .iter()
                .enumerate()
                .map(|(k, s)| PlannerState(&s.0 + step.rows(k * sd, sd)))
                .collect();
            let new_cost = problem.cost(&candidate);
            if new_cost.is_finite() && new_cost < cost {
                accepted = Some((candidate, new_cost));
                damping = (damping / settings.damping_down).max(1e-15);
            } else {
                damping *= settings.damping_up;
                if damping > settings.max_damping {
                    break;
                }
            }
        }
        let Some((candidate, new_cost)) = accepted else {
            break Termination::Stalled;
        };
        let relative = (cost - new_cost) / cost;
        states = candidate;
        cost = new_cost;
        trace.push(cost);
        if relative < settings.relative_tolerance {
            break Termination::RelativeTolerance;
        }
    };

    Ok(LmOutcome {
        states,
        cost_trace: trace,
        iterations,
        termination,
    })
}

/// Adds the normal-equation contributions of linearized factors to
/// `hessian` and `gradient`, with `sd` variables per state.
pub fn assemble_normal_equations(
    factors: &[Linearized],
    sd: usize,
    hessian: &mut DMatrix<f64>,
    gradient: &mut DVector<f64>,
) {
    for f in factors {
        for (a, ja) in &f.blocks {
            let mut gs = gradient.rows_mut(a * sd, sd);
            gs += ja.tr_mul(&f.residual);
            for (b, jb) in &f.blocks {
                let mut hs = hessian.view_mut((a * sd, b * sd), (sd, sd));
                hs += ja.tr_mul(jb);
            }
        }
    }
}

/// Largest `|i - j|` over the non-zero entries of `m`.
fn bandwidth(m: &DMatrix<f64>) -> usize {
    let n = m.nrows();
    (0..n)
        .filter_map(|i| (i..n).rev().find(|&j| m[(i, j)] != 0.0).map(|j| j - i))
        .max()
        .unwrap_or(0)
}

/// Solves `(a + damping I) x = b` for symmetric block-tridiagonal `a` with
/// 4 x 4 blocks. `None` when the damped matrix is not positive definite.
fn block_tridiagonal_solve4(
    a: &DMatrix<f64>,
    damping: f64,
    b: &DVector<f64>,
) -> Option<DVector<f64>> {
    let count = b.len() / 4;
    let block = |i: usize, j: usize| -> Matrix4<f64> { a.fixed_view::<4, 4>(4 * i, 4 * j).into() };
    // Factor rows: L_ii and the sub-diagonal block C_i = A_{i,i-1} L_{i-1}^-T.
    let mut diag: Vec<Cholesky<f64, nalgebra::U4>> = Vec::with_capacity(count);
    let mut sub: Vec<Matrix4<f64>> = Vec::with_capacity(count);
    for i in 0..count {
        let mut d = block(i, i) + Matrix4::identity() * damping;
        let c = if i == 0 {
            Matrix4::zeros()
        } else {
            let ct = diag[i - 1].l_dirty().solve_lower_triangular(&block(i - 1, i))?;
            d -= ct.transpose() * ct;
            ct.transpose()
        };
        diag.push(Cholesky::new(d)?);
        sub.push(c);
    }
    let mut y: Vec<Vector4<f64>> = Vec::with_capacity(count);
    for i in 0..count {
        let mut r: Vector4<f64> = b.fixed_rows::<4>(4 * i).into();
        if i > 0 {
            r -= sub[i] * y[i - 1];
        }
        y.push(diag[i].l_dirty().solve_lower_triangular(&r)?);
    }
    let mut x = DVector::zeros(b.len());
    let mut next = Vector4::zeros();
    for i in (0..count).rev() {
        let mut r = y[i];
        if i + 1 < count {
            r -= sub[i + 1].transpose() * next;
        }
        next = diag[i].l_dirty().tr_solve_lower_triangular(&r)?;
        x.fixed_rows_mut::<4>(4 * i).copy_from(&next);
    }
    Some(x)
}

/// Solves `(a + damping I) x = b` for symmetric `a` whose non-zeros lie
/// within `bw` of the diagonal. `None` when the damped matrix is not
/// positive definite. `l` is scratch space for the factor.
fn banded_cholesky_solve(
    a: &DMatrix<f64>,
    damping: f64,
    b: &DVector<f64>,
    bw: usize,
    l: &mut Vec<f64>,
) -> Option<DVector<f64>> {
    let n = b.len();
    // Row-major lower band: row i holds columns i-bw ..= i at offsets 0 ..= bw.
    let w = bw + 1;
    l.clear();
    l.resize(n * w, 0.0);
    let a = a.as_slice();
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        for j in lo..=i {
            // Column-major storage: a[(i, j)] = a[j * n + i].
            let k0 = lo.max(j.saturating_sub(bw));
            let ri = &l[i * w + k0 + bw - i..i * w + j + bw - i];
            let rj = &l[j * w + k0 + bw - j..j * w + bw];
            let mut sum = a[j * n + i] - ri.iter().zip(rj).map(|(p, q)| p * q).sum::<f64>();
            if i == j {
                sum += damping;
                if !(sum > 0.0) {
                    return None;
                }
                l[i * w + bw] = sum.sqrt();
            } else {
                l[i * w + j + bw - i] = sum / l[j * w + bw];
            }
        }
    }
    let mut x = b.clone();
    let xs = x.as_mut_slice();
    for i in 0..n {
        let mut v = xs[i];
        for k in i.saturating_sub(bw)..i {
            v -= l[i * w + k + bw - i] * xs[k];
        }
        xs[i] = v / l[i * w + bw];
    }
    for i in (0..n).rev() {
        let mut v = xs[i];
        for k in i + 1..(i + w).min(n) {
            v -= l[k * w + i + bw - k] * xs[k];
        }
        xs[i] = v / l[i * w + bw];
    }
    Some(x)
}
