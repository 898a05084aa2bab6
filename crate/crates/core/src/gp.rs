//! Constant-velocity LTV-SDE prior.
//!
//! States stack position and velocity, `theta = (r, v)`, for a workspace of
//! dimension `D`. With zero control input the prior mean follows
//! zero-acceleration motion, so the transition matrix and the process-noise
//! covariance have the double-integrator closed forms below.

use nalgebra::{Cholesky, DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stacked position and velocity at one timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerState(pub DVector<f64>);

impl PlannerState {
    pub fn new(position: &[f64], velocity: &[f64]) -> Result<Self> {
        if position.len() != velocity.len() || position.is_empty() {
            return Err(Error::invalid(
                "position and velocity must share a non-zero dimension",
            ));
        }
        let v = DVector::from_iterator(
            position.len() * 2,
            position.iter().chain(velocity.iter()).copied(),
        );
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("state entries must be finite"));
        }
        Ok(PlannerState(v))
    }

    pub fn from_vector(v: DVector<f64>) -> Self {
        PlannerState(v)
    }

    /// Workspace dimension `D` (half the stacked length).
    pub fn dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn position(&self) -> &[f64] {
        &self.0.as_slice()[..self.dim()]
    }

    pub fn velocity(&self) -> &[f64] {
        &self.0.as_slice()[self.dim()..]
    }

    /// First two position components, the planar footprint used by the fields.
    pub fn xy(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Prior hyper-parameters and the support-state time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    dim: usize,
    qc: DMatrix<f64>,
    timestamps: Vec<f64>,
}

/// Serializable description of a [`GpModel`] with isotropic `Qc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpModelSpec {
    pub dim: usize,
    pub qc: f64,
    pub total_time: f64,
    pub segments: usize,
}

impl GpModel {
    /// Uniform support times `t_i = i * total_time / segments`, `Qc = qc * I`.
    pub fn uniform(dim: usize, qc: f64, total_time: f64, segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::invalid("at least one segment is required"));
        }
        if !(total_time > 0.0) {
            return Err(Error::invalid("total time must be positive"));
        }
        let timestamps = (0..=segments)
            .map(|i| total_time * i as f64 / segments as f64)
            .collect();
        Self::with_timestamps(dim, DMatrix::identity(dim, dim) * qc, timestamps)
    }

    pub fn with_timestamps(dim: usize, qc: DMatrix<f64>, timestamps: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("workspace dimension must be positive"));
        }
        if qc.nrows() != dim || qc.ncols() != dim {
            return Err(Error::invalid("Qc must be D x D"));
        }
        if (&qc - qc.transpose()).abs().max() > 1e-12 * qc.abs().max().max(1.0) {
            return Err(Error::invalid("Qc must be symmetric"));
        }
        if Cholesky::new(qc.clone()).is_none() {
            return Err(Error::invalid("Qc must be positive definite"));
        }
        if timestamps.len() < 2 {
            return Err(Error::invalid("at least two support times are required"));
        }
        if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("timestamps must be strictly increasing"));
        }
        Ok(GpModel {
            dim,
            qc,
            timestamps,
        })
    }

    pub fn from_spec(spec: &GpModelSpec) -> Result<Self> {
        Self::uniform(spec.dim, spec.qc, spec.total_time, spec.segments)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state_dim(&self) -> usize {
        2 * self.dim
    }

    pub fn qc(&self) -> &DMatrix<f64> {
        &self.qc
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn segments(&self) -> usize {
        self.timestamps.len() - 1
    }

    pub fn support_count(&self) -> usize {
        self.timestamps.len()
    }

    pub fn total_time(&self) -> f64 {
        self.timestamps[self.timestamps.len() - 1] - self.timestamps[0]
    }

    pub fn segment_bounds(&self, segment: usize) -> (f64, f64) {
        (self.timestamps[segment], self.timestamps[segment + 1])
    }

    /// Index of the segment containing time `t`.
    pub fn segment_of(&self, t: f64) -> Option<usize> {
        let n = self.segments();
        if t < self.timestamps[0] || t > self.timestamps[n] {
            return None;
        }
        Some(
            self.timestamps
                .partition_point(|&ti| ti <= t)
                .saturating_sub(1)
                .min(n - 1),
        )
    }

    pub fn segment_prior(&self, segment: usize) -> Result<SegmentPrior> {
        let (a, b) = self.segment_bounds(segment);
        SegmentPrior::new(self.dim, &self.qc, a, b)
    }

    /// Constant-velocity straight line from `start` to `goal` sampled at the
    /// support times.
    pub fn straight_line(&self, start: &[f64], goal: &[f64]) -> Result<Vec<PlannerState>> {
        if start.len() != self.dim || goal.len() != self.dim {
            return Err(Error::invalid("start/goal dimension mismatch"));
        }
        let t0 = self.timestamps[0];
        let total = self.total_time();
        let vel: Vec<f64> = start
            .iter()
            .zip(goal)
            .map(|(s, g)| (g - s) / total)
            .collect();
        self.timestamps
            .iter()
            .map(|&t| {
                let frac = (t - t0) / total;
                let pos: Vec<f64> = start
                    .iter()
                    .zip(goal)
                    .map(|(s, g)| s + (g - s) * frac)
                    .collect();
                PlannerState::new(&pos, &vel)
            })
            .collect()
    }
}

/// State-transition matrix `Phi(t, s) = [[I, (t-s) I], [0, I]]`.
pub fn phi(dim: usize, t: f64, s: f64) -> Result<DMatrix<f64>> {
    if t < s {
        return Err(Error::InvalidInterval { t, s });
    }
    Ok(phi_unchecked(dim, t - s))
}

fn phi_unchecked(dim: usize, dt: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * dim, 2 * dim);
    for k in 0..dim {
        m[(k, dim + k)] = dt;
    }
    m
}

/// Process-noise covariance accumulated between `t_a` and `t_b`.
pub fn q_between(t_a: f64, t_b: f64, qc: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !(t_b > t_a) {
        return Err(Error::InvalidInterval { t: t_b, s: t_a });
    }
    Ok(q_unchecked(t_b - t_a, qc))
}

fn q_unchecked(dt: f64, qc: &DMatrix<f64>) -> DMatrix<f64> {
    let d = qc.nrows();
    let mut q = DMatrix::zeros(2 * d, 2 * d);
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    for i in 0..d {
        for j in 0..d {
            let c = qc[(i, j)];
            q[(i, j)] = dt3 / 3.0 * c;
            q[(i, d + j)] = dt2 / 2.0 * c;
            q[(d + i, j)] = dt2 / 2.0 * c;
            q[(d + i, d + j)] = dt * c;
        }
    }
    q
}

/// Per-segment quantities for the whitened GP prior error.
#[derive(Debug, Clone)]
pub struct SegmentPrior {
    pub phi: DMatrix<f64>,
    /// Inverse lower Cholesky factor of `Q_{i,i+1}`.
    pub whiten: DMatrix<f64>,
    /// `whiten * phi`, the Jacobian with respect to the earlier state.
    pub whitened_phi: DMatrix<f64>,
}

impl SegmentPrior {
    pub fn new(dim: usize, qc: &DMatrix<f64>, t_a: f64, t_b: f64) -> Result<Self> {
        let q = q_between(t_a, t_b, qc)?;
        let chol = Cholesky::new(q)
            .ok_or_else(|| Error::conditioning("segment covariance is not positive definite"))?;
        let n = 2 * dim;
        let whiten = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| Error::conditioning("singular Cholesky factor"))?;
        let phi = phi_unchecked(dim, t_b - t_a);
        let whitened_phi = &whiten * &phi;
        Ok(SegmentPrior {
            phi,
            whiten,
            whitened_phi,
        })
    }
}

/// Whitened GP prior residual with its two Jacobian blocks.
#[derive(Debug, Clone)]
pub struct PriorError {
    pub residual: DVector<f64>,
    pub jac_first: DMatrix<f64>,
    pub jac_second: DMatrix<f64>,
}

/// `e = W (Phi theta_i - theta_{i+1})` with `W^T W = Q^{-1}`.
pub fn gp_prior_error(
    first: &PlannerState,
    second: &PlannerState,
    prior: &SegmentPrior,
) -> PriorError {
    let raw = &prior.phi * &first.0 - &second.0;
    PriorError {
        residual: &prior.whiten * raw,
        jac_first: prior.whitened_phi.clone(),
        jac_second: -&prior.whiten,
    }
}

/// Interpolation coefficients `Lambda(tau)`, `Psi(tau)` for one segment.
#[derive(Debug, Clone)]
pub struct InterpolationCoeffs {
    pub lambda: DMatrix<f64>,
    pub psi: DMatrix<f64>,
}

impl InterpolationCoeffs {
    /// Coefficients at absolute time `tau` inside `[t_a, t_b]`.
    ///
    /// With a constant `Qc` every covariance is `K(dt) (x) Qc` for a 2 x 2
    /// time kernel `K`, so `Qc` cancels and both coefficients are 2 x 2
    /// matrices expanded blockwise over the identity.
    pub fn new(dim: usize, t_a: f64, t_b: f64, tau: f64) -> Result<Self> {
        if !(t_b > t_a) {
            return Err(Error::InvalidInterval { t: t_b, s: t_a });
        }
        if !(tau >= t_a && tau <= t_b) {
            return Err(Error::invalid(format!(
                "tau {tau} outside segment [{t_a}, {t_b}]"
            )));
        }
        let n = 2 * dim;
        if tau == t_a {
            return Ok(InterpolationCoeffs {
                lambda: DMatrix::identity(n, n),
                psi: DMatrix::zeros(n, n),
            });
        }
        if tau == t_b {
            return Ok(InterpolationCoeffs {
                lambda: DMatrix::zeros(n, n),
                psi: DMatrix::identity(n, n),
            });
        }
        let kernel = |dt: f64| Matrix2::new(dt.powi(3) / 3.0, dt * dt / 2.0, dt * dt / 2.0, dt);
        let transition = |dt: f64| Matrix2::new(1.0, dt, 0.0, 1.0);
        let total = t_b - t_a;
        let k_inv = kernel(total)
            .try_inverse()
            .ok_or_else(|| Error::conditioning("segment covariance is not invertible"))?;
        // Psi = Q_tau Phi(b,tau)^T Q^{-1}, Lambda = Phi(tau,a) - Psi Phi(b,a).
        let psi = kernel(tau - t_a) * transition(t_b - tau).transpose() * k_inv;
        let lambda = transition(tau - t_a) - psi * transition(total);
        let expand = |m: Matrix2<f64>| {
            let mut out = DMatrix::zeros(n, n);
            for (bi, bj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                for k in 0..dim {
                    out[(bi * dim + k, bj * dim + k)] = m[(bi, bj)];
                }
            }
            out
        };
        Ok(InterpolationCoeffs {
            lambda: expand(lambda),
            psi: expand(psi),
        })
    }

    pub fn apply(&self, first: &PlannerState, second: &PlannerState) -> PlannerState {
        PlannerState(&self.lambda * &first.0 + &self.psi * &second.0)
    }
}

/// State at `tau` between two support states of `segment`.
pub fn interpolate(
    first: &PlannerState,
    second: &PlannerState,
    tau: f64,
    model: &GpModel,
    segment: usize,
) -> Result<(PlannerState, InterpolationCoeffs)> {
    if segment >= model.segments() {
        return Err(Error::invalid(format!("segment {segment} out of range")));
    }
    let (a, b) = model.segment_bounds(segment);
    let coeffs = InterpolationCoeffs::new(model.dim(), a, b, tau)?;
    Ok((coeffs.apply(first, second), coeffs))
}
