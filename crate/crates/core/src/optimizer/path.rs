use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factors::RobotBodyModel;
use crate::fields::SignedDistanceField;
use crate::gp::{GpModel, InterpolationCoeffs, PlannerState};

/// A timestamped state on the densified trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseState {
    pub t: f64,
    pub state: Vec<f64>,
}

impl DenseState {
    pub fn xy(&self) -> [f64; 2] {
        [self.state[0], self.state[1]]
    }
}

/// Interpolates `resolution` evenly spaced states per segment (the segment
/// start included) and appends the final support state.
pub fn densify(
    support: &[PlannerState],
    model: &GpModel,
    resolution: usize,
) -> Result<Vec<DenseState>> {
    if resolution == 0 {
        return Err(Error::invalid("resolution must be at least 1"));
    }
    if support.len() != model.support_count() {
        return Err(Error::invalid("support states do not match the model"));
    }
    let mut out = Vec::with_capacity(model.segments() * resolution + 1);
    // Coefficients depend only on the segment duration and the offset into
    // it, so segments of equal length share them.
    let mut cache: Option<(f64, Vec<InterpolationCoeffs>)> = None;
    for seg in 0..model.segments() {
        let (a, b) = model.segment_bounds(seg);
        let duration = b - a;
        if cache.as_ref().is_none_or(|(d, _)| *d != duration) {
            let coeffs = (1..resolution)
                .map(|k| {
                    let offset = duration * k as f64 / resolution as f64;
                    InterpolationCoeffs::new(model.dim(), 0.0, duration, offset)
                })
                .collect::<Result<Vec<_>>>()?;
            cache = Some((duration, coeffs));
        }
        let coeffs = &cache.as_ref().expect("filled above").1;
        out.push(DenseState {
            t: a,
            state: support[seg].0.iter().copied().collect(),
        });
        for (k, c) in coeffs.iter().enumerate() {
            out.push(DenseState {
                t: a + duration * (k + 1) as f64 / resolution as f64,
                state: c
                    .apply(&support[seg], &support[seg + 1])
                    .0
                    .iter()
                    .copied()
                    .collect(),
            });
        }
    }
    let last = support.last().expect("model has support states");
    out.push(DenseState {
        t: model.timestamps()[model.segments()],
        state: last.0.iter().copied().collect(),
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub collision_free: bool,
    /// Minimum over the path and body circles of `sdf(center) - radius`.
    pub min_clearance: f64,
}

/// A path is collision free when every body circle at every point keeps a
/// positive signed distance beyond its radius.
pub fn collision_check(
    path: &[[f64; 2]],
    sdf: &SignedDistanceField,
    body: &RobotBodyModel,
) -> Result<CollisionReport> {
    if path.is_empty() {
        return Err(Error::invalid("cannot check an empty path"));
    }
    let mut min_clearance = f64::INFINITY;
    for &p in path {
        for (center, radius) in body.centers(p) {
            // Points off the raster count as colliding.
            let clearance = if sdf.shape().contains(center) {
                sdf.sample(center).value - radius
            } else {
                f64::NEG_INFINITY
            };
            min_clearance = min_clearance.min(clearance);
        }
    }
    Ok(CollisionReport {
        collision_free: min_clearance > 0.0,
        min_clearance,
    })
}
