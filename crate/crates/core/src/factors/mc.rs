//! Monte-Carlo estimate of the obstacle fraction of a sampling region.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::OccupancyGrid;

/// Axis-aligned sampling box in world meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingRegion {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl SamplingRegion {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        let r = SamplingRegion { min, max };
        if !r.min.iter().chain(&r.max).all(|v| v.is_finite()) {
            return Err(Error::invalid("sampling region must be finite"));
        }
        if !(max[0] > min[0] && max[1] > min[1]) {
            return Err(Error::invalid(format!(
                "empty sampling region [{min:?}, {max:?}]"
            )));
        }
        Ok(r)
    }

    /// Whole raster extent of `grid`.
    pub fn of_grid(grid: &OccupancyGrid) -> Self {
        let (min, max) = grid.shape().extent();
        SamplingRegion { min, max }
    }

    /// Bounding box of two points grown by `margin` and clipped to the grid.
    pub fn around_segment(
        grid: &OccupancyGrid,
        a: [f64; 2],
        b: [f64; 2],
        margin: f64,
    ) -> Result<Self> {
        let (gmin, gmax) = grid.shape().extent();
        let min = [
            (a[0].min(b[0]) - margin).max(gmin[0]),
            (a[1].min(b[1]) - margin).max(gmin[1]),
        ];
        let max = [
            (a[0].max(b[0]) + margin).min(gmax[0]),
            (a[1].max(b[1]) + margin).min(gmax[1]),
        ];
        Self::new(min, max)
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Estimated fraction of the region inside obstacles.
    pub p_obs: f64,
    pub samples: usize,
    /// Samples that landed in free space.
    pub accepted: usize,
    pub seed: u64,
}

/// Draws `samples` uniform points in `region` and counts those landing in
/// free cells. The reported fraction is the rejected share,
/// `1 - accepted / samples`, so denser obstacles give larger values.
pub fn mc_estimate_obstacle_space(
    grid: &OccupancyGrid,
    region: &SamplingRegion,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let region = SamplingRegion::new(region.min, region.max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0usize;
    for _ in 0..samples {
        let p = [
            rng.random_range(region.min[0]..region.max[0]),
            rng.random_range(region.min[1]..region.max[1]),
        ];
        if !grid.is_occupied_at(p) {
            accepted += 1;
        }
    }
    Ok(McEstimate {
        p_obs: 1.0 - accepted as f64 / samples as f64,
        samples,
        accepted,
        seed,
    })
}

/// Stratified variant: the region is split into a near-square lattice of
/// strata and each sample is jittered inside its stratum. With one sample
/// per cell over the whole grid this is a full traversal and the estimate is
/// the exact obstacle fraction.
pub fn mc_estimate_stratified(
    grid: &OccupancyGrid,
    region: &SamplingRegion,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::invalid("at least one sample is required"));
    }
    let region = SamplingRegion::new(region.min, region.max)?;
    let w = region.max[0] - region.min[0];
    let h = region.max[1] - region.min[1];
    let nx = ((samples as f64 * w / h).sqrt().round() as usize).clamp(1, samples);
    let ny = (samples / nx).max(1);
    let strata = nx * ny;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = || {
        let u: f64 = rng.random();
        if u == 0.0 {
            0.5
        } else {
            u
        }
    };
    let mut accepted = 0usize;
    for i in 0..samples {
        let s = i % strata;
        let (sx, sy) = (s % nx, s / nx);
        let p = [
            region.min[0] + (sx as f64 + jitter()) * w / nx as f64,
            region.min[1] + (sy as f64 + jitter()) * h / ny as f64,
        ];
        if !grid.is_occupied_at(p) {
            accepted += 1;
        }
    }
    Ok(McEstimate {
        p_obs: 1.0 - accepted as f64 / samples as f64,
        samples,
        accepted,
        seed,
    })
}
