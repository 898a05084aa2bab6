//! Raster workspace descriptions: occupancy, signed distance and ambient
//! current / energy-rate fields.
//!
//! All rasters sample at cell centers; cell `(0, 0)` sits at the grid origin.
//! Fields are immutable once built and may be shared across threads.

mod env;
mod grid;
mod raster;
mod sdf;

pub use env::{energy_rate_from_current, synth_vortex_field, EnvironmentField, VortexSpec};
pub use grid::{GridShape, OccupancyGrid};
pub use raster::{FieldSample, ScalarField};
pub use sdf::{compute_sdf, SignedDistanceField};
