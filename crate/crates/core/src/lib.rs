//! Gaussian-process motion planning over obstacle and ambient-current fields.
//!
//! The crate is organised bottom-up:
//!
//! - [`fields`]: occupancy grids, exact signed distance fields, synthetic
//!   vortex currents and the derived energy-rate raster.
//! - [`gp`]: the constant-velocity GP prior (transition, covariance,
//!   whitened prior error and fast interpolation between support states).
//! - [`factors`]: factor definitions, the Monte-Carlo obstacle-space
//!   estimator and the stochastic factor-graph builder.
//! - [`optimizer`]: Levenberg-Marquardt over the factor graph and the
//!   replanning planner with length/collision acceptance.
//! - [`baselines`]: grid A*, RRT* and a scalar-cost fast-marching planner.
//! - [`usv`]: a kinematic catamaran, waypoint guidance, PID autopilot and
//!   mission logging.

// `!(x > 0.0)` rejects NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod factors;
pub mod fields;
pub mod geometry;
pub mod gp;
pub mod optimizer;
pub mod usv;

pub use error::{Error, Result};
pub use factors::{
    build_factor_graph, build_factor_graph_mc, mc_estimate_obstacle_space, BodyCircle, Factor,
    FactorGraph, FactorKind, GraphParams, InterpolationMode, McEstimate, RobotBodyModel,
};
pub use fields::{
    compute_sdf, synth_vortex_field, EnvironmentField, GridShape, OccupancyGrid, ScalarField,
    SignedDistanceField, VortexSpec,
};
pub use gp::{GpModel, PlannerState};
pub use optimizer::{
    collision_check, densify, lm_solve, mc_gpmp2_star, LmSettings, PlanResult, PlannerParams,
    PlanningFields,
};
