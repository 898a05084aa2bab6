//! Factor definitions, the Monte-Carlo obstacle-space estimator and the
//! stochastic factor-graph builder.

mod body;
mod eval;
mod graph;
mod mc;

pub use body::{BodyCircle, RobotBodyModel};
pub use eval::{environment_error, graph_objective, obstacle_error, GraphProblem, StateResidual};
pub use graph::{
    build_factor_graph, build_factor_graph_mc, Factor, FactorGraph, FactorKind, GraphParams,
    InterpolationMode,
};
pub use mc::{mc_estimate_obstacle_space, mc_estimate_stratified, McEstimate, SamplingRegion};
