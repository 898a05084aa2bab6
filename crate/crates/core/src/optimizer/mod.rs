//! Levenberg-Marquardt solver and the replanning GP planner.

mod lm;
mod path;
mod planner;

pub use lm::{
    assemble_normal_equations, lm_solve, LeastSquaresProblem, Linearized, LmOutcome, LmSettings,
    Termination,
};
pub use path::{collision_check, densify, CollisionReport, DenseState};
pub use planner::{mc_gpmp2_star, PlanResult, PlannerParams, PlanningFields, ReplanRecord};
