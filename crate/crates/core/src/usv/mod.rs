//! Closed-loop vessel simulation: kinematic catamaran with first-order
//! actuator lags, waypoint guidance in the NED frame and a dual PID
//! autopilot (rudder for heading, thrusters for speed).
//!
//! Positions are `[east, north]`, which coincides with the map's `[x, y]`.
//! Headings are measured clockwise from north and kept in `(0, 2pi]`.

mod guidance;
mod kinematics;
mod mission;
mod pid;

pub use guidance::{convert_frame, invert_frame, refine_heading, HeadingCommand};
pub use kinematics::{normalize_heading, step_kinematics, Commands, VesselParams, VesselState};
pub use mission::{
    run_mission, timed_waypoints, track_length, MissionLog, MissionParams, MissionRecord, Waypoint,
};
pub use pid::{pid_step, ControllerGains, PidGains, PidState};
