use std::f64::consts::{PI, TAU};

use crate::geometry::wrap_to_pi;
use crate::usv::kinematics::normalize_heading;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingCommand {
    /// Desired heading in `(0, 2pi]`.
    pub psi_d: f64,
    /// The waypoint coincided with the vessel and the previous heading was
    /// kept.
    pub degenerate: bool,
}

/// Bearing from `position` to `waypoint` (both `[east, north]`), clockwise
/// from north in `(0, 2pi]`.
pub fn refine_heading(position: [f64; 2], waypoint: [f64; 2], previous: f64) -> HeadingCommand {
    let de = waypoint[0] - position[0];
    let dn = waypoint[1] - position[1];
    if de == 0.0 && dn == 0.0 {
        return HeadingCommand {
            psi_d: normalize_heading(previous),
            degenerate: true,
        };
    }
    HeadingCommand {
        psi_d: normalize_heading(de.atan2(dn)),
        degenerate: false,
    }
}

/// Maps a `(-pi, pi]` angle onto `(0, 2pi]`. Inputs outside the range are
/// wrapped first and the returned flag is set.
pub fn convert_frame(angle: f64) -> (f64, bool) {
    let in_range = angle > -PI && angle <= PI;
    let a = if in_range { angle } else { wrap_to_pi(angle) };
    let out = if a > 0.0 { a } else { a + TAU };
    (out, !in_range)
}

/// Inverse of [`convert_frame`]: `(0, 2pi]` back onto `(-pi, pi]`.
pub fn invert_frame(angle: f64) -> f64 {
    if angle > PI {
        angle - TAU
    } else {
        angle
    }
}
