use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One collision sphere of the planar body, offset from the state position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyCircle {
    pub offset: [f64; 2],
    pub radius: f64,
}

/// Circle-set approximation of the vehicle footprint.
///
/// States carry no orientation, so circles are placed by translation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotBodyModel {
    circles: Vec<BodyCircle>,
}

impl RobotBodyModel {
    pub fn new(circles: Vec<BodyCircle>) -> Result<Self> {
        if circles.is_empty() {
            return Err(Error::invalid("body needs at least one circle"));
        }
        if circles.iter().any(|c| !(c.radius > 0.0)) {
            return Err(Error::invalid("body circle radii must be positive"));
        }
        Ok(RobotBodyModel { circles })
    }

    pub fn single(radius: f64) -> Result<Self> {
        Self::new(vec![BodyCircle {
            offset: [0.0, 0.0],
            radius,
        }])
    }

    pub fn circles(&self) -> &[BodyCircle] {
        &self.circles
    }

    pub fn len(&self) -> usize {
        self.circles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circles.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.circles.iter().map(|c| c.radius).fold(0.0, f64::max)
    }

    /// World-frame circle centers for a body at `position`.
    pub fn centers(&self, position: [f64; 2]) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.circles.iter().map(move |c| {
            (
                [position[0] + c.offset[0], position[1] + c.offset[1]],
                c.radius,
            )
        })
    }
}

impl Default for RobotBodyModel {
    /// A single 3 m circle, half the length of a 6 m catamaran.
    fn default() -> Self {
        RobotBodyModel {
            circles: vec![BodyCircle {
                offset: [0.0, 0.0],
                radius: 3.0,
            }],
        }
    }
}
