use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// Vehicle constants. Defaults describe a 20 ft catamaran with a 10 m/s top
/// speed; the lag constants stand in for hull hydrodynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VesselParams {
    pub max_speed: f64,
    /// Surge response time constant, seconds.
    pub surge_lag: f64,
    /// Yaw-rate response time constant, seconds.
    pub yaw_lag: f64,
    /// Steady yaw rate per radian of rudder, 1/s.
    pub rudder_gain: f64,
    pub max_rudder: f64,
}

impl Default for VesselParams {
    fn default() -> Self {
        VesselParams {
            max_speed: 10.0,
            surge_lag: 2.0,
            yaw_lag: 1.0,
            rudder_gain: 0.5,
            max_rudder: 35f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VesselState {
    pub east: f64,
    pub north: f64,
    /// Heading in `(0, 2pi]`, clockwise from north.
    pub psi: f64,
    /// Surge speed, m/s.
    pub u: f64,
    /// Sway speed, m/s.
    pub v: f64,
    /// Yaw rate, rad/s.
    pub r: f64,
    /// Rudder deflection currently applied, radians.
    pub rudder: f64,
    /// Thruster speed as a fraction of maximum.
    pub thrust: f64,
}

impl VesselState {
    pub fn at_rest(east: f64, north: f64, psi: f64) -> Self {
        VesselState {
            east,
            north,
            psi: normalize_heading(psi),
            u: 0.0,
            v: 0.0,
            r: 0.0,
            rudder: 0.0,
            thrust: 0.0,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.east, self.north]
    }

    pub fn speed(&self) -> f64 {
        self.u.hypot(self.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Commands {
    pub rudder: f64,
    pub thrust: f64,
}

/// Maps any angle into `(0, 2pi]`.
pub fn normalize_heading(a: f64) -> f64 {
    let m = a.rem_euclid(TAU);
    if m == 0.0 {
        TAU
    } else {
        m
    }
}

// [north, east, psi, u, r]
fn derivative(
    s: [f64; 5],
    v: f64,
    rudder: f64,
    thrust: f64,
    current: [f64; 2],
    p: &VesselParams,
) -> [f64; 5] {
    let (sin, cos) = s[2].sin_cos();
    [
        s[3] * cos - v * sin + current[1],
        s[3] * sin + v * cos + current[0],
        s[4],
        (thrust * p.max_speed - s[3]) / p.surge_lag,
        (p.rudder_gain * rudder - s[4]) / p.yaw_lag,
    ]
}

/// Advances the vessel by `dt` with one classical Runge-Kutta step. The
/// commands are clamped to the actuator ranges and held over the step;
/// `current` is `[east, north]` water velocity added to the ground velocity.
pub fn step_kinematics(
    state: &VesselState,
    commands: Commands,
    current: [f64; 2],
    dt: f64,
    params: &VesselParams,
) -> VesselState {
    debug_assert!(dt > 0.0);
    let rudder = commands.rudder.clamp(-params.max_rudder, params.max_rudder);
    let thrust = commands.thrust.clamp(0.0, 1.0);
    let s0 = [state.north, state.east, state.psi, state.u, state.r];
    let f = |s: [f64; 5]| derivative(s, state.v, rudder, thrust, current, params);
    let add = |s: [f64; 5], k: [f64; 5], h: f64| {
        let mut out = s;
        for i in 0..5 {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = f(s0);
    let k2 = f(add(s0, k1, dt / 2.0));
    let k3 = f(add(s0, k2, dt / 2.0));
    let k4 = f(add(s0, k3, dt));
    let mut s = s0;
    for i in 0..5 {
        s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    VesselState {
        north: s[0],
        east: s[1],
        psi: normalize_heading(s[2]),
        u: s[3].clamp(0.0, params.max_speed),
        v: state.v,
        r: s[4],
        rudder,
        thrust,
    }
}
