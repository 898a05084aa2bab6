use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

/// Autopilot tuning. The defaults come from a tuning run on the shipped
/// vessel model; they are not published values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerGains {
    pub heading: PidGains,
    pub speed: PidGains,
    /// Rudder slew limit, rad/s.
    pub rudder_rate: f64,
    /// Thrust slew limit, fraction of maximum per second.
    pub thrust_rate: f64,
    /// Bound on the accumulated integral of each loop.
    pub integral_clamp: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        ControllerGains {
            heading: PidGains {
                kp: 2.0,
                ki: 0.0,
                kd: 0.5,
            },
            speed: PidGains {
                kp: 1.0,
                ki: 0.2,
                kd: 0.0,
            },
            rudder_rate: 1.0,
            thrust_rate: 0.5,
            integral_clamp: 1.0,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> crate::Result<()> {
        let gains = [self.heading, self.speed];
        if gains
            .iter()
            .any(|g| !(g.kp >= 0.0 && g.ki >= 0.0 && g.kd >= 0.0))
        {
            return Err(crate::Error::invalid("PID gains must be non-negative"));
        }
        if !(self.integral_clamp > 0.0 && self.rudder_rate > 0.0 && self.thrust_rate > 0.0) {
            return Err(crate::Error::invalid(
                "clamp and rate limits must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub previous_error: Option<f64>,
    pub output: f64,
}

/// One PID update. The integral is clamped to `+/- integral_clamp` and the
/// output may move by at most `rate_limit * dt` from the previous output.
/// `difference` maps two errors to their increment, letting angular loops
/// take the shortest turn.
pub fn pid_step(
    error: f64,
    state: &mut PidState,
    gains: &PidGains,
    integral_clamp: f64,
    rate_limit: f64,
    dt: f64,
    difference: impl Fn(f64, f64) -> f64,
) -> f64 {
    state.integral = (state.integral + error * dt).clamp(-integral_clamp, integral_clamp);
    let derivative = state
        .previous_error
        .map_or(0.0, |prev| difference(error, prev) / dt);
    state.previous_error = Some(error);
    let raw = gains.kp * error + gains.ki * state.integral + gains.kd * derivative;
    let max_change = rate_limit * dt;
    state.output += (raw - state.output).clamp(-max_change, max_change);
    state.output
}
