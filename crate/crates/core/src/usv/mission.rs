use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::EnvironmentField;
use crate::geometry::{dist, distance_to_polyline, path_length, resample_uniform, wrap_to_pi};
use crate::usv::guidance::refine_heading;
use crate::usv::kinematics::{step_kinematics, Commands, VesselParams, VesselState};
use crate::usv::pid::{pid_step, ControllerGains, PidState};

/// A timed waypoint, position `[east, north]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub position: [f64; 2],
}

/// Resamples a path to waypoints roughly `spacing` apart, timed for
/// traversal at constant `speed`.
pub fn timed_waypoints(path: &[[f64; 2]], spacing: f64, speed: f64) -> Vec<Waypoint> {
    let pts = resample_uniform(path, spacing);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(pts.len());
    for (i, &p) in pts.iter().enumerate() {
        if i > 0 {
            t += dist(pts[i - 1], p) / speed;
        }
        out.push(Waypoint { t, position: p });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionParams {
    pub dt: f64,
    pub acceptance_radius: f64,
    /// Simulated time limit; `None` allows four times the nominal duration
    /// plus a minute.
    pub time_budget: Option<f64>,
    pub vessel: VesselParams,
}

impl Default for MissionParams {
    fn default() -> Self {
        MissionParams {
            dt: 0.01,
            acceptance_radius: 7.0,
            time_budget: None,
            vessel: VesselParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionRecord {
    pub t: f64,
    pub east: f64,
    pub north: f64,
    pub psi: f64,
    pub psi_d: f64,
    pub speed: f64,
    pub speed_d: f64,
    pub cross_track: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionLog {
    pub dt: f64,
    pub records: Vec<MissionRecord>,
    /// `(waypoint index, time)` for every waypoint reached.
    pub waypoint_hits: Vec<(usize, f64)>,
    pub completed: bool,
    /// Distance to the final waypoint when the run ended.
    pub final_distance: f64,
}

impl MissionLog {
    pub fn mean_cross_track(&self) -> f64 {
        mean(self.records.iter().map(|r| r.cross_track))
    }

    pub fn max_cross_track(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.cross_track)
            .fold(0.0, f64::max)
    }

    /// Mean absolute change of the desired heading between control steps.
    pub fn mean_heading_change(&self) -> f64 {
        mean(
            self.records
                .windows(2)
                .map(|w| wrap_to_pi(w[1].psi_d - w[0].psi_d).abs()),
        )
    }

    pub fn duration(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    /// CSV with columns `t,E,N,psi,psi_d,V,V_d,cross_track`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,E,N,psi,psi_d,V,V_d,cross_track")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.t, r.east, r.north, r.psi, r.psi_d, r.speed, r.speed_d, r.cross_track
            )?;
        }
        Ok(())
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Flies the waypoint list with the dual PID autopilot.
///
/// The active waypoint advances once the vessel is within the acceptance
/// radius. The desired speed on each leg comes from the waypoint timing,
/// capped at the vessel's top speed. The run stops at the last waypoint or
/// when the time budget is spent (`completed = false`).
pub fn run_mission(
    waypoints: &[Waypoint],
    gains: &ControllerGains,
    env: Option<&EnvironmentField>,
    params: &MissionParams,
) -> Result<MissionLog> {
    if waypoints.len() < 2 {
        return Err(Error::invalid("a mission needs at least two waypoints"));
    }
    if !(params.dt > 0.0 && params.acceptance_radius > 0.0) {
        return Err(Error::invalid(
            "time step and acceptance radius must be positive",
        ));
    }
    gains.validate()?;
    let start = waypoints[0].position;
    if let Some(env) = env {
        if !env.shape().contains(start) {
            return Err(Error::invalid(format!(
                "mission start {start:?} is off the map"
            )));
        }
    }
    let track: Vec<[f64; 2]> = waypoints.iter().map(|w| w.position).collect();
    let vmax = params.vessel.max_speed;
    let leg_speed = |k: usize| {
        let a = waypoints[k - 1];
        let b = waypoints[k];
        let d = dist(a.position, b.position);
        let dt = b.t - a.t;
        if dt > 0.0 {
            (d / dt).min(vmax)
        } else {
            vmax
        }
    };
    let nominal: f64 = (1..waypoints.len())
        .map(|k| dist(waypoints[k - 1].position, waypoints[k].position) / leg_speed(k).max(0.1))
        .sum();
    let budget = params.time_budget.unwrap_or(4.0 * nominal + 60.0);

    let mut active = 1;
    let mut hits = vec![(0, 0.0)];
    let advance = |active: &mut usize, hits: &mut Vec<(usize, f64)>, p: [f64; 2], t: f64| {
        while *active < waypoints.len()
            && dist(p, waypoints[*active].position) <= params.acceptance_radius
        {
            hits.push((*active, t));
            *active += 1;
        }
    };
    advance(&mut active, &mut hits, start, 0.0);

    let first = waypoints[active.min(waypoints.len() - 1)].position;
    let psi0 = refine_heading(start, first, std::f64::consts::TAU).psi_d;
    let mut state = VesselState::at_rest(start[0], start[1], psi0);
    let mut heading_pid = PidState::default();
    let mut speed_pid = PidState::default();
    let mut psi_d = psi0;
    let mut t = 0.0;
    let mut step = 0usize;
    let mut records = Vec::new();

    loop {
        let p = state.position();
        advance(&mut active, &mut hits, p, t);
        let done = active >= waypoints.len();
        let target = waypoints[active.min(waypoints.len() - 1)];
        psi_d = refine_heading(p, target.position, psi_d).psi_d;
        let speed_d = if done { 0.0 } else { leg_speed(active) };
        records.push(MissionRecord {
            t,
            east: p[0],
            north: p[1],
            psi: state.psi,
            psi_d,
            speed: state.speed(),
            speed_d,
            cross_track: distance_to_polyline(p, &track),
        });
        if done || t >= budget {
            break;
        }

        let heading_err = wrap_to_pi(psi_d - state.psi);
        let rudder = pid_step(
            heading_err,
            &mut heading_pid,
            &gains.heading,
            gains.integral_clamp,
            gains.rudder_rate,
            params.dt,
            |a, b| wrap_to_pi(a - b),
        );
        let trim = pid_step(
            speed_d - state.u,
            &mut speed_pid,
            &gains.speed,
            gains.integral_clamp,
            gains.thrust_rate,
            params.dt,
            |a, b| a - b,
        );
        let commands = Commands {
            rudder,
            // Feed-forward on the desired speed, PID trims the rest.
            thrust: speed_d / vmax + trim,
        };
        let current = env.map_or([0.0, 0.0], |e| e.sample_current(p));
        state = step_kinematics(&state, commands, current, params.dt, &params.vessel);
        step += 1;
        t = step as f64 * params.dt;
    }

    let end = waypoints.last().unwrap().position;
    let last = records.last().unwrap();
    let final_distance = dist([last.east, last.north], end);
    Ok(MissionLog {
        dt: params.dt,
        records,
        waypoint_hits: hits,
        completed: active >= waypoints.len(),
        final_distance,
    })
}

/// Length of the waypoint polyline.
pub fn track_length(waypoints: &[Waypoint]) -> f64 {
    path_length(&waypoints.iter().map(|w| w.position).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_leg_is_tracked() {
        let wps = timed_waypoints(&[[0.0, 0.0], [300.0, 200.0]], 25.0, 5.0);
        let log = run_mission(
            &wps,
            &ControllerGains::default(),
            None,
            &MissionParams::default(),
        )
        .unwrap();
        assert!(log.completed);
        assert!(log.final_distance <= 7.0);
        assert!(log.max_cross_track() < 2.0, "{}", log.max_cross_track());
        assert!(log.records.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn repeated_waypoint_completes_immediately() {
        let wps = vec![
            Waypoint {
                t: 0.0,
                position: [5.0, 5.0],
            },
            Waypoint {
                t: 1.0,
                position: [5.0, 5.0],
            },
        ];
        let log = run_mission(
            &wps,
            &ControllerGains::default(),
            None,
            &MissionParams::default(),
        )
        .unwrap();
        assert!(log.completed);
        assert_eq!(log.records.len(), 1);
    }

    #[test]
    fn tiny_budget_leaves_mission_incomplete() {
        let wps = timed_waypoints(&[[0.0, 0.0], [0.0, 500.0]], 50.0, 5.0);
        let params = MissionParams {
            time_budget: Some(5.0),
            ..MissionParams::default()
        };
        let log = run_mission(&wps, &ControllerGains::default(), None, &params).unwrap();
        assert!(!log.completed);
        assert!(log.final_distance > 7.0);
    }
}
