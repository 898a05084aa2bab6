//! Isotropic fast marching over a scalar slowness built from the energy-rate
//! raster, with gradient-descent path extraction.
//!
//! This is a proxy for anisotropic fast marching: the cost of crossing a
//! cell is `1 + beta * energy`, independent of the travel direction.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{EnvironmentField, SignedDistanceField};
use crate::geometry::{dist, path_length, resample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FmmParams {
    /// Slowness gain on the energy rate.
    pub beta: f64,
    /// Cells with clearance at or below this distance are impassable.
    pub inflation: f64,
    /// Cells whose energy rate reaches this value are impassable.
    pub impassable_energy: Option<f64>,
}

impl Default for FmmParams {
    fn default() -> Self {
        FmmParams {
            beta: 5.0,
            inflation: 20.0,
            impassable_energy: Some(0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmmResult {
    /// Extracted path resampled to one point per pixel.
    pub path: Vec<[f64; 2]>,
    pub length: f64,
    /// Mean energy rate over the resampled path points.
    pub mean_energy: f64,
    pub max_energy: f64,
    /// First-arrival time at the goal.
    pub arrival: f64,
}

#[derive(PartialEq)]
struct Trial {
    t: f64,
    cell: usize,
}

impl Eq for Trial {}

impl Ord for Trial {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Trial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// First-order upwind arrival times from `source` with per-cell slowness.
/// Impassable cells carry infinite slowness and stay at infinity.
fn arrival_times(w: usize, h: usize, h_cell: f64, slowness: &[f64], source: usize) -> Vec<f64> {
    let mut t = vec![f64::INFINITY; w * h];
    let mut frozen = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    t[source] = 0.0;
    heap.push(Trial {
        t: 0.0,
        cell: source,
    });
    while let Some(Trial { cell, .. }) = heap.pop() {
        if frozen[cell] {
            continue;
        }
        frozen[cell] = true;
        let (x, y) = (cell % w, cell / w);
        let mut update = |nx: usize, ny: usize| {
            let n = ny * w + nx;
            if frozen[n] || !slowness[n].is_finite() {
                return;
            }
            let ta = axis_min(&t, w, h, nx, ny, true);
            let tb = axis_min(&t, w, h, nx, ny, false);
            let f = slowness[n] * h_cell;
            let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
            let cand = if hi - lo >= f {
                lo + f
            } else {
                0.5 * (lo + hi + (2.0 * f * f - (hi - lo).powi(2)).sqrt())
            };
            if cand < t[n] {
                t[n] = cand;
                heap.push(Trial { t: cand, cell: n });
            }
        };
        if x > 0 {
            update(x - 1, y);
        }
        if x + 1 < w {
            update(x + 1, y);
        }
        if y > 0 {
            update(x, y - 1);
        }
        if y + 1 < h {
            update(x, y + 1);
        }
    }
    t
}

fn axis_min(t: &[f64], w: usize, h: usize, x: usize, y: usize, horizontal: bool) -> f64 {
    let (a, b) = if horizontal {
        (
            (x > 0).then(|| t[y * w + x - 1]),
            (x + 1 < w).then(|| t[y * w + x + 1]),
        )
    } else {
        (
            (y > 0).then(|| t[(y - 1) * w + x]),
            (y + 1 < h).then(|| t[(y + 1) * w + x]),
        )
    };
    a.unwrap_or(f64::INFINITY).min(b.unwrap_or(f64::INFINITY))
}

pub fn fmm_plan(
    sdf: &SignedDistanceField,
    env: &EnvironmentField,
    start: [f64; 2],
    goal: [f64; 2],
    params: &FmmParams,
) -> Result<FmmResult> {
    if !(params.beta >= 0.0) || !(params.inflation >= 0.0) {
        return Err(Error::invalid("beta and inflation must be non-negative"));
    }
    let shape = *sdf.shape();
    if env.shape().width != shape.width || env.shape().height != shape.height {
        return Err(Error::invalid(
            "environment and distance rasters differ in size",
        ));
    }
    let (w, h) = (shape.width, shape.height);
    let energy = env.energy_rate();
    let slowness: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let e = energy.at(x, y);
            let blocked = sdf.at(x, y) <= params.inflation
                || params.impassable_energy.is_some_and(|cap| e >= cap);
            if blocked {
                f64::INFINITY
            } else {
                1.0 + params.beta * e
            }
        })
        .collect();
    let cell = |p: [f64; 2], name: &str| {
        let (x, y) = shape
            .cell_of(p)
            .ok_or_else(|| Error::invalid(format!("{name} {p:?} is outside the map")))?;
        if sdf.at(x, y) <= params.inflation {
            return Err(Error::invalid(format!(
                "{name} {p:?} is within {} m of an obstacle",
                params.inflation
            )));
        }
        Ok((x, y))
    };
    let (sx, sy) = cell(start, "start")?;
    let (gx, gy) = cell(goal, "goal")?;
    if !slowness[gy * w + gx].is_finite() || !slowness[sy * w + sx].is_finite() {
        return Err(Error::PlanningFailed(
            "start or goal lies in an impassable high-energy cell".into(),
        ));
    }
    let t = arrival_times(w, h, shape.cell_size, &slowness, sy * w + sx);
    let arrival = t[gy * w + gx];
    if !arrival.is_finite() {
        return Err(Error::PlanningFailed(
            "goal is unreachable through passable cells".into(),
        ));
    }

    let corners = descend(&t, w, h, (gx, gy), (sx, sy))?;
    let mut points: Vec<[f64; 2]> = corners
        .iter()
        .map(|&(x, y)| {
            [
                shape.origin[0] + x * shape.cell_size,
                shape.origin[1] + y * shape.cell_size,
            ]
        })
        .collect();
    points.reverse();
    points[0] = start;
    *points.last_mut().unwrap() = goal;
    let path = resample(&points, shape.cell_size);
    let energies: Vec<f64> = path.iter().map(|&p| env.sample_energy(p).value).collect();
    Ok(FmmResult {
        length: path_length(&path),
        mean_energy: energies.iter().sum::<f64>() / energies.len() as f64,
        max_energy: energies.iter().copied().fold(0.0, f64::max),
        arrival,
        path,
    })
}

/// Walks down the arrival-time field from `from` to `to` in cell
/// coordinates. Uses the bilinear gradient in the interior and falls back to
/// the cheapest neighbour next to impassable cells.
fn descend(
    t: &[f64],
    w: usize,
    h: usize,
    from: (usize, usize),
    to: (usize, usize),
) -> Result<Vec<(f64, f64)>> {
    let at = |x: usize, y: usize| t[y * w + x];
    let target = (to.0 as f64, to.1 as f64);
    let mut p = (from.0 as f64, from.1 as f64);
    let mut out = vec![p];
    let step = 0.5;
    let max_steps = 8 * (w + h) * 4;
    for _ in 0..max_steps {
        if dist([p.0, p.1], [target.0, target.1]) <= 1.0 {
            out.push(target);
            return Ok(out);
        }
        let x0 = (p.0.floor() as usize).min(w.saturating_sub(2));
        let y0 = (p.1.floor() as usize).min(h.saturating_sub(2));
        let corners = [
            at(x0, y0),
            at(x0 + 1, y0),
            at(x0, y0 + 1),
            at(x0 + 1, y0 + 1),
        ];
        let here = sample_t(t, w, h, p);
        let mut next = None;
        if corners.iter().all(|v| v.is_finite()) {
            let (fx, fy) = (p.0 - x0 as f64, p.1 - y0 as f64);
            let gx = (corners[1] - corners[0]) * (1.0 - fy) + (corners[3] - corners[2]) * fy;
            let gy = (corners[2] - corners[0]) * (1.0 - fx) + (corners[3] - corners[1]) * fx;
            let n = (gx * gx + gy * gy).sqrt();
            if n > 0.0 {
                let q = (p.0 - step * gx / n, p.1 - step * gy / n);
                if sample_t(t, w, h, q) < here {
                    next = Some(q);
                }
            }
        }
        let q = match next {
            Some(q) => q,
            None => {
                // Discrete fallback: snap to the lowest neighbouring cell.
                let (cx, cy) = (p.0.round() as i64, p.1.round() as i64);
                let mut best = (cx as f64, cy as f64);
                let mut best_t = f64::INFINITY;
                for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        let (nx, ny) = (cx + dx, cy + dy);
                        if (dx, dy) == (0, 0)
                            || nx < 0
                            || ny < 0
                            || nx >= w as i64
                            || ny >= h as i64
                        {
                            continue;
                        }
                        let v = at(nx as usize, ny as usize);
                        if v < best_t {
                            best_t = v;
                            best = (nx as f64, ny as f64);
                        }
                    }
                }
                if !best_t.is_finite() {
                    return Err(Error::PlanningFailed(
                        "path extraction left the reachable set".into(),
                    ));
                }
                best
            }
        };
        p = q;
        out.push(p);
    }
    Err(Error::PlanningFailed(
        "path extraction did not reach the start".into(),
    ))
}

fn sample_t(t: &[f64], w: usize, h: usize, p: (f64, f64)) -> f64 {
    let x = p.0.clamp(0.0, (w - 1) as f64);
    let y = p.1.clamp(0.0, (h - 1) as f64);
    let x0 = (x.floor() as usize).min(w.saturating_sub(2));
    let y0 = (y.floor() as usize).min(h.saturating_sub(2));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let v = |xx: usize, yy: usize| t[yy * w + xx];
    let top = v(x0, y0) * (1.0 - fx) + v(x0 + 1, y0) * fx;
    let bottom = v(x0, y0 + 1) * (1.0 - fx) + v(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}
