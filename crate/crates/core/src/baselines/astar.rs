//! A* over an 8-connected lattice of spacing `l` anchored at the start cell.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines::segment_clear;
use crate::error::{Error, Result};
use crate::fields::SignedDistanceField;
use crate::geometry::{dist, path_length, resample};

/// Lattice search settings. Connectivity is 8 and the heuristic is the
/// Euclidean distance to the goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearchParams {
    /// Lattice spacing in pixels.
    pub step: usize,
    /// Cells with clearance at or below this distance are blocked.
    pub inflation: f64,
    pub timeout_s: f64,
}

impl Default for GridSearchParams {
    fn default() -> Self {
        GridSearchParams {
            step: 10,
            inflation: 20.0,
            timeout_s: 30.0,
        }
    }
}

impl GridSearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.step == 0 {
            return Err(Error::invalid("lattice step must be at least one pixel"));
        }
        if !(self.inflation >= 0.0) {
            return Err(Error::invalid("inflation must be non-negative"));
        }
        if !(self.timeout_s > 0.0) {
            return Err(Error::invalid("timeout must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AstarResult {
    /// Lattice path densified to one point per pixel.
    pub path: Vec<[f64; 2]>,
    pub length: f64,
    pub expanded: usize,
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn astar_plan(
    sdf: &SignedDistanceField,
    start: [f64; 2],
    goal: [f64; 2],
    params: &GridSearchParams,
) -> Result<AstarResult> {
    params.validate()?;
    let shape = *sdf.shape();
    let l = params.step as i64;
    let cs = shape.cell_size;
    let endpoint_cell = |p: [f64; 2], name: &str| {
        let (ix, iy) = shape
            .cell_of(p)
            .ok_or_else(|| Error::invalid(format!("{name} {p:?} is outside the map")))?;
        if sdf.at(ix, iy) <= params.inflation {
            return Err(Error::invalid(format!(
                "{name} {p:?} is within {} m of an obstacle",
                params.inflation
            )));
        }
        Ok((ix as i64, iy as i64))
    };
    let (sx, sy) = endpoint_cell(start, "start")?;
    let (gx, gy) = endpoint_cell(goal, "goal")?;

    // Lattice coordinates (a, b) map to cell (sx + a l, sy + b l).
    let a_min = -(sx / l);
    let b_min = -(sy / l);
    let na = ((shape.width as i64 - 1 - sx) / l - a_min + 1) as usize;
    let nb = ((shape.height as i64 - 1 - sy) / l - b_min + 1) as usize;
    let lattice_nodes = na * nb;
    let goal_node = lattice_nodes;
    let cell_of_node = |n: usize| -> (i64, i64) {
        let a = (n % na) as i64 + a_min;
        let b = (n / na) as i64 + b_min;
        (sx + a * l, sy + b * l)
    };
    let center = |(x, y): (i64, i64)| shape.cell_center(x as usize, y as usize);
    let goal_pos = center((gx, gy));
    let node_pos = |n: usize| {
        if n == goal_node {
            goal_pos
        } else {
            center(cell_of_node(n))
        }
    };
    let valid_cell = |(x, y): (i64, i64)| sdf.at(x as usize, y as usize) > params.inflation;

    let start_node = (-a_min + (-b_min) * na as i64) as usize;
    let mut g = vec![f64::INFINITY; lattice_nodes + 1];
    let mut parent = vec![usize::MAX; lattice_nodes + 1];
    let mut closed = vec![false; lattice_nodes + 1];
    let mut open = BinaryHeap::new();
    g[start_node] = 0.0;
    open.push(Open {
        f: dist(node_pos(start_node), goal_pos),
        node: start_node,
    });

    let clock = Instant::now();
    let timeout = Duration::from_secs_f64(params.timeout_s);
    let mut expanded = 0usize;
    let mut found = false;
    while let Some(Open { node, .. }) = open.pop() {
        if closed[node] {
            continue;
        }
        closed[node] = true;
        if node == goal_node {
            found = true;
            break;
        }
        expanded += 1;
        if expanded.is_multiple_of(1024) && clock.elapsed() > timeout {
            return Err(Error::PlanningFailed(format!(
                "A* timed out after {:.1} s ({expanded} expansions)",
                params.timeout_s
            )));
        }
        let (cx, cy) = cell_of_node(node);
        let p = center((cx, cy));
        let mut relax = |next: usize, q: [f64; 2], open: &mut BinaryHeap<Open>| {
            let cand = g[node] + dist(p, q);
            if cand < g[next] {
                g[next] = cand;
                parent[next] = node;
                open.push(Open {
                    f: cand + dist(q, goal_pos),
                    node: next,
                });
            }
        };
        for (da, db) in NEIGHBOURS {
            let (nx, ny) = (cx + da * l, cy + db * l);
            if nx < 0 || ny < 0 || nx >= shape.width as i64 || ny >= shape.height as i64 {
                continue;
            }
            let a = (nx - sx) / l - a_min;
            let b = (ny - sy) / l - b_min;
            let next = (a + b * na as i64) as usize;
            if closed[next] || !valid_cell((nx, ny)) {
                continue;
            }
            let q = center((nx, ny));
            if segment_clear(sdf, p, q, params.inflation) {
                relax(next, q, &mut open);
            }
        }
        // The goal joins the lattice from any node within one step of it.
        let (dx, dy) = (gx - cx, gy - cy);
        if dx.abs() <= l
            && dy.abs() <= l
            && !closed[goal_node]
            && segment_clear(sdf, p, goal_pos, params.inflation)
        {
            relax(goal_node, goal_pos, &mut open);
        }
    }
    if !found {
        return Err(Error::PlanningFailed(format!(
            "A* found no path ({expanded} expansions)"
        )));
    }

    let mut nodes = vec![goal_node];
    while let Some(&n) = nodes.last() {
        if n == start_node {
            break;
        }
        nodes.push(parent[n]);
    }
    nodes.reverse();
    let mut corners: Vec<[f64; 2]> = nodes.into_iter().map(node_pos).collect();
    // Drop the goal's duplicate when it coincides with a lattice node.
    corners.dedup();
    if dist(corners[0], start) > 0.0 {
        corners.insert(0, start);
    }
    if dist(*corners.last().unwrap(), goal) > 0.0 {
        corners.push(goal);
    }
    let path = resample(&corners, cs);
    Ok(AstarResult {
        length: path_length(&path),
        path,
        expanded,
    })
}

const NEIGHBOURS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];
