//! RRT* with goal bias and radius-based rewiring.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::segment_clear;
use crate::error::{Error, Result};
use crate::fields::SignedDistanceField;
use crate::geometry::{dist, path_length, resample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrtStarParams {
    /// Steering step in pixels.
    pub step: f64,
    pub goal_bias: f64,
    pub max_samples: usize,
    /// Rewiring radius constant `gamma` in `gamma * sqrt(ln n / n)`. When
    /// `None` it is derived from the map area.
    pub gamma: Option<f64>,
    /// Cells with clearance at or below this distance are blocked.
    pub inflation: f64,
    /// Stop at the first connection to the goal instead of spending the
    /// whole sample budget on rewiring.
    pub stop_at_first_solution: bool,
    pub timeout_s: f64,
}

impl Default for RrtStarParams {
    fn default() -> Self {
        RrtStarParams {
            step: 10.0,
            goal_bias: 0.05,
            max_samples: 50_000,
            gamma: None,
            inflation: 20.0,
            stop_at_first_solution: true,
            timeout_s: 30.0,
        }
    }
}

impl RrtStarParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::invalid("RRT* step must be positive"));
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return Err(Error::invalid("goal bias must lie in [0, 1)"));
        }
        if self.max_samples == 0 {
            return Err(Error::invalid("sample budget must be positive"));
        }
        if self.gamma.is_some_and(|g| !(g > 0.0)) {
            return Err(Error::invalid("rewiring constant must be positive"));
        }
        if !(self.inflation >= 0.0) || !(self.timeout_s > 0.0) {
            return Err(Error::invalid("inflation and timeout must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrtStarResult {
    /// Tree path densified to one point per pixel.
    pub path: Vec<[f64; 2]>,
    pub length: f64,
    pub samples: usize,
    pub tree_size: usize,
}

struct Node {
    p: [f64; 2],
    parent: usize,
    cost: f64,
    children: Vec<usize>,
}

pub fn rrt_star_plan(
    sdf: &SignedDistanceField,
    start: [f64; 2],
    goal: [f64; 2],
    params: &RrtStarParams,
    seed: u64,
) -> Result<RrtStarResult> {
    params.validate()?;
    let shape = *sdf.shape();
    let free = |p: [f64; 2]| {
        shape
            .cell_of(p)
            .is_some_and(|(ix, iy)| sdf.at(ix, iy) > params.inflation)
    };
    for (name, p) in [("start", start), ("goal", goal)] {
        if !free(p) {
            return Err(Error::invalid(format!(
                "{name} {p:?} is off the map or within {} m of an obstacle",
                params.inflation
            )));
        }
    }
    let clear = |a: [f64; 2], b: [f64; 2]| segment_clear(sdf, a, b, params.inflation);
    let (lo, hi) = shape.extent();
    let step = params.step * shape.cell_size;
    let gamma = params.gamma.unwrap_or_else(|| {
        let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        2.0 * 1.5f64.sqrt() * (area / std::f64::consts::PI).sqrt()
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tree = vec![Node {
        p: start,
        parent: usize::MAX,
        cost: 0.0,
        children: Vec::new(),
    }];
    let mut best_goal: Option<(usize, f64)> = None;
    let clock = Instant::now();
    let timeout = Duration::from_secs_f64(params.timeout_s);
    let mut samples = 0usize;
    let mut near = Vec::new();

    while samples < params.max_samples {
        samples += 1;
        if samples.is_multiple_of(256) && clock.elapsed() > timeout {
            break;
        }
        let target = if rng.random::<f64>() < params.goal_bias {
            goal
        } else {
            [
                rng.random_range(lo[0]..hi[0]),
                rng.random_range(lo[1]..hi[1]),
            ]
        };
        let nearest = nearest(&tree, target);
        let from = tree[nearest].p;
        let d = dist(from, target);
        if d == 0.0 {
            continue;
        }
        let new = if d <= step {
            target
        } else {
            [
                from[0] + (target[0] - from[0]) * step / d,
                from[1] + (target[1] - from[1]) * step / d,
            ]
        };
        if !free(new) || !clear(from, new) {
            continue;
        }

        let n = tree.len() as f64 + 1.0;
        let radius = (gamma * (n.ln() / n).sqrt()).max(step);
        near.clear();
        near.extend(
            tree.iter()
                .enumerate()
                .filter(|(_, node)| dist(node.p, new) <= radius)
                .map(|(i, _)| i),
        );

        let mut parent = nearest;
        let mut cost = tree[nearest].cost + dist(from, new);
        for &i in &near {
            let c = tree[i].cost + dist(tree[i].p, new);
            if c < cost && i != nearest && clear(tree[i].p, new) {
                parent = i;
                cost = c;
            }
        }
        let idx = tree.len();
        tree.push(Node {
            p: new,
            parent,
            cost,
            children: Vec::new(),
        });
        tree[parent].children.push(idx);

        for &i in &near {
            if i == parent {
                continue;
            }
            let c = cost + dist(new, tree[i].p);
            if c < tree[i].cost && clear(new, tree[i].p) {
                let delta = tree[i].cost - c;
                let old = tree[i].parent;
                tree[old].children.retain(|&k| k != i);
                tree[i].parent = idx;
                tree[idx].children.push(i);
                propagate(&mut tree, i, delta);
            }
        }

        if dist(new, goal) <= step && clear(new, goal) {
            let c = cost + dist(new, goal);
            if best_goal.is_none_or(|(_, bc)| c < bc) {
                best_goal = Some((idx, c));
            }
            if params.stop_at_first_solution {
                break;
            }
        }
        // Rewiring may have shortened the branch holding the goal link.
        if let Some((g, _)) = best_goal {
            let c = tree[g].cost + dist(tree[g].p, goal);
            best_goal = Some((g, c));
        }
    }

    let Some((last, _)) = best_goal else {
        return Err(Error::PlanningFailed(format!(
            "RRT* reached no goal connection in {samples} samples"
        )));
    };
    let mut corners = vec![goal];
    let mut i = last;
    while i != usize::MAX {
        corners.push(tree[i].p);
        i = tree[i].parent;
    }
    corners.reverse();
    corners.dedup();
    let path = resample(&corners, shape.cell_size);
    Ok(RrtStarResult {
        length: path_length(&path),
        path,
        samples,
        tree_size: tree.len(),
    })
}

fn nearest(tree: &[Node], p: [f64; 2]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, node) in tree.iter().enumerate() {
        let d = (node.p[0] - p[0]).powi(2) + (node.p[1] - p[1]).powi(2);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

// Lowers the cost of every descendant of `root` by `delta`.
fn propagate(tree: &mut [Node], root: usize, delta: f64) {
    let mut stack = vec![root];
    while let Some(k) = stack.pop() {
        tree[k].cost -= delta;
        stack.extend_from_slice(&tree[k].children);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{compute_sdf, OccupancyGrid};

    #[test]
    fn empty_map_respects_metric_bound() {
        let sdf = compute_sdf(&OccupancyGrid::empty(200, 200, 1.0).unwrap(), 1e3).unwrap();
        let p = RrtStarParams {
            inflation: 0.0,
            ..RrtStarParams::default()
        };
        let r = rrt_star_plan(&sdf, [10.0, 10.0], [180.0, 150.0], &p, 4).unwrap();
        assert!(r.length >= dist([10.0, 10.0], [180.0, 150.0]) - 1e-9);
        assert_eq!(r.path.first(), Some(&[10.0, 10.0]));
        assert_eq!(r.path.last(), Some(&[180.0, 150.0]));
    }

    #[test]
    fn same_seed_same_path() {
        let grid =
            OccupancyGrid::from_fn(120, 120, 1.0, |x, y| (50..70).contains(&x) && y < 90).unwrap();
        let sdf = compute_sdf(&grid, 1e3).unwrap();
        let p = RrtStarParams {
            inflation: 3.0,
            ..RrtStarParams::default()
        };
        let a = rrt_star_plan(&sdf, [10.0, 10.0], [110.0, 10.0], &p, 9).unwrap();
        let b = rrt_star_plan(&sdf, [10.0, 10.0], [110.0, 10.0], &p, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.path.iter().all(|q| !grid.is_occupied_at(*q)));
    }

    #[test]
    fn unreachable_goal_exhausts_budget() {
        let grid = OccupancyGrid::from_fn(60, 60, 1.0, |x, _| x == 30).unwrap();
        let sdf = compute_sdf(&grid, 1e3).unwrap();
        let p = RrtStarParams {
            inflation: 0.0,
            max_samples: 500,
            ..RrtStarParams::default()
        };
        let err = rrt_star_plan(&sdf, [5.0, 5.0], [55.0, 5.0], &p, 1).unwrap_err();
        assert!(matches!(err, Error::PlanningFailed(_)));
    }
}
