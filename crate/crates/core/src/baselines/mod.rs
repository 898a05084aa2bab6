//! Comparison planners: lattice A*, RRT* and a scalar-cost fast-marching
//! planner used as a stand-in for anisotropic fast marching.

mod astar;
mod fmm;
mod rrt_star;

pub use astar::{astar_plan, AstarResult, GridSearchParams};
pub use fmm::{fmm_plan, FmmParams, FmmResult};
pub use rrt_star::{rrt_star_plan, RrtStarParams, RrtStarResult};

use crate::fields::{GridShape, SignedDistanceField};

/// Cells a straight segment passes through, corners included: when the
/// segment crosses a cell corner exactly, both side cells are visited.
///
/// Cell `(ix, iy)` covers `[ix - 0.5, ix + 0.5] x [iy - 0.5, iy + 0.5]` in
/// cell coordinates. Returns `false` as soon as `visit` does.
pub(crate) fn traverse_cells(
    shape: &GridShape,
    a: [f64; 2],
    b: [f64; 2],
    mut visit: impl FnMut(usize, usize) -> bool,
) -> bool {
    let to_cell = |p: [f64; 2]| {
        [
            (p[0] - shape.origin[0]) / shape.cell_size + 0.5,
            (p[1] - shape.origin[1]) / shape.cell_size + 0.5,
        ]
    };
    let (pa, pb) = (to_cell(a), to_cell(b));
    let (w, h) = (shape.width as i64, shape.height as i64);
    let mut check = |x: i64, y: i64| -> bool {
        x >= 0 && y >= 0 && x < w && y < h && visit(x as usize, y as usize)
    };

    let mut x = pa[0].floor() as i64;
    let mut y = pa[1].floor() as i64;
    let end_x = pb[0].floor() as i64;
    let end_y = pb[1].floor() as i64;
    let d = [pb[0] - pa[0], pb[1] - pa[1]];
    let step_x = if d[0] > 0.0 { 1 } else { -1 };
    let step_y = if d[1] > 0.0 { 1 } else { -1 };
    let t_delta_x = if d[0] != 0.0 {
        1.0 / d[0].abs()
    } else {
        f64::INFINITY
    };
    let t_delta_y = if d[1] != 0.0 {
        1.0 / d[1].abs()
    } else {
        f64::INFINITY
    };
    let mut t_max_x = if d[0] > 0.0 {
        (x as f64 + 1.0 - pa[0]) * t_delta_x
    } else if d[0] < 0.0 {
        (pa[0] - x as f64) * t_delta_x
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if d[1] > 0.0 {
        (y as f64 + 1.0 - pa[1]) * t_delta_y
    } else if d[1] < 0.0 {
        (pa[1] - y as f64) * t_delta_y
    } else {
        f64::INFINITY
    };

    if !check(x, y) {
        return false;
    }
    let max_steps = (end_x - x).abs() + (end_y - y).abs() + 2;
    for _ in 0..max_steps {
        if x == end_x && y == end_y {
            break;
        }
        let next = t_max_x.min(t_max_y);
        if next > 1.0 {
            break;
        }
        if (t_max_x - t_max_y).abs() < 1e-12 {
            // Exact corner crossing.
            if !check(x + step_x, y) || !check(x, y + step_y) {
                return false;
            }
            x += step_x;
            y += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            x += step_x;
            t_max_x += t_delta_x;
        } else {
            y += step_y;
            t_max_y += t_delta_y;
        }
        if !check(x, y) {
            return false;
        }
    }
    true
}

/// Whether the segment stays on cells whose clearance exceeds `inflation`.
pub(crate) fn segment_clear(
    sdf: &SignedDistanceField,
    a: [f64; 2],
    b: [f64; 2],
    inflation: f64,
) -> bool {
    traverse_cells(sdf.shape(), a, b, |ix, iy| sdf.at(ix, iy) > inflation)
}
