//! Planar polyline helpers shared by planners, metrics and the simulator.

use std::f64::consts::PI;

pub type Point = [f64; 2];

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Sum of consecutive Euclidean distances.
pub fn path_length(path: &[Point]) -> f64 {
    path.windows(2).map(|w| dist(w[0], w[1])).sum()
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Distance from `p` to the nearest segment of `path`.
pub fn distance_to_polyline(p: Point, path: &[Point]) -> f64 {
    match path.len() {
        0 => f64::INFINITY,
        1 => dist(p, path[0]),
        _ => path
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_to_pi(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Resamples a polyline at (at most) `spacing` meters of arc length,
/// keeping both endpoints.
pub fn resample(path: &[Point], spacing: f64) -> Vec<Point> {
    if path.len() < 2 || !(spacing > 0.0) {
        return path.to_vec();
    }
    let mut out = vec![path[0]];
    for w in path.windows(2) {
        let len = dist(w[0], w[1]);
        let n = (len / spacing).ceil().max(1.0) as usize;
        for k in 1..=n {
            let t = k as f64 / n as f64;
            out.push([
                w[0][0] + t * (w[1][0] - w[0][0]),
                w[0][1] + t * (w[1][1] - w[0][1]),
            ]);
        }
    }
    out
}

/// Points at every `spacing` meters of arc length along `path`, plus the
/// final point. Unlike [`resample`] this also coarsens dense input.
pub fn resample_uniform(path: &[Point], spacing: f64) -> Vec<Point> {
    if path.len() < 2 || !(spacing > 0.0) {
        return path.to_vec();
    }
    let mut out = vec![path[0]];
    let mut next = spacing;
    let mut walked = 0.0;
    for w in path.windows(2) {
        let len = dist(w[0], w[1]);
        while len > 0.0 && walked + len >= next {
            let t = (next - walked) / len;
            out.push([
                w[0][0] + t * (w[1][0] - w[0][0]),
                w[0][1] + t * (w[1][1] - w[0][1]),
            ]);
            next += spacing;
        }
        walked += len;
    }
    let last = path[path.len() - 1];
    // Merge a stub shorter than a tenth of the spacing into the endpoint.
    if out.len() > 1 && dist(out[out.len() - 1], last) < 0.1 * spacing {
        out.pop();
    }
    out.push(last);
    out
}

/// Mean absolute heading change between consecutive segments, radians.
///
/// The path is first resampled at `spacing` meters so the figure does not
/// depend on how densely a planner happens to emit points. Zero-length
/// segments are skipped.
pub fn mean_turn_angle(path: &[Point], spacing: f64) -> f64 {
    let pts = resample_uniform(path, spacing);
    let headings: Vec<f64> = pts
        .windows(2)
        .filter(|w| dist(w[0], w[1]) > 1e-9)
        .map(|w| (w[1][1] - w[0][1]).atan2(w[1][0] - w[0][0]))
        .collect();
    if headings.len() < 2 {
        return 0.0;
    }
    let total: f64 = headings
        .windows(2)
        .map(|h| wrap_to_pi(h[1] - h[0]).abs())
        .sum();
    total / (headings.len() - 1) as f64
}
