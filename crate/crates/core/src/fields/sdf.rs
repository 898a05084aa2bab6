//! Exact signed Euclidean distance transform of an occupancy grid.
//!
//! Both the free set and the obstacle set are transformed with the separable
//! lower-envelope algorithm of Felzenszwalb and Huttenlocher. Distances are
//! between cell centers, so the squared distances handled internally are
//! integers and the transform is exact.

use crate::error::Result;
use crate::fields::{FieldSample, GridShape, OccupancyGrid, ScalarField};

const FAR: f64 = 1e30;

/// Signed clearance raster: positive outside obstacles, non-positive inside.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDistanceField {
    field: ScalarField,
    max_cap: f64,
}

impl SignedDistanceField {
    /// Wraps an externally computed distance raster.
    pub fn from_parts(field: ScalarField, max_cap: f64) -> Self {
        SignedDistanceField { field, max_cap }
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn shape(&self) -> &GridShape {
        self.field.shape()
    }

    pub fn max_cap(&self) -> f64 {
        self.max_cap
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.field.at(ix, iy)
    }

    #[inline]
    pub fn sample(&self, p: [f64; 2]) -> FieldSample {
        self.field.sample(p)
    }

    /// Default cap: the longest side of the map.
    pub fn default_cap(shape: &GridShape) -> f64 {
        shape.width.max(shape.height) as f64 * shape.cell_size
    }
}

/// Signed distance field of `grid`, capped at `+/- max_cap` meters.
pub fn compute_sdf(grid: &OccupancyGrid, max_cap: f64) -> Result<SignedDistanceField> {
    let shape = *grid.shape();
    shape.validate()?;
    if !(max_cap > 0.0) {
        return Err(crate::Error::invalid("sdf cap must be positive"));
    }
    let to_obstacle = squared_edt(&shape, |i| grid.cells()[i] != 0);
    let to_free = squared_edt(&shape, |i| grid.cells()[i] == 0);
    let values = grid
        .cells()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let d = if c == 0 {
                to_obstacle[i].sqrt() * shape.cell_size
            } else {
                -to_free[i].sqrt() * shape.cell_size
            };
            d.clamp(-max_cap, max_cap)
        })
        .collect();
    Ok(SignedDistanceField {
        field: ScalarField::new(shape, values)?,
        max_cap,
    })
}

/// Squared distance (in cells) from every cell center to the nearest site.
fn squared_edt(shape: &GridShape, is_site: impl Fn(usize) -> bool) -> Vec<f64> {
    let (w, h) = (shape.width, shape.height);
    let mut grid: Vec<f64> = (0..w * h)
        .map(|i| if is_site(i) { 0.0 } else { FAR })
        .collect();

    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut d[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = d[y];
        }
    }
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut d[..w], &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&d[..w]);
    }
    grid
}

// Lower envelope of parabolas rooted at (q, f[q]).
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q] >= FAR {
            continue;
        }
        if f[v[0]] >= FAR {
            // First finite parabola replaces the placeholder.
            v[0] = q;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if f[v[0]] >= FAR {
        d.fill(FAR);
        return;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}
