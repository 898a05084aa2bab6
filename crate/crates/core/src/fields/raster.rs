use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::GridShape;

/// Result of a continuous field query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    /// Derivative of the bilinear surface, per meter.
    pub gradient: [f64; 2],
    /// The query point fell outside the span of cell centers and was moved
    /// onto the nearest boundary before interpolation.
    pub clamped: bool,
}

/// Scalar raster sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    shape: GridShape,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if values.len() != shape.len() {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                shape.len(),
                values.len()
            )));
        }
        Ok(ScalarField { shape, values })
    }

    pub fn filled(shape: GridShape, value: f64) -> Result<Self> {
        Self::new(shape, vec![value; shape.len()])
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.shape.index(ix, iy)]
    }

    /// Bilinear interpolation of the cell-center samples at world point `p`.
    ///
    /// Points outside the span of centers are clamped onto it. The reported
    /// gradient is that of the bilinear patch at the clamped point, so a
    /// caller descending the field keeps a restoring direction at the edge.
    pub fn sample(&self, p: [f64; 2]) -> FieldSample {
        let s = &self.shape;
        let mut fx = (p[0] - s.origin[0]) / s.cell_size;
        let mut fy = (p[1] - s.origin[1]) / s.cell_size;
        let max_x = (s.width - 1) as f64;
        let max_y = (s.height - 1) as f64;
        let mut clamped = false;
        if !(0.0..=max_x).contains(&fx) {
            fx = fx.clamp(0.0, max_x);
            clamped = true;
        }
        if !(0.0..=max_y).contains(&fy) {
            fy = fy.clamp(0.0, max_y);
            clamped = true;
        }
        if fx.is_nan() || fy.is_nan() {
            fx = 0.0;
            fy = 0.0;
            clamped = true;
        }

        let (ix0, ix1, tx) = bracket(fx, s.width);
        let (iy0, iy1, ty) = bracket(fy, s.height);
        let v00 = self.at(ix0, iy0);
        let v10 = self.at(ix1, iy0);
        let v01 = self.at(ix0, iy1);
        let v11 = self.at(ix1, iy1);

        let value = (1.0 - tx) * (1.0 - ty) * v00
            + tx * (1.0 - ty) * v10
            + (1.0 - tx) * ty * v01
            + tx * ty * v11;
        let gx = if ix0 == ix1 {
            0.0
        } else {
            ((1.0 - ty) * (v10 - v00) + ty * (v11 - v01)) / s.cell_size
        };
        let gy = if iy0 == iy1 {
            0.0
        } else {
            ((1.0 - tx) * (v01 - v00) + tx * (v11 - v10)) / s.cell_size
        };
        FieldSample {
            value,
            gradient: [gx, gy],
            clamped,
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Row-major CSV dump, one line per cell: `ix,iy,x,y,value`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "ix,iy,x,y,value")?;
        for iy in 0..self.shape.height {
            for ix in 0..self.shape.width {
                let c = self.shape.cell_center(ix, iy);
                writeln!(w, "{ix},{iy},{},{},{}", c[0], c[1], self.at(ix, iy))?;
            }
        }
        Ok(())
    }
}

// Lower/upper cell index and fractional offset for a clamped coordinate.
fn bracket(f: f64, n: usize) -> (usize, usize, f64) {
    if n == 1 {
        return (0, 0, 0.0);
    }
    let i0 = (f.floor() as usize).min(n - 2);
    (i0, i0 + 1, f - i0 as f64)
}
