use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldSample, GridShape, ScalarField};

/// A regularized point vortex used to synthesize ambient currents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexSpec {
    /// World position of the vortex core, meters.
    pub center: [f64; 2],
    /// Circulation in m^2/s; positive rotates counter-clockwise in the x-y plane.
    pub circulation: f64,
    pub core_radius: f64,
}

impl VortexSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.core_radius > 0.0) {
            return Err(Error::invalid(format!(
                "vortex core radius must be positive, got {}",
                self.core_radius
            )));
        }
        if !self.circulation.is_finite() || !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("vortex parameters must be finite"));
        }
        Ok(())
    }

    /// Lamb-Oseen tangential velocity induced at `p`.
    pub fn velocity_at(&self, p: [f64; 2]) -> [f64; 2] {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let r2 = dx * dx + dy * dy;
        if r2 == 0.0 {
            return [0.0, 0.0];
        }
        let rc2 = self.core_radius * self.core_radius;
        // Gamma / (2 pi r) * (1 - exp(-r^2/rc^2)) along the unit tangent (-dy, dx)/r.
        let k = self.circulation / (2.0 * PI * r2) * (1.0 - (-r2 / rc2).exp());
        [-dy * k, dx * k]
    }
}

/// Ambient current plus the derived scalar energy-consumption-rate raster.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentField {
    shape: GridShape,
    current: Vec<[f64; 2]>,
    energy_rate: ScalarField,
    max_current: f64,
    calm: bool,
}

impl EnvironmentField {
    /// Builds a field from a per-cell current raster, clamping every vector to
    /// `max_current` m/s.
    pub fn from_current(
        shape: GridShape,
        current: Vec<[f64; 2]>,
        max_current: f64,
    ) -> Result<Self> {
        shape.validate()?;
        if current.len() != shape.len() {
            return Err(Error::invalid(format!(
                "expected {} current vectors, got {}",
                shape.len(),
                current.len()
            )));
        }
        if !(max_current > 0.0) {
            return Err(Error::invalid("max current speed must be positive"));
        }
        if current
            .iter()
            .any(|c| !c[0].is_finite() || !c[1].is_finite())
        {
            return Err(Error::invalid("current field must be finite"));
        }
        let current: Vec<[f64; 2]> = current
            .into_iter()
            .map(|c| clamp_norm(c, max_current))
            .collect();
        let energy_rate = ScalarField::new(shape, energy_rate_from_current(&current))?;
        let calm = current.iter().all(|c| c[0] == 0.0 && c[1] == 0.0);
        Ok(EnvironmentField {
            shape,
            current,
            energy_rate,
            max_current,
            calm,
        })
    }

    /// A still-water field: zero current, zero energy rate.
    pub fn calm(shape: GridShape) -> Result<Self> {
        Self::from_current(shape, vec![[0.0, 0.0]; shape.len()], 1.0)
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn current(&self) -> &[[f64; 2]] {
        &self.current
    }

    pub fn current_at_cell(&self, ix: usize, iy: usize) -> [f64; 2] {
        self.current[self.shape.index(ix, iy)]
    }

    pub fn energy_rate(&self) -> &ScalarField {
        &self.energy_rate
    }

    pub fn max_current(&self) -> f64 {
        self.max_current
    }

    pub fn sample_energy(&self, p: [f64; 2]) -> FieldSample {
        self.energy_rate.sample(p)
    }

    /// Bilinearly interpolated current at `p` (clamped to the raster).
    pub fn sample_current(&self, p: [f64; 2]) -> [f64; 2] {
        let s = &self.shape;
        let max_x = (s.width - 1) as f64;
        let max_y = (s.height - 1) as f64;
        let fx = ((p[0] - s.origin[0]) / s.cell_size).clamp(0.0, max_x);
        let fy = ((p[1] - s.origin[1]) / s.cell_size).clamp(0.0, max_y);
        let (x0, x1, tx) = bracket(fx, s.width);
        let (y0, y1, ty) = bracket(fy, s.height);
        let c = |ix, iy| self.current[s.index(ix, iy)];
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            *o = (1.0 - tx) * (1.0 - ty) * c(x0, y0)[k]
                + tx * (1.0 - ty) * c(x1, y0)[k]
                + (1.0 - tx) * ty * c(x0, y1)[k]
                + tx * ty * c(x1, y1)[k];
        }
        out
    }

    pub fn is_calm(&self) -> bool {
        self.calm
    }

    /// Row-major CSV dump: `ix,iy,x,y,current_x,current_y,energy_rate`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "ix,iy,x,y,current_x,current_y,energy_rate")?;
        for iy in 0..self.shape.height {
            for ix in 0..self.shape.width {
                let p = self.shape.cell_center(ix, iy);
                let c = self.current_at_cell(ix, iy);
                writeln!(
                    w,
                    "{ix},{iy},{},{},{},{},{}",
                    p[0],
                    p[1],
                    c[0],
                    c[1],
                    self.energy_rate.at(ix, iy)
                )?;
            }
        }
        Ok(())
    }
}

fn bracket(f: f64, n: usize) -> (usize, usize, f64) {
    if n == 1 {
        return (0, 0, 0.0);
    }
    let i0 = (f.floor() as usize).min(n - 2);
    (i0, i0 + 1, f - i0 as f64)
}

fn clamp_norm(c: [f64; 2], max: f64) -> [f64; 2] {
    let n = c[0].hypot(c[1]);
    if n > max {
        [c[0] * max / n, c[1] * max / n]
    } else {
        c
    }
}

/// Sums the vortices' induced currents over every cell center of `shape`.
pub fn synth_vortex_field(
    vortices: &[VortexSpec],
    shape: GridShape,
    max_current: f64,
) -> Result<EnvironmentField> {
    shape.validate()?;
    for v in vortices {
        v.validate()?;
    }
    let mut current = Vec::with_capacity(shape.len());
    for iy in 0..shape.height {
        for ix in 0..shape.width {
            let p = shape.cell_center(ix, iy);
            let mut c = [0.0, 0.0];
            for v in vortices {
                let u = v.velocity_at(p);
                c[0] += u[0];
                c[1] += u[1];
            }
            current.push(c);
        }
    }
    EnvironmentField::from_current(shape, current, max_current)
}

/// Isotropic energy-rate proxy: current magnitude normalized by its maximum
/// over the field. A zero field maps to all zeros.
pub fn energy_rate_from_current(current: &[[f64; 2]]) -> Vec<f64> {
    let mags: Vec<f64> = current.iter().map(|c| c[0].hypot(c[1])).collect();
    let max = mags.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0.0; mags.len()];
    }
    mags.into_iter()
        .map(|m| (m / max).clamp(0.0, 1.0))
        .collect()
}
