use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raster geometry shared by every field type.
///
/// Cell `(ix, iy)` is sampled at its center, which sits at
/// `origin + (ix, iy) * cell_size` in world meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub origin: [f64; 2],
}

impl GridShape {
    pub fn new(width: usize, height: usize, cell_size: f64) -> Result<Self> {
        let shape = GridShape {
            width,
            height,
            cell_size,
            origin: [0.0, 0.0],
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid(format!(
                "grid must be non-empty, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::invalid(format!(
                "cell size must be positive, got {}",
                self.cell_size
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    #[inline]
    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.cell_size,
            self.origin[1] + iy as f64 * self.cell_size,
        ]
    }

    /// Cell whose center is nearest to `p`, or `None` outside the raster.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let fx = ((p[0] - self.origin[0]) / self.cell_size).round();
        let fy = ((p[1] - self.origin[1]) / self.cell_size).round();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// World-space extent covered by the cells (centers +/- half a cell).
    pub fn extent(&self) -> ([f64; 2], [f64; 2]) {
        let h = 0.5 * self.cell_size;
        (
            [self.origin[0] - h, self.origin[1] - h],
            [
                self.origin[0] + (self.width as f64 - 0.5) * self.cell_size,
                self.origin[1] + (self.height as f64 - 0.5) * self.cell_size,
            ],
        )
    }

    /// Whether `p` lies on the raster (within its outer cell edges).
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (min, max) = self.extent();
        p[0] >= min[0] && p[1] >= min[1] && p[0] < max[0] && p[1] < max[1]
    }
}

/// Binary obstacle raster: 1 = obstacle, 0 = free.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    shape: GridShape,
    cells: Vec<u8>,
}

impl OccupancyGrid {
    pub fn new(shape: GridShape, cells: Vec<u8>) -> Result<Self> {
        shape.validate()?;
        if cells.len() != shape.len() {
            return Err(Error::invalid(format!(
                "expected {} cells, got {}",
                shape.len(),
                cells.len()
            )));
        }
        let cells = cells.into_iter().map(|c| u8::from(c != 0)).collect();
        Ok(OccupancyGrid { shape, cells })
    }

    pub fn empty(width: usize, height: usize, cell_size: f64) -> Result<Self> {
        let shape = GridShape::new(width, height, cell_size)?;
        Ok(OccupancyGrid {
            cells: vec![0; shape.len()],
            shape,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        cell_size: f64,
        mut occupied: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let shape = GridShape::new(width, height, cell_size)?;
        let mut cells = Vec::with_capacity(shape.len());
        for iy in 0..height {
            for ix in 0..width {
                cells.push(u8::from(occupied(ix, iy)));
            }
        }
        Ok(OccupancyGrid { shape, cells })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn cell_size(&self) -> f64 {
        self.shape.cell_size
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.cells[self.shape.index(ix, iy)] != 0
    }

    pub fn set(&mut self, ix: usize, iy: usize, occupied: bool) {
        let i = self.shape.index(ix, iy);
        self.cells[i] = u8::from(occupied);
    }

    /// Occupancy of the cell nearest to `p`; points off the raster count as
    /// obstacles.
    pub fn is_occupied_at(&self, p: [f64; 2]) -> bool {
        match self.shape.cell_of(p) {
            Some((ix, iy)) => self.is_occupied(ix, iy),
            None => true,
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Self {
        self.shape.origin = origin;
        self
    }

    /// Reads an 8-bit binary PGM (P5). Pixels >= 128 are obstacles. A header
    /// comment of the form `# cell_size <meters>` sets the cell size.
    pub fn read_pgm(reader: impl Read) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let mut tokens: Vec<String> = Vec::new();
        let mut cell_size = 1.0;
        let mut line = String::new();
        while tokens.len() < 4 {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(Error::Format("truncated PGM header".into()));
            }
            let (content, comment) = match line.find('#') {
                Some(pos) => (&line[..pos], Some(&line[pos + 1..])),
                None => (line.as_str(), None),
            };
            if let Some(comment) = comment {
                let mut words = comment.split_whitespace();
                if words.next() == Some("cell_size") {
                    cell_size = words
                        .next()
                        .and_then(|w| w.parse::<f64>().ok())
                        .ok_or_else(|| Error::Format("malformed cell_size comment".into()))?;
                }
            }
            tokens.extend(content.split_whitespace().map(str::to_owned));
        }
        if tokens[0] != "P5" {
            return Err(Error::Format(format!(
                "expected binary PGM magic P5, found {}",
                tokens[0]
            )));
        }
        let parse = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad PGM {what}: {s}")))
        };
        let width = parse(&tokens[1], "width")?;
        let height = parse(&tokens[2], "height")?;
        let maxval = parse(&tokens[3], "maxval")?;
        if maxval == 0 || maxval > 255 {
            return Err(Error::Format(format!(
                "only 8-bit PGM is supported, maxval {maxval}"
            )));
        }
        let mut pixels = vec![0u8; width * height];
        reader
            .read_exact(&mut pixels)
            .map_err(|_| Error::Format("truncated PGM raster".into()))?;
        let shape = GridShape::new(width, height, cell_size)?;
        let cells = pixels.into_iter().map(|p| u8::from(p >= 128)).collect();
        OccupancyGrid::new(shape, cells)
    }

    pub fn write_pgm(&self, mut writer: impl Write) -> Result<()> {
        write!(
            writer,
            "P5\n# cell_size {}\n{} {}\n255\n",
            self.shape.cell_size, self.shape.width, self.shape.height
        )?;
        let raster: Vec<u8> = self
            .cells
            .iter()
            .map(|&c| if c != 0 { 255 } else { 0 })
            .collect();
        writer.write_all(&raster)?;
        Ok(())
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::read_pgm(file)
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        let mut w = std::io::BufWriter::new(file);
        self.write_pgm(&mut w)?;
        w.flush()?;
        Ok(())
    }
}
