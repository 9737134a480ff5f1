//! Uniform rectangular grids shared by the classical histograms, the
//! quantum propagator and the grid file format.
//!
//! Nodes sit at `x0 + i * dx` for `i in 0..nx` with `dx = (x1 - x0) / nx`,
//! i.e. the right edge is excluded. This is the natural layout for a
//! periodic spectral grid and makes each node the lower-left corner of a
//! histogram cell `[x0 + i dx, x0 + (i + 1) dx)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least {min}x{min} nodes, got {nx}x{ny}")]
    TooSmall { nx: usize, ny: usize, min: usize },
    #[error("degenerate or non-finite extent [{x0}, {x1}] x [{y0}, {y1}]")]
    DegenerateExtent { x0: f64, x1: f64, y0: f64, y1: f64 },
}

/// Axis-aligned box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    /// Square box centred on the origin.
    pub fn centered(half_width: f64) -> Self {
        Self::new(-half_width, half_width, -half_width, half_width)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, r: [f64; 2]) -> bool {
        r[0] >= self.x0 && r[0] <= self.x1 && r[1] >= self.y0 && r[1] <= self.y1
    }

    pub fn is_valid(&self) -> bool {
        [self.x0, self.x1, self.y0, self.y1].iter().all(|v| v.is_finite())
            && self.x1 > self.x0
            && self.y1 > self.y0
    }

    pub fn expanded(&self, margin: f64) -> Self {
        Self::new(self.x0 - margin, self.x1 + margin, self.y0 - margin, self.y1 + margin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub extent: Rect,
}

impl GridSpec {
    pub const MIN_NODES: usize = 2;

    pub fn new(nx: usize, ny: usize, extent: Rect) -> Result<Self, GridError> {
        Self::with_min(nx, ny, extent, Self::MIN_NODES)
    }

    /// Grid for spectral wave propagation: at least 8 nodes per axis.
    pub fn spectral(nx: usize, ny: usize, extent: Rect) -> Result<Self, GridError> {
        Self::with_min(nx, ny, extent, 8)
    }

    fn with_min(
        nx: usize,
        ny: usize,
        extent: Rect,
        min: usize,
    ) -> Result<Self, GridError> {
        if nx < min || ny < min {
            return Err(GridError::TooSmall { nx, ny, min });
        }
        if !extent.is_valid() {
            return Err(GridError::DegenerateExtent {
                x0: extent.x0,
                x1: extent.x1,
                y0: extent.y0,
                y1: extent.y1,
            });
        }
        Ok(Self { nx, ny, extent })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.extent.width() / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.extent.height() / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.extent.x0 + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.extent.y0 + j as f64 * self.dy()
    }

    /// Row-major index; rows run along x.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Histogram cell containing `r`, if any.
    pub fn cell_of(&self, r: [f64; 2]) -> Option<(usize, usize)> {
        let fx = (r[0] - self.extent.x0) / self.dx();
        let fy = (r[1] - self.extent.y0) / self.dy();
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// Angular wavenumbers in FFT order for the x axis.
    pub fn kx(&self) -> Vec<f64> {
        wavenumbers(self.nx, self.dx())
    }

    pub fn ky(&self) -> Vec<f64> {
        wavenumbers(self.ny, self.dy())
    }

    pub fn k_max(&self) -> [f64; 2] {
        [PI / self.dx(), PI / self.dy()]
    }
}

/// Standard discrete ordering: `0, 1, .., n/2 - 1, -n/2, .., -1` times `2 pi / (n d)`.
pub fn wavenumbers(n: usize, d: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * d);
    (0..n)
        .map(|i| {
            let m = if i < n.div_ceil(2) { i as i64 } else { i as i64 - n as i64 };
            m as f64 * dk
        })
        .collect()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_ordering() {
        let k = wavenumbers(8, 0.5);
        let dk = 2.0 * PI / 4.0;
        let expect = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (a, b) in k.iter().zip(expect) {
            assert!((a - b * dk).abs() < 1e-14);
        }
        let g = GridSpec::new(8, 8, Rect::new(0.0, 4.0, 0.0, 4.0)).unwrap();
        assert!((g.k_max()[0] - PI / 0.5).abs() < 1e-14);
        assert!((k[4].abs() - g.k_max()[0]).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(GridSpec::new(0, 4, Rect::centered(1.0)).is_err());
        assert!(GridSpec::new(4, 4, Rect::new(0.0, 0.0, 0.0, 1.0)).is_err());
        assert!(GridSpec::new(4, 4, Rect::new(0.0, f64::NAN, 0.0, 1.0)).is_err());
    }

    #[test]
    fn cell_lookup() {
        let g = GridSpec::new(4, 2, Rect::new(0.0, 4.0, 0.0, 2.0)).unwrap();
        assert_eq!(g.cell_of([0.5, 1.5]), Some((0, 1)));
        assert_eq!(g.cell_of([3.999, 0.0]), Some((3, 0)));
        assert_eq!(g.cell_of([4.0, 0.0]), None);
        assert_eq!(g.cell_of([-0.1, 0.0]), None);
        assert_eq!(g.cell_of([f64::NAN, 0.0]), None);
    }
}
