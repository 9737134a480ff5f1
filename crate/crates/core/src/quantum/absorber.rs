use super::QuantumError;
use crate::grid::GridSpec;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Absorbing zone. Inside the zone the mask ramps smoothly from 1 at its
/// inner edge down to `1 - strength` over `width`, then stays there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum AbsorberGeometry {
    /// Frame of thickness `width` along all four edges of the box.
    Border { width: f64, strength: f64 },
    /// Disk of `radius` whose outer `width` is the ramp.
    Disk { center: [f64; 2], radius: f64, width: f64, strength: f64 },
}

impl AbsorberGeometry {
    fn width(&self) -> f64 {
        match *self {
            Self::Border { width, .. } | Self::Disk { width, .. } => width,
        }
    }

    fn strength(&self) -> f64 {
        match *self {
            Self::Border { strength, .. } | Self::Disk { strength, .. } => strength,
        }
    }

    /// Depth into the zone at `r`, negative outside.
    fn depth(&self, grid: &GridSpec, r: [f64; 2]) -> f64 {
        match *self {
            Self::Border { width, .. } => {
                let e = grid.extent;
                // The box is periodic, so the last node sits one spacing
                // before the wrap point x1.
                let to_edge = (r[0] - e.x0).min(e.x1 - r[0]).min(r[1] - e.y0).min(e.y1 - r[1]);
                width - to_edge
            }
            Self::Disk { center, radius, .. } => radius - (r[0] - center[0]).hypot(r[1] - center[1]),
        }
    }
}

/// Per-node multiplicative damping applied once per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorberMask {
    pub grid: GridSpec,
    pub zones: Vec<AbsorberGeometry>,
    pub values: Vec<f64>,
}

impl AbsorberMask {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_identity(&self) -> bool {
        self.values.iter().all(|v| *v == 1.0)
    }
}

/// Builds the product mask of all zones.
pub fn make_absorber(grid: GridSpec, zones: &[AbsorberGeometry]) -> Result<AbsorberMask, QuantumError> {
    let spacing = grid.dx().max(grid.dy());
    for z in zones {
        let (w, s) = (z.width(), z.strength());
        if !(w >= 4.0 * spacing) {
            return Err(QuantumError::AbsorberTooThin { width: w, cells: w / spacing });
        }
        if !(0.0..1.0).contains(&s) {
            return Err(QuantumError::BadStrength(s));
        }
        let fits = match *z {
            AbsorberGeometry::Border { width, .. } => {
                2.0 * width < grid.extent.width() && 2.0 * width < grid.extent.height()
            }
            AbsorberGeometry::Disk { center, radius, .. } => {
                radius >= w && grid.extent.expanded(-radius).contains(center)
            }
        };
        if !fits {
            return Err(QuantumError::ZoneOutsideGrid);
        }
    }
    let mut values = vec![1.0; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let r = [grid.x(i), grid.y(j)];
            for z in zones {
                let d = z.depth(&grid, r);
                if d > 0.0 {
                    let ramp = (PI * d.min(z.width()) / (2.0 * z.width())).sin().powi(2);
                    values[grid.index(i, j)] *= 1.0 - z.strength() * ramp;
                }
            }
        }
    }
    Ok(AbsorberMask { grid, zones: zones.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;

    fn grid() -> GridSpec {
        GridSpec::spectral(64, 64, Rect::centered(8.0)).unwrap()
    }

    #[test]
    fn zero_strength_is_identity() {
        let m = make_absorber(grid(), &[AbsorberGeometry::Border { width: 2.0, strength: 0.0 }]).unwrap();
        assert!(m.is_identity());
    }

    #[test]
    fn thin_or_strong_rejected() {
        assert!(matches!(
            make_absorber(grid(), &[AbsorberGeometry::Border { width: 0.5, strength: 0.1 }]),
            Err(QuantumError::AbsorberTooThin { .. })
        ));
        assert!(make_absorber(grid(), &[AbsorberGeometry::Border { width: 2.0, strength: 1.0 }]).is_err());
        let off = AbsorberGeometry::Disk { center: [7.5, 0.0], radius: 2.0, width: 1.0, strength: 0.1 };
        assert!(matches!(make_absorber(grid(), &[off]), Err(QuantumError::ZoneOutsideGrid)));
    }

    #[test]
    fn border_monotone_inward() {
        let g = grid();
        let m = make_absorber(g, &[AbsorberGeometry::Border { width: 3.0, strength: 0.2 }]).unwrap();
        let j = g.ny / 2;
        let row: Vec<f64> = (0..g.nx / 2).map(|i| m.values[g.index(i, j)]).collect();
        // From the edge toward the centre the mask never decreases.
        assert!(row.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(m.values[g.index(g.nx / 2, j)], 1.0);
        assert!((m.values[g.index(0, j)] - 0.8).abs() < 1e-12);
        assert!(m.min() > 0.0);
    }

    #[test]
    fn disk_profile() {
        let g = grid();
        let z = AbsorberGeometry::Disk { center: [0.0, 0.0], radius: 3.0, width: 1.0, strength: 0.5 };
        let m = make_absorber(g, &[z]).unwrap();
        let c = g.index(g.nx / 2, g.ny / 2);
        assert!((m.values[c] - 0.5).abs() < 1e-12);
        let i_out = g.cell_of([4.0, 0.0]).unwrap();
        assert_eq!(m.values[g.index(i_out.0, i_out.1)], 1.0);
        // Along the outward radius the mask rises monotonically.
        let line: Vec<f64> = (g.nx / 2..g.nx).map(|i| m.values[g.index(i, g.ny / 2)]).collect();
        assert!(line.windows(2).all(|w| w[1] >= w[0]));
    }
}
