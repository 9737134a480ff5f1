//! Split-operator wave propagation on periodic grids.
//!
//! Units default to `hbar = m = 1`. Wave fields live on the nodes of a
//! [`GridSpec`]; the box is periodic, so anything that should leave the
//! simulation has to be taken out by an absorber.

mod absorber;
mod bloch;
mod fft;
mod propagate;
mod superwire;

pub use absorber::{make_absorber, AbsorberGeometry, AbsorberMask};
pub use bloch::{bloch_state, BlochState};
pub use fft::Fft2;
pub use propagate::{
    propagate, split_step, EnergyAccumulator, QuantumConfig, QuantumReport, Splitting, SplitStepper, Window,
};
pub use superwire::{axial_spectrum, confinement_ratio, peak_offset_bins, superwire_filter, SuperwireConfig, SuperwireResult};

use crate::grid::{GridError, GridSpec};
use crate::potential::{PotentialError, SampledPotential};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("packet width {sigma} is not resolved by the grid spacing {spacing}")]
    Unresolved { sigma: f64, spacing: f64 },
    #[error("amplitude array has {got} entries, grid needs {want}")]
    ShapeMismatch { got: usize, want: usize },
    #[error("grids of the wave field and the potential differ")]
    GridMismatch,
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("hbar and mass must be positive")]
    BadUnits,
    #[error("field has no periodic cell")]
    NotPeriodic,
    #[error("grid extent {extent:?} is not a whole number of periodic cells {cell:?}")]
    Incommensurate { cell: [f64; 2], extent: [f64; 2] },
    #[error("absorber width {width} spans {cells:.1} cells, need at least 4")]
    AbsorberTooThin { width: f64, cells: f64 },
    #[error("absorber strength must lie in [0, 1), got {0}")]
    BadStrength(f64),
    #[error("absorbing zone does not fit in the grid")]
    ZoneOutsideGrid,
    #[error("band {band} not available, basis has {size} states")]
    BadBand { band: usize, size: usize },
    #[error("non-finite amplitude at step {step}")]
    NonFinite { step: usize, snapshot: Box<WaveField> },
    #[error("zero-norm wave field")]
    ZeroNorm,
}

/// Complex wave amplitude on the nodes of a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: GridSpec,
    pub amplitudes: Vec<Complex64>,
    pub t: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl WaveField {
    pub fn new(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let grid = GridSpec::spectral(grid.nx, grid.ny, grid.extent)?;
        if amplitudes.len() != grid.len() {
            return Err(QuantumError::ShapeMismatch { got: amplitudes.len(), want: grid.len() });
        }
        Ok(Self { grid, amplitudes, t: 0.0, hbar: 1.0, mass: 1.0 })
    }

    pub fn zeros(grid: GridSpec) -> Result<Self, QuantumError> {
        Self::new(grid, vec![Complex64::default(); grid.len()])
    }

    pub fn with_units(mut self, hbar: f64, mass: f64) -> Result<Self, QuantumError> {
        if !(hbar > 0.0 && mass > 0.0) {
            return Err(QuantumError::BadUnits);
        }
        self.hbar = hbar;
        self.mass = mass;
        Ok(self)
    }

    /// `sum |psi|^2 dx dy`
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn normalize(&mut self) -> Result<(), QuantumError> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(QuantumError::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|z| *z *= s);
        Ok(())
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn scale(&mut self, alpha: Complex64) {
        self.amplitudes.iter_mut().for_each(|z| *z *= alpha);
    }

    pub fn conjugate(&mut self) {
        self.amplitudes.iter_mut().for_each(|z| *z = z.conj());
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Density-weighted mean position (no periodic unwrapping).
    pub fn mean_position(&self) -> [f64; 2] {
        let (m, _) = self.position_moments();
        m
    }

    /// Per-axis position variance.
    pub fn position_variance(&self) -> [f64; 2] {
        let (m, s) = self.position_moments();
        [s[0] - m[0] * m[0], s[1] - m[1] * m[1]]
    }

    fn position_moments(&self) -> ([f64; 2], [f64; 2]) {
        let g = &self.grid;
        let (mut w, mut mx, mut my, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..g.ny {
            let y = g.y(j);
            for i in 0..g.nx {
                let x = g.x(i);
                let p = self.amplitudes[g.index(i, j)].norm_sqr();
                w += p;
                mx += p * x;
                my += p * y;
                sx += p * x * x;
                sy += p * y * y;
            }
        }
        ([mx / w, my / w], [sx / w, sy / w])
    }

    /// Spectral amplitudes in natural layout (unnormalised FFT).
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut s = self.amplitudes.clone();
        Fft2::new(self.grid.nx, self.grid.ny).forward(&mut s);
        s
    }

    pub fn mean_momentum(&self) -> [f64; 2] {
        let s = self.spectrum();
        let (kx, ky) = (self.grid.kx(), self.grid.ky());
        let (mut w, mut px, mut py) = (0.0, 0.0, 0.0);
        for (j, ky) in ky.iter().enumerate() {
            for (i, kx) in kx.iter().enumerate() {
                let p = s[j * self.grid.nx + i].norm_sqr();
                w += p;
                px += p * kx;
                py += p * ky;
            }
        }
        [self.hbar * px / w, self.hbar * py / w]
    }
}

/// `exp(-|r - c|^2 / (4 sigma0^2) + i k0 . r)`, normalised on the grid.
pub fn gaussian_packet(grid: GridSpec, center: [f64; 2], sigma0: f64, k0: [f64; 2]) -> Result<WaveField, QuantumError> {
    let spacing = grid.dx().max(grid.dy());
    if !(sigma0 > spacing) {
        return Err(QuantumError::Unresolved { sigma: sigma0, spacing });
    }
    let mut psi = WaveField::zeros(grid)?;
    let g = psi.grid;
    for j in 0..g.ny {
        let y = g.y(j);
        for i in 0..g.nx {
            let x = g.x(i);
            let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
            psi.amplitudes[g.index(i, j)] = Complex64::from_polar((-r2 / (4.0 * sigma0 * sigma0)).exp(), k0[0] * x + k0[1] * y);
        }
    }
    psi.normalize()?;
    Ok(psi)
}

/// `exp(i k . r)` normalised; an eigenstate of the periodic box when `k`
/// lies on the grid's reciprocal lattice.
pub fn plane_wave(grid: GridSpec, k: [f64; 2]) -> Result<WaveField, QuantumError> {
    let mut psi = WaveField::zeros(grid)?;
    let g = psi.grid;
    for j in 0..g.ny {
        for i in 0..g.nx {
            psi.amplitudes[g.index(i, j)] = Complex64::from_polar(1.0, k[0] * g.x(i) + k[1] * g.y(j));
        }
    }
    psi.normalize()?;
    Ok(psi)
}

/// `<p^2/2m + V>` with a spectral kinetic term and nodal quadrature for `V`.
pub fn energy_expectation(psi: &WaveField, potential: &SampledPotential) -> Result<f64, QuantumError> {
    if potential.grid != psi.grid {
        return Err(QuantumError::GridMismatch);
    }
    let s = psi.spectrum();
    let (kx, ky) = (psi.grid.kx(), psi.grid.ky());
    let (mut w, mut kin) = (0.0, 0.0);
    for (j, ky) in ky.iter().enumerate() {
        for (i, kx) in kx.iter().enumerate() {
            let p = s[j * psi.grid.nx + i].norm_sqr();
            w += p;
            kin += p * (kx * kx + ky * ky);
        }
    }
    let kinetic = psi.hbar * psi.hbar * kin / w / (2.0 * psi.mass);
    let (mut n, mut v) = (0.0, 0.0);
    for (z, pot) in psi.amplitudes.iter().zip(&potential.values) {
        let p = z.norm_sqr();
        n += p;
        v += p * pot;
    }
    Ok(kinetic + v / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;

    fn grid(n: usize, half: f64) -> GridSpec {
        GridSpec::spectral(n, n, Rect::centered(half)).unwrap()
    }

    #[test]
    fn spectral_grid_minimum() {
        assert!(WaveField::zeros(GridSpec::new(4, 16, Rect::centered(1.0)).unwrap()).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let g = grid(128, 16.0);
        let psi = gaussian_packet(g, [1.0, -2.0], 1.5, [0.7, -0.4]).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let m = psi.mean_position();
        assert!((m[0] - 1.0).abs() < 1e-9 && (m[1] + 2.0).abs() < 1e-9);
        let p = psi.mean_momentum();
        assert!((p[0] - 0.7).abs() < 1e-9 && (p[1] + 0.4).abs() < 1e-9);
        let v = psi.position_variance();
        assert!((v[0] - 2.25).abs() < 1e-9);
    }

    #[test]
    fn unresolved_packet_rejected() {
        let g = grid(32, 16.0);
        assert!(matches!(gaussian_packet(g, [0.0, 0.0], 0.9, [0.0, 0.0]), Err(QuantumError::Unresolved { .. })));
    }

    #[test]
    fn gaussian_energy_two_dimensional() {
        // Each axis carries momentum variance 1/(4 sigma^2), so the 2D
        // kinetic energy is (|k0|^2 + 1/(2 sigma^2)) / 2.
        let g = grid(256, 20.0);
        let (s, k0) = (1.2, [1.1, 0.6]);
        let psi = gaussian_packet(g, [0.0, 0.0], s, k0).unwrap();
        let e = energy_expectation(&psi, &SampledPotential::constant(g, 0.0)).unwrap();
        let want = (k0[0] * k0[0] + k0[1] * k0[1] + 1.0 / (2.0 * s * s)) / 2.0;
        assert!((e - want).abs() < 1e-8, "{e} vs {want}");
    }

    #[test]
    fn plane_wave_energy_and_constant_shift() {
        let g = grid(32, 5.0);
        let k = [2.0 * std::f64::consts::PI * 3.0 / 10.0, 0.0];
        let psi = plane_wave(g, k).unwrap();
        let e0 = energy_expectation(&psi, &SampledPotential::constant(g, 0.0)).unwrap();
        assert!((e0 - k[0] * k[0] / 2.0).abs() < 1e-12);
        let e1 = energy_expectation(&psi, &SampledPotential::constant(g, 0.75)).unwrap();
        assert!((e1 - e0 - 0.75).abs() < 1e-12);
    }
}
