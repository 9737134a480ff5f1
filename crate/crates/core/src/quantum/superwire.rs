use super::{
    gaussian_packet, make_absorber, propagate, AbsorberGeometry, EnergyAccumulator, QuantumConfig, QuantumError,
    QuantumReport, WaveField, Window,
};
use crate::grid::GridSpec;
use crate::potential::PotentialField;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Packet injected along `+x` into a channel, filtered at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperwireConfig {
    pub grid: GridSpec,
    pub hbar: f64,
    pub mass: f64,
    pub center: [f64; 2],
    pub sigma0: f64,
    /// Axial wavenumber of the packet.
    pub k0: f64,
    /// Filter energy; defaults to the packet's kinetic energy `hbar^2 k0^2 / 2m`.
    pub energy: Option<f64>,
    pub dt: f64,
    pub steps: usize,
    pub absorber_width: f64,
    pub absorber_strength: f64,
    /// Channel axis `y = channel_y` and half width of the band counted as
    /// inside the channel.
    pub channel_y: f64,
    pub channel_half_width: f64,
    pub window: Option<Window>,
}

impl SuperwireConfig {
    pub fn energy(&self) -> f64 {
        self.energy.unwrap_or(self.hbar * self.hbar * self.k0 * self.k0 / (2.0 * self.mass))
    }
}

#[derive(Debug, Clone)]
pub struct SuperwireResult {
    /// `psi_E` normalised to unit norm.
    pub psi_e: WaveField,
    /// Fraction of `|psi_E|^2` inside the channel band, counted over the
    /// columns outside the absorbing frame.
    pub confinement_ratio: f64,
    pub report: QuantumReport,
    pub energy: f64,
}

/// Fraction of the norm of `psi` within `|y - y0| < half_width`, over the
/// columns `x0 + margin <= x < x1 - margin`.
pub fn confinement_ratio(psi: &WaveField, y0: f64, half_width: f64, margin: f64) -> f64 {
    let g = &psi.grid;
    let (mut inside, mut total) = (0.0, 0.0);
    for j in 0..g.ny {
        let in_band = (g.y(j) - y0).abs() < half_width;
        for i in 0..g.nx {
            let x = g.x(i);
            if x < g.extent.x0 + margin || x >= g.extent.x1 - margin {
                continue;
            }
            let p = psi.amplitudes[g.index(i, j)].norm_sqr();
            total += p;
            if in_band {
                inside += p;
            }
        }
    }
    inside / total
}

pub fn superwire_filter(field: &PotentialField, cfg: &SuperwireConfig) -> Result<SuperwireResult, QuantumError> {
    let grid = cfg.grid;
    let potential = field.sample_on_grid(&grid)?;
    let mut psi = gaussian_packet(grid, cfg.center, cfg.sigma0, [cfg.k0, 0.0])?.with_units(cfg.hbar, cfg.mass)?;
    let mask = make_absorber(grid, &[AbsorberGeometry::Border { width: cfg.absorber_width, strength: cfg.absorber_strength }])?;
    let energy = cfg.energy();
    let window = cfg.window.unwrap_or(Window::Hann { duration: cfg.dt * cfg.steps as f64 });
    let mut acc = [EnergyAccumulator::new(energy, grid, window)];
    let report = propagate(&mut psi, &potential, &QuantumConfig::new(cfg.dt, cfg.steps), Some(&mask), &mut acc, &mut |_, _| {})?;
    let mut psi_e = acc[0].to_wave_field(cfg.hbar, cfg.mass)?;
    psi_e.normalize()?;
    let confinement_ratio = confinement_ratio(&psi_e, cfg.channel_y, cfg.channel_half_width, cfg.absorber_width);
    Ok(SuperwireResult { psi_e, confinement_ratio, report, energy })
}

/// Power spectrum along x of the rows inside `|y - y0| < half_width`,
/// summed over those rows. Returns `(k, power)` sorted by `k`.
pub fn axial_spectrum(psi: &WaveField, y0: f64, half_width: f64) -> Vec<(f64, f64)> {
    let g: GridSpec = psi.grid;
    let fft = FftPlanner::new().plan_fft_forward(g.nx);
    let mut power = vec![0.0; g.nx];
    let mut row = vec![Default::default(); g.nx];
    for j in (0..g.ny).filter(|&j| (g.y(j) - y0).abs() < half_width) {
        row.copy_from_slice(&psi.amplitudes[j * g.nx..(j + 1) * g.nx]);
        fft.process(&mut row);
        for (p, z) in power.iter_mut().zip(&row) {
            *p += z.norm_sqr();
        }
    }
    let mut out: Vec<(f64, f64)> = g.kx().into_iter().zip(power).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Strongest component of an axial spectrum and its distance, in bins of
/// `dk`, from the nearest reciprocal-lattice wavenumber `2 pi n / period`.
pub fn peak_offset_bins(spectrum: &[(f64, f64)], period: f64, dk: f64) -> (f64, f64) {
    let (k, _) = spectrum.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap_or((f64::NAN, 0.0));
    let g = 2.0 * std::f64::consts::PI / period;
    let nearest = (k / g).round() * g;
    (k, (k - nearest).abs() / dk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;
    use crate::potential::make_zero;
    use std::f64::consts::PI;

    #[test]
    fn spectrum_of_plane_wave_peaks_at_its_k() {
        let g = GridSpec::spectral(64, 16, Rect::new(0.0, 10.0, -2.0, 2.0)).unwrap();
        let k = 2.0 * PI * 7.0 / 10.0;
        let psi = crate::quantum::plane_wave(g, [k, 0.0]).unwrap();
        let s = axial_spectrum(&psi, 0.0, 1.0);
        let peak = s.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        assert!((peak.0 - k).abs() < 1e-12);
    }

    #[test]
    fn free_beam_spreads_out_of_the_band() {
        let g = GridSpec::spectral(128, 64, Rect::new(0.0, 20.0, -8.0, 8.0)).unwrap();
        let cfg = SuperwireConfig {
            grid: g,
            hbar: 1.0,
            mass: 1.0,
            center: [3.5, 0.0],
            sigma0: 0.5,
            k0: 4.0,
            energy: None,
            dt: 0.02,
            steps: 300,
            absorber_width: 2.0,
            absorber_strength: 0.1,
            channel_y: 0.0,
            channel_half_width: 1.0,
            window: None,
        };
        let r = superwire_filter(&make_zero(), &cfg).unwrap();
        assert!((r.psi_e.norm() - 1.0).abs() < 1e-12);
        assert!(r.confinement_ratio < 0.9, "{}", r.confinement_ratio);
        assert!((r.energy - 8.0).abs() < 1e-12);
    }
}
