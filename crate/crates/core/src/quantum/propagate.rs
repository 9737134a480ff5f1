use super::{AbsorberMask, Fft2, QuantumError, WaveField};
use crate::grid::GridSpec;
use crate::potential::SampledPotential;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Operator ordering of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    /// Half kick, full drift, half kick; second order.
    #[default]
    Strang,
    /// Full kick followed by a full drift; first order.
    Lie,
}

/// Precomputed phase factors for repeated steps on one grid.
#[derive(Debug)]
pub struct SplitStepper {
    fft: Fft2,
    /// Kinetic propagator in the transposed spectral layout, with the
    /// inverse-transform normalisation folded in.
    kinetic: Vec<Complex64>,
    kick: Option<Vec<Complex64>>,
    splitting: Splitting,
}

impl SplitStepper {
    pub fn new(
        grid: GridSpec,
        potential: &SampledPotential,
        dt: f64,
        hbar: f64,
        mass: f64,
        splitting: Splitting,
    ) -> Result<Self, QuantumError> {
        if potential.grid != grid {
            return Err(QuantumError::GridMismatch);
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(QuantumError::BadTimeStep(dt));
        }
        let (kx, ky) = (grid.kx(), grid.ky());
        let norm = 1.0 / grid.len() as f64;
        let mut kinetic = Vec::with_capacity(grid.len());
        for k1 in &kx {
            for k2 in &ky {
                let e = hbar * (k1 * k1 + k2 * k2) / (2.0 * mass);
                kinetic.push(Complex64::from_polar(norm, -e * dt));
            }
        }
        let kick_dt = match splitting {
            Splitting::Strang => 0.5 * dt,
            Splitting::Lie => dt,
        };
        let kick = (!potential.values.iter().all(|v| *v == 0.0))
            .then(|| potential.values.iter().map(|v| Complex64::from_polar(1.0, -v * kick_dt / hbar)).collect());
        Ok(Self { fft: Fft2::new(grid.nx, grid.ny), kinetic, kick, splitting })
    }

    fn apply_kick(&self, psi: &mut [Complex64]) {
        if let Some(k) = &self.kick {
            psi.iter_mut().zip(k).for_each(|(z, f)| *z *= f);
        }
    }

    pub fn step(&mut self, psi: &mut [Complex64]) {
        self.apply_kick(psi);
        self.fft.forward_t(psi);
        psi.iter_mut().zip(&self.kinetic).for_each(|(z, f)| *z *= f);
        self.fft.inverse_t(psi);
        if self.splitting == Splitting::Strang {
            self.apply_kick(psi);
        }
    }
}

/// One split-operator step with the symmetric ordering.
pub fn split_step(psi: &mut WaveField, potential: &SampledPotential, dt: f64) -> Result<(), QuantumError> {
    SplitStepper::new(psi.grid, potential, dt, psi.hbar, psi.mass, Splitting::Strang)?.step(&mut psi.amplitudes);
    psi.t += dt;
    Ok(())
}

/// Temporal apodisation of the energy filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Window {
    Rectangular,
    /// `sin^2(pi t / duration)` on `[0, duration]`.
    Hann { duration: f64 },
}

impl Window {
    pub fn weight(&self, t: f64) -> f64 {
        match *self {
            Window::Rectangular => 1.0,
            Window::Hann { duration } => {
                if (0.0..=duration).contains(&t) {
                    (PI * t / duration).sin().powi(2)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Running time-to-energy transform
/// `psi_E = sum_n exp(+i E t_n / hbar) psi(t_n) w(t_n) dt`.
///
/// The `+` sign makes a stationary state `exp(-i E t / hbar)` add up in
/// phase.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyAccumulator {
    pub energy: f64,
    pub grid: GridSpec,
    pub psi_e: Vec<Complex64>,
    pub t_weight: f64,
    pub window: Window,
}

impl EnergyAccumulator {
    pub fn new(energy: f64, grid: GridSpec, window: Window) -> Self {
        Self { energy, grid, psi_e: vec![Complex64::default(); grid.len()], t_weight: 0.0, window }
    }

    pub fn add(&mut self, psi: &WaveField, dt: f64) {
        let w = self.window.weight(psi.t) * dt;
        if w == 0.0 {
            return;
        }
        let f = Complex64::from_polar(w, self.energy * psi.t / psi.hbar);
        self.psi_e.iter_mut().zip(&psi.amplitudes).for_each(|(a, z)| *a += f * z);
        self.t_weight += w;
    }

    /// `sum |psi_E|^2 dx dy`
    pub fn norm(&self) -> f64 {
        self.psi_e.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn to_wave_field(&self, hbar: f64, mass: f64) -> Result<WaveField, QuantumError> {
        WaveField::new(self.grid, self.psi_e.clone())?.with_units(hbar, mass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumConfig {
    pub dt: f64,
    pub steps: usize,
    pub splitting: Splitting,
    /// Observer cadence in steps; 0 disables observation.
    pub cadence: usize,
}

impl QuantumConfig {
    pub fn new(dt: f64, steps: usize) -> Self {
        Self { dt, steps, splitting: Splitting::Strang, cadence: 0 }
    }

    pub fn with_splitting(mut self, splitting: Splitting) -> Self {
        self.splitting = splitting;
        self
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.cadence = cadence;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumReport {
    pub steps: usize,
    pub initial_norm: f64,
    pub final_norm: f64,
}

impl QuantumReport {
    pub fn norm_loss(&self) -> f64 {
        1.0 - self.final_norm / self.initial_norm
    }
}

const FINITE_CHECK: usize = 64;

/// Iterates split steps, then the mask, then every accumulator, and calls
/// `observer` every `cfg.cadence` steps. On a non-finite amplitude the
/// error carries the last finite snapshot.
pub fn propagate(
    psi: &mut WaveField,
    potential: &SampledPotential,
    cfg: &QuantumConfig,
    mask: Option<&AbsorberMask>,
    accumulators: &mut [EnergyAccumulator],
    observer: &mut dyn FnMut(usize, &WaveField),
) -> Result<QuantumReport, QuantumError> {
    if mask.is_some_and(|m| m.grid != psi.grid) || accumulators.iter().any(|a| a.grid != psi.grid) {
        return Err(QuantumError::GridMismatch);
    }
    let mut stepper = SplitStepper::new(psi.grid, potential, cfg.dt, psi.hbar, psi.mass, cfg.splitting)?;
    let initial_norm = psi.norm();
    let t0 = psi.t;
    let mut last_good = psi.clone();
    for n in 1..=cfg.steps {
        stepper.step(&mut psi.amplitudes);
        if let Some(m) = mask {
            psi.amplitudes.iter_mut().zip(&m.values).for_each(|(z, f)| *z *= f);
        }
        psi.t = t0 + n as f64 * cfg.dt;
        if n % FINITE_CHECK == 0 || n == cfg.steps {
            if !psi.is_finite() {
                return Err(QuantumError::NonFinite { step: n, snapshot: Box::new(last_good) });
            }
            last_good.clone_from(psi);
        }
        for acc in accumulators.iter_mut() {
            acc.add(psi, cfg.dt);
        }
        if cfg.cadence > 0 && n % cfg.cadence == 0 {
            observer(n, psi);
        }
    }
    Ok(QuantumReport { steps: cfg.steps, initial_norm, final_norm: psi.norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;
    use crate::quantum::{gaussian_packet, make_absorber, plane_wave, AbsorberGeometry};

    fn grid(n: usize, half: f64) -> GridSpec {
        GridSpec::spectral(n, n, Rect::centered(half)).unwrap()
    }

    fn free(g: GridSpec) -> SampledPotential {
        SampledPotential::constant(g, 0.0)
    }

    #[test]
    fn constant_potential_is_a_global_phase() {
        let g = grid(64, 10.0);
        let mut psi = gaussian_packet(g, [0.0, 0.0], 1.5, [0.5, 0.0]).unwrap();
        let mut reference = psi.clone();
        let (v0, dt, n) = (0.7, 0.05, 40);
        let cfg = QuantumConfig::new(dt, n);
        propagate(&mut psi, &SampledPotential::constant(g, v0), &cfg, None, &mut [], &mut |_, _| {}).unwrap();
        propagate(&mut reference, &free(g), &cfg, None, &mut [], &mut |_, _| {}).unwrap();
        let phase = Complex64::from_polar(1.0, -v0 * dt * n as f64);
        for (a, b) in psi.amplitudes.iter().zip(&reference.amplitudes) {
            assert!((a - b * phase).norm() < 1e-12);
            assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn unitary_per_step() {
        let g = grid(64, 10.0);
        let v = crate::potential::make_cosine_integrable(1.0).unwrap().sample_on_grid(&g).unwrap();
        let mut psi = gaussian_packet(g, [0.3, 0.0], 1.0, [1.0, 0.5]).unwrap();
        let mut st = SplitStepper::new(g, &v, 0.01, 1.0, 1.0, Splitting::Strang).unwrap();
        for _ in 0..100 {
            let n0 = psi.norm();
            st.step(&mut psi.amplitudes);
            assert!((psi.norm() - n0).abs() < 1e-12);
        }
    }

    #[test]
    fn strang_is_second_order() {
        let g = grid(64, 8.0);
        let v = crate::potential::make_cosine_integrable(2.0).unwrap().sample_on_grid(&g).unwrap();
        let psi0 = gaussian_packet(g, [0.5, -0.3], 1.0, [1.0, 0.0]).unwrap();
        let t = 1.0;
        let run = |dt: f64, s: Splitting| {
            let mut p = psi0.clone();
            let n = (t / dt).round() as usize;
            propagate(&mut p, &v, &QuantumConfig::new(dt, n).with_splitting(s), None, &mut [], &mut |_, _| {}).unwrap();
            p
        };
        let reference = run(0.1 / 64.0, Splitting::Strang);
        let err = |p: &WaveField| {
            p.amplitudes.iter().zip(&reference.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        };
        let (e1, e2) = (err(&run(0.1 / 2.0, Splitting::Strang)), err(&run(0.1 / 4.0, Splitting::Strang)));
        assert!((e1 / e2 - 4.0).abs() < 0.5, "ratio {}", e1 / e2);
        let (l1, l2) = (err(&run(0.1 / 2.0, Splitting::Lie)), err(&run(0.1 / 4.0, Splitting::Lie)));
        assert!((l1 / l2 - 2.0).abs() < 0.4, "lie ratio {}", l1 / l2);
    }

    #[test]
    fn time_reversal() {
        let g = grid(64, 8.0);
        let v = crate::potential::make_cosine_integrable(1.0).unwrap().sample_on_grid(&g).unwrap();
        let psi0 = gaussian_packet(g, [0.0, 0.0], 1.0, [1.5, -0.5]).unwrap();
        let mut p = psi0.clone();
        let cfg = QuantumConfig::new(0.02, 200);
        propagate(&mut p, &v, &cfg, None, &mut [], &mut |_, _| {}).unwrap();
        p.conjugate();
        propagate(&mut p, &v, &cfg, None, &mut [], &mut |_, _| {}).unwrap();
        p.conjugate();
        let d = p.amplitudes.iter().zip(&psi0.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn zero_strength_mask_is_bit_identical() {
        let g = grid(32, 8.0);
        let mask = make_absorber(g, &[AbsorberGeometry::Border { width: 2.5, strength: 0.0 }]).unwrap();
        let psi0 = gaussian_packet(g, [0.0, 0.0], 1.0, [2.0, 0.0]).unwrap();
        let cfg = QuantumConfig::new(0.05, 50);
        let (mut a, mut b) = (psi0.clone(), psi0);
        propagate(&mut a, &free(g), &cfg, Some(&mask), &mut [], &mut |_, _| {}).unwrap();
        propagate(&mut b, &free(g), &cfg, None, &mut [], &mut |_, _| {}).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linear_in_the_state() {
        let g = grid(32, 8.0);
        let v = crate::potential::make_cosine_integrable(1.0).unwrap().sample_on_grid(&g).unwrap();
        let psi0 = gaussian_packet(g, [0.0, 0.0], 1.0, [2.0, 0.0]).unwrap();
        let alpha = Complex64::new(0.3, -1.7);
        let cfg = QuantumConfig::new(0.05, 50);
        let mut a = psi0.clone();
        let mut acc_a = [EnergyAccumulator::new(1.3, g, Window::Hann { duration: 2.5 })];
        propagate(&mut a, &v, &cfg, None, &mut acc_a, &mut |_, _| {}).unwrap();
        let mut b = psi0;
        b.scale(alpha);
        let mut acc_b = [EnergyAccumulator::new(1.3, g, Window::Hann { duration: 2.5 })];
        propagate(&mut b, &v, &cfg, None, &mut acc_b, &mut |_, _| {}).unwrap();
        for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
            assert!((x * alpha - y).norm() < 1e-12);
        }
        for (x, y) in acc_a[0].psi_e.iter().zip(&acc_b[0].psi_e) {
            assert!((x * alpha - y).norm() < 1e-12);
        }
    }

    #[test]
    fn stationary_state_accumulates_coherently() {
        let l = 10.0;
        let g = grid(32, l / 2.0);
        let k = [2.0 * PI * 2.0 / l, 0.0];
        let e = k[0] * k[0] / 2.0;
        let (dt, n) = (0.01, 4000);
        let total = dt * n as f64;
        let run = |energy: f64, steps: usize, window: Window| {
            let mut psi = plane_wave(g, k).unwrap();
            let mut acc = [EnergyAccumulator::new(energy, g, window)];
            propagate(&mut psi, &free(g), &QuantumConfig::new(dt, steps), None, &mut acc, &mut |_, _| {}).unwrap();
            acc[0].norm().sqrt()
        };
        let (half, full) = (run(e, n / 2, Window::Rectangular), run(e, n, Window::Rectangular));
        assert!((full / half - 2.0).abs() < 1e-9, "{}", full / half);
        // Detuned far beyond 2 pi hbar / t_total.
        let de = 40.0 * 2.0 * PI / total;
        let off = run(e + de, n, Window::Rectangular);
        assert!(full / off > 100.0, "{}", full / off);
        let hann_on = run(e, n, Window::Hann { duration: total });
        let hann_off = run(e + de, n, Window::Hann { duration: total });
        assert!(hann_on / hann_off > 1e4);
    }

    #[test]
    fn non_finite_is_reported_with_snapshot() {
        let g = grid(16, 4.0);
        let mut psi = gaussian_packet(g, [0.0, 0.0], 1.0, [0.0, 0.0]).unwrap();
        psi.amplitudes[5] = Complex64::new(f64::NAN, 0.0);
        let err = propagate(&mut psi, &free(g), &QuantumConfig::new(0.1, 10), None, &mut [], &mut |_, _| {});
        assert!(matches!(err, Err(QuantumError::NonFinite { step: 10, .. })));
    }

    #[test]
    fn observer_cadence() {
        let g = grid(16, 4.0);
        let mut psi = gaussian_packet(g, [0.0, 0.0], 1.0, [0.0, 0.0]).unwrap();
        let mut seen = Vec::new();
        propagate(&mut psi, &free(g), &QuantumConfig::new(0.1, 10).with_cadence(3), None, &mut [], &mut |n, _| seen.push(n))
            .unwrap();
        assert_eq!(seen, vec![3, 6, 9]);
    }
}
