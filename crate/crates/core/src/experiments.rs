//! Composite measurements built from the physics modules: density
//! contrasts, classical/quantum comparisons and the shadow test.

use crate::classical::{
    default_cadence, propagate_ensemble, sample_gaussian_source, ClassicalError, DensityGrid, Integrator,
    PropagationConfig,
};
use crate::grid::{GridSpec, Rect};
use crate::potential::{make_zero, PotentialField};
use crate::quantum::{
    gaussian_packet, make_absorber, propagate, AbsorberGeometry, QuantumConfig, QuantumError, WaveField,
};
use serde::{Deserialize, Serialize};

/// Mean cell value on the two axis-aligned arms through `center`
/// (`|dx| < half_width` or `|dy| < half_width`) divided by the mean over
/// cells off both arms. Cells closer than `r_min` to the centre are
/// ignored on both sides.
pub fn cross_arm_contrast(values: &[f64], grid: &GridSpec, center: [f64; 2], half_width: f64, r_min: f64) -> f64 {
    let (mut arm, mut n_arm, mut bg, mut n_bg) = (0.0, 0usize, 0.0, 0usize);
    for j in 0..grid.ny {
        let dy = grid.y(j) + 0.5 * grid.dy() - center[1];
        for i in 0..grid.nx {
            let dx = grid.x(i) + 0.5 * grid.dx() - center[0];
            if dx.hypot(dy) < r_min {
                continue;
            }
            let v = values[grid.index(i, j)];
            if dx.abs() < half_width || dy.abs() < half_width {
                arm += v;
                n_arm += 1;
            } else {
                bg += v;
                n_bg += 1;
            }
        }
    }
    (arm / n_arm as f64) / (bg / n_bg as f64)
}

/// Sums `factor x factor` blocks; the grid dimensions must be multiples of
/// `factor`.
pub fn coarse_grain(values: &[f64], grid: &GridSpec, factor: usize) -> (Vec<f64>, GridSpec) {
    assert!(factor > 0 && grid.nx % factor == 0 && grid.ny % factor == 0, "factor must divide the grid");
    let (cx, cy) = (grid.nx / factor, grid.ny / factor);
    let mut out = vec![0.0; cx * cy];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            out[(j / factor) * cx + i / factor] += values[grid.index(i, j)];
        }
    }
    (out, GridSpec::new(cx, cy, grid.extent).expect("coarse grid"))
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x - ma, y - mb);
        sab += u * v;
        saa += u * u;
        sbb += v * v;
    }
    sab / (saa * sbb).sqrt()
}

/// Nodes within the annular sector around `apex` opening along
/// `direction` with half angle `half_angle`, between radii `r_min` and
/// `r_max`.
pub fn wedge_mask(grid: &GridSpec, apex: [f64; 2], direction: [f64; 2], half_angle: f64, r_min: f64, r_max: f64) -> Vec<bool> {
    let norm = direction[0].hypot(direction[1]);
    let u = [direction[0] / norm, direction[1] / norm];
    let cos_max = half_angle.cos();
    let mut m = vec![false; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (dx, dy) = (grid.x(i) - apex[0], grid.y(j) - apex[1]);
            let r = dx.hypot(dy);
            if r >= r_min && r <= r_max && (dx * u[0] + dy * u[1]) >= r * cos_max {
                m[grid.index(i, j)] = true;
            }
        }
    }
    m
}

pub fn masked_sum(values: &[f64], mask: &[bool]) -> f64 {
    values.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| v).sum()
}

/// Propagates `psi` and returns `sum_n |psi(t_n)|^2 dt` per node.
pub fn time_integrated_density(
    psi: &mut WaveField,
    field: &PotentialField,
    dt: f64,
    steps: usize,
    absorbers: &[AbsorberGeometry],
) -> Result<Vec<f64>, QuantumError> {
    let v = field.sample_on_grid(&psi.grid)?;
    let mask = if absorbers.is_empty() { None } else { Some(make_absorber(psi.grid, absorbers)?) };
    let mut acc = vec![0.0; psi.grid.len()];
    let cfg = QuantumConfig::new(dt, steps).with_cadence(1);
    propagate(psi, &v, &cfg, mask.as_ref(), &mut [], &mut |_, p| {
        acc.iter_mut().zip(&p.amplitudes).for_each(|(a, z)| *a += z.norm_sqr() * dt);
    })?;
    Ok(acc)
}

/// Packet launched at an absorbing disk, with and without a lattice.
#[derive(Debug, Clone)]
pub struct ShadowSetup {
    pub grid: GridSpec,
    pub lattice: PotentialField,
    pub center: [f64; 2],
    pub sigma0: f64,
    pub k0: [f64; 2],
    pub hbar: f64,
    pub mass: f64,
    pub dt: f64,
    pub steps: usize,
    /// Absorbers present in every run (typically a border frame).
    pub frame: Vec<AbsorberGeometry>,
    pub disk_center: [f64; 2],
    pub disk_radius: f64,
    pub disk_width: f64,
    pub disk_strength: f64,
    pub wedge_half_angle: f64,
    pub wedge_depth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShadowOutcome {
    pub lattice_with_disk: Vec<f64>,
    pub lattice_without_disk: Vec<f64>,
    pub free_with_disk: Vec<f64>,
    pub free_without_disk: Vec<f64>,
    pub wedge: Vec<bool>,
    /// Wedge-integrated density with the disk over the same potential
    /// without it.
    pub lattice_ratio: f64,
    pub free_ratio: f64,
}

impl ShadowSetup {
    pub fn disk(&self) -> AbsorberGeometry {
        AbsorberGeometry::Disk {
            center: self.disk_center,
            radius: self.disk_radius,
            width: self.disk_width,
            strength: self.disk_strength,
        }
    }

    /// Sector behind the disk along the packet's direction of motion.
    pub fn wedge(&self) -> Vec<bool> {
        wedge_mask(&self.grid, self.disk_center, self.k0, self.wedge_half_angle, self.disk_radius, self.disk_radius + self.wedge_depth)
    }

    fn run(&self, field: &PotentialField, with_disk: bool) -> Result<Vec<f64>, QuantumError> {
        let mut psi = gaussian_packet(self.grid, self.center, self.sigma0, self.k0)?.with_units(self.hbar, self.mass)?;
        let mut zones = self.frame.clone();
        if with_disk {
            zones.push(self.disk());
        }
        time_integrated_density(&mut psi, field, self.dt, self.steps, &zones)
    }
}

pub fn shadow_comparison(setup: &ShadowSetup) -> Result<ShadowOutcome, QuantumError> {
    let free = make_zero();
    let wedge = setup.wedge();
    let lattice_with_disk = setup.run(&setup.lattice, true)?;
    let lattice_without_disk = setup.run(&setup.lattice, false)?;
    let free_with_disk = setup.run(&free, true)?;
    let free_without_disk = setup.run(&free, false)?;
    let ratio = |a: &[f64], b: &[f64]| masked_sum(a, &wedge) / masked_sum(b, &wedge);
    Ok(ShadowOutcome {
        lattice_ratio: ratio(&lattice_with_disk, &lattice_without_disk),
        free_ratio: ratio(&free_with_disk, &free_without_disk),
        lattice_with_disk,
        lattice_without_disk,
        free_with_disk,
        free_without_disk,
        wedge,
    })
}

/// Same Gaussian initial condition evolved as a wave and as a classical
/// Wigner cloud, compared at one time on a coarse grid.
#[derive(Debug, Clone)]
pub struct CorrespondenceSetup {
    pub grid: GridSpec,
    pub center: [f64; 2],
    pub sigma0: f64,
    pub k0: [f64; 2],
    pub hbar: f64,
    pub time: f64,
    pub quantum_dt: f64,
    pub classical_dt: f64,
    pub samples: usize,
    pub seed: u64,
    /// Block size of the coarse comparison grid in fine cells.
    pub coarse: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Correspondence {
    pub quantum: Vec<f64>,
    pub classical: Vec<f64>,
    pub coarse_grid: GridSpec,
    pub pearson: f64,
    pub norm: f64,
    pub classical_in_grid: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
}

pub fn classical_quantum_correspondence(
    field: &PotentialField,
    setup: &CorrespondenceSetup,
) -> Result<Correspondence, ExperimentError> {
    let g = setup.grid;
    let mut psi = gaussian_packet(g, setup.center, setup.sigma0, setup.k0)?.with_units(setup.hbar, 1.0)?;
    let v = field.sample_on_grid(&g).map_err(QuantumError::from)?;
    let steps = (setup.time / setup.quantum_dt).round() as usize;
    propagate(&mut psi, &v, &QuantumConfig::new(setup.quantum_dt, steps), None, &mut [], &mut |_, _| {})?;
    let norm = psi.norm();
    let (quantum, coarse_grid) = coarse_grain(&psi.density(), &g, setup.coarse);

    let momentum = [setup.hbar * setup.k0[0], setup.hbar * setup.k0[1]];
    let mut e = sample_gaussian_source(setup.center, setup.sigma0, momentum, setup.hbar, setup.samples, setup.seed, field)?;
    let n = (setup.time / setup.classical_dt).round() as usize;
    let cfg = PropagationConfig::new(setup.classical_dt, n).with_integrator(Integrator::Yoshida4).with_cadence(default_cadence(setup.classical_dt).max(n));
    propagate_ensemble(&mut e, field, &cfg, &mut ())?;
    // The wave lives on a periodic box; fold classical positions back in.
    let ext: Rect = g.extent;
    let fold = |v: f64, lo: f64, w: f64| lo + (v - lo).rem_euclid(w);
    let mut d = DensityGrid::new(coarse_grid);
    for p in &e.points {
        d.add([fold(p.x, ext.x0, ext.width()), fold(p.y, ext.y0, ext.height())]);
    }
    let classical = d.as_f64();
    Ok(Correspondence { pearson: pearson(&quantum, &classical), quantum, classical, coarse_grid, norm, classical_in_grid: d.in_grid() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_limits() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&a, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-12);
        assert!((pearson(&a, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn coarse_grain_conserves_sum() {
        let g = GridSpec::new(8, 4, Rect::centered(1.0)).unwrap();
        let v: Vec<f64> = (0..32).map(|i| i as f64).collect();
        let (c, cg) = coarse_grain(&v, &g, 2);
        assert_eq!((cg.nx, cg.ny), (4, 2));
        assert_eq!(c.iter().sum::<f64>(), v.iter().sum::<f64>());
        assert_eq!(c[0], 0.0 + 1.0 + 8.0 + 9.0);
    }

    #[test]
    fn wedge_geometry() {
        let g = GridSpec::new(64, 64, Rect::centered(8.0)).unwrap();
        let m = wedge_mask(&g, [0.0, 0.0], [0.0, -1.0], 0.3, 2.0, 6.0);
        for j in 0..g.ny {
            for i in 0..g.nx {
                if m[g.index(i, j)] {
                    let (x, y) = (g.x(i), g.y(j));
                    assert!(y < 0.0 && x.abs() <= -y * 0.3f64.tan() + 1e-12);
                }
            }
        }
        assert!(m.iter().any(|b| *b));
    }

    #[test]
    fn uniform_cross_contrast_is_one() {
        let g = GridSpec::new(40, 40, Rect::centered(20.0)).unwrap();
        let c = cross_arm_contrast(&vec![3.0; g.len()], &g, [0.0, 0.0], 2.0, 4.0);
        assert!((c - 1.0).abs() < 1e-12);
    }
}
