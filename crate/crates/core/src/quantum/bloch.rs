use super::{Fft2, QuantumError, WaveField};
use crate::grid::GridSpec;
use crate::potential::PotentialField;
use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

const CONVERGED: f64 = 1e-8;
const WARN_ABOVE: f64 = 1e-6;
const MAX_BASIS: usize = 1200;

#[derive(Debug, Clone)]
pub struct BlochState {
    pub psi: WaveField,
    /// Band energy from the plane-wave diagonalisation.
    pub energy: f64,
    /// Number of reciprocal vectors in the final basis.
    pub basis_size: usize,
    /// Change of the band energy at the last cutoff increase.
    pub cutoff_change: f64,
    /// Set when `cutoff_change` exceeds `1e-6`.
    pub warning: Option<String>,
}

/// Reciprocal vectors `(m, n)` with `|k + G|^2 <= kc^2` whose components
/// lie in the grid's wavenumber window `[-k_max, k_max)`, sorted for a
/// deterministic basis order. There are `range[ax]` candidates per axis.
fn basis(k: [f64; 2], b: [f64; 2], kc: f64, range: [usize; 2]) -> Vec<(i64, i64)> {
    // First index with k + m b >= -k_max, where k_max = range * b / 2.
    let first = |ax: usize| (-(range[ax] as f64) / 2.0 - k[ax] / b[ax] - 1e-9).ceil() as i64;
    let (m0, n0) = (first(0), first(1));
    let mut out = Vec::new();
    for n in n0..n0 + range[1] as i64 {
        for m in m0..m0 + range[0] as i64 {
            let (gx, gy) = (k[0] + m as f64 * b[0], k[1] + n as f64 * b[1]);
            if gx * gx + gy * gy <= kc * kc {
                out.push((m, n));
            }
        }
    }
    out
}

struct Diagonalised {
    energy: f64,
    coeffs: Vec<Complex64>,
    basis: Vec<(i64, i64)>,
}

/// Bloch eigenstate of `field` with quasi-momentum `k` in band `band`
/// (0 = lowest), tiled over the whole grid and normalised.
///
/// The grid must hold a whole number of periodic cells along each axis.
/// The Hamiltonian is the grid's own: plane waves `k + G` inside the grid's
/// wavenumber window, coupled by the (aliased) discrete Fourier
/// coefficients of the potential sampled on one cell. When the cell has at
/// most 1200 nodes the full problem is solved and, for `k` on the box's
/// reciprocal lattice, the result is an exact eigenstate of the split-step
/// propagator's Hamiltonian. Larger cells raise an energy cutoff until the
/// band energy changes by less than `1e-8`.
pub fn bloch_state(
    grid: GridSpec,
    field: &PotentialField,
    k: [f64; 2],
    band: usize,
    hbar: f64,
    mass: f64,
) -> Result<BlochState, QuantumError> {
    let grid = GridSpec::spectral(grid.nx, grid.ny, grid.extent)?;
    let extent = [grid.extent.width(), grid.extent.height()];
    let cell = match field.periodic_cell() {
        Some(c) => c,
        None if field.is_zero() => extent,
        None => return Err(QuantumError::NotPeriodic),
    };
    let mut per_cell = [0usize; 2];
    for ax in 0..2 {
        let cells = extent[ax] / cell[ax];
        let n = [grid.nx, grid.ny][ax];
        let whole = cells.round();
        if whole < 1.0 || (cells - whole).abs() > 1e-9 * cells || n % whole as usize != 0 {
            return Err(QuantumError::Incommensurate { cell, extent });
        }
        per_cell[ax] = n / whole as usize;
    }
    let [px, py] = per_cell;
    // Fourier coefficients of one cell, sampled on the grid nodes.
    let mut vc: Vec<Complex64> = Vec::with_capacity(px * py);
    for j in 0..py {
        for i in 0..px {
            vc.push(Complex64::new(field.eval([grid.x(i), grid.y(j)]), 0.0));
        }
    }
    Fft2::new(px, py).forward(&mut vc);
    let scale = 1.0 / (px * py) as f64;
    let v_g = |dm: i64, dn: i64| vc[dn.rem_euclid(py as i64) as usize * px + dm.rem_euclid(px as i64) as usize] * scale;
    let b = [2.0 * PI / cell[0], 2.0 * PI / cell[1]];
    let range = [px, py];
    let kinetic = hbar * hbar / (2.0 * mass);

    let solve = |kc: f64| -> Result<Diagonalised, QuantumError> {
        let basis = basis(k, b, kc, range);
        let size = basis.len();
        if band >= size {
            return Err(QuantumError::BadBand { band, size });
        }
        let h = DMatrix::from_fn(size, size, |r, c| {
            let (ga, gb) = (basis[r], basis[c]);
            let mut e = v_g(ga.0 - gb.0, ga.1 - gb.1);
            if r == c {
                let (qx, qy) = (k[0] + ga.0 as f64 * b[0], k[1] + ga.1 as f64 * b[1]);
                e += kinetic * (qx * qx + qy * qy);
            }
            e
        });
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let col = order[band];
        Ok(Diagonalised {
            energy: eig.eigenvalues[col],
            coeffs: eig.eigenvectors.column(col).iter().copied().collect(),
            basis,
        })
    };

    let mut change = 0.0;
    let mut current;
    if px * py <= MAX_BASIS {
        current = solve(f64::INFINITY)?;
    } else {
        // Start with roughly band + 30 plane waves and grow the cutoff radius.
        let area = b[0] * b[1];
        let mut kc = (((band + 30) as f64 * area / PI).sqrt()).max(k[0].hypot(k[1]) + b[0].min(b[1]));
        current = solve(kc)?;
        change = f64::INFINITY;
        loop {
            kc *= 1.25;
            let size = basis(k, b, kc, range).len();
            if size == current.basis.len() {
                continue;
            }
            if size > MAX_BASIS {
                break;
            }
            let next = solve(kc)?;
            change = (next.energy - current.energy).abs();
            current = next;
            if change < CONVERGED {
                break;
            }
        }
    }
    let warning = (change > WARN_ABOVE).then(|| {
        let msg = format!("Bloch band energy changed by {change:.2e} at the last cutoff increase");
        warn!("{msg}");
        msg
    });

    // psi(x, y) = sum_G c_G exp(i (k + G) . (r - r0)), r0 the grid origin;
    // summed row by row over the distinct G_y.
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut amps = vec![Complex64::default(); nx * ny];
    let mut rows: Vec<i64> = current.basis.iter().map(|g| g.1).collect();
    rows.sort_unstable();
    rows.dedup();
    let mut fx = vec![Complex64::default(); nx];
    for n in rows {
        fx.iter_mut().for_each(|z| *z = Complex64::default());
        for (g, c) in current.basis.iter().zip(&current.coeffs).filter(|(g, _)| g.1 == n) {
            let q = k[0] + g.0 as f64 * b[0];
            for (i, z) in fx.iter_mut().enumerate() {
                *z += c * Complex64::from_polar(1.0, q * i as f64 * dx);
            }
        }
        let qy = k[1] + n as f64 * b[1];
        for j in 0..ny {
            let e = Complex64::from_polar(1.0, qy * j as f64 * dy);
            for (z, f) in amps[j * nx..(j + 1) * nx].iter_mut().zip(&fx) {
                *z += f * e;
            }
        }
    }
    let mut psi = WaveField::new(grid, amps)?.with_units(hbar, mass)?;
    psi.normalize()?;
    Ok(BlochState { psi, energy: current.energy, basis_size: current.basis.len(), cutoff_change: change, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;
    use crate::potential::{make_cosine_integrable, make_fermi_lattice, make_zero, LatticeSpec};
    use crate::quantum::energy_expectation;
    use nalgebra::DMatrix;

    #[test]
    fn free_gamma_point_is_constant() {
        let g = GridSpec::spectral(32, 32, Rect::centered(4.0)).unwrap();
        let s = bloch_state(g, &make_zero(), [0.0, 0.0], 0, 1.0, 1.0).unwrap();
        let first = s.psi.amplitudes[0];
        assert!(s.psi.amplitudes.iter().all(|z| (z - first).norm() < 1e-12));
        assert!(s.energy.abs() < 1e-12);
    }

    #[test]
    fn free_band_zero_is_a_plane_wave() {
        let g = GridSpec::spectral(32, 32, Rect::centered(4.0)).unwrap();
        let k = [0.3, -0.2];
        let s = bloch_state(g, &make_zero(), k, 0, 1.0, 1.0).unwrap();
        let z0 = s.psi.amplitudes[0];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let want = z0 * Complex64::from_polar(1.0, k[0] * i as f64 * g.dx() + k[1] * j as f64 * g.dy());
                assert!((s.psi.amplitudes[g.index(i, j)] - want).norm() < 1e-12);
            }
        }
        assert!((s.energy - 0.5 * (k[0] * k[0] + k[1] * k[1])).abs() < 1e-12);
    }

    /// Band energy of `-1/2 d^2/dx^2 - A cos x` by its own tridiagonal
    /// plane-wave matrix.
    fn band_1d(a: f64, k: f64, band: usize) -> f64 {
        let m = 40i64;
        let n = (2 * m + 1) as usize;
        let h = DMatrix::from_fn(n, n, |r, c| {
            let (gr, gc) = (r as i64 - m, c as i64 - m);
            if r == c {
                0.5 * (k + gr as f64).powi(2)
            } else if (gr - gc).abs() == 1 {
                -a / 2.0
            } else {
                0.0
            }
        });
        let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e[band]
    }

    #[test]
    fn separable_band_matches_1d_oracle() {
        let two_pi = 2.0 * PI;
        let g = GridSpec::spectral(32, 32, Rect::new(0.0, 2.0 * two_pi, 0.0, 2.0 * two_pi)).unwrap();
        let field = make_cosine_integrable(1.5).unwrap();
        let v = field.sample_on_grid(&g).unwrap();
        for k in [[0.0, 0.0], [0.25, -0.4], [0.5, -0.5]] {
            let s = bloch_state(g, &field, k, 0, 1.0, 1.0).unwrap();
            let want = band_1d(1.5, k[0], 0) + band_1d(1.5, k[1], 0);
            assert!((s.energy - want).abs() < 1e-8, "{} vs {}", s.energy, want);
            assert!(s.warning.is_none());
            // Only box-periodic Bloch states are exact grid eigenstates.
            if k[0] * 2.0 == (k[0] * 2.0).round() && k[1] * 2.0 == (k[1] * 2.0).round() {
                let e = energy_expectation(&s.psi, &v).unwrap();
                assert!((e - s.energy).abs() < 1e-8, "{e} vs {}", s.energy);
            }
        }
    }

    #[test]
    fn requires_periodic_commensurate_field() {
        let g = GridSpec::spectral(32, 32, Rect::centered(5.0)).unwrap();
        let field = make_cosine_integrable(1.0).unwrap();
        assert!(matches!(bloch_state(g, &field, [0.0, 0.0], 0, 1.0, 1.0), Err(QuantumError::Incommensurate { .. })));
        let random = make_fermi_lattice(&LatticeSpec::random(1, 5, 0.5, Rect::centered(3.0)), 1.0, 0.3, 0.0).unwrap();
        assert!(matches!(bloch_state(g, &random, [0.0, 0.0], 0, 1.0, 1.0), Err(QuantumError::NotPeriodic)));
    }

    #[test]
    fn triangular_gamma_state_is_cell_periodic() {
        let a = 2.0;
        let cell = [a, a * 3f64.sqrt()];
        let ext = Rect::new(0.0, 2.0 * cell[0], 0.0, cell[1]);
        let spec = LatticeSpec::triangular(a, ext);
        let field = make_fermi_lattice(&spec, 1.0, 0.25, 0.0).unwrap();
        let g = GridSpec::spectral(32, 32, ext).unwrap();
        let s = bloch_state(g, &field, [0.0, 0.0], 0, 1.0, 1.0).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx / 2 {
                let (p, q) = (s.psi.amplitudes[g.index(i, j)], s.psi.amplitudes[g.index(i + g.nx / 2, j)]);
                assert!((p - q).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn stationary_under_split_step() {
        // Box-periodic Bloch states are eigenstates of the grid Hamiltonian,
        // so propagation only adds the phase exp(-i E t), up to the O(dt^2)
        // splitting error.
        let a = 2.0;
        let ext = Rect::new(0.0, 2.0 * a, 0.0, a * 3f64.sqrt());
        let field = make_fermi_lattice(&LatticeSpec::triangular(a, ext), 3.0, 0.25, 0.3).unwrap();
        let g = GridSpec::spectral(32, 32, ext).unwrap();
        let v = field.sample_on_grid(&g).unwrap();
        for band in 0..2 {
            let s = bloch_state(g, &field, [0.0, 0.0], band, 1.0, 1.0).unwrap();
            let mut psi = s.psi.clone();
            let (dt, n) = (1e-3, 100);
            crate::quantum::propagate(&mut psi, &v, &crate::quantum::QuantumConfig::new(dt, n), None, &mut [], &mut |_, _| {})
                .unwrap();
            let phase = Complex64::from_polar(1.0, -s.energy * dt * n as f64);
            let dev = (psi.amplitudes.iter().zip(&s.psi.amplitudes).map(|(p, q)| (p - q * phase).norm_sqr()).sum::<f64>()
                * g.cell_area())
            .sqrt();
            assert!(dev < 1e-5, "band {band}: {dev:e}");
        }
    }
}
