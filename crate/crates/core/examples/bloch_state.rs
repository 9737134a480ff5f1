//! Lowest-band Bloch states of the triangular Fermi lattice from a
//! plane-wave diagonalisation, checked for stationarity under the
//! split-step propagator.
//!
//!     cargo run --release --example bloch_state [out_dir]

use branchflow::grid::{GridSpec, Rect};
use branchflow::io::render_gray;
use branchflow::potential::{make_fermi_lattice, LatticeSpec};
use branchflow::quantum::{bloch_state, energy_expectation, propagate, QuantumConfig};
use num_complex::Complex64;
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/examples/bloch".into()));
    std::fs::create_dir_all(&out)?;
    let h = 1.5 * 3f64.sqrt();
    let lattice = LatticeSpec::triangular(3.0, Rect::centered(20.0)).with_origin([1.5, h / 3.0]);
    let field = make_fermi_lattice(&lattice, 6.203, 0.25, 0.7)?;
    // 10 x 6 rectangular cells of 3 x 3 sqrt 3.
    let grid = GridSpec::spectral(160, 168, Rect::new(-15.0, 15.0, -6.0 * h, 6.0 * h))?;
    let v = field.sample_on_grid(&grid)?;
    for band in 0..3 {
        let b = bloch_state(grid, &field, [0.0, 0.0], band, 1.0, 1.0)?;
        let before = b.psi.clone();
        let mut psi = b.psi.clone();
        let t = 0.1;
        propagate(&mut psi, &v, &QuantumConfig::new(0.002, 50), None, &mut [], &mut |_, _| {})?;
        // A stationary state only picks up the phase exp(-i E t / hbar).
        let phase = Complex64::from_polar(1.0, -b.energy * t);
        let err = (psi.amplitudes.iter().zip(&before.amplitudes).map(|(a, b)| (a - b * phase).norm_sqr()).sum::<f64>()
            * grid.cell_area())
        .sqrt();
        println!(
            "band {band}: E = {:.6}, <H> = {:.6}, basis {}, deviation after t = {t}: {err:.1e}",
            b.energy,
            energy_expectation(&b.psi, &v)?,
            b.basis_size
        );
        std::fs::write(out.join(format!("band{band}.pgm")), render_gray(&b.psi.density(), grid.nx, grid.ny).bytes)?;
    }
    println!("images in {}", out.display());
    Ok(())
}
