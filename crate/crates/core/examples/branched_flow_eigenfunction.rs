//! Branched flow of a wave packet in a triangular Fermi lattice and the
//! energy-filtered state psi_E accumulated during the same run.
//!
//!     cargo run --release --example branched_flow_eigenfunction [out_dir]

use branchflow::grid::{GridSpec, Rect};
use branchflow::io::{render_gray, render_signed};
use branchflow::potential::{make_fermi_lattice, LatticeSpec};
use branchflow::quantum::{
    energy_expectation, gaussian_packet, make_absorber, propagate, AbsorberGeometry, EnergyAccumulator, QuantumConfig, Window,
};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/examples/eigenfunction".into()));
    std::fs::create_dir_all(&out)?;
    let lattice = LatticeSpec::triangular(3.0, Rect::centered(20.0)).with_origin([1.5, 0.75f64.sqrt()]);
    let field = make_fermi_lattice(&lattice, 6.203, 0.25, 0.7)?;
    let grid = GridSpec::spectral(256, 256, Rect::centered(15.0))?;
    let v = field.sample_on_grid(&grid)?;
    let mut psi = gaussian_packet(grid, [0.0, 0.0], 0.15, [0.0, 0.0])?;
    let mask = make_absorber(grid, &[AbsorberGeometry::Border { width: 2.0, strength: 0.1 }])?;
    println!("barrier {:.3}, initial energy {:.3}", field.barrier_height(), energy_expectation(&psi, &v)?);

    let (dt, steps) = (0.003, 2000);
    let energy = 11.0;
    let mut acc = [EnergyAccumulator::new(energy, grid, Window::Hann { duration: dt * steps as f64 })];
    let mut integrated = vec![0.0; grid.len()];
    let report = propagate(&mut psi, &v, &QuantumConfig::new(dt, steps).with_cadence(1), Some(&mask), &mut acc, &mut |_, p| {
        integrated.iter_mut().zip(&p.amplitudes).for_each(|(s, z)| *s += z.norm_sqr() * dt);
    })?;
    let mut psi_e = acc[0].to_wave_field(1.0, 1.0)?;
    psi_e.normalize()?;
    println!("norm absorbed {:.3}; psi_E at E = {energy} has <H> = {:.3}", report.norm_loss(), energy_expectation(&psi_e, &v)?);

    std::fs::write(out.join("integrated_density.pgm"), render_gray(&integrated, grid.nx, grid.ny).bytes)?;
    std::fs::write(out.join("psi_e_density.pgm"), render_gray(&psi_e.density(), grid.nx, grid.ny).bytes)?;
    let re: Vec<f64> = psi_e.amplitudes.iter().map(|z| z.re).collect();
    std::fs::write(out.join("psi_e_real.ppm"), render_signed(&re, grid.nx, grid.ny).bytes)?;
    println!("images in {}", out.display());
    Ok(())
}
