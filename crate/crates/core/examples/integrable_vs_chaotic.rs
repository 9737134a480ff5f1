//! Point sources at twice the barrier energy in the separable cosine
//! lattice and in a square lattice of Fermi bumps: the density histogram
//! of each, the four-arm contrast of the cosine case and the median
//! log-divergence of nearby trajectory pairs.
//!
//!     cargo run --release --example integrable_vs_chaotic [out_dir]

use branchflow::classical::{
    median, paired_log_divergence, propagate_ensemble, sample_point_source, DensityGrid, Integrator, PhasePoint, PropagationConfig,
};
use branchflow::experiments::cross_arm_contrast;
use branchflow::grid::{GridSpec, Rect};
use branchflow::io::render_gray;
use branchflow::potential::{make_cosine_integrable, make_fermi_lattice, LatticeSpec, PotentialField};
use std::f64::consts::PI;
use std::path::PathBuf;

fn run(name: &str, field: &PotentialField, dt: f64, out: &PathBuf) -> Result<(), Box<dyn std::error::Error>> {
    // Kinetic energy at launch.
    let energy = 2.0 * field.barrier_height();
    let speed = (2.0 * energy).sqrt();
    let grid = GridSpec::new(256, 256, Rect::centered(40.0))?;
    // 50 crossings of a 2 pi cell.
    let t = 50.0 * 2.0 * PI / speed;
    let steps = (t / dt).round() as usize;
    let mut e = sample_point_source([0.0, 0.0], speed, 0.0, 2.0 * PI, 2000, field)?;
    let mut d = DensityGrid::new(grid);
    let cadence = (0.1 / dt).ceil() as usize;
    propagate_ensemble(&mut e, field, &PropagationConfig::new(dt, steps).with_cadence(cadence), &mut d)?;
    let rho = d.as_f64();
    let contrast = cross_arm_contrast(&rho, &grid, [0.0, 0.0], PI, 2.0 * PI);
    let starts: Vec<PhasePoint> = sample_point_source([0.0, 0.0], speed, 0.0, 2.0 * PI, 64, field)?.points;
    let div = median(&paired_log_divergence(field, &starts, 1e-8, dt, steps, Integrator::Yoshida4));
    println!(
        "{name:>7}: E = {energy:.3}, energy drift {:.1e}, arm contrast {contrast:.2}, median ln divergence {div:.2}",
        e.max_relative_energy_drift(field)
    );
    std::fs::write(out.join(format!("{name}_density.pgm")), render_gray(&rho, grid.nx, grid.ny).bytes)?;
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/examples/integrable_vs_chaotic".into()));
    std::fs::create_dir_all(&out)?;
    run("cosine", &make_cosine_integrable(1.0)?, 0.01, &out)?;
    let square = LatticeSpec::square(2.0 * PI, Rect::centered(48.0)).with_origin([PI, PI]);
    run("fermi", &make_fermi_lattice(&square, 4.0278, 0.3, 1.5)?, 0.004, &out)?;
    println!("images in {}", out.display());
    Ok(())
}
