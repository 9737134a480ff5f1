//! A packet aimed at an absorbing disk casts a sharp shadow in free space;
//! in a weak triangular lattice the branches refill it. Four runs (lattice
//! or free, with or without the disk), each time-integrated.
//!
//!     cargo run --release --example shadow_filling [out_dir]

use branchflow::experiments::{shadow_comparison, ShadowSetup};
use branchflow::grid::{GridSpec, Rect};
use branchflow::io::render_gray;
use branchflow::potential::{make_fermi_lattice, LatticeSpec};
use branchflow::quantum::AbsorberGeometry;
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/examples/shadow".into()));
    std::fs::create_dir_all(&out)?;
    let lattice = make_fermi_lattice(&LatticeSpec::triangular(3.0, Rect::centered(26.0)), 0.36257, 0.2, 1.3)?;
    let setup = ShadowSetup {
        grid: GridSpec::spectral(512, 512, Rect::centered(22.0))?,
        lattice,
        center: [0.0, 13.5],
        sigma0: 3.0,
        k0: [0.0, -25.0],
        hbar: 0.04,
        mass: 1.0,
        dt: 0.02,
        steps: 1425,
        frame: vec![AbsorberGeometry::Border { width: 2.5, strength: 0.1 }],
        disk_center: [0.0, 0.0],
        disk_radius: 3.0,
        disk_width: 1.0,
        disk_strength: 0.2,
        wedge_half_angle: 8f64.to_radians(),
        wedge_depth: 10.0,
    };
    println!("packet energy {:.3}, lattice barrier {:.3}", 0.5 * (0.04f64 * 25.0).powi(2), setup.lattice.barrier_height());
    let r = shadow_comparison(&setup)?;
    println!("density left in the shadow wedge: free {:.2}%, lattice {:.1}%", 100.0 * r.free_ratio, 100.0 * r.lattice_ratio);
    let g = setup.grid;
    std::fs::write(out.join("free_with_disk.pgm"), render_gray(&r.free_with_disk, g.nx, g.ny).bytes)?;
    std::fs::write(out.join("lattice_with_disk.pgm"), render_gray(&r.lattice_with_disk, g.nx, g.ny).bytes)?;
    println!("images in {}", out.display());
    Ok(())
}
