//! Builds square, triangular and random Fermi-bump fields, prints their
//! barrier heights and writes a potential map of each.
//!
//!     cargo run --release --example fermi_lattice [out_dir]

use branchflow::grid::{GridSpec, Rect};
use branchflow::io::render_gray;
use branchflow::potential::{make_fermi_lattice, FieldKind, LatticeSpec};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/examples/fermi_lattice".into()));
    std::fs::create_dir_all(&out)?;
    let extent = Rect::centered(12.0);
    let lattices = [
        ("square", LatticeSpec::square(3.0, extent)),
        ("triangular", LatticeSpec::triangular(3.0, extent)),
        ("random", LatticeSpec::random(5, 60, 2.5, extent)),
    ];
    let grid = GridSpec::new(256, 256, Rect::centered(10.0))?;
    for (name, spec) in lattices {
        let field = make_fermi_lattice(&spec, 1.0, 0.25, 0.7)?;
        let v = field.sample_on_grid(&grid)?;
        println!(
            "{name:>10}: {} bumps, barrier {:.4}, sampled range [{:.4}, {:.4}]",
            match field.kind() {
                FieldKind::FermiLattice(f) => f.bumps().centers.len(),
                _ => 0,
            },
            field.barrier_height(),
            v.min(),
            v.max()
        );
        std::fs::write(out.join(format!("{name}.pgm")), render_gray(&v.values, grid.nx, grid.ny).bytes)?;
    }
    println!("images in {}", out.display());
    Ok(())
}
