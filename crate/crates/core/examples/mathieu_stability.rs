//! Floquet stability of the Mathieu equation: the q = 0 oracle, the tongue
//! structure, and a stability map of the (a, q) plane.
//!
//!     cargo run --release --example mathieu_stability [out_dir]

use branchflow::io::render_gray;
use branchflow::mathieu::{monodromy, stability_diagram};
use std::f64::consts::PI;
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/examples/mathieu".into()));
    std::fs::create_dir_all(&out)?;
    for a in [0.5f64, 1.0, 2.0, 4.0, 7.0] {
        let m = monodromy(a, 0.0, 1.0)?;
        println!("a = {a}: trace {:+.12}, 2 cos(pi sqrt a) = {:+.12}", m.trace, 2.0 * (PI * a.sqrt()).cos());
    }
    for (a, q) in [(1.0, 0.5), (3.0, 0.5), (-0.5, 0.5), (0.2, 0.3)] {
        let m = monodromy(a, q, 1.0)?;
        println!("(a, q) = ({a}, {q}): trace {:+.4} -> {}", m.trace, if m.stable { "stable" } else { "unstable" });
    }
    let g = stability_diagram([-1.0, 3.0], [0.0, 2.0], [120, 120], 1.0)?;
    let det = g.det.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max);
    let frac = g.stable.iter().filter(|s| **s).count() as f64 / g.stable.len() as f64;
    println!("120 x 120 map: stable fraction {frac:.3}, max |det - 1| {det:.1e}");
    // a increases to the right, q upwards.
    let values: Vec<f64> = g.stable.iter().map(|s| if *s { 1.0 } else { 0.0 }).collect();
    std::fs::write(out.join("stable.pgm"), render_gray(&values, g.na(), g.nq()).bytes)?;
    println!("image in {}", out.display());
    Ok(())
}
