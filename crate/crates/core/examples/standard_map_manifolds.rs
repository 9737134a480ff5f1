//! Stretching and folding of stripes and circles under the standard map,
//! and the two transport regimes: KAM-bounded momentum at small K and
//! diffusion near the quasilinear rate K^2/2 at large K.
//!
//!     cargo run --release --example standard_map_manifolds [out_dir]

use branchflow::io::PointSet;
use branchflow::stdmap::{evolve_manifold, fit_slope, max_momentum_excursion, momentum_diffusion, stripes_and_circles};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/examples/standard_map".into()));
    std::fs::create_dir_all(&out)?;
    let k = 1.2;
    let start = stripes_and_circles(2000, 400);
    let snaps = evolve_manifold(&start, k, 10, &[0, 1, 2, 3, 5, 10])?;
    for (n, m) in [0, 1, 2, 3, 5, 10].iter().zip(&snaps) {
        let mut set = PointSet::new(format!("manifold_{n}"), &["x", "p", "label"]);
        for (p, l) in m.points.iter().zip(&m.labels) {
            set.push(&[p.x, p.p, *l as f64]);
        }
        set.write(&out.join(format!("manifold_{n:02}.bflowp")))?;
        let p_span = m.points.iter().map(|p| p.p.abs()).fold(0.0, f64::max);
        println!("after {n:>2} kicks: {} points, max |p| {p_span:.3}", m.points.len());
    }

    println!("K = 0.5: max |p| over 1000 orbits x 10^4 kicks = {:.3}", max_momentum_excursion(0.5, 1000, 10_000, 1));
    for k in [2.0, 5.0, 10.0] {
        let d = momentum_diffusion(k, 1000, 1000, 1)?;
        let slope = fit_slope(&d, 0..d.len());
        println!("K = {k:>4}: <dp^2> slope {slope:8.2}, K^2/2 = {:8.2}", k * k / 2.0);
    }
    println!("point sets in {}", out.display());
    Ok(())
}
