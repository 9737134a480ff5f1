//! Classical retention in the Mathieu channel: a 60 degree wedge of
//! trajectories launched along the axis at T = 1, at a few (a, q) nodes in
//! each energy region, next to the linear stability of the axis.
//!
//!     cargo run --release --example channel_retention

use branchflow::mathieu::{channel_stability, energy_region, RetentionScan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scan = RetentionScan { n_traj: 200, ..RetentionScan::default() };
    println!("{:>5} {:>5} {:>22} {:>9} {:>10}", "a", "q", "region", "stable", "retention");
    for (a, q) in [(2.5, 0.2), (0.2, 0.3), (0.5, 0.1), (0.0, 0.45), (-0.5, 0.3), (0.6, 0.5)] {
        let m = channel_stability(a, q, scan.kinetic_energy)?;
        let region = energy_region(a, q, scan.kinetic_energy);
        println!("{a:>5} {q:>5} {:>22} {:>9} {:>10.3}", format!("{region:?}"), m.stable, scan.node(a, q));
    }
    Ok(())
}
