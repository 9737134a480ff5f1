//! Free spreading of a Gaussian packet under the split-step propagator,
//! checked against sigma(t)^2 = sigma0^2 (1 + (hbar t / 2 m sigma0^2)^2).
//!
//!     cargo run --release --example free_packet

use branchflow::grid::{GridSpec, Rect};
use branchflow::potential::make_zero;
use branchflow::quantum::{gaussian_packet, propagate, QuantumConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::spectral(256, 256, Rect::centered(64.0))?;
    let (sigma0, dt) = (4.0, 0.05);
    let v = make_zero().sample_on_grid(&grid)?;
    let mut psi = gaussian_packet(grid, [0.0, 0.0], sigma0, [0.5, 0.25])?;
    println!("{:>6} {:>12} {:>12} {:>10} {:>14}", "t", "var x", "exact", "rel err", "mean x");
    for _ in 0..5 {
        propagate(&mut psi, &v, &QuantumConfig::new(dt, 200), None, &mut [], &mut |_, _| {})?;
        let t = psi.t;
        let exact = sigma0 * sigma0 * (1.0 + (t / (2.0 * sigma0 * sigma0)).powi(2));
        let var = psi.position_variance()[0];
        println!("{t:>6.1} {var:>12.6} {exact:>12.6} {:>10.1e} {:>14.6}", (var - exact).abs() / exact, psi.mean_position()[0]);
    }
    println!("norm {:.15}", psi.norm());
    Ok(())
}
