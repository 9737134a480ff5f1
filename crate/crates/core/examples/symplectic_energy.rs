//! Energy conservation of the leapfrog and fourth-order Yoshida steppers on
//! the cosine lattice: drift versus step size.
//!
//!     cargo run --release --example symplectic_energy

use branchflow::classical::{energy, verlet_step, yoshida4_step, PhasePoint};
use branchflow::potential::make_cosine_integrable;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let field = make_cosine_integrable(1.0)?;
    let start = PhasePoint::new(0.3, 0.2, 1.0, 0.5);
    let e0 = energy(&start, &field);
    let t = 100.0;
    println!("{:>8} {:>14} {:>14}", "dt", "verlet", "yoshida4");
    for dt in [0.1, 0.05, 0.025, 0.0125] {
        let n = (t / dt) as usize;
        let (mut a, mut b) = (start, start);
        let (mut da, mut db) = (0.0f64, 0.0f64);
        for _ in 0..n {
            a = verlet_step(a, &field, dt);
            b = yoshida4_step(b, &field, dt);
            da = da.max(((energy(&a, &field) - e0) / e0).abs());
            db = db.max(((energy(&b, &field) - e0) / e0).abs());
        }
        println!("{dt:>8} {da:>14.3e} {db:>14.3e}");
    }
    println!("halving dt cuts the drift ~4x for leapfrog and ~16x for Yoshida");
    Ok(())
}
