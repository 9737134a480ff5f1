use super::{Integrator, PhasePoint, Stepper};
use crate::potential::PotentialField;
use rayon::prelude::*;

/// For each start point, integrates it together with a partner displaced by
/// `delta0` along x and returns `ln(|d(t)| / delta0)`, where `d` is the
/// phase-space separation after `steps` steps of size `dt`.
pub fn paired_log_divergence(
    field: &PotentialField,
    starts: &[PhasePoint],
    delta0: f64,
    dt: f64,
    steps: usize,
    integrator: Integrator,
) -> Vec<f64> {
    starts
        .par_iter()
        .map(|p| {
            let mut a = Stepper::new(*p, field);
            let mut b = Stepper::new(PhasePoint { x: p.x + delta0, ..*p }, field);
            for _ in 0..steps {
                a.step(field, dt, integrator);
                b.step(field, dt, integrator);
            }
            let (u, v) = (a.point, b.point);
            let d = ((u.x - v.x).powi(2)
                + (u.y - v.y).powi(2)
                + (u.px - v.px).powi(2)
                + (u.py - v.py).powi(2))
            .sqrt();
            (d / delta0).ln()
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::make_zero;

    #[test]
    fn free_flight_does_not_diverge() {
        let z = make_zero();
        let d = paired_log_divergence(&z, &[PhasePoint::new(0.0, 0.0, 1.0, 1.0)], 1e-8, 0.1, 100, Integrator::Verlet);
        assert!(d[0].abs() < 1e-6);
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
