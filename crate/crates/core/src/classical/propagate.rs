use super::{ClassicalError, Ensemble, PhasePoint, Status, Stepper};
use crate::classical::Integrator;
use crate::grid::Rect;
use crate::potential::PotentialField;
use rayon::prelude::*;

/// Receives samples during propagation. Trajectories may be processed in
/// any order and on any thread: each worker gets its own [`Observer::fork`]
/// and the results are folded back with [`Observer::merge`], which must be
/// commutative for the outcome to be independent of partitioning.
pub trait Observer: Send + Sync {
    fn fork(&self) -> Self
    where
        Self: Sized;
    fn record(&mut self, trajectory: usize, t: f64, point: &PhasePoint);
    fn merge(&mut self, other: Self)
    where
        Self: Sized;
}

impl Observer for () {
    fn fork(&self) {}
    fn record(&mut self, _: usize, _: f64, _: &PhasePoint) {}
    fn merge(&mut self, _: ()) {}
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn fork(&self) -> Self {
        (self.0.fork(), self.1.fork())
    }
    fn record(&mut self, trajectory: usize, t: f64, point: &PhasePoint) {
        self.0.record(trajectory, t, point);
        self.1.record(trajectory, t, point);
    }
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub dt: f64,
    pub steps: usize,
    pub integrator: Integrator,
    /// Trajectories leaving this box are frozen and marked [`Status::Exited`].
    pub domain: Option<Rect>,
    /// Observers see every alive trajectory after each `cadence` steps.
    pub cadence: usize,
}

impl PropagationConfig {
    pub fn new(dt: f64, steps: usize) -> Self {
        Self {
            dt,
            steps,
            integrator: Integrator::Yoshida4,
            domain: None,
            cadence: default_cadence(dt),
        }
    }

    pub fn with_domain(mut self, domain: Rect) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.cadence = cadence.max(1);
        self
    }
}

/// Samples every `ceil(0.1 / dt)` steps, so histograms do not depend on dt.
pub fn default_cadence(dt: f64) -> usize {
    ((0.1 / dt.abs()).ceil() as usize).max(1)
}

/// Step such that `dt * omega_max <= safety`, where `omega_max^2` bounds the
/// curvature of the potential. Capped at `max_dt`.
pub fn stable_dt(field: &PotentialField, safety: f64, max_dt: f64) -> f64 {
    let w = field.curvature_bound().sqrt();
    if w > 0.0 { (safety / w).min(max_dt) } else { max_dt }
}

fn run_one<O: Observer>(
    index: usize,
    point: &mut PhasePoint,
    status: &mut Status,
    y_range: &mut (f64, f64),
    t0: f64,
    field: &PotentialField,
    cfg: &PropagationConfig,
    observer: &mut O,
) {
    if *status != Status::Alive {
        return;
    }
    let mut s = Stepper::new(*point, field);
    for k in 1..=cfg.steps {
        let before = s.point;
        s.step(field, cfg.dt, cfg.integrator);
        if !s.point.is_finite() {
            *point = before;
            *status = Status::Diverged;
            return;
        }
        let y = s.point.y;
        y_range.0 = y_range.0.min(y);
        y_range.1 = y_range.1.max(y);
        if let Some(d) = &cfg.domain {
            if !d.contains(s.point.position()) {
                *point = s.point;
                *status = Status::Exited;
                return;
            }
        }
        if k % cfg.cadence == 0 {
            observer.record(index, t0 + k as f64 * cfg.dt, &s.point);
        }
    }
    *point = s.point;
}

/// Advances every alive trajectory by `cfg.steps` steps. Trajectories are
/// independent, so the resulting ensemble is the same however the work is
/// split across threads.
pub fn propagate_ensemble<O: Observer>(
    ensemble: &mut Ensemble,
    field: &PotentialField,
    cfg: &PropagationConfig,
    observer: &mut O,
) -> Result<(), ClassicalError> {
    if !(cfg.dt != 0.0 && cfg.dt.is_finite()) {
        return Err(ClassicalError::BadTimeStep(cfg.dt));
    }
    if cfg.steps == 0 {
        return Err(ClassicalError::NoSteps);
    }
    let cfg = PropagationConfig { cadence: cfg.cadence.max(1), ..*cfg };
    let t0 = ensemble.t;
    let merged = ensemble
        .points
        .par_iter_mut()
        .zip(ensemble.status.par_iter_mut())
        .zip(ensemble.y_range.par_iter_mut())
        .enumerate()
        .fold(
            || observer.fork(),
            |mut obs, (i, ((p, s), yr))| {
                run_one(i, p, s, yr, t0, field, &cfg, &mut obs);
                obs
            },
        )
        .reduce(
            || observer.fork(),
            |mut a, b| {
                a.merge(b);
                a
            },
        );
    observer.merge(merged);
    ensemble.t = t0 + cfg.steps as f64 * cfg.dt;
    Ok(())
}

/// Fraction of trajectories whose `|y - y0|` never exceeded `half_width`
/// over every step taken so far.
pub fn channel_retention(e: &Ensemble, y0: f64, half_width: f64) -> Result<f64, ClassicalError> {
    if e.is_empty() {
        return Err(ClassicalError::EmptyEnsemble);
    }
    if !(half_width > 0.0) {
        return Err(ClassicalError::BadHalfWidth(half_width));
    }
    let kept = e
        .y_range
        .iter()
        .filter(|(lo, hi)| (lo - y0).abs() <= half_width && (hi - y0).abs() <= half_width)
        .count();
    Ok(kept as f64 / e.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{sample_point_source, yoshida4_step, DensityGrid};
    use crate::grid::GridSpec;
    use crate::potential::{make_cosine_integrable, make_mathieu_channel, make_zero};
    use std::f64::consts::PI;

    #[test]
    fn free_flight_matches_drift() {
        let z = make_zero();
        let mut e = sample_point_source([0.0, 0.0], 1.5, 0.2, 1.0, 5, &z).unwrap();
        let start = e.points.clone();
        propagate_ensemble(&mut e, &z, &PropagationConfig::new(0.01, 300), &mut ()).unwrap();
        for (p, s) in e.points.iter().zip(&start) {
            assert!((p.x - s.px * 3.0).abs() < 1e-12);
            assert!((p.y - s.py * 3.0).abs() < 1e-12);
        }
        assert!((e.t - 3.0).abs() < 1e-12);
    }

    #[test]
    fn matches_repeated_single_steps() {
        let f = make_cosine_integrable(1.0).unwrap();
        let p0 = PhasePoint::new(0.4, -0.3, 1.2, 0.7);
        let mut e = Ensemble::new(vec![p0], &f);
        propagate_ensemble(&mut e, &f, &PropagationConfig::new(0.01, 500), &mut ()).unwrap();
        let mut p = p0;
        for _ in 0..500 {
            p = yoshida4_step(p, &f, 0.01);
        }
        // The ensemble keeps its summation carry across steps; the free
        // function starts afresh each call, so they agree to rounding.
        let q = e.points[0];
        for (a, b) in [(q.x, p.x), (q.y, p.y), (q.px, p.px), (q.py, p.py)] {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn ensemble_energy_drift_bounded() {
        let f = make_cosine_integrable(1.0).unwrap();
        let mut e = sample_point_source([0.3, 0.1], 1.7, 0.0, 2.0 * PI, 16, &f).unwrap();
        propagate_ensemble(&mut e, &f, &PropagationConfig::new(1e-3, 100_000), &mut ()).unwrap();
        let drift = e.max_relative_energy_drift(&f);
        assert!(drift < 1e-5, "{drift}");
    }

    #[test]
    fn domain_exit_freezes() {
        let z = make_zero();
        let mut e = Ensemble::new(vec![PhasePoint::new(0.0, 0.0, 1.0, 0.0)], &z);
        let cfg = PropagationConfig::new(0.1, 100).with_domain(Rect::centered(1.0));
        propagate_ensemble(&mut e, &z, &cfg, &mut ()).unwrap();
        assert_eq!(e.status[0], Status::Exited);
        // Frozen at the first point outside.
        assert!(e.points[0].x > 1.0 && e.points[0].x < 1.1 + 1e-9, "{}", e.points[0].x);
    }

    #[test]
    fn bad_config_rejected() {
        let z = make_zero();
        let mut e = Ensemble::new(vec![PhasePoint::default()], &z);
        assert!(propagate_ensemble(&mut e, &z, &PropagationConfig::new(0.0, 1), &mut ()).is_err());
        assert!(propagate_ensemble(&mut e, &z, &PropagationConfig::new(0.1, 0), &mut ()).is_err());
    }

    #[test]
    fn non_finite_start_is_dead_and_isolated() {
        let z = make_zero();
        let mut e = Ensemble::new(
            vec![PhasePoint::new(f64::NAN, 0.0, 1.0, 0.0), PhasePoint::new(0.0, 0.0, 1.0, 0.0)],
            &z,
        );
        propagate_ensemble(&mut e, &z, &PropagationConfig::new(0.1, 10), &mut ()).unwrap();
        assert_eq!(e.status, vec![Status::Diverged, Status::Alive]);
        assert!((e.points[1].x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn retention_on_symmetry_line() {
        let f = make_mathieu_channel(0.5, 0.3);
        let pts = (0..5).map(|i| PhasePoint::new(i as f64, 0.0, 2f64.sqrt(), 0.0)).collect();
        let mut e = Ensemble::new(pts, &f);
        propagate_ensemble(&mut e, &f, &PropagationConfig::new(0.01, 5000), &mut ()).unwrap();
        assert_eq!(channel_retention(&e, 0.0, PI / 2.0).unwrap(), 1.0);
    }

    #[test]
    fn retention_energetically_trapped() {
        // a - 2|q| = 2.5 > T = 1: the band edge is energetically forbidden.
        let f = make_mathieu_channel(3.5, 0.5);
        let mut e = sample_point_source([0.0, 0.0], 2f64.sqrt(), 0.0, PI / 3.0, 41, &f).unwrap();
        propagate_ensemble(&mut e, &f, &PropagationConfig::new(0.01, 20_000), &mut ()).unwrap();
        assert_eq!(channel_retention(&e, 0.0, PI / 2.0).unwrap(), 1.0);
    }

    #[test]
    fn retention_free_flight_oracle() {
        // In free flight a ray at angle th leaves the band |y| < w once
        // speed * |sin th| * t > w, so the retained fraction is the share of
        // wedge angles with |sin th| <= w / (speed t).
        let z = make_zero();
        let (speed, w, t, n) = (1.0, 0.5, 10.0, 201);
        let mut e = sample_point_source([0.0, 0.0], speed, 0.0, PI / 3.0, n, &z).unwrap();
        let steps = 1000;
        propagate_ensemble(&mut e, &z, &PropagationConfig::new(t / steps as f64, steps), &mut ())
            .unwrap();
        let expected = crate::classical::point_source_angles(0.0, PI / 3.0, n)
            .unwrap()
            .iter()
            .filter(|a| speed * a.sin().abs() * t <= w + 1e-12)
            .count() as f64
            / n as f64;
        let got = channel_retention(&e, 0.0, w).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!(got < 0.2);
    }

    #[test]
    fn retention_errors() {
        let z = make_zero();
        let empty = Ensemble::new(vec![], &z);
        assert_eq!(channel_retention(&empty, 0.0, 1.0), Err(ClassicalError::EmptyEnsemble));
        let one = Ensemble::new(vec![PhasePoint::default()], &z);
        assert!(channel_retention(&one, 0.0, 0.0).is_err());
    }

    #[test]
    fn density_counts_are_partition_independent() {
        let f = make_cosine_integrable(1.0).unwrap();
        let grid = GridSpec::new(32, 32, Rect::centered(10.0)).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut e = sample_point_source([0.0, 0.0], 3.0, 0.0, 2.0 * PI, 200, &f).unwrap();
                let mut d = DensityGrid::new(grid);
                propagate_ensemble(&mut e, &f, &PropagationConfig::new(0.01, 300), &mut d).unwrap();
                (e, d)
            })
        };
        let (e1, d1) = run(1);
        let (e3, d3) = run(3);
        assert_eq!(e1, e3);
        assert_eq!(d1, d3);
    }
}
