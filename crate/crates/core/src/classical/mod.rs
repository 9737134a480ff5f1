//! Classical trajectory ensembles under a [`PotentialField`], with unit mass.

mod density;
mod divergence;
mod integrator;
mod propagate;

pub use density::{accumulate_density, DensityGrid};
pub use divergence::{median, paired_log_divergence};
pub use integrator::{verlet_step, yoshida4_step, Integrator, YOSHIDA_W0, YOSHIDA_W1};
pub use propagate::{
    channel_retention, default_cadence, propagate_ensemble, stable_dt, Observer, PropagationConfig,
};

pub(crate) use integrator::Stepper;

use crate::potential::PotentialField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicalError {
    #[error("time step must be non-zero and finite, got {0}")]
    BadTimeStep(f64),
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("channel half-width must be positive, got {0}")]
    BadHalfWidth(f64),
    #[error("source needs at least one trajectory")]
    NoTrajectories,
    #[error("wedge must lie in (0, 2 pi], got {0}")]
    BadWedge(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

impl PhasePoint {
    pub const fn new(x: f64, y: f64, px: f64, py: f64) -> Self {
        Self { x, y, px, py }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.px.is_finite() && self.py.is_finite()
    }
}

/// `(px^2 + py^2) / 2 + V(x, y)`
pub fn energy(p: &PhasePoint, field: &PotentialField) -> f64 {
    0.5 * (p.px * p.px + p.py * p.py) + field.eval([p.x, p.y])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Alive,
    /// Left the configured domain; frozen at the first point outside.
    Exited,
    /// Produced a non-finite coordinate; frozen at the last finite point.
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub points: Vec<PhasePoint>,
    pub t: f64,
    /// Initial energy of each trajectory.
    pub e0: Vec<f64>,
    pub status: Vec<Status>,
    /// Running `(min y, max y)` over every step taken, for channel retention.
    pub y_range: Vec<(f64, f64)>,
}

impl Ensemble {
    pub fn new(points: Vec<PhasePoint>, field: &PotentialField) -> Self {
        let e0 = points.iter().map(|p| energy(p, field)).collect();
        let status = points
            .iter()
            .map(|p| if p.is_finite() { Status::Alive } else { Status::Diverged })
            .collect();
        let y_range = points.iter().map(|p| (p.y, p.y)).collect();
        Self { points, t: 0.0, e0, status, y_range }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn alive(&self) -> impl Iterator<Item = bool> + '_ {
        self.status.iter().map(|s| *s == Status::Alive)
    }

    pub fn n_alive(&self) -> usize {
        self.alive().filter(|a| *a).count()
    }

    pub fn n_diverged(&self) -> usize {
        self.status.iter().filter(|s| **s == Status::Diverged).count()
    }

    /// Largest `|E - E0| / |E0|` over trajectories that did not diverge.
    /// Trajectories with `E0 == 0` use the absolute error.
    pub fn max_relative_energy_drift(&self, field: &PotentialField) -> f64 {
        self.points
            .iter()
            .zip(&self.e0)
            .zip(&self.status)
            .filter(|(_, s)| **s != Status::Diverged)
            .map(|((p, e0), _)| {
                let d = (energy(p, field) - e0).abs();
                if *e0 != 0.0 { d / e0.abs() } else { d }
            })
            .fold(0.0, f64::max)
    }
}

/// `n` trajectories at `origin` with momentum magnitude `speed`, angles
/// evenly spaced over `[center - wedge/2, center + wedge/2]` including both
/// ends. A full circle (`wedge = 2 pi`) drops the duplicated endpoint.
pub fn sample_point_source(
    origin: [f64; 2],
    speed: f64,
    angle_center: f64,
    wedge: f64,
    n: usize,
    field: &PotentialField,
) -> Result<Ensemble, ClassicalError> {
    Ok(Ensemble::new(point_source_angles(angle_center, wedge, n)?
        .into_iter()
        .map(|a| PhasePoint::new(origin[0], origin[1], speed * a.cos(), speed * a.sin()))
        .collect(), field))
}

pub fn point_source_angles(center: f64, wedge: f64, n: usize) -> Result<Vec<f64>, ClassicalError> {
    if n == 0 {
        return Err(ClassicalError::NoTrajectories);
    }
    if !(wedge > 0.0 && wedge <= 2.0 * PI + 1e-12) {
        return Err(ClassicalError::BadWedge(wedge));
    }
    if n == 1 {
        return Ok(vec![center]);
    }
    let full = (wedge - 2.0 * PI).abs() < 1e-12;
    let slots = if full { n } else { n - 1 };
    let lo = center - wedge / 2.0;
    Ok((0..n).map(|i| lo + wedge * i as f64 / slots as f64).collect())
}

/// Points evenly spaced on the vertical segment `x = x0`, `y in [y0, y1]`
/// (ends included), all with momentum `(speed, 0)`.
pub fn sample_plane_manifold(
    y_extent: [f64; 2],
    x0: f64,
    speed: f64,
    n: usize,
    field: &PotentialField,
) -> Result<Ensemble, ClassicalError> {
    if n == 0 {
        return Err(ClassicalError::NoTrajectories);
    }
    let ys = if n == 1 {
        vec![0.5 * (y_extent[0] + y_extent[1])]
    } else {
        crate::grid::linspace(y_extent[0], y_extent[1], n)
    };
    Ok(Ensemble::new(ys.into_iter().map(|y| PhasePoint::new(x0, y, speed, 0.0)).collect(), field))
}

/// Gaussian phase-space cloud matching the Wigner function of a minimum
/// uncertainty packet: position spread `sigma_x` per axis around `center`,
/// momentum spread `hbar / (2 sigma_x)` around `momentum`.
pub fn sample_gaussian_source(
    center: [f64; 2],
    sigma_x: f64,
    momentum: [f64; 2],
    hbar: f64,
    n: usize,
    seed: u64,
    field: &PotentialField,
) -> Result<Ensemble, ClassicalError> {
    if n == 0 {
        return Err(ClassicalError::NoTrajectories);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = Normal::new(0.0, sigma_x).expect("positive spread");
    let mom = Normal::new(0.0, hbar / (2.0 * sigma_x)).expect("positive spread");
    let points = (0..n)
        .map(|_| {
            PhasePoint::new(
                center[0] + pos.sample(&mut rng),
                center[1] + pos.sample(&mut rng),
                momentum[0] + mom.sample(&mut rng),
                momentum[1] + mom.sample(&mut rng),
            )
        })
        .collect();
    Ok(Ensemble::new(points, field))
}
