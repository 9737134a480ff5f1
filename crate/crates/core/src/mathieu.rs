//! Floquet stability of the Mathieu equation
//!
//! ```text
//! x'' + (a - 2 q cos(2 w t)) x = 0
//! ```
//!
//! and its use as a stability test for straight channels of the potential
//! `V = -(2q cos 2x - a) sin^2 y`.
//!
//! # Channel mapping
//!
//! Near the channel axis `y = 0` the potential is `(a - 2q cos 2x) y^2`, so a
//! trajectory moving along the axis with speed `v` (`x = v t`) sees
//!
//! ```text
//! y'' + (2a - 4q cos(2 v t)) y = 0,
//! ```
//!
//! a Mathieu equation with parameters `(2a, 2q)` and frequency `w = v`. One
//! forcing period `pi / v` is the time to cross one unit cell of the
//! channel. Rescaling time by `v` gives the standard form with
//! `(2a / v^2, 2q / v^2)`; at kinetic energy `T = 1` (`v^2 = 2`) these are
//! exactly `(a, q)`, which is why channel retention maps can be overlaid on
//! the plain Mathieu diagram.

use crate::classical::{
    channel_retention, propagate_ensemble, sample_point_source, stable_dt, Integrator, PropagationConfig,
};
use crate::grid::{linspace, Rect};
use crate::potential::make_mathieu_channel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const BASE_STEPS: usize = 2048;
const MAX_STEPS: usize = 1 << 22;
const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathieuError {
    #[error("forcing frequency must be positive, got {0}")]
    BadFrequency(f64),
    #[error("monodromy at (a={a}, q={q}) did not converge with {steps} steps per period")]
    StepUnderflow { a: f64, q: f64, steps: usize },
    #[error("range [{0}, {1}] is degenerate")]
    DegenerateRange(f64, f64),
    #[error("resolution must be at least 2 per axis")]
    BadResolution,
    #[error("kinetic energy must be positive, got {0}")]
    BadEnergy(f64),
    #[error("wedge must be positive, got {0}")]
    BadWedge(f64),
    #[error("need at least one trajectory per node")]
    NoTrajectories,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyResult {
    /// Fundamental matrix after one period, columns are the solutions
    /// started from `(1, 0)` and `(0, 1)`.
    pub matrix: [[f64; 2]; 2],
    pub trace: f64,
    /// `|trace| <= 2`; the marginal case counts as stable.
    pub stable: bool,
    pub a: f64,
    pub q: f64,
    /// Steps per period used by the converged integration.
    pub steps: usize,
}

impl MonodromyResult {
    pub fn det(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Growth rate per period, `acosh(|trace| / 2)`; zero when stable.
    pub fn floquet_exponent(&self) -> f64 {
        if self.stable { 0.0 } else { (self.trace.abs() / 2.0).acosh() }
    }
}

/// Fixed-step RK4 for the pair of fundamental solutions over one period.
fn fundamental_matrix(a: f64, q: f64, omega: f64, steps: usize) -> [[f64; 2]; 2] {
    let period = PI / omega;
    let h = period / steps as f64;
    let stiffness = |t: f64| a - 2.0 * q * (2.0 * omega * t).cos();
    // Columns: (x, v) for each solution.
    let mut s = [[1.0, 0.0], [0.0, 1.0]];
    for n in 0..steps {
        let t = n as f64 * h;
        let (k0, kh, k1) = (stiffness(t), stiffness(t + 0.5 * h), stiffness(t + h));
        for c in &mut s {
            let [x, v] = *c;
            let (dx1, dv1) = (v, -k0 * x);
            let (dx2, dv2) = (v + 0.5 * h * dv1, -kh * (x + 0.5 * h * dx1));
            let (dx3, dv3) = (v + 0.5 * h * dv2, -kh * (x + 0.5 * h * dx2));
            let (dx4, dv4) = (v + h * dv3, -k1 * (x + h * dx3));
            c[0] = x + h / 6.0 * (dx1 + 2.0 * dx2 + 2.0 * dx3 + dx4);
            c[1] = v + h / 6.0 * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4);
        }
    }
    [[s[0][0], s[1][0]], [s[0][1], s[1][1]]]
}

/// Monodromy matrix over one period `pi / omega`. The RK4 step count starts
/// at 2048 and doubles until the trace changes by less than `1e-10`
/// (relative to `max(1, |trace|)`).
pub fn monodromy(a: f64, q: f64, omega: f64) -> Result<MonodromyResult, MathieuError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(MathieuError::BadFrequency(omega));
    }
    let mut steps = BASE_STEPS;
    let mut m = fundamental_matrix(a, q, omega, steps);
    loop {
        let finer = fundamental_matrix(a, q, omega, steps * 2);
        let (t0, t1) = (m[0][0] + m[1][1], finer[0][0] + finer[1][1]);
        steps *= 2;
        m = finer;
        if (t1 - t0).abs() <= TRACE_TOL * t1.abs().max(1.0) {
            break;
        }
        if steps >= MAX_STEPS || !t1.is_finite() {
            return Err(MathieuError::StepUnderflow { a, q, steps });
        }
    }
    let trace = m[0][0] + m[1][1];
    Ok(MonodromyResult { matrix: m, trace, stable: trace.abs() <= 2.0, a, q, steps })
}

/// Transverse stability of the axis `y = 0` of the channel potential for a
/// particle moving along it with kinetic energy `t_kin`; see the module docs.
pub fn channel_stability(a: f64, q: f64, t_kin: f64) -> Result<MonodromyResult, MathieuError> {
    if !(t_kin > 0.0) {
        return Err(MathieuError::BadEnergy(t_kin));
    }
    let v = (2.0 * t_kin).sqrt();
    let mut r = monodromy(2.0 * a, 2.0 * q, v)?;
    r.a = a;
    r.q = q;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityGrid {
    pub a_axis: Vec<f64>,
    pub q_axis: Vec<f64>,
    /// Row-major over `(q, a)`: index `j * a_axis.len() + i`.
    pub trace: Vec<f64>,
    pub det: Vec<f64>,
    pub stable: Vec<bool>,
    pub retention: Option<Vec<f64>>,
    /// Kinetic energy of the retention runs.
    pub kinetic_energy: Option<f64>,
}

impl StabilityGrid {
    pub fn na(&self) -> usize {
        self.a_axis.len()
    }

    pub fn nq(&self) -> usize {
        self.q_axis.len()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.na() + i
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.q_axis
            .iter()
            .enumerate()
            .flat_map(move |(j, q)| self.a_axis.iter().enumerate().map(move |(i, a)| (j * self.a_axis.len() + i, *a, *q)))
    }

    pub fn extent(&self) -> Rect {
        Rect::new(self.a_axis[0], *self.a_axis.last().unwrap(), self.q_axis[0], *self.q_axis.last().unwrap())
    }

    /// `|trace| - 2` sampled on the grid; its zero set is the stability boundary.
    pub fn boundary_function(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.abs() - 2.0).collect()
    }
}

fn axes(a_range: [f64; 2], q_range: [f64; 2], resolution: [usize; 2]) -> Result<(Vec<f64>, Vec<f64>), MathieuError> {
    for r in [a_range, q_range] {
        if !(r[1] > r[0]) || !r[0].is_finite() || !r[1].is_finite() {
            return Err(MathieuError::DegenerateRange(r[0], r[1]));
        }
    }
    if resolution[0] < 2 || resolution[1] < 2 {
        return Err(MathieuError::BadResolution);
    }
    Ok((linspace(a_range[0], a_range[1], resolution[0]), linspace(q_range[0], q_range[1], resolution[1])))
}

fn collect_grid(
    a_axis: Vec<f64>,
    q_axis: Vec<f64>,
    node: impl Fn(f64, f64) -> Result<MonodromyResult, MathieuError> + Sync,
) -> Result<StabilityGrid, MathieuError> {
    let na = a_axis.len();
    let results: Vec<MonodromyResult> = (0..na * q_axis.len())
        .into_par_iter()
        .map(|k| node(a_axis[k % na], q_axis[k / na]))
        .collect::<Result<_, _>>()?;
    Ok(StabilityGrid {
        trace: results.iter().map(|r| r.trace).collect(),
        det: results.iter().map(|r| r.det()).collect(),
        stable: results.iter().map(|r| r.stable).collect(),
        a_axis,
        q_axis,
        retention: None,
        kinetic_energy: None,
    })
}

/// Monodromy at every node of an inclusive `(a, q)` lattice.
pub fn stability_diagram(
    a_range: [f64; 2],
    q_range: [f64; 2],
    resolution: [usize; 2],
    omega: f64,
) -> Result<StabilityGrid, MathieuError> {
    let (a_axis, q_axis) = axes(a_range, q_range, resolution)?;
    collect_grid(a_axis, q_axis, |a, q| monodromy(a, q, omega))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyRegion {
    /// `a + 2|q| < T`: trajectories can ride over the bump tops.
    OverBarrier,
    /// Can pass between bumps but not over them.
    BetweenBumps,
    /// `a - 2|q| >= T`, i.e. `q >= (T - a)/2` and `q <= (a - T)/2` for
    /// `q >= 0`: the channel walls are energetically closed. The boundary
    /// itself counts as trapped.
    EnergeticallyTrapped,
}

pub fn energy_region(a: f64, q: f64, t_kin: f64) -> EnergyRegion {
    if a - 2.0 * q.abs() >= t_kin {
        EnergyRegion::EnergeticallyTrapped
    } else if a + 2.0 * q.abs() < t_kin {
        EnergyRegion::OverBarrier
    } else {
        EnergyRegion::BetweenBumps
    }
}

/// Parameters of a channel-retention scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionScan {
    pub kinetic_energy: f64,
    /// Full opening angle of the launch wedge, radians.
    pub wedge: f64,
    pub n_traj: usize,
    /// Propagation time; `None` means 200 unit-cell crossings at the launch speed.
    pub t_final: Option<f64>,
    pub half_width: f64,
    /// `dt * omega_max` for the per-node step choice.
    pub dt_safety: f64,
    pub max_dt: f64,
    pub integrator: Integrator,
}

impl Default for RetentionScan {
    fn default() -> Self {
        Self {
            kinetic_energy: 1.0,
            wedge: PI / 3.0,
            n_traj: 500,
            t_final: None,
            half_width: PI / 2.0,
            dt_safety: 0.05,
            max_dt: 0.05,
            integrator: Integrator::Yoshida4,
        }
    }
}

impl RetentionScan {
    pub fn speed(&self) -> f64 {
        (2.0 * self.kinetic_energy).sqrt()
    }

    pub fn t_final(&self) -> f64 {
        self.t_final.unwrap_or(200.0 * PI / self.speed())
    }

    fn validate(&self) -> Result<(), MathieuError> {
        if !(self.kinetic_energy > 0.0) {
            return Err(MathieuError::BadEnergy(self.kinetic_energy));
        }
        if !(self.wedge > 0.0) {
            return Err(MathieuError::BadWedge(self.wedge));
        }
        if self.n_traj == 0 {
            return Err(MathieuError::NoTrajectories);
        }
        Ok(())
    }

    /// Retention at one `(a, q)` node: a wedge launched from `(0, 0)` along
    /// `+x`, propagated in the channel potential. Trajectories are frozen as
    /// soon as they leave the band, which does not change the count. NaN if
    /// any trajectory diverged.
    pub fn node(&self, a: f64, q: f64) -> f64 {
        let field = make_mathieu_channel(a, q);
        let Ok(mut e) = sample_point_source([0.0, 0.0], self.speed(), 0.0, self.wedge, self.n_traj, &field) else {
            return f64::NAN;
        };
        let dt = stable_dt(&field, self.dt_safety, self.max_dt);
        let steps = (self.t_final() / dt).ceil() as usize;
        let band = Rect::new(f64::NEG_INFINITY, f64::INFINITY, -self.half_width, self.half_width);
        let cfg = PropagationConfig::new(dt, steps.max(1))
            .with_integrator(self.integrator)
            .with_domain(band)
            .with_cadence(usize::MAX);
        if propagate_ensemble(&mut e, &field, &cfg, &mut ()).is_err() || e.n_diverged() > 0 {
            return f64::NAN;
        }
        channel_retention(&e, 0.0, self.half_width).unwrap_or(f64::NAN)
    }
}

/// Channel stability and classical retention over an `(a, q)` lattice.
pub fn retention_diagram(
    a_range: [f64; 2],
    q_range: [f64; 2],
    resolution: [usize; 2],
    scan: &RetentionScan,
) -> Result<StabilityGrid, MathieuError> {
    scan.validate()?;
    let (a_axis, q_axis) = axes(a_range, q_range, resolution)?;
    let mut grid = collect_grid(a_axis, q_axis, |a, q| channel_stability(a, q, scan.kinetic_energy))?;
    let nodes: Vec<(f64, f64)> = grid.nodes().map(|(_, a, q)| (a, q)).collect();
    grid.retention = Some(nodes.par_iter().map(|(a, q)| scan.node(*a, *q)).collect());
    grid.kinetic_energy = Some(scan.kinetic_energy);
    Ok(grid)
}

/// Retention averaged by energy region and linear stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionSummary {
    pub trapped_nodes: usize,
    /// Smallest retention among energetically trapped nodes (NaN if none).
    pub trapped_min: f64,
    pub stable_over_barrier_nodes: usize,
    pub unstable_over_barrier_nodes: usize,
    pub stable_over_barrier_mean: f64,
    pub unstable_over_barrier_mean: f64,
    /// Nodes whose retention run diverged.
    pub diverged_nodes: usize,
}

impl RetentionSummary {
    pub fn contrast(&self) -> f64 {
        self.stable_over_barrier_mean - self.unstable_over_barrier_mean
    }
}

/// `None` if the grid carries no retention values.
pub fn summarize_retention(grid: &StabilityGrid) -> Option<RetentionSummary> {
    let ret = grid.retention.as_ref()?;
    let t = grid.kinetic_energy?;
    let mut trapped_min = f64::INFINITY;
    let (mut nt, mut ns, mut nu, mut sum_s, mut sum_u, mut bad) = (0, 0, 0, 0.0, 0.0, 0);
    for (k, a, q) in grid.nodes() {
        let r = ret[k];
        if r.is_nan() {
            bad += 1;
            continue;
        }
        match energy_region(a, q, t) {
            EnergyRegion::EnergeticallyTrapped => {
                nt += 1;
                trapped_min = trapped_min.min(r);
            }
            EnergyRegion::OverBarrier if grid.stable[k] => {
                ns += 1;
                sum_s += r;
            }
            EnergyRegion::OverBarrier => {
                nu += 1;
                sum_u += r;
            }
            EnergyRegion::BetweenBumps => {}
        }
    }
    let mean = |s: f64, n: usize| if n > 0 { s / n as f64 } else { f64::NAN };
    Some(RetentionSummary {
        trapped_nodes: nt,
        trapped_min: if nt > 0 { trapped_min } else { f64::NAN },
        stable_over_barrier_nodes: ns,
        unstable_over_barrier_nodes: nu,
        stable_over_barrier_mean: mean(sum_s, ns),
        unstable_over_barrier_mean: mean(sum_u, nu),
        diverged_nodes: bad,
    })
}

/// Line segment in the `(a, q)` plane.
pub type Segment = [[f64; 2]; 2];

/// Marching-squares segments of the `|trace| = 2` contour.
pub fn stability_contours(grid: &StabilityGrid) -> Vec<Segment> {
    let f = grid.boundary_function();
    let (na, nq) = (grid.na(), grid.nq());
    let mut out = Vec::new();
    for j in 0..nq - 1 {
        for i in 0..na - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let mut cuts = Vec::with_capacity(4);
            for e in 0..4 {
                let (p, r) = (corners[e], corners[(e + 1) % 4]);
                let (fp, fr) = (f[grid.index(p.0, p.1)], f[grid.index(r.0, r.1)]);
                if (fp < 0.0) != (fr < 0.0) {
                    let s = fp / (fp - fr);
                    let (ap, qp) = (grid.a_axis[p.0], grid.q_axis[p.1]);
                    let (ar, qr) = (grid.a_axis[r.0], grid.q_axis[r.1]);
                    cuts.push([ap + s * (ar - ap), qp + s * (qr - qp)]);
                }
            }
            for pair in cuts.chunks_exact(2) {
                out.push([pair[0], pair[1]]);
            }
        }
    }
    out
}

/// The lines `q = (T - a)/2` and `q = (a - T)/2` clipped to the grid's box.
pub fn energetic_lines(extent: Rect, t_kin: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    for sign in [-1.0, 1.0] {
        // q = sign * (a - T) / 2  <=>  a = T + 2 q / sign
        let mut pts: Vec<[f64; 2]> = Vec::new();
        for a in [extent.x0, extent.x1] {
            let q = sign * (a - t_kin) / 2.0;
            if q >= extent.y0 && q <= extent.y1 {
                pts.push([a, q]);
            }
        }
        for q in [extent.y0, extent.y1] {
            let a = t_kin + 2.0 * q / sign;
            if a > extent.x0 && a < extent.x1 {
                pts.push([a, q]);
            }
        }
        if pts.len() >= 2 {
            out.push([pts[0], pts[1]]);
        }
    }
    out
}
