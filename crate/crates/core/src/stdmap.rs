//! Kick-and-drift maps on the line and the standard map
//!
//! ```text
//! p' = p + kick(x)
//! x' = x + p'
//! ```
//!
//! with `kick(x) = K sin x` for the standard map (the force of `V = K cos x`).
//! Positions are never wrapped here; use [`wrap_angle`] when rendering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("snapshot iterations must be sorted and at most n_steps = {n_steps}, got {got:?}")]
    BadSnapshots { n_steps: usize, got: Vec<usize> },
    #[error("labels ({labels}) and points ({points}) differ in length")]
    LabelMismatch { labels: usize, points: usize },
    #[error("need at least one trajectory and one step")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MapPoint {
    pub x: f64,
    pub p: f64,
}

impl MapPoint {
    pub const fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }
}

#[inline]
pub fn kickdrift_step(pt: MapPoint, kick: impl Fn(f64) -> f64) -> MapPoint {
    let p = pt.p + kick(pt.x);
    MapPoint { x: pt.x + p, p }
}

#[inline]
pub fn std_step(pt: MapPoint, k: f64) -> MapPoint {
    kickdrift_step(pt, |x| k * x.sin())
}

/// Exact inverse of [`std_step`].
#[inline]
pub fn std_step_inverse(pt: MapPoint, k: f64) -> MapPoint {
    let x = pt.x - pt.p;
    MapPoint { x, p: pt.p - k * x.sin() }
}

/// Jacobian of one standard-map step at `pt`, as `[[dx'/dx, dx'/dp], [dp'/dx, dp'/dp]]`.
pub fn std_jacobian(pt: MapPoint, k: f64) -> [[f64; 2]; 2] {
    let c = k * pt.x.cos();
    [[1.0 + c, 1.0], [c, 1.0]]
}

pub fn wrap_angle(x: f64) -> f64 {
    x.rem_euclid(TAU)
}

/// Ordered point set with a group label per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapManifold {
    pub points: Vec<MapPoint>,
    pub labels: Vec<u32>,
    /// Iterations applied so far.
    pub n: usize,
}

impl MapManifold {
    pub fn new(points: Vec<MapPoint>, labels: Vec<u32>) -> Result<Self, MapError> {
        if points.len() != labels.len() {
            return Err(MapError::LabelMismatch { labels: labels.len(), points: points.len() });
        }
        Ok(Self { points, labels, n: 0 })
    }

    /// Horizontal stripe `p = p0`, `x in [x0, x1]`.
    pub fn stripe(&mut self, p0: f64, x_range: [f64; 2], n: usize, label: u32) {
        for x in crate::grid::linspace(x_range[0], x_range[1], n) {
            self.points.push(MapPoint::new(x, p0));
            self.labels.push(label);
        }
    }

    pub fn circle(&mut self, center: MapPoint, radius: f64, n: usize, label: u32) {
        for i in 0..n {
            let th = TAU * i as f64 / n as f64;
            self.points.push(MapPoint::new(center.x + radius * th.cos(), center.p + radius * th.sin()));
            self.labels.push(label);
        }
    }

    pub fn step(&mut self, k: f64) {
        for p in &mut self.points {
            *p = std_step(*p, k);
        }
        self.n += 1;
    }
}

/// Six horizontal stripes across one period and twelve small circles
/// scattered between them, in the spirit of a plane-wave/phase-space sketch.
pub fn stripes_and_circles(points_per_stripe: usize, points_per_circle: usize) -> MapManifold {
    let mut m = MapManifold { points: Vec::new(), labels: Vec::new(), n: 0 };
    for (i, p0) in [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5].into_iter().enumerate() {
        m.stripe(p0, [0.0, TAU], points_per_stripe, i as u32);
    }
    let mut label = 6;
    for p0 in [-2.0, 0.0, 2.0] {
        for x0 in [PI / 4.0, 3.0 * PI / 4.0, 5.0 * PI / 4.0, 7.0 * PI / 4.0] {
            m.circle(MapPoint::new(x0, p0), 0.3, points_per_circle, label);
            label += 1;
        }
    }
    m
}

/// Iterates the standard map `n_steps` times, copying the manifold at each
/// iteration listed in `snapshot_at` (0 means the input itself).
pub fn evolve_manifold(
    m: &MapManifold,
    k: f64,
    n_steps: usize,
    snapshot_at: &[usize],
) -> Result<Vec<MapManifold>, MapError> {
    if snapshot_at.windows(2).any(|w| w[0] > w[1]) || snapshot_at.iter().any(|s| *s > n_steps) {
        return Err(MapError::BadSnapshots { n_steps, got: snapshot_at.to_vec() });
    }
    let mut cur = m.clone();
    let base = cur.n;
    let mut out = Vec::with_capacity(snapshot_at.len());
    let mut want = snapshot_at.iter().peekable();
    for step in 0..=n_steps {
        while want.next_if(|s| **s == step).is_some() {
            out.push(cur.clone());
        }
        if step < n_steps {
            cur.step(k);
        }
    }
    debug_assert_eq!(cur.n, base + n_steps);
    Ok(out)
}

/// `<(p_n - p_0)^2>` for `n = 0..=n_steps`, from `n_traj` orbits started at
/// uniform `x in [0, 2 pi)` with `p = 0`.
pub fn momentum_diffusion(k: f64, n_traj: usize, n_steps: usize, seed: u64) -> Result<Vec<f64>, MapError> {
    if n_traj == 0 || n_steps == 0 {
        return Err(MapError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<MapPoint> = (0..n_traj).map(|_| MapPoint::new(rng.gen_range(0.0..TAU), 0.0)).collect();
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(0.0);
    for _ in 0..n_steps {
        let mut acc = 0.0;
        for p in &mut pts {
            *p = std_step(*p, k);
            acc += p.p * p.p;
        }
        out.push(acc / n_traj as f64);
    }
    Ok(out)
}

/// Largest `|p|` reached by any orbit in the same ensemble as
/// [`momentum_diffusion`].
pub fn max_momentum_excursion(k: f64, n_traj: usize, n_steps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_traj {
        let mut p = MapPoint::new(rng.gen_range(0.0..TAU), 0.0);
        for _ in 0..n_steps {
            p = std_step(p, k);
            worst = worst.max(p.p.abs());
        }
    }
    worst
}

/// Least-squares slope of `y[n]` against `n` over `range`.
pub fn fit_slope(y: &[f64], range: std::ops::Range<usize>) -> f64 {
    let n = range.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for i in range {
        let x = i as f64;
        sx += x;
        sy += y[i];
        sxx += x * x;
        sxy += x * y[i];
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        for k in [0.3, 1.0, 5.0] {
            assert_eq!(std_step(MapPoint::new(0.0, 0.0), k), MapPoint::new(0.0, 0.0));
            let p = std_step(MapPoint::new(PI, 0.0), k);
            assert!((p.x - PI).abs() < 1e-15 && p.p.abs() < 1e-15);
        }
    }

    #[test]
    fn one_step_arithmetic() {
        let p = std_step(MapPoint::new(PI / 2.0, 0.0), 1.0);
        assert_eq!(p.p, 1.0);
        assert_eq!(p.x, PI / 2.0 + 1.0);
    }

    #[test]
    fn kickdrift_generalises_std() {
        let pt = MapPoint::new(0.7, -0.2);
        let free = kickdrift_step(pt, |_| 0.0);
        assert!((free.x - 0.5).abs() < 1e-15 && free.p == -0.2);
        let k = 1.7;
        assert_eq!(kickdrift_step(pt, |x| k * x.sin()), std_step(pt, k));
        // Force of V = K cos x.
        let force = |x: f64| -(-k * x.sin());
        assert_eq!(kickdrift_step(pt, force), std_step(pt, k));
    }

    #[test]
    fn jacobian_is_unimodular() {
        for x in [0.0, 0.3, 2.0, -4.0] {
            let j = std_jacobian(MapPoint::new(x, 0.1), 2.3);
            assert!((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_undoes_step() {
        let pt = MapPoint::new(1.234, -0.567);
        let back = std_step_inverse(std_step(pt, 3.3), 3.3);
        assert!((back.x - pt.x).abs() < 1e-15 && (back.p - pt.p).abs() < 1e-15);
    }

    fn signed_area(a: MapPoint, b: MapPoint, c: MapPoint) -> f64 {
        0.5 * ((b.x - a.x) * (c.p - a.p) - (c.x - a.x) * (b.p - a.p))
    }

    #[test]
    fn small_triangles_keep_area() {
        let (a, b, c) = (MapPoint::new(1.0, 0.2), MapPoint::new(1.0 + 1e-5, 0.2), MapPoint::new(1.0, 0.2 + 1e-5));
        let before = signed_area(a, b, c);
        let k = 2.0;
        let after = signed_area(std_step(a, k), std_step(b, k), std_step(c, k));
        assert!(((after - before) / before).abs() < 1e-4);
    }

    #[test]
    fn zero_step_snapshot_is_input() {
        let m = stripes_and_circles(10, 8);
        let s = evolve_manifold(&m, 1.0, 0, &[0]).unwrap();
        assert_eq!(s, vec![m]);
    }

    #[test]
    fn snapshots_validate() {
        let m = stripes_and_circles(4, 4);
        assert!(evolve_manifold(&m, 1.0, 3, &[2, 1]).is_err());
        assert!(evolve_manifold(&m, 1.0, 3, &[4]).is_err());
        let s = evolve_manifold(&m, 1.0, 3, &[0, 1, 3]).unwrap();
        assert_eq!(s.iter().map(|m| m.n).collect::<Vec<_>>(), vec![0, 1, 3]);
        assert!(s.iter().all(|x| x.labels == m.labels));
    }

    #[test]
    fn stripe_shears_rigidly_without_kick() {
        let mut m = MapManifold::new(vec![], vec![]).unwrap();
        m.stripe(0.4, [0.0, 1.0], 5, 0);
        let s = evolve_manifold(&m, 0.0, 3, &[3]).unwrap();
        for (a, b) in s[0].points.iter().zip(&m.points) {
            assert_eq!(a.p, 0.4);
            assert!((a.x - (b.x + 1.2)).abs() < 1e-15);
        }
    }

    #[test]
    fn elliptic_island_circle_stays_close() {
        let mut m = MapManifold::new(vec![], vec![]).unwrap();
        m.circle(MapPoint::new(PI, 0.0), 0.01, 64, 0);
        let s = evolve_manifold(&m, 0.5, 100, &[100]).unwrap();
        for p in &s[0].points {
            assert!((p.x - PI).hypot(p.p) < 0.1);
        }
    }

    #[test]
    fn zero_kick_has_no_diffusion() {
        assert!(momentum_diffusion(0.0, 50, 100, 1).unwrap().iter().all(|v| *v == 0.0));
        assert!(momentum_diffusion(1.0, 0, 10, 1).is_err());
    }

    #[test]
    fn stability_boundary_of_pi_fixed_point() {
        let run = |k: f64| {
            let mut p = MapPoint::new(PI + 1e-6, 0.0);
            let mut worst: f64 = 0.0;
            for _ in 0..2000 {
                p = std_step(p, k);
                worst = worst.max((p.x - PI).hypot(p.p));
            }
            worst
        };
        assert!(run(3.9) < 1e-4);
        assert!(run(4.1) > 1e-2);
    }

    #[test]
    fn slope_of_line() {
        let y: Vec<f64> = (0..20).map(|i| 3.0 * i as f64 + 1.0).collect();
        assert!((fit_slope(&y, 0..20) - 3.0).abs() < 1e-12);
    }
}
