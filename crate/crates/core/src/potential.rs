//! Potential landscapes: soft Fermi bumps on square, triangular and random
//! lattices, the separable cosine lattice and the Mathieu channel.
//!
//! Every field is immutable after construction. [`PotentialField::eval`] and
//! [`PotentialField::grad`] are pure and may be called from any number of
//! threads.
//!
//! A single Fermi bump centred at `r0` contributes
//!
//! ```text
//! A / (1 + exp((|r - r0| - r_off) / sigma))
//! ```
//!
//! which peaks at `A / 2` for `r_off = 0`. A positive `A` gives a repulsive
//! pillar, a negative one a well. Each bump is truncated at
//! `r_off + sigma * ln(1e12)`, where its value has fallen below `1e-12 |A|`,
//! and bumps are looked up through a uniform bin index so evaluation cost
//! does not grow with the number of bumps.

use crate::grid::{GridError, GridSpec, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Truncation threshold relative to `|A|`.
const CUTOFF_EPS: f64 = 1e-12;
const MAX_PLACEMENT_ATTEMPTS_PER_BUMP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("bump softness must be positive, got {0}")]
    NonPositiveSoftness(f64),
    #[error("bump offset must be non-negative, got {0}")]
    NegativeOffset(f64),
    #[error("bump amplitude must be finite and non-zero, got {0}")]
    BadAmplitude(f64),
    #[error("lattice constant must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("lattice produced no bumps inside the extent")]
    NoBumps,
    #[error("invalid lattice extent")]
    BadExtent,
    #[error("could only place {placed} of {requested} random bumps with spacing {min_spacing}")]
    Overcrowded {
        placed: usize,
        requested: usize,
        min_spacing: f64,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Set of identical Fermi bumps.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSet {
    pub centers: Vec<[f64; 2]>,
    pub amplitude: f64,
    pub softness: f64,
    pub offset: f64,
}

impl BumpSet {
    pub fn new(
        centers: Vec<[f64; 2]>,
        amplitude: f64,
        softness: f64,
        offset: f64,
    ) -> Result<Self, PotentialError> {
        if !(softness > 0.0 && softness.is_finite()) {
            return Err(PotentialError::NonPositiveSoftness(softness));
        }
        if !(offset >= 0.0 && offset.is_finite()) {
            return Err(PotentialError::NegativeOffset(offset));
        }
        if amplitude == 0.0 || !amplitude.is_finite() {
            return Err(PotentialError::BadAmplitude(amplitude));
        }
        if centers.is_empty() {
            return Err(PotentialError::NoBumps);
        }
        Ok(Self { centers, amplitude, softness, offset })
    }

    /// Radius beyond which a bump contributes less than `1e-12 |A|`.
    pub fn cutoff_radius(&self) -> f64 {
        self.offset + self.softness * (1.0 / CUTOFF_EPS).ln()
    }

    /// Value of one bump at distance `d` from its centre.
    #[inline]
    pub fn profile(&self, d: f64) -> f64 {
        let u = (d - self.offset) / self.softness;
        self.amplitude / (1.0 + u.exp())
    }

    /// Radial derivative dV/dd of one bump at distance `d`.
    #[inline]
    pub fn profile_slope(&self, d: f64) -> f64 {
        let u = (d - self.offset) / self.softness;
        // e^u / (1 + e^u)^2 written in the overflow-free form.
        let e = (-u.abs()).exp();
        -self.amplitude * e / (self.softness * (1.0 + e) * (1.0 + e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatticeKind {
    Square,
    Triangular,
    Random {
        seed: u64,
        count: usize,
        min_spacing: f64,
    },
}

/// Where bump centres go.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub constant: f64,
    pub extent: Rect,
    /// Position of one lattice site; ignored for random placement.
    #[serde(default)]
    pub origin: [f64; 2],
}

impl LatticeSpec {
    pub fn square(constant: f64, extent: Rect) -> Self {
        Self { kind: LatticeKind::Square, constant, extent, origin: [0.0, 0.0] }
    }

    pub fn triangular(constant: f64, extent: Rect) -> Self {
        Self { kind: LatticeKind::Triangular, constant, extent, origin: [0.0, 0.0] }
    }

    pub fn random(seed: u64, count: usize, min_spacing: f64, extent: Rect) -> Self {
        Self {
            kind: LatticeKind::Random { seed, count, min_spacing },
            constant: min_spacing,
            extent,
            origin: [0.0, 0.0],
        }
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Self {
        self.origin = origin;
        self
    }

    /// Rectangular periodic cell, if the lattice is periodic.
    pub fn periodic_cell(&self) -> Option<[f64; 2]> {
        match self.kind {
            LatticeKind::Square => Some([self.constant, self.constant]),
            LatticeKind::Triangular => Some([self.constant, self.constant * 3f64.sqrt()]),
            LatticeKind::Random { .. } => None,
        }
    }

    /// Sites of the lattice inside `region` (periodic kinds only).
    fn periodic_sites(&self, region: &Rect) -> Vec<[f64; 2]> {
        let a = self.constant;
        let [ox, oy] = self.origin;
        let (row, shift) = match self.kind {
            LatticeKind::Square => (a, 0.0),
            LatticeKind::Triangular => (a * 3f64.sqrt() / 2.0, a / 2.0),
            LatticeKind::Random { .. } => unreachable!(),
        };
        let j0 = ((region.y0 - oy) / row).floor() as i64 - 1;
        let j1 = ((region.y1 - oy) / row).ceil() as i64 + 1;
        let i0 = ((region.x0 - ox) / a).floor() as i64 - 1;
        let i1 = ((region.x1 - ox) / a).ceil() as i64 + 1;
        let mut sites = Vec::new();
        for j in j0..=j1 {
            let y = oy + j as f64 * row;
            let dx = if j.rem_euclid(2) == 1 { shift } else { 0.0 };
            for i in i0..=i1 {
                let x = ox + i as f64 * a + dx;
                if region.contains([x, y]) {
                    sites.push([x, y]);
                }
            }
        }
        sites
    }

    /// Uniform rejection sampling inside the extent.
    fn random_sites(&self, seed: u64, count: usize, min_spacing: f64) -> Result<Vec<[f64; 2]>, PotentialError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = self.extent;
        let min2 = min_spacing * min_spacing;
        let mut sites: Vec<[f64; 2]> = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while sites.len() < count {
            if attempts >= count * MAX_PLACEMENT_ATTEMPTS_PER_BUMP {
                return Err(PotentialError::Overcrowded {
                    placed: sites.len(),
                    requested: count,
                    min_spacing,
                });
            }
            attempts += 1;
            let p = [rng.gen_range(e.x0..e.x1), rng.gen_range(e.y0..e.y1)];
            let ok = sites.iter().all(|s| {
                let (dx, dy) = (s[0] - p[0], s[1] - p[1]);
                dx * dx + dy * dy >= min2
            });
            if ok {
                sites.push(p);
            }
        }
        Ok(sites)
    }
}

/// Fermi bumps plus a uniform bin index over their centres.
#[derive(Debug, Clone)]
pub struct FermiLattice {
    bumps: BumpSet,
    cutoff: f64,
    origin: [f64; 2],
    bins: [usize; 2],
    starts: Vec<u32>,
    members: Vec<u32>,
}

impl FermiLattice {
    fn new(bumps: BumpSet) -> Self {
        let cutoff = bumps.cutoff_radius();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for c in &bumps.centers {
            for k in 0..2 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        let bins = [0, 1].map(|k| (((hi[k] - lo[k]) / cutoff).floor() as usize + 1).max(1));
        let mut counts = vec![0u32; bins[0] * bins[1] + 1];
        let bin_of = |c: &[f64; 2]| {
            let i = (((c[0] - lo[0]) / cutoff) as usize).min(bins[0] - 1);
            let j = (((c[1] - lo[1]) / cutoff) as usize).min(bins[1] - 1);
            j * bins[0] + i
        };
        for c in &bumps.centers {
            counts[bin_of(c) + 1] += 1;
        }
        for b in 1..counts.len() {
            counts[b] += counts[b - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut members = vec![0u32; bumps.centers.len()];
        for (n, c) in bumps.centers.iter().enumerate() {
            let b = bin_of(c);
            members[fill[b] as usize] = n as u32;
            fill[b] += 1;
        }
        Self { bumps, cutoff, origin: lo, bins, starts, members }
    }

    pub fn bumps(&self) -> &BumpSet {
        &self.bumps
    }

    /// Calls `f(dx, dy, d)` for every bump within the cutoff of `r`,
    /// with `(dx, dy) = r - center`.
    #[inline]
    fn for_each_near(&self, r: [f64; 2], mut f: impl FnMut(f64, f64, f64)) {
        let fi = ((r[0] - self.origin[0]) / self.cutoff).floor();
        let fj = ((r[1] - self.origin[1]) / self.cutoff).floor();
        if !(fi.is_finite() && fj.is_finite()) {
            return;
        }
        let (nbx, nby) = (self.bins[0] as i64, self.bins[1] as i64);
        let (bi, bj) = (fi as i64, fj as i64);
        if bi < -1 || bj < -1 || bi > nbx || bj > nby {
            return;
        }
        let c2 = self.cutoff * self.cutoff;
        for j in (bj - 1).max(0)..=(bj + 1).min(nby - 1) {
            for i in (bi - 1).max(0)..=(bi + 1).min(nbx - 1) {
                let b = (j * nbx + i) as usize;
                for &m in &self.members[self.starts[b] as usize..self.starts[b + 1] as usize] {
                    let c = self.bumps.centers[m as usize];
                    let (dx, dy) = (r[0] - c[0], r[1] - c[1]);
                    let d2 = dx * dx + dy * dy;
                    if d2 <= c2 {
                        f(dx, dy, d2.sqrt());
                    }
                }
            }
        }
    }

    fn eval(&self, r: [f64; 2]) -> f64 {
        let mut v = 0.0;
        self.for_each_near(r, |_, _, d| v += self.bumps.profile(d));
        v
    }

    fn grad(&self, r: [f64; 2]) -> [f64; 2] {
        let mut g = [0.0, 0.0];
        self.for_each_near(r, |dx, dy, d| {
            if d > 0.0 {
                let s = self.bumps.profile_slope(d) / d;
                g[0] += s * dx;
                g[1] += s * dy;
            }
        });
        g
    }
}

#[derive(Debug, Clone)]
pub enum FieldKind {
    FermiLattice(FermiLattice),
    /// `-A (cos x + cos y)`
    CosineIntegrable { amplitude: f64 },
    /// `-(2q cos 2x - a) sin^2 y`
    MathieuChannel { a: f64, q: f64 },
    Zero,
}

#[derive(Debug, Clone)]
pub struct PotentialField {
    kind: FieldKind,
    periodic_cell: Option<[f64; 2]>,
    barrier_height: f64,
}

/// Potential values sampled on the nodes of a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl SampledPotential {
    pub fn constant(grid: GridSpec, v: f64) -> Self {
        Self { grid, values: vec![v; grid.len()] }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Bumps on a lattice. Periodic lattices are tiled one cutoff radius plus
/// one lattice constant beyond the extent, so points near the edge see the
/// same environment as the bulk.
pub fn make_fermi_lattice(
    spec: &LatticeSpec,
    amplitude: f64,
    softness: f64,
    offset: f64,
) -> Result<PotentialField, PotentialError> {
    if !spec.extent.is_valid() {
        return Err(PotentialError::BadExtent);
    }
    // Validate the bump shape before computing the halo from it.
    BumpSet::new(vec![[0.0, 0.0]], amplitude, softness, offset)?;
    let centers = match spec.kind {
        LatticeKind::Random { seed, count, min_spacing } => {
            if !(min_spacing >= 0.0) {
                return Err(PotentialError::NonPositiveSpacing(min_spacing));
            }
            spec.random_sites(seed, count, min_spacing)?
        }
        _ => {
            if !(spec.constant > 0.0 && spec.constant.is_finite()) {
                return Err(PotentialError::NonPositiveSpacing(spec.constant));
            }
            let probe = BumpSet::new(vec![[0.0, 0.0]], amplitude, softness, offset)?;
            let halo = probe.cutoff_radius() + spec.constant;
            spec.periodic_sites(&spec.extent.expanded(halo))
        }
    };
    let bumps = BumpSet::new(centers, amplitude, softness, offset)?;
    Ok(PotentialField::from_bumps(bumps, spec.periodic_cell(), Some(spec)))
}

pub fn make_cosine_integrable(amplitude: f64) -> Result<PotentialField, PotentialError> {
    if amplitude == 0.0 || !amplitude.is_finite() {
        return Err(PotentialError::BadAmplitude(amplitude));
    }
    Ok(PotentialField {
        kind: FieldKind::CosineIntegrable { amplitude },
        periodic_cell: Some([2.0 * PI, 2.0 * PI]),
        barrier_height: 4.0 * amplitude.abs(),
    })
}

pub fn make_mathieu_channel(a: f64, q: f64) -> PotentialField {
    let hi = (a + 2.0 * q.abs()).max(0.0);
    let lo = (a - 2.0 * q.abs()).min(0.0);
    PotentialField {
        kind: FieldKind::MathieuChannel { a, q },
        periodic_cell: Some([PI, PI]),
        barrier_height: hi - lo,
    }
}

pub fn make_zero() -> PotentialField {
    PotentialField { kind: FieldKind::Zero, periodic_cell: None, barrier_height: 0.0 }
}

impl PotentialField {
    /// Field from an explicit bump set; `periodic_cell` is trusted as given.
    pub fn from_bumps(bumps: BumpSet, periodic_cell: Option<[f64; 2]>, spec: Option<&LatticeSpec>) -> Self {
        let lattice = FermiLattice::new(bumps);
        let mut field = Self { kind: FieldKind::FermiLattice(lattice), periodic_cell, barrier_height: 0.0 };
        field.barrier_height = field.estimate_barrier(spec);
        field
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn periodic_cell(&self) -> Option<[f64; 2]> {
        self.periodic_cell
    }

    /// `max V - min V`, cached at construction. For bump fields this is
    /// estimated by sampling one periodic cell (or the lattice extent).
    pub fn barrier_height(&self) -> f64 {
        self.barrier_height
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, FieldKind::Zero)
    }

    #[inline]
    pub fn eval(&self, r: [f64; 2]) -> f64 {
        match &self.kind {
            FieldKind::FermiLattice(l) => l.eval(r),
            FieldKind::CosineIntegrable { amplitude } => -amplitude * (r[0].cos() + r[1].cos()),
            FieldKind::MathieuChannel { a, q } => {
                let s = r[1].sin();
                -(2.0 * q * (2.0 * r[0]).cos() - a) * s * s
            }
            FieldKind::Zero => 0.0,
        }
    }

    #[inline]
    pub fn grad(&self, r: [f64; 2]) -> [f64; 2] {
        match &self.kind {
            FieldKind::FermiLattice(l) => l.grad(r),
            FieldKind::CosineIntegrable { amplitude } => {
                [amplitude * r[0].sin(), amplitude * r[1].sin()]
            }
            FieldKind::MathieuChannel { a, q } => {
                let (s2x, c2x) = (2.0 * r[0]).sin_cos();
                let (s2y, c2y) = (2.0 * r[1]).sin_cos();
                let sin2y = 0.5 * (1.0 - c2y);
                [4.0 * q * s2x * sin2y, -(2.0 * q * c2x - a) * s2y]
            }
            FieldKind::Zero => [0.0, 0.0],
        }
    }

    /// Rough upper bound on the Hessian's spectral radius, used to pick
    /// integrator steps.
    pub fn curvature_bound(&self) -> f64 {
        match &self.kind {
            FieldKind::FermiLattice(l) => {
                let b = l.bumps();
                b.amplitude.abs() / (b.softness * b.softness)
            }
            FieldKind::CosineIntegrable { amplitude } => amplitude.abs(),
            FieldKind::MathieuChannel { a, q } => {
                (2.0 * (a.abs() + 2.0 * q.abs())).max(8.0 * q.abs())
            }
            FieldKind::Zero => 0.0,
        }
    }

    pub fn sample_on_grid(&self, grid: &GridSpec) -> Result<SampledPotential, PotentialError> {
        let grid = GridSpec::new(grid.nx, grid.ny, grid.extent)?;
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(self.eval([grid.x(i), y]));
            }
        }
        Ok(SampledPotential { grid, values })
    }

    fn estimate_barrier(&self, spec: Option<&LatticeSpec>) -> f64 {
        let region = match (self.periodic_cell, spec) {
            (Some(cell), Some(s)) => Rect::new(
                s.origin[0],
                s.origin[0] + cell[0],
                s.origin[1],
                s.origin[1] + cell[1],
            ),
            (_, Some(s)) => s.extent,
            _ => {
                let FieldKind::FermiLattice(l) = &self.kind else { return 0.0 };
                let c = &l.bumps().centers;
                let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for p in c {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                let m = l.bumps().softness;
                Rect::new(lo[0] - m, hi[0] + m, lo[1] - m, hi[1] + m)
            }
        };
        let n = 192;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..=n {
            for i in 0..=n {
                let r = [
                    region.x0 + region.width() * i as f64 / n as f64,
                    region.y0 + region.height() * j as f64 / n as f64,
                ];
                let v = self.eval(r);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        // Bump centres are the extrema of an isolated bump; include them.
        if let FieldKind::FermiLattice(l) = &self.kind {
            for c in l.bumps().centers.iter().filter(|c| region.expanded(1e-9).contains(**c)) {
                let v = self.eval(*c);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn single(a: f64, sigma: f64, off: f64) -> PotentialField {
        let b = BumpSet::new(vec![[0.0, 0.0]], a, sigma, off).unwrap();
        PotentialField::from_bumps(b, None, None)
    }

    #[test]
    fn bump_peak_and_tail() {
        let f = single(1.0, 0.1, 0.0);
        assert_eq!(f.eval([0.0, 0.0]), 0.5);
        assert!(f.eval([2.0, 0.0]) < 1e-4);
        assert_eq!(f.grad([0.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn two_bumps_add() {
        let two = BumpSet::new(vec![[-1.0, 0.0], [1.0, 0.0]], 1.0, 0.1, 0.0).unwrap();
        let f = PotentialField::from_bumps(two, None, None);
        // Direct summation of the closed form, independent of the bin index.
        let one = |x: f64, y: f64| 1.0 / (1.0 + ((x * x + y * y).sqrt() / 0.1).exp());
        for r in [[0.0, 0.0], [0.3, 0.2], [-0.9, 0.05]] {
            let expect = one(r[0] + 1.0, r[1]) + one(r[0] - 1.0, r[1]);
            assert!((f.eval(r) - expect).abs() < 1e-13, "{r:?}");
        }
    }

    #[test]
    fn cosine_values() {
        let f = make_cosine_integrable(1.0).unwrap();
        assert_eq!(f.eval([0.0, 0.0]), -2.0);
        assert!((f.eval([PI, PI]) - 2.0).abs() < 1e-15);
        let g = f.grad([PI / 2.0, 0.0]);
        assert!((g[0] - 1.0).abs() < 1e-15 && g[1] == 0.0);
        assert_eq!(f.grad([0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(f.barrier_height(), 4.0);
        assert!(make_cosine_integrable(0.0).is_err());
    }

    #[test]
    fn mathieu_values() {
        for (a, q) in [(1.0, 0.3), (-2.0, 1.5), (0.0, 0.0)] {
            let f = make_mathieu_channel(a, q);
            for x in [0.0, 0.7, 2.1, -5.0] {
                assert_eq!(f.eval([x, 0.0]), 0.0);
                let g = f.grad([x, 0.0]);
                assert!(g[0] == 0.0 && g[1].abs() == 0.0, "{g:?}");
            }
        }
        assert!((make_mathieu_channel(1.0, 0.0).eval([0.0, PI / 2.0]) - 1.0).abs() < 1e-15);
        let f = make_mathieu_channel(1.0, 0.5);
        assert!(f.eval([0.0, PI / 2.0]).abs() < 1e-15);
        assert!((f.eval([PI / 2.0, PI / 2.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_field() {
        let f = make_zero();
        assert_eq!(f.eval([3.0, -2.0]), 0.0);
        let g = GridSpec::new(8, 4, Rect::centered(1.0)).unwrap();
        assert!(f.sample_on_grid(&g).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sampled_ranges() {
        let g = GridSpec::new(64, 64, Rect::new(0.0, 2.0 * PI, 0.0, 2.0 * PI)).unwrap();
        let s = make_cosine_integrable(1.0).unwrap().sample_on_grid(&g).unwrap();
        assert_eq!(s.min(), -2.0);
        assert!((s.max() - 2.0).abs() < 1e-12);

        // cos 2x averages to zero and sin^2 y to one half over a cell.
        let cell = GridSpec::new(32, 32, Rect::new(0.0, PI, 0.0, PI)).unwrap();
        let s = make_mathieu_channel(1.3, 0.7).sample_on_grid(&cell).unwrap();
        assert!((s.mean() - 0.65).abs() < 1e-12);
    }

    #[test]
    fn sample_rejects_degenerate_grid() {
        let g = GridSpec { nx: 4, ny: 4, extent: Rect::new(0.0, 0.0, 0.0, 1.0) };
        assert!(make_zero().sample_on_grid(&g).is_err());
    }

    fn fd_grad(f: &PotentialField, r: [f64; 2], h: f64) -> [f64; 2] {
        [
            (f.eval([r[0] + h, r[1]]) - f.eval([r[0] - h, r[1]])) / (2.0 * h),
            (f.eval([r[0], r[1] + h]) - f.eval([r[0], r[1] - h])) / (2.0 * h),
        ]
    }

    #[test]
    fn gradients_match_central_differences() {
        let ext = Rect::centered(10.0);
        let fields = vec![
            make_fermi_lattice(&LatticeSpec::square(2.0, ext), 1.0, 0.3, 0.0).unwrap(),
            make_fermi_lattice(&LatticeSpec::triangular(2.5, ext), -2.0, 0.4, 0.5).unwrap(),
            make_fermi_lattice(&LatticeSpec::random(7, 40, 0.8, ext), 1.5, 0.25, 0.0).unwrap(),
            make_cosine_integrable(1.3).unwrap(),
            make_mathieu_channel(1.2, 0.8),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for f in &fields {
            let centers: Vec<[f64; 2]> = match f.kind() {
                FieldKind::FermiLattice(l) => l.bumps().centers.clone(),
                _ => Vec::new(),
            };
            let scale = match f.kind() {
                FieldKind::FermiLattice(l) => l.bumps().amplitude.abs() / l.bumps().softness,
                _ => 1.0,
            };
            let mut checked = 0;
            while checked < 1000 {
                let r = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
                // Bump tips are cones; stay out of a small ball around each.
                if centers.iter().any(|c| (c[0] - r[0]).hypot(c[1] - r[1]) < 1e-3) {
                    continue;
                }
                let g = f.grad(r);
                let fd = fd_grad(f, r, 1e-6);
                let err = (g[0] - fd[0]).hypot(g[1] - fd[1]);
                let norm = g[0].hypot(g[1]).max(1e-2 * scale);
                assert!(err / norm < 1e-6, "{:?} at {r:?}: {g:?} vs {fd:?}", f.kind());
                checked += 1;
            }
        }
    }

    #[test]
    fn periodic_lattices_are_periodic() {
        let ext = Rect::centered(12.0);
        let sq = make_fermi_lattice(&LatticeSpec::square(2.0, ext), 1.0, 0.3, 0.2).unwrap();
        let tri = make_fermi_lattice(&LatticeSpec::triangular(2.0, ext), 1.0, 0.3, 0.0).unwrap();
        let cos = make_cosine_integrable(0.7).unwrap();
        let mat = make_mathieu_channel(0.4, 1.1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for f in [&sq, &tri, &cos, &mat] {
            let cell = f.periodic_cell().unwrap();
            for _ in 0..500 {
                let r = [rng.gen_range(-10.0..4.0), rng.gen_range(-10.0..4.0)];
                let v = f.eval(r);
                assert!((f.eval([r[0] + cell[0], r[1]]) - v).abs() < 1e-12);
                assert!((f.eval([r[0], r[1] + cell[1]]) - v).abs() < 1e-12);
            }
        }
        // Triangular lattice vector (a/2, a sqrt(3)/2).
        for _ in 0..200 {
            let r = [rng.gen_range(-8.0..6.0), rng.gen_range(-8.0..6.0)];
            let s = [r[0] + 1.0, r[1] + 3f64.sqrt()];
            assert!((tri.eval(s) - tri.eval(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn triangular_geometry() {
        let spec = LatticeSpec::triangular(2.0, Rect::new(-0.1, 4.1, -0.1, 3.5));
        let sites = spec.periodic_sites(&spec.extent);
        assert!(sites.contains(&[0.0, 0.0]));
        assert!(sites.contains(&[2.0, 0.0]));
        let row = 3f64.sqrt();
        assert!(sites.iter().any(|s| (s[0] - 1.0).abs() < 1e-12 && (s[1] - row).abs() < 1e-12));
        assert!(sites.iter().any(|s| (s[0] - 0.0).abs() < 1e-12 && (s[1] - 2.0 * row).abs() < 1e-12));
    }

    #[test]
    fn random_placement_is_seeded_and_spaced() {
        let ext = Rect::centered(10.0);
        let a = LatticeSpec::random(42, 60, 1.0, ext);
        let s1 = a.random_sites(42, 60, 1.0).unwrap();
        let s2 = a.random_sites(42, 60, 1.0).unwrap();
        assert_eq!(s1, s2);
        assert_ne!(s1, a.random_sites(43, 60, 1.0).unwrap());
        for (i, p) in s1.iter().enumerate() {
            assert!(ext.contains(*p));
            for q in &s1[..i] {
                assert!((p[0] - q[0]).hypot(p[1] - q[1]) >= 1.0);
            }
        }
        assert!(matches!(
            LatticeSpec::random(1, 1000, 5.0, Rect::centered(1.0)).random_sites(1, 1000, 5.0),
            Err(PotentialError::Overcrowded { .. })
        ));
    }

    #[test]
    fn construction_errors() {
        let ext = Rect::centered(5.0);
        assert!(matches!(
            make_fermi_lattice(&LatticeSpec::square(1.0, ext), 1.0, 0.0, 0.0),
            Err(PotentialError::NonPositiveSoftness(_))
        ));
        assert!(matches!(
            make_fermi_lattice(&LatticeSpec::square(-1.0, ext), 1.0, 0.1, 0.0),
            Err(PotentialError::NonPositiveSpacing(_))
        ));
        assert!(matches!(
            make_fermi_lattice(&LatticeSpec::random(1, 0, 0.1, ext), 1.0, 0.1, 0.0),
            Err(PotentialError::NoBumps)
        ));
        assert!(BumpSet::new(vec![], 1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn plateau_offset_raises_peak() {
        let f = single(2.0, 0.05, 1.0);
        assert!(f.eval([0.0, 0.0]) > 1.99);
        assert!((f.eval([1.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn barrier_heights() {
        assert_eq!(make_mathieu_channel(3.0, 0.5).barrier_height(), 4.0);
        assert_eq!(make_mathieu_channel(-1.0, 0.5).barrier_height(), 2.0);
        let sq = make_fermi_lattice(&LatticeSpec::square(2.0, Rect::centered(6.0)), 1.0, 0.2, 0.0).unwrap();
        // Peak A/2 at a centre, minus the small tails at the cell centre.
        assert!((sq.barrier_height() - 0.5).abs() < 5e-3, "{}", sq.barrier_height());
    }

    #[test]
    fn eval_is_deterministic() {
        let f = make_fermi_lattice(&LatticeSpec::random(9, 30, 0.5, Rect::centered(5.0)), -1.0, 0.3, 0.1).unwrap();
        let r = [0.123, -0.456];
        assert_eq!(f.eval(r).to_bits(), f.eval(r).to_bits());
        assert_eq!(f.grad(r), f.grad(r));
    }
}
