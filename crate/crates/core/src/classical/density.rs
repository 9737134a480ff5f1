use super::{Observer, PhasePoint};
use crate::grid::GridSpec;

/// Histogram of visited positions with unit weight per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub grid: GridSpec,
    pub counts: Vec<u64>,
    /// Samples that fell outside the grid.
    pub dropped: u64,
}

impl DensityGrid {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid, counts: vec![0; grid.len()], dropped: 0 }
    }

    pub fn add(&mut self, r: [f64; 2]) {
        match self.grid.cell_of(r) {
            Some((i, j)) => self.counts[self.grid.index(i, j)] += 1,
            None => self.dropped += 1,
        }
    }

    pub fn in_grid(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Every sample ever offered, inside or outside the grid.
    pub fn recorded(&self) -> u64 {
        self.in_grid() + self.dropped
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|c| *c as f64).collect()
    }
}

impl Observer for DensityGrid {
    fn fork(&self) -> Self {
        Self::new(self.grid)
    }

    fn record(&mut self, _: usize, _: f64, point: &PhasePoint) {
        self.add(point.position());
    }

    fn merge(&mut self, other: Self) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.dropped += other.dropped;
    }
}

/// Bins a recorded trace of positions.
pub fn accumulate_density(samples: impl IntoIterator<Item = [f64; 2]>, grid: GridSpec) -> DensityGrid {
    let mut d = DensityGrid::new(grid);
    for r in samples {
        d.add(r);
    }
    d
}
