use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Unnormalised 2D FFT on a row-major `nx * ny` array.
///
/// The `*_t` variants leave the spectrum transposed (`i * ny + j`), which
/// saves two transposes per split step when only diagonal operators are
/// applied in k-space.
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let (fwd_x, inv_x) = (planner.plan_fft_forward(nx), planner.plan_fft_inverse(nx));
        let (fwd_y, inv_y) = (planner.plan_fft_forward(ny), planner.plan_fft_inverse(ny));
        let len = [&fwd_x, &inv_x, &fwd_y, &inv_y].iter().map(|f| f.get_inplace_scratch_len()).max().unwrap_or(0);
        Self {
            nx,
            ny,
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            scratch: vec![Complex64::default(); len],
            buf: vec![Complex64::default(); nx * ny],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Natural layout in, transposed spectrum out.
    pub fn forward_t(&mut self, data: &mut [Complex64]) {
        self.fwd_x.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.buf, self.nx, self.ny);
        self.fwd_y.process_with_scratch(&mut self.buf, &mut self.scratch);
        data.copy_from_slice(&self.buf);
    }

    /// Transposed spectrum in, natural layout out; unnormalised.
    pub fn inverse_t(&mut self, data: &mut [Complex64]) {
        self.inv_y.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.buf, self.ny, self.nx);
        self.inv_x.process_with_scratch(&mut self.buf, &mut self.scratch);
        data.copy_from_slice(&self.buf);
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.forward_t(data);
        transpose(data, &mut self.buf, self.ny, self.nx);
        data.copy_from_slice(&self.buf);
    }

    /// Inverse including the `1 / (nx ny)` factor.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        transpose(data, &mut self.buf, self.nx, self.ny);
        data.copy_from_slice(&self.buf);
        self.inverse_t(data);
        let s = 1.0 / (self.nx * self.ny) as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }
}

/// `src` holds `rows` rows of length `cols`; `dst` receives the transpose.
fn transpose(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_dft() {
        let (nx, ny) = (8, 4);
        let data: Vec<Complex64> =
            (0..nx * ny).map(|n| Complex64::new((n as f64 * 0.37).sin(), (n as f64 * 0.11).cos())).collect();
        let mut f = data.clone();
        Fft2::new(nx, ny).forward(&mut f);
        for (ky, kx) in [(0, 0), (1, 3), (3, 7), (2, 5)] {
            let mut s = Complex64::default();
            for j in 0..ny {
                for i in 0..nx {
                    let ph = -2.0 * std::f64::consts::PI * ((kx * i) as f64 / nx as f64 + (ky * j) as f64 / ny as f64);
                    s += data[j * nx + i] * Complex64::from_polar(1.0, ph);
                }
            }
            assert!((s - f[ky * nx + kx]).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip() {
        let (nx, ny) = (16, 8);
        let data: Vec<Complex64> = (0..nx * ny).map(|n| Complex64::new(n as f64, -(n as f64).sqrt())).collect();
        let mut f = data.clone();
        let mut fft = Fft2::new(nx, ny);
        fft.forward(&mut f);
        fft.inverse(&mut f);
        assert!(data.iter().zip(&f).all(|(a, b)| (a - b).norm() < 1e-10));
    }
}
