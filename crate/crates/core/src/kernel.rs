//! Gaussian smearing kernels and circular convolution on the lattice.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::fft::FftEngine;
use crate::grid::Grid1D;

/// Smearing kernel g(x) = (2 pi r_C^2)^(-dim/2) exp(-x^2 / 2 r_C^2) sampled
/// at minimum-image displacements from site 0.
///
/// For dim > 1 this is the radial profile along the 1D grid; it feeds the
/// rate formulas only, never a multi-dimensional convolution.
pub fn gaussian_kernel(grid: &Grid1D, r_c: f64, dim: u32) -> Result<Vec<f64>> {
    if r_c < 2.0 * grid.dx() {
        return Err(CoreError::KernelUnresolvable {
            r_c,
            min: 2.0 * grid.dx(),
        });
    }
    let prefactor = (2.0 * std::f64::consts::PI * r_c * r_c).powf(-(dim as f64) / 2.0);
    Ok((0..grid.n_sites())
        .map(|i| {
            let d = grid.min_image_offset(i);
            prefactor * (-d * d / (2.0 * r_c * r_c)).exp()
        })
        .collect())
}

/// Circular convolution (f * g)(x_i) = sum_j f(x_j) g(x_i - x_j) dx, with
/// periodic minimum-image wrap, evaluated spectrally.
pub fn convolve(field: &[Complex64], kernel: &[f64], grid: &Grid1D) -> Result<Vec<Complex64>> {
    check_len(field.len(), kernel.len(), grid)?;
    let mut conv = Convolution::new(grid, kernel);
    let mut buf = field.to_vec();
    conv.apply(&mut buf);
    Ok(buf)
}

/// Real-field convenience wrapper for [`convolve`].
pub fn convolve_real(field: &[f64], kernel: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    let complex: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(convolve(&complex, kernel, grid)?
        .into_iter()
        .map(|c| c.re)
        .collect())
}

fn check_len(field: usize, kernel: usize, grid: &Grid1D) -> Result<()> {
    if field != grid.n_sites() || kernel != grid.n_sites() {
        return Err(CoreError::GridMismatch(format!(
            "field len {field}, kernel len {kernel}, grid has {} sites",
            grid.n_sites()
        )));
    }
    Ok(())
}

/// Reusable convolution against a fixed kernel; keeps the FFT plan and the
/// transformed kernel so per-step cost is two transforms.
pub struct Convolution {
    engine: FftEngine,
    kernel_hat: Vec<Complex64>,
    dx: f64,
}

impl Convolution {
    pub fn new(grid: &Grid1D, kernel: &[f64]) -> Self {
        assert_eq!(kernel.len(), grid.n_sites());
        let mut engine = FftEngine::new(grid.n_sites());
        let mut kernel_hat: Vec<Complex64> =
            kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        engine.forward(&mut kernel_hat);
        Self {
            engine,
            kernel_hat,
            dx: grid.dx(),
        }
    }

    /// In-place convolution of `buf` with the stored kernel, scaled by dx.
    pub fn apply(&mut self, buf: &mut [Complex64]) {
        self.engine.forward(buf);
        for (v, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *v *= k * self.dx;
        }
        self.engine.inverse(buf);
    }

    /// Convolve a real field, writing the real part into `out`.
    pub fn apply_real(&mut self, field: &[f64], out: &mut [f64]) {
        let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply(&mut buf);
        for (o, c) in out.iter_mut().zip(&buf) {
            *o = c.re;
        }
    }
}

/// Kernel self-correlation K(d) = integral g(z) g(z - d) dz on the grid.
///
/// K(0) equals lambda/gamma in the matching dimension convention.
pub fn kernel_correlation(grid: &Grid1D, kernel: &[f64]) -> Result<Vec<f64>> {
    // g is even under minimum image, so correlation equals convolution.
    convolve_real(kernel, kernel, grid)
}
