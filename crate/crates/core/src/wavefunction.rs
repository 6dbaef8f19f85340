use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::grid::Grid1D;

/// Normalized single-particle state on the lattice:
/// sum_i |amps_i|^2 dx = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: Grid1D,
    amps: Vec<Complex64>,
}

impl Wavefunction {
    /// Builds and normalizes; rejects the zero vector.
    pub fn new(grid: Grid1D, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.n_sites() {
            return Err(CoreError::GridMismatch(format!(
                "{} amplitudes on a {}-site grid",
                amps.len(),
                grid.n_sites()
            )));
        }
        let mut wf = Self { grid, amps };
        let n = wf.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "wavefunction must be nonzero and finite".into(),
            ));
        }
        wf.renormalize();
        Ok(wf)
    }

    /// Gaussian packet of width sigma centered at x0 with carrier momentum
    /// hbar * k0 (built with minimum-image distances, then normalized).
    pub fn gaussian(grid: &Grid1D, x0: f64, sigma: f64, k0: f64) -> Result<Self> {
        let amps = grid
            .positions()
            .map(|x| {
                let d = grid.min_image(x - x0);
                Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k0 * d)
            })
            .collect();
        Self::new(grid.clone(), amps)
    }

    /// Superposition a * left + b * right of two packets; coefficients are
    /// applied to already-normalized packets, then the sum is renormalized.
    pub fn two_gaussian(
        grid: &Grid1D,
        a: Complex64,
        x_left: f64,
        b: Complex64,
        x_right: f64,
        sigma: f64,
    ) -> Result<Self> {
        let l = Self::gaussian(grid, x_left, sigma, 0.0)?;
        let r = Self::gaussian(grid, x_right, sigma, 0.0)?;
        let amps = l
            .amps
            .iter()
            .zip(&r.amps)
            .map(|(&la, &ra)| a * la + b * ra)
            .collect();
        Self::new(grid.clone(), amps)
    }

    /// All probability on one site.
    pub fn site_eigenstate(grid: &Grid1D, site: usize) -> Result<Self> {
        let mut amps = vec![Complex64::default(); grid.n_sites()];
        amps[site % grid.n_sites()] = Complex64::new(1.0, 0.0);
        Self::new(grid.clone(), amps)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// L2 norm sqrt(sum |amps|^2 dx).
    pub fn norm(&self) -> f64 {
        (self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn renormalize(&mut self) {
        let n = self.norm();
        let inv = 1.0 / n;
        for a in &mut self.amps {
            *a *= inv;
        }
    }

    /// |psi|^2 per site.
    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability in a half-open site range [start, end), periodic-safe
    /// only for start <= end.
    pub fn probability_in(&self, start: usize, end: usize) -> f64 {
        self.amps[start..end]
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            * self.grid.dx()
    }

    pub fn inner(&self, other: &Wavefunction) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    pub fn position_mean(&self) -> f64 {
        self.grid
            .positions()
            .zip(&self.amps)
            .map(|(x, a)| x * a.norm_sqr())
            .sum::<f64>()
            * self.grid.dx()
    }

    pub fn position_variance(&self) -> f64 {
        let mean = self.position_mean();
        self.grid
            .positions()
            .zip(&self.amps)
            .map(|(x, a)| (x - mean) * (x - mean) * a.norm_sqr())
            .sum::<f64>()
            * self.grid.dx()
    }

    pub fn is_finite(&self) -> bool {
        self.amps
            .iter()
            .all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_on_construction() {
        let g = Grid1D::centered(32, 0.5).unwrap();
        let wf = Wavefunction::new(g, vec![Complex64::new(2.0, 1.0); 32]).unwrap();
        assert!((wf.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_zero_state() {
        let g = Grid1D::centered(32, 0.5).unwrap();
        assert!(Wavefunction::new(g, vec![Complex64::default(); 32]).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let g = Grid1D::centered(256, 0.1).unwrap();
        let wf = Wavefunction::gaussian(&g, 1.5, 1.0, 0.0).unwrap();
        assert!((wf.position_mean() - 1.5).abs() < 1e-8);
        assert!((wf.position_variance() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn two_gaussian_split_weights() {
        let g = Grid1D::centered(256, 0.125).unwrap();
        let a = Complex64::new(0.7f64.sqrt(), 0.0);
        let b = Complex64::new(0.3f64.sqrt(), 0.0);
        let wf = Wavefunction::two_gaussian(&g, a, -8.0, b, 8.0, 0.5).unwrap();
        let p_left = wf.probability_in(0, 128);
        assert!((p_left - 0.7).abs() < 1e-10);
    }
}
