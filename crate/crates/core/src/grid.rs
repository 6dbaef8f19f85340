use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Uniform periodic 1D lattice. Site `i` sits at `x_min + i * dx`; site
/// `n_sites` wraps back to site 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n_sites: usize,
    dx: f64,
    x_min: f64,
}

impl Grid1D {
    pub fn new(n_sites: usize, dx: f64, x_min: f64) -> Result<Self> {
        if n_sites < 8 {
            return Err(CoreError::InvalidArgument(format!(
                "n_sites must be >= 8, got {n_sites}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(CoreError::InvalidArgument(format!(
                "dx must be positive and finite, got {dx}"
            )));
        }
        Ok(Self { n_sites, dx, x_min })
    }

    /// Grid of `n_sites` sites centered on x = 0.
    pub fn centered(n_sites: usize, dx: f64) -> Result<Self> {
        let x_min = -0.5 * dx * n_sites as f64;
        Self::new(n_sites, dx, x_min)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    /// Total span of the periodic box.
    pub fn length(&self) -> f64 {
        self.dx * self.n_sites as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_sites).map(move |i| self.x(i))
    }

    /// Minimum-image displacement for site offset `i` (0 <= i < n_sites).
    pub fn min_image_offset(&self, i: usize) -> f64 {
        let half = self.n_sites / 2;
        if i <= half {
            i as f64 * self.dx
        } else {
            (i as f64 - self.n_sites as f64) * self.dx
        }
    }

    /// Minimum-image signed distance between two coordinates in the box.
    pub fn min_image(&self, d: f64) -> f64 {
        let l = self.length();
        let mut r = d % l;
        if r > 0.5 * l {
            r -= l;
        } else if r < -0.5 * l {
            r += l;
        }
        r
    }

    /// Angular wavenumber for FFT bin `i` on this lattice.
    pub fn wavenumber(&self, i: usize) -> f64 {
        let n = self.n_sites;
        let k_unit = 2.0 * std::f64::consts::PI / self.length();
        if i <= n / 2 {
            i as f64 * k_unit
        } else {
            (i as f64 - n as f64) * k_unit
        }
    }

    pub fn check_same(&self, other: &Grid1D, what: &str) -> Result<()> {
        if self != other {
            return Err(CoreError::GridMismatch(format!(
                "{what}: {} sites x {} vs {} sites x {}",
                self.n_sites, self.dx, other.n_sites, other.dx
            )));
        }
        Ok(())
    }
}
