use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Physical constants of the collapse model.
///
/// `gamma` is the collapse coupling (length^dim / time), `r_c` the noise
/// correlation length, `m0` the reference mass normalizing the
/// mass-proportional coupling, `m` the particle mass and `dim` the spatial
/// dimension used in the rate formulas. Dynamics always runs on a 1D
/// lattice; `dim` only enters the closed-form rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CslParams {
    pub gamma: f64,
    pub r_c: f64,
    pub m0: f64,
    pub m: f64,
    pub hbar: f64,
    pub dim: u32,
}

impl CslParams {
    pub fn new(gamma: f64, r_c: f64, m0: f64, m: f64, hbar: f64, dim: u32) -> Result<Self> {
        for (name, v) in [
            ("gamma", gamma),
            ("r_c", r_c),
            ("m0", m0),
            ("m", m),
            ("hbar", hbar),
        ] {
            if !(v >= 0.0 && v.is_finite()) || (name != "gamma" && v == 0.0) {
                return Err(CoreError::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(1..=3).contains(&dim) {
            return Err(CoreError::InvalidArgument(format!(
                "dim must be 1, 2 or 3, got {dim}"
            )));
        }
        Ok(Self {
            gamma,
            r_c,
            m0,
            m,
            hbar,
            dim,
        })
    }

    /// Simulation-unit parameters: hbar = m0 = m = r_c = 1, collapse rate
    /// `lambda` in 1D.
    pub fn simulation_units(lambda: f64) -> Self {
        Self {
            gamma: gamma_from_lambda(lambda, 1.0, 1),
            r_c: 1.0,
            m0: 1.0,
            m: 1.0,
            hbar: 1.0,
            dim: 1,
        }
    }

    /// Collapse rate constant for these parameters.
    pub fn lambda(&self) -> f64 {
        lambda_from_gamma(self.gamma, self.r_c, self.dim)
    }
}

/// lambda = gamma / (4 pi r_C^2)^(dim/2).
///
/// At dim = 3 this is the standard decay constant; lower dimensions use the
/// same gamma * integral(g^2) convention, which reduces to
/// gamma / (2 sqrt(pi) r_C) in 1D.
pub fn lambda_from_gamma(gamma: f64, r_c: f64, dim: u32) -> f64 {
    gamma / (4.0 * std::f64::consts::PI * r_c * r_c).powf(dim as f64 / 2.0)
}

/// Inverse of [`lambda_from_gamma`].
pub fn gamma_from_lambda(lambda: f64, r_c: f64, dim: u32) -> f64 {
    lambda * (4.0 * std::f64::consts::PI * r_c * r_c).powf(dim as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lambda_matches_3d_form() {
        // gamma chosen so lambda comes out at the canonical 1e-17 / s
        let r_c = 1e-7;
        let gamma = (4.0 * PI * r_c * r_c).powf(1.5) * 1e-17;
        let lambda = lambda_from_gamma(gamma, r_c, 3);
        assert!((lambda - 1e-17).abs() < 1e-30);
    }

    #[test]
    fn lambda_1d_closed_form() {
        // oracle: quadrature of gamma * integral g(z)^2 dz, see tests/oracles.rs
        let lambda = lambda_from_gamma(1.0, 1.0, 1);
        assert!((lambda - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        for dim in 1..=3 {
            let g = gamma_from_lambda(0.37, 2.5, dim);
            assert!((lambda_from_gamma(g, 2.5, dim) - 0.37).abs() < 1e-14);
        }
    }

    #[test]
    fn monotone_in_r_c_linear_in_gamma() {
        let mut prev = f64::INFINITY;
        for r in [0.5, 1.0, 2.0, 4.0] {
            let l = lambda_from_gamma(1.0, r, 1);
            assert!(l < prev);
            prev = l;
            assert!((lambda_from_gamma(3.0, r, 1) - 3.0 * l).abs() < 1e-14 * l.abs());
        }
    }

    #[test]
    fn rejects_bad_dim() {
        assert!(CslParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 4).is_err());
        assert!(CslParams::new(1.0, -1.0, 1.0, 1.0, 1.0, 1).is_err());
    }
}
