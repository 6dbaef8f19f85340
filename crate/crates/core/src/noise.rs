use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CoreError, Result};
use crate::grid::Grid1D;
use crate::rng::CounterRng;

/// One time step of the discretized Wiener field: i.i.d. Gaussian increments
/// with variance dt/dx per site (lattice form of E[dW(x) dW(x')] =
/// delta(x - x') dt).
#[derive(Debug, Clone)]
pub struct NoiseField {
    grid: Grid1D,
    dw: Vec<f64>,
}

impl NoiseField {
    pub fn zeros(grid: Grid1D) -> Self {
        let n = grid.n_sites();
        Self {
            grid,
            dw: vec![0.0; n],
        }
    }

    pub fn from_increments(grid: Grid1D, dw: Vec<f64>) -> Result<Self> {
        if dw.len() != grid.n_sites() {
            return Err(CoreError::GridMismatch(
                "increment count differs from grid".into(),
            ));
        }
        Ok(Self { grid, dw })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.dw
    }
}

/// Draws one NoiseField, advancing `rng` by exactly n_sites normal draws.
pub fn sample_noise(grid: &Grid1D, dt: f64, rng: &mut CounterRng) -> Result<NoiseField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CoreError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let std = (dt / grid.dx()).sqrt();
    let dw = (0..grid.n_sites())
        .map(|_| std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(NoiseField {
        grid: grid.clone(),
        dw,
    })
}
