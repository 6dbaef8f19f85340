use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::fft::FftEngine;
use crate::grid::Grid1D;
use crate::wavefunction::Wavefunction;

/// How the kinetic term -hbar^2/2m d^2/dx^2 is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KineticScheme {
    /// Exact lattice dispersion hbar^2 k^2 / 2m via FFT.
    #[default]
    Spectral,
    /// 3-point stencil (psi_{i-1} - 2 psi_i + psi_{i+1}) / dx^2.
    Stencil3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HamiltonianKind {
    Free,
    Harmonic { omega: f64 },
    ExternalPotential { values: Vec<f64> },
}

/// Lattice Hamiltonian H = T + V with a diagonal position-space potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    pub kind: HamiltonianKind,
    pub mass: f64,
    pub hbar: f64,
}

impl Hamiltonian {
    pub fn free(mass: f64, hbar: f64) -> Self {
        Self {
            kind: HamiltonianKind::Free,
            mass,
            hbar,
        }
    }

    pub fn harmonic(mass: f64, hbar: f64, omega: f64) -> Self {
        Self {
            kind: HamiltonianKind::Harmonic { omega },
            mass,
            hbar,
        }
    }

    pub fn external(mass: f64, hbar: f64, values: Vec<f64>) -> Self {
        Self {
            kind: HamiltonianKind::ExternalPotential { values },
            mass,
            hbar,
        }
    }

    /// Diagonal potential value at site i.
    pub fn potential_at(&self, grid: &Grid1D, i: usize) -> f64 {
        match &self.kind {
            HamiltonianKind::Free => 0.0,
            HamiltonianKind::Harmonic { omega } => {
                let x = grid.min_image(grid.x(i));
                0.5 * self.mass * omega * omega * x * x
            }
            HamiltonianKind::ExternalPotential { values } => values[i],
        }
    }

    pub fn potential(&self, grid: &Grid1D) -> Vec<f64> {
        (0..grid.n_sites())
            .map(|i| self.potential_at(grid, i))
            .collect()
    }

    /// H psi as a field per site.
    pub fn apply(&self, psi: &Wavefunction, scheme: KineticScheme) -> Result<Vec<Complex64>> {
        if let HamiltonianKind::ExternalPotential { values } = &self.kind {
            if values.len() != psi.grid().n_sites() {
                return Err(CoreError::GridMismatch(
                    "potential length differs from grid".into(),
                ));
            }
        }
        let grid = psi.grid();
        let mut out = self.apply_kinetic(psi, scheme);
        for (i, v) in out.iter_mut().enumerate() {
            *v += self.potential_at(grid, i) * psi.amps()[i];
        }
        Ok(out)
    }

    fn apply_kinetic(&self, psi: &Wavefunction, scheme: KineticScheme) -> Vec<Complex64> {
        let grid = psi.grid();
        let n = grid.n_sites();
        let coeff = self.hbar * self.hbar / (2.0 * self.mass);
        match scheme {
            KineticScheme::Spectral => {
                let mut buf = psi.amps().to_vec();
                let mut eng = FftEngine::new(n);
                eng.forward(&mut buf);
                for (i, v) in buf.iter_mut().enumerate() {
                    let k = grid.wavenumber(i);
                    *v *= coeff * k * k;
                }
                eng.inverse(&mut buf);
                buf
            }
            KineticScheme::Stencil3 => {
                let a = psi.amps();
                let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
                (0..n)
                    .map(|i| {
                        let left = a[(i + n - 1) % n];
                        let right = a[(i + 1) % n];
                        -coeff * (left - 2.0 * a[i] + right) * inv_dx2
                    })
                    .collect()
            }
        }
    }

    /// <psi|H|psi>, real for Hermitian H.
    pub fn expectation(&self, psi: &Wavefunction, scheme: KineticScheme) -> Result<f64> {
        let h_psi = self.apply(psi, scheme)?;
        let dx = psi.grid().dx();
        Ok(psi
            .amps()
            .iter()
            .zip(&h_psi)
            .map(|(a, h)| (a.conj() * h).re)
            .sum::<f64>()
            * dx)
    }
}
