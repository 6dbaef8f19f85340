//! Deterministic master-equation evolution and closed-form rate oracles.
//!
//! The collapse Lindblad operators are multiplication operators on the
//! lattice, so the dissipator is exactly diagonal in the (x_a, x_b) pair
//! basis: each element decays as exp(-Gamma(x_a - x_b) t). The Hamiltonian
//! part, when present, is applied as a split-step unitary sandwiched
//! between two half-steps of the exact damping.

use num_complex::Complex64;
use rand::Rng;

use crate::density::DensityMatrix;
use crate::error::{CoreError, Result};
use crate::fft::FftEngine;
use crate::hamiltonian::Hamiltonian;
use crate::params::CslParams;
use crate::rng::CounterRng;
use crate::sde::{Observable, TrajectoryRecord};

/// Off-diagonal decay rate at separation d:
/// Gamma(d) = lambda (m/m0)^2 (1 - exp(-d^2 / 4 r_C^2)).
pub fn decay_rate(d: f64, params: &CslParams) -> f64 {
    let mass_ratio = params.m / params.m0;
    params.lambda()
        * mass_ratio
        * mass_ratio
        * (1.0 - (-d * d / (4.0 * params.r_c * params.r_c)).exp())
}

/// Collapse-noise heating rate for a particle of mass `m`:
/// dE/dt = (dim lambda / 4) (hbar^2 / r_C^2) (m / m0^2).
///
/// At dim = 3 this is the standard 3/4 form; each spatial degree of freedom
/// contributes lambda hbar^2 m / (4 r_C^2 m0^2).
pub fn heating_rate(params: &CslParams, mass: f64) -> f64 {
    params.dim as f64 / 4.0 * params.lambda() * params.hbar * params.hbar
        / (params.r_c * params.r_c)
        * mass
        / (params.m0 * params.m0)
}

/// Integrates d rho/dt = -(i/hbar)[H, rho] - Gamma(x_a - x_b) rho for
/// `n_steps` steps of `dt`.
///
/// With H = None the damping solution is exact (element-wise exponential);
/// with a Hamiltonian the unitary part is a spectral split step and the
/// overall scheme is second order. Trace and Hermiticity are preserved by
/// construction; positivity is monitored and aborts beyond -1e-8.
pub fn evolve_master(
    rho: &DensityMatrix,
    hamiltonian: Option<&Hamiltonian>,
    params: &CslParams,
    dt: f64,
    n_steps: usize,
) -> Result<DensityMatrix> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CoreError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let grid = rho.grid().clone();
    let n = grid.n_sites();

    // Damping factor per element for half a step.
    let half_damp: Vec<f64> = (0..n)
        .map(|off| {
            let d = grid.min_image_offset(off);
            (-decay_rate(d.abs(), params) * 0.5 * dt).exp()
        })
        .collect();

    let unitary = hamiltonian.map(|h| SplitUnitary::new(&grid, h, dt));

    let mut out = rho.clone();
    for step in 0..n_steps {
        apply_damping(&mut out, &half_damp);
        if let Some(u) = &unitary {
            u.conjugate(out.elements_mut());
        }
        apply_damping(&mut out, &half_damp);

        if out
            .elements()
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(CoreError::NonFinite {
                context: "master evolution".into(),
                step,
            });
        }
    }

    let min = out.min_eigenvalue();
    if min < -1e-8 {
        return Err(CoreError::PositivityViolated(min));
    }
    Ok(out)
}

fn apply_damping(rho: &mut DensityMatrix, half_damp: &[f64]) {
    let n = half_damp.len();
    let m = rho.elements_mut();
    for b in 0..n {
        for a in 0..n {
            let off = (a + n - b) % n;
            m[(a, b)] *= half_damp[off];
        }
    }
}

/// rho -> U rho U^dagger with U the split-step propagator
/// exp(-i T dt / 2hbar) exp(-i V dt / hbar) exp(-i T dt / 2hbar).
struct SplitUnitary {
    kinetic_half: Vec<Complex64>,
    potential: Vec<Complex64>,
}

impl SplitUnitary {
    fn new(grid: &crate::grid::Grid1D, h: &Hamiltonian, dt: f64) -> Self {
        let kinetic_half = (0..grid.n_sites())
            .map(|i| {
                let k = grid.wavenumber(i);
                Complex64::from_polar(1.0, -h.hbar * k * k * dt / (4.0 * h.mass))
            })
            .collect();
        let potential = h
            .potential(grid)
            .iter()
            .map(|&v| Complex64::from_polar(1.0, -v * dt / h.hbar))
            .collect();
        Self {
            kinetic_half,
            potential,
        }
    }

    fn apply_columns(&self, m: &mut nalgebra::DMatrix<Complex64>, engine: &mut FftEngine) {
        let n = m.nrows();
        let mut buf = vec![Complex64::default(); n];
        for col in 0..m.ncols() {
            for (i, v) in buf.iter_mut().enumerate() {
                *v = m[(i, col)];
            }
            engine.forward(&mut buf);
            for (v, p) in buf.iter_mut().zip(&self.kinetic_half) {
                *v *= p;
            }
            engine.inverse(&mut buf);
            for (v, p) in buf.iter_mut().zip(&self.potential) {
                *v *= p;
            }
            engine.forward(&mut buf);
            for (v, p) in buf.iter_mut().zip(&self.kinetic_half) {
                *v *= p;
            }
            engine.inverse(&mut buf);
            for (i, v) in buf.iter().enumerate() {
                m[(i, col)] = *v;
            }
        }
    }

    /// U rho U^dagger = U (U rho^dagger)^dagger.
    fn conjugate(&self, m: &mut nalgebra::DMatrix<Complex64>) {
        let mut engine = FftEngine::new(m.nrows());
        let mut adj = m.adjoint();
        self.apply_columns(&mut adj, &mut engine);
        *m = adj.adjoint();
        self.apply_columns(m, &mut engine);
    }
}

/// Least-squares slope of mean energy vs time with a bootstrap standard
/// error over trajectories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingFit {
    pub slope: f64,
    pub std_error: f64,
}

/// Fits the ensemble-mean energy growth of `records`; requires at least 100
/// trajectories carrying an energy series.
pub fn measure_heating(records: &[TrajectoryRecord]) -> Result<HeatingFit> {
    measure_heating_with(records, 100)
}

pub(crate) fn measure_heating_with(
    records: &[TrajectoryRecord],
    min_traj: usize,
) -> Result<HeatingFit> {
    if records.len() < min_traj {
        return Err(CoreError::InsufficientData(format!(
            "heating fit needs >= {min_traj} trajectories, got {}",
            records.len()
        )));
    }
    let times = &records[0].times;
    let energies: Vec<&[f64]> = records
        .iter()
        .map(|r| {
            r.series_for(&Observable::Energy)
                .ok_or_else(|| CoreError::InsufficientData("record lacks an energy series".into()))
        })
        .collect::<Result<_>>()?;
    for (i, e) in energies.iter().enumerate() {
        if e.len() != times.len() || records[i].times != *times {
            return Err(CoreError::ScheduleMismatch(format!(
                "trajectory {i} has a different sample schedule"
            )));
        }
    }
    if times.len() < 2 {
        return Err(CoreError::InsufficientData(
            "need at least two sample times to fit a slope".into(),
        ));
    }

    let slope_of = |chosen: &[usize]| -> f64 {
        let n_t = times.len();
        let mut mean = vec![0.0; n_t];
        for &i in chosen {
            for (m, v) in mean.iter_mut().zip(energies[i]) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= chosen.len() as f64;
        }
        least_squares_slope(times, &mean)
    };

    let all: Vec<usize> = (0..records.len()).collect();
    let slope = slope_of(&all);

    // bootstrap over trajectories, fixed number of resamples
    let n_boot = 200;
    let mut rng = CounterRng::stream(0x6f07, records.len() as u64);
    let mut boots = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let sample: Vec<usize> = (0..records.len())
            .map(|_| rng.gen_range(0..records.len()))
            .collect();
        boots.push(slope_of(&sample));
    }
    let mean_b = boots.iter().sum::<f64>() / n_boot as f64;
    let var_b = boots
        .iter()
        .map(|b| (b - mean_b) * (b - mean_b))
        .sum::<f64>()
        / (n_boot as f64 - 1.0);

    Ok(HeatingFit {
        slope,
        std_error: var_b.sqrt(),
    })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}
