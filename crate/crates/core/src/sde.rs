//! Stochastic trajectory integrator for the single-particle collapse
//! equation on the lattice.
//!
//! One step is, in order: spectral kinetic half-step, position-space
//! potential phase, Euler-Maruyama collapse update
//! `psi *= 1 + (A - <A>) - D dt`, kinetic half-step, renormalization.
//! The collapse potentials are
//!
//!   A(q) = (sqrt(gamma) m / m0) * (g * dW)(q)
//!   D(q) = (gamma m^2 / 2 m0^2) [K(0) - 2 (K * rho)(q) + sum K rho rho]
//!
//! with K the kernel self-correlation; both are evaluated by circular
//! convolution against cached kernel transforms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::fft::FftEngine;
use crate::grid::Grid1D;
use crate::hamiltonian::{Hamiltonian, KineticScheme};
use crate::kernel::{gaussian_kernel, kernel_correlation, Convolution};
use crate::noise::{sample_noise, NoiseField};
use crate::params::CslParams;
use crate::rng::CounterRng;
use crate::wavefunction::Wavefunction;

/// Maximum allowed pre-renormalization norm drift per step.
pub const NORM_DRIFT_LIMIT: f64 = 1e-2;

/// Time-stepping scheme for the Hamiltonian part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum StepScheme {
    /// Strang-style splitting: exact spectral kinetic half-steps around the
    /// position-space potential phase and collapse update.
    #[default]
    SpectralSplit,
    /// Plain Euler-Maruyama with H psi evaluated by the given kinetic
    /// discretization.
    Euler { kinetic: KineticScheme },
}

impl StepScheme {
    pub fn kinetic(&self) -> KineticScheme {
        match self {
            StepScheme::SpectralSplit => KineticScheme::Spectral,
            StepScheme::Euler { kinetic } => *kinetic,
        }
    }
}

/// Observable sampled along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Observable {
    Norm,
    PositionMean,
    PositionVariance,
    Energy,
    /// Probability in the half-open site range [start, end).
    RegionProbability {
        start: usize,
        end: usize,
    },
}

impl Observable {
    pub fn column_name(&self) -> String {
        match self {
            Observable::Norm => "norm".into(),
            Observable::PositionMean => "x_mean".into(),
            Observable::PositionVariance => "x_var".into(),
            Observable::Energy => "energy".into(),
            Observable::RegionProbability { start, end } => format!("p_region_{start}_{end}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Base seed; combined with `stream` to derive the noise stream.
    pub seed: u64,
    /// Stream index within an ensemble (trajectory number).
    pub stream: u64,
    /// Observables are sampled every `snapshot_stride` steps.
    pub snapshot_stride: usize,
    pub observables: Vec<Observable>,
    pub scheme: StepScheme,
    /// Keep full wavefunction snapshots alongside the observable series.
    pub store_snapshots: bool,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, n_steps: usize, seed: u64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CoreError::InvalidArgument(format!(
                "dt must be positive, got {dt}"
            )));
        }
        Ok(Self {
            dt,
            n_steps,
            seed,
            stream: 0,
            snapshot_stride: 1,
            observables: vec![Observable::Norm],
            scheme: StepScheme::default(),
            store_snapshots: false,
        })
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            stream,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub observables: Vec<Observable>,
    /// One series per observable, indexed like `observables`.
    pub series: Vec<Vec<f64>>,
    pub snapshots: Vec<Wavefunction>,
    pub final_state: Wavefunction,
    pub seed: u64,
    pub stream: u64,
}

impl TrajectoryRecord {
    pub fn series_for(&self, obs: &Observable) -> Option<&[f64]> {
        self.observables
            .iter()
            .position(|o| o == obs)
            .map(|i| self.series[i].as_slice())
    }
}

/// Smeared noise potential A and its expectation <A> in the current state.
pub fn smeared_noise_potential(
    psi: &Wavefunction,
    noise: &NoiseField,
    kernel: &[f64],
    params: &CslParams,
) -> Result<(Vec<f64>, f64)> {
    psi.grid().check_same(noise.grid(), "noise potential")?;
    let mut conv = Convolution::new(psi.grid(), kernel);
    let mut a = vec![0.0; psi.grid().n_sites()];
    conv.apply_real(noise.increments(), &mut a);
    let scale = params.gamma.sqrt() * params.m / params.m0;
    for v in &mut a {
        *v *= scale;
    }
    let mean = expectation(psi, &a);
    Ok((a, mean))
}

/// Collapse drift potential D >= 0.
pub fn collapse_drift_potential(
    psi: &Wavefunction,
    kernel: &[f64],
    params: &CslParams,
) -> Result<Vec<f64>> {
    let grid = psi.grid();
    if kernel.len() != grid.n_sites() {
        return Err(CoreError::GridMismatch(
            "kernel length differs from grid".into(),
        ));
    }
    let corr = kernel_correlation(grid, kernel)?;
    let mut conv = Convolution::new(grid, &corr);
    let rho = psi.density();
    let mut k_rho = vec![0.0; grid.n_sites()];
    conv.apply_real(&rho, &mut k_rho);
    Ok(drift_from_correlation(
        &rho,
        &k_rho,
        corr[0],
        grid.dx(),
        params,
    ))
}

fn drift_from_correlation(
    rho: &[f64],
    k_rho: &[f64],
    k0: f64,
    dx: f64,
    params: &CslParams,
) -> Vec<f64> {
    let c = params.gamma * params.m * params.m / (2.0 * params.m0 * params.m0);
    let quad: f64 = rho.iter().zip(k_rho).map(|(r, k)| r * k).sum::<f64>() * dx;
    k_rho
        .iter()
        .map(|&k| (c * (k0 - 2.0 * k + quad)).max(0.0))
        .collect()
}

fn expectation(psi: &Wavefunction, field: &[f64]) -> f64 {
    psi.amps()
        .iter()
        .zip(field)
        .map(|(a, &f)| a.norm_sqr() * f)
        .sum::<f64>()
        * psi.grid().dx()
}

/// Stateful stepper: caches kernel transforms, FFT plans and phase tables.
pub struct CslIntegrator {
    grid: Grid1D,
    params: CslParams,
    dt: f64,
    scheme: StepScheme,
    hamiltonian: Option<Hamiltonian>,
    collapse: Option<CollapseTerms>,
    split: Option<SplitTables>,
    engine: FftEngine,
}

struct CollapseTerms {
    g_conv: Convolution,
    k_conv: Convolution,
    k0: f64,
    noise_scale: f64,
    a_field: Vec<f64>,
    k_rho: Vec<f64>,
    rho: Vec<f64>,
}

struct SplitTables {
    kinetic_half: Vec<Complex64>,
    potential_phase: Option<Vec<Complex64>>,
}

impl CslIntegrator {
    pub fn new(
        grid: &Grid1D,
        hamiltonian: Option<&Hamiltonian>,
        params: &CslParams,
        dt: f64,
        scheme: StepScheme,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CoreError::InvalidArgument(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let collapse = if params.gamma > 0.0 {
            let g = gaussian_kernel(grid, params.r_c, params.dim)?;
            let corr = kernel_correlation(grid, &g)?;
            Some(CollapseTerms {
                g_conv: Convolution::new(grid, &g),
                k0: corr[0],
                k_conv: Convolution::new(grid, &corr),
                noise_scale: params.gamma.sqrt() * params.m / params.m0,
                a_field: vec![0.0; grid.n_sites()],
                k_rho: vec![0.0; grid.n_sites()],
                rho: vec![0.0; grid.n_sites()],
            })
        } else {
            None
        };
        let split = match (scheme, hamiltonian) {
            (StepScheme::SpectralSplit, Some(h)) => {
                let kinetic_half = (0..grid.n_sites())
                    .map(|i| {
                        let k = grid.wavenumber(i);
                        // exp(-i T dt / 2 hbar), T = hbar^2 k^2 / 2m
                        Complex64::from_polar(1.0, -h.hbar * k * k * dt / (4.0 * h.mass))
                    })
                    .collect();
                let pot = h.potential(grid);
                let potential_phase = if pot.iter().any(|&v| v != 0.0) {
                    Some(
                        pot.iter()
                            .map(|&v| Complex64::from_polar(1.0, -v * dt / h.hbar))
                            .collect(),
                    )
                } else {
                    None
                };
                Some(SplitTables {
                    kinetic_half,
                    potential_phase,
                })
            }
            _ => None,
        };
        Ok(Self {
            grid: grid.clone(),
            params: params.clone(),
            dt,
            scheme,
            hamiltonian: hamiltonian.cloned(),
            collapse,
            split,
            engine: FftEngine::new(grid.n_sites()),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `psi` by one step using the given noise increments.
    /// Returns the pre-renormalization norm drift |norm - 1|.
    pub fn step(&mut self, psi: &mut Wavefunction, noise: Option<&NoiseField>) -> Result<f64> {
        psi.grid().check_same(&self.grid, "integrator state")?;

        match self.scheme {
            StepScheme::SpectralSplit => {
                if let Some(split) = &self.split {
                    half_kinetic(&mut self.engine, psi, &split.kinetic_half);
                    if let Some(phase) = &split.potential_phase {
                        for (a, p) in psi.amps_mut().iter_mut().zip(phase) {
                            *a *= p;
                        }
                    }
                }
                self.apply_collapse(psi, noise)?;
                if let Some(split) = &self.split {
                    half_kinetic(&mut self.engine, psi, &split.kinetic_half);
                }
            }
            StepScheme::Euler { kinetic } => {
                let h_psi = match &self.hamiltonian {
                    Some(h) => Some(h.apply(psi, kinetic)?),
                    None => None,
                };
                self.apply_collapse(psi, noise)?;
                if let (Some(h_psi), Some(h)) = (h_psi, &self.hamiltonian) {
                    let factor = Complex64::new(0.0, -self.dt / h.hbar);
                    for (a, hp) in psi.amps_mut().iter_mut().zip(&h_psi) {
                        *a += factor * hp;
                    }
                }
            }
        }

        if !psi.is_finite() {
            return Err(CoreError::NonFinite {
                context: "csl step".into(),
                step: 0,
            });
        }
        let drift = (psi.norm() - 1.0).abs();
        if drift >= NORM_DRIFT_LIMIT {
            return Err(CoreError::StepTooLarge {
                step: 0,
                drift,
                limit: NORM_DRIFT_LIMIT,
            });
        }
        psi.renormalize();
        Ok(drift)
    }

    fn apply_collapse(&mut self, psi: &mut Wavefunction, noise: Option<&NoiseField>) -> Result<()> {
        let Some(terms) = &mut self.collapse else {
            return Ok(());
        };
        let noise = noise.ok_or_else(|| {
            CoreError::InvalidArgument("collapse step requires a noise field".into())
        })?;
        psi.grid().check_same(noise.grid(), "noise field")?;

        terms
            .g_conv
            .apply_real(noise.increments(), &mut terms.a_field);
        for v in &mut terms.a_field {
            *v *= terms.noise_scale;
        }
        let dx = self.grid.dx();
        for (r, a) in terms.rho.iter_mut().zip(psi.amps()) {
            *r = a.norm_sqr();
        }
        let a_mean: f64 = terms
            .rho
            .iter()
            .zip(&terms.a_field)
            .map(|(r, a)| r * a)
            .sum::<f64>()
            * dx;

        terms.k_conv.apply_real(&terms.rho, &mut terms.k_rho);
        let c = self.params.gamma * self.params.m * self.params.m
            / (2.0 * self.params.m0 * self.params.m0);
        let quad: f64 = terms
            .rho
            .iter()
            .zip(&terms.k_rho)
            .map(|(r, k)| r * k)
            .sum::<f64>()
            * dx;

        for (i, amp) in psi.amps_mut().iter_mut().enumerate() {
            let d = (c * (terms.k0 - 2.0 * terms.k_rho[i] + quad)).max(0.0);
            let factor = 1.0 + (terms.a_field[i] - a_mean) - d * self.dt;
            *amp *= factor;
        }
        Ok(())
    }
}

fn half_kinetic(engine: &mut FftEngine, psi: &mut Wavefunction, phase: &[Complex64]) {
    let buf = psi.amps_mut();
    engine.forward(buf);
    for (a, p) in buf.iter_mut().zip(phase) {
        *a *= p;
    }
    engine.inverse(buf);
}

/// One collapse step against explicit noise; convenience wrapper over
/// [`CslIntegrator`] for tests and single-shot use.
pub fn csl_step(
    psi: &Wavefunction,
    hamiltonian: Option<&Hamiltonian>,
    params: &CslParams,
    noise: &NoiseField,
    dt: f64,
    scheme: StepScheme,
) -> Result<Wavefunction> {
    let mut integrator = CslIntegrator::new(psi.grid(), hamiltonian, params, dt, scheme)?;
    let mut out = psi.clone();
    integrator.step(&mut out, Some(noise))?;
    Ok(out)
}

/// Runs a full trajectory; a deterministic function of (psi0, config).
pub fn run_trajectory(
    psi0: &Wavefunction,
    hamiltonian: Option<&Hamiltonian>,
    params: &CslParams,
    config: &TrajectoryConfig,
) -> Result<TrajectoryRecord> {
    let mut integrator =
        CslIntegrator::new(psi0.grid(), hamiltonian, params, config.dt, config.scheme)?;
    let mut rng = CounterRng::stream(config.seed, config.stream);
    let stride = config.snapshot_stride.max(1);

    let mut psi = psi0.clone();
    let mut record = TrajectoryRecord {
        times: Vec::new(),
        observables: config.observables.clone(),
        series: vec![Vec::new(); config.observables.len()],
        snapshots: Vec::new(),
        final_state: psi0.clone(),
        seed: config.seed,
        stream: config.stream,
    };
    sample(&mut record, &psi, hamiltonian, config, 0.0)?;

    for step in 1..=config.n_steps {
        let noise = if params.gamma > 0.0 {
            Some(sample_noise(psi0.grid(), config.dt, &mut rng)?)
        } else {
            None
        };
        integrator
            .step(&mut psi, noise.as_ref())
            .map_err(|e| match e {
                CoreError::StepTooLarge { drift, limit, .. } => {
                    CoreError::StepTooLarge { step, drift, limit }
                }
                CoreError::NonFinite { context, .. } => CoreError::NonFinite { context, step },
                other => other,
            })?;
        if step % stride == 0 {
            sample(
                &mut record,
                &psi,
                hamiltonian,
                config,
                step as f64 * config.dt,
            )?;
        }
    }
    record.final_state = psi;
    Ok(record)
}

fn sample(
    record: &mut TrajectoryRecord,
    psi: &Wavefunction,
    hamiltonian: Option<&Hamiltonian>,
    config: &TrajectoryConfig,
    t: f64,
) -> Result<()> {
    record.times.push(t);
    for (obs, series) in config.observables.iter().zip(&mut record.series) {
        let v = match obs {
            Observable::Norm => psi.norm(),
            Observable::PositionMean => psi.position_mean(),
            Observable::PositionVariance => psi.position_variance(),
            Observable::Energy => match hamiltonian {
                Some(h) => h.expectation(psi, config.scheme.kinetic())?,
                None => 0.0,
            },
            Observable::RegionProbability { start, end } => psi.probability_in(*start, *end),
        };
        series.push(v);
    }
    if config.store_snapshots {
        record.snapshots.push(psi.clone());
    }
    Ok(())
}

/// Runs `n_traj` independent trajectories on the rayon pool; stream i is
/// derived from (config.seed, i), and results are collected in trajectory
/// order, so the output is identical for any worker count.
pub fn run_ensemble(
    psi0: &Wavefunction,
    hamiltonian: Option<&Hamiltonian>,
    params: &CslParams,
    config: &TrajectoryConfig,
    n_traj: usize,
) -> Result<Vec<TrajectoryRecord>> {
    use rayon::prelude::*;
    (0..n_traj as u64)
        .into_par_iter()
        .map(|i| run_trajectory(psi0, hamiltonian, params, &config.with_stream(i)))
        .collect()
}
