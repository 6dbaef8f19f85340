//! Monte-Carlo verification of Born-rule collapse statistics and
//! superposition lifetimes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::Grid1D;
use crate::master::decay_rate;
use crate::noise::sample_noise;
use crate::params::CslParams;
use crate::rng::CounterRng;
use crate::sde::{CslIntegrator, Observable, StepScheme, TrajectoryRecord};
use crate::wavefunction::Wavefunction;

/// Default decision threshold: a trajectory counts as collapsed once
/// P_left leaves [eps, 1 - eps].
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Left/right site intervals and the decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    /// Half-open site range [start, end).
    pub left: (usize, usize),
    pub right: (usize, usize),
    pub epsilon: f64,
}

impl RegionSpec {
    pub fn new(left: (usize, usize), right: (usize, usize), epsilon: f64) -> Result<Self> {
        if left.0 >= left.1 || right.0 >= right.1 {
            return Err(CoreError::InvalidArgument(
                "region intervals must be non-empty".into(),
            ));
        }
        let overlap = left.0 < right.1 && right.0 < left.1;
        if overlap {
            return Err(CoreError::InvalidArgument(
                "region intervals must be disjoint".into(),
            ));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(CoreError::InvalidArgument(format!(
                "epsilon must lie in (0, 0.5), got {epsilon}"
            )));
        }
        Ok(Self {
            left,
            right,
            epsilon,
        })
    }

    /// Split a centered grid into its left and right halves.
    pub fn halves(grid: &Grid1D, epsilon: f64) -> Result<Self> {
        let n = grid.n_sites();
        Self::new((0, n / 2), (n / 2, n), epsilon)
    }

    fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        if self.left.1 > grid.n_sites() || self.right.1 > grid.n_sites() {
            return Err(CoreError::GridMismatch(
                "region interval exceeds grid".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Left,
    Right,
    Undecided,
}

/// Classifies a state: Left if P_left >= 1 - eps (boundary inclusive),
/// Right if P_left <= eps, else Undecided.
pub fn is_collapsed(psi: &Wavefunction, regions: &RegionSpec) -> Result<Decision> {
    regions.check_grid(psi.grid())?;
    let p_left = psi.probability_in(regions.left.0, regions.left.1);
    Ok(classify(p_left, regions.epsilon))
}

fn classify(p_left: f64, epsilon: f64) -> Decision {
    if p_left >= 1.0 - epsilon {
        Decision::Left
    } else if p_left <= epsilon {
        Decision::Right
    } else {
        Decision::Undecided
    }
}

/// Per-trajectory outcome of a Born experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub trajectory: u64,
    pub decision: Decision,
    /// Time of first band crossing; t_max for undecided trajectories.
    pub time: f64,
}

/// Tallies of a Born experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornResult {
    pub n_left: usize,
    pub n_right: usize,
    pub n_undecided: usize,
    pub f_left: f64,
    pub f_right: f64,
    /// Binomial standard error sqrt(f (1-f) / n).
    pub std_error: f64,
    pub collapse_time_mean: f64,
    pub collapse_time_std: f64,
    pub t_max: f64,
    pub decisions: Vec<DecisionRecord>,
}

/// Grid used by the Born experiments: dx = r_C / 4, power-of-two site count
/// covering max(16 r_C, 2 * separation), centered on 0.
pub fn born_grid(params: &CslParams, separation: f64) -> Result<Grid1D> {
    let dx = params.r_c / 4.0;
    let span = (16.0 * params.r_c).max(2.0 * separation);
    let mut n = 64usize;
    while (n as f64) * dx < span {
        n *= 2;
    }
    Grid1D::centered(n, dx)
}

/// Runs `n_traj` collapse trajectories from alpha |G_left> + beta |G_right>
/// (Gaussians of width r_C / 2 at -/+ separation/2) with H = 0, each until
/// decided or t_max = 50 / Gamma(separation).
pub fn born_experiment(
    alpha: Complex64,
    beta: Complex64,
    separation: f64,
    params: &CslParams,
    n_traj: usize,
    base_seed: u64,
) -> Result<BornResult> {
    let weight = alpha.norm_sqr() + beta.norm_sqr();
    if (weight - 1.0).abs() > 1e-10 {
        return Err(CoreError::InvalidArgument(format!(
            "|alpha|^2 + |beta|^2 = {weight} differs from 1"
        )));
    }
    if separation < 6.0 * params.r_c {
        return Err(CoreError::InvalidArgument(format!(
            "separation {separation} below 6 r_C = {}",
            6.0 * params.r_c
        )));
    }
    let grid = born_grid(params, separation)?;
    let regions = RegionSpec::halves(&grid, DEFAULT_EPSILON)?;
    let psi0 = Wavefunction::two_gaussian(
        &grid,
        alpha,
        -0.5 * separation,
        beta,
        0.5 * separation,
        params.r_c / 2.0,
    )?;

    let gamma_rate = decay_rate(separation, params);
    let t_max = 50.0 / gamma_rate;
    // tail norm-drift events at 0.002 / lambda_eff come within reach of the
    // 1e-2 abort threshold over ~10^7 steps; halving keeps them ~6 sigma away
    let dt = 0.001 / (params.lambda() * (params.m / params.m0).powi(2));
    let max_steps = (t_max / dt).ceil() as usize;

    let decisions: Vec<DecisionRecord> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| -> Result<DecisionRecord> {
            let mut integrator =
                CslIntegrator::new(&grid, None, params, dt, StepScheme::SpectralSplit)?;
            let mut rng = CounterRng::stream(base_seed, i);
            let mut psi = psi0.clone();
            let mut decision = is_collapsed(&psi, &regions)?;
            let mut time = 0.0;
            for step in 1..=max_steps {
                if decision != Decision::Undecided {
                    break;
                }
                let noise = sample_noise(&grid, dt, &mut rng)?;
                integrator.step(&mut psi, Some(&noise))?;
                time = step as f64 * dt;
                decision = is_collapsed(&psi, &regions)?;
            }
            Ok(DecisionRecord {
                trajectory: i,
                decision,
                time,
            })
        })
        .collect::<Result<_>>()?;

    tally(decisions, t_max)
}

fn tally(decisions: Vec<DecisionRecord>, t_max: f64) -> Result<BornResult> {
    let n = decisions.len();
    let n_left = decisions
        .iter()
        .filter(|d| d.decision == Decision::Left)
        .count();
    let n_right = decisions
        .iter()
        .filter(|d| d.decision == Decision::Right)
        .count();
    let n_undecided = n - n_left - n_right;
    if n_undecided as f64 > 0.01 * n as f64 {
        return Err(CoreError::Undecidable {
            fraction: n_undecided as f64 / n as f64,
            t_max,
        });
    }
    let f_left = n_left as f64 / n as f64;
    let decided_times: Vec<f64> = decisions
        .iter()
        .filter(|d| d.decision != Decision::Undecided)
        .map(|d| d.time)
        .collect();
    let mean = decided_times.iter().sum::<f64>() / decided_times.len().max(1) as f64;
    let var = decided_times
        .iter()
        .map(|t| (t - mean) * (t - mean))
        .sum::<f64>()
        / (decided_times.len().max(2) - 1) as f64;
    Ok(BornResult {
        n_left,
        n_right,
        n_undecided,
        f_left,
        f_right: n_right as f64 / n as f64,
        std_error: (f_left * (1.0 - f_left) / n as f64).sqrt(),
        collapse_time_mean: mean,
        collapse_time_std: var.sqrt(),
        t_max,
        decisions,
    })
}

/// Worst-case standardized drift of the ensemble mean of a region
/// probability across sampled times: max_t |E[P](t) - E[P](0)| / SE(t).
///
/// A martingale stays below ~3; a 5-sigma injected drift is flagged.
pub fn martingale_check(records: &[TrajectoryRecord], region: &Observable) -> Result<f64> {
    if records.len() < 2 {
        return Err(CoreError::InsufficientData(
            "martingale check needs >= 2 trajectories".into(),
        ));
    }
    let series: Vec<&[f64]> = records
        .iter()
        .map(|r| {
            r.series_for(region).ok_or_else(|| {
                CoreError::InsufficientData("record lacks the region probability series".into())
            })
        })
        .collect::<Result<_>>()?;
    let n_t = series[0].len();
    if series.iter().any(|s| s.len() != n_t) {
        return Err(CoreError::ScheduleMismatch(
            "region probability series lengths differ".into(),
        ));
    }
    let n = records.len() as f64;
    let mean_at = |t: usize| series.iter().map(|s| s[t]).sum::<f64>() / n;
    let p0 = mean_at(0);
    let mut worst: f64 = 0.0;
    for t in 1..n_t {
        let mean = mean_at(t);
        let var = series
            .iter()
            .map(|s| (s[t] - mean) * (s[t] - mean))
            .sum::<f64>()
            / (n - 1.0);
        let se = (var / n).sqrt();
        let dev = if se == 0.0 {
            if (mean - p0).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (mean - p0).abs() / se
        };
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Summary of first-decision times over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseTimeStats {
    pub mean: f64,
    pub median: f64,
    pub first_quartile: f64,
    pub third_quartile: f64,
    pub decided_fraction: f64,
}

/// First-passage times of P_left into the epsilon bands, computed from the
/// region-probability series of `records`. Requires >= 90% of trajectories
/// to decide within the recorded window.
pub fn collapse_time_stats(
    records: &[TrajectoryRecord],
    regions: &RegionSpec,
) -> Result<CollapseTimeStats> {
    if records.is_empty() {
        return Err(CoreError::InsufficientData("empty ensemble".into()));
    }
    let obs = Observable::RegionProbability {
        start: regions.left.0,
        end: regions.left.1,
    };
    let mut times = Vec::new();
    for r in records {
        let series = r.series_for(&obs).ok_or_else(|| {
            CoreError::InsufficientData("record lacks the left-region probability series".into())
        })?;
        if let Some(idx) = series
            .iter()
            .position(|&p| classify(p, regions.epsilon) != Decision::Undecided)
        {
            times.push(r.times[idx]);
        }
    }
    let decided_fraction = times.len() as f64 / records.len() as f64;
    if decided_fraction < 0.9 {
        return Err(CoreError::InsufficientData(format!(
            "only {:.1}% of trajectories decided",
            100.0 * decided_fraction
        )));
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile = |q: f64| -> f64 {
        let pos = q * (times.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        times[lo] * (1.0 - frac) + times[hi] * frac
    };
    Ok(CollapseTimeStats {
        mean: times.iter().sum::<f64>() / times.len() as f64,
        median: quantile(0.5),
        first_quartile: quantile(0.25),
        third_quartile: quantile(0.75),
        decided_fraction,
    })
}

/// Fraction of trajectories that decide at the epsilon band and later
/// re-enter past the wider 2-epsilon band.
pub fn hysteresis_violations(records: &[TrajectoryRecord], regions: &RegionSpec) -> Result<f64> {
    if records.is_empty() {
        return Err(CoreError::InsufficientData("empty ensemble".into()));
    }
    let obs = Observable::RegionProbability {
        start: regions.left.0,
        end: regions.left.1,
    };
    let mut violations = 0usize;
    for r in records {
        let series = r.series_for(&obs).ok_or_else(|| {
            CoreError::InsufficientData("record lacks the left-region probability series".into())
        })?;
        let mut decided: Option<Decision> = None;
        for &p in series {
            match decided {
                None => {
                    let d = classify(p, regions.epsilon);
                    if d != Decision::Undecided {
                        decided = Some(d);
                    }
                }
                Some(Decision::Left) => {
                    if p < 1.0 - 2.0 * regions.epsilon {
                        violations += 1;
                        break;
                    }
                }
                Some(Decision::Right) => {
                    if p > 2.0 * regions.epsilon {
                        violations += 1;
                        break;
                    }
                }
                Some(Decision::Undecided) => unreachable!(),
            }
        }
    }
    Ok(violations as f64 / records.len() as f64)
}
