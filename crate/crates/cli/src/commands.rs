//! Subcommand implementations. Every command resolves its blocks from the
//! merged configuration, runs the corresponding engine, and writes outputs
//! with a full parameter echo. Paths of files written so far are pushed to
//! `written` so the driver can delete partial outputs on failure.

use std::path::PathBuf;

use serde_json::json;

use csl_core::io::{
    self, fmt_f64, write_density_csv, write_density_snapshot, write_exclusion_csv,
    write_trajectory_csv, write_wavefunction_csv,
};
use csl_core::stats::born_experiment;
use csl_core::tracedyn::random_four_vector;
use csl_core::{
    builtin_bounds, ensemble_average, evolve_master, exclusion_grid, hamilton_flow, heating_rate,
    lorentz_boost, measure_heating, run_ensemble, run_trajectory, trace_eval, trace_line_element,
    Axis, BoundRecord, CoreError, CounterRng, DensityMatrix, MatrixDegree, Observable,
    TracePolynomial, TrajectoryConfig,
};

use crate::config::{self, csv_echo, ConfigError, FileConfig, ParamsEcho, RunBlock};

/// Failure classes mapped to process exit codes (2 and 1 respectively).
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(_)
            | CoreError::KernelUnresolvable { .. }
            | CoreError::GridMismatch(_) => {
                CliError::Config(ConfigError::new("config", e.to_string()))
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn out_dir(cfg: &FileConfig) -> Result<PathBuf> {
    let dir = cfg
        .output
        .as_ref()
        .and_then(|o| o.dir.clone())
        .ok_or_else(|| ConfigError::new("output.dir", "missing required field"))?;
    std::fs::create_dir_all(&dir)
        .map_err(|e| ConfigError::new("output.dir", format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn run_block(cfg: &FileConfig) -> RunBlock {
    cfg.run.clone().unwrap_or_default()
}

fn require<T: Copy>(v: Option<T>, field: &str) -> Result<T> {
    v.ok_or_else(|| ConfigError::new(field, "missing required field").into())
}

struct TrajectorySetup {
    grid: csl_core::Grid1D,
    params: csl_core::CslParams,
    echo: ParamsEcho,
    psi0: csl_core::Wavefunction,
    hamiltonian: Option<csl_core::Hamiltonian>,
    traj: TrajectoryConfig,
}

fn trajectory_setup(cfg: &FileConfig, default_observables: bool) -> Result<TrajectorySetup> {
    let grid = config::resolve_grid(cfg.grid.as_ref())?;
    let (params, echo) = config::resolve_params(cfg.params.as_ref())?;
    let psi0 = config::resolve_state(cfg.state.as_ref(), &grid)?;
    let hamiltonian = config::resolve_hamiltonian(cfg.hamiltonian.as_ref(), &params);
    let run = run_block(cfg);
    let dt = require(run.dt, "run.dt")?;
    let n_steps = require(run.n_steps, "run.n_steps")?;
    let mut traj = TrajectoryConfig::new(dt, n_steps, run.base_seed.unwrap_or(0))?;
    traj.snapshot_stride = run.snapshot_stride.unwrap_or(1).max(1);
    traj.observables = match (&cfg.observables, default_observables) {
        (Some(list), _) if !list.is_empty() => list.clone(),
        (_, true) => {
            let mut obs = vec![
                Observable::Norm,
                Observable::PositionMean,
                Observable::PositionVariance,
            ];
            if hamiltonian.is_some() {
                obs.push(Observable::Energy);
            }
            obs
        }
        _ => vec![Observable::Energy],
    };
    Ok(TrajectorySetup {
        grid,
        params,
        echo,
        psi0,
        hamiltonian,
        traj,
    })
}

pub fn trajectory(cfg: &FileConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    let setup = trajectory_setup(cfg, true)?;
    let dir = out_dir(cfg)?;
    let record = run_trajectory(
        &setup.psi0,
        setup.hamiltonian.as_ref(),
        &setup.params,
        &setup.traj,
    )?;
    let mut meta = csv_echo(&setup.echo, setup.traj.seed);
    meta.push(("dt".into(), fmt_f64(setup.traj.dt)));
    meta.push(("n_steps".into(), setup.traj.n_steps.to_string()));
    meta.push(("stream".into(), record.stream.to_string()));

    let csv = dir.join("trajectory.csv");
    written.push(csv.clone());
    write_trajectory_csv(&csv, &record, &meta)?;
    let state = dir.join("final_state.csv");
    written.push(state.clone());
    write_wavefunction_csv(&state, &record.final_state, &meta)?;
    Ok(())
}

pub fn ensemble(cfg: &FileConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    let mut setup = trajectory_setup(cfg, true)?;
    let n_traj = require(run_block(cfg).n_traj, "run.n_traj")?;
    if n_traj < 2 {
        return Err(ConfigError::new("run.n_traj", "needs at least 2 trajectories").into());
    }
    setup.traj.store_snapshots = true;
    // only keep the final snapshot unless the stride was set explicitly
    if run_block(cfg).snapshot_stride.is_none() {
        setup.traj.snapshot_stride = setup.traj.n_steps;
    }
    let dir = out_dir(cfg)?;
    let records = run_ensemble(
        &setup.psi0,
        setup.hamiltonian.as_ref(),
        &setup.params,
        &setup.traj,
        n_traj,
    )?;

    let mut meta = csv_echo(&setup.echo, setup.traj.seed);
    meta.push(("dt".into(), fmt_f64(setup.traj.dt)));
    meta.push(("n_steps".into(), setup.traj.n_steps.to_string()));
    meta.push(("n_traj".into(), n_traj.to_string()));

    // per-time ensemble mean and standard deviation of each observable
    let csv = dir.join("ensemble.csv");
    written.push(csv.clone());
    {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(std::fs::File::create(&csv).map_err(CoreError::from)?);
        for (k, v) in &meta {
            writeln!(w, "# {k} = {v}").map_err(CoreError::from)?;
        }
        let names: Vec<String> = setup
            .traj
            .observables
            .iter()
            .flat_map(|o| {
                let n = o.column_name();
                [format!("{n}_mean"), format!("{n}_std")]
            })
            .collect();
        writeln!(w, "time,{}", names.join(",")).map_err(CoreError::from)?;
        let times = &records[0].times;
        for (t_idx, t) in times.iter().enumerate() {
            write!(w, "{}", fmt_f64(*t)).map_err(CoreError::from)?;
            for obs_idx in 0..setup.traj.observables.len() {
                let vals: Vec<f64> = records.iter().map(|r| r.series[obs_idx][t_idx]).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (vals.len() - 1) as f64;
                write!(w, ",{},{}", fmt_f64(mean), fmt_f64(var.sqrt())).map_err(CoreError::from)?;
            }
            writeln!(w).map_err(CoreError::from)?;
        }
        w.flush().map_err(CoreError::from)?;
    }

    let last = records[0].snapshots.len() - 1;
    let rho = ensemble_average(&records, last)?;
    let dcsv = dir.join("density.csv");
    written.push(dcsv.clone());
    write_density_csv(&dcsv, &rho, &meta)?;
    let dbin = dir.join("density.bin");
    written.push(dbin.clone());
    write_density_snapshot(&dbin, &rho)?;
    Ok(())
}

pub fn born(cfg: &FileConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    let (params, echo) = config::resolve_params(cfg.params.as_ref())?;
    let block = cfg
        .born
        .as_ref()
        .ok_or_else(|| ConfigError::new("born", "missing required block"))?;
    if !(0.0..=1.0).contains(&block.alpha_sq) {
        return Err(ConfigError::new("born.alpha_sq", "must lie in [0, 1]").into());
    }
    let run = run_block(cfg);
    let n_traj = require(run.n_traj, "run.n_traj")?;
    let base_seed = run.base_seed.unwrap_or(0);
    let dir = out_dir(cfg)?;

    let alpha = num_complex::Complex64::new(block.alpha_sq.sqrt(), 0.0);
    let beta = num_complex::Complex64::new((1.0 - block.alpha_sq).sqrt(), 0.0);
    let result = born_experiment(alpha, beta, block.separation, &params, n_traj, base_seed)?;

    let path = dir.join("born.json");
    written.push(path.clone());
    let value = json!({
        "echo": {
            "params": echo,
            "base_seed": base_seed,
            "n_traj": n_traj,
            "alpha_sq": block.alpha_sq,
            "separation": block.separation,
        },
        "result": result,
    });
    io::save_json(&path, &value)?;
    Ok(())
}

pub fn heating(cfg: &FileConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    let mut setup = trajectory_setup(cfg, false)?;
    let n_traj = require(run_block(cfg).n_traj, "run.n_traj")?;
    // heating needs an energy series against a free Hamiltonian
    if setup.hamiltonian.is_none() {
        setup.hamiltonian = Some(csl_core::Hamiltonian::free(
            setup.params.m,
            setup.params.hbar,
        ));
    }
    if !setup.traj.observables.contains(&Observable::Energy) {
        setup.traj.observables.push(Observable::Energy);
    }
    let dir = out_dir(cfg)?;
    let records = run_ensemble(
        &setup.psi0,
        setup.hamiltonian.as_ref(),
        &setup.params,
        &setup.traj,
        n_traj,
    )?;
    let fit = measure_heating(&records)?;
    let predicted = heating_rate(&setup.params, setup.params.m);

    let mut meta = csv_echo(&setup.echo, setup.traj.seed);
    meta.push(("dt".into(), fmt_f64(setup.traj.dt)));
    meta.push(("n_traj".into(), n_traj.to_string()));
    meta.push(("predicted_rate".into(), fmt_f64(predicted)));

    let csv = dir.join("heating.csv");
    written.push(csv.clone());
    {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(std::fs::File::create(&csv).map_err(CoreError::from)?);
        for (k, v) in &meta {
            writeln!(w, "# {k} = {v}").map_err(CoreError::from)?;
        }
        writeln!(w, "time,energy_mean").map_err(CoreError::from)?;
        let times = &records[0].times;
        let idx = setup
            .traj
            .observables
            .iter()
            .position(|o| *o == Observable::Energy)
            .expect("energy observable present");
        for (t_idx, t) in times.iter().enumerate() {
            let mean =
                records.iter().map(|r| r.series[idx][t_idx]).sum::<f64>() / records.len() as f64;
            writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(mean)).map_err(CoreError::from)?;
        }
        w.flush().map_err(CoreError::from)?;
    }

    let path = dir.join("heating.json");
    written.push(path.clone());
    let value = json!({
        "echo": {
            "params": setup.echo,
            "base_seed": setup.traj.seed,
            "n_traj": n_traj,
            "dt": setup.traj.dt,
            "n_steps": setup.traj.n_steps,
        },
        "slope": fit.slope,
        "std_error": fit.std_error,
        "predicted_rate": predicted,
        "relative_error": (fit.slope - predicted).abs() / predicted,
    });
    io::save_json(&path, &value)?;
    Ok(())
}

pub fn master(cfg: &FileConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    let setup = trajectory_setup(cfg, true)?;
    let dir = out_dir(cfg)?;
    let stride = setup.traj.snapshot_stride;
    let n_samples = setup.traj.n_steps / stride;

    let mut rho = DensityMatrix::from_pure(&setup.psi0);
    let n = setup.grid.n_sites();
    let left = (0, n / 2);
    let right = (n / 2, n);

    let mut meta = csv_echo(&setup.echo, setup.traj.seed);
    meta.push(("dt".into(), fmt_f64(setup.traj.dt)));
    meta.push(("n_steps".into(), setup.traj.n_steps.to_string()));

    let csv = dir.join("master.csv");
    written.push(csv.clone());
    {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(std::fs::File::create(&csv).map_err(CoreError::from)?);
        for (k, v) in &meta {
            writeln!(w, "# {k} = {v}").map_err(CoreError::from)?;
        }
        writeln!(w, "time,trace,purity,cross_coherence").map_err(CoreError::from)?;
        let mut emit = |t: f64, rho: &DensityMatrix| -> std::io::Result<()> {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(t),
                fmt_f64(rho.trace()),
                fmt_f64(rho.purity()),
                fmt_f64(rho.cross_coherence(left, right))
            )
        };
        emit(0.0, &rho).map_err(CoreError::from)?;
        for sample in 1..=n_samples {
            rho = evolve_master(
                &rho,
                setup.hamiltonian.as_ref(),
                &setup.params,
                setup.traj.dt,
                stride,
            )?;
            emit(sample as f64 * stride as f64 * setup.traj.dt, &rho).map_err(CoreError::from)?;
        }
        w.flush().map_err(CoreError::from)?;
    }

    let dcsv = dir.join("density.csv");
    written.push(dcsv.clone());
    write_density_csv(&dcsv, &rho, &meta)?;
    let dbin = dir.join("density.bin");
    written.push(dbin.clone());
    write_density_snapshot(&dbin, &rho)?;
    Ok(())
}

pub fn exclusion(cfg: &FileConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    let block = cfg.exclusion.clone().unwrap_or_default();
    let dir = out_dir(cfg)?;
    let mut records = builtin_bounds();
    if let Some(path) = &block.bounds_file {
        let value = io::load_json(path)?;
        let extra: Vec<BoundRecord> = serde_json::from_value(value)
            .map_err(|e| ConfigError::new("exclusion.bounds_file", e.to_string()))?;
        for r in &extra {
            r.validate()
                .map_err(|e| ConfigError::new("exclusion.bounds_file", e.to_string()))?;
        }
        records.extend(extra);
    }
    let lambda_range = (
        block.lambda_min.unwrap_or(1e-19),
        block.lambda_max.unwrap_or(1e-3),
    );
    let r_c_range = (block.r_c_min.unwrap_or(1e-8), block.r_c_max.unwrap_or(1e-5));
    let resolution = block.resolution.unwrap_or(33);
    let grid = exclusion_grid(&records, lambda_range, r_c_range, (resolution, resolution))?;

    let mut meta: Vec<(String, String)> = vec![
        ("resolution".into(), resolution.to_string()),
        ("lambda_min".into(), fmt_f64(lambda_range.0)),
        ("lambda_max".into(), fmt_f64(lambda_range.1)),
        ("r_c_min".into(), fmt_f64(r_c_range.0)),
        ("r_c_max".into(), fmt_f64(r_c_range.1)),
    ];
    for r in &records {
        meta.push((
            format!("bound.{}", r.name),
            format!("{:?} lambda_max {}", r.kind, fmt_f64(r.lambda_max)),
        ));
    }
    let csv = dir.join("exclusion.csv");
    written.push(csv.clone());
    write_exclusion_csv(&csv, &grid, &meta)?;
    Ok(())
}

fn trace_dofs(n_dim: usize, n_dofs: usize, seed: u64) -> Result<Vec<MatrixDegree>> {
    (0..n_dofs)
        .map(|r| {
            let mut rq = CounterRng::stream(seed, 2 * r as u64);
            let mut rp = CounterRng::stream(seed, 2 * r as u64 + 1);
            let q = csl_core::random_hermitian(n_dim, &mut rq);
            let p = csl_core::random_hermitian(n_dim, &mut rp);
            MatrixDegree::new(format!("d{r}"), q, p).map_err(CliError::from)
        })
        .collect()
}

fn trace_hamiltonian(potential: &str, n_dofs: usize) -> Result<TracePolynomial> {
    match potential {
        "quartic" => Ok(TracePolynomial::quartic(n_dofs)),
        "harmonic" => Ok(TracePolynomial::harmonic(n_dofs)),
        other => Err(ConfigError::new(
            "trace.potential",
            format!("unknown potential {other:?}; expected \"quartic\" or \"harmonic\""),
        )
        .into()),
    }
}

/// Largest energy drift along the flow, sampled every `chunk` steps.
fn max_energy_drift(
    dofs: &[MatrixDegree],
    h: &TracePolynomial,
    dt: f64,
    n_steps: usize,
    chunk: usize,
) -> Result<f64> {
    let e0 = trace_eval(h, dofs).map_err(CliError::from)?.re;
    let mut state = dofs.to_vec();
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < n_steps {
        let step = chunk.min(n_steps - done);
        let (next, _) = hamilton_flow(&state, h, dt, step)?;
        state = next;
        done += step;
        let e = trace_eval(h, &state).map_err(CliError::from)?.re;
        worst = worst.max((e - e0).abs());
    }
    Ok(worst)
}

pub fn td_conserve(cfg: &FileConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    let block = cfg.trace.clone().unwrap_or_default();
    let dir = out_dir(cfg)?;
    let n_dim = block.n_dim.unwrap_or(8);
    let n_dofs = block.n_dofs.unwrap_or(3);
    let dt = block.dt.unwrap_or(1e-3);
    let n_steps = block.n_steps.unwrap_or(10_000);
    let seed = block.seed.unwrap_or(7);
    let potential = block.potential.as_deref().unwrap_or("quartic");
    let h = trace_hamiltonian(potential, n_dofs)?;
    let dofs = trace_dofs(n_dim, n_dofs, seed)?;

    let c0 = csl_core::adler_millard(&dofs);
    let (out, scheme) = hamilton_flow(&dofs, &h, dt, n_steps)?;
    let c1 = csl_core::adler_millard(&out);
    let charge_drift = (&c1 - &c0).norm() / c0.norm();

    // integrator order from the energy drift under step-halving
    let chunk = (n_steps / 64).max(1);
    let e_coarse = max_energy_drift(&dofs, &h, dt, n_steps, chunk)?;
    let e_fine = max_energy_drift(&dofs, &h, dt / 2.0, 2 * n_steps, 2 * chunk)?;
    let order = (e_coarse / e_fine).log2();

    let path = dir.join("td_conserve.json");
    written.push(path.clone());
    let value = json!({
        "echo": {
            "n_dim": n_dim,
            "n_dofs": n_dofs,
            "dt": dt,
            "n_steps": n_steps,
            "seed": seed,
            "potential": potential,
        },
        "scheme": format!("{scheme:?}"),
        "charge_norm": c0.norm(),
        "charge_drift": charge_drift,
        "energy_drift_coarse": e_coarse,
        "energy_drift_fine": e_fine,
        "convergence_order": order,
    });
    io::save_json(&path, &value)?;
    Ok(())
}

pub fn td_boost(cfg: &FileConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    let block = cfg.boost.clone().unwrap_or_default();
    let dir = out_dir(cfg)?;
    let n_dim = block.n_dim.unwrap_or(4);
    let n_vectors = block.n_vectors.unwrap_or(100);
    let n_rapidities = block.n_rapidities.unwrap_or(9).max(2);
    let eta_min = block.rapidity_min.unwrap_or(-2.0);
    let eta_max = block.rapidity_max.unwrap_or(2.0);
    let seed = block.seed.unwrap_or(11);

    let mut max_rel: f64 = 0.0;
    for v in 0..n_vectors {
        let mut rng = CounterRng::stream(seed, v as u64);
        let dv = random_four_vector(n_dim, &mut rng);
        let ds0 = trace_line_element(&dv)?;
        let scale = dv.scale() * dv.scale();
        for i in 0..n_rapidities {
            let eta = eta_min + (eta_max - eta_min) * i as f64 / (n_rapidities - 1) as f64;
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                let ds = trace_line_element(&lorentz_boost(&dv, eta, axis))?;
                max_rel = max_rel.max((ds - ds0).abs() / scale);
            }
        }
    }

    let path = dir.join("td_boost.json");
    written.push(path.clone());
    let value = json!({
        "echo": {
            "n_dim": n_dim,
            "n_vectors": n_vectors,
            "n_rapidities": n_rapidities,
            "rapidity_min": eta_min,
            "rapidity_max": eta_max,
            "seed": seed,
        },
        "max_relative_deviation": max_rel,
        "invariant": max_rel <= 1e-12,
    });
    io::save_json(&path, &value)?;
    Ok(())
}
