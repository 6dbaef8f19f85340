//! End-to-end acceptance checks. Each test prints one pass/fail line;
//! run with `cargo test --test acceptance -- --nocapture` to see them all.

use std::path::Path;
use std::process::Command;

use num_complex::Complex64;

use csl_core::params::lambda_from_gamma;
use csl_core::stats::born_experiment;
use csl_core::tracedyn::random_four_vector;
use csl_core::{
    adler_millard, builtin_bounds, decay_rate, ensemble_average, evolve_master, hamilton_flow,
    heating_rate, is_excluded, lorentz_boost, martingale_check, measure_heating, random_hermitian,
    run_ensemble, trace_eval, trace_line_element, Axis, CounterRng, CslParams, DensityMatrix,
    FlowScheme, Grid1D, Hamiltonian, MatrixDegree, Observable, TracePolynomial, TrajectoryConfig,
    Wavefunction, MODEL_POINT, NUCLEON_MASS,
};

fn report(n: u32, label: &str, ok: bool, detail: &str) {
    println!(
        "acceptance criterion {n:2} ({label}): {} [{detail}]",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} ({label}): {detail}");
}

#[test]
fn crit01_rate_constant_regression() {
    let gamma = 4.455e-37;
    let r_c = 1e-7;
    let lambda = lambda_from_gamma(gamma, r_c, 3);
    // independent re-derivation: (4 pi r^2)^(3/2) = 8 pi^(3/2) r^3
    let denom = 8.0 * std::f64::consts::PI.powf(1.5) * r_c * r_c * r_c;
    let oracle = gamma / denom;
    let rel = (lambda - 1e-17).abs() / 1e-17;
    let agree = (lambda - oracle).abs() <= 1e-15 * oracle;
    report(
        1,
        "collapse rate constant",
        rel <= 1e-3 && agree,
        &format!("lambda = {lambda:.6e}, deviation {rel:.2e}"),
    );
}

#[test]
fn crit02_heating_rate_regression() {
    let hbar = 1.0546e-34;
    let gamma = csl_core::params::gamma_from_lambda(1e-17, 1e-7, 3);
    let p = CslParams::new(gamma, 1e-7, NUCLEON_MASS, NUCLEON_MASS, hbar, 3).unwrap();
    let rate = heating_rate(&p, NUCLEON_MASS);
    let rel = (rate - 4.98e-45).abs() / 4.98e-45;
    report(
        2,
        "heating rate",
        rel <= 0.01,
        &format!("rate = {rate:.4e} W, deviation {rel:.2e}"),
    );
}

#[test]
fn crit03_off_diagonal_decay() {
    let grid = Grid1D::centered(512, 0.25).unwrap();
    let params = CslParams::simulation_units(1.0);
    let sep = 6.0 * params.r_c;
    let psi = Wavefunction::two_gaussian(
        &grid,
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        -0.5 * sep,
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        0.5 * sep,
        params.r_c / 2.0,
    )
    .unwrap();
    let gamma_rate = decay_rate(sep, &params);
    let t_final = 3.0 / gamma_rate;
    let dt = 1e-3;
    let n_steps = (t_final / dt).round() as usize;
    let stride = n_steps / 6;
    let mut cfg = TrajectoryConfig::new(dt, n_steps, 0xC3).unwrap();
    cfg.snapshot_stride = stride;
    cfg.store_snapshots = true;
    let records = run_ensemble(&psi, None, &params, &cfg, 2000).unwrap();

    // block coherence sum_{a in left, b in right} E[psi_a psi_b*] dx^2
    // factorizes into partial sums, so no per-time density matrix is needed
    let n = grid.n_sites();
    let dx = grid.dx();
    let n_times = records[0].snapshots.len();
    let coherence: Vec<f64> = (0..n_times)
        .map(|t| {
            let sum: Complex64 = records
                .iter()
                .map(|r| {
                    let amps = r.snapshots[t].amps();
                    let s_l: Complex64 = amps[..n / 2].iter().sum();
                    let s_r: Complex64 = amps[n / 2..].iter().sum();
                    s_l * s_r.conj()
                })
                .sum();
            (sum * dx * dx / records.len() as f64).norm()
        })
        .collect();
    // decay rate from the first half of the window (signal well above noise)
    let times: Vec<f64> = (0..n_times).map(|i| (i * stride) as f64 * dt).collect();
    let logs: Vec<f64> = coherence.iter().map(|c| c.ln()).collect();
    let k = 4; // fit over t in [0, 1.5 / Gamma]
    let (tx, ty) = (&times[..k], &logs[..k]);
    let mx = tx.iter().sum::<f64>() / k as f64;
    let my = ty.iter().sum::<f64>() / k as f64;
    let slope = tx
        .iter()
        .zip(ty)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / tx.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
    let measured = -slope;
    let rate_rel = (measured - gamma_rate).abs() / gamma_rate;

    let avg = ensemble_average(&records, n_times - 1).unwrap();
    let exact = evolve_master(&DensityMatrix::from_pure(&psi), None, &params, dt, n_steps).unwrap();
    let dist = avg.trace_distance(&exact).unwrap();

    report(
        3,
        "off-diagonal decay",
        rate_rel <= 0.05 && dist < 0.02,
        &format!(
            "rate {measured:.4} vs {gamma_rate:.4} (rel {rate_rel:.4}), trace distance {dist:.4}"
        ),
    );
}

#[test]
fn crit04_born_rule() {
    let params = CslParams::simulation_units(1.0);
    let sep = 8.0 * params.r_c;
    let n_traj = 2000;
    let mut all_ok = true;
    let mut detail = String::new();
    for (i, alpha_sq) in [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().enumerate() {
        let alpha = Complex64::new(f64::sqrt(alpha_sq), 0.0);
        let beta = Complex64::new((1.0 - alpha_sq).sqrt(), 0.0);
        let result = born_experiment(alpha, beta, sep, &params, n_traj, 0xB0 + i as u64).unwrap();
        let sigma = (alpha_sq * (1.0 - alpha_sq) / n_traj as f64).sqrt();
        let dev = (result.f_left - alpha_sq).abs();
        let ok = dev <= 3.0 * sigma && result.n_undecided * 100 < n_traj;
        all_ok &= ok;
        detail.push_str(&format!(
            "|a|^2={alpha_sq}: f={:.4} ({:+.2} sigma, {} undecided); ",
            result.f_left,
            (result.f_left - alpha_sq) / sigma,
            result.n_undecided
        ));
    }
    report(4, "collapse outcome frequencies", all_ok, detail.trim_end());
}

#[test]
fn crit05_martingale() {
    let grid = Grid1D::centered(64, 0.25).unwrap();
    let params = CslParams::simulation_units(1.0);
    let sep = 8.0 * params.r_c;
    let psi = Wavefunction::two_gaussian(
        &grid,
        Complex64::new(f64::sqrt(0.3), 0.0),
        -0.5 * sep,
        Complex64::new(f64::sqrt(0.7), 0.0),
        0.5 * sep,
        params.r_c / 2.0,
    )
    .unwrap();
    let region = Observable::RegionProbability {
        start: 0,
        end: grid.n_sites() / 2,
    };
    let mut cfg = TrajectoryConfig::new(2e-3, 1000, 0x5EED).unwrap();
    cfg.observables = vec![region];
    cfg.snapshot_stride = 50;
    let records = run_ensemble(&psi, None, &params, &cfg, 2000).unwrap();
    let drift = martingale_check(&records, &region).unwrap();
    report(
        5,
        "left-weight martingale",
        drift <= 3.0,
        &format!("max standardized drift {drift:.3}"),
    );
}

#[test]
fn crit06_heating_dynamics() {
    let grid = Grid1D::centered(128, 0.25).unwrap();
    let params = CslParams::simulation_units(0.1);
    let psi = Wavefunction::gaussian(&grid, 0.0, 1.0, 0.0).unwrap();
    let h = Hamiltonian::free(params.m, params.hbar);
    let mut cfg = TrajectoryConfig::new(2e-3, 2500, 0x6EA7).unwrap();
    cfg.observables = vec![Observable::Energy];
    cfg.snapshot_stride = 100;
    let records = run_ensemble(&psi, Some(&h), &params, &cfg, 500).unwrap();
    let fit = measure_heating(&records).unwrap();
    let predicted = heating_rate(&params, params.m);
    let rel = (fit.slope - predicted).abs() / predicted;
    report(
        6,
        "ensemble heating slope",
        rel <= 0.10,
        &format!(
            "slope {:.5e} vs {predicted:.5e} (rel {rel:.3}), se {:.1e}",
            fit.slope, fit.std_error
        ),
    );
}

#[test]
fn crit07_commutator_charge_conservation() {
    let n_dim = 8;
    let n_dofs = 3;
    let dt = 1e-3;
    let n_steps = 10_000;
    let mut rng = CounterRng::new(0x7D);
    let dofs: Vec<MatrixDegree> = (0..n_dofs)
        .map(|r| {
            let q = random_hermitian(n_dim, &mut rng);
            let p = random_hermitian(n_dim, &mut rng);
            MatrixDegree::new(format!("d{r}"), q, p).unwrap()
        })
        .collect();
    let h = TracePolynomial::quartic(n_dofs);
    let c0 = adler_millard(&dofs);
    let (out, scheme) = hamilton_flow(&dofs, &h, dt, n_steps).unwrap();
    assert_eq!(scheme, FlowScheme::Leapfrog);
    let drift = (adler_millard(&out) - &c0).norm() / c0.norm();

    // second-order convergence measured on the energy drift; the commutator
    // charge itself is conserved to round-off by the symplectic update
    let t_total = dt * n_steps as f64;
    let e0 = trace_eval(&h, &dofs).unwrap().re;
    let energy_err = |step: f64| -> f64 {
        let n = (t_total / step).round() as usize;
        let chunk = (n / 64).max(1);
        let mut state = dofs.clone();
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < n {
            let m = chunk.min(n - done);
            let (next, _) = hamilton_flow(&state, &h, step, m).unwrap();
            state = next;
            done += m;
            worst = worst.max((trace_eval(&h, &state).unwrap().re - e0).abs());
        }
        worst
    };
    let order = (energy_err(dt) / energy_err(dt / 2.0)).log2();
    report(
        7,
        "commutator charge conservation",
        drift < 1e-8 && (1.8..=2.2).contains(&order),
        &format!("charge drift {drift:.2e}, convergence order {order:.3}"),
    );
}

#[test]
fn crit08_boost_invariance() {
    let mut max_rel: f64 = 0.0;
    let mut noncommuting = true;
    for v in 0..100 {
        let mut rng = CounterRng::stream(0xB005, v);
        let dv = random_four_vector(4, &mut rng);
        noncommuting &= (&dv.t * &dv.x - &dv.x * &dv.t).norm() > 1e-6;
        let ds0 = trace_line_element(&dv).unwrap();
        let scale = dv.scale() * dv.scale();
        for i in 0..=20 {
            let eta = -2.0 + 4.0 * i as f64 / 20.0;
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                let ds = trace_line_element(&lorentz_boost(&dv, eta, axis)).unwrap();
                max_rel = max_rel.max((ds - ds0).abs() / scale);
            }
        }
    }
    report(
        8,
        "line element boost invariance",
        max_rel <= 1e-12 && noncommuting,
        &format!("max relative deviation {max_rel:.2e}"),
    );
}

#[test]
fn crit09_exclusion_data() {
    let bounds = builtin_bounds();
    let ge = bounds.iter().find(|b| b.name == "Ge-11keV");
    let ge_ok = ge.is_some_and(|b| b.lambda_max == 1e-11 && b.r_c_assumed == 1e-7);
    let inter = bounds.iter().find(|b| b.name == "interferometry-1e4amu");
    let inter_ok = inter.is_some_and(|b| (b.lambda_max - 1e-5).abs() < 1e-9 * 1e-5);
    let model_ok = is_excluded(&bounds, MODEL_POINT.0, MODEL_POINT.1).is_none();

    // the CLI scan carries the Germanium row
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_csl"))
        .args(["exclusion", "--out-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    let csv = std::fs::read_to_string(dir.path().join("exclusion.csv")).unwrap();
    let csv_ok = status.success() && csv.contains("Ge-11keV");

    report(
        9,
        "exclusion bound data",
        ge_ok && inter_ok && model_ok && csv_ok,
        &format!("ge {ge_ok}, interferometry {inter_ok}, model point unexcluded {model_ok}, csv row {csv_ok}"),
    );
}

fn run_cli(config: &Path, subcommand: &str, out: &Path, workers: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_csl"))
        .arg(subcommand)
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .env("CSL_WORKERS", workers)
        .status()
        .unwrap();
    assert!(status.success(), "{subcommand} failed");
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn crit10_byte_identical_reruns() {
    let root = tempfile::tempdir().unwrap();
    let ensemble_cfg = root.path().join("ensemble.json");
    std::fs::write(
        &ensemble_cfg,
        r#"{
          "grid": {"n_sites": 64, "dx": 0.25},
          "params": {"lambda": 0.5, "r_c": 1.0, "dim": 1},
          "run": {"dt": 0.002, "n_steps": 300, "n_traj": 24, "base_seed": 42},
          "state": {"kind": "two_gaussian", "weight_left": 0.5,
                    "x_left": -3.0, "x_right": 3.0, "sigma": 0.5},
          "output": {"dir": "unused"}
        }"#,
    )
    .unwrap();
    let born_cfg = root.path().join("born.json");
    std::fs::write(
        &born_cfg,
        r#"{
          "params": {"lambda": 1.0, "r_c": 1.0, "dim": 1},
          "run": {"n_traj": 60, "base_seed": 7},
          "born": {"alpha_sq": 0.5, "separation": 8.0},
          "output": {"dir": "unused"}
        }"#,
    )
    .unwrap();

    let mut ok = true;
    let mut detail = String::new();
    for (cfg, sub) in [(&ensemble_cfg, "ensemble"), (&born_cfg, "born")] {
        let runs = [("a", "1"), ("b", "1"), ("c", "4")];
        let outs: Vec<_> = runs
            .iter()
            .map(|(tag, workers)| {
                let out = root.path().join(format!("{sub}-{tag}"));
                run_cli(cfg, sub, &out, workers);
                dir_bytes(&out)
            })
            .collect();
        let identical = outs[0] == outs[1] && outs[0] == outs[2];
        ok &= identical;
        detail.push_str(&format!("{sub}: identical {identical}; "));
    }
    report(10, "byte-identical reruns", ok, detail.trim_end());
}
