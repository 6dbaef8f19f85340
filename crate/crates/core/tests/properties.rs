//! Randomized invariants of the lattice kernels and rate formulas.

use proptest::prelude::*;

use csl_core::kernel::convolve_real;
use csl_core::{decay_rate, gaussian_kernel, heating_rate, CslParams, Grid1D};

fn sim_params(lambda: f64) -> CslParams {
    CslParams::simulation_units(lambda)
}

proptest! {
    #[test]
    fn kernel_is_normalized(dx in 0.05f64..0.4, r_c in 0.5f64..2.0) {
        let grid = Grid1D::centered(128, dx).unwrap();
        prop_assume!(r_c >= 2.0 * dx);
        prop_assume!(grid.length() > 12.0 * r_c); // negligible wraparound
        let g = gaussian_kernel(&grid, r_c, 1).unwrap();
        let total: f64 = g.iter().sum::<f64>() * dx;
        prop_assert!((total - 1.0).abs() < 1e-6, "sum = {total}");
        prop_assert!(g.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn convolution_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        use rand::Rng;
        let grid = Grid1D::centered(32, 0.5).unwrap();
        let mut rng = csl_core::CounterRng::new(seed);
        let f: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() - 0.5).collect();
        let g: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() - 0.5).collect();
        let k: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() - 0.5).collect();
        let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let lhs = convolve_real(&combo, &k, &grid).unwrap();
        let cf = convolve_real(&f, &k, &grid).unwrap();
        let cg = convolve_real(&g, &k, &grid).unwrap();
        for i in 0..32 {
            let rhs = a * cf[i] + b * cg[i];
            prop_assert!((lhs[i] - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn convolution_commutes(seed in 0u64..1000) {
        use rand::Rng;
        let grid = Grid1D::centered(32, 0.25).unwrap();
        let mut rng = csl_core::CounterRng::new(seed);
        let f: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() - 0.5).collect();
        let g: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() - 0.5).collect();
        let fg = convolve_real(&f, &g, &grid).unwrap();
        let gf = convolve_real(&g, &f, &grid).unwrap();
        for i in 0..32 {
            prop_assert!((fg[i] - gf[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn decay_rate_is_monotone_and_saturates(lambda in 0.01f64..10.0, d1 in 0.0f64..20.0, d2 in 0.0f64..20.0) {
        let p = sim_params(lambda);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(decay_rate(lo, &p) <= decay_rate(hi, &p) + 1e-15);
        prop_assert!(decay_rate(hi, &p) <= lambda * (1.0 + 1e-12));
    }

    #[test]
    fn rates_scale_linearly_with_lambda(lambda in 0.01f64..10.0, c in 1.5f64..4.0) {
        let p1 = sim_params(lambda);
        let p2 = sim_params(c * lambda);
        let d = 3.0;
        prop_assert!((decay_rate(d, &p2) - c * decay_rate(d, &p1)).abs() < 1e-10 * decay_rate(d, &p2));
        prop_assert!((heating_rate(&p2, 1.0) - c * heating_rate(&p1, 1.0)).abs() < 1e-12 * heating_rate(&p2, 1.0));
    }
}
