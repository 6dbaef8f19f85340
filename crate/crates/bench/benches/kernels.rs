use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;

use csl_core::noise::sample_noise;
use csl_core::{
    evolve_master, gaussian_kernel, hamilton_flow, CounterRng, CslIntegrator, CslParams,
    DensityMatrix, Grid1D, Hamiltonian, MatrixDegree, StepScheme, TracePolynomial, Wavefunction,
};

fn bench_csl_step(c: &mut Criterion) {
    for n in [128usize, 512] {
        let grid = Grid1D::centered(n, 0.25).unwrap();
        let params = CslParams::simulation_units(0.5);
        let h = Hamiltonian::free(1.0, 1.0);
        let psi = Wavefunction::gaussian(&grid, 0.0, 1.0, 0.0).unwrap();
        let mut integrator =
            CslIntegrator::new(&grid, Some(&h), &params, 1e-3, StepScheme::SpectralSplit).unwrap();
        let mut rng = CounterRng::new(1);
        c.bench_function(&format!("csl_step/{n}"), |b| {
            b.iter_batched(
                || (psi.clone(), sample_noise(&grid, 1e-3, &mut rng).unwrap()),
                |(mut state, noise)| integrator.step(&mut state, Some(&noise)).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
}

fn bench_convolution(c: &mut Criterion) {
    let grid = Grid1D::centered(512, 0.25).unwrap();
    let kernel = gaussian_kernel(&grid, 1.0, 1).unwrap();
    let mut conv = csl_core::Convolution::new(&grid, &kernel);
    let field: Vec<f64> = (0..512).map(|i| (i as f64 * 0.1).sin()).collect();
    let mut out = vec![0.0; 512];
    c.bench_function("convolution/512", |b| {
        b.iter(|| conv.apply_real(&field, &mut out))
    });
}

fn bench_master_step(c: &mut Criterion) {
    let grid = Grid1D::centered(128, 0.25).unwrap();
    let params = CslParams::simulation_units(0.5);
    let psi = Wavefunction::gaussian(&grid, 0.0, 1.0, 0.0).unwrap();
    let rho = DensityMatrix::from_pure(&psi);
    let h = Hamiltonian::free(1.0, 1.0);
    c.bench_function("evolve_master/128x10", |b| {
        b.iter(|| evolve_master(&rho, Some(&h), &params, 1e-3, 10).unwrap())
    });
}

fn bench_leapfrog(c: &mut Criterion) {
    let mut rng = CounterRng::new(5);
    let dofs: Vec<MatrixDegree> = (0..3)
        .map(|r| {
            let q = csl_core::random_hermitian(8, &mut rng);
            let p = csl_core::random_hermitian(8, &mut rng);
            MatrixDegree::new(format!("d{r}"), q, p).unwrap()
        })
        .collect();
    let h = TracePolynomial::quartic(3);
    c.bench_function("leapfrog/8x3x100", |b| {
        b.iter(|| hamilton_flow(&dofs, &h, 1e-3, 100).unwrap())
    });
}

fn bench_trace_eval(c: &mut Criterion) {
    let mut rng = CounterRng::new(9);
    let dofs: Vec<MatrixDegree> = (0..3)
        .map(|r| {
            let q = csl_core::random_hermitian(16, &mut rng) * Complex64::new(1.0, 0.0);
            let p = csl_core::random_hermitian(16, &mut rng);
            MatrixDegree::new(format!("d{r}"), q, p).unwrap()
        })
        .collect();
    let h = TracePolynomial::quartic(3);
    c.bench_function("trace_eval/16x3", |b| {
        b.iter(|| csl_core::trace_eval(&h, &dofs).unwrap())
    });
}

criterion_group!(
    benches,
    bench_csl_step,
    bench_convolution,
    bench_master_step,
    bench_leapfrog,
    bench_trace_eval
);
criterion_main!(benches);
