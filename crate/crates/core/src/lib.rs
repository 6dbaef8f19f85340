//! Collapse-dynamics toolkit: stochastic trajectory unraveling on a 1D
//! lattice, an exact master-equation reference solver, collapse statistics,
//! parameter-space exclusion bounds, and matrix-model (trace) dynamics.

pub mod density;
pub mod error;
pub mod exclusion;
pub mod fft;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod kernel;
pub mod master;
pub mod noise;
pub mod params;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod tracedyn;
pub mod wavefunction;

pub use density::{ensemble_average, DensityMatrix};
pub use error::{CoreError, Result};
pub use exclusion::{
    builtin_bounds, exclusion_grid, heating_bound, interferometry_bound, is_excluded,
    projected_1e9_amu_bound, BoundKind, BoundRecord, ExclusionGrid, AMU, HBAR_SI, MODEL_POINT,
    NUCLEON_MASS,
};
pub use grid::Grid1D;
pub use hamiltonian::{Hamiltonian, HamiltonianKind, KineticScheme};
pub use kernel::{convolve_real, gaussian_kernel, kernel_correlation, Convolution};
pub use master::{decay_rate, evolve_master, heating_rate, measure_heating, HeatingFit};
pub use params::CslParams;
pub use rng::CounterRng;
pub use sde::{
    run_ensemble, run_trajectory, CslIntegrator, Observable, StepScheme, TrajectoryConfig,
    TrajectoryRecord,
};
pub use stats::{
    born_experiment, born_grid, collapse_time_stats, martingale_check, BornResult, Decision,
    DecisionRecord, RegionSpec, DEFAULT_EPSILON,
};
pub use tracedyn::{
    adler_millard, hamilton_flow, lorentz_boost, random_hermitian, trace_derivative, trace_eval,
    trace_line_element, Axis, FlowScheme, MatrixDegree, MatrixFourVector, TracePolynomial,
};
pub use wavefunction::Wavefunction;
