use thiserror::Error;

/// Errors shared across the lattice, trajectory, master-equation and
/// statistics layers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("kernel unresolvable: r_C = {r_c} < 2 dx = {min} on this grid")]
    KernelUnresolvable { r_c: f64, min: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("step too large at step {step}: pre-renormalization norm drift {drift:.3e} exceeds {limit:.3e}")]
    StepTooLarge { step: usize, drift: f64, limit: f64 },

    #[error("non-finite value encountered in {context} at step {step}")]
    NonFinite { context: String, step: usize },

    #[error("snapshot schedules differ between trajectories: {0}")]
    ScheduleMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undecided fraction {fraction:.4} exceeds 1% at t_max = {t_max}")]
    Undecidable { fraction: f64, t_max: f64 },

    #[error("empty bound record set")]
    EmptyRecordSet,

    #[error("unbound variable {0} in trace polynomial")]
    UnboundVariable(String),

    #[error("matrix component is not Hermitian (max asymmetry {0:.3e})")]
    NonHermitian(f64),

    #[error("positivity violated: min eigenvalue {0:.3e} below -1e-8")]
    PositivityViolated(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("malformed file: {0}")]
    MalformedFile(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
