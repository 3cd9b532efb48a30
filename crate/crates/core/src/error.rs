use thiserror::Error;

/// Errors raised by any part of the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("timing infeasible: {0}")]
    TimingInfeasible(String),
    #[error("alpha split {0} outside [0.5, 1]")]
    InvalidAlpha(f64),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("{n_dcs} DCs requested but only {ports} ports")]
    TooManyDcs { n_dcs: usize, ports: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("packet {id} at input {input} exceeds the line rate")]
    RateViolation { id: u64, input: usize },
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("{component} SRAM holds {bytes} B at slot {slot}, bound is {bound_bits} bits")]
    CapacityOverflow {
        component: &'static str,
        slot: u64,
        bytes: u64,
        bound_bits: u64,
    },
    #[error("workload mismatch: {0}")]
    WorkloadMismatch(String),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("negative load {value} at row {row}, column {column}")]
    NegativeLoad { row: usize, column: usize, value: f64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Name of the module that raised this error, used in CLI messages.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) | Error::TimingInfeasible(_) => "config_core",
            Error::InvalidAlpha(_) | Error::EmptyInput(_) | Error::TooManyDcs { .. } => {
                "traffic_gen"
            }
            Error::DimensionMismatch(_) => "sps_model",
            Error::RateViolation { .. }
            | Error::InvalidWorkload(_)
            | Error::CapacityOverflow { .. }
            | Error::Invariant(_) => "hbm_sim",
            Error::WorkloadMismatch(_) => "oq_oracle",
            Error::Parse { .. } | Error::NegativeLoad { .. } | Error::Io(_) => "io_cli",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
