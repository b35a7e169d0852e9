use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time {t} ns outside waveform support [0, {tg}] ns")]
    OutsideSupport { t: f64, tg: f64 },
    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },
    #[error("propagation did not converge: step halving changed U by {delta:e}")]
    NotConverged { delta: f64 },
    #[error("step {step} ns too coarse for {what}")]
    StepTooCoarse { step: f64, what: String },
    #[error("qubit index {index} out of range for a {n}-qubit register")]
    QubitOutOfRange { index: usize, n: usize },
    #[error("register of {n} qubits exceeds the limit of {max}")]
    RegisterTooLarge { n: usize, max: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
