use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("(sI - A) is singular at s = {re} + {im}j")]
    SingularAtS { re: f64, im: f64 },
    #[error("feedthrough matrix is not invertible (reciprocal condition {rcond:e}); the system has no proper inverse")]
    SingularD { rcond: f64 },
    #[error("algebraic loop is ill-posed (reciprocal condition {rcond:e})")]
    IllPosedLoop { rcond: f64 },
    #[error("eigenvalue iteration failed: {0}")]
    EigFailure(String),
    #[error("field flux-linkage is zero; frame dynamics undefined")]
    ZeroFieldFlux,
    #[error("PLL-frame voltage is zero; frame dynamics undefined")]
    ZeroVoltage,
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("network graph is disconnected: bus {0} unreachable from bus 1")]
    DisconnectedGraph(usize),
    #[error("bus {0} has neither shunt resistance nor capacitance; its voltage is undefined in the closed loop")]
    MissingShunt(usize),
    #[error("more than one machine at bus {0}")]
    DuplicateMachineAtBus(usize),
    #[error("power flow diverged after {iterations} iterations (mismatch trace {trace:?})")]
    PowerFlowDiverged { iterations: usize, trace: Vec<f64> },
    #[error("power flow Jacobian ill-conditioned at iteration {0}")]
    IllConditionedJacobian(usize),
    #[error("{value:?} is not within tolerance {tol:e} of any eigenvalue (nearest distance {distance:e})")]
    NotAMode { value: (f64, f64), distance: f64, tol: f64 },
    #[error("state blow-up at t = {time} s")]
    StateBlowup { time: f64 },
    #[error("invalid event or parameter path: {0}")]
    EventPathInvalid(String),
    #[error("system is unstable at the operating point; cannot measure (pole {re} + {im}j)")]
    UnstableAtOperatingPoint { re: f64, im: f64 },
    #[error("measurement window is not an integer number of cycles: {0}")]
    LeakageDetected(String),
    #[error("schema error at {pointer}: {message}")]
    SchemaError { pointer: String, message: String },
    #[error("unknown machine kind {kind:?} at {pointer}")]
    UnknownMachineKind { pointer: String, kind: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable identifier for the error variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimMismatch(_) => "DimMismatch",
            Error::SingularAtS { .. } => "SingularAtS",
            Error::SingularD { .. } => "SingularD",
            Error::IllPosedLoop { .. } => "IllPosedLoop",
            Error::EigFailure(_) => "EigFailure",
            Error::ZeroFieldFlux => "ZeroFieldFlux",
            Error::ZeroVoltage => "ZeroVoltage",
            Error::NoEquilibrium(_) => "NoEquilibrium",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DisconnectedGraph(_) => "DisconnectedGraph",
            Error::MissingShunt(_) => "MissingShunt",
            Error::DuplicateMachineAtBus(_) => "DuplicateMachineAtBus",
            Error::PowerFlowDiverged { .. } => "PowerFlowDiverged",
            Error::IllConditionedJacobian(_) => "IllConditionedJacobian",
            Error::NotAMode { .. } => "NotAMode",
            Error::StateBlowup { .. } => "StateBlowup",
            Error::EventPathInvalid(_) => "EventPathInvalid",
            Error::UnstableAtOperatingPoint { .. } => "UnstableAtOperatingPoint",
            Error::LeakageDetected(_) => "LeakageDetected",
            Error::SchemaError { .. } => "SchemaError",
            Error::UnknownMachineKind { .. } => "UnknownMachineKind",
            Error::Io(_) => "Io",
        }
    }

    /// JSON pointer of the offending input field, when one applies.
    pub fn path(&self) -> Option<&str> {
        match self {
            Error::SchemaError { pointer, .. } | Error::UnknownMachineKind { pointer, .. } => Some(pointer),
            Error::EventPathInvalid(p) => Some(p),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
