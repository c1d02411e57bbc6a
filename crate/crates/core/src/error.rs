use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate load: |Z_L + Z_0| = {0:e} is too close to zero")]
    DegenerateLoad(f64),

    #[error("open circuit: reflection coefficient {re}+j{im} is too close to 1")]
    OpenCircuit { re: f64, im: f64 },

    #[error("singular impedance while applying {0}")]
    SingularImpedance(&'static str),

    #[error("reflection coefficient magnitude {0} lies outside the unit disk")]
    OutsideUnitDisk(f64),

    #[error("bias voltage {v} V outside calibrated range [{lo}, {hi}] V")]
    VoltageOutOfRange { v: f64, lo: f64, hi: f64 },

    #[error("resistance {r} ohm is unreachable; achievable range is [{lo}, {hi}] ohm")]
    UnreachableResistance { r: f64, lo: f64, hi: f64 },

    #[error("target sample {index} needs rho {rho} outside achievable [{lo}, {hi}]")]
    InfeasibleTarget { index: usize, rho: f64, lo: f64, hi: f64 },

    #[error("modulation space has zero effective radius")]
    EmptyModulationSpace,

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    RateMismatch { left: f64, right: f64 },

    #[error("input too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("symbol {symbol} out of range for {max} symbols")]
    SymbolOutOfRange { symbol: u32, max: u32 },

    #[error("no signal: envelope spread {spread:e} below floor {floor:e}")]
    NoSignal { spread: f64, floor: f64 },

    #[error("bad preamble {0:#04x}")]
    BadPreamble(u8),

    #[error("bad checksum: expected {expected:#04x}, got {got:#04x}")]
    BadChecksum { expected: u8, got: u8 },

    #[error("unknown {field} code {code}")]
    BadField { field: &'static str, code: u8 },

    #[error("carrier duration {duration} s shorter than required {required} s")]
    DurationTooShort { duration: f64, required: f64 },

    #[error("no detection: correlation peak {peak:.3} below threshold {threshold:.3}")]
    NoDetection { peak: f64, threshold: f64 },

    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),

    #[error("slot {slot} assigned to more than one tag")]
    DuplicateSlot { slot: u8 },

    #[error("BER {ber:.4} at minimum distance {distance} m already exceeds target {target}")]
    FailingAtMinDistance { ber: f64, target: f64, distance: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips any `Context` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
