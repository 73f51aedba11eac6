use thiserror::Error;

/// Errors produced by waveform modelling, optimization and experiment code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(
        "invalid frequency band: f_min = {f_min} Hz, f_max = {f_max} Hz (need f_max > f_min > 0)"
    )]
    InvalidBand { f_min: f64, f_max: f64 },

    #[error("tone count must be at least 1")]
    ZeroTones,

    #[error("grid inconsistency: last tone {last_tone} Hz exceeds f_max = {f_max} Hz")]
    GridOverflow { last_tone: f64, f_max: f64 },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("grid mismatch between waveform and channel response")]
    GridMismatch,

    #[error("invalid {what}: {value}")]
    InvalidValue { what: &'static str, value: f64 },

    #[error("channel must contain at least one tap")]
    EmptyChannel,

    #[error("quadrature needs at least 2 samples per period, got {0}")]
    TooFewSamples(usize),

    #[error("diode exponent overflow: peak exponent {peak:.3} exceeds cap {cap}")]
    ExponentOverflow { peak: f64, cap: f64 },

    #[error("rectifier RHS {0} is below 1; a zero-mean input cannot produce it")]
    RhsBelowOne(f64),

    #[error("all channel gains are zero; the objective does not depend on the amplitudes")]
    ZeroChannel,

    #[error("degenerate linearization: no positive coefficient among {0} tones")]
    DegenerateLinearization(usize),

    #[error("transient step {step:.3e} s is too large: {reason}")]
    StepTooLarge { step: f64, reason: String },

    #[error("transient did not settle: window means {previous:.6e} V and {last:.6e} V differ by more than 1%")]
    TransientNotSettled { previous: f64, last: f64 },

    #[error("zero-power waveform has no defined PAPR")]
    ZeroPower,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag used in CSV status columns.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidBand { .. } => "invalid-band",
            Error::ZeroTones => "zero-tones",
            Error::GridOverflow { .. } => "grid-overflow",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::GridMismatch => "grid-mismatch",
            Error::InvalidValue { .. } => "invalid-value",
            Error::EmptyChannel => "empty-channel",
            Error::TooFewSamples(_) => "too-few-samples",
            Error::ExponentOverflow { .. } => "exponent-overflow",
            Error::RhsBelowOne(_) => "rhs-below-one",
            Error::ZeroChannel => "zero-channel",
            Error::DegenerateLinearization(_) => "degenerate-linearization",
            Error::StepTooLarge { .. } => "step-too-large",
            Error::TransientNotSettled { .. } => "transient-not-settled",
            Error::ZeroPower => "zero-power",
            Error::Config(_) => "config",
        }
    }
}
