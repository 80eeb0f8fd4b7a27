use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subcarrier spacing must be positive, got {0} Hz")]
    NonPositiveSpacing(f64),

    #[error("grid stop {f_stop} Hz must exceed start {f_start} Hz")]
    EmptySpan { f_start: f64, f_stop: f64 },

    #[error("span {span} Hz is not a multiple of {delta_f} Hz (residual {residual} tones)")]
    NonDivisibleSpan { span: f64, delta_f: f64, residual: f64 },

    #[error("band edge {edge} Hz is off the {delta_f} Hz tone grid")]
    MisalignedBand { edge: f64, delta_f: f64 },

    #[error("invalid band list: {0}")]
    InvalidBands(String),

    #[error("unknown shaping preset '{0}' (expected flat, flat-taper or toneplan-11ax)")]
    UnknownPreset(String),

    #[error("band [{f_lo}, {f_hi}] Hz is narrower than the {preset} guard structure")]
    BandTooNarrow { f_lo: f64, f_hi: f64, preset: String },

    #[error("unknown scenario id '{0}'")]
    UnknownScenario(String),

    #[error("mask has no used subcarriers")]
    EmptyUsedSet,

    #[error("expected exactly two subbands, found {0}")]
    SubbandCount(usize),

    #[error("vector length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("noiseless mean model has zero power; SNR is undefined")]
    ZeroMeanModel,

    #[error("noise variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("gain information block is singular at {context} (condition number {cond:e})")]
    SingularGainBlock { context: String, cond: f64 },

    #[error("effective delay information is singular at {context} (condition number {cond:e})")]
    SingularEffective { context: String, cond: f64 },

    #[error("invalid delay axis: {0}")]
    InvalidAxis(String),

    #[error("invalid sweep grid: {0}")]
    InvalidSweep(String),

    #[error("peak window [{lo}, {hi}] s is not inside the scanned axis")]
    WindowOutsideAxis { lo: f64, hi: f64 },

    #[error("peak window covers {steps} grid steps, need at least {min}")]
    WindowTooNarrow { steps: usize, min: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularGainBlock { .. } | Error::SingularEffective { .. } | Error::ZeroMeanModel
        )
    }
}
