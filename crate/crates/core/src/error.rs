use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("setting {0:04b} is not part of the Bell inequality")]
    SettingOutsideInequality(u8),

    #[error("history has zero probability under the device strategy (use {use_index})")]
    ZeroProbabilityHistory { use_index: usize },

    #[error("bias strategy returned {bias} which exceeds epsilon = {epsilon} at step {step}")]
    StrategyViolation { bias: f64, epsilon: f64, step: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("linear program {status}: {detail}")]
    Solver { status: &'static str, detail: String },

    #[error("certification failed at delta = {delta}: setting {setting:04b}, guess {guess} has optimum {value} > bound {bound}")]
    Certification { delta: f64, setting: u8, guess: u8, value: f64, bound: f64 },

    #[error("instance too large for exact enumeration: {0}")]
    SizeGuard(String),

    #[error("distribution is not normalized (sum = {0})")]
    Unnormalized(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("manifest mismatch: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
