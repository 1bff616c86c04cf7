use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid tabulated lifespan tail: {0}")]
    InvalidTail(String),

    #[error("operation requires an exponential lifespan measure")]
    NotExponential,

    #[error("parameter regime not supported: {0}")]
    UnsupportedRegime(String),

    #[error("could not bracket the Malthusian root below lambda = {upper}")]
    RootNotBracketed { upper: f64 },

    #[error("grid step {step} exceeds horizon {horizon}")]
    InvalidGrid { step: f64, horizon: f64 },

    #[error("argument {x} lies beyond the tabulated horizon {horizon}")]
    BeyondHorizon { x: f64, horizon: f64 },

    #[error(
        "population cap exceeded ({particles} particles > {cap}); reduce the horizon or raise the cap"
    )]
    PopulationCapExceeded { particles: usize, cap: usize },

    #[error("event cap exceeded ({events} events > {cap}); reduce the horizon or raise the cap")]
    EventCapExceeded { events: usize, cap: usize },

    #[error("no surviving population after {attempts} attempts")]
    MaxAttemptsExceeded { attempts: usize },

    #[error("insufficient sample for {test}: need {needed}, got {got}")]
    InsufficientSample {
        test: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("unknown validation suite `{0}`")]
    UnknownSuite(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure_param(
    ok: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
