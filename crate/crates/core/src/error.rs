use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} out of range: {value} not in {range}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        range: String,
    },

    #[error("energy causality violated: spending {spend} quanta with only {battery} in the battery")]
    CausalityViolation { spend: u32, battery: u32 },

    #[error("inadmissible action u={action} in state with battery {battery}")]
    InadmissibleAction { action: u32, battery: u32 },

    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),

    #[error("value iteration did not converge after {iterations} iterations (span {span:e})")]
    NotConverged { iterations: usize, span: f64 },

    #[error("policy covers {policy} states, model has {model}")]
    ConfigMismatch { policy: usize, model: usize },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(what: &'static str, value: i64, lo: i64, hi: i64) -> Result<()> {
    if value < lo || value > hi {
        return Err(Error::OutOfRange {
            what,
            value,
            range: format!("[{lo}, {hi}]"),
        });
    }
    Ok(())
}
