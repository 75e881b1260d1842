use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error("arm {arm} has no pulls yet")]
    EmptyHistory { arm: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value {value} in {what}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A matched weight scheme found no past pull to put mass on.
    #[error("no supporting pull for {scheme} weights on arm {arm}")]
    NoSupport { scheme: &'static str, arm: usize },

    #[error("arm index {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<BanditError>,
    },
}

pub type Result<T, E = BanditError> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(BanditError::NonFinite { what, value })
    }
}
