use thiserror::Error;

use crate::dyadic::DyadicCube;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("scale t = {t} is below the resolvable limit {c_res} * h = {limit}")]
    Resolution { t: f64, c_res: f64, limit: f64 },

    #[error("cube {cube} is not a union of grid cells")]
    Misaligned { cube: DyadicCube },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration of {count} items exceeds the configured cap {cap}")]
    Resource { count: u128, cap: u128 },

    #[error("generation {generation} outside the configured range [{min}, {max}]")]
    GenerationOutOfRange { generation: i32, min: i32, max: i32 },

    #[error("invalid exponent {0}")]
    InvalidExponent(String),

    #[error("exponents violate 1/p = sum 1/p_i: {0}")]
    IndexRelation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("product average vanishes on {witness}; accretivity fails")]
    NotAccretive { witness: DyadicCube },

    #[error("profile rejected: {0}")]
    Profile(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
