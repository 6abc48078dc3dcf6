use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate observation channel: eps > 0 but a player has a single action")]
    DegenerateChannel,
    #[error("epsilon best response undefined: every action is a best response and eps > 0")]
    DegenerateDenominator,
    #[error("filter posterior has zero normalizer")]
    FilterDegenerate,
    #[error("invalid environment layout: {0}")]
    Layout(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
