use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] crosswalk_core::Error),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("unknown session {0}")]
    UnknownSession(u64),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("session task stopped")]
    SessionClosed,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
