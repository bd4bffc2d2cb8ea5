use ratlp::LpError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Solver(#[from] LpError),
}

impl Error {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Error::Internal(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
