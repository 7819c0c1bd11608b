use crate::linalg::LinalgError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    /// An inner solve of a preconditioner failed; `block` names the operator.
    #[error("preconditioner block {block} failed: {source}")]
    Preconditioner { block: String, source: LinalgError },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn block(block: impl Into<String>) -> impl FnOnce(LinalgError) -> Self {
        let block = block.into();
        move |source| Error::Preconditioner { block, source }
    }
}
