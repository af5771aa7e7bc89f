use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller violated a precondition (empty input, bad range, unknown id).
    #[error("usage error: {0}")]
    Usage(String),
    /// A non-finite intermediate while differentiating.
    #[error("numeric error in `{param}`: {detail}")]
    Numeric { param: &'static str, detail: String },
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },
    /// A material whose frames could not be read.
    #[error("input error for material `{id}`: {detail}")]
    Input { id: String, detail: String },
    /// A malformed or invalid input file. `path` is the field path inside it.
    #[error("load error at `{path}`: {detail}")]
    Load { path: String, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn load(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Load {
            path: path.into(),
            detail: detail.into(),
        }
    }
}
