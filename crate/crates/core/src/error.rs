use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    /// A feature vector whose norm is too small for the similarity to be defined.
    #[error("degenerate vector at sample {sample}, modality {modality} (norm {norm:e})")]
    DegenerateVector {
        sample: usize,
        modality: usize,
        norm: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training aborted at epoch {epoch}: {reason}")]
    Training { epoch: usize, reason: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Relabels the sample index of a [`Error::DegenerateVector`]; other errors pass through.
    pub(crate) fn at_sample(self, sample: usize) -> Self {
        match self {
            Error::DegenerateVector { modality, norm, .. } => Error::DegenerateVector {
                sample,
                modality,
                norm,
            },
            other => other,
        }
    }

    /// Same as [`Error::at_sample`] but takes the sample from a per-modality index list.
    pub(crate) fn at_tuple(self, indices: &[usize]) -> Self {
        match self {
            Error::DegenerateVector { modality, norm, .. } => Error::DegenerateVector {
                sample: indices[modality],
                modality,
                norm,
            },
            other => other,
        }
    }
}
