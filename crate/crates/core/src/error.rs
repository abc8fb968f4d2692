use thiserror::Error;

use crate::codec::CodecError;
use crate::lang::LangError;
use crate::params::ParamsError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("concept is not in the teaching book")]
    ConceptNotInBook,
    #[error("search cap exhausted: {0}")]
    CapExhausted(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("book file: {0}")]
    BookFile(String),
    #[error("book was built with config digest {found}, expected {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error("concept {concept} is compatible with {witness} but its book program is not")]
    Assumption { concept: String, witness: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by a finite search cap rather than bad input.
    pub fn is_cap_exhaustion(&self) -> bool {
        matches!(self, Error::CapExhausted(_))
    }
}
