//! Exact computations on free Lie algebras, formal brackets in jet coordinates,
//! Lie flags of polynomial frames and ampleness of principal-subspace slices.

pub mod ampleness;
pub mod flags;
pub mod freelie;
pub mod frontend;
pub mod jetalg;
pub mod linalg;
pub mod poly;
pub mod rational;

use thiserror::Error;

/// Any error raised by the library, tagged with its module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    FreeLie(#[from] freelie::FreeLieError),
    #[error(transparent)]
    Jet(#[from] jetalg::JetError),
    #[error(transparent)]
    Flag(#[from] flags::FlagError),
    #[error(transparent)]
    Ampleness(#[from] ampleness::AmplenessError),
    #[error(transparent)]
    Parse(#[from] frontend::ParseError),
}

impl Error {
    pub fn module(&self) -> &'static str {
        match self {
            Error::FreeLie(_) => "freelie",
            Error::Jet(_) => "jetalg",
            Error::Flag(_) => "flags",
            Error::Ampleness(_) => "ampleness",
            Error::Parse(_) => "frontend",
        }
    }
}
