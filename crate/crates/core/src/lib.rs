//! Simulation toolkit for quantum-controlled temporal order.
//!
//! - [`qcore`]: dense linear algebra on labelled qubit registers.
//! - [`spacetime`]: gravitational time dilation, light propagation and event ordering.
//! - [`switch`]: the gravitational quantum switch and its entangled-order variant.
//! - [`bell`]: CHSH evaluation and classical hidden-order models.
//! - [`procmat`]: process matrices, the generalised Born rule and non-separability certificates.

pub mod qcore;
pub mod spacetime;
pub mod switch;
pub mod bell;
pub mod procmat;

use thiserror::Error;

/// Any error raised by the toolkit, tagged with the module it came from.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qcore: {0}")]
    Quantum(#[from] qcore::QError),
    #[error("spacetime: {0}")]
    Spacetime(#[from] spacetime::SpacetimeError),
    #[error("switch: {0}")]
    Switch(#[from] switch::SwitchError),
    #[error("bell: {0}")]
    Bell(#[from] bell::BellError),
    #[error("procmat: {0}")]
    Process(#[from] procmat::ProcessError),
}

impl Error {
    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Quantum(_) => "qcore",
            Error::Spacetime(_) => "spacetime",
            Error::Switch(_) => "switch",
            Error::Bell(_) => "bell",
            Error::Process(_) => "procmat",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
