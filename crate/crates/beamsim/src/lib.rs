//! Multi-user millimeter-wave beamspace MIMO link-level simulator.
//!
//! The library models a single-cell downlink in which a base station with an
//! `M`-element lens antenna array serves `K` single-antenna users through a
//! reduced set of RF chains. Channels are transformed into beamspace by a
//! unitary DFT, a beam-selection stage picks the RF-chain groups (single-group
//! SBS baseline or two-group hybrid HBS), and zero-forcing precoding runs on
//! the reduced equivalent channel. Channel directions are fed back through
//! random vector quantization; the crate measures the resulting per-user rate
//! loss and cross-checks it against closed-form quantization-error
//! expressions and rate-loss bounds.
//!
//! Modules:
//! - [`numerics`]: complex matrices, unitary DFT, pseudoinverse, log-gamma/beta.
//! - [`channel`]: sparse multipath channel generation over a ULA.
//! - [`beamspace`]: beamspace transform, SBS/HBS selection, equivalent channel.
//! - [`feedback`]: RVQ codebooks, quantization, QE theory and bounds.
//! - [`precoding`]: ZF precoding, per-user rates, rate loss and its bound.
//! - [`harness`]: seeded Monte Carlo runner, config parsing, report emission.

pub mod beamspace;
pub mod channel;
pub mod feedback;
pub mod harness;
pub mod numerics;
pub mod precoding;
pub mod rng;

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes:
/// configuration errors exit 2, numerical failures exit 3, I/O failures 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Parse(_) => 2,
            Error::Singular(_) | Error::Numerical(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
