//! Simulation of quantum-enhanced electro-optic sampling: photocount
//! difference statistics of a probe pulse mixed with a weak field on an
//! effective nonlinear beamsplitter, for classical and band-conditioned
//! probe states, plus phase-space diagnostics and conditioning-protocol
//! search.

pub mod bandopt;
pub mod cli_io;
pub mod eos_core;
pub mod error;
pub mod numerics;
pub mod probes;
pub mod signals;
pub mod wigner;

pub use error::{EosError, Result};
