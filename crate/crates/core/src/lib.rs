//! Simulation toolkit for two-layer PUF and quantum-readout PUF
//! entity authentication.

pub mod adversary;
pub mod classical_puf;
pub mod devices;
pub mod error;
pub mod fuzzy;
pub mod mathcore;
pub mod metrics;
pub mod protocol;
pub mod qrpuf;
pub mod qsim;
pub mod rng;

pub use error::{Error, Result};
pub use mathcore::BitString;
