//! Exact and numerical tools for quantum anomaly detection among `n` qubits
//! with `k` anomalous sources.

pub mod combinatorics;
pub mod error;
pub mod gram;
pub mod johnson;
pub mod linalg;
pub mod oracle;
pub mod protocols;
pub mod quadrature;
pub mod sweep;
pub mod universal;
pub mod verify;

pub use error::{Error, Result};
