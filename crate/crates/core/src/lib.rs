//! Polynomial embeddings of continuous-time recurrent networks.
//!
//! ODE-RNNs and ODE-LSTMs whose activations satisfy `σ' = P(σ)` are compiled
//! into polynomial systems that reproduce their input-output behavior. The
//! crate also provides the symbolic checks (Lie rank, transcendence degree,
//! sampled reachability) and an RK4 simulator used to validate embeddings.

pub mod algebra;
pub mod coeff;
pub mod error;
pub mod fixtures;
pub mod polynomial;
pub mod embedding;
pub mod simulation;
pub mod systems;

pub use coeff::{Coeff, CoeffMode, Rational};
pub use error::{Error, Result};
