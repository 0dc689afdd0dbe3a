//! Networks, activations, polynomial systems and input signals.

mod activation;
mod network;
mod poly_system;
mod signal;
pub mod spec;

pub use activation::{Activation, ConsistencyCheck, BUILTIN_NAMES};
pub use network::{
    LstmGates, LstmParts, Network, NumericLstm, NumericNetwork, NumericRnn, OdeLstm, OdeRnn,
};
pub use poly_system::{CompiledSystem, PolySystem, Variable};
pub use signal::{InputSignal, Trajectory};

use crate::coeff::Coeff;
use crate::error::Result;

/// `σ(Ax + B·letter)` componentwise.
pub fn rnn_vector_field<C: Coeff>(net: &OdeRnn<C>, letter: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    net.vector_field(letter, x)
}

/// `(U⁰x + g²⊙x + g³⊙g¹, g⁴)` at `s = (x, z)`.
pub fn lstm_vector_field<C: Coeff>(net: &OdeLstm<C>, letter: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    net.vector_field(letter, s)
}
