//! Polynomial embeddings of ODE-RNNs and ODE-LSTMs.
//!
//! RNN layout (0-based): gate variable `σ(e_j·(Ax + Bα_r))` at `r + K·j`,
//! followed by the state `x`. LSTM layout: gate `l` of row `j` for letter `r`
//! at `j + n(l-1) + 4n·r`, then the `σ₅(x)` block, then `x`, then `z`.

mod build;
mod lift;
mod reduce;

pub use build::{embed_lstm, embed_rnn};
pub use lift::{LiftCoord, LiftMap};
pub use reduce::reduce_embedding;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::systems::{Network, PolySystem};

/// `φ(r, j) = r + K(j-1)` between letter/row pairs and gate variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RnnIndexMap {
    n: usize,
    k: usize,
}

impl RnnIndexMap {
    pub fn new(n: usize, k: usize) -> Self {
        RnnIndexMap { n, k }
    }

    /// 1-based `φ(r, j)`.
    pub fn phi(&self, r: usize, j: usize) -> usize {
        r + self.k * (j - 1)
    }

    /// 0-based position of the gate for letter `r` and row `j`.
    pub fn index(&self, r: usize, j: usize) -> usize {
        r + self.k * j
    }

    /// Inverse of [`RnnIndexMap::index`]: `(r, j)`.
    pub fn letter_row(&self, i: usize) -> (usize, usize) {
        (i % self.k, i / self.k)
    }

    pub fn num_gates(&self) -> usize {
        self.k * self.n
    }

    /// `Kn + n`.
    pub fn dim(&self) -> usize {
        self.k * self.n + self.n
    }
}

/// `φ(l, j, r) = j + n(l-1) + 4n(r-1)` between gate/row/letter triples and
/// gate variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmIndexMap {
    n: usize,
    k: usize,
}

impl LstmIndexMap {
    pub fn new(n: usize, k: usize) -> Self {
        LstmIndexMap { n, k }
    }

    /// 1-based `φ(l, j, r)`.
    pub fn phi(&self, l: usize, j: usize, r: usize) -> usize {
        j + self.n * (l - 1) + 4 * self.n * (r - 1)
    }

    /// 0-based position; `gate` is `1..=4`, `j` and `r` are 0-based.
    pub fn index(&self, gate: usize, j: usize, r: usize) -> usize {
        j + self.n * (gate - 1) + 4 * self.n * r
    }

    /// Inverse of [`LstmIndexMap::index`]: `(gate, j, r)`.
    pub fn gate_row_letter(&self, i: usize) -> (usize, usize, usize) {
        let block = 4 * self.n;
        let rem = i % block;
        (rem / self.n + 1, rem % self.n, i / block)
    }

    pub fn num_gates(&self) -> usize {
        4 * self.n * self.k
    }

    /// `4nK + 3n`.
    pub fn dim(&self) -> usize {
        4 * self.n * self.k + 3 * self.n
    }
}

/// A polynomial system together with the lift of the network it embeds.
#[derive(Debug, Clone)]
pub struct Embedding<C: Coeff> {
    pub system: PolySystem<C>,
    pub lift: LiftMap<C>,
}

pub fn embed<C: Coeff>(net: &Network<C>) -> Embedding<C> {
    match net {
        Network::Rnn(r) => embed_rnn(r),
        Network::Lstm(l) => embed_lstm(l),
    }
}

impl<C: Coeff> Embedding<C> {
    pub fn reduce(&self) -> Embedding<C> {
        reduce_embedding(self)
    }

    /// Relative error `|D F_γ(s)·f_α(s) − Q_γ(F(s))| / max(1, |Q_γ|)` for every
    /// lift coordinate `γ`, with the directional derivative taken by central
    /// differences of step `eps` along the network field.
    pub fn chain_rule_errors(&self, state: &[f64], letter: usize, eps: f64) -> Result<Vec<f64>> {
        let net = self.lift.numeric_network();
        if letter >= net.num_letters() {
            return Err(Error::IndexOutOfRange {
                context: "letter",
                index: letter,
                len: net.num_letters(),
            });
        }
        let mut f = vec![0.0; state.len()];
        net.field(letter, state, &mut f);
        let shifted = |sign: f64| -> Result<Vec<f64>> {
            let s: Vec<f64> = state.iter().zip(&f).map(|(s, v)| s + sign * eps * v).collect();
            self.lift.evaluate(&s)
        };
        let plus = shifted(1.0)?;
        let minus = shifted(-1.0)?;
        let at = self.lift.evaluate(state)?;
        let mut q = vec![0.0; at.len()];
        self.system.compile().field_into(letter, &at, &mut q);
        Ok(plus
            .iter()
            .zip(&minus)
            .zip(&q)
            .map(|((p, m), q)| ((p - m) / (2.0 * eps) - q).abs() / q.abs().max(1.0))
            .collect())
    }
}
