use serde::Serialize;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::systems::{Network, NumericNetwork};

/// What a coordinate of the lifted state measures, with 0-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LiftCoord {
    /// `σ(e_j·(A x + B α_r))`.
    RnnGate { j: usize, r: usize },
    /// `σ_l(e_j·(U^l h + W^l α_r + b^l))` with `gate` in `1..=4`.
    LstmGate { gate: usize, j: usize, r: usize },
    /// `σ₅(x_j)`.
    Sigma5 { j: usize },
    /// Source state coordinate `s_i`.
    State { i: usize },
}

/// The state lift `F` from a network's state space into the state space of
/// its polynomial embedding.
#[derive(Debug, Clone)]
pub struct LiftMap<C: Coeff> {
    network: Network<C>,
    numeric: NumericNetwork<C>,
    full_dim: usize,
    // kept[i] is the position in the full lift of target coordinate i
    kept: Vec<usize>,
    coords: Vec<LiftCoord>,
}

impl<C: Coeff> LiftMap<C> {
    pub(crate) fn full(network: Network<C>, coords: Vec<LiftCoord>) -> Self {
        let numeric = network.numeric();
        LiftMap {
            network,
            numeric,
            full_dim: coords.len(),
            kept: (0..coords.len()).collect(),
            coords,
        }
    }

    pub(crate) fn restricted(&self, keep: &[usize]) -> Self {
        LiftMap {
            network: self.network.clone(),
            numeric: self.numeric.clone(),
            full_dim: self.full_dim,
            kept: keep.iter().map(|&i| self.kept[i]).collect(),
            coords: keep.iter().map(|&i| self.coords[i]).collect(),
        }
    }

    pub fn network(&self) -> &Network<C> {
        &self.network
    }

    pub fn numeric_network(&self) -> &NumericNetwork<C> {
        &self.numeric
    }

    pub fn source_dim(&self) -> usize {
        self.network.state_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coordinates(&self) -> &[LiftCoord] {
        &self.coords
    }

    /// Whether some coordinates were removed by reduction.
    pub fn is_reduced(&self) -> bool {
        self.kept.len() != self.full_dim
    }

    /// Position of each source coordinate among the target coordinates, or
    /// `None` when reduction replaced it by a constant.
    pub fn state_positions(&self) -> Vec<Option<usize>> {
        (0..self.source_dim())
            .map(|i| self.coords.iter().position(|c| *c == LiftCoord::State { i }))
            .collect()
    }

    /// Human-readable defining expression of target coordinate `i`.
    pub fn describe(&self, i: usize) -> String {
        describe(&self.network, self.coords[i])
    }

    pub fn label(&self, i: usize) -> String {
        label(&self.network, self.coords[i])
    }

    pub fn evaluate(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.source_dim() {
            return Err(Error::DimensionMismatch {
                context: "lift argument",
                expected: self.source_dim(),
                found: state.len(),
            });
        }
        let mut full = vec![0.0; self.full_dim];
        self.evaluate_full(state, &mut full);
        Ok(self.kept.iter().map(|&k| full[k]).collect())
    }

    fn evaluate_full(&self, s: &[f64], out: &mut [f64]) {
        match &self.numeric {
            NumericNetwork::Rnn(r) => {
                let n = s.len();
                let k = r.drives.len();
                for j in 0..n {
                    let mut ax = 0.0;
                    for (i, si) in s.iter().enumerate() {
                        ax += r.a[(j, i)] * si;
                    }
                    for (rr, drive) in r.drives.iter().enumerate() {
                        out[rr + k * j] = r.sigma.value(ax + drive[j]);
                    }
                }
                out[k * n..].copy_from_slice(s);
            }
            NumericNetwork::Lstm(l) => {
                let n = l.n;
                let k = l.drives.len();
                for (r, drives) in l.drives.iter().enumerate() {
                    let g = l.gates_with_drives(drives, s);
                    for (l0, gate) in g.gates.iter().enumerate() {
                        for (j, v) in gate.iter().enumerate() {
                            out[j + n * l0 + 4 * n * r] = *v;
                        }
                    }
                }
                let base = 4 * n * k;
                for j in 0..n {
                    out[base + j] = l.sigmas[4].value(s[j]);
                }
                out[base + n..].copy_from_slice(s);
            }
        }
    }
}

pub(crate) fn label<C: Coeff>(net: &Network<C>, coord: LiftCoord) -> String {
    match coord {
        LiftCoord::RnnGate { j, r } => format!("v[j={},r={}]", j + 1, r + 1),
        LiftCoord::LstmGate { gate, j, r } => format!("v[l={gate},j={},r={}]", j + 1, r + 1),
        LiftCoord::Sigma5 { j } => format!("v[l=5,j={}]", j + 1),
        LiftCoord::State { i } => state_name(net, i),
    }
}

fn state_name<C: Coeff>(net: &Network<C>, i: usize) -> String {
    match net {
        Network::Rnn(_) => format!("x{}", i + 1),
        Network::Lstm(l) if i < l.n() => format!("x{}", i + 1),
        Network::Lstm(l) => format!("z{}", i - l.n() + 1),
    }
}

pub(crate) fn describe<C: Coeff>(net: &Network<C>, coord: LiftCoord) -> String {
    match (net, coord) {
        (Network::Rnn(rnn), LiftCoord::RnnGate { j, r }) => {
            format!("{}(e{}.(A x + B a{}))", rnn.sigma().name(), j + 1, r + 1)
        }
        (Network::Lstm(l), LiftCoord::LstmGate { gate, j, r }) => format!(
            "{}(e{}.(U{gate} h + W{gate} a{} + b{gate})), h = z*{}(x)",
            l.sigma(gate).name(),
            j + 1,
            r + 1,
            l.sigma(5).name()
        ),
        (Network::Lstm(l), LiftCoord::Sigma5 { j }) => {
            format!("{}(x{})", l.sigma(5).name(), j + 1)
        }
        (_, LiftCoord::State { i }) => state_name(net, i),
        _ => unreachable!("lift coordinate does not belong to this network kind"),
    }
}
