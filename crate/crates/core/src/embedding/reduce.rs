use super::lift::LiftCoord;
use super::Embedding;
use crate::coeff::Coeff;
use crate::polynomial::{MultiPoly, PolyVectorField, VarImage};
use crate::systems::{Activation, Network, PolySystem};

#[derive(Debug, Clone)]
enum Fate<C> {
    Keep,
    Alias(usize),
    Const(C),
}

/// The data a gate variable is a function of: two gates with equal keys are
/// the same function of the network state.
struct GateKey<'a, C: Coeff> {
    sigma: &'a Activation<C>,
    row: Vec<C>,
    offset: C,
}

impl<C: Coeff> PartialEq for GateKey<'_, C> {
    fn eq(&self, other: &Self) -> bool {
        self.sigma == other.sigma && self.row == other.row && self.offset == other.offset
    }
}

fn gate_key<C: Coeff>(net: &Network<C>, coord: LiftCoord) -> Option<GateKey<'_, C>> {
    match (net, coord) {
        (Network::Rnn(rnn), LiftCoord::RnnGate { j, r }) => {
            let alpha = &rnn.alphabet()[r];
            let mut offset = C::zero();
            for k in 0..rnn.m() {
                offset = offset + rnn.b()[(j, k)].clone() * alpha[k].clone();
            }
            Some(GateKey {
                sigma: rnn.sigma(),
                row: rnn.a().row(j).iter().cloned().collect(),
                offset,
            })
        }
        (Network::Lstm(l), LiftCoord::LstmGate { gate, j, r }) => Some(GateKey {
            sigma: l.sigma(gate),
            row: l.u(gate).row(j).iter().cloned().collect(),
            offset: l.gate_offset(gate, &l.alphabet()[r])[j].clone(),
        }),
        _ => None,
    }
}

fn gate_sigma<C: Coeff>(net: &Network<C>, coord: LiftCoord) -> Option<&Activation<C>> {
    match (net, coord) {
        (Network::Rnn(rnn), LiftCoord::RnnGate { .. }) => Some(rnn.sigma()),
        (Network::Lstm(l), LiftCoord::LstmGate { gate, .. }) => Some(l.sigma(gate)),
        _ => None,
    }
}

fn resolve<C: Coeff>(fates: &[Fate<C>], new_index: &[Option<usize>], mut i: usize) -> VarImage<C> {
    loop {
        match &fates[i] {
            Fate::Keep => return VarImage::Var(new_index[i].expect("kept variables are indexed")),
            Fate::Alias(t) => i = *t,
            Fate::Const(c) => return VarImage::Const(c.clone()),
        }
    }
}

/// Removes redundant coordinates from a network embedding.
///
/// * gates with a constant activation become that constant;
/// * gates with the same activation applied to the same argument are merged
///   into the lowest-indexed one;
/// * an identity `σ₅` block is identified with the state `x`;
/// * a state coordinate whose derivative vanishes identically for every
///   letter is replaced by its initial value (repeated to a fixpoint).
///
/// Trajectories from `v0` are preserved because every rewrite holds on the
/// image of the lift.
pub fn reduce_embedding<C: Coeff>(emb: &Embedding<C>) -> Embedding<C> {
    let sys = &emb.system;
    let net = emb.lift.network();
    let coords = emb.lift.coordinates();
    let init = net.initial_state();
    let d = sys.dim();

    let mut fates: Vec<Fate<C>> = Vec::with_capacity(d);
    for (i, &coord) in coords.iter().enumerate() {
        let fate = match coord {
            LiftCoord::RnnGate { .. } | LiftCoord::LstmGate { .. } => {
                let sigma = gate_sigma(net, coord).expect("gate coordinate");
                if let Some(c) = sigma.constant_value() {
                    Fate::Const(c)
                } else {
                    let key = gate_key(net, coord);
                    (0..i)
                        .find(|&t| matches!(fates[t], Fate::Keep) && gate_key(net, coords[t]) == key)
                        .map_or(Fate::Keep, Fate::Alias)
                }
            }
            LiftCoord::Sigma5 { j } => {
                let Network::Lstm(l) = net else {
                    unreachable!("σ5 coordinates only occur in LSTM embeddings")
                };
                let s5 = l.sigma(5);
                if let Some(c) = s5.constant_value() {
                    Fate::Const(c)
                } else if s5.is_identity() {
                    match coords.iter().position(|c| *c == LiftCoord::State { i: j }) {
                        Some(p) => Fate::Alias(p),
                        None => Fate::Const(init[j].clone()),
                    }
                } else {
                    Fate::Keep
                }
            }
            LiftCoord::State { .. } => Fate::Keep,
        };
        fates.push(fate);
    }

    loop {
        let mut new_index = vec![None; d];
        let mut kept = Vec::new();
        for (i, f) in fates.iter().enumerate() {
            if matches!(f, Fate::Keep) {
                new_index[i] = Some(kept.len());
                kept.push(i);
            }
        }
        let nd = kept.len();
        let images: Vec<VarImage<C>> = (0..d).map(|i| resolve(&fates, &new_index, i)).collect();
        let sub = |p: &MultiPoly<C>| {
            p.substitute(&images, nd)
                .expect("images cover every variable of the embedding")
        };
        let fields: Vec<PolyVectorField<C>> = sys
            .fields()
            .iter()
            .map(|f| {
                let comps = kept.iter().map(|&i| sub(&f.components()[i])).collect();
                PolyVectorField::new(nd, comps).expect("reduced components share one ring")
            })
            .collect();

        let frozen: Vec<usize> = kept
            .iter()
            .enumerate()
            .filter(|&(_, &i)| matches!(coords[i], LiftCoord::State { .. }))
            .filter(|&(pos, _)| fields.iter().all(|f| f.components()[pos].is_zero()))
            .map(|(_, &i)| i)
            .collect();
        if !frozen.is_empty() {
            for i in frozen {
                let LiftCoord::State { i: s } = coords[i] else { unreachable!() };
                fates[i] = Fate::Const(init[s].clone());
            }
            continue;
        }

        let output = sys.output().iter().map(sub).collect();
        let v0 = kept.iter().map(|&i| sys.v0()[i]).collect();
        let approx = kept.iter().map(|&i| sys.v0_approximate()[i]).collect();
        let variables = kept.iter().map(|&i| sys.variables()[i].clone()).collect();
        let system = PolySystem::new(fields, output, v0, approx, variables)
            .expect("reduction keeps the system consistent");
        return Embedding {
            system,
            lift: emb.lift.restricted(&kept),
        };
    }
}
