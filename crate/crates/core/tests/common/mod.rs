#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use polyembed::systems::{Activation, LstmParts, Network, OdeLstm, OdeRnn};
use rand::Rng;

pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

pub fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

pub fn vector<R: Rng>(rng: &mut R, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.gen_range(-scale..scale))
}

/// `k` pairwise distinct letters in `[-1, 1]^m`.
pub fn alphabet<R: Rng>(rng: &mut R, m: usize, k: usize) -> Vec<DVector<f64>> {
    let mut letters: Vec<DVector<f64>> = Vec::with_capacity(k);
    while letters.len() < k {
        let v = vector(rng, m, 1.0);
        if letters.iter().all(|l| (l - &v).amax() > 1e-3) {
            letters.push(v);
        }
    }
    letters
}

pub fn smooth_activation<R: Rng>(rng: &mut R) -> Activation<f64> {
    if rng.gen_bool(0.5) {
        Activation::tanh()
    } else {
        Activation::sigmoid()
    }
}

pub fn random_rnn<R: Rng>(rng: &mut R, n: usize, m: usize, k: usize) -> OdeRnn<f64> {
    let p = rng.gen_range(1..=n);
    OdeRnn::new(
        matrix(rng, n, n, 1.0),
        matrix(rng, n, m, 1.0),
        matrix(rng, p, n, 1.0),
        smooth_activation(rng),
        vector(rng, n, 1.0),
        alphabet(rng, m, k),
    )
    .unwrap()
}

pub fn lstm_with<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    k: usize,
    sigmas: Vec<Activation<f64>>,
) -> OdeLstm<f64> {
    let p = rng.gen_range(1..=n);
    OdeLstm::new(LstmParts {
        u: (0..5).map(|_| matrix(rng, n, n, 0.5)).collect(),
        w: (0..4).map(|_| matrix(rng, n, m, 1.0)).collect(),
        b: (0..4).map(|_| vector(rng, n, 0.5)).collect(),
        c: matrix(rng, p, 2 * n, 1.0),
        sigmas,
        x0: vector(rng, n, 1.0),
        z0: vector(rng, n, 1.0),
        alphabet: alphabet(rng, m, k),
    })
    .unwrap()
}

pub fn random_lstm<R: Rng>(rng: &mut R, n: usize, m: usize, k: usize) -> OdeLstm<f64> {
    let sigmas = (0..5).map(|_| smooth_activation(rng)).collect();
    lstm_with(rng, n, m, k, sigmas)
}

/// An LSTM whose gates mix smooth, constant and identity activations, so
/// that reduction has something to merge.
pub fn reducible_lstm<R: Rng>(rng: &mut R, n: usize, m: usize, k: usize) -> OdeLstm<f64> {
    let gate = |rng: &mut R| match rng.gen_range(0..4) {
        0 => Activation::const0(),
        1 => Activation::const1(),
        2 => Activation::tanh(),
        _ => Activation::sigmoid(),
    };
    let mut sigmas: Vec<Activation<f64>> = (0..4).map(|_| gate(rng)).collect();
    sigmas.push(match rng.gen_range(0..3) {
        0 => Activation::identity(),
        1 => Activation::const1(),
        _ => Activation::tanh(),
    });
    lstm_with(rng, n, m, k, sigmas)
}

pub fn random_network<R: Rng>(rng: &mut R) -> Network<f64> {
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=2);
        let k = rng.gen_range(1..=3);
        Network::Rnn(random_rnn(rng, n, m, k))
    } else {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=2);
        let k = rng.gen_range(1..=3);
        Network::Lstm(random_lstm(rng, n, m, k))
    }
}

/// A random state of the network near its initial condition.
pub fn random_state<R: Rng>(rng: &mut R, net: &Network<f64>) -> Vec<f64> {
    (0..net.state_dim()).map(|_| rng.gen_range(-1.5..1.5)).collect()
}
