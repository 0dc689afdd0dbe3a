//! RK4 integration of networks and polynomial systems under piecewise-constant
//! inputs, embedding verification and Euler discretization.

mod euler;
mod rk4;

pub use euler::{euler_discretize, EulerStepper};
pub use rk4::{integrate, step_grid, IntegratorConfig, Step, SwitchedSystem, BLOW_UP_BOUND};

use rand::Rng;
use serde::Serialize;

use crate::coeff::Coeff;
use crate::embedding::{embed, Embedding};
use crate::error::Result;
use crate::systems::{CompiledSystem, InputSignal, Network, NumericNetwork, PolySystem, Trajectory};

impl<C: Coeff> SwitchedSystem for NumericNetwork<C> {
    fn state_dim(&self) -> usize {
        NumericNetwork::state_dim(self)
    }

    fn output_dim(&self) -> usize {
        NumericNetwork::output_dim(self)
    }

    fn num_letters(&self) -> usize {
        NumericNetwork::num_letters(self)
    }

    fn field(&self, letter: usize, x: &[f64], out: &mut [f64]) {
        NumericNetwork::field(self, letter, x, out)
    }

    fn output(&self, x: &[f64], out: &mut [f64]) {
        NumericNetwork::output(self, x, out)
    }
}

/// A compiled polynomial system ready for integration.
#[derive(Debug, Clone)]
pub struct PolySimulator {
    compiled: CompiledSystem,
    dim: usize,
    letters: usize,
}

impl PolySimulator {
    pub fn new<C: Coeff>(p: &PolySystem<C>) -> Self {
        PolySimulator {
            compiled: p.compile(),
            dim: p.dim(),
            letters: p.num_letters(),
        }
    }
}

impl SwitchedSystem for PolySimulator {
    fn state_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.compiled.output_dim()
    }

    fn num_letters(&self) -> usize {
        self.letters
    }

    fn field(&self, letter: usize, x: &[f64], out: &mut [f64]) {
        self.compiled.field_into(letter, x, out)
    }

    fn output(&self, x: &[f64], out: &mut [f64]) {
        self.compiled.output_into(x, out)
    }
}

pub fn integrate_network<C: Coeff>(
    net: &Network<C>,
    u: &InputSignal,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let num = net.numeric();
    integrate(&num, num.initial_state(), u, cfg)
}

pub fn integrate_poly<C: Coeff>(
    p: &PolySystem<C>,
    u: &InputSignal,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate(&PolySimulator::new(p), p.v0(), u, cfg)
}

/// Gaps between a network trajectory pushed through the lift and the
/// trajectory of its embedding, on a common grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub max_state_gap: f64,
    pub max_output_gap: f64,
    pub grid_size: usize,
    pub embedding_dim: usize,
    pub reduced: bool,
    pub config: IntegratorConfig,
}

fn inf_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn verify_embedding<C: Coeff>(
    net: &Network<C>,
    u: &InputSignal,
    cfg: &IntegratorConfig,
) -> Result<EquivalenceReport> {
    verify_with(&embed(net), u, cfg)
}

/// As [`verify_embedding`] for a prebuilt (possibly reduced) embedding.
pub fn verify_with<C: Coeff>(
    emb: &Embedding<C>,
    u: &InputSignal,
    cfg: &IntegratorConfig,
) -> Result<EquivalenceReport> {
    let num = emb.lift.numeric_network();
    let source = integrate(num, num.initial_state(), u, cfg)?;
    let target = integrate_poly(&emb.system, u, cfg)?;
    let mut max_state_gap: f64 = 0.0;
    let mut max_output_gap: f64 = 0.0;
    for k in 0..source.len() {
        let lifted = emb.lift.evaluate(&source.states[k])?;
        max_state_gap = max_state_gap.max(inf_gap(&lifted, &target.states[k]));
        max_output_gap = max_output_gap.max(inf_gap(&source.outputs[k], &target.outputs[k]));
    }
    Ok(EquivalenceReport {
        max_state_gap,
        max_output_gap,
        grid_size: source.len(),
        embedding_dim: emb.system.dim(),
        reduced: emb.lift.is_reduced(),
        config: *cfg,
    })
}

/// Random input with `segments` pieces whose durations add up to `horizon`,
/// followed by a random tail letter.
pub fn random_input_signal<R: Rng + ?Sized>(
    rng: &mut R,
    num_letters: usize,
    segments: usize,
    horizon: f64,
) -> InputSignal {
    let weights: Vec<f64> = (0..segments).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let pieces = weights
        .iter()
        .map(|w| (horizon * w / total, rng.gen_range(0..num_letters)))
        .filter(|(d, _)| *d > 0.0)
        .collect();
    let tail = rng.gen_range(0..num_letters);
    InputSignal::new(pieces, tail).expect("durations are positive")
}
