use serde::Serialize;

use crate::error::{Error, Result};
use crate::systems::{InputSignal, Trajectory};

pub const BLOW_UP_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub step: f64,
    pub horizon: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            step: 1e-3,
            horizon: 1.0,
        }
    }
}

impl IntegratorConfig {
    pub fn new(step: f64, horizon: f64) -> Result<Self> {
        let cfg = IntegratorConfig { step, horizon };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {}", self.step)));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be non-negative, got {}",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// One integration interval `[t0, t1]` with the letter active on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t0: f64,
    pub t1: f64,
    pub letter: usize,
}

/// Uniform steps inside each constant piece of `u`, closed by a short final
/// step at every breakpoint, so no step straddles a switch.
pub fn step_grid(u: &InputSignal, cfg: &IntegratorConfig) -> Vec<Step> {
    let mut steps = Vec::new();
    for (start, end, letter) in u.pieces(cfg.horizon) {
        let len = end - start;
        let full = (len / cfg.step).floor() as usize;
        let mut t0 = start;
        for i in 1..=full {
            let t1 = start + i as f64 * cfg.step;
            steps.push(Step { t0, t1, letter });
            t0 = t1;
        }
        // a sliver below roundoff is absorbed by the last uniform step
        if end - t0 > 1e-9 * cfg.step {
            steps.push(Step { t0, t1: end, letter });
        } else if let Some(last) = steps.last_mut().filter(|s| s.letter == letter && s.t1 == t0) {
            last.t1 = end;
        }
    }
    steps
}

/// A family of vector fields indexed by letter, with a memoryless output.
pub trait SwitchedSystem {
    fn state_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn num_letters(&self) -> usize;
    fn field(&self, letter: usize, x: &[f64], out: &mut [f64]);
    fn output(&self, x: &[f64], out: &mut [f64]);
}

fn check_state(t: f64, x: &[f64]) -> Result<()> {
    if let Some(v) = x.iter().find(|v| !(v.abs() <= BLOW_UP_BOUND)) {
        return Err(Error::Integration {
            time: t,
            reason: format!("state left the bound {BLOW_UP_BOUND:e} (value {v})"),
        });
    }
    Ok(())
}

/// Classical RK4 along `step_grid(u, cfg)` starting from `x0` at time 0.
pub fn integrate<S: SwitchedSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    u: &InputSignal,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    u.validate_letters(sys.num_letters())?;
    let d = sys.state_dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: d,
            found: x0.len(),
        });
    }
    check_state(0.0, x0)?;
    let grid = step_grid(u, cfg);
    let p = sys.output_dim();
    let mut times = Vec::with_capacity(grid.len() + 1);
    let mut states = Vec::with_capacity(grid.len() + 1);
    let mut outputs = Vec::with_capacity(grid.len() + 1);
    let mut y = vec![0.0; p];
    sys.output(x0, &mut y);
    times.push(0.0);
    states.push(x0.to_vec());
    outputs.push(y.clone());

    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    for Step { t0, t1, letter } in grid {
        let h = t1 - t0;
        sys.field(letter, &x, &mut k1);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        sys.field(letter, &tmp, &mut k2);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        sys.field(letter, &tmp, &mut k3);
        for i in 0..d {
            tmp[i] = x[i] + h * k3[i];
        }
        sys.field(letter, &tmp, &mut k4);
        for i in 0..d {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_state(t1, &x)?;
        sys.output(&x, &mut y);
        times.push(t1);
        states.push(x.clone());
        outputs.push(y.clone());
    }
    Ok(Trajectory {
        times,
        states,
        outputs,
    })
}
