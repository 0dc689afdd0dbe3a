use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::systems::{NumericLstm, OdeLstm};

/// Explicit Euler map `s ↦ s + δ·f_α(s)` of an ODE-LSTM: a residual LSTM
/// cell when `δ = 1`.
#[derive(Debug, Clone)]
pub struct EulerStepper<C: Coeff> {
    net: NumericLstm<C>,
    delta: f64,
}

pub fn euler_discretize<C: Coeff>(lstm: &OdeLstm<C>, delta: f64) -> Result<EulerStepper<C>> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    Ok(EulerStepper {
        net: lstm.numeric(),
        delta,
    })
}

impl<C: Coeff> EulerStepper<C> {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn state_dim(&self) -> usize {
        2 * self.net.n
    }

    fn apply(&self, drives: &[Vec<f64>], s: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; s.len()];
        self.net.field_with_drives(drives, s, &mut f);
        s.iter().zip(&f).map(|(s, f)| s + self.delta * f).collect()
    }

    /// One step with the alphabet letter `letter` as input.
    pub fn step(&self, s: &[f64], letter: usize) -> Vec<f64> {
        self.apply(&self.net.drives[letter], s)
    }

    /// One step with an arbitrary input vector.
    pub fn step_input(&self, s: &[f64], input: &[f64]) -> Vec<f64> {
        self.apply(&self.net.drives_for(input), s)
    }

    pub fn output(&self, s: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.net.c.nrows()];
        self.net.output(s, &mut y);
        y
    }

    /// States `s_0, s_1, ..., s_L` visited under the letter sequence.
    pub fn trace(&self, s0: &[f64], letters: &[usize]) -> Result<Vec<Vec<f64>>> {
        if s0.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "discrete initial state",
                expected: self.state_dim(),
                found: s0.len(),
            });
        }
        let k = self.net.drives.len();
        if let Some(&bad) = letters.iter().find(|&&r| r >= k) {
            return Err(Error::IndexOutOfRange {
                context: "letter",
                index: bad,
                len: k,
            });
        }
        let mut out = vec![s0.to_vec()];
        for &r in letters {
            let next = self.step(out.last().expect("non-empty trace"), r);
            out.push(next);
        }
        Ok(out)
    }
}
