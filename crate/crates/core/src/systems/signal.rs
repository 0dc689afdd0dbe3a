use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// Piecewise-constant, eventually constant input over letter indices.
///
/// Segment `i` covers `[T_{i-1}, T_i)`; after the last breakpoint the tail
/// letter applies forever.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSignal {
    segments: Vec<(f64, usize)>,
    tail: usize,
}

impl InputSignal {
    pub fn new(segments: Vec<(f64, usize)>, tail: usize) -> Result<Self> {
        for (i, &(d, _)) in segments.iter().enumerate() {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::spec(
                    format!("segments[{i}]"),
                    format!("duration must be positive and finite, got {d}"),
                ));
            }
        }
        Ok(InputSignal { segments, tail })
    }

    pub fn constant(letter: usize) -> Self {
        InputSignal {
            segments: Vec::new(),
            tail: letter,
        }
    }

    pub fn segments(&self) -> &[(f64, usize)] {
        &self.segments
    }

    pub fn tail(&self) -> usize {
        self.tail
    }

    pub fn validate_letters(&self, num_letters: usize) -> Result<()> {
        for (i, &(_, r)) in self.segments.iter().enumerate() {
            if r >= num_letters {
                return Err(Error::spec(
                    format!("segments[{i}]"),
                    format!("letter index {r} outside 0..{num_letters}"),
                ));
            }
        }
        if self.tail >= num_letters {
            return Err(Error::spec(
                "tail",
                format!("letter index {} outside 0..{num_letters}", self.tail),
            ));
        }
        Ok(())
    }

    /// Breakpoints `T_1 < T_2 < ...`, one per segment.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|&(d, _)| {
                t += d;
                t
            })
            .collect()
    }

    pub fn input_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("input queried at negative time {t}")));
        }
        let mut end = 0.0;
        for &(d, r) in &self.segments {
            end += d;
            if t < end {
                return Ok(r);
            }
        }
        Ok(self.tail)
    }

    /// Constant pieces `(start, end, letter)` covering `[0, horizon]`.
    pub fn pieces(&self, horizon: f64) -> Vec<(f64, f64, usize)> {
        let mut out = Vec::new();
        let mut start = 0.0;
        for &(d, r) in &self.segments {
            if start >= horizon {
                return out;
            }
            let end = (start + d).min(horizon);
            out.push((start, end, r));
            start += d;
        }
        if start < horizon {
            out.push((start, horizon, self.tail));
        }
        out
    }
}

/// Sampled solution on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// CSV with header `t,x1..xd,y1..yp`.
    pub fn to_csv(&self) -> String {
        let d = self.states.first().map_or(0, Vec::len);
        let p = self.outputs.first().map_or(0, Vec::len);
        let mut s = String::from("t");
        for i in 1..=d {
            let _ = write!(s, ",x{i}");
        }
        for k in 1..=p {
            let _ = write!(s, ",y{k}");
        }
        s.push('\n');
        for ((t, x), y) in self.times.iter().zip(&self.states).zip(&self.outputs) {
            let _ = write!(s, "{t}");
            for v in x.iter().chain(y) {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}
