use std::fmt::Write as _;

use serde::Serialize;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::polynomial::{CompiledField, CompiledPoly, MultiPoly, PolyVectorField};

/// A state variable of a polynomial system with its human-readable label and
/// the expression that defines it in terms of the source network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Variable {
    pub label: String,
    pub definition: String,
}

impl Variable {
    pub fn new(label: impl Into<String>, definition: impl Into<String>) -> Self {
        Variable {
            label: label.into(),
            definition: definition.into(),
        }
    }
}

/// `ẋ = P_α(x)`, `y = h(x)`, `x(0) = v0`, one field per input letter.
///
/// `v0` is held in double precision. Entries computed by evaluating a
/// transcendental activation are flagged in `v0_approximate`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem<C: Coeff> {
    dim: usize,
    fields: Vec<PolyVectorField<C>>,
    output: Vec<MultiPoly<C>>,
    v0: Vec<f64>,
    v0_approximate: Vec<bool>,
    variables: Vec<Variable>,
}

impl<C: Coeff> PolySystem<C> {
    pub fn new(
        fields: Vec<PolyVectorField<C>>,
        output: Vec<MultiPoly<C>>,
        v0: Vec<f64>,
        v0_approximate: Vec<bool>,
        variables: Vec<Variable>,
    ) -> Result<Self> {
        let dim = v0.len();
        if fields.is_empty() {
            return Err(Error::spec("fields", "at least one letter field is required"));
        }
        for (r, f) in fields.iter().enumerate() {
            if f.dim() != dim || f.num_vars() != dim {
                return Err(Error::spec(
                    format!("fields[{r}]"),
                    format!("expected {dim} components over {dim} variables, got {} over {}", f.dim(), f.num_vars()),
                ));
            }
        }
        for (k, h) in output.iter().enumerate() {
            if h.num_vars() != dim {
                return Err(Error::spec(
                    format!("output[{k}]"),
                    format!("expected {dim} variables, got {}", h.num_vars()),
                ));
            }
        }
        if v0_approximate.len() != dim {
            return Err(Error::spec("v0_approximate", format!("expected length {dim}")));
        }
        if variables.len() != dim {
            return Err(Error::spec(
                "variables",
                format!("expected {dim} entries, got {}", variables.len()),
            ));
        }
        if let Some(i) = v0.iter().position(|v| !v.is_finite()) {
            return Err(Error::spec(format!("v0[{i}]"), "initial state must be finite"));
        }
        Ok(PolySystem {
            dim,
            fields,
            output,
            v0,
            v0_approximate,
            variables,
        })
    }

    /// Convenience constructor with generic labels `X1..Xd` and an exact `v0`.
    pub fn with_default_labels(
        fields: Vec<PolyVectorField<C>>,
        output: Vec<MultiPoly<C>>,
        v0: Vec<f64>,
    ) -> Result<Self> {
        let d = v0.len();
        let variables = (1..=d).map(|i| Variable::new(format!("X{i}"), format!("X{i}"))).collect();
        Self::new(fields, output, v0, vec![false; d], variables)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_letters(&self) -> usize {
        self.fields.len()
    }

    pub fn output_dim(&self) -> usize {
        self.output.len()
    }

    pub fn fields(&self) -> &[PolyVectorField<C>] {
        &self.fields
    }

    pub fn field(&self, letter: usize) -> &PolyVectorField<C> {
        &self.fields[letter]
    }

    pub fn output(&self) -> &[MultiPoly<C>] {
        &self.output
    }

    pub fn v0(&self) -> &[f64] {
        &self.v0
    }

    pub fn v0_approximate(&self) -> &[bool] {
        &self.v0_approximate
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn with_v0(mut self, v0: Vec<f64>) -> Result<Self> {
        if v0.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "initial state",
                expected: self.dim,
                found: v0.len(),
            });
        }
        self.v0 = v0;
        Ok(self)
    }

    pub fn to_float(&self) -> PolySystem<f64> {
        PolySystem {
            dim: self.dim,
            fields: self.fields.iter().map(PolyVectorField::to_float).collect(),
            output: self.output.iter().map(MultiPoly::to_float).collect(),
            v0: self.v0.clone(),
            v0_approximate: self.v0_approximate.clone(),
            variables: self.variables.clone(),
        }
    }

    pub fn compile(&self) -> CompiledSystem {
        CompiledSystem {
            fields: self.fields.iter().map(CompiledField::new).collect(),
            output: self.output.iter().map(CompiledPoly::new).collect(),
        }
    }

    pub fn max_degree(&self) -> u32 {
        self.fields
            .iter()
            .flat_map(|f| f.components().iter())
            .filter_map(MultiPoly::degree)
            .max()
            .unwrap_or(0)
    }

    /// Human-readable rendering: variable table, one block per letter, the
    /// output map and the initial state.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "polynomial system: {} variables, {} letters", self.dim, self.num_letters());
        let _ = writeln!(s, "variables:");
        for (i, v) in self.variables.iter().enumerate() {
            let _ = writeln!(s, "  X{} = {} := {}", i + 1, v.label, v.definition);
        }
        for (r, f) in self.fields.iter().enumerate() {
            let _ = writeln!(s, "letter {r}:");
            for (i, c) in f.components().iter().enumerate() {
                let _ = writeln!(s, "  dX{}/dt = {}", i + 1, c);
            }
        }
        let _ = writeln!(s, "output:");
        for (k, h) in self.output.iter().enumerate() {
            let _ = writeln!(s, "  y{} = {}", k + 1, h);
        }
        let _ = writeln!(s, "v0:");
        for (i, (v, approx)) in self.v0.iter().zip(&self.v0_approximate).enumerate() {
            let mark = if *approx { " (numeric)" } else { "" };
            let _ = writeln!(s, "  X{} = {}{}", i + 1, v, mark);
        }
        s
    }
}

/// Double-precision evaluation form of a [`PolySystem`].
#[derive(Debug, Clone)]
pub struct CompiledSystem {
    fields: Vec<CompiledField>,
    output: Vec<CompiledPoly>,
}

impl CompiledSystem {
    pub fn field_into(&self, letter: usize, x: &[f64], out: &mut [f64]) {
        self.fields[letter].eval_into(x, out);
    }

    pub fn output_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, h) in out.iter_mut().zip(&self.output) {
            *o = h.eval(x);
        }
    }

    pub fn output_dim(&self) -> usize {
        self.output.len()
    }
}
