use std::fmt;

use super::MultiPoly;
use crate::coeff::Coeff;
use crate::error::{Error, Result};

/// A polynomial vector field `sum_i P_i d/dX_i`.
///
/// Components all live in the same `num_vars`-variable ring. When there are
/// fewer components than variables, the trailing variables act as parameters
/// that the field does not move.
#[derive(Clone, PartialEq)]
pub struct PolyVectorField<C: Coeff> {
    num_vars: usize,
    components: Vec<MultiPoly<C>>,
}

impl<C: Coeff> Eq for PolyVectorField<C> {}

impl<C: Coeff> std::hash::Hash for PolyVectorField<C> {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.num_vars.hash(state);
        self.components.hash(state);
    }
}

impl<C: Coeff> PolyVectorField<C> {
    pub fn new(num_vars: usize, components: Vec<MultiPoly<C>>) -> Result<Self> {
        if components.len() > num_vars {
            return Err(Error::DimensionMismatch {
                context: "vector field components",
                expected: num_vars,
                found: components.len(),
            });
        }
        for c in &components {
            if c.num_vars() != num_vars {
                return Err(Error::DimensionMismatch {
                    context: "vector field component variables",
                    expected: num_vars,
                    found: c.num_vars(),
                });
            }
        }
        Ok(PolyVectorField {
            num_vars,
            components,
        })
    }

    pub fn zero(dim: usize) -> Self {
        PolyVectorField {
            num_vars: dim,
            components: vec![MultiPoly::zero(dim); dim],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MultiPoly<C>] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(MultiPoly::is_zero)
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.evaluate(point)).collect()
    }

    /// `L_f h = sum_i f_i * dh/dX_i`.
    pub fn lie_derivative(&self, h: &MultiPoly<C>) -> Result<MultiPoly<C>> {
        if h.num_vars() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "Lie derivative operand",
                expected: self.num_vars,
                found: h.num_vars(),
            });
        }
        let mut acc = MultiPoly::zero(self.num_vars);
        for (i, fi) in self.components.iter().enumerate() {
            if fi.is_zero() {
                continue;
            }
            let dh = h.partial(i)?;
            if dh.is_zero() {
                continue;
            }
            acc = &acc + &(fi * &dh);
        }
        Ok(acc)
    }

    /// `[f, g]_i = L_f g_i - L_g f_i`.
    pub fn lie_bracket(&self, other: &Self) -> Result<Self> {
        if self.num_vars != other.num_vars || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "Lie bracket operands",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(fi, gi)| Ok(&self.lie_derivative(gi)? - &other.lie_derivative(fi)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(PolyVectorField {
            num_vars: self.num_vars,
            components,
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.num_vars != other.num_vars || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                context: "vector field sum",
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a + b)
            .collect();
        Ok(PolyVectorField {
            num_vars: self.num_vars,
            components,
        })
    }

    pub fn total_terms(&self) -> usize {
        self.components.iter().map(MultiPoly::num_terms).sum()
    }

    pub fn to_float(&self) -> PolyVectorField<f64> {
        PolyVectorField {
            num_vars: self.num_vars,
            components: self.components.iter().map(MultiPoly::to_float).collect(),
        }
    }
}

impl<C: Coeff> fmt::Debug for PolyVectorField<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.components.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Rational;

    fn field(parts: &[&str], n: usize) -> PolyVectorField<Rational> {
        PolyVectorField::new(
            n,
            parts.iter().map(|s| MultiPoly::parse(s, n).unwrap()).collect(),
        )
        .unwrap()
    }

    fn poly(s: &str, n: usize) -> MultiPoly<Rational> {
        MultiPoly::parse(s, n).unwrap()
    }

    #[test]
    fn lie_derivative_examples() {
        let rot = field(&["X2", "-X1"], 2);
        assert!(rot.lie_derivative(&poly("X1^2 + X2^2", 2)).unwrap().is_zero());
        let e1 = field(&["1", "0"], 2);
        assert_eq!(e1.lie_derivative(&poly("X1", 2)).unwrap(), poly("1", 2));
        assert!(e1.lie_derivative(&poly("X1", 3)).is_err());
    }

    #[test]
    fn lie_bracket_examples() {
        let f = field(&["1", "0"], 2);
        let g = field(&["X1", "0"], 2);
        assert_eq!(f.lie_bracket(&g).unwrap(), field(&["1", "0"], 2));
        assert!(f.lie_bracket(&f).unwrap().is_zero());
        assert!(f.lie_bracket(&field(&["1"], 2)).is_err());
    }

    #[test]
    fn parameters_are_not_moved() {
        // one component over two variables: X2 is a parameter
        let f = field(&["X2"], 2);
        assert_eq!(f.lie_derivative(&poly("X1^2*X2", 2)).unwrap(), poly("2*X1*X2^2", 2));
    }

    #[test]
    fn rejects_inconsistent_components() {
        let comps = vec![poly("X1", 1), poly("X2", 2)];
        assert!(PolyVectorField::new(2, comps).is_err());
        assert!(PolyVectorField::new(1, vec![poly("X1", 1), poly("1", 1)]).is_err());
    }
}
