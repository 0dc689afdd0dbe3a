use std::cmp::Ordering;
use std::fmt;

/// Exponent vector of a monomial, ordered graded-lexicographically:
/// total degree first, then lexicographic with `X1 > X2 > ...`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Box<[u32]>);

impl Monomial {
    pub fn one(num_vars: usize) -> Self {
        Monomial(vec![0; num_vars].into_boxed_slice())
    }

    pub fn var(num_vars: usize, index: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[index] = 1;
        Monomial(e.into_boxed_slice())
    }

    pub fn from_exponents(exponents: Vec<u32>) -> Self {
        Monomial(exponents.into_boxed_slice())
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn num_vars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Lowers the exponent of `var` by one; `None` if it is already zero.
    pub(crate) fn lowered(&self, var: usize) -> Option<Monomial> {
        if self.0[var] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[var] -= 1;
        Some(Monomial(e))
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            write!(f, "X{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(e: &[u32]) -> Monomial {
        Monomial::from_exponents(e.to_vec())
    }

    #[test]
    fn graded_lex_order() {
        // degree dominates
        assert!(m(&[0, 0, 2]) > m(&[1, 0, 0]));
        // X1 > X2 > X3 within a degree
        assert!(m(&[1, 0, 0]) > m(&[0, 1, 0]));
        assert!(m(&[1, 1, 0]) > m(&[1, 0, 1]));
        assert!(m(&[2, 0, 0]) > m(&[1, 1, 0]));
        assert!(m(&[0, 0, 0]) < m(&[0, 0, 1]));
    }

    #[test]
    fn display() {
        assert_eq!(m(&[2, 1, 0]).to_string(), "X1^2*X2");
        assert_eq!(m(&[0, 0]).to_string(), "1");
    }
}
