//! Sparse multivariate polynomials and polynomial vector fields.

mod compiled;
mod field;
mod monomial;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

pub use compiled::{CompiledField, CompiledPoly};
pub use field::PolyVectorField;
pub use monomial::Monomial;

use crate::coeff::Coeff;
use crate::error::{Error, Result};

/// Image of a variable under [`MultiPoly::substitute`].
#[derive(Debug, Clone, PartialEq)]
pub enum VarImage<C> {
    Var(usize),
    Const(C),
}

/// A polynomial in `num_vars` variables with coefficients in `C`.
///
/// Terms are kept in canonical form: no zero coefficients, all exponent
/// vectors of length `num_vars`, iteration in graded-lex order.
#[derive(Clone, PartialEq)]
pub struct MultiPoly<C> {
    num_vars: usize,
    terms: BTreeMap<Monomial, C>,
}

fn push_term<C: Coeff>(terms: &mut BTreeMap<Monomial, C>, mono: Monomial, coeff: C) {
    if coeff.is_zero() {
        return;
    }
    match terms.entry(mono) {
        std::collections::btree_map::Entry::Vacant(slot) => {
            slot.insert(coeff);
        }
        std::collections::btree_map::Entry::Occupied(mut slot) => {
            let sum = slot.get().clone() + coeff;
            if sum.is_zero() {
                slot.remove();
            } else {
                *slot.get_mut() = sum;
            }
        }
    }
}

impl<C: Coeff> MultiPoly<C> {
    pub fn zero(num_vars: usize) -> Self {
        MultiPoly {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, value: C) -> Self {
        let mut p = Self::zero(num_vars);
        push_term(&mut p.terms, Monomial::one(num_vars), value);
        p
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, C::one())
    }

    /// The coordinate polynomial `X_{index+1}`.
    pub fn var(num_vars: usize, index: usize) -> Result<Self> {
        if index >= num_vars {
            return Err(Error::IndexOutOfRange {
                context: "polynomial variables",
                index,
                len: num_vars,
            });
        }
        let mut p = Self::zero(num_vars);
        p.terms.insert(Monomial::var(num_vars, index), C::one());
        Ok(p)
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// repeated monomials.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C)>,
    {
        let mut p = Self::zero(num_vars);
        for (exps, c) in terms {
            if exps.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    context: "monomial exponents",
                    expected: num_vars,
                    found: exps.len(),
                });
            }
            push_term(&mut p.terms, Monomial::from_exponents(exps), c);
        }
        Ok(p)
    }

    /// Univariate polynomial `sum_k coeffs[k] * X1^k`.
    pub fn univariate(coeffs: &[C]) -> Self {
        let mut p = Self::zero(1);
        for (k, c) in coeffs.iter().enumerate() {
            push_term(&mut p.terms, Monomial::from_exponents(vec![k as u32]), c.clone());
        }
        p
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    pub fn constant_term(&self) -> C {
        self.terms
            .get(&Monomial::one(self.num_vars))
            .cloned()
            .unwrap_or_else(C::zero)
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    /// Variables that occur with a positive exponent.
    pub fn support(&self) -> Vec<usize> {
        let mut used = vec![false; self.num_vars];
        for m in self.terms.keys() {
            for (i, &e) in m.exponents().iter().enumerate() {
                used[i] |= e > 0;
            }
        }
        used.iter()
            .enumerate()
            .filter_map(|(i, &u)| u.then_some(i))
            .collect()
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch {
                context: "polynomial variables",
                expected: self.num_vars,
                found: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            push_term(&mut out.terms, m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            push_term(&mut out.terms, m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = Self::zero(self.num_vars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                push_term(&mut out.terms, m1.mul(m2), c1.clone() * c2.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: &C) -> Self {
        let mut out = Self::zero(self.num_vars);
        if factor.is_zero() {
            return out;
        }
        for (m, c) in &self.terms {
            push_term(&mut out.terms, m.clone(), c.clone() * factor.clone());
        }
        out
    }

    pub fn pow(&self, exponent: u32) -> Self {
        let mut result = Self::one(self.num_vars);
        for _ in 0..exponent {
            result = &result * self;
        }
        result
    }

    /// Formal partial derivative with respect to `X_{var+1}`.
    pub fn partial(&self, var: usize) -> Result<Self> {
        if var >= self.num_vars {
            return Err(Error::IndexOutOfRange {
                context: "polynomial variables",
                index: var,
                len: self.num_vars,
            });
        }
        let mut out = Self::zero(self.num_vars);
        for (m, c) in &self.terms {
            let e = m.exponents()[var];
            if let Some(lowered) = m.lowered(var) {
                push_term(&mut out.terms, lowered, c.clone() * C::from_i64(e as i64));
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "evaluation point",
                expected: self.num_vars,
                found: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| c.to_f64() * m.eval(point))
            .sum())
    }

    /// Evaluation in the coefficient ring itself (exact for rationals).
    pub fn evaluate_exact(&self, point: &[C]) -> Result<C> {
        if point.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "evaluation point",
                expected: self.num_vars,
                found: point.len(),
            });
        }
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (&e, x) in m.exponents().iter().zip(point) {
                for _ in 0..e {
                    t = t * x.clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Gradient at `point`, evaluated in double precision.
    pub fn gradient_at(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "evaluation point",
                expected: self.num_vars,
                found: point.len(),
            });
        }
        let n = self.num_vars;
        let mut grad = vec![0.0; n];
        let mut powers = vec![1.0; n];
        let mut suffix = vec![1.0; n + 1];
        for (m, c) in &self.terms {
            let c = c.to_f64();
            let exps = m.exponents();
            for k in 0..n {
                powers[k] = if exps[k] == 0 { 1.0 } else { point[k].powi(exps[k] as i32) };
            }
            for k in (0..n).rev() {
                suffix[k] = suffix[k + 1] * powers[k];
            }
            let mut prefix = 1.0;
            for i in 0..n {
                let e = exps[i];
                if e > 0 {
                    let d = e as f64 * if e == 1 { 1.0 } else { point[i].powi(e as i32 - 1) };
                    grad[i] += c * d * prefix * suffix[i + 1];
                }
                prefix *= powers[i];
            }
        }
        Ok(grad)
    }

    /// Replaces every variable by its image, producing a polynomial in
    /// `new_num_vars` variables. Several variables may map to the same target.
    pub fn substitute(&self, images: &[VarImage<C>], new_num_vars: usize) -> Result<Self> {
        if images.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "substitution images",
                expected: self.num_vars,
                found: images.len(),
            });
        }
        for img in images {
            if let VarImage::Var(t) = img {
                if *t >= new_num_vars {
                    return Err(Error::IndexOutOfRange {
                        context: "substitution target",
                        index: *t,
                        len: new_num_vars,
                    });
                }
            }
        }
        let mut out = Self::zero(new_num_vars);
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; new_num_vars];
            let mut coeff = c.clone();
            for (&e, img) in m.exponents().iter().zip(images) {
                if e == 0 {
                    continue;
                }
                match img {
                    VarImage::Var(t) => exps[*t] += e,
                    VarImage::Const(v) => {
                        for _ in 0..e {
                            coeff = coeff * v.clone();
                        }
                    }
                }
            }
            push_term(&mut out.terms, Monomial::from_exponents(exps), coeff);
        }
        Ok(out)
    }

    /// Evaluates a univariate polynomial at the variable `X_{var+1}` of an
    /// `num_vars`-variable ring, i.e. returns `self(X_{var+1})`.
    pub fn compose_univariate(&self, num_vars: usize, var: usize) -> Result<Self> {
        if self.num_vars != 1 {
            return Err(Error::DimensionMismatch {
                context: "univariate polynomial",
                expected: 1,
                found: self.num_vars,
            });
        }
        self.substitute(&[VarImage::Var(var)], num_vars)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> MultiPoly<D> {
        let mut out = MultiPoly::zero(self.num_vars);
        for (m, c) in &self.terms {
            push_term(&mut out.terms, m.clone(), f(c));
        }
        out
    }

    pub fn to_float(&self) -> MultiPoly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly::new(self)
    }

    /// Parses the textual form produced by `Display` (and, more generally,
    /// sums/products/powers of `X<i>` and numeric literals with parentheses).
    pub fn parse(text: &str, num_vars: usize) -> Result<Self> {
        parse::parse_poly(text, num_vars)
    }
}

impl<C: Coeff> Hash for MultiPoly<C> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.num_vars.hash(state);
        for (m, c) in &self.terms {
            m.hash(state);
            c.hash_coeff(state);
        }
    }
}

impl<C: Coeff> Eq for MultiPoly<C> {}

impl<C: Coeff> fmt::Display for MultiPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = c.abs();
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

impl<C: Coeff> fmt::Debug for MultiPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly[{}]({})", self.num_vars, self)
    }
}

// Operator forms panic on mismatched variable counts; use the `try_*`
// methods when the operands come from user input.
impl<C: Coeff> Add for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn add(self, rhs: Self) -> MultiPoly<C> {
        self.try_add(rhs).expect("polynomial addition")
    }
}

impl<C: Coeff> Sub for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn sub(self, rhs: Self) -> MultiPoly<C> {
        self.try_sub(rhs).expect("polynomial subtraction")
    }
}

impl<C: Coeff> Mul for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn mul(self, rhs: Self) -> MultiPoly<C> {
        self.try_mul(rhs).expect("polynomial multiplication")
    }
}

impl<C: Coeff> Neg for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn neg(self) -> MultiPoly<C> {
        self.scale(&-C::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Rational;

    type Q = MultiPoly<Rational>;

    fn p(text: &str, n: usize) -> Q {
        Q::parse(text, n).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(&p("X1 + 1", 1) + &p("-X1", 1), p("1", 1));
        let q = p("3*X1*X2 - X2^2", 2);
        assert_eq!(&q + &Q::zero(2), q);
        assert_eq!(&p("2*X1*X2", 2) + &p("3*X1*X2", 2), p("5*X1*X2", 2));
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        assert!(p("X1", 1).try_add(&p("X1", 2)).is_err());
        assert!(p("X1", 1).try_mul(&p("X2", 2)).is_err());
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&p("X1 + X2", 2) * &p("X1 - X2", 2), p("X1^2 - X2^2", 2));
        let q = p("X1^3 - 7/2*X2", 2);
        assert_eq!(&q * &Q::one(2), q);
        assert_eq!(p("X1 + 1", 1).pow(2), p("X1^2 + 2*X1 + 1", 1));
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(p("X1*X2 + 1", 2).evaluate(&[2.0, 3.0]).unwrap(), 7.0);
        let q = p("4*X1^2*X2 - 3", 2);
        assert_eq!(q.evaluate(&[0.0, 0.0]).unwrap(), -3.0);
        assert_eq!(p("1 - X1^2", 1).evaluate(&[0.5]).unwrap(), 0.75);
        assert!(q.evaluate(&[1.0]).is_err());
    }

    #[test]
    fn partial_examples() {
        assert_eq!(p("X1^2*X2", 2).partial(0).unwrap(), p("2*X1*X2", 2));
        assert!(p("X1^2", 2).partial(1).unwrap().is_zero());
        assert_eq!(p("X1 + X1*X2", 2).partial(0).unwrap(), p("1 + X2", 2));
        assert!(p("X1", 2).partial(2).is_err());
    }

    #[test]
    fn rendering_is_graded_lex_descending() {
        let q = p("1 - X3 + 2*X1^2*X2", 3);
        assert_eq!(q.to_string(), "2*X1^2*X2 - X3 + 1");
        assert_eq!(p("-X1 + 1/2", 1).to_string(), "-X1 + 1/2");
        assert_eq!(Q::zero(3).to_string(), "0");
        let f = MultiPoly::<f64>::parse("0.5*X1 - 2", 1).unwrap();
        assert_eq!(f.to_string(), "0.5*X1 - 2");
    }

    #[test]
    fn substitute_merges_and_fixes() {
        let q = p("X1*X2 + X3^2", 3);
        let r = q
            .substitute(
                &[VarImage::Var(0), VarImage::Var(0), VarImage::Const(Rational::from_i64(3))],
                1,
            )
            .unwrap();
        assert_eq!(r, p("X1^2 + 9", 1));
    }

    #[test]
    fn compose_univariate_characteristic() {
        let tanh_char = p("1 - X1^2", 1);
        assert_eq!(tanh_char.compose_univariate(3, 2).unwrap(), p("1 - X3^2", 3));
    }

    #[test]
    fn gradient_matches_partials() {
        let q = p("X1^3*X2 - 2*X2^2 + X1", 2);
        let pt = [0.7, -1.3];
        let g = q.gradient_at(&pt).unwrap();
        for (i, gi) in g.iter().enumerate() {
            let d = q.partial(i).unwrap().evaluate(&pt).unwrap();
            assert!((gi - d).abs() < 1e-14);
        }
    }
}
