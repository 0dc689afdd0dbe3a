use super::{MultiPoly, PolyVectorField};
use crate::coeff::Coeff;

/// Flat double-precision form of a polynomial for repeated evaluation.
///
/// Term order follows the canonical order of the source polynomial, so the
/// floating-point result is a deterministic function of the polynomial.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    coeffs: Vec<f64>,
    // (variable, exponent) factors of term k live at factors[offsets[k]..offsets[k+1]]
    factors: Vec<(u32, u32)>,
    offsets: Vec<u32>,
}

impl CompiledPoly {
    pub fn new<C: Coeff>(poly: &MultiPoly<C>) -> Self {
        let mut coeffs = Vec::with_capacity(poly.num_terms());
        let mut factors = Vec::new();
        let mut offsets = vec![0u32];
        for (m, c) in poly.terms() {
            coeffs.push(c.to_f64());
            for (i, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    factors.push((i as u32, e));
                }
            }
            offsets.push(factors.len() as u32);
        }
        CompiledPoly {
            coeffs,
            factors,
            offsets,
        }
    }

    /// Evaluates at `point`; the caller guarantees the point is long enough.
    #[inline]
    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            let (lo, hi) = (self.offsets[k] as usize, self.offsets[k + 1] as usize);
            let mut t = c;
            for &(v, e) in &self.factors[lo..hi] {
                let x = point[v as usize];
                t *= if e == 1 { x } else { x.powi(e as i32) };
            }
            acc += t;
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct CompiledField {
    components: Vec<CompiledPoly>,
}

impl CompiledField {
    pub fn new<C: Coeff>(field: &PolyVectorField<C>) -> Self {
        CompiledField {
            components: field.components().iter().map(CompiledPoly::new).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn eval_into(&self, point: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(point);
        }
    }
}
