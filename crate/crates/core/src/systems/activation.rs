//! Activations `σ` satisfying `σ' = P(σ)` for a univariate polynomial `P`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::polynomial::{CompiledPoly, MultiPoly};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Tanh,
    Sigmoid,
    Identity,
    Constant(f64),
    Function(ScalarFn),
    Table(Arc<OdeTable>),
}

/// An activation function together with its characteristic polynomial `P`
/// and an anchor point `(x, σ(x))`.
///
/// Two activations are equal when their names, characteristic polynomials
/// and anchors agree; the numeric evaluator does not take part.
#[derive(Clone)]
pub struct Activation<C> {
    name: String,
    characteristic: MultiPoly<C>,
    compiled: CompiledPoly,
    anchor: (C, C),
    eval: Evaluator,
}

impl<C: Coeff> PartialEq for Activation<C> {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.characteristic == other.characteristic
            && self.anchor == other.anchor
    }
}

impl<C: Coeff> fmt::Debug for Activation<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Activation")
            .field("name", &self.name)
            .field("characteristic", &self.characteristic.to_string())
            .field("anchor", &(self.anchor.0.to_string(), self.anchor.1.to_string()))
            .finish()
    }
}

pub const BUILTIN_NAMES: [&str; 5] = ["tanh", "sigmoid", "identity", "const0", "const1"];

impl<C: Coeff> Activation<C> {
    fn build(name: &str, coeffs: &[i64], anchor: (C, C), eval: Evaluator) -> Self {
        let c: Vec<C> = coeffs.iter().map(|&v| C::from_i64(v)).collect();
        let characteristic = MultiPoly::univariate(&c);
        Activation {
            name: name.to_owned(),
            compiled: characteristic.compile(),
            characteristic,
            anchor,
            eval,
        }
    }

    /// `tanh`, with `P(X) = 1 - X^2` and `tanh(0) = 0`.
    pub fn tanh() -> Self {
        Self::build("tanh", &[1, 0, -1], (C::zero(), C::zero()), Evaluator::Tanh)
    }

    /// Logistic sigmoid, with `P(X) = X - X^2` and `S(0) = 1/2`.
    pub fn sigmoid() -> Self {
        let half = C::parse_literal("1/2").expect("literal");
        Self::build("sigmoid", &[0, 1, -1], (C::zero(), half), Evaluator::Sigmoid)
    }

    pub fn identity() -> Self {
        Self::build("identity", &[1], (C::zero(), C::zero()), Evaluator::Identity)
    }

    pub fn const0() -> Self {
        Self::build("const0", &[], (C::zero(), C::zero()), Evaluator::Constant(0.0))
    }

    pub fn const1() -> Self {
        Self::build("const1", &[], (C::zero(), C::one()), Evaluator::Constant(1.0))
    }

    pub fn builtin(name: &str) -> Option<Self> {
        Some(match name {
            "tanh" => Self::tanh(),
            "sigmoid" => Self::sigmoid(),
            "identity" => Self::identity(),
            "const0" => Self::const0(),
            "const1" => Self::const1(),
            _ => return None,
        })
    }

    /// Custom activation with a caller-supplied evaluator. The evaluator must
    /// pass [`Activation::check_consistency`]; Lipschitz continuity is taken
    /// on trust but has to be declared.
    pub fn custom_with_fn(
        name: &str,
        characteristic: MultiPoly<C>,
        anchor: (C, C),
        lipschitz: bool,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::custom(name, characteristic, anchor, lipschitz, Evaluator::Function(Arc::new(f)))
    }

    /// Custom activation evaluated by integrating `σ' = P(σ)` from the anchor.
    pub fn custom_from_characteristic(
        name: &str,
        characteristic: MultiPoly<C>,
        anchor: (C, C),
        lipschitz: bool,
    ) -> Result<Self> {
        if characteristic.num_vars() != 1 {
            return Err(Error::spec(name, "characteristic polynomial must be univariate"));
        }
        let table = OdeTable::new(
            characteristic.compile(),
            anchor.0.to_f64(),
            anchor.1.to_f64(),
        );
        Self::custom(name, characteristic, anchor, lipschitz, Evaluator::Table(Arc::new(table)))
    }

    fn custom(
        name: &str,
        characteristic: MultiPoly<C>,
        anchor: (C, C),
        lipschitz: bool,
        eval: Evaluator,
    ) -> Result<Self> {
        if BUILTIN_NAMES.contains(&name) {
            return Err(Error::spec(name, "custom activation shadows a built-in name"));
        }
        if !lipschitz {
            return Err(Error::spec(
                name,
                "custom activations must be declared globally Lipschitz",
            ));
        }
        if characteristic.num_vars() != 1 {
            return Err(Error::spec(name, "characteristic polynomial must be univariate"));
        }
        let act = Activation {
            name: name.to_owned(),
            compiled: characteristic.compile(),
            characteristic,
            anchor,
            eval,
        };
        let anchor_gap = (act.value(act.anchor.0.to_f64()) - act.anchor.1.to_f64()).abs();
        if !(anchor_gap <= 1e-9) {
            return Err(Error::spec(name, format!("evaluator misses the anchor by {anchor_gap:e}")));
        }
        act.check_consistency(&ConsistencyCheck::default())?;
        Ok(act)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn characteristic(&self) -> &MultiPoly<C> {
        &self.characteristic
    }

    pub fn anchor(&self) -> &(C, C) {
        &self.anchor
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self.eval, Evaluator::Function(_) | Evaluator::Table(_))
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match &self.eval {
            Evaluator::Tanh => x.tanh(),
            Evaluator::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Evaluator::Identity => x,
            Evaluator::Constant(c) => *c,
            Evaluator::Function(f) => f(x),
            Evaluator::Table(t) => t.value(x),
        }
    }

    /// `P(σ(x))`, the derivative predicted by the characteristic polynomial.
    pub fn derivative(&self, x: f64) -> f64 {
        self.characteristic_at(self.value(x))
    }

    #[inline]
    pub fn characteristic_at(&self, sigma: f64) -> f64 {
        self.compiled.eval(&[sigma])
    }

    /// Exact constant value when `P = 0`, i.e. `σ` is constant.
    pub fn constant_value(&self) -> Option<C> {
        self.characteristic.is_zero().then(|| self.anchor.1.clone())
    }

    /// `σ(x) = x`: `P = 1` with an anchor on the diagonal.
    pub fn is_identity(&self) -> bool {
        self.characteristic == MultiPoly::one(1) && self.anchor.0 == self.anchor.1
    }

    /// Compares finite-difference derivatives of `σ` with `P(σ)` on a grid.
    pub fn check_consistency(&self, check: &ConsistencyCheck) -> Result<()> {
        let n = check.points.max(2);
        for k in 0..n {
            let x = check.lower + (check.upper - check.lower) * k as f64 / (n - 1) as f64;
            let fd = (self.value(x + check.step) - self.value(x - check.step)) / (2.0 * check.step);
            let predicted = self.derivative(x);
            let gap = (fd - predicted).abs();
            if !(gap <= check.tolerance * predicted.abs().max(1.0)) {
                return Err(Error::spec(
                    self.name.clone(),
                    format!(
                        "sigma' = P(sigma) violated at x = {x}: finite difference {fd}, P(sigma) = {predicted}"
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Grid and tolerance for [`Activation::check_consistency`].
#[derive(Debug, Clone)]
pub struct ConsistencyCheck {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    pub step: f64,
    pub tolerance: f64,
}

impl Default for ConsistencyCheck {
    fn default() -> Self {
        ConsistencyCheck {
            lower: -5.0,
            upper: 5.0,
            points: 1000,
            step: 1e-6,
            tolerance: 1e-5,
        }
    }
}

/// Tabulated solution of `σ' = P(σ)` through the anchor, interpolated with
/// cubic Hermite splines (slopes come from `P`, so the interpolant is C¹).
struct OdeTable {
    characteristic: CompiledPoly,
    anchor_x: f64,
    anchor_y: f64,
    cache: OnceLock<Table>,
}

struct Table {
    start: f64,
    values: Vec<f64>,
}

const TABLE_STEP: f64 = 1e-3;
const TABLE_RADIUS: f64 = 40.0;
const BLOW_UP: f64 = 1e12;

impl OdeTable {
    fn new(characteristic: CompiledPoly, anchor_x: f64, anchor_y: f64) -> Self {
        OdeTable {
            characteristic,
            anchor_x,
            anchor_y,
            cache: OnceLock::new(),
        }
    }

    fn slope(&self, y: f64) -> f64 {
        self.characteristic.eval(&[y])
    }

    fn rk4(&self, y: f64, h: f64) -> f64 {
        let k1 = self.slope(y);
        let k2 = self.slope(y + 0.5 * h * k1);
        let k3 = self.slope(y + 0.5 * h * k2);
        let k4 = self.slope(y + h * k3);
        y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    fn march(&self, from_y: f64, steps: usize, h: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(steps);
        let mut y = from_y;
        for _ in 0..steps {
            y = if y.is_finite() && y.abs() < BLOW_UP {
                self.rk4(y, h)
            } else {
                f64::NAN
            };
            out.push(y);
        }
        out
    }

    fn table(&self) -> &Table {
        self.cache.get_or_init(|| {
            let half = (TABLE_RADIUS / TABLE_STEP) as usize;
            let backward = self.march(self.anchor_y, half, -TABLE_STEP);
            let forward = self.march(self.anchor_y, half, TABLE_STEP);
            let mut values: Vec<f64> = backward.into_iter().rev().collect();
            values.push(self.anchor_y);
            values.extend(forward);
            Table {
                start: self.anchor_x - half as f64 * TABLE_STEP,
                values,
            }
        })
    }

    fn value(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return f64::NAN;
        }
        let table = self.table();
        let pos = (x - table.start) / TABLE_STEP;
        let last = table.values.len() - 1;
        if pos < 0.0 || pos >= last as f64 {
            // integrate outward from the nearest table edge
            let (edge_x, edge_y) = if pos < 0.0 {
                (table.start, table.values[0])
            } else {
                (table.start + last as f64 * TABLE_STEP, table.values[last])
            };
            let span = x - edge_x;
            let steps = (span.abs() / TABLE_STEP).ceil().max(1.0) as usize;
            return *self
                .march(edge_y, steps, span / steps as f64)
                .last()
                .unwrap_or(&edge_y);
        }
        let k = (pos.floor() as usize).min(last - 1);
        let t = pos - k as f64;
        let (y0, y1) = (table.values[k], table.values[k + 1]);
        let (m0, m1) = (self.slope(y0) * TABLE_STEP, self.slope(y1) * TABLE_STEP);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }
}
