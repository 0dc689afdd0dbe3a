//! Worked example systems shipped as JSON specs, with their expected
//! artifacts and the assertions that reproduce them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{accessibility_lie_rank, observation_generators, transcendence_degree, DEFAULT_SEED};
use crate::coeff::{Coeff, Rational};
use crate::embedding::embed;
use crate::error::Result;
use crate::polynomial::MultiPoly;
use crate::simulation::{euler_discretize, integrate_network, integrate_poly, verify_with, IntegratorConfig};
use crate::systems::spec::{parse_input_signal, parse_network};
use crate::systems::{InputSignal, Network, OdeLstm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fixture {
    Example1,
    Example2,
    Example3,
    Example4,
    Remark,
    Linear,
}

/// Expected artifacts of a fixture. Absent entries are not checked.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct Expected {
    pub embedding_dimension: usize,
    pub reduced_dimension: Option<usize>,
    pub variables: Option<Vec<String>>,
    /// Reduced field components per letter, in variables `X1..Xd`.
    pub fields: Option<Vec<Vec<String>>>,
    pub output: Option<Vec<String>>,
    pub lie_rank: Option<usize>,
    pub observation_depth: Option<usize>,
    pub trdeg: Option<usize>,
    pub euler_pairs: Option<usize>,
    pub euler_tolerance: Option<f64>,
    pub expm_tolerance: Option<f64>,
    pub state_gap_tolerance: Option<f64>,
    pub output_gap_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl FixtureCheck {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        FixtureCheck {
            name: name.to_owned(),
            passed,
            detail: detail.into(),
        }
    }
}

pub const CHECK_NAMES: &[&str] = &[
    "embedding",
    "reduction",
    "equivalence",
    "initial-state",
    "accessibility",
    "observability",
    "discretization",
    "linear",
];

impl Fixture {
    pub const ALL: [Fixture; 6] = [
        Fixture::Example1,
        Fixture::Example2,
        Fixture::Example3,
        Fixture::Example4,
        Fixture::Remark,
        Fixture::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::Example1 => "1",
            Fixture::Example2 => "2",
            Fixture::Example3 => "3",
            Fixture::Example4 => "4",
            Fixture::Remark => "remark",
            Fixture::Linear => "linear",
        }
    }

    /// Accepts `1`..`4`, `example1`..`example4`, `remark` and `linear`.
    pub fn from_name(name: &str) -> Option<Fixture> {
        let key = name.strip_prefix("example").unwrap_or(name);
        Fixture::ALL.into_iter().find(|f| f.name() == key)
    }

    pub fn file_stem(self) -> String {
        match self {
            Fixture::Remark | Fixture::Linear => self.name().to_owned(),
            _ => format!("example{}", self.name()),
        }
    }

    pub fn spec_json(self) -> &'static str {
        match self {
            Fixture::Example1 => include_str!("../fixtures/example1.json"),
            Fixture::Example2 => include_str!("../fixtures/example2.json"),
            Fixture::Example3 => include_str!("../fixtures/example3.json"),
            Fixture::Example4 => include_str!("../fixtures/example4.json"),
            Fixture::Remark => include_str!("../fixtures/remark.json"),
            Fixture::Linear => include_str!("../fixtures/linear.json"),
        }
    }

    pub fn expected_json(self) -> &'static str {
        match self {
            Fixture::Example1 => include_str!("../fixtures/example1.expected.json"),
            Fixture::Example2 => include_str!("../fixtures/example2.expected.json"),
            Fixture::Example3 => include_str!("../fixtures/example3.expected.json"),
            Fixture::Example4 => include_str!("../fixtures/example4.expected.json"),
            Fixture::Remark => include_str!("../fixtures/remark.expected.json"),
            Fixture::Linear => include_str!("../fixtures/linear.expected.json"),
        }
    }

    /// Default input signal used by the simulation checks.
    pub fn input_json(self) -> &'static str {
        match self {
            Fixture::Example1 => include_str!("../fixtures/input_single.json"),
            _ => include_str!("../fixtures/input.json"),
        }
    }

    pub fn network<C: Coeff>(self) -> Network<C> {
        parse_network(self.spec_json()).expect("fixture specs are valid")
    }

    pub fn lstm<C: Coeff>(self) -> OdeLstm<C> {
        match self.network() {
            Network::Lstm(l) => l,
            Network::Rnn(_) => unreachable!("all fixtures are LSTMs"),
        }
    }

    pub fn expected(self) -> Expected {
        serde_json::from_str(self.expected_json()).expect("fixture expectations are valid")
    }

    pub fn input(self) -> InputSignal {
        parse_input_signal(self.input_json()).expect("fixture inputs are valid")
    }

    /// Names of the checks that apply to this fixture.
    pub fn checks(self) -> Vec<&'static str> {
        let mut v = vec!["embedding", "equivalence"];
        match self {
            Fixture::Example1 => v.extend(["reduction", "initial-state"]),
            Fixture::Example2 => v.push("reduction"),
            Fixture::Example3 => v.extend(["reduction", "accessibility"]),
            Fixture::Example4 => v.extend(["reduction", "observability"]),
            Fixture::Remark => v.push("discretization"),
            Fixture::Linear => v.push("linear"),
        }
        v
    }
}

fn check_embedding(f: Fixture, exp: &Expected) -> FixtureCheck {
    let dim = embed(&f.network::<Rational>()).system.dim();
    FixtureCheck::new(
        "embedding",
        dim == exp.embedding_dimension,
        format!("dimension {dim}, expected {}", exp.embedding_dimension),
    )
}

fn check_reduction(f: Fixture, exp: &Expected) -> Result<FixtureCheck> {
    let red = embed(&f.network::<Rational>()).reduce();
    let p = &red.system;
    let dim = p.dim();
    let mut problems = Vec::new();
    if let Some(d) = exp.reduced_dimension {
        if d != dim {
            problems.push(format!("dimension {dim}, expected {d}"));
        }
    }
    if let Some(labels) = &exp.variables {
        let got: Vec<&str> = p.variables().iter().map(|v| v.label.as_str()).collect();
        if got != *labels {
            problems.push(format!("variables {got:?}, expected {labels:?}"));
        }
    }
    if problems.is_empty() {
        if let Some(fields) = &exp.fields {
            for (r, comps) in fields.iter().enumerate() {
                for (i, text) in comps.iter().enumerate() {
                    let want = MultiPoly::<Rational>::parse(text, dim)?;
                    let got = &p.field(r).components()[i];
                    if *got != want {
                        problems.push(format!("letter {r} component {}: got {got}, expected {want}", i + 1));
                    }
                }
            }
        }
        if let Some(out) = &exp.output {
            for (k, text) in out.iter().enumerate() {
                let want = MultiPoly::<Rational>::parse(text, dim)?;
                if p.output()[k] != want {
                    problems.push(format!("output {}: got {}, expected {want}", k + 1, p.output()[k]));
                }
            }
        }
    }
    let detail = if problems.is_empty() {
        format!("{dim} variables, fields match")
    } else {
        problems.join("; ")
    };
    Ok(FixtureCheck::new("reduction", problems.is_empty(), detail))
}

fn check_equivalence(f: Fixture, exp: &Expected) -> Result<FixtureCheck> {
    let state_tol = exp.state_gap_tolerance.unwrap_or(1e-5);
    let output_tol = exp.output_gap_tolerance.unwrap_or(1e-6);
    let full = embed(&f.network::<Rational>());
    let cfg = IntegratorConfig::new(1e-3, 2.0)?;
    let u = f.input();
    let mut worst = (0.0f64, 0.0f64);
    for emb in [&full, &full.reduce()] {
        let rep = verify_with(emb, &u, &cfg)?;
        worst.0 = worst.0.max(rep.max_state_gap);
        worst.1 = worst.1.max(rep.max_output_gap);
    }
    Ok(FixtureCheck::new(
        "equivalence",
        worst.0 <= state_tol && worst.1 <= output_tol,
        format!("max state gap {:.3e}, max output gap {:.3e}", worst.0, worst.1),
    ))
}

fn check_initial_state(f: Fixture) -> Result<FixtureCheck> {
    let red = embed(&f.network::<Rational>()).reduce();
    let v0 = red.system.v0().to_vec();
    let tr = integrate_poly(&red.system, &f.input(), &IntegratorConfig::new(1e-3, 1.0)?)?;
    let drift = tr
        .states
        .iter()
        .flat_map(|s| s.iter().zip(&v0).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    Ok(FixtureCheck::new(
        "initial-state",
        drift == 0.0,
        format!("reduced trajectory stays at {v0:?} (max drift {drift:e})"),
    ))
}

fn check_accessibility(f: Fixture, exp: &Expected) -> Result<FixtureCheck> {
    let red = embed(&f.network::<Rational>()).reduce();
    let p = &red.system;
    let want = exp.lie_rank.unwrap_or(p.dim());
    let ranks = (0..=p.dim())
        .map(|d| accessibility_lie_rank(p.fields(), p.v0(), d))
        .collect::<Result<Vec<_>>>()?;
    Ok(FixtureCheck::new(
        "accessibility",
        ranks.iter().all(|&r| r == want),
        format!("Lie rank at the initial state by depth {ranks:?}, expected {want}"),
    ))
}

fn check_observability(f: Fixture, exp: &Expected) -> Result<FixtureCheck> {
    let red = embed(&f.network::<Rational>()).reduce();
    let depth = exp.observation_depth.unwrap_or(red.system.dim());
    let want = exp.trdeg.unwrap_or(red.system.dim());
    let g = observation_generators(&red.system, depth);
    let t = transcendence_degree(&g)?;
    Ok(FixtureCheck::new(
        "observability",
        t == want,
        format!("{} generators up to depth {depth}, trdeg {t}, expected {want}", g.generators.len()),
    ))
}

fn to_f64_matrix<C: Coeff>(m: &DMatrix<C>) -> DMatrix<f64> {
    m.map(|c| c.to_f64())
}

fn to_f64_vector<C: Coeff>(v: &DVector<C>) -> DVector<f64> {
    v.map(|c| c.to_f64())
}

/// The residual LSTM recursion written out gate by gate: forget gate
/// `f = σ2(U2 h + W2 u + b2)`, input gate `i = σ3(...)`, cell update
/// `x + f ⊙ x + i ⊙ g1` and output update `z + σ4(U4 h + W4 u + b4)`.
pub fn residual_lstm_step<C: Coeff>(lstm: &OdeLstm<C>, s: &[f64], u: &[f64]) -> Vec<f64> {
    let n = lstm.n();
    let x = DVector::from_column_slice(&s[..n]);
    let z = DVector::from_column_slice(&s[n..]);
    let u = DVector::from_column_slice(u);
    let h = z.component_mul(&x.map(|v| lstm.sigma(5).value(v)));
    let gate = |l: usize| {
        let pre = to_f64_matrix(lstm.u(l)) * &h + to_f64_matrix(lstm.w(l)) * &u + to_f64_vector(lstm.b(l));
        pre.map(|v| lstm.sigma(l).value(v))
    };
    let (g1, f, i, o) = (gate(1), gate(2), gate(3), gate(4));
    let x_next = &x + f.component_mul(&x) + i.component_mul(&g1);
    let z_next = &z + o;
    x_next.iter().chain(z_next.iter()).copied().collect()
}

fn check_discretization(f: Fixture, exp: &Expected) -> Result<FixtureCheck> {
    let lstm = f.lstm::<Rational>();
    let stepper = euler_discretize(&lstm, 1.0)?;
    let pairs = exp.euler_pairs.unwrap_or(100);
    let tol = exp.euler_tolerance.unwrap_or(1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let s: Vec<f64> = (0..2 * lstm.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..lstm.m()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a = stepper.step_input(&s, &u);
        let b = residual_lstm_step(&lstm, &s, &u);
        worst = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(worst, f64::max);
    }
    Ok(FixtureCheck::new(
        "discretization",
        worst <= tol,
        format!("{pairs} random pairs, max coordinate gap {worst:e}"),
    ))
}

/// Closed-form solution of the linear configuration: with `z` frozen at `z0`
/// the cell obeys `x' = M x + W1 u`, `M = U0 + U1 diag(z0)`, solved with an
/// augmented matrix exponential on each constant piece of the input.
pub fn linear_closed_form<C: Coeff>(lstm: &OdeLstm<C>, u: &InputSignal, times: &[f64]) -> Vec<Vec<f64>> {
    let n = lstm.n();
    let z0 = to_f64_vector(lstm.z0());
    let m = to_f64_matrix(lstm.u(0)) + to_f64_matrix(lstm.u(1)) * DMatrix::from_diagonal(&z0);
    let w1 = to_f64_matrix(lstm.w(1));
    let drives: Vec<DVector<f64>> = lstm.alphabet().iter().map(|a| &w1 * to_f64_vector(a)).collect();
    let flow = |letter: usize, x: &DVector<f64>, dt: f64| -> DVector<f64> {
        let mut aug = DMatrix::zeros(n + 1, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&m * dt));
        aug.view_mut((0, n), (n, 1)).copy_from(&(&drives[letter] * dt));
        let e = aug.exp();
        e.view((0, 0), (n, n)) * x + e.view((0, n), (n, 1))
    };
    let horizon = times.last().copied().unwrap_or(0.0);
    let pieces = u.pieces(horizon);
    let mut out = Vec::with_capacity(times.len());
    let mut start = to_f64_vector(lstm.x0());
    let mut k = 0;
    for (i, &(t0, t1, letter)) in pieces.iter().enumerate() {
        let last = i + 1 == pieces.len();
        while k < times.len() && (times[k] < t1 || last) {
            let x = flow(letter, &start, times[k] - t0);
            out.push(x.iter().chain(z0.iter()).copied().collect());
            k += 1;
        }
        start = flow(letter, &start, t1 - t0);
    }
    if pieces.is_empty() {
        out.extend(times.iter().map(|_| start.iter().chain(z0.iter()).copied().collect::<Vec<f64>>()));
    }
    out
}

fn check_linear(f: Fixture, exp: &Expected) -> Result<FixtureCheck> {
    let tol = exp.expm_tolerance.unwrap_or(1e-6);
    let net = f.network::<Rational>();
    let lstm = f.lstm::<Rational>();
    let u = f.input();
    let tr = integrate_network(&net, &u, &IntegratorConfig::new(1e-3, 1.0)?)?;
    let exact = linear_closed_form(&lstm, &u, &tr.times);
    let gap = tr
        .states
        .iter()
        .zip(&exact)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    Ok(FixtureCheck::new(
        "linear",
        gap <= tol,
        format!("max gap to the matrix-exponential solution {gap:.3e} over {} grid points", tr.len()),
    ))
}

/// Runs the checks of `f`, or only `only` when given.
pub fn run_fixture(f: Fixture, only: Option<&str>) -> Result<Vec<FixtureCheck>> {
    let exp = f.expected();
    let mut out = Vec::new();
    for name in f.checks() {
        if only.is_some_and(|o| o != name) {
            continue;
        }
        out.push(match name {
            "embedding" => check_embedding(f, &exp),
            "reduction" => check_reduction(f, &exp)?,
            "equivalence" => check_equivalence(f, &exp)?,
            "initial-state" => check_initial_state(f)?,
            "accessibility" => check_accessibility(f, &exp)?,
            "observability" => check_observability(f, &exp)?,
            "discretization" => check_discretization(f, &exp)?,
            "linear" => check_linear(f, &exp)?,
            _ => unreachable!("check names come from Fixture::checks"),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Fixture::ALL {
            assert_eq!(Fixture::from_name(f.name()), Some(f));
            assert_eq!(Fixture::from_name(&f.file_stem()), Some(f));
        }
        assert_eq!(Fixture::from_name("5"), None);
    }

    #[test]
    fn every_fixture_passes() {
        for f in Fixture::ALL {
            for c in run_fixture(f, None).unwrap() {
                assert!(c.passed, "{} {}: {}", f.name(), c.name, c.detail);
            }
        }
    }

    #[test]
    fn only_filters() {
        let checks = run_fixture(Fixture::Example3, Some("accessibility")).unwrap();
        assert_eq!(checks.len(), 1);
        assert!(run_fixture(Fixture::Example2, Some("accessibility")).unwrap().is_empty());
    }
}
