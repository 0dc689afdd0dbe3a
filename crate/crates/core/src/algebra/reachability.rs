use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::report::{Bound, CheckReport, Verdict};
use super::trdeg::{numeric_rank, singular_values, DEFAULT_SEED};
use crate::coeff::Coeff;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::polynomial::{Monomial, MultiPoly};
use crate::simulation::{integrate, random_input_signal, IntegratorConfig, PolySimulator, SwitchedSystem};
use crate::systems::{Network, PolySystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachabilityConfig {
    pub degree: usize,
    /// Defaults to twice the number of monomials plus 20.
    pub samples: Option<usize>,
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
    pub max_segments: usize,
    /// Relative singular-value threshold for kernel candidates.
    pub kernel_cutoff: f64,
    /// Absolute bound a candidate must meet on fresh samples.
    pub residual_tol: f64,
    /// Restrict the test to these state coordinates (0-based).
    pub variables: Option<Vec<usize>>,
}

impl Default for ReachabilityConfig {
    fn default() -> Self {
        ReachabilityConfig {
            degree: 2,
            samples: None,
            horizon: 1.0,
            step: 1e-3,
            seed: DEFAULT_SEED,
            max_segments: 4,
            kernel_cutoff: 1e-7,
            residual_tol: 1e-6,
            variables: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFailure {
    pub index: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReachabilityOutcome {
    pub verdict: Verdict,
    pub degree: usize,
    pub variables: Vec<usize>,
    pub num_monomials: usize,
    pub samples_requested: usize,
    pub samples_used: usize,
    pub failures: Vec<SampleFailure>,
    /// Smallest singular value relative to the largest one.
    pub min_relative_singular_value: f64,
    pub kernel_dim: usize,
    pub vanishing_polynomial: Option<String>,
    #[serde(skip)]
    pub vanishing: Option<MultiPoly<f64>>,
    pub fresh_samples: usize,
    pub fresh_residual: Option<f64>,
    /// Rank of the sampled states themselves (linear span test).
    pub span_rank: usize,
    pub config: ReachabilityConfig,
}

/// All exponent vectors over `v` variables with total degree `<= degree`,
/// in ascending graded order.
fn exponent_vectors(v: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(v: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == v {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(v, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(v, degree as u32, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| Monomial::from_exponents(a.clone()).cmp(&Monomial::from_exponents(b.clone())));
    out
}

fn sample_signal_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn sample_states<S: SwitchedSystem + Sync + ?Sized>(
    sys: &S,
    x0: &[f64],
    cfg: &ReachabilityConfig,
    indices: std::ops::Range<u64>,
) -> Vec<std::result::Result<Vec<f64>, SampleFailure>> {
    let k = sys.num_letters();
    indices
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_signal_rng(cfg.seed, i);
            let segments = rng.gen_range(1..=cfg.max_segments.max(1));
            let end = cfg.horizon * (1.0 - rng.gen::<f64>());
            let u = random_input_signal(&mut rng, k, segments, end);
            let icfg = IntegratorConfig {
                step: cfg.step,
                horizon: end,
            };
            integrate(sys, x0, &u, &icfg)
                .map(|tr| tr.final_state().to_vec())
                .map_err(|e| SampleFailure {
                    index: i,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Looks for a polynomial of degree `<= cfg.degree` vanishing on states
/// reached under random piecewise-constant inputs.
pub fn sampled_reachability<S: SwitchedSystem + Sync + ?Sized>(
    sys: &S,
    x0: &[f64],
    cfg: &ReachabilityConfig,
) -> Result<ReachabilityOutcome> {
    reachability_from(sys.state_dim(), cfg, |range| sample_states(sys, x0, cfg, range))
}

/// As [`sampled_reachability`] for the embedding, with reached states
/// obtained by lifting reached network states. Requires a lift that keeps
/// every state coordinate, so that lifted network trajectories are exactly
/// the embedding trajectories.
pub fn sampled_lifted_reachability<C: Coeff>(
    emb: &Embedding<C>,
    cfg: &ReachabilityConfig,
) -> Result<ReachabilityOutcome> {
    if emb.lift.state_positions().iter().any(Option::is_none) {
        return Err(Error::InvalidArgument(
            "lifted sampling needs a lift that keeps every state coordinate".into(),
        ));
    }
    let num = emb.lift.numeric_network();
    reachability_from(emb.system.dim(), cfg, |range| {
        let start = range.start;
        sample_states(num, num.initial_state(), cfg, range)
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                r.and_then(|s| {
                    emb.lift.evaluate(&s).map_err(|e| SampleFailure {
                        index: start + k as u64,
                        message: e.to_string(),
                    })
                })
            })
            .collect()
    })
}

type Samples = Vec<std::result::Result<Vec<f64>, SampleFailure>>;

fn reachability_from<F>(n: usize, cfg: &ReachabilityConfig, sampler: F) -> Result<ReachabilityOutcome>
where
    F: Fn(std::ops::Range<u64>) -> Samples,
{
    if cfg.degree == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    if !(cfg.horizon.is_finite() && cfg.horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", cfg.horizon)));
    }
    let vars = cfg.variables.clone().unwrap_or_else(|| (0..n).collect());
    if let Some(&bad) = vars.iter().find(|&&v| v >= n) {
        return Err(Error::IndexOutOfRange {
            context: "reachability variables",
            index: bad,
            len: n,
        });
    }
    let exps = exponent_vectors(vars.len(), cfg.degree);
    let nm = exps.len();
    let samples = cfg.samples.unwrap_or(2 * nm + 20);
    if samples < nm {
        return Err(Error::InvalidArgument(format!(
            "{samples} samples cannot determine {nm} monomial coefficients"
        )));
    }

    let monomial_row = |x: &[f64]| -> Vec<f64> {
        exps.iter()
            .map(|e| {
                e.iter()
                    .zip(&vars)
                    .map(|(&p, &v)| x[v].powi(p as i32))
                    .product()
            })
            .collect()
    };

    let mut failures = Vec::new();
    let mut states = Vec::new();
    for r in sampler(0..samples as u64) {
        match r {
            Ok(s) => states.push(s),
            Err(f) => failures.push(f),
        }
    }
    let projected: Vec<Vec<f64>> = states.iter().map(|s| vars.iter().map(|&v| s[v]).collect()).collect();
    let span_rank = numeric_rank(&singular_values(&projected, vars.len()), 1e-8);

    let mut outcome = ReachabilityOutcome {
        verdict: Verdict::Inconclusive(Some(Bound::Degree(cfg.degree))),
        degree: cfg.degree,
        variables: vars.clone(),
        num_monomials: nm,
        samples_requested: samples,
        samples_used: states.len(),
        failures,
        min_relative_singular_value: f64::NAN,
        kernel_dim: 0,
        vanishing_polynomial: None,
        vanishing: None,
        fresh_samples: 0,
        fresh_residual: None,
        span_rank,
        config: cfg.clone(),
    };
    if states.len() < nm {
        return Ok(outcome);
    }

    let rows: Vec<Vec<f64>> = states.iter().map(|s| monomial_row(s)).collect();
    let mut m = DMatrix::from_fn(rows.len(), nm, |i, j| rows[i][j]);
    let norms: Vec<f64> = (0..nm).map(|j| m.column(j).norm()).collect();
    for (j, &nj) in norms.iter().enumerate() {
        if nj > 0.0 {
            m.column_mut(j).scale_mut(1.0 / nj);
        }
    }
    let svd = m.svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let (imin, smin) = sv
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one monomial");
    outcome.min_relative_singular_value = if smax > 0.0 { smin / smax } else { 0.0 };
    outcome.kernel_dim = sv.iter().filter(|&&s| s <= cfg.kernel_cutoff * smax).count();
    if outcome.kernel_dim == 0 {
        outcome.verdict = Verdict::Holds;
        return Ok(outcome);
    }

    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut coeffs: Vec<f64> = (0..nm)
        .map(|j| {
            let v = v_t[(imin, j)];
            if norms[j] > 0.0 {
                v / norms[j]
            } else {
                v
            }
        })
        .collect();
    let cmax = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    for c in &mut coeffs {
        *c /= cmax;
        if c.abs() < 1e-10 {
            *c = 0.0;
        }
    }
    let terms = exps.iter().zip(&coeffs).filter(|(_, c)| **c != 0.0).map(|(e, &c)| {
        let mut full = vec![0u32; n];
        for (&p, &v) in e.iter().zip(&vars) {
            full[v] = p;
        }
        (full, c)
    });
    let poly = MultiPoly::from_terms(n, terms)?;

    let fresh_range = samples as u64..(11 * samples) as u64;
    let fresh: Vec<Vec<f64>> = sampler(fresh_range)
        .into_iter()
        .filter_map(|r| r.ok())
        .collect();
    let residual = fresh
        .iter()
        .map(|s| poly.evaluate(s).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    outcome.fresh_samples = fresh.len();
    outcome.fresh_residual = Some(residual);
    outcome.vanishing_polynomial = Some(poly.to_string());
    outcome.vanishing = Some(poly);
    if residual <= cfg.residual_tol && !fresh.is_empty() {
        outcome.verdict = Verdict::Fails;
    }
    Ok(outcome)
}

pub fn sampled_poly_reachability<C: Coeff>(
    p: &PolySystem<C>,
    cfg: &ReachabilityConfig,
) -> Result<ReachabilityOutcome> {
    sampled_reachability(&PolySimulator::new(p), p.v0(), cfg)
}

pub fn sampled_network_reachability<C: Coeff>(
    net: &Network<C>,
    cfg: &ReachabilityConfig,
) -> Result<ReachabilityOutcome> {
    let num = net.numeric();
    sampled_reachability(&num, num.initial_state(), cfg)
}

/// Sampled algebraic reachability of `p` as a [`CheckReport`].
pub fn sampled_algebraic_reachability<C: Coeff>(
    p: &PolySystem<C>,
    degree: usize,
    samples: usize,
    horizon: f64,
    seed: u64,
) -> Result<CheckReport> {
    let cfg = ReachabilityConfig {
        degree,
        samples: Some(samples),
        horizon,
        seed,
        ..ReachabilityConfig::default()
    };
    Ok(sampled_poly_reachability(p, &cfg)?.to_report("algebraic_reachability", p.dim()))
}

impl ReachabilityOutcome {
    pub fn to_report(&self, check: &str, dimension: usize) -> CheckReport {
        let mut r = CheckReport::new(check, self.verdict)
            .with("dimension", &dimension)
            .with("degree", &self.degree)
            .with("seed", &self.config.seed)
            .with("samples", &self.samples_used)
            .with("monomials", &self.num_monomials)
            .with("kernel_dim", &self.kernel_dim)
            .with("min_relative_singular_value", &self.min_relative_singular_value)
            .with("span_rank", &self.span_rank)
            .with("horizon", &self.config.horizon)
            .with("step", &self.config.step);
        if self.variables.len() != dimension {
            r = r.with("variables", &self.variables);
        }
        if let Some(p) = &self.vanishing_polynomial {
            r = r
                .with("vanishing_polynomial", &p)
                .with("fresh_samples", &self.fresh_samples)
                .with("fresh_residual", &self.fresh_residual);
        }
        if !self.failures.is_empty() {
            r = r.with("failed_samples", &self.failures);
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Rational;
    use crate::polynomial::PolyVectorField;

    fn sys(fields: &[&[&str]], n: usize, v0: Vec<f64>) -> PolySystem<Rational> {
        let fields = fields
            .iter()
            .map(|f| PolyVectorField::new(n, f.iter().map(|c| MultiPoly::parse(c, n).unwrap()).collect()).unwrap())
            .collect();
        PolySystem::with_default_labels(fields, vec![], v0).unwrap()
    }

    #[test]
    fn exponent_vectors_count() {
        assert_eq!(exponent_vectors(2, 2).len(), 6);
        assert_eq!(exponent_vectors(3, 1).len(), 4);
        assert_eq!(exponent_vectors(2, 1)[0], vec![0, 0]);
    }

    #[test]
    fn frozen_coordinate_is_found() {
        let p = sys(&[&["1", "0"]], 2, vec![0.0, 0.0]);
        for degree in 1..=3 {
            let cfg = ReachabilityConfig {
                degree,
                ..ReachabilityConfig::default()
            };
            let out = sampled_poly_reachability(&p, &cfg).unwrap();
            assert_eq!(out.verdict, Verdict::Fails, "{out:?}");
            let v = out.vanishing.unwrap();
            // the kernel contains X2 (possibly times other monomials)
            assert!(v.evaluate(&[0.7, 0.0]).unwrap().abs() < 1e-9);
            assert!(v.evaluate(&[0.7, 0.5]).unwrap().abs() > 1e-6);
        }
    }

    #[test]
    fn controllable_linear_pair() {
        // x' = A x + b a with A = [[0, 1], [-1, 0]], b = e2, letters a = -1, 1
        let p = sys(&[&["X2", "-X1 - 1"], &["X2", "-X1 + 1"]], 2, vec![0.0, 0.0]);
        let cfg = ReachabilityConfig {
            degree: 1,
            ..ReachabilityConfig::default()
        };
        let out = sampled_poly_reachability(&p, &cfg).unwrap();
        assert_eq!(out.verdict, Verdict::Holds, "{out:?}");
        assert_eq!(out.span_rank, 2);
    }

    #[test]
    fn report_is_deterministic() {
        let p = sys(&[&["X2", "-X1 - 1"], &["X2", "-X1 + 1"]], 2, vec![0.0, 0.0]);
        let a = sampled_algebraic_reachability(&p, 2, 40, 1.0, 3).unwrap();
        let b = sampled_algebraic_reachability(&p, 2, 40, 1.0, 3).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(sampled_algebraic_reachability(&p, 2, 3, 1.0, 3).is_err());
    }
}
