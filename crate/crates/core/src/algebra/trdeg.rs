use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::observation::{require_nonempty, ObservationGenerators};
use crate::coeff::Coeff;
use crate::error::Result;
use crate::polynomial::MultiPoly;

pub const DEFAULT_SEED: u64 = 42;

/// Singular values of the matrix with the given rows, in descending order.
pub fn singular_values(rows: &[Vec<f64>], ncols: usize) -> Vec<f64> {
    if rows.is_empty() || ncols == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `cutoff` times the largest one.
pub fn numeric_rank(sv: &[f64], cutoff: f64) -> usize {
    match sv.first() {
        Some(&max) if max > 0.0 => sv.iter().filter(|&&s| s > cutoff * max).count(),
        _ => 0,
    }
}

/// Rescales rows to unit length and drops rows that are zero up to
/// roundoff relative to the largest row.
pub(crate) fn normalized_rows(rows: Vec<Vec<f64>>, zero_tol: f64) -> Vec<Vec<f64>> {
    let norms: Vec<f64> = rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let max = norms.iter().copied().fold(0.0, f64::max);
    rows.into_iter()
        .zip(norms)
        .filter(|&(_, n)| n > 0.0 && n > zero_tol * max)
        .map(|(r, n)| r.into_iter().map(|v| v / n).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrdegConfig {
    pub points: usize,
    pub cutoff: f64,
    pub seed: u64,
}

impl Default for TrdegConfig {
    fn default() -> Self {
        TrdegConfig {
            points: 5,
            cutoff: 1e-8,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrdegEvidence {
    pub rank: usize,
    pub ranks_per_point: Vec<usize>,
    /// Singular values at the point that attained the maximum rank.
    pub singular_values: Vec<f64>,
    pub config: TrdegConfig,
}

/// Generic rank of the Jacobian of `polys`, the transcendence degree of the
/// algebra they generate (characteristic zero Jacobian criterion).
pub fn jacobian_rank<C: Coeff>(polys: &[MultiPoly<C>], cfg: &TrdegConfig) -> TrdegEvidence {
    let n = polys.first().map_or(0, MultiPoly::num_vars);
    let floats: Vec<MultiPoly<f64>> = polys.iter().filter(|p| !p.is_constant()).map(MultiPoly::to_float).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = TrdegEvidence {
        rank: 0,
        ranks_per_point: Vec::with_capacity(cfg.points),
        singular_values: Vec::new(),
        config: *cfg,
    };
    for _ in 0..cfg.points {
        let point: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let rows = floats
            .iter()
            .map(|p| p.gradient_at(&point).expect("point matches the ring"))
            .collect();
        let sv = singular_values(&normalized_rows(rows, 0.0), n);
        let rank = numeric_rank(&sv, cfg.cutoff);
        best.ranks_per_point.push(rank);
        if rank > best.rank || best.singular_values.is_empty() {
            best.rank = rank;
            best.singular_values = sv;
        }
    }
    best
}

pub fn transcendence_degree<C: Coeff>(g: &ObservationGenerators<C>) -> Result<usize> {
    Ok(transcendence_degree_with(g, &TrdegConfig::default())?.rank)
}

pub fn transcendence_degree_with<C: Coeff>(
    g: &ObservationGenerators<C>,
    cfg: &TrdegConfig,
) -> Result<TrdegEvidence> {
    require_nonempty(g)?;
    Ok(jacobian_rank(&g.generators, cfg))
}
