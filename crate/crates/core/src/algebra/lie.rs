use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use super::trdeg::{normalized_rows, numeric_rank, singular_values};
use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::polynomial::PolyVectorField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LieRankConfig {
    pub depth: usize,
    pub cutoff: f64,
    pub max_fields: usize,
    pub max_terms: usize,
}

impl LieRankConfig {
    pub fn with_depth(depth: usize) -> Self {
        LieRankConfig {
            depth,
            cutoff: 1e-8,
            max_fields: 500,
            max_terms: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LieRankEvidence {
    pub rank: usize,
    pub dimension: usize,
    /// Deepest bracket level that was evaluated.
    pub depth: usize,
    pub num_fields: usize,
    /// A bracket level produced nothing new: the span of the evaluated fields
    /// is the whole Lie algebra at the point.
    pub saturated: bool,
    pub capped: bool,
    pub singular_values: Vec<f64>,
}

/// Dimension at `point` of the span of `fields` and their iterated brackets
/// up to `depth`.
pub fn accessibility_lie_rank<C: Coeff>(
    fields: &[PolyVectorField<C>],
    point: &[f64],
    depth: usize,
) -> Result<usize> {
    Ok(lie_rank_with(fields, point, &LieRankConfig::with_depth(depth))?.rank)
}

pub fn lie_rank_with<C: Coeff>(
    fields: &[PolyVectorField<C>],
    point: &[f64],
    cfg: &LieRankConfig,
) -> Result<LieRankEvidence> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidArgument("Lie rank needs at least one vector field".into()))?;
    let dim = first.dim();
    for f in fields {
        if f.dim() != dim || f.num_vars() != first.num_vars() {
            return Err(Error::DimensionMismatch {
                context: "Lie rank fields",
                expected: dim,
                found: f.dim(),
            });
        }
    }
    if point.len() != first.num_vars() {
        return Err(Error::DimensionMismatch {
            context: "Lie rank point",
            expected: first.num_vars(),
            found: point.len(),
        });
    }

    let mut seen: HashSet<PolyVectorField<C>> = HashSet::new();
    let mut base = Vec::new();
    for f in fields {
        if !f.is_zero() && seen.insert(f.clone()) {
            base.push(f.clone());
        }
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let push_rows = |level: &[PolyVectorField<C>], rows: &mut Vec<Vec<f64>>| -> Result<()> {
        for f in level {
            rows.push(f.evaluate(point)?);
        }
        Ok(())
    };
    push_rows(&base, &mut rows)?;
    let rank_of = |rows: &[Vec<f64>]| {
        let sv = singular_values(&normalized_rows(rows.to_vec(), 1e-10), dim);
        (numeric_rank(&sv, cfg.cutoff), sv)
    };
    let (mut rank, mut sv) = rank_of(&rows);
    let mut level = base.clone();
    let mut saturated = base.is_empty();
    let mut capped = false;
    let mut reached = 0;
    for d in 1..=cfg.depth {
        if rank == dim || saturated {
            break;
        }
        if level.iter().any(|f| f.total_terms() > cfg.max_terms) {
            capped = true;
            break;
        }
        let brackets: Vec<PolyVectorField<C>> = level
            .par_iter()
            .flat_map_iter(|x| {
                base.iter()
                    .map(move |f| f.lie_bracket(x).expect("fields share one dimension"))
            })
            .collect();
        let mut next = Vec::new();
        for b in brackets {
            if b.is_zero() || seen.contains(&b) {
                continue;
            }
            if seen.len() >= cfg.max_fields {
                capped = true;
                break;
            }
            seen.insert(b.clone());
            next.push(b);
        }
        reached = d;
        if next.is_empty() && !capped {
            saturated = true;
            break;
        }
        push_rows(&next, &mut rows)?;
        (rank, sv) = rank_of(&rows);
        level = next;
        if capped {
            break;
        }
    }
    Ok(LieRankEvidence {
        rank,
        dimension: dim,
        depth: reached,
        num_fields: seen.len(),
        saturated,
        capped,
        singular_values: sv,
    })
}
