use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::polynomial::MultiPoly;
use crate::systems::PolySystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorLimits {
    pub max_generators: usize,
    /// Lie derivatives with more terms than this are not expanded further.
    pub max_terms: usize,
}

impl Default for GeneratorLimits {
    fn default() -> Self {
        GeneratorLimits {
            max_generators: 500,
            max_terms: 20_000,
        }
    }
}

/// Outputs and their iterated Lie derivatives along the letter fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGenerators<C: Coeff> {
    pub depth: usize,
    pub generators: Vec<MultiPoly<C>>,
    /// Every Lie derivative of every generator is already a generator, so
    /// they generate the whole observation algebra.
    pub closed: bool,
    /// A size limit stopped the expansion early.
    pub capped: bool,
}

pub fn observation_generators<C: Coeff>(
    sys: &PolySystem<C>,
    depth: usize,
) -> ObservationGenerators<C> {
    observation_generators_with(sys, depth, &GeneratorLimits::default())
}

/// Breadth-first expansion of Lie-derivative words up to `depth`, in word
/// order, with duplicates removed.
pub fn observation_generators_with<C: Coeff>(
    sys: &PolySystem<C>,
    depth: usize,
    limits: &GeneratorLimits,
) -> ObservationGenerators<C> {
    observation_generators_until(sys, depth, limits, |_| false)
}

/// As [`observation_generators_with`], stopping after the first level at
/// which `done` holds for the generators collected so far.
pub fn observation_generators_until<C: Coeff, F>(
    sys: &PolySystem<C>,
    depth: usize,
    limits: &GeneratorLimits,
    done: F,
) -> ObservationGenerators<C>
where
    F: Fn(&[MultiPoly<C>]) -> bool,
{
    let mut seen: HashSet<MultiPoly<C>> = HashSet::new();
    let mut generators = Vec::new();
    let mut frontier = Vec::new();
    for h in sys.output() {
        if seen.insert(h.clone()) {
            generators.push(h.clone());
            frontier.push(h.clone());
        }
    }
    let mut closed = false;
    let mut capped = false;
    let mut reached = 0;
    for level in 1..=depth {
        if done(&generators) {
            break;
        }
        if frontier.is_empty() {
            closed = true;
            break;
        }
        if frontier.iter().any(|g| g.num_terms() > limits.max_terms) {
            capped = true;
            break;
        }
        let derived: Vec<MultiPoly<C>> = frontier
            .par_iter()
            .flat_map_iter(|g| {
                sys.fields()
                    .iter()
                    .map(move |f| f.lie_derivative(g).expect("generators live in the system ring"))
            })
            .collect();
        let mut next = Vec::new();
        for p in derived {
            if seen.contains(&p) {
                continue;
            }
            if generators.len() >= limits.max_generators {
                capped = true;
                break;
            }
            seen.insert(p.clone());
            generators.push(p.clone());
            next.push(p);
        }
        reached = level;
        frontier = next;
        if capped {
            break;
        }
    }
    if !capped && !closed && frontier.is_empty() {
        closed = true;
    }
    ObservationGenerators {
        depth: reached,
        generators,
        closed,
        capped,
    }
}

/// Convenience check used by callers that need a non-empty generator set.
pub(crate) fn require_nonempty<C: Coeff>(g: &ObservationGenerators<C>) -> Result<()> {
    if g.generators.is_empty() {
        return Err(Error::InvalidArgument(
            "observation generators are empty (the system has no outputs)".into(),
        ));
    }
    Ok(())
}
