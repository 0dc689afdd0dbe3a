//! Qualitative checks on polynomial systems: observation generators,
//! transcendence degree, Lie-rank accessibility, sampled reachability and
//! the combined report for networks.

mod lie;
mod observation;
mod reachability;
mod report;
mod trdeg;

pub use lie::{accessibility_lie_rank, lie_rank_with, LieRankConfig, LieRankEvidence};
pub use observation::{
    observation_generators, observation_generators_until, observation_generators_with, GeneratorLimits,
    ObservationGenerators,
};
pub use reachability::{
    sampled_algebraic_reachability, sampled_lifted_reachability, sampled_network_reachability, sampled_poly_reachability, sampled_reachability,
    ReachabilityConfig, ReachabilityOutcome, SampleFailure,
};
pub use report::{
    apply_implications, implication_violations, qualitative_report, validate_report, Bound, CheckReport,
    QualitativeConfig, Verdict, POLY_ACCESSIBLE, POLY_OBSERVABLE, POLY_REACHABLE, RULES, SIGMA_ACCESSIBLE,
    SIGMA_MINIMAL, SIGMA_REACHABLE, SIGMA_SIGMA_MINIMAL, SIGMA_SPAN_REACHABLE, SIGMA_WEAKLY_OBSERVABLE,
};
pub use trdeg::{
    jacobian_rank, numeric_rank, singular_values, transcendence_degree, transcendence_degree_with, TrdegConfig,
    TrdegEvidence, DEFAULT_SEED,
};
