use std::fmt;

use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

use super::lie::{lie_rank_with, LieRankConfig, LieRankEvidence};
use super::observation::{observation_generators_until, GeneratorLimits};
use super::reachability::{sampled_lifted_reachability, sampled_network_reachability, ReachabilityConfig};
use super::trdeg::{jacobian_rank, TrdegConfig, DEFAULT_SEED};
use crate::coeff::Coeff;
use crate::embedding::{embed, Embedding};
use crate::error::Result;
use crate::systems::Network;

/// The search bound behind an inconclusive verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Depth(usize),
    Degree(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive(Option<Bound>),
}

impl Verdict {
    pub fn is_holds(self) -> bool {
        self == Verdict::Holds
    }

    pub fn is_fails(self) -> bool {
        self == Verdict::Fails
    }

    pub fn is_decided(self) -> bool {
        !matches!(self, Verdict::Inconclusive(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds => f.write_str("holds"),
            Verdict::Fails => f.write_str("fails"),
            Verdict::Inconclusive(Some(Bound::Depth(d))) => write!(f, "inconclusive-at-depth-{d}"),
            Verdict::Inconclusive(Some(Bound::Degree(d))) => write!(f, "inconclusive-at-degree-{d}"),
            Verdict::Inconclusive(None) => f.write_str("inconclusive"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    pub evidence: Map<String, Value>,
    pub implications: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub subchecks: Vec<CheckReport>,
}

impl CheckReport {
    pub fn new(check: &str, verdict: Verdict) -> Self {
        CheckReport {
            check: check.to_owned(),
            verdict,
            evidence: Map::new(),
            implications: Vec::new(),
            subchecks: Vec::new(),
        }
    }

    /// Adds an evidence entry. Non-finite floats serialize as `null`.
    pub fn with<T: Serialize + ?Sized>(mut self, key: &str, value: &T) -> Self {
        self.insert(key, value);
        self
    }

    pub fn insert<T: Serialize + ?Sized>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.evidence.insert(key.to_owned(), v);
    }

    pub fn subcheck(&self, name: &str) -> Option<&CheckReport> {
        self.subchecks.iter().find(|c| c.check == name)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("reports are plain JSON")
    }

    /// One line per check: `name: verdict`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}: {}\n", self.check, self.verdict);
        for c in &self.subchecks {
            out.push_str(&format!("  {}: {}\n", c.check, c.verdict));
            for i in &c.implications {
                out.push_str(&format!("    by {i}\n"));
            }
        }
        for i in &self.implications {
            out.push_str(&format!("  {i}\n"));
        }
        out
    }
}

pub const POLY_ACCESSIBLE: &str = "poly.accessible";
pub const POLY_REACHABLE: &str = "poly.algebraically_reachable";
pub const POLY_OBSERVABLE: &str = "poly.semi_algebraically_observable";
pub const SIGMA_ACCESSIBLE: &str = "sigma.accessible";
pub const SIGMA_REACHABLE: &str = "sigma.algebraically_reachable";
pub const SIGMA_SPAN_REACHABLE: &str = "sigma.span_reachable";
pub const SIGMA_WEAKLY_OBSERVABLE: &str = "sigma.weakly_observable";
pub const SIGMA_SIGMA_MINIMAL: &str = "sigma.sigma_minimal";
pub const SIGMA_MINIMAL: &str = "sigma.minimal";

/// Implications between checks: all premises holding forces the conclusion.
pub const RULES: &[(&[&str], &str)] = &[
    (&[POLY_ACCESSIBLE], POLY_REACHABLE),
    (&[POLY_ACCESSIBLE], SIGMA_ACCESSIBLE),
    (&[POLY_REACHABLE], SIGMA_SPAN_REACHABLE),
    (&[POLY_OBSERVABLE], SIGMA_WEAKLY_OBSERVABLE),
    (&[POLY_OBSERVABLE, POLY_REACHABLE], SIGMA_SIGMA_MINIMAL),
    (&[SIGMA_ACCESSIBLE], SIGMA_REACHABLE),
    (&[SIGMA_REACHABLE], SIGMA_SPAN_REACHABLE),
    (&[SIGMA_ACCESSIBLE, SIGMA_WEAKLY_OBSERVABLE], SIGMA_MINIMAL),
];

fn rule_text(premises: &[&str], conclusion: &str) -> String {
    format!("{} => {}", premises.join(" & "), conclusion)
}

/// Applies [`RULES`] forward on "holds" and backward (single-premise rules)
/// on "fails" until nothing changes. Returns the rules that fired.
pub fn apply_implications(checks: &mut [CheckReport]) -> Vec<String> {
    let idx = |checks: &[CheckReport], name: &str| checks.iter().position(|c| c.check == name);
    let mut fired = Vec::new();
    loop {
        let mut changed = false;
        for (premises, conclusion) in RULES {
            let Some(ci) = idx(checks, conclusion) else { continue };
            let pis: Option<Vec<usize>> = premises.iter().map(|p| idx(checks, p)).collect();
            let Some(pis) = pis else { continue };
            if pis.iter().all(|&i| checks[i].verdict.is_holds()) && !checks[ci].verdict.is_decided() {
                let text = rule_text(premises, conclusion);
                checks[ci].verdict = Verdict::Holds;
                checks[ci].implications.push(text.clone());
                fired.push(text);
                changed = true;
            }
            if let [pi] = pis[..] {
                if checks[ci].verdict.is_fails() && !checks[pi].verdict.is_decided() {
                    let text = format!("not {} => not {}", conclusion, premises[0]);
                    checks[pi].verdict = Verdict::Fails;
                    checks[pi].implications.push(text.clone());
                    fired.push(text);
                    changed = true;
                }
            }
        }
        if !changed {
            return fired;
        }
    }
}

/// Rules whose premises all hold while the conclusion fails.
pub fn implication_violations(checks: &[CheckReport]) -> Vec<String> {
    let verdict = |name: &str| checks.iter().find(|c| c.check == name).map(|c| c.verdict);
    RULES
        .iter()
        .filter(|(premises, conclusion)| {
            premises.iter().all(|p| verdict(p) == Some(Verdict::Holds)) && verdict(conclusion) == Some(Verdict::Fails)
        })
        .map(|(p, c)| rule_text(p, c))
        .collect()
}

/// Checks the subchecks of a qualitative report against [`RULES`].
pub fn validate_report(report: &CheckReport) -> std::result::Result<(), Vec<String>> {
    let v = implication_violations(&report.subchecks);
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualitativeConfig {
    /// Bracket and Lie-derivative depth; defaults to the reduced dimension.
    pub depth: Option<usize>,
    pub degree: usize,
    pub samples: Option<usize>,
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
}

impl Default for QualitativeConfig {
    fn default() -> Self {
        QualitativeConfig {
            depth: None,
            degree: 2,
            samples: None,
            horizon: 1.0,
            step: 1e-3,
            seed: DEFAULT_SEED,
        }
    }
}

fn lie_report(check: &str, ev: &LieRankEvidence, target: usize, source: &str) -> CheckReport {
    let verdict = if ev.rank == target {
        Verdict::Holds
    } else if ev.saturated && !ev.capped {
        Verdict::Fails
    } else {
        Verdict::Inconclusive(Some(Bound::Depth(ev.depth)))
    };
    CheckReport::new(check, verdict)
        .with("rank", &ev.rank)
        .with("dimension", &target)
        .with("depth", &ev.depth)
        .with("fields", &ev.num_fields)
        .with("saturated", &ev.saturated)
        .with("capped", &ev.capped)
        .with("singular_values", &ev.singular_values)
        .with("computed_on", source)
}

/// Runs the accessibility, observability and sampled reachability checks on
/// the reduced embedding of `net` and chains their consequences for `net`.
pub fn qualitative_report<C: Coeff>(net: &Network<C>, cfg: &QualitativeConfig) -> Result<CheckReport> {
    let full = embed(net);
    let reduced = full.reduce();
    // The network-level consequences need a lift that keeps every state
    // coordinate, so fall back to the full embedding when reduction froze one.
    let emb: &Embedding<C> = if reduced.lift.state_positions().iter().all(Option::is_some) {
        &reduced
    } else {
        &full
    };
    let p = &emb.system;
    let dim = p.dim();
    let depth = cfg.depth.unwrap_or(dim);
    let state_dim = net.state_dim();
    let lie_cfg = LieRankConfig::with_depth(depth);
    let source = if emb.lift.is_reduced() { "reduced embedding" } else { "full embedding" };

    let mut checks = Vec::new();

    // Trajectories of the embedding stay on the image of the lift, so a
    // dimension above the network state dimension rules accessibility out.
    let lie = lie_rank_with(p.fields(), p.v0(), &lie_cfg)?;
    let mut acc = lie_report(POLY_ACCESSIBLE, &lie, dim, source);
    if dim > state_dim && acc.verdict != Verdict::Fails {
        acc.verdict = Verdict::Fails;
        acc.insert("reason", &format!("embedding dimension {dim} exceeds the state dimension {state_dim}"));
    }
    checks.push(acc);

    // The lift has an injective differential, so bracket ranks at the lifted
    // initial state equal those of the network.
    checks.push(lie_report(SIGMA_ACCESSIBLE, &lie, state_dim, source));

    let tcfg = TrdegConfig {
        seed: cfg.seed,
        ..TrdegConfig::default()
    };
    let gens = observation_generators_until(p, depth, &GeneratorLimits::default(), |g| {
        jacobian_rank(g, &tcfg).rank == dim
    });
    let tr = jacobian_rank(&gens.generators, &tcfg);
    let obs_verdict = if tr.rank == dim {
        Verdict::Holds
    } else if gens.closed && !gens.capped {
        Verdict::Fails
    } else {
        Verdict::Inconclusive(Some(Bound::Depth(gens.depth)))
    };
    checks.push(
        CheckReport::new(POLY_OBSERVABLE, obs_verdict)
            .with("rank", &tr.rank)
            .with("dimension", &dim)
            .with("depth", &gens.depth)
            .with("generators", &gens.generators.len())
            .with("closed", &gens.closed)
            .with("capped", &gens.capped)
            .with("seed", &cfg.seed)
            .with("ranks_per_point", &tr.ranks_per_point)
            .with("singular_values", &tr.singular_values),
    );

    let rcfg = ReachabilityConfig {
        degree: cfg.degree,
        samples: cfg.samples,
        horizon: cfg.horizon,
        step: cfg.step,
        seed: cfg.seed,
        ..ReachabilityConfig::default()
    };
    let poly_reach = sampled_lifted_reachability(emb, &rcfg)?;
    checks.push(poly_reach.to_report(POLY_REACHABLE, dim));

    let net_reach = sampled_network_reachability(net, &rcfg)?;
    checks.push(net_reach.to_report(SIGMA_REACHABLE, state_dim));

    let span = if net_reach.span_rank == state_dim && net_reach.samples_used > 0 {
        Verdict::Holds
    } else {
        Verdict::Inconclusive(None)
    };
    checks.push(
        CheckReport::new(SIGMA_SPAN_REACHABLE, span)
            .with("rank", &net_reach.span_rank)
            .with("dimension", &state_dim)
            .with("samples", &net_reach.samples_used)
            .with("seed", &cfg.seed),
    );

    for name in [SIGMA_WEAKLY_OBSERVABLE, SIGMA_SIGMA_MINIMAL, SIGMA_MINIMAL] {
        checks.push(CheckReport::new(name, Verdict::Inconclusive(None)));
    }

    let fired = apply_implications(&mut checks);
    let minimal = checks
        .iter()
        .find(|c| c.check == SIGMA_SIGMA_MINIMAL)
        .map(|c| c.verdict)
        .expect("check was pushed above");
    let mut report = CheckReport::new("qualitative", minimal)
        .with("network", net.kind())
        .with("state_dimension", &state_dim)
        .with("embedding_dimension", &full.system.dim())
        .with("reduced_dimension", &reduced.system.dim())
        .with("checked_dimension", &dim)
        .with("variables", &p.variables().iter().map(|v| v.label.as_str()).collect::<Vec<_>>())
        .with("config", cfg)
        .with("depth", &depth)
        .with("seed", &cfg.seed);
    report.implications = fired;
    report.subchecks = checks;
    let violations = implication_violations(&report.subchecks);
    report.insert("violations", &violations);
    Ok(report)
}
