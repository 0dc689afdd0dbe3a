mod common;

use num_bigint::BigInt;
use polyembed::algebra::{
    accessibility_lie_rank, jacobian_rank, qualitative_report, sampled_lifted_reachability, sampled_poly_reachability,
    transcendence_degree, validate_report, ObservationGenerators, QualitativeConfig, ReachabilityConfig, TrdegConfig,
    Verdict, SIGMA_SIGMA_MINIMAL,
};
use polyembed::embedding::embed;
use polyembed::fixtures::Fixture;
use polyembed::polynomial::{MultiPoly, PolyVectorField};
use polyembed::simulation::{integrate_network, integrate_poly, random_input_signal, IntegratorConfig};
use polyembed::systems::{Network, PolySystem};
use polyembed::Rational;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rational() -> impl Strategy<Value = Rational> {
    (-5i64..=5, 1i64..=3).prop_map(|(a, b)| Rational::new(BigInt::from(a), BigInt::from(b)))
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    (1i64..=7, 1i64..=5, any::<bool>())
        .prop_map(|(a, b, neg)| Rational::new(BigInt::from(if neg { -a } else { a }), BigInt::from(b)))
}

fn poly(n: usize, max_exp: u32, max_terms: usize) -> impl Strategy<Value = MultiPoly<Rational>> {
    prop::collection::vec((prop::collection::vec(0..=max_exp, n), rational()), 1..=max_terms)
        .prop_map(move |terms| MultiPoly::from_terms(n, terms).unwrap())
}

fn suite() -> impl Strategy<Value = (usize, Vec<MultiPoly<Rational>>)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(poly(n, 2, 3), 1..=5)))
}

fn trdeg(polys: &[MultiPoly<Rational>]) -> usize {
    let g = ObservationGenerators {
        depth: 0,
        generators: polys.to_vec(),
        closed: false,
        capped: false,
    };
    transcendence_degree(&g).unwrap()
}

fn fields(n: usize) -> impl Strategy<Value = Vec<PolyVectorField<Rational>>> {
    prop::collection::vec(
        prop::collection::vec(poly(n, 2, 2), n).prop_map(move |c| PolyVectorField::new(n, c).unwrap()),
        1..=3,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn trdeg_is_invariant(
        (n, gens) in suite(),
        seed in any::<u64>(),
        scales in prop::collection::vec(nonzero_rational(), 5),
    ) {
        let base = trdeg(&gens);
        prop_assert!(base <= n && base <= gens.len());

        let mut permuted = gens.clone();
        permuted.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(trdeg(&permuted), base);

        let scaled: Vec<_> = gens.iter().zip(&scales).map(|(g, s)| g.scale(s)).collect();
        prop_assert_eq!(trdeg(&scaled), base);

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut augmented = gens.clone();
        for _ in 0..3 {
            let a = &gens[rng.gen_range(0..gens.len())];
            let b = &gens[rng.gen_range(0..gens.len())];
            augmented.push(a * b);
            augmented.push(a + b);
        }
        prop_assert_eq!(trdeg(&augmented), base);
    }

    #[test]
    fn lie_rank_is_bounded_and_monotone(fs in fields(3), x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let mut prev = 0;
        for depth in 0..=3 {
            let r = accessibility_lie_rank(&fs, &x, depth).unwrap();
            prop_assert!(r <= 3);
            prop_assert!(r >= prev, "rank dropped from {prev} to {r} at depth {depth}");
            prev = r;
        }
    }
}

#[test]
fn trdeg_of_coordinates() {
    for n in 1..=8 {
        let gens: Vec<MultiPoly<Rational>> = (0..n).map(|i| MultiPoly::var(n, i).unwrap()).collect();
        assert_eq!(trdeg(&gens), n);
    }
}

#[test]
fn generic_rank_is_stable_across_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 100;
    let mut stable = 0;
    for t in 0..trials {
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=5);
        let gens: Vec<MultiPoly<f64>> = (0..k)
            .map(|_| {
                let terms = (0..rng.gen_range(1..=3))
                    .map(|_| ((0..n).map(|_| rng.gen_range(0..=2)).collect(), rng.gen_range(-2.0..2.0)))
                    .collect::<Vec<(Vec<u32>, f64)>>();
                MultiPoly::from_terms(n, terms).unwrap()
            })
            .collect();
        let cfg = TrdegConfig {
            seed: t,
            ..TrdegConfig::default()
        };
        let ev = jacobian_rank(&gens, &cfg);
        assert!(ev.ranks_per_point.len() >= 5);
        assert_eq!(ev.rank, *ev.ranks_per_point.iter().max().unwrap());
        if ev.ranks_per_point.iter().all(|&r| r == ev.rank) {
            stable += 1;
        }
    }
    assert!(stable * 100 >= 95 * trials, "only {stable}/{trials} trials had a stable rank");
}

/// Switching between rotations with different speeds keeps `X1² + X2²` fixed.
fn rotations(speeds: &[i64], x0: Vec<f64>) -> PolySystem<Rational> {
    let fields = speeds
        .iter()
        .map(|&w| {
            let c = Rational::from_integer(BigInt::from(w));
            let x1 = MultiPoly::var(2, 0).unwrap();
            let x2 = MultiPoly::var(2, 1).unwrap();
            PolyVectorField::new(2, vec![x2.scale(&c), x1.scale(&-c)]).unwrap()
        })
        .collect();
    PolySystem::with_default_labels(fields, vec![MultiPoly::var(2, 0).unwrap()], x0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn vanishing_polynomial_holds_on_fresh_states(
        w1 in 1i64..=3,
        w2 in 1i64..=3,
        x0 in prop::collection::vec(0.2f64..1.0, 2),
        seed in any::<u64>(),
    ) {
        let sys = rotations(&[w1, -w2], x0);
        let cfg = ReachabilityConfig { seed, ..ReachabilityConfig::default() };
        let out = sampled_poly_reachability(&sys, &cfg).unwrap();
        prop_assert_eq!(out.verdict, Verdict::Fails);
        let q = out.vanishing.clone().unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        for _ in 0..10 * out.samples_requested {
            let horizon = rng.gen_range(0.05..1.0);
            let u = random_input_signal(&mut rng, 2, 3, horizon);
            let icfg = IntegratorConfig::new(1e-3, horizon).unwrap();
            let tr = integrate_poly(&sys, &u, &icfg).unwrap();
            let r = q.evaluate(tr.final_state()).unwrap().abs();
            prop_assert!(r <= 1e-6, "residual {r}");
        }
    }
}

#[test]
fn lifted_vanishing_polynomial_holds_on_fresh_states() {
    let net: Network<f64> = Fixture::Example3.network();
    let emb = embed(&net).reduce();
    let out = sampled_lifted_reachability(&emb, &ReachabilityConfig::default()).unwrap();
    assert_eq!(out.verdict, Verdict::Fails);
    let q = out.vanishing.clone().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 * out.samples_requested {
        let horizon = rng.gen_range(0.05..1.0);
        let u = random_input_signal(&mut rng, net.num_letters(), 4, horizon);
        let tr = integrate_network(&net, &u, &IntegratorConfig::new(1e-3, horizon).unwrap()).unwrap();
        let v = emb.lift.evaluate(tr.final_state()).unwrap();
        let r = q.evaluate(&v).unwrap().abs();
        assert!(r <= 1e-6, "residual {r} for {}", out.vanishing_polynomial.as_deref().unwrap());
    }
}

fn assert_consistent(name: &str, net: &Network<f64>, cfg: &QualitativeConfig) {
    let report = qualitative_report(net, cfg).unwrap();
    if let Err(v) = validate_report(&report) {
        panic!("{name}: implication violations {v:?}");
    }
    assert_eq!(report.verdict, report.subcheck(SIGMA_SIGMA_MINIMAL).unwrap().verdict);
    for c in &report.subchecks {
        if c.verdict.is_decided() {
            assert!(
                !c.evidence.is_empty() || !c.implications.is_empty(),
                "{name}: {} is {} without evidence",
                c.check,
                c.verdict
            );
        }
    }
}

#[test]
fn fixture_reports_are_consistent() {
    let cfg = QualitativeConfig::default();
    for f in [Fixture::Example1, Fixture::Example2, Fixture::Example3, Fixture::Example4, Fixture::Linear] {
        assert_consistent(f.name(), &f.network(), &cfg);
    }
}

#[test]
fn random_reports_are_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = QualitativeConfig {
        depth: Some(3),
        ..QualitativeConfig::default()
    };
    for i in 0..6 {
        let n = rng.gen_range(1..=2);
        let k = rng.gen_range(1..=2);
        let net = Network::Rnn(common::random_rnn(&mut rng, n, 1, k));
        assert_consistent(&format!("random rnn {i}"), &net, &cfg);
    }
    let net = Network::Lstm(common::reducible_lstm(&mut rng, 1, 1, 2));
    assert_consistent("random lstm", &net, &cfg);
}
