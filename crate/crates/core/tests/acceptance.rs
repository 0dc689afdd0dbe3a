//! Acceptance suite. Run with
//! `cargo test -p polyembed --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use polyembed::algebra::{
    accessibility_lie_rank, jacobian_rank, observation_generators, singular_values, transcendence_degree_with,
    ObservationGenerators, TrdegConfig,
};
use polyembed::embedding::{embed, embed_lstm, embed_rnn, Embedding};
use polyembed::fixtures::Fixture;
use polyembed::polynomial::MultiPoly;
use polyembed::simulation::{
    euler_discretize, integrate_network, integrate_poly, random_input_signal, verify_embedding, IntegratorConfig,
};
use polyembed::systems::{spec::parse_input_signal, Activation, InputSignal, Network, OdeLstm};
use polyembed::Rational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Independent network oracle: the vector fields written out from the weights.

fn act(sigma: &Activation<f64>, x: f64) -> f64 {
    match sigma.name() {
        "tanh" => x.tanh(),
        "sigmoid" => 1.0 / (1.0 + (-x).exp()),
        "identity" => x,
        "const0" => 0.0,
        "const1" => 1.0,
        other => panic!("oracle has no activation {other}"),
    }
}

fn act_vec(sigma: &Activation<f64>, v: &DVector<f64>) -> DVector<f64> {
    v.map(|x| act(sigma, x))
}

fn lstm_gates(l: &OdeLstm<f64>, letter: &DVector<f64>, x: &DVector<f64>, z: &DVector<f64>) -> Vec<DVector<f64>> {
    let h = z.component_mul(&act_vec(l.sigma(5), x));
    (1..=4)
        .map(|i| act_vec(l.sigma(i), &(l.u(i) * &h + l.w(i) * letter + l.b(i))))
        .collect()
}

fn oracle_field(net: &Network<f64>, letter: usize, s: &[f64]) -> Vec<f64> {
    match net {
        Network::Rnn(r) => {
            let x = DVector::from_column_slice(s);
            let a = &r.alphabet()[letter];
            act_vec(r.sigma(), &(r.a() * x + r.b() * a)).as_slice().to_vec()
        }
        Network::Lstm(l) => {
            let n = l.n();
            let x = DVector::from_column_slice(&s[..n]);
            let z = DVector::from_column_slice(&s[n..]);
            let g = lstm_gates(l, &l.alphabet()[letter], &x, &z);
            let dx = l.u(0) * &x + g[1].component_mul(&x) + g[2].component_mul(&g[0]);
            dx.iter().chain(g[3].iter()).copied().collect()
        }
    }
}

fn oracle_output(net: &Network<f64>, s: &[f64]) -> Vec<f64> {
    let c = match net {
        Network::Rnn(r) => r.c(),
        Network::Lstm(l) => l.c(),
    };
    (c * DVector::from_column_slice(s)).as_slice().to_vec()
}

/// Classical RK4 of the oracle field over the given grid.
fn oracle_trajectory(net: &Network<f64>, u: &InputSignal, times: &[f64]) -> Vec<Vec<f64>> {
    let axpy = |x: &[f64], a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };
    let mut s: Vec<f64> = net.initial_state();
    let mut out = vec![s.clone()];
    for w in times.windows(2) {
        let (t0, h) = (w[0], w[1] - w[0]);
        let letter = u.input_at(t0).unwrap();
        let k1 = oracle_field(net, letter, &s);
        let k2 = oracle_field(net, letter, &axpy(&s, h / 2.0, &k1));
        let k3 = oracle_field(net, letter, &axpy(&s, h / 2.0, &k2));
        let k4 = oracle_field(net, letter, &axpy(&s, h, &k3));
        for i in 0..s.len() {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(s.clone());
    }
    out
}

fn inf_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max state and output gaps between the lifted oracle trajectory and the
/// embedding trajectory.
fn equivalence_gaps(net: &Network<f64>, emb: &Embedding<f64>, u: &InputSignal, cfg: &IntegratorConfig) -> (f64, f64) {
    let tr = integrate_poly(&emb.system, u, cfg).unwrap();
    let states = oracle_trajectory(net, u, &tr.times);
    let mut gaps = (0.0f64, 0.0f64);
    for (k, s) in states.iter().enumerate() {
        gaps.0 = gaps.0.max(inf_gap(&emb.lift.evaluate(s).unwrap(), &tr.states[k]));
        gaps.1 = gaps.1.max(inf_gap(&oracle_output(net, s), &tr.outputs[k]));
    }
    gaps
}

// ---------------------------------------------------------------------------

fn c1_dimensions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=4 {
        for k in 1..=3 {
            let rnn = embed_rnn(&common::random_rnn(&mut rng, n, 1, k)).system.dim();
            ensure(rnn == k * n + n, || format!("RNN n={n} K={k}: {rnn}"))?;
            let lstm = embed_lstm(&common::random_lstm(&mut rng, n, 1, k)).system.dim();
            ensure(lstm == 4 * n * k + 3 * n, || format!("LSTM n={n} K={k}: {lstm}"))?;
        }
    }
    Ok("Kn+n and 4nK+3n for all 12 (n, K) pairs".into())
}

fn c2_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = IntegratorConfig::new(1e-3, 2.0).unwrap();
    let mut worst = (0.0f64, 0.0f64);
    for i in 0..40 {
        let net = if i < 20 {
            let (n, m, k) = (rng.gen_range(1..=4), rng.gen_range(1..=2), rng.gen_range(1..=3));
            Network::Rnn(common::random_rnn(&mut rng, n, m, k))
        } else {
            let (n, m, k) = (rng.gen_range(1..=3), rng.gen_range(1..=2), rng.gen_range(1..=3));
            Network::Lstm(common::random_lstm(&mut rng, n, m, k))
        };
        let u = random_input_signal(&mut rng, net.num_letters(), 4, 2.0);
        let (sg, og) = equivalence_gaps(&net, &embed(&net), &u, &cfg);
        ensure(sg <= 1e-5 && og <= 1e-6, || format!("{} #{i}: state gap {sg:e}, output gap {og:e}", net.kind()))?;
        let lib = verify_embedding(&net, &u, &cfg).unwrap();
        ensure(lib.max_state_gap <= 1e-5 && lib.max_output_gap <= 1e-6, || {
            format!("verify_embedding #{i}: {lib:?}")
        })?;
        worst = (worst.0.max(sg), worst.1.max(og));
    }
    Ok(format!(
        "20 RNNs + 20 LSTMs: max state gap {:.2e}, max output gap {:.2e}",
        worst.0, worst.1
    ))
}

fn c3_chain_rule() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..200 {
        let net = common::random_network(&mut rng);
        let emb = embed(&net);
        let s = common::random_state(&mut rng, &net);
        let letter = rng.gen_range(0..net.num_letters());
        let f = oracle_field(&net, letter, &s);
        let shifted = |sign: f64| -> Vec<f64> {
            let p: Vec<f64> = s.iter().zip(&f).map(|(s, f)| s + sign * eps * f).collect();
            emb.lift.evaluate(&p).unwrap()
        };
        let (plus, minus) = (shifted(1.0), shifted(-1.0));
        let q = emb.system.field(letter).evaluate(&emb.lift.evaluate(&s).unwrap()).unwrap();
        for g in 0..q.len() {
            let fd = (plus[g] - minus[g]) / (2.0 * eps);
            let err = (fd - q[g]).abs() / q[g].abs().max(1.0);
            ensure(err <= 1e-5, || format!("triple {i}, coordinate {g}: {fd} vs {}", q[g]))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("200 triples, max relative error {worst:.2e}"))
}

fn c4_example2() -> Check {
    let net: Network<Rational> = Fixture::Example2.network();
    let full = embed(&net);
    ensure(full.system.dim() == 11, || format!("full dimension {}", full.system.dim()))?;
    let red = full.reduce();
    ensure(red.system.dim() == 4, || format!("reduced dimension {}", red.system.dim()))?;

    let x = |i: usize| MultiPoly::<Rational>::var(4, i).unwrap();
    let one = MultiPoly::<Rational>::one(4);
    for k in 0..2 {
        let s = x(k);
        // s·x·z + s·z + s·x, with X1, X2 the two letter gates, X3 = x, X4 = z
        let common = &(&(&(&s * &x(2)) * &x(3)) + &(&s * &x(3))) + &(&s * &x(2));
        let want = [
            &(&x(0) * &(&one - &x(0))) * &common,
            &(&x(1) * &(&one - &x(1))) * &common,
            &(&s * &x(2)) + &s,
            s.clone(),
        ];
        let got = red.system.field(k).components();
        for (c, (g, w)) in got.iter().zip(&want).enumerate() {
            ensure(g == w, || format!("letter {k} component {c}: {g} vs {w}"))?;
        }
    }
    ensure(red.system.output() == [x(3)], || format!("output {:?}", red.system.output()))?;

    let sig = |t: f64| 1.0 / (1.0 + (-t).exp());
    let (xs, zs) = (0.37, -0.81);
    let v = red.lift.evaluate(&[xs, zs]).unwrap();
    let want = [sig(xs * zs), sig(xs * zs + 1.0), xs, zs];
    ensure(inf_gap(&v, &want) <= 1e-15, || format!("lift {v:?}"))?;
    Ok("11 -> 4 variables, fields equal the displayed system exactly".into())
}

fn c5_example3() -> Check {
    let net: Network<Rational> = Fixture::Example3.network();
    let red = embed(&net).reduce();
    let rank = accessibility_lie_rank(red.system.fields(), red.system.v0(), 4).map_err(|e| e.to_string())?;
    ensure(rank == 2, || format!("embedding Lie rank {rank}"))?;

    let fnet: Network<f64> = Fixture::Example3.network();
    let f1 = oracle_field(&fnet, 0, &[0.0, 0.0]);
    let f2 = oracle_field(&fnet, 1, &[0.0, 0.0]);
    let sv = singular_values(&[f1.clone(), f2.clone()], 2);
    let det = f1[0] * f2[1] - f1[1] * f2[0];
    ensure(sv[1] > 1e-8 * sv[0] && det.abs() > 1e-3, || format!("network fields {f1:?}, {f2:?}"))?;
    Ok(format!("Lie rank 2 at the initial state (network field determinant {det:.4})"))
}

fn c6_example4() -> Check {
    let net: Network<Rational> = Fixture::Example4.network();
    let red = embed(&net).reduce();
    let g = observation_generators(&red.system, 3);
    ensure(g.depth <= 3, || format!("depth {}", g.depth))?;
    let cfg = TrdegConfig {
        cutoff: 1e-8,
        ..TrdegConfig::default()
    };
    let t = transcendence_degree_with(&g, &cfg).map_err(|e| e.to_string())?;
    ensure(t.rank == 4, || format!("trdeg {} ({:?})", t.rank, t.singular_values))?;
    Ok(format!("trdeg 4 from {} generators up to depth 3", g.generators.len()))
}

fn c7_remark() -> Check {
    let lstm: OdeLstm<f64> = Fixture::Remark.lstm();
    let stepper = euler_discretize(&lstm, 1.0).map_err(|e| e.to_string())?;
    let n = lstm.n();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let letter = rng.gen_range(0..lstm.num_letters());
        let u = &lstm.alphabet()[letter];
        let x = DVector::from_column_slice(&s[..n]);
        let z = DVector::from_column_slice(&s[n..]);
        let sigma2 = lstm.sigma(2);
        let h = z.component_mul(&act_vec(lstm.sigma(5), &x));
        let f = act_vec(sigma2, &(lstm.u(2) * &h + lstm.w(2) * u + lstm.b(2)));
        let i = act_vec(lstm.sigma(3), &(lstm.u(3) * &h + lstm.w(3) * u + lstm.b(3)));
        let g1 = act_vec(lstm.sigma(1), &(lstm.u(1) * &h + lstm.w(1) * u + lstm.b(1)));
        let x1 = &x + f.component_mul(&x) + i.component_mul(&g1);
        let z1 = &z + act_vec(sigma2, &(lstm.u(4) * &h + lstm.w(4) * u + lstm.b(4)));
        let want: Vec<f64> = x1.iter().chain(z1.iter()).copied().collect();
        let got = stepper.step(&s, letter);
        worst = worst.max(inf_gap(&got, &want));
        ensure(stepper.output(&s) == s[n..], || "output is not z".into())?;
    }
    ensure(worst <= 1e-15, || format!("max coordinate gap {worst:e}"))?;
    Ok(format!("100 pairs, max coordinate gap {worst:.2e}"))
}

/// `x(t)` of `ẋ = Mx + c` from `x0`, via the exponential of the augmented
/// matrix `[[M, c], [0, 0]]`.
fn affine_flow(m: &DMatrix<f64>, c: &DVector<f64>, x0: &DVector<f64>, t: f64) -> DVector<f64> {
    let n = m.nrows();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&(m * t));
    a.view_mut((0, n), (n, 1)).copy_from(&(c * t));
    let e = a.exp();
    e.view((0, 0), (n, n)) * x0 + e.view((0, n), (n, 1))
}

fn c8_linear() -> Check {
    let net: Network<f64> = Fixture::Linear.network();
    let lstm: OdeLstm<f64> = Fixture::Linear.lstm();
    let n = lstm.n();
    let m = lstm.u(0) + lstm.u(1) * DMatrix::from_diagonal(lstm.z0());
    let u = parse_input_signal(Fixture::Linear.input_json()).unwrap();
    let cfg = IntegratorConfig::new(1e-3, 1.0).unwrap();
    let tr = integrate_network(&net, &u, &cfg).unwrap();

    // constant pieces (start, letter) and the closed-form state at each start
    let mut pieces = Vec::new();
    let mut t0 = 0.0;
    for &(d, letter) in u.segments() {
        pieces.push((t0, letter));
        t0 += d;
    }
    pieces.push((t0, u.tail()));
    let drive = |letter: usize| lstm.w(1) * &lstm.alphabet()[letter];
    let mut starts = vec![lstm.x0().clone()];
    for w in pieces.windows(2) {
        let next = affine_flow(&m, &drive(w[0].1), starts.last().unwrap(), w[1].0 - w[0].0);
        starts.push(next);
    }

    let mut worst = 0.0f64;
    for (t, s) in tr.times.iter().zip(&tr.states) {
        let i = pieces.iter().rposition(|&(a, _)| a <= *t).unwrap();
        let (a, letter) = pieces[i];
        let x = affine_flow(&m, &drive(letter), &starts[i], t - a);
        worst = worst.max(inf_gap(&s[..n], x.as_slice()));
        ensure(s[n..] == *lstm.z0().as_slice(), || format!("z moved at t = {t}"))?;
    }
    ensure(worst <= 1e-6, || format!("gap to the closed form {worst:e}"))?;

    let (sg, og) = equivalence_gaps(&net, &embed(&net), &u, &IntegratorConfig::new(1e-3, 2.0).unwrap());
    ensure(sg <= 1e-5 && og <= 1e-6, || format!("embedding gaps {sg:e}, {og:e}"))?;
    Ok(format!(
        "gap to the matrix exponential {worst:.2e}; embedding gaps {sg:.2e} / {og:.2e}"
    ))
}

fn trdeg(polys: &[MultiPoly<Rational>]) -> usize {
    let g = ObservationGenerators {
        depth: 0,
        generators: polys.to_vec(),
        closed: false,
        capped: false,
    };
    transcendence_degree_with(&g, &TrdegConfig::default()).unwrap().rank
}

fn c9_trdeg() -> Check {
    let var = |n: usize, i: usize| MultiPoly::<Rational>::var(n, i).unwrap();
    for n in 1..=8 {
        let t = trdeg(&(0..n).map(|i| var(n, i)).collect::<Vec<_>>());
        ensure(t == n, || format!("coordinates of R^{n}: {t}"))?;
    }
    let t = trdeg(&[var(2, 0), var(2, 1), &var(2, 0) * &var(2, 1)]);
    ensure(t == 2, || format!("{{X1, X2, X1X2}}: {t}"))?;
    let t = trdeg(&[var(1, 0).pow(2)]);
    ensure(t == 1, || format!("{{X1^2}}: {t}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let q = |a: i64, b: i64| Rational::new(BigInt::from(a), BigInt::from(b));
    for suite in 0..50 {
        let n = rng.gen_range(1..=4);
        let gens: Vec<MultiPoly<Rational>> = (0..rng.gen_range(1..=5))
            .map(|_| {
                let terms: Vec<(Vec<u32>, Rational)> = (0..rng.gen_range(1..=3))
                    .map(|_| ((0..n).map(|_| rng.gen_range(0..=2)).collect(), q(rng.gen_range(-5..=5), rng.gen_range(1..=3))))
                    .collect();
                MultiPoly::from_terms(n, terms).unwrap()
            })
            .collect();
        let base = trdeg(&gens);
        let mut permuted = gens.clone();
        permuted.shuffle(&mut rng);
        let scaled: Vec<_> = gens
            .iter()
            .map(|g| g.scale(&q(rng.gen_range(1..=7) * if rng.gen_bool(0.5) { -1 } else { 1 }, rng.gen_range(1..=5))))
            .collect();
        let mut augmented = gens.clone();
        for _ in 0..2 {
            let a = &gens[rng.gen_range(0..gens.len())];
            let b = &gens[rng.gen_range(0..gens.len())];
            augmented.push(a + b);
            augmented.push(a * b);
        }
        for (what, t) in [("permuted", trdeg(&permuted)), ("scaled", trdeg(&scaled)), ("augmented", trdeg(&augmented))] {
            ensure(t == base, || format!("suite {suite} {what}: {t} vs {base}"))?;
        }
        let ev = jacobian_rank(&gens, &TrdegConfig::default());
        ensure(ev.rank <= n, || format!("suite {suite}: rank {} over {n} variables", ev.rank))?;
    }
    Ok("oracle cases exact; invariant on 50 random suites".into())
}

fn c10_order() -> Check {
    let net: Network<f64> = Fixture::Example4.network();
    let u = parse_input_signal(Fixture::Example4.input_json()).unwrap();
    let gap = |step: f64| verify_embedding(&net, &u, &IntegratorConfig::new(step, 2.0).unwrap()).unwrap().max_state_gap;
    let (coarse, fine) = (gap(0.05), gap(0.025));
    let ratio = coarse / fine;
    ensure(ratio >= 8.0, || format!("gap {coarse:e} at step 0.05, {fine:e} at 0.025, ratio {ratio:.2}"))?;
    Ok(format!("state gap {coarse:.2e} -> {fine:.2e} when halving the step (ratio {ratio:.1})"))
}

fn run(id: usize, title: &str, budget: Duration, check: fn() -> Check) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let elapsed = start.elapsed();
    let (tag, detail) = match &result {
        Ok(d) => ("PASS", d.as_str()),
        Err(e) => ("FAIL", e.as_str()),
    };
    let slow = if elapsed > budget { " (over time budget)" } else { "" };
    println!("{tag} criterion {id:>2} {title}: {detail} [{:.2}s{slow}]", elapsed.as_secs_f64());
    result.is_ok()
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let results = [
        run(1, "embedding dimensions", s(1), c1_dimensions),
        run(2, "embedding equivalence", s(30), c2_equivalence),
        run(3, "chain-rule consistency", s(10), c3_chain_rule),
        run(4, "example 2 reduction", s(1), c4_example2),
        run(5, "example 3 accessibility", s(1), c5_example3),
        run(6, "example 4 observability", s(5), c6_example4),
        run(7, "remark discretization", s(1), c7_remark),
        run(8, "linear special case", s(5), c8_linear),
        run(9, "transcendence degree oracles", s(5), c9_trdeg),
        run(10, "RK4 order", s(10), c10_order),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    assert_eq!(passed, results.len());
}
