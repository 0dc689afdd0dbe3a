use super::lift::{describe, label, LiftCoord, LiftMap};
use super::{Embedding, LstmIndexMap, RnnIndexMap};
use crate::coeff::Coeff;
use crate::polynomial::{MultiPoly, PolyVectorField};
use crate::systems::{Activation, Network, OdeLstm, OdeRnn, PolySystem, Variable};

fn var<C: Coeff>(dim: usize, i: usize) -> MultiPoly<C> {
    MultiPoly::var(dim, i).expect("variable index within the embedding")
}

/// `P(X_i)` for the characteristic polynomial of `sigma`.
fn char_at<C: Coeff>(sigma: &Activation<C>, dim: usize, i: usize) -> MultiPoly<C> {
    sigma
        .characteristic()
        .compose_univariate(dim, i)
        .expect("characteristic polynomials are univariate")
}

fn linear_form<C: Coeff>(dim: usize, terms: impl IntoIterator<Item = (C, usize)>) -> MultiPoly<C> {
    let mut acc = MultiPoly::zero(dim);
    for (c, i) in terms {
        if !c.is_zero() {
            acc = &acc + &var::<C>(dim, i).scale(&c);
        }
    }
    acc
}

/// Whether `σ(v)` is exactly representable from exact `v`.
fn evaluates_exactly<C: Coeff>(sigma: &Activation<C>) -> bool {
    sigma.constant_value().is_some() || sigma.is_identity()
}

fn variables<C: Coeff>(net: &Network<C>, coords: &[LiftCoord]) -> Vec<Variable> {
    coords
        .iter()
        .map(|&c| Variable::new(label(net, c), describe(net, c)))
        .collect()
}

pub fn embed_rnn<C: Coeff>(net: &OdeRnn<C>) -> Embedding<C> {
    let (n, k) = (net.n(), net.num_letters());
    let idx = RnnIndexMap::new(n, k);
    let dim = idx.dim();
    let x = |j: usize| k * n + j;
    let a = net.a();
    let sigma = net.sigma();

    let fields = (0..k)
        .map(|rho| {
            let mut comps = Vec::with_capacity(dim);
            for i in 0..k * n {
                let (r, j) = idx.letter_row(i);
                debug_assert_eq!(idx.index(r, j), i);
                let drive = linear_form(dim, (0..n).map(|kk| (a[(j, kk)].clone(), idx.index(rho, kk))));
                comps.push(&char_at(sigma, dim, i) * &drive);
            }
            for j in 0..n {
                comps.push(var(dim, idx.index(rho, j)));
            }
            PolyVectorField::new(dim, comps).expect("components share the embedding ring")
        })
        .collect();

    let output = (0..net.p())
        .map(|row| linear_form(dim, (0..n).map(|j| (net.c()[(row, j)].clone(), x(j)))))
        .collect();

    let mut coords: Vec<LiftCoord> = (0..k * n)
        .map(|i| {
            let (r, j) = idx.letter_row(i);
            LiftCoord::RnnGate { j, r }
        })
        .collect();
    coords.extend((0..n).map(|i| LiftCoord::State { i }));

    let network = Network::Rnn(net.clone());
    let lift = LiftMap::full(network.clone(), coords.clone());
    let x0: Vec<f64> = net.x0().iter().map(Coeff::to_f64).collect();
    let v0 = lift.evaluate(&x0).expect("x0 has the network dimension");
    let mut approx = vec![!evaluates_exactly(sigma); k * n];
    approx.extend(std::iter::repeat_n(false, n));
    let system = PolySystem::new(fields, output, v0, approx, variables(&network, &coords))
        .expect("embedding is dimensionally consistent");
    Embedding { system, lift }
}

pub fn embed_lstm<C: Coeff>(net: &OdeLstm<C>) -> Embedding<C> {
    let (n, k) = (net.n(), net.num_letters());
    let idx = LstmIndexMap::new(n, k);
    let dim = idx.dim();
    let s5 = |j: usize| 4 * n * k + j;
    let xv = |j: usize| 4 * n * k + n + j;
    let zv = |j: usize| 4 * n * k + 2 * n + j;
    let v = |i: usize| var::<C>(dim, i);
    let sigma5 = net.sigma(5);
    let p5: Vec<MultiPoly<C>> = (0..n).map(|j| char_at(sigma5, dim, s5(j))).collect();
    let gate_chars: Vec<MultiPoly<C>> = (0..4 * n * k)
        .map(|i| {
            let (g, _, _) = idx.gate_row_letter(i);
            char_at(net.sigma(g), dim, i)
        })
        .collect();

    let fields = (0..k)
        .map(|rho| {
            let g = |gate: usize, j: usize| v(idx.index(gate, j, rho));
            // Q_j: the x-derivative under the active letter
            let q: Vec<MultiPoly<C>> = (0..n)
                .map(|j| {
                    let lin = linear_form(dim, (0..n).map(|i| (net.u(0)[(j, i)].clone(), xv(i))));
                    &(&lin + &(&g(2, j) * &v(xv(j)))) + &(&g(3, j) * &g(1, j))
                })
                .collect();
            // d/dt h_i = g4_i * σ5(x_i) + z_i * Q_i * P5(σ5(x_i))
            let hdot: Vec<MultiPoly<C>> = (0..n)
                .map(|i| &(&g(4, i) * &v(s5(i))) + &(&(&v(zv(i)) * &q[i]) * &p5[i]))
                .collect();
            // drive[gate][j] = Σ_i U^gate_{j,i} ḣ_i, shared by every letter index r
            let drive: Vec<Vec<MultiPoly<C>>> = (1..=4)
                .map(|gate| {
                    (0..n)
                        .map(|j| {
                            let mut acc = MultiPoly::zero(dim);
                            for (i, hd) in hdot.iter().enumerate() {
                                let c = &net.u(gate)[(j, i)];
                                if !c.is_zero() {
                                    acc = &acc + &hd.scale(c);
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect();
            let mut comps = Vec::with_capacity(dim);
            for (i, pc) in gate_chars.iter().enumerate() {
                let (gate, j, _) = idx.gate_row_letter(i);
                comps.push(pc * &drive[gate - 1][j]);
            }
            for j in 0..n {
                comps.push(&q[j] * &p5[j]);
            }
            comps.extend(q.iter().cloned());
            comps.extend((0..n).map(|j| g(4, j)));
            PolyVectorField::new(dim, comps).expect("components share the embedding ring")
        })
        .collect();

    let output = (0..net.p())
        .map(|row| {
            linear_form(
                dim,
                (0..n)
                    .map(|j| (net.c()[(row, j)].clone(), xv(j)))
                    .chain((0..n).map(|j| (net.c()[(row, n + j)].clone(), zv(j)))),
            )
        })
        .collect();

    let mut coords: Vec<LiftCoord> = (0..4 * n * k)
        .map(|i| {
            let (gate, j, r) = idx.gate_row_letter(i);
            LiftCoord::LstmGate { gate, j, r }
        })
        .collect();
    coords.extend((0..n).map(|j| LiftCoord::Sigma5 { j }));
    coords.extend((0..2 * n).map(|i| LiftCoord::State { i }));

    let network = Network::Lstm(net.clone());
    let lift = LiftMap::full(network.clone(), coords.clone());
    let s0: Vec<f64> = net.x0().iter().chain(net.z0().iter()).map(Coeff::to_f64).collect();
    let v0 = lift.evaluate(&s0).expect("s0 has the network dimension");
    let mut approx: Vec<bool> = (0..4 * n * k)
        .map(|i| {
            let (gate, _, _) = idx.gate_row_letter(i);
            // gate arguments involve σ5(x0) unless σ5 is exact
            !(evaluates_exactly(net.sigma(gate))
                && (net.sigma(gate).constant_value().is_some() || evaluates_exactly(sigma5)))
        })
        .collect();
    approx.extend(std::iter::repeat_n(!evaluates_exactly(sigma5), n));
    approx.extend(std::iter::repeat_n(false, 2 * n));
    let system = PolySystem::new(fields, output, v0, approx, variables(&network, &coords))
        .expect("embedding is dimensionally consistent");
    Embedding { system, lift }
}
