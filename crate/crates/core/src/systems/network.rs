//! ODE-RNN and ODE-LSTM networks over a finite input alphabet.

use nalgebra::{DMatrix, DVector};

use super::activation::Activation;
use crate::coeff::Coeff;
use crate::error::{Error, Result};

fn check_shape<C>(m: &DMatrix<C>, rows: usize, cols: usize, field: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::spec(
            field,
            format!("expected {rows}x{cols} matrix, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn check_len<C>(v: &DVector<C>, len: usize, field: &str) -> Result<()> {
    if v.len() != len {
        return Err(Error::spec(field, format!("expected length {len}, got {}", v.len())));
    }
    Ok(())
}

fn check_alphabet<C: Coeff>(alphabet: &[DVector<C>], m: usize) -> Result<()> {
    if alphabet.is_empty() {
        return Err(Error::spec("alphabet", "the input alphabet needs at least one letter"));
    }
    for (r, letter) in alphabet.iter().enumerate() {
        check_len(letter, m, &format!("alphabet[{r}]"))?;
        if let Some(prev) = alphabet[..r].iter().position(|l| l == letter) {
            return Err(Error::spec(
                format!("alphabet[{r}]"),
                format!("duplicate of alphabet[{prev}]"),
            ));
        }
    }
    Ok(())
}

pub(crate) fn to_f64_matrix<C: Coeff>(m: &DMatrix<C>) -> DMatrix<f64> {
    m.map(|c| c.to_f64())
}

pub(crate) fn to_f64_vector<C: Coeff>(v: &DVector<C>) -> Vec<f64> {
    v.iter().map(Coeff::to_f64).collect()
}

#[inline]
fn mat_vec_into(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate() {
            acc += m[(i, j)] * xj;
        }
        *o = acc;
    }
}

/// `y = Cx`, summed last column first like the canonical (ascending
/// graded-lex) form of the output polynomials, so both agree bitwise.
fn output_into(c: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate().rev() {
            let cij = c[(i, j)];
            if cij != 0.0 {
                acc += cij * xj;
            }
        }
        *o = acc;
    }
}

/// `ẋ = σ(Ax + Bu)`, `y = Cx`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeRnn<C: Coeff> {
    a: DMatrix<C>,
    b: DMatrix<C>,
    c: DMatrix<C>,
    sigma: Activation<C>,
    x0: DVector<C>,
    alphabet: Vec<DVector<C>>,
}

impl<C: Coeff> OdeRnn<C> {
    pub fn new(
        a: DMatrix<C>,
        b: DMatrix<C>,
        c: DMatrix<C>,
        sigma: Activation<C>,
        x0: DVector<C>,
        alphabet: Vec<DVector<C>>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::spec("A", "state dimension must be positive"));
        }
        check_shape(&a, n, n, "A")?;
        let m = b.ncols();
        check_shape(&b, n, m, "B")?;
        check_shape(&c, c.nrows(), n, "C")?;
        check_len(&x0, n, "x0")?;
        check_alphabet(&alphabet, m)?;
        Ok(OdeRnn {
            a,
            b,
            c,
            sigma,
            x0,
            alphabet,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn num_letters(&self) -> usize {
        self.alphabet.len()
    }

    pub fn a(&self) -> &DMatrix<C> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<C> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<C> {
        &self.c
    }

    pub fn sigma(&self) -> &Activation<C> {
        &self.sigma
    }

    pub fn x0(&self) -> &DVector<C> {
        &self.x0
    }

    pub fn alphabet(&self) -> &[DVector<C>] {
        &self.alphabet
    }

    pub fn numeric(&self) -> NumericRnn<C> {
        let b = to_f64_matrix(&self.b);
        let drives = self
            .alphabet
            .iter()
            .map(|l| {
                let mut d = vec![0.0; self.n()];
                mat_vec_into(&b, &to_f64_vector(l), &mut d);
                d
            })
            .collect();
        NumericRnn {
            a: to_f64_matrix(&self.a),
            b,
            c: to_f64_matrix(&self.c),
            sigma: self.sigma.clone(),
            x0: to_f64_vector(&self.x0),
            drives,
        }
    }

    /// `σ(Ax + B·letter)` for an arbitrary input vector.
    pub fn vector_field(&self, letter: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        if letter.len() != self.m() {
            return Err(Error::DimensionMismatch {
                context: "input letter",
                expected: self.m(),
                found: letter.len(),
            });
        }
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                context: "RNN state",
                expected: self.n(),
                found: x.len(),
            });
        }
        let num = self.numeric();
        let mut drive = vec![0.0; self.n()];
        mat_vec_into(&num.b, letter, &mut drive);
        let mut out = vec![0.0; self.n()];
        num.field_with_drive(&drive, x, &mut out);
        Ok(out)
    }
}

/// Double-precision view of an [`OdeRnn`] with the per-letter input terms
/// `Bα_r` precomputed.
#[derive(Debug, Clone)]
pub struct NumericRnn<C: Coeff> {
    pub(crate) a: DMatrix<f64>,
    pub(crate) b: DMatrix<f64>,
    pub(crate) c: DMatrix<f64>,
    pub(crate) sigma: Activation<C>,
    pub(crate) x0: Vec<f64>,
    pub(crate) drives: Vec<Vec<f64>>,
}

impl<C: Coeff> NumericRnn<C> {
    #[inline]
    pub(crate) fn field_with_drive(&self, drive: &[f64], x: &[f64], out: &mut [f64]) {
        mat_vec_into(&self.a, x, out);
        for (o, d) in out.iter_mut().zip(drive) {
            *o = self.sigma.value(*o + d);
        }
    }

    pub fn field(&self, letter: usize, x: &[f64], out: &mut [f64]) {
        self.field_with_drive(&self.drives[letter], x, out);
    }

    pub fn output(&self, x: &[f64], out: &mut [f64]) {
        output_into(&self.c, x, out);
    }
}

/// ODE-LSTM:
/// `ẋ = U⁰x + g²⊙x + g³⊙g¹`, `ż = g⁴`, `y = C(x, z)`, with
/// `h = z ⊙ σ₅(x)` and gates `gⁱ = σᵢ(Uⁱh + Wⁱu + bⁱ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeLstm<C: Coeff> {
    u: Vec<DMatrix<C>>,
    w: Vec<DMatrix<C>>,
    b: Vec<DVector<C>>,
    c: DMatrix<C>,
    sigmas: Vec<Activation<C>>,
    x0: DVector<C>,
    z0: DVector<C>,
    alphabet: Vec<DVector<C>>,
}

pub struct LstmParts<C: Coeff> {
    /// `U⁰..U⁴`, each `n×n`.
    pub u: Vec<DMatrix<C>>,
    /// `W¹..W⁴`, each `n×m`.
    pub w: Vec<DMatrix<C>>,
    /// `b¹..b⁴`.
    pub b: Vec<DVector<C>>,
    /// `p×2n`.
    pub c: DMatrix<C>,
    /// `σ₁..σ₅`.
    pub sigmas: Vec<Activation<C>>,
    pub x0: DVector<C>,
    pub z0: DVector<C>,
    pub alphabet: Vec<DVector<C>>,
}

impl<C: Coeff> OdeLstm<C> {
    pub fn new(parts: LstmParts<C>) -> Result<Self> {
        let LstmParts {
            u,
            w,
            b,
            c,
            sigmas,
            x0,
            z0,
            alphabet,
        } = parts;
        if u.len() != 5 {
            return Err(Error::spec("U", format!("expected 5 matrices, got {}", u.len())));
        }
        if w.len() != 4 {
            return Err(Error::spec("W", format!("expected 4 matrices, got {}", w.len())));
        }
        if b.len() != 4 {
            return Err(Error::spec("b", format!("expected 4 vectors, got {}", b.len())));
        }
        if sigmas.len() != 5 {
            return Err(Error::spec(
                "sigmas",
                format!("expected 5 activations, got {}", sigmas.len()),
            ));
        }
        let n = u[0].nrows();
        if n == 0 {
            return Err(Error::spec("U[0]", "state dimension must be positive"));
        }
        for (i, ui) in u.iter().enumerate() {
            check_shape(ui, n, n, &format!("U[{i}]"))?;
        }
        let m = w[0].ncols();
        for (i, wi) in w.iter().enumerate() {
            check_shape(wi, n, m, &format!("W[{i}]"))?;
        }
        for (i, bi) in b.iter().enumerate() {
            check_len(bi, n, &format!("b[{i}]"))?;
        }
        check_shape(&c, c.nrows(), 2 * n, "C")?;
        check_len(&x0, n, "x0")?;
        check_len(&z0, n, "z0")?;
        check_alphabet(&alphabet, m)?;
        Ok(OdeLstm {
            u,
            w,
            b,
            c,
            sigmas,
            x0,
            z0,
            alphabet,
        })
    }

    pub fn n(&self) -> usize {
        self.u[0].nrows()
    }

    pub fn m(&self) -> usize {
        self.w[0].ncols()
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn num_letters(&self) -> usize {
        self.alphabet.len()
    }

    /// `U⁰..U⁴` indexed by `0..=4`.
    pub fn u(&self, l: usize) -> &DMatrix<C> {
        &self.u[l]
    }

    /// `W¹..W⁴` indexed by gate `1..=4`.
    pub fn w(&self, gate: usize) -> &DMatrix<C> {
        &self.w[gate - 1]
    }

    /// `b¹..b⁴` indexed by gate `1..=4`.
    pub fn b(&self, gate: usize) -> &DVector<C> {
        &self.b[gate - 1]
    }

    pub fn c(&self) -> &DMatrix<C> {
        &self.c
    }

    /// `σ₁..σ₅` indexed by `1..=5`.
    pub fn sigma(&self, index: usize) -> &Activation<C> {
        &self.sigmas[index - 1]
    }

    pub fn x0(&self) -> &DVector<C> {
        &self.x0
    }

    pub fn z0(&self) -> &DVector<C> {
        &self.z0
    }

    pub fn alphabet(&self) -> &[DVector<C>] {
        &self.alphabet
    }

    /// Exact input-dependent part `Wˡα + bˡ` of gate `l` for an arbitrary
    /// input vector.
    pub fn gate_offset(&self, gate: usize, letter: &DVector<C>) -> DVector<C> {
        let w = self.w(gate);
        let b = self.b(gate);
        DVector::from_fn(self.n(), |j, _| {
            let mut acc = b[j].clone();
            for k in 0..self.m() {
                acc = acc + w[(j, k)].clone() * letter[k].clone();
            }
            acc
        })
    }

    pub fn numeric(&self) -> NumericLstm<C> {
        let w: Vec<DMatrix<f64>> = self.w.iter().map(to_f64_matrix).collect();
        let b: Vec<Vec<f64>> = self.b.iter().map(to_f64_vector).collect();
        let drives = self
            .alphabet
            .iter()
            .map(|l| {
                let lf = to_f64_vector(l);
                (0..4)
                    .map(|g| gate_drive(&w[g], &b[g], &lf))
                    .collect::<Vec<_>>()
            })
            .collect();
        NumericLstm {
            n: self.n(),
            u: self.u.iter().map(to_f64_matrix).collect(),
            w,
            b,
            c: to_f64_matrix(&self.c),
            sigmas: self.sigmas.clone(),
            s0: to_f64_vector(&self.x0)
                .into_iter()
                .chain(to_f64_vector(&self.z0))
                .collect(),
            drives,
        }
    }

    /// Vector field at state `s = (x, z)` for an arbitrary input vector.
    pub fn vector_field(&self, letter: &[f64], s: &[f64]) -> Result<Vec<f64>> {
        if letter.len() != self.m() {
            return Err(Error::DimensionMismatch {
                context: "input letter",
                expected: self.m(),
                found: letter.len(),
            });
        }
        if s.len() != 2 * self.n() {
            return Err(Error::DimensionMismatch {
                context: "LSTM state",
                expected: 2 * self.n(),
                found: s.len(),
            });
        }
        let num = self.numeric();
        let drives = num.drives_for(letter);
        let mut out = vec![0.0; s.len()];
        num.field_with_drives(&drives, s, &mut out);
        Ok(out)
    }
}

fn gate_drive(w: &DMatrix<f64>, b: &[f64], letter: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; b.len()];
    mat_vec_into(w, letter, &mut d);
    for (di, bi) in d.iter_mut().zip(b) {
        *di += bi;
    }
    d
}

/// Double-precision view of an [`OdeLstm`].
#[derive(Debug, Clone)]
pub struct NumericLstm<C: Coeff> {
    pub(crate) n: usize,
    pub(crate) u: Vec<DMatrix<f64>>,
    pub(crate) w: Vec<DMatrix<f64>>,
    pub(crate) b: Vec<Vec<f64>>,
    pub(crate) c: DMatrix<f64>,
    pub(crate) sigmas: Vec<Activation<C>>,
    pub(crate) s0: Vec<f64>,
    // drives[r][g] = W^{g+1} α_r + b^{g+1}
    pub(crate) drives: Vec<Vec<Vec<f64>>>,
}

/// Intermediate quantities of one LSTM field evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmGates {
    pub h: Vec<f64>,
    /// `g¹..g⁴`.
    pub gates: Vec<Vec<f64>>,
}

impl<C: Coeff> NumericLstm<C> {
    pub(crate) fn drives_for(&self, letter: &[f64]) -> Vec<Vec<f64>> {
        (0..4)
            .map(|g| gate_drive(&self.w[g], &self.b[g], letter))
            .collect()
    }

    pub fn hidden(&self, s: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|j| s[n + j] * self.sigmas[4].value(s[j]))
            .collect()
    }

    pub fn gates_with_drives(&self, drives: &[Vec<f64>], s: &[f64]) -> LstmGates {
        let h = self.hidden(s);
        let mut gates = vec![vec![0.0; self.n]; 4];
        for (g, out) in gates.iter_mut().enumerate() {
            mat_vec_into(&self.u[g + 1], &h, out);
            for (o, d) in out.iter_mut().zip(&drives[g]) {
                *o = self.sigmas[g].value(*o + d);
            }
        }
        LstmGates { h, gates }
    }

    pub(crate) fn field_with_drives(&self, drives: &[Vec<f64>], s: &[f64], out: &mut [f64]) {
        let n = self.n;
        let LstmGates { gates, .. } = self.gates_with_drives(drives, s);
        let (x, _) = s.split_at(n);
        let (dx, dz) = out.split_at_mut(n);
        mat_vec_into(&self.u[0], x, dx);
        for j in 0..n {
            dx[j] = dx[j] + gates[1][j] * x[j] + gates[2][j] * gates[0][j];
            dz[j] = gates[3][j];
        }
    }

    pub fn field(&self, letter: usize, s: &[f64], out: &mut [f64]) {
        self.field_with_drives(&self.drives[letter], s, out);
    }

    pub fn output(&self, s: &[f64], out: &mut [f64]) {
        output_into(&self.c, s, out);
    }
}

/// Either kind of recurrent network.
#[derive(Debug, Clone, PartialEq)]
pub enum Network<C: Coeff> {
    Rnn(OdeRnn<C>),
    Lstm(OdeLstm<C>),
}

impl<C: Coeff> Network<C> {
    pub fn kind(&self) -> &'static str {
        match self {
            Network::Rnn(_) => "ode-rnn",
            Network::Lstm(_) => "ode-lstm",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Network::Rnn(r) => r.n(),
            Network::Lstm(l) => 2 * l.n(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Network::Rnn(r) => r.p(),
            Network::Lstm(l) => l.p(),
        }
    }

    pub fn num_letters(&self) -> usize {
        match self {
            Network::Rnn(r) => r.num_letters(),
            Network::Lstm(l) => l.num_letters(),
        }
    }

    /// Initial state in exact form (`x₀`, or `(x₀, z₀)`).
    pub fn initial_state(&self) -> Vec<C> {
        match self {
            Network::Rnn(r) => r.x0().iter().cloned().collect(),
            Network::Lstm(l) => l.x0().iter().chain(l.z0().iter()).cloned().collect(),
        }
    }
}

impl<C: Coeff> Network<C> {
    pub fn numeric(&self) -> NumericNetwork<C> {
        match self {
            Network::Rnn(r) => NumericNetwork::Rnn(r.numeric()),
            Network::Lstm(l) => NumericNetwork::Lstm(l.numeric()),
        }
    }
}

/// Double-precision form of a [`Network`] for integration.
#[derive(Debug, Clone)]
pub enum NumericNetwork<C: Coeff> {
    Rnn(NumericRnn<C>),
    Lstm(NumericLstm<C>),
}

impl<C: Coeff> NumericNetwork<C> {
    pub fn state_dim(&self) -> usize {
        match self {
            NumericNetwork::Rnn(r) => r.x0.len(),
            NumericNetwork::Lstm(l) => l.s0.len(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            NumericNetwork::Rnn(r) => r.c.nrows(),
            NumericNetwork::Lstm(l) => l.c.nrows(),
        }
    }

    pub fn num_letters(&self) -> usize {
        match self {
            NumericNetwork::Rnn(r) => r.drives.len(),
            NumericNetwork::Lstm(l) => l.drives.len(),
        }
    }

    pub fn initial_state(&self) -> &[f64] {
        match self {
            NumericNetwork::Rnn(r) => &r.x0,
            NumericNetwork::Lstm(l) => &l.s0,
        }
    }

    pub fn field(&self, letter: usize, s: &[f64], out: &mut [f64]) {
        match self {
            NumericNetwork::Rnn(r) => r.field(letter, s, out),
            NumericNetwork::Lstm(l) => l.field(letter, s, out),
        }
    }

    pub fn output(&self, s: &[f64], out: &mut [f64]) {
        match self {
            NumericNetwork::Rnn(r) => r.output(s, out),
            NumericNetwork::Lstm(l) => l.output(s, out),
        }
    }
}

impl<C: Coeff> From<OdeRnn<C>> for Network<C> {
    fn from(r: OdeRnn<C>) -> Self {
        Network::Rnn(r)
    }
}

impl<C: Coeff> From<OdeLstm<C>> for Network<C> {
    fn from(l: OdeLstm<C>) -> Self {
        Network::Lstm(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn rnn_field_examples() {
        let zero = OdeRnn::new(m(2, 2, &[0.0; 4]), m(2, 1, &[0.0; 2]), m(1, 2, &[1.0, 0.0]),
            Activation::tanh(), v(&[0.3, -0.2]), vec![v(&[1.0])]).unwrap();
        assert_eq!(zero.vector_field(&[1.0], &[0.3, -0.2]).unwrap(), vec![0.0, 0.0]);

        let one = OdeRnn::new(m(1, 1, &[1.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]),
            Activation::tanh(), v(&[0.0]), vec![v(&[0.0])]).unwrap();
        assert_eq!(one.vector_field(&[0.0], &[0.0]).unwrap(), vec![0.0]);

        let sig = OdeRnn::new(m(1, 1, &[0.0]), m(1, 1, &[1.0]), m(1, 1, &[1.0]),
            Activation::sigmoid(), v(&[0.0]), vec![v(&[0.0])]).unwrap();
        assert_eq!(sig.vector_field(&[0.0], &[3.7]).unwrap(), vec![0.5]);
        assert!(sig.vector_field(&[0.0, 1.0], &[3.7]).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let err = OdeRnn::new(m(2, 2, &[0.0; 4]), m(1, 1, &[0.0]), m(1, 2, &[0.0; 2]),
            Activation::tanh(), v(&[0.0, 0.0]), vec![v(&[1.0])]).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec { ref field, .. } if field == "B"));
        let err = OdeRnn::new(m(1, 1, &[0.0]), m(1, 1, &[0.0]), m(1, 1, &[0.0]),
            Activation::tanh(), v(&[0.0]), vec![]).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec { ref field, .. } if field == "alphabet"));
    }

    fn lstm(sigmas: [Activation<f64>; 5], u0: f64) -> OdeLstm<f64> {
        OdeLstm::new(LstmParts {
            u: vec![m(1, 1, &[u0]), m(1, 1, &[0.7]), m(1, 1, &[-0.4]), m(1, 1, &[1.1]), m(1, 1, &[0.2])],
            w: vec![m(1, 1, &[0.5]), m(1, 1, &[1.0]), m(1, 1, &[-1.0]), m(1, 1, &[0.3])],
            b: vec![v(&[0.0]), v(&[0.1]), v(&[0.2]), v(&[-0.3])],
            c: m(1, 2, &[1.0, 0.0]),
            sigmas: sigmas.to_vec(),
            x0: v(&[0.0]),
            z0: v(&[1.0]),
            alphabet: vec![v(&[0.0]), v(&[1.0])],
        })
        .unwrap()
    }

    #[test]
    fn lstm_zero_gates_give_zero_field() {
        let net = lstm(
            [Activation::const0(), Activation::const0(), Activation::const0(), Activation::const0(), Activation::tanh()],
            0.0,
        );
        assert_eq!(net.vector_field(&[1.0], &[0.4, -0.9]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn lstm_linear_configuration() {
        let net = lstm(
            [Activation::identity(), Activation::const0(), Activation::const1(), Activation::const0(), Activation::identity()],
            -0.6,
        );
        let (x, z, u) = (0.4, -0.9, 1.0);
        let h = z * x;
        let expected = -0.6 * x + 0.7 * h + 0.5 * u;
        let f = net.vector_field(&[u], &[x, z]).unwrap();
        assert!((f[0] - expected).abs() < 1e-15);
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn numeric_network_matches_direct_field() {
        let net: Network<f64> = lstm(
            [Activation::sigmoid(), Activation::tanh(), Activation::sigmoid(), Activation::tanh(), Activation::tanh()],
            0.3,
        )
        .into();
        let num = net.numeric();
        let mut out = [0.0; 2];
        num.field(1, &[0.2, 0.5], &mut out);
        let Network::Lstm(l) = &net else { unreachable!() };
        assert_eq!(out.to_vec(), l.vector_field(&[1.0], &[0.2, 0.5]).unwrap());
        assert_eq!(num.initial_state(), &[0.0, 1.0]);
    }
}
