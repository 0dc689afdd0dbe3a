//! JSON formats for network specifications, input signals and polynomial
//! systems.
//!
//! Numbers may be given either as JSON numbers or as decimal/fraction
//! strings (`"0.1"`, `"1/3"`); strings keep exact values in rational mode.

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use super::activation::Activation;
use super::network::{LstmParts, Network, OdeLstm, OdeRnn};
use super::poly_system::{PolySystem, Variable};
use super::signal::InputSignal;
use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::polynomial::{MultiPoly, PolyVectorField};

const RNN_KEYS: &[&str] = &["kind", "n", "m", "p", "A", "B", "C", "sigma", "x0", "alphabet"];
const LSTM_KEYS: &[&str] = &[
    "kind", "n", "m", "p", "U", "W", "b", "C", "sigmas", "x0", "z0", "alphabet",
];
const FREE_KEYS: &[&str] = &["description", "name"];
const CONTINUOUS_INPUT_KEYS: &[&str] = &["input_range", "input_box", "inputs"];

fn parse_json(text: &str, what: &'static str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::parse(what, &truncate(text), e.to_string()))
}

fn truncate(text: &str) -> String {
    text.chars().take(80).collect()
}

fn as_object<'a>(v: &'a Value, field: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::spec(field, "expected a JSON object"))
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    for key in obj.keys() {
        if CONTINUOUS_INPUT_KEYS.contains(&key.as_str()) {
            return Err(Error::spec(
                key.as_str(),
                "continuous input ranges are not supported; give a finite `alphabet`",
            ));
        }
        if !allowed.contains(&key.as_str()) && !FREE_KEYS.contains(&key.as_str()) {
            return Err(Error::spec(key.as_str(), "unknown key"));
        }
    }
    Ok(())
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::spec(key, "missing required key"))
}

fn scalar<C: Coeff>(v: &Value, field: &str) -> Result<C> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.trim().to_owned(),
        _ => return Err(Error::spec(field, "expected a number or a numeric string")),
    };
    C::parse_literal(&text).map_err(|e| Error::spec(field, e.to_string()))
}

fn index(v: &Value, field: &str) -> Result<usize> {
    v.as_u64()
        .map(|u| u as usize)
        .ok_or_else(|| Error::spec(field, "expected a non-negative integer"))
}

fn array<'a>(v: &'a Value, field: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::spec(field, "expected an array"))
}

fn vector<C: Coeff>(v: &Value, field: &str) -> Result<DVector<C>> {
    let items = array(v, field)?;
    let vals = items
        .iter()
        .enumerate()
        .map(|(i, x)| scalar(x, &format!("{field}[{i}]")))
        .collect::<Result<Vec<C>>>()?;
    Ok(DVector::from_vec(vals))
}

/// Matrix given as a list of rows. `cols_hint` fixes the column count when the
/// matrix has no rows.
fn matrix<C: Coeff>(v: &Value, field: &str, cols_hint: Option<usize>) -> Result<DMatrix<C>> {
    let rows = array(v, field)?;
    let parsed = rows
        .iter()
        .enumerate()
        .map(|(i, r)| vector::<C>(r, &format!("{field}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let ncols = parsed.first().map(|r| r.len()).or(cols_hint).unwrap_or(0);
    for (i, r) in parsed.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::spec(
                format!("{field}[{i}]"),
                format!("ragged matrix: expected {ncols} entries, got {}", r.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(parsed.len(), ncols, |i, j| parsed[i][j].clone()))
}

fn activation<C: Coeff>(v: &Value, field: &str) -> Result<Activation<C>> {
    match v {
        Value::String(name) => Activation::builtin(name).ok_or_else(|| {
            Error::spec(
                field,
                format!("unknown activation {name:?}; expected tanh, sigmoid, identity, const0, const1 or a custom object"),
            )
        }),
        Value::Object(obj) => {
            for key in obj.keys() {
                if !["name", "characteristic", "anchor", "lipschitz"].contains(&key.as_str()) {
                    return Err(Error::spec(format!("{field}.{key}"), "unknown key"));
                }
            }
            let name = required(obj, "name")
                .and_then(|n| n.as_str().ok_or_else(|| Error::spec("name", "expected a string")))
                .map_err(|e| prefix(e, field))?;
            let text = required(obj, "characteristic")
                .and_then(|c| {
                    c.as_str()
                        .ok_or_else(|| Error::spec("characteristic", "expected a polynomial string in X1"))
                })
                .map_err(|e| prefix(e, field))?;
            let p = MultiPoly::<C>::parse(text, 1)
                .map_err(|e| Error::spec(format!("{field}.characteristic"), e.to_string()))?;
            let anchor = required(obj, "anchor").map_err(|e| prefix(e, field))?;
            let pair = array(anchor, &format!("{field}.anchor"))?;
            if pair.len() != 2 {
                return Err(Error::spec(format!("{field}.anchor"), "expected [x, sigma(x)]"));
            }
            let a0 = scalar::<C>(&pair[0], &format!("{field}.anchor[0]"))?;
            let a1 = scalar::<C>(&pair[1], &format!("{field}.anchor[1]"))?;
            let lipschitz = match obj.get("lipschitz") {
                Some(Value::Bool(b)) => *b,
                Some(_) => return Err(Error::spec(format!("{field}.lipschitz"), "expected a boolean")),
                None => false,
            };
            Activation::custom_from_characteristic(name, p, (a0, a1), lipschitz)
                .map_err(|e| prefix(e, field))
        }
        _ => Err(Error::spec(field, "expected an activation name or object")),
    }
}

fn prefix(e: Error, field: &str) -> Error {
    match e {
        Error::InvalidSpec { field: inner, message } => Error::spec(format!("{field}.{inner}"), message),
        other => Error::spec(field, other.to_string()),
    }
}

fn alphabet<C: Coeff>(v: &Value) -> Result<Vec<DVector<C>>> {
    array(v, "alphabet")?
        .iter()
        .enumerate()
        .map(|(r, l)| vector(l, &format!("alphabet[{r}]")))
        .collect()
}

fn check_declared(obj: &Map<String, Value>, key: &str, actual: usize) -> Result<()> {
    if let Some(v) = obj.get(key) {
        let declared = index(v, key)?;
        if declared != actual {
            return Err(Error::spec(
                key,
                format!("declared {declared} but the matrices imply {actual}"),
            ));
        }
    }
    Ok(())
}

/// Parses an `ode-rnn` or `ode-lstm` specification.
pub fn parse_network<C: Coeff>(text: &str) -> Result<Network<C>> {
    let value = parse_json(text, "system specification")?;
    network_from_value(&value)
}

pub fn network_from_value<C: Coeff>(value: &Value) -> Result<Network<C>> {
    let obj = as_object(value, "<root>")?;
    let kind = required(obj, "kind")?
        .as_str()
        .ok_or_else(|| Error::spec("kind", "expected a string"))?;
    match kind {
        "ode-rnn" => {
            check_keys(obj, RNN_KEYS)?;
            let a = matrix::<C>(required(obj, "A")?, "A", None)?;
            let n = a.nrows();
            let b = matrix::<C>(required(obj, "B")?, "B", None)?;
            let c = matrix::<C>(required(obj, "C")?, "C", Some(n))?;
            let sigma = activation(required(obj, "sigma")?, "sigma")?;
            let x0 = vector(required(obj, "x0")?, "x0")?;
            let alphabet = alphabet(required(obj, "alphabet")?)?;
            check_declared(obj, "n", n)?;
            check_declared(obj, "m", b.ncols())?;
            check_declared(obj, "p", c.nrows())?;
            Ok(OdeRnn::new(a, b, c, sigma, x0, alphabet)?.into())
        }
        "ode-lstm" => {
            check_keys(obj, LSTM_KEYS)?;
            let u = array(required(obj, "U")?, "U")?
                .iter()
                .enumerate()
                .map(|(i, m)| matrix::<C>(m, &format!("U[{i}]"), None))
                .collect::<Result<Vec<_>>>()?;
            let n = u.first().map_or(0, |m| m.nrows());
            let w = array(required(obj, "W")?, "W")?
                .iter()
                .enumerate()
                .map(|(i, m)| matrix::<C>(m, &format!("W[{i}]"), None))
                .collect::<Result<Vec<_>>>()?;
            let b = array(required(obj, "b")?, "b")?
                .iter()
                .enumerate()
                .map(|(i, v)| vector::<C>(v, &format!("b[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let c = matrix::<C>(required(obj, "C")?, "C", Some(2 * n))?;
            let sigmas = array(required(obj, "sigmas")?, "sigmas")?
                .iter()
                .enumerate()
                .map(|(i, s)| activation::<C>(s, &format!("sigmas[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let x0 = vector(required(obj, "x0")?, "x0")?;
            let z0 = vector(required(obj, "z0")?, "z0")?;
            let alphabet = alphabet(required(obj, "alphabet")?)?;
            let lstm = OdeLstm::new(LstmParts {
                u,
                w,
                b,
                c,
                sigmas,
                x0,
                z0,
                alphabet,
            })?;
            check_declared(obj, "n", lstm.n())?;
            check_declared(obj, "m", lstm.m())?;
            check_declared(obj, "p", lstm.p())?;
            Ok(lstm.into())
        }
        "poly-system" => Err(Error::spec(
            "kind",
            "this command expects a network (ode-rnn or ode-lstm), not a poly-system",
        )),
        other => Err(Error::spec(
            "kind",
            format!("unknown kind {other:?}; expected ode-rnn or ode-lstm"),
        )),
    }
}

fn coeff_value<C: Coeff>(c: &C) -> Value {
    Value::String(c.to_string())
}

fn matrix_value<C: Coeff>(m: &DMatrix<C>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| coeff_value(&m[(i, j)])).collect()))
            .collect(),
    )
}

fn vector_value<C: Coeff>(v: &DVector<C>) -> Value {
    Value::Array(v.iter().map(coeff_value).collect())
}

fn activation_value<C: Coeff>(a: &Activation<C>) -> Value {
    if a.is_builtin() {
        Value::String(a.name().to_owned())
    } else {
        json!({
            "name": a.name(),
            "characteristic": a.characteristic().to_string(),
            "anchor": [coeff_value(&a.anchor().0), coeff_value(&a.anchor().1)],
            "lipschitz": true,
        })
    }
}

/// Serializes a network back to the specification format. Coefficients are
/// written as strings so exact values survive a round trip.
pub fn network_to_value<C: Coeff>(net: &Network<C>) -> Value {
    match net {
        Network::Rnn(r) => json!({
            "kind": "ode-rnn",
            "n": r.n(), "m": r.m(), "p": r.p(),
            "A": matrix_value(r.a()),
            "B": matrix_value(r.b()),
            "C": matrix_value(r.c()),
            "sigma": activation_value(r.sigma()),
            "x0": vector_value(r.x0()),
            "alphabet": r.alphabet().iter().map(vector_value).collect::<Vec<_>>(),
        }),
        Network::Lstm(l) => json!({
            "kind": "ode-lstm",
            "n": l.n(), "m": l.m(), "p": l.p(),
            "U": (0..5).map(|i| matrix_value(l.u(i))).collect::<Vec<_>>(),
            "W": (1..=4).map(|g| matrix_value(l.w(g))).collect::<Vec<_>>(),
            "b": (1..=4).map(|g| vector_value(l.b(g))).collect::<Vec<_>>(),
            "C": matrix_value(l.c()),
            "sigmas": (1..=5).map(|i| activation_value(l.sigma(i))).collect::<Vec<_>>(),
            "x0": vector_value(l.x0()),
            "z0": vector_value(l.z0()),
            "alphabet": l.alphabet().iter().map(vector_value).collect::<Vec<_>>(),
        }),
    }
}

/// `{"segments": [[duration, letter], ...], "tail": letter}`.
pub fn parse_input_signal(text: &str) -> Result<InputSignal> {
    let value = parse_json(text, "input signal")?;
    input_signal_from_value(&value)
}

pub fn input_signal_from_value(value: &Value) -> Result<InputSignal> {
    let obj = as_object(value, "<root>")?;
    for key in obj.keys() {
        if !["segments", "tail"].contains(&key.as_str()) && !FREE_KEYS.contains(&key.as_str()) {
            return Err(Error::spec(key.as_str(), "unknown key"));
        }
    }
    let segments = match obj.get("segments") {
        None => Vec::new(),
        Some(v) => array(v, "segments")?
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let field = format!("segments[{i}]");
                let pair = array(s, &field)?;
                if pair.len() != 2 {
                    return Err(Error::spec(field, "expected [duration, letterIndex]"));
                }
                let d = scalar::<f64>(&pair[0], &format!("{field}[0]"))?;
                let r = index(&pair[1], &format!("{field}[1]"))?;
                Ok((d, r))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let tail = index(required(obj, "tail")?, "tail")?;
    InputSignal::new(segments, tail)
}

pub fn input_signal_to_value(u: &InputSignal) -> Value {
    json!({
        "segments": u.segments().iter().map(|&(d, r)| json!([d, r])).collect::<Vec<_>>(),
        "tail": u.tail(),
    })
}

/// JSON form of a polynomial system, tagged `"kind": "poly-system"`.
pub fn poly_system_to_value<C: Coeff>(p: &PolySystem<C>) -> Value {
    json!({
        "kind": "poly-system",
        "dim": p.dim(),
        "num_letters": p.num_letters(),
        "variables": p.variables(),
        "fields": p
            .fields()
            .iter()
            .map(|f| f.components().iter().map(|c| c.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "output": p.output().iter().map(|h| h.to_string()).collect::<Vec<_>>(),
        "v0": p.v0(),
        "v0_approximate": p.v0_approximate(),
    })
}

pub fn parse_poly_system<C: Coeff>(text: &str) -> Result<PolySystem<C>> {
    let value = parse_json(text, "polynomial system")?;
    poly_system_from_value(&value)
}

pub fn poly_system_from_value<C: Coeff>(value: &Value) -> Result<PolySystem<C>> {
    let obj = as_object(value, "<root>")?;
    const KEYS: &[&str] = &[
        "kind", "dim", "num_letters", "variables", "fields", "output", "v0", "v0_approximate",
        "config", "text",
    ];
    check_keys(obj, KEYS)?;
    match required(obj, "kind")?.as_str() {
        Some("poly-system") => {}
        _ => return Err(Error::spec("kind", "expected \"poly-system\"")),
    }
    let v0 = array(required(obj, "v0")?, "v0")?
        .iter()
        .enumerate()
        .map(|(i, v)| scalar::<f64>(v, &format!("v0[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let dim = v0.len();
    check_declared(obj, "dim", dim)?;
    let poly = |v: &Value, field: &str| -> Result<MultiPoly<C>> {
        let s = v
            .as_str()
            .ok_or_else(|| Error::spec(field, "expected a polynomial string"))?;
        MultiPoly::parse(s, dim).map_err(|e| Error::spec(field, e.to_string()))
    };
    let fields = array(required(obj, "fields")?, "fields")?
        .iter()
        .enumerate()
        .map(|(r, f)| {
            let field = format!("fields[{r}]");
            let comps = array(f, &field)?
                .iter()
                .enumerate()
                .map(|(i, c)| poly(c, &format!("{field}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            if comps.len() != dim {
                return Err(Error::spec(
                    field,
                    format!("expected {dim} components, got {}", comps.len()),
                ));
            }
            PolyVectorField::new(dim, comps)
        })
        .collect::<Result<Vec<_>>>()?;
    check_declared(obj, "num_letters", fields.len())?;
    let output = array(required(obj, "output")?, "output")?
        .iter()
        .enumerate()
        .map(|(k, h)| poly(h, &format!("output[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    let v0_approximate = match obj.get("v0_approximate") {
        None => vec![false; dim],
        Some(v) => array(v, "v0_approximate")?
            .iter()
            .enumerate()
            .map(|(i, b)| {
                b.as_bool()
                    .ok_or_else(|| Error::spec(format!("v0_approximate[{i}]"), "expected a boolean"))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let variables = match obj.get("variables") {
        None => (1..=dim)
            .map(|i| Variable::new(format!("X{i}"), format!("X{i}")))
            .collect(),
        Some(v) => array(v, "variables")?
            .iter()
            .enumerate()
            .map(|(i, var)| {
                let field = format!("variables[{i}]");
                let o = as_object(var, &field)?;
                let get = |k: &str| {
                    o.get(k)
                        .and_then(Value::as_str)
                        .map(str::to_owned)
                        .ok_or_else(|| Error::spec(format!("{field}.{k}"), "expected a string"))
                };
                Ok(Variable::new(get("label")?, get("definition")?))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    PolySystem::new(fields, output, v0, v0_approximate, variables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Rational;

    const RNN: &str = r#"{
        "kind": "ode-rnn", "n": 1, "m": 1, "p": 1,
        "A": [[0.5]], "B": [["1/3"]], "C": [[1]],
        "sigma": "tanh", "x0": [0], "alphabet": [[0], [1]]
    }"#;

    #[test]
    fn parses_rnn_with_exact_strings() {
        let net = parse_network::<Rational>(RNN).unwrap();
        let Network::Rnn(r) = &net else { panic!("expected an RNN") };
        assert_eq!(r.b()[(0, 0)].to_string(), "1/3");
        assert_eq!(r.a()[(0, 0)].to_string(), "1/2");
        let back = network_from_value::<Rational>(&network_to_value(&net)).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn field_level_errors() {
        let bad = RNN.replace(r#""A": [[0.5]]"#, r#""A": [[0.5, 1]]"#);
        let err = parse_network::<f64>(&bad).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec { ref field, .. } if field == "A"), "{err}");

        let bad = RNN.replace(r#""p": 1"#, r#""p": 2"#);
        let err = parse_network::<f64>(&bad).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec { ref field, .. } if field == "p"), "{err}");

        let bad = RNN.replace(r#""x0": [0]"#, r#""x0": [0], "input_range": [0, 1]"#);
        assert!(parse_network::<f64>(&bad).is_err());

        let bad = RNN.replace(r#""sigma": "tanh""#, r#""sigma": "relu""#);
        assert!(parse_network::<f64>(&bad).is_err());

        let bad = RNN.replace(r#"[[0], [1]]"#, r#"[[1], [1]]"#);
        let err = parse_network::<f64>(&bad).unwrap_err();
        assert!(matches!(err, Error::InvalidSpec { ref field, .. } if field == "alphabet[1]"));
    }

    #[test]
    fn custom_sigma_object() {
        let spec = RNN.replace(
            r#""sigma": "tanh""#,
            r#""sigma": {"name": "mytanh", "characteristic": "1 - X1^2", "anchor": [0, 0], "lipschitz": true}"#,
        );
        let Network::Rnn(r) = parse_network::<f64>(&spec).unwrap() else { panic!() };
        assert!((r.sigma().value(0.7) - 0.7f64.tanh()).abs() < 1e-9);
        let undeclared = spec.replace(r#", "lipschitz": true"#, "");
        assert!(parse_network::<f64>(&undeclared).is_err());
    }

    #[test]
    fn input_signal_round_trip() {
        let u = parse_input_signal(r#"{"segments": [[0.5, 1], ["0.25", 0]], "tail": 1}"#).unwrap();
        assert_eq!(u.segments(), &[(0.5, 1), (0.25, 0)]);
        assert_eq!(input_signal_from_value(&input_signal_to_value(&u)).unwrap(), u);
        assert!(parse_input_signal(r#"{"segments": [[0, 1]], "tail": 0}"#).is_err());
        assert!(parse_input_signal(r#"{"segments": []}"#).is_err());
    }

    #[test]
    fn poly_system_round_trip() {
        let text = r#"{"kind": "poly-system", "fields": [["X2", "-X1"]], "output": ["X1"], "v0": [1, 0]}"#;
        let p = parse_poly_system::<Rational>(text).unwrap();
        let back = poly_system_from_value::<Rational>(&poly_system_to_value(&p)).unwrap();
        assert_eq!(back, p);
    }
}
