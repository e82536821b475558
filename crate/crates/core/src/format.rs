//! JSON codec. Complex numbers are `[re, im]` pairs (plain numbers are read
//! as reals), matrices are arrays of rows, and maps are objects
//! `{dim_in, dim_out, repr, data}` with `repr` one of `kraus`, `superop`,
//! `choi`, `schur` or `state`.

use serde_json::{json, Map, Value};

use crate::bwsim::{BoundaryWeightSpec, Profile};
use crate::cneg::CnegForm;
use crate::corner::CornerNorm;
use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat, C64};
use crate::qpure::QPureVerdict;
use crate::superop::{from_choi, from_kraus, schur_map, state_map, ChoiMatrix, KrausSet, SuperOp};

fn bad(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub fn complex_to_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_from_json(v: &Value) -> Result<C64> {
    match v {
        Value::Number(n) => n.as_f64().map(linalg::real).ok_or_else(|| bad("number out of range")),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().ok_or_else(|| bad("complex real part is not a number"))?;
            let im = a[1].as_f64().ok_or_else(|| bad("complex imaginary part is not a number"))?;
            Ok(c(re, im))
        }
        other => Err(bad(format!("expected a complex number [re, im], got {other}"))),
    }
}

pub fn matrix_to_json(m: &Mat) -> Value {
    Value::Array(
        (0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect())).collect(),
    )
}

pub fn matrix_from_json(v: &Value) -> Result<Mat> {
    let rows = v.as_array().ok_or_else(|| bad("matrix must be an array of rows"))?;
    if rows.is_empty() {
        return Err(bad("matrix has no rows"));
    }
    let mut data: Vec<Vec<C64>> = Vec::with_capacity(rows.len());
    for r in rows {
        let r = r.as_array().ok_or_else(|| bad("matrix row must be an array"))?;
        data.push(r.iter().map(complex_from_json).collect::<Result<_>>()?);
    }
    let cols = data[0].len();
    if cols == 0 || data.iter().any(|r| r.len() != cols) {
        return Err(bad("matrix rows are empty or ragged"));
    }
    Ok(Mat::from_fn(data.len(), cols, |i, j| data[i][j]))
}

pub fn real_vec_to_json(v: &[f64]) -> Value {
    json!(v)
}

pub fn real_vec_from_json(v: &Value) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| bad("expected an array of numbers"))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| bad("expected a number")))
        .collect()
}

pub fn complex_vec_from_json(v: &Value) -> Result<Vec<C64>> {
    v.as_array().ok_or_else(|| bad("expected an array of complex numbers"))?.iter().map(complex_from_json).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    Kraus,
    Superop,
    Choi,
    Schur,
    State,
}

impl Repr {
    pub fn as_str(self) -> &'static str {
        match self {
            Repr::Kraus => "kraus",
            Repr::Superop => "superop",
            Repr::Choi => "choi",
            Repr::Schur => "schur",
            Repr::State => "state",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "kraus" => Repr::Kraus,
            "superop" => Repr::Superop,
            "choi" => Repr::Choi,
            "schur" => Repr::Schur,
            "state" => Repr::State,
            other => return Err(bad(format!("unknown repr {other:?}"))),
        })
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| bad(format!("missing field {key:?}")))
}

fn dim_field(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    let d = field(obj, key)?.as_u64().ok_or_else(|| bad(format!("{key} must be a positive integer")))?;
    if d == 0 {
        return Err(bad(format!("{key} must be positive")));
    }
    Ok(d as usize)
}

fn expect_shape(m: &Mat, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch(format!("{what} is {:?}, expected {rows}x{cols}", m.shape())));
    }
    Ok(())
}

/// A map read from JSON together with the representation it was given in.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedMap {
    pub repr: Repr,
    pub map: SuperOp,
    /// Present for `repr = kraus`.
    pub kraus: Option<KrausSet>,
}

pub fn map_from_value(v: &Value) -> Result<LoadedMap> {
    let obj = v.as_object().ok_or_else(|| bad("map file must be a JSON object"))?;
    let n = dim_field(obj, "dim_in")?;
    let m = dim_field(obj, "dim_out")?;
    let repr = Repr::parse(field(obj, "repr")?.as_str().ok_or_else(|| bad("repr must be a string"))?)?;
    let data = field(obj, "data")?;
    let square = |what: &str| {
        if n == m {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("{what} maps need dim_in = dim_out")))
        }
    };
    let mut kraus = None;
    let map = match repr {
        Repr::Kraus => {
            let ops = data.as_array().ok_or_else(|| bad("kraus data must be an array of matrices"))?;
            let ops: Vec<Mat> = ops.iter().map(matrix_from_json).collect::<Result<_>>()?;
            for op in &ops {
                expect_shape(op, m, n, "Kraus operator")?;
            }
            let set = KrausSet::new(ops)?;
            let map = from_kraus(&set);
            kraus = Some(set);
            map
        }
        Repr::Superop => {
            let mat = matrix_from_json(data)?;
            expect_shape(&mat, m * m, n * n, "superoperator matrix")?;
            SuperOp::from_matrix(n, m, mat)?
        }
        Repr::Choi => {
            let mat = matrix_from_json(data)?;
            expect_shape(&mat, n * m, n * m, "Choi matrix")?;
            from_choi(&ChoiMatrix { dim_in: n, dim_out: m, matrix: mat })?
        }
        Repr::Schur => {
            square("schur")?;
            let mat = matrix_from_json(data)?;
            expect_shape(&mat, n, n, "multiplier matrix")?;
            schur_map(&mat)
        }
        Repr::State => {
            square("state")?;
            let mat = matrix_from_json(data)?;
            expect_shape(&mat, n, n, "density matrix")?;
            state_map(&mat)?
        }
    };
    Ok(LoadedMap { repr, map, kraus })
}

pub fn map_from_str(s: &str) -> Result<LoadedMap> {
    let v: Value = serde_json::from_str(s).map_err(|e| bad(format!("malformed JSON: {e}")))?;
    map_from_value(&v)
}

fn map_envelope(n: usize, m: usize, repr: Repr, data: Value) -> Value {
    json!({ "dim_in": n, "dim_out": m, "repr": repr.as_str(), "data": data })
}

pub fn superop_to_json(phi: &SuperOp) -> Value {
    map_envelope(phi.dim_in(), phi.dim_out(), Repr::Superop, matrix_to_json(phi.matrix()))
}

pub fn kraus_to_json(k: &KrausSet) -> Value {
    let (m, n) = k.shape();
    map_envelope(n, m, Repr::Kraus, Value::Array(k.ops().iter().map(matrix_to_json).collect()))
}

pub fn choi_to_json(ch: &ChoiMatrix) -> Value {
    map_envelope(ch.dim_in, ch.dim_out, Repr::Choi, matrix_to_json(&ch.matrix))
}

pub fn schur_to_json(multipliers: &Mat) -> Value {
    let n = multipliers.nrows();
    map_envelope(n, n, Repr::Schur, matrix_to_json(multipliers))
}

pub fn state_to_json(d: &Mat) -> Value {
    let n = d.nrows();
    map_envelope(n, n, Repr::State, matrix_to_json(d))
}

pub fn qpure_verdict_to_json(v: &QPureVerdict) -> Value {
    match v {
        QPureVerdict::RankOneFaithful { d } => json!({ "tag": v.tag(), "density": matrix_to_json(d) }),
        QPureVerdict::InvertibleSchur { u, lambdas } => {
            let mut sorted = lambdas.clone();
            sorted.sort_by(f64::total_cmp);
            json!({ "tag": v.tag(), "unitary": matrix_to_json(u), "lambdas": sorted })
        }
        QPureVerdict::NotQPure { witness, reason } => {
            json!({ "tag": v.tag(), "reason": reason, "witness": superop_to_json(witness) })
        }
        QPureVerdict::Indeterminate { reason } => json!({ "tag": v.tag(), "reason": reason }),
    }
}

pub fn cneg_form_to_json(f: &CnegForm) -> Value {
    json!({
        "s": f.s,
        "y": matrix_to_json(&f.y),
        "terms": f.terms.iter().map(|t| json!({ "lambda": t.lambda, "op": matrix_to_json(&t.op) })).collect::<Vec<_>>(),
    })
}

pub fn corner_norm_to_json(v: &CornerNorm) -> Value {
    json!({
        "value": v.value,
        "faithful": v.faithful,
        "c": matrix_to_json(&v.c),
        "a_tilde": matrix_to_json(&v.a_tilde),
    })
}

pub fn eigenvalues_to_json(eigs: &[C64]) -> Value {
    Value::Array(eigs.iter().map(|z| complex_to_json(*z)).collect())
}

/// `"indicator01"` or `{"x": [...], "f": [...]}`.
pub fn profile_from_value(v: &Value) -> Result<BoundaryWeightSpec> {
    let profile = match v {
        Value::String(s) if s == "indicator01" => Profile::Indicator01,
        Value::String(s) => return Err(bad(format!("unknown profile {s:?}"))),
        Value::Object(obj) => {
            Profile::Sampled { x: real_vec_from_json(field(obj, "x")?)?, f: complex_vec_from_json(field(obj, "f")?)? }
        }
        other => return Err(bad(format!("profile must be a name or sample object, got {other}"))),
    };
    BoundaryWeightSpec::new(profile)
}

/// Canonical byte form: keys sorted, no whitespace.
pub fn to_canonical_string(v: &Value) -> String {
    serde_json::to_string(v).expect("JSON values serialize")
}
