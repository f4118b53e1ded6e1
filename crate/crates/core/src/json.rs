//! JSON encoding of matrices: a real entry is a number, a complex entry is
//! `[re, im]`. Both forms are accepted on input.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::algebra::Field;
use crate::error::{Error, Result};
use crate::linalg::CMat;

pub fn matrix_to_json(m: &CMat, field: Field) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            Value::Array(
                (0..m.ncols())
                    .map(|j| {
                        let z = m[(i, j)];
                        match field {
                            Field::Real => json!(z.re),
                            Field::Complex => json!([z.re, z.im]),
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

fn entry(v: &Value) -> Result<Complex64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(|x| Complex64::new(x, 0.0))
            .ok_or_else(|| Error::Parse(format!("bad number {n}"))),
        Value::Array(pair) if pair.len() == 2 => {
            let re = pair[0].as_f64();
            let im = pair[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                _ => Err(Error::Parse(format!("bad complex entry {v}"))),
            }
        }
        _ => Err(Error::Parse(format!("bad matrix entry {v}"))),
    }
}

/// Parse a matrix given as a list of rows. A bare number is read as 1x1.
pub fn matrix_from_json(v: &Value) -> Result<CMat> {
    if v.is_number() {
        return Ok(CMat::from_element(1, 1, entry(v)?));
    }
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("matrix must be a list of rows".into()))?;
    let n = rows.len();
    let mut data = Vec::new();
    let mut ncols = None;
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("row {i} is not a list")))?;
        match ncols {
            None => ncols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse(format!("row {i} has {} entries, expected {c}", row.len())))
            }
            _ => {}
        }
        for e in row {
            data.push(entry(e)?);
        }
    }
    let ncols = ncols.unwrap_or(0);
    Ok(CMat::from_row_slice(n, ncols, &data))
}

pub fn f64_matrix_from_json(v: &Value) -> Result<nalgebra::DMatrix<f64>> {
    let m = matrix_from_json(v)?;
    if m.iter().any(|z| z.im != 0.0) {
        return Err(Error::Parse("expected a real matrix".into()));
    }
    Ok(m.map(|z| z.re))
}

/// Serde adapter for optional/required matrix fields in descriptors.
pub mod mat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        let field = if m.iter().all(|z| z.im == 0.0) { Field::Real } else { Field::Complex };
        serde::Serialize::serialize(&matrix_to_json(m, field), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let v = Value::deserialize(d)?;
        matrix_from_json(&v).map_err(serde::de::Error::custom)
    }
}

pub mod mat_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> std::result::Result<S::Ok, S::Error> {
        let vals: Vec<Value> = ms
            .iter()
            .map(|m| {
                let field = if m.iter().all(|z| z.im == 0.0) { Field::Real } else { Field::Complex };
                matrix_to_json(m, field)
            })
            .collect();
        serde::Serialize::serialize(&vals, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMat>, D::Error> {
        let vals = Vec::<Value>::deserialize(d)?;
        vals.iter()
            .map(|v| matrix_from_json(v).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod opt_mat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<CMat>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match m {
            Some(m) => super::mat::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CMat>, D::Error> {
        let v = Option::<Value>::deserialize(d)?;
        v.map(|v| matrix_from_json(&v).map_err(serde::de::Error::custom)).transpose()
    }
}
