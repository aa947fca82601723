//! Float fields written as JSON numbers with 17 significant digits.
//!
//! Used with `#[serde(with = "...")]` on trajectory records. Serialization emits a
//! raw JSON number literal, so these fields are only serializable through
//! `serde_json`; deserialization accepts any numeric representation.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

/// `{:.16e}` gives 17 significant digits, enough to round-trip any finite `f64`.
pub(crate) fn format(x: f64) -> String {
    format!("{x:.16e}")
}

fn raw(x: f64) -> Result<Box<RawValue>, String> {
    if !x.is_finite() {
        return Err(format!("cannot persist non-finite value {x}"));
    }
    RawValue::from_string(format(x)).map_err(|e| e.to_string())
}

pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw(*x).map_err(serde::ser::Error::custom)?.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    f64::deserialize(d)
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let raws = xs.iter().map(|x| raw(*x)).collect::<Result<Vec<_>, _>>().map_err(serde::ser::Error::custom)?;
        raws.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<f64>::deserialize(d)
    }
}
