//! Lenient number parsing for input files: JSON numbers and decimal strings
//! are both accepted, so hand-written problem files do not depend on how a
//! tool chose to emit floats.

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serializer};

use crate::linalg::Vector;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LenientF64(pub f64);

impl From<LenientF64> for f64 {
    fn from(v: LenientF64) -> f64 {
        v.0
    }
}

struct LenientVisitor;

impl Visitor<'_> for LenientVisitor {
    type Value = LenientF64;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a number or a decimal string")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<LenientF64, E> {
        Ok(LenientF64(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<LenientF64, E> {
        Ok(LenientF64(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<LenientF64, E> {
        Ok(LenientF64(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<LenientF64, E> {
        let parsed: f64 = v
            .trim()
            .parse()
            .map_err(|_| E::custom(format!("invalid decimal string {v:?}")))?;
        if !parsed.is_finite() {
            return Err(E::custom(format!("non-finite number {v:?}")));
        }
        Ok(LenientF64(parsed))
    }
}

impl<'de> Deserialize<'de> for LenientF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(LenientVisitor)
    }
}

pub fn to_f64_vec(v: Vec<LenientF64>) -> Vec<f64> {
    v.into_iter().map(f64::from).collect()
}

/// Serializes a vector as a flat JSON array.
pub fn ser_vector<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_strings() {
        let v: Vec<LenientF64> = serde_json::from_str(r#"[1, -2.5, "0.125", " 3e2 "]"#).unwrap();
        assert_eq!(to_f64_vec(v), vec![1.0, -2.5, 0.125, 300.0]);
        assert!(serde_json::from_str::<LenientF64>(r#""1,5""#).is_err());
        assert!(serde_json::from_str::<LenientF64>(r#""inf""#).is_err());
    }
}
