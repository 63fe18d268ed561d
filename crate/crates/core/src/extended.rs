//! Serde helpers for extended reals: ±∞ travel as the strings "inf" and
//! "-inf", NaN as "nan".

use serde::{Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(f64),
    Str(String),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Str(s) => parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad number {s:?}"))),
    }
}

pub fn parse(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        "nan" | "NaN" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

pub mod vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(serde::Serialize)]
    struct W(#[serde(with = "super")] f64);

    #[derive(Deserialize)]
    struct R(#[serde(with = "super")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&W(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<R>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

pub mod option {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(serde::Serialize)]
    struct W(#[serde(with = "super")] f64);

    #[derive(Deserialize)]
    struct R(#[serde(with = "super")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&W(*x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<R>::deserialize(d)?.map(|r| r.0))
    }
}

/// `lhs ≤ rhs + tol·max(1, |rhs|)` with x ≤ +∞ always true and
/// +∞ ≤ finite always false.
pub fn leq(lhs: f64, rhs: f64, tol: f64) -> bool {
    if lhs.is_nan() || rhs.is_nan() {
        return false;
    }
    if rhs == f64::INFINITY || lhs == f64::NEG_INFINITY {
        return true;
    }
    if lhs == f64::INFINITY || rhs == f64::NEG_INFINITY {
        return false;
    }
    lhs <= rhs + tol * rhs.abs().max(1.0)
}

/// `|lhs − rhs| ≤ tol·max(1, |lhs|, |rhs|)` with equal infinities passing.
pub fn approx_eq(lhs: f64, rhs: f64, tol: f64) -> bool {
    if lhs.is_nan() || rhs.is_nan() {
        return false;
    }
    if lhs.is_infinite() || rhs.is_infinite() {
        return lhs == rhs;
    }
    (lhs - rhs).abs() <= tol * lhs.abs().max(rhs.abs()).max(1.0)
}

/// |lhs − rhs| in the extended reals; equal infinities give 0.
pub fn residual(lhs: f64, rhs: f64) -> f64 {
    if lhs.is_infinite() || rhs.is_infinite() {
        if lhs == rhs {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (lhs - rhs).abs()
    }
}
