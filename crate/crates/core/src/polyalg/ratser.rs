//! Serde helpers writing rationals as `p/q` text.

use serde::ser::{SerializeSeq, Serializer};

use super::Rational;

pub fn one<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

pub fn many<S: Serializer>(qs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(qs.len()))?;
    for q in qs {
        seq.serialize_element(&q.to_string())?;
    }
    seq.end()
}

pub fn nested<S: Serializer>(rows: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
    let text: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect();
    serde::Serialize::serialize(&text, s)
}
