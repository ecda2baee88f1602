//! Serde helpers that write floats with 9 significant digits.
//!
//! A value is rounded to 9 significant digits and then written in the
//! shortest form that parses back to the rounded value, so a second
//! write of a loaded file is byte-identical to the first.

use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::Deserialize;

use crate::Scalar;

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

pub fn serialize<F: Scalar, S: Serializer>(x: &F, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round9(x.as_f64()))
}

pub fn deserialize<'de, F: Scalar, D: Deserializer<'de>>(d: D) -> Result<F, D::Error> {
    let v = f64::deserialize(d)?;
    F::from_f64(v).ok_or_else(|| serde::de::Error::custom("float out of range"))
}

pub mod vec {
    use super::*;

    pub fn serialize<F: Scalar, S: Serializer>(xs: &[F], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&round9(x.as_f64()))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, F: Scalar, D: Deserializer<'de>>(d: D) -> Result<Vec<F>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.into_iter()
            .map(|x| F::from_f64(x).ok_or_else(|| serde::de::Error::custom("float out of range")))
            .collect()
    }
}

pub mod opt {
    use super::*;

    pub fn serialize<F: Scalar, S: Serializer>(x: &Option<F>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&round9(x.as_f64())),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, F: Scalar, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<F>, D::Error> {
        let v = Option::<f64>::deserialize(d)?;
        v.map(|x| F::from_f64(x).ok_or_else(|| serde::de::Error::custom("float out of range")))
            .transpose()
    }
}

/// Full precision: the shortest form that parses back to the same value.
pub mod full {
    use super::*;

    pub fn serialize<F: Scalar, S: Serializer>(x: &F, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(x.as_f64())
    }

    pub fn deserialize<'de, F: Scalar, D: Deserializer<'de>>(d: D) -> Result<F, D::Error> {
        let v = f64::deserialize(d)?;
        F::from_f64(v).ok_or_else(|| serde::de::Error::custom("float out of range"))
    }
}

#[cfg(test)]
mod tests {
    use super::round9;

    #[test]
    fn rounds_to_nine_digits() {
        assert_eq!(round9(1.0 / 3.0), 0.333333333);
        assert_eq!(round9(0.345), 0.345);
        assert_eq!(round9(123456789012.0), 123456789000.0);
        assert_eq!(round9(0.0), 0.0);
    }

    #[test]
    fn idempotent() {
        for x in [0.1, 2.0 / 7.0, 1e-20, 6.02214076e23, -5.5] {
            assert_eq!(round9(round9(x)), round9(x));
        }
    }
}
