//! JSON number formatting shared by every on-disk document.
//!
//! Floats are written in scientific notation with 17 significant digits so a
//! document read back with `serde_json` (built with `float_roundtrip`)
//! reproduces every `f64` bit for bit.

use serde::de::Deserializer;
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

/// Formats a finite float with 17 significant digits.
pub fn format_f17(x: f64) -> String {
    format!("{x:.16e}")
}

/// An `f64` that serializes with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("cannot encode non-finite number {}", self.0)));
        }
        let raw = RawValue::from_string(format_f17(self.0)).map_err(S::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for F17 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(F17)
    }
}

/// `#[serde(with = "crate::json::f17")]` for plain `f64` fields.
pub mod f17 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        F17(*x).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        f64::deserialize(deserializer)
    }
}

/// `#[serde(with = "crate::json::f17_vec")]` for `Vec<f64>` fields.
pub mod f17_vec {
    use super::*;

    pub fn serialize<S: Serializer>(x: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(x.iter().map(|&v| F17(v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<f64>, D::Error> {
        Vec::<f64>::deserialize(deserializer)
    }
}

/// `#[serde(with = "crate::json::f17_opt")]` for `Option<f64>` fields.
pub mod f17_opt {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, serializer: S) -> Result<S::Ok, S::Error> {
        x.map(F17).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(deserializer)
    }
}

/// `#[serde(with = "crate::json::f17_array")]` for `[f64; N]` fields.
pub mod f17_array {
    use super::*;

    pub fn serialize<S: Serializer, const N: usize>(
        xs: &[f64; N],
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut tup = serializer.serialize_tuple(N)?;
        for x in xs {
            tup.serialize_element(&F17(*x))?;
        }
        tup.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        deserializer: D,
    ) -> Result<[f64; N], D::Error> {
        let v = Vec::<f64>::deserialize(deserializer)?;
        let len = v.len();
        v.try_into().map_err(|_| {
            serde::de::Error::invalid_length(len, &format!("an array of {N} numbers").as_str())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, -2.5e-300, 6.02e23, 0.0] {
            let s = serde_json::to_string(&F17(x)).unwrap();
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
            let back: F17 = serde_json::from_str(&s).unwrap();
            assert_eq!(back.0.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(serde_json::to_string(&F17(f64::NAN)).is_err());
        assert!(serde_json::to_string(&F17(f64::INFINITY)).is_err());
    }
}
