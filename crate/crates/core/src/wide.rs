//! Serde helpers for exact integers.
//!
//! Values whose magnitude fits in 53 bits are written as JSON numbers; larger
//! values are written as decimal strings. Both forms are accepted on input.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

const SAFE_BITS: u32 = 53;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Wide(pub i128);

impl Serialize for Wide {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.unsigned_abs() < (1u128 << SAFE_BITS) {
            s.serialize_i64(self.0 as i64)
        } else {
            s.serialize_str(&self.0.to_string())
        }
    }
}

struct WideVisitor;

impl Visitor<'_> for WideVisitor {
    type Value = Wide;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("an integer or a decimal integer string")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Wide, E> {
        Ok(Wide(v as i128))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Wide, E> {
        Ok(Wide(v as i128))
    }

    fn visit_i128<E: de::Error>(self, v: i128) -> Result<Wide, E> {
        Ok(Wide(v))
    }

    fn visit_u128<E: de::Error>(self, v: u128) -> Result<Wide, E> {
        i128::try_from(v)
            .map(Wide)
            .map_err(|_| E::custom("integer exceeds 128-bit range"))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Wide, E> {
        Err(E::custom(format!("expected an integer, found {v}")))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Wide, E> {
        v.trim()
            .parse::<i128>()
            .map(Wide)
            .map_err(|_| E::custom(format!("`{v}` is not a decimal integer")))
    }
}

impl<'de> Deserialize<'de> for Wide {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(WideVisitor)
    }
}

pub(crate) mod scalar {
    use super::*;

    pub fn serialize<S: Serializer>(v: &i128, s: S) -> Result<S::Ok, S::Error> {
        Wide(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i128, D::Error> {
        Wide::deserialize(d).map(|w| w.0)
    }
}

pub(crate) mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[i128], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| Wide(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<i128>, D::Error> {
        Ok(Vec::<Wide>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

pub(crate) mod map {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BTreeMap<String, i128>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(v.iter().map(|(k, &x)| (k, Wide(x))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, i128>, D::Error> {
        Ok(BTreeMap::<String, Wide>::deserialize(d)?
            .into_iter()
            .map(|(k, w)| (k, w.0))
            .collect())
    }
}
