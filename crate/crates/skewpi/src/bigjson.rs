//! Serde adapters writing `BigInt` as a JSON number when it fits in `i64`
//! and as a decimal string otherwise. Both forms are accepted on input.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Int(i64),
    Text(String),
}

struct Big(BigInt);

impl Serialize for Big {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) => Repr::Int(v),
            None => Repr::Text(self.0.to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Big {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(Big(v.into())),
            Repr::Text(t) => t.trim().parse().map(Big).map_err(|_| serde::de::Error::custom(format!("bad integer {t:?}"))),
        }
    }
}

pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    Big(v.clone()).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
    Big::deserialize(d).map(|b| b.0)
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| Big(x.clone())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Ok(Vec::<Big>::deserialize(d)?.into_iter().map(|b| b.0).collect())
    }
}

pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|row| row.iter().map(|x| Big(x.clone())).collect::<Vec<_>>()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
        Ok(Vec::<Vec<Big>>::deserialize(d)?.into_iter().map(|r| r.into_iter().map(|b| b.0).collect()).collect())
    }
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|x| Big(x.clone())).serialize(s)
    }
}
