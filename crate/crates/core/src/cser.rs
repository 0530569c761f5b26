//! Serde adapters writing complex numbers as `{"re": …, "im": …}`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::C64;

#[derive(Serialize, Deserialize)]
struct Repr {
    re: f64,
    im: f64,
}

impl From<C64> for Repr {
    fn from(z: C64) -> Self {
        Repr { re: z.re, im: z.im }
    }
}

impl From<Repr> for C64 {
    fn from(r: Repr) -> Self {
        C64::new(r.re, r.im)
    }
}

pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    Repr::from(*z).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
    Repr::deserialize(d).map(C64::from)
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|z| Repr::from(*z)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Vec::<Repr>::deserialize(d).map(|v| v.into_iter().map(C64::from).collect())
    }
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Option<C64>, s: S) -> Result<S::Ok, S::Error> {
        z.map(Repr::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<C64>, D::Error> {
        Option::<Repr>::deserialize(d).map(|o| o.map(C64::from))
    }
}

pub mod pairs {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[(C64, C64)], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|(a, b)| (Repr::from(*a), Repr::from(*b))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(C64, C64)>, D::Error> {
        Vec::<(Repr, Repr)>::deserialize(d)
            .map(|v| v.into_iter().map(|(a, b)| (C64::from(a), C64::from(b))).collect())
    }
}
