//! JSON encodings shared by the channel, plan and state files.
//!
//! A 2×2 complex matrix is written as four `[re, im]` pairs in row-major
//! order. Readers also accept the nested `[[[re, im], [re, im]], [...]]` form.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::mat::{CMat2, C64};

#[derive(Deserialize)]
#[serde(untagged)]
enum MatRepr {
    Flat(Vec<[f64; 2]>),
    Nested(Vec<Vec<[f64; 2]>>),
}

pub fn to_pairs(m: &CMat2) -> [[f64; 2]; 4] {
    let e = &m.0;
    [
        [e[0][0].re, e[0][0].im],
        [e[0][1].re, e[0][1].im],
        [e[1][0].re, e[1][0].im],
        [e[1][1].re, e[1][1].im],
    ]
}

fn from_pairs(flat: &[[f64; 2]]) -> Option<CMat2> {
    if flat.len() != 4 {
        return None;
    }
    let c = |k: usize| C64::new(flat[k][0], flat[k][1]);
    Some(CMat2::new(c(0), c(1), c(2), c(3)))
}

pub fn serialize_mat<S: Serializer>(m: &CMat2, s: S) -> Result<S::Ok, S::Error> {
    to_pairs(m).serialize(s)
}

pub fn deserialize_mat<'de, D: Deserializer<'de>>(d: D) -> Result<CMat2, D::Error> {
    let repr = MatRepr::deserialize(d)?;
    let flat: Vec<[f64; 2]> = match repr {
        MatRepr::Flat(v) => v,
        MatRepr::Nested(rows) => {
            if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
                return Err(D::Error::custom("expected a 2×2 matrix"));
            }
            rows.into_iter().flatten().collect()
        }
    };
    from_pairs(&flat).ok_or_else(|| D::Error::custom("expected four [re, im] entries"))
}

pub mod mat2 {
    pub use super::{deserialize_mat as deserialize, serialize_mat as serialize};
}

pub mod opt_mat2 {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<CMat2>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(to_pairs).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMat2>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(deserialize_with = "deserialize_mat")] CMat2);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

pub mod vec_mat2 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[CMat2], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(to_pairs).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat2>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(deserialize_with = "deserialize_mat")] CMat2);
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}
