//! Scalar abstraction shared by every numeric module.
//!
//! The function-space code (piecewise-linear elements, cone projections,
//! analytic bounds) is written once against [`Real`] and instantiated for
//! `f32` and `f64`. Probability special functions are always evaluated in
//! double precision and converted back.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Tolerance used for slope comparisons (hull tie-breaking, cone membership).
    fn slope_tolerance() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn slope_tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    #[inline]
    fn slope_tolerance() -> Self {
        1e-5
    }
}

/// Serde adapter writing non-finite values as `"inf"`, `"-inf"` or `"nan"`,
/// since JSON numbers cannot carry them.
pub(crate) mod extended {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Real;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn decode<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("expected a number, \"inf\", \"-inf\" or \"nan\", got {other:?}"))),
            },
        }
    }

    fn encode<S: Serializer>(x: f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn serialize<T: Real, S: Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
        encode(x.to_f64_lossy(), s)
    }

    pub fn deserialize<'de, T: Real, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let x = decode(Repr::deserialize(d)?)?;
        T::from_f64(x).ok_or_else(|| D::Error::custom("value not representable"))
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        use super::{decode, Real, Repr};

        struct One(f64);

        impl serde::Serialize for One {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                super::encode(self.0, s)
            }
        }

        pub fn serialize<T: Real, S: Serializer>(xs: &[T], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&One(x.to_f64_lossy()))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, T: Real, D: Deserializer<'de>>(d: D) -> Result<Vec<T>, D::Error> {
            Vec::<Repr>::deserialize(d)?
                .into_iter()
                .map(|r| {
                    let x = decode(r)?;
                    T::from_f64(x).ok_or_else(|| serde::de::Error::custom("value not representable"))
                })
                .collect()
        }
    }
}
