//! JSON encodings shared by every artifact: rationals as
//! `{"num": "<decimal>", "den": "<decimal>"}` and big integers as decimal
//! strings.

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::numerics::Rational;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRational {
    num: String,
    den: String,
}

pub mod rational {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        RawRational {
            num: x.numer().to_string(),
            den: x.denom().to_string(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = RawRational::deserialize(d)?;
        let num = BigInt::from_str(&raw.num).map_err(serde::de::Error::custom)?;
        let den = BigInt::from_str(&raw.den).map_err(serde::de::Error::custom)?;
        if den.is_zero() || den.is_negative() {
            return Err(serde::de::Error::custom("denominator must be positive"));
        }
        Ok(Rational::new(num, den))
    }
}

pub mod rational_vec {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::rational")] Rational);

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|x| Wrap(x.clone())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v: Vec<Wrap> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|w| w.0).collect())
    }
}

pub mod bigint {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        BigInt::from_str(s.trim()).map_err(serde::de::Error::custom)
    }
}

pub mod bigint_vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.iter()
            .map(|s| BigInt::from_str(s.trim()).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "rational")]
        x: Rational,
        #[serde(with = "bigint")]
        n: BigInt,
    }

    #[test]
    fn encodes_as_decimal_strings() {
        let h = Holder {
            x: rat(-6, 4),
            n: BigInt::from_str("123456789012345678901234567890").unwrap(),
        };
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(
            json,
            r#"{"x":{"num":"-3","den":"2"},"n":"123456789012345678901234567890"}"#
        );
        assert_eq!(serde_json::from_str::<Holder>(&json).unwrap(), h);
    }

    #[test]
    fn rejects_bad_denominators() {
        let bad = r#"{"x":{"num":"1","den":"0"},"n":"1"}"#;
        assert!(serde_json::from_str::<Holder>(bad).is_err());
        let neg = r#"{"x":{"num":"1","den":"-2"},"n":"1"}"#;
        assert!(serde_json::from_str::<Holder>(neg).is_err());
    }
}
