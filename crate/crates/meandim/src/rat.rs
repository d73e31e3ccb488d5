//! Exact rational scalars and their JSON convention.
//!
//! Rationals serialize as strings `"p/q"` (or `"p"` for integers); floats
//! never appear in certificates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// The exact scalar used throughout certificates and region endpoints.
pub type Rat = BigRational;

pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rat {
    Rat::from_integer(BigInt::from(p))
}

/// `2^{-k}`.
pub fn pow2_neg(k: u32) -> Rat {
    Rat::new(BigInt::one(), BigInt::one() << k)
}

/// Parse `"p/q"` or `"p"`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.parse::<BigInt>()
            .map_err(|_| Error::Malformed(format!("bad rational component {t:?}")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let den = parse_int(q)?;
            if den.is_zero() {
                return Err(Error::Malformed(format!("zero denominator in {s:?}")));
            }
            Ok(Rat::new(parse_int(p)?, den))
        }
        None => Ok(Rat::from_integer(parse_int(s)?)),
    }
}

pub fn rat_to_string(r: &Rat) -> String {
    r.to_string()
}

/// Floor of a rational as i64.
pub fn floor_i64(r: &Rat) -> i64 {
    r.floor().to_integer().to_i64().expect("rational floor out of i64 range")
}

pub fn ceil_i64(r: &Rat) -> i64 {
    r.ceil().to_integer().to_i64().expect("rational ceil out of i64 range")
}

/// Fractional part `{r} = r - floor(r)`, always in `[0,1)`.
pub fn fract(r: &Rat) -> Rat {
    r - r.floor()
}

/// `x mod m` for integer `m >= 1`, result in `[0, m)`.
pub fn mod_i64(x: i64, m: i64) -> i64 {
    debug_assert!(m >= 1);
    x.rem_euclid(m)
}

/// Reduce a rational into `[0,1)` (circle coordinate).
pub fn wrap_unit(r: &Rat) -> Rat {
    let f = fract(r);
    debug_assert!(!f.is_negative() && f < Rat::one());
    f
}

/// Serde adapters: `Rat` as `"p/q"` strings.
pub mod rat_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rat_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapters for `Option<Rat>`.
pub mod rat_opt_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        r: &Option<Rat>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&rat_to_string(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Rat>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse_rat(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

/// Serde adapters for `Vec<Rat>`.
pub mod rat_vec_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(rat_to_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rat>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse_rat(s).map_err(serde::de::Error::custom)).collect()
    }
}

/// Serde adapters for `Vec<Vec<Rat>>`.
pub mod rat_mat_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Rat>], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|row| row.iter().map(rat_to_string).collect::<Vec<_>>()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Vec<Rat>>, D::Error> {
        let v = Vec::<Vec<String>>::deserialize(d)?;
        v.iter()
            .map(|row| row.iter().map(|s| parse_rat(s).map_err(serde::de::Error::custom)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        for s in ["3/4", "-7/2", "5", "0", "-12"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(rat_to_string(&r), s);
        }
    }

    #[test]
    fn rejects_zero_denominator() {
        assert!(parse_rat("1/0").is_err());
    }

    #[test]
    fn floor_fract() {
        let r = rat(-7, 2);
        assert_eq!(floor_i64(&r), -4);
        assert_eq!(fract(&r), rat(1, 2));
        assert_eq!(wrap_unit(&rat(9, 4)), rat(1, 4));
    }
}
