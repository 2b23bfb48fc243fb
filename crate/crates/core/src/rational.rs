//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

/// The scalar field of the whole crate.
pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parse `p`, `-p` or `p/q`. Returns `None` on malformed input or zero denominator.
pub fn parse_rational(s: &str) -> Option<Q> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (s, None),
    };
    let valid = |t: &str, signed: bool| {
        let t = if signed { t.strip_prefix('-').or_else(|| t.strip_prefix('+')).unwrap_or(t) } else { t };
        !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(num, true) {
        return None;
    }
    let n: BigInt = num.parse().ok()?;
    let d: BigInt = match den {
        Some(d) if valid(d, false) => d.parse().ok()?,
        Some(_) => return None,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return None;
    }
    Some(Q::new(n, d))
}

/// Comma-separated list of rationals, as used for points and directions.
pub fn parse_rational_list(s: &str) -> Option<Vec<Q>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(parse_rational).collect()
}

/// `p/q`, or `p` when the denominator is one.
pub fn fmt_rational(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn fmt_vector(v: &[Q]) -> String {
    let parts: Vec<String> = v.iter().map(fmt_rational).collect();
    format!("({})", parts.join(", "))
}

/// Small random rational with numerator in `-num..=num` and denominator in `1..=den`.
pub fn random_rational<R: Rng + ?Sized>(rng: &mut R, num: i64, den: i64) -> Q {
    q(rng.gen_range(-num..=num), rng.gen_range(1..=den))
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, num: i64, den: i64) -> Vec<Q> {
    (0..len).map(|_| random_rational(rng, num, den)).collect()
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

pub fn sign(x: &Q) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// Serde adapters that write rationals as `"p/q"` strings.
pub mod serde_q {
    use super::{fmt_rational, parse_rational, Q};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}")))
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&fmt_rational(x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| parse_rational(s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}"))))
                .collect()
        }
    }

    pub mod matrix {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(m: &[Vec<Q>], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(m.len()))?;
            for row in m {
                let r: Vec<String> = row.iter().map(fmt_rational).collect();
                seq.serialize_element(&r)?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Q>>, D::Error> {
            let m = Vec::<Vec<String>>::deserialize(d)?;
            m.iter()
                .map(|row| {
                    row.iter()
                        .map(|s| parse_rational(s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}"))))
                        .collect()
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("3/6"), Some(q(1, 2)));
        assert_eq!(parse_rational("-4"), Some(qi(-4)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("1/-2"), None);
        assert_eq!(parse_rational("1.5"), None);
        assert_eq!(parse_rational(""), None);
        assert_eq!(fmt_rational(&q(-6, 4)), "-3/2");
        assert_eq!(fmt_rational(&qi(7)), "7");
        assert_eq!(parse_rational_list("1, -1/2,0"), Some(vec![qi(1), q(-1, 2), qi(0)]));
        assert_eq!(parse_rational_list("1,,2"), None);
    }
}
