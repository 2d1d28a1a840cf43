//! External addresses, their lexicographic order, the shift map and an order
//! embedding of integer sequences into the real line.
//!
//! The embedding is `h(s0 s1 ...) = s0 + q(h(s1 s2 ...))` with
//! `q(t) = 1/2 + t / (2 (1 + |t|))`. `q` maps the line onto `(0, 1)`, is strictly
//! increasing and sends rationals to rationals, so every cylinder (set of
//! addresses sharing a prefix) becomes an open interval with rational ends.
//! No finite-entry address lands on a cylinder endpoint.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::rational::{half, rational_to_f64, serialize_rational};

/// Cap on digit comparisons in [`ExternalAddress::height_cmp`].
pub const MAX_HEIGHT_DIGITS: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AddressError {
    #[error("malformed address `{0}`: {1}")]
    Parse(String, &'static str),
    #[error("address prefix must be nonempty")]
    EmptyPrefix,
    #[error("periodic tail needs a nonempty period block")]
    EmptyPeriod,
    #[error("height of {0} could not be separated from {1} within {MAX_HEIGHT_DIGITS} digits")]
    Undecided(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tail {
    Zero,
    Periodic(Vec<i64>),
}

/// An eventually-zero or eventually-periodic integer sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExternalAddress {
    prefix: Vec<i64>,
    tail: Tail,
}

impl ExternalAddress {
    /// The constant sequence `0 0 0 ...`.
    pub fn zero() -> Self {
        ExternalAddress {
            prefix: vec![0],
            tail: Tail::Zero,
        }
    }

    pub fn with_zero_tail(prefix: Vec<i64>) -> Result<Self, AddressError> {
        if prefix.is_empty() {
            return Err(AddressError::EmptyPrefix);
        }
        Ok(ExternalAddress {
            prefix,
            tail: Tail::Zero,
        })
    }

    pub fn periodic(prefix: Vec<i64>, period: Vec<i64>) -> Result<Self, AddressError> {
        if prefix.is_empty() {
            return Err(AddressError::EmptyPrefix);
        }
        if period.is_empty() {
            return Err(AddressError::EmptyPeriod);
        }
        Ok(ExternalAddress {
            prefix,
            tail: Tail::Periodic(period),
        })
    }

    pub fn prefix(&self) -> &[i64] {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    fn period_len(&self) -> usize {
        match &self.tail {
            Tail::Zero => 1,
            Tail::Periodic(p) => p.len(),
        }
    }

    pub fn entry(&self, i: usize) -> i64 {
        if let Some(&e) = self.prefix.get(i) {
            return e;
        }
        match &self.tail {
            Tail::Zero => 0,
            Tail::Periodic(p) => p[(i - self.prefix.len()) % p.len()],
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = i64> + '_ {
        (0..).map(move |i| self.entry(i))
    }

    /// The first `d` entries.
    pub fn truncate(&self, d: usize) -> Vec<i64> {
        self.entries().take(d).collect()
    }

    /// `σ(s0 s1 s2 ...) = s1 s2 ...`.
    pub fn shift(&self) -> Self {
        if self.prefix.len() > 1 {
            return ExternalAddress {
                prefix: self.prefix[1..].to_vec(),
                tail: self.tail.clone(),
            };
        }
        match &self.tail {
            Tail::Zero => ExternalAddress::zero(),
            Tail::Periodic(p) => {
                let mut rotated = p[1..].to_vec();
                rotated.push(p[0]);
                ExternalAddress {
                    prefix: vec![p[0]],
                    tail: Tail::Periodic(rotated),
                }
            }
        }
    }

    /// `s0 ⌢ self`.
    pub fn prepend(&self, s0: i64) -> Self {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push(s0);
        prefix.extend_from_slice(&self.prefix);
        ExternalAddress {
            prefix,
            tail: self.tail.clone(),
        }
    }

    /// Lexicographic comparison; decidable because both sequences are
    /// periodic beyond their prefixes.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        let bound = self.prefix.len().max(other.prefix.len()) + self.period_len().lcm(&other.period_len());
        (0..bound)
            .map(|i| self.entry(i).cmp(&other.entry(i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }

    /// Compare the embedded height `h(self)` with a rational `y`, exactly.
    ///
    /// Peels one digit of `y` per step (`y = n + q(y')`) until it disagrees
    /// with the address; `h` never equals an integer, which settles ties.
    pub fn height_cmp(&self, y: &BigRational) -> Result<Ordering, AddressError> {
        let mut y = Frac::from_rational(y);
        for i in 0..MAX_HEIGHT_DIGITS {
            let n = y.floor();
            match BigInt::from(self.entry(i)).cmp(&n) {
                Ordering::Greater => return Ok(Ordering::Greater),
                Ordering::Less => return Ok(Ordering::Less),
                Ordering::Equal => {}
            }
            y.sub_int(&n);
            if y.n.is_zero() {
                return Ok(Ordering::Greater);
            }
            y.q_inv();
            if i % 64 == 63 {
                y.reduce();
            }
        }
        Err(AddressError::Undecided(
            self.to_string(),
            crate::rational::format_rational(&y.to_rational()),
        ))
    }

    /// Whether `h(self)` lies in the closed interval `[lo, hi]`.
    pub fn height_in(&self, lo: &BigRational, hi: &BigRational) -> Result<bool, AddressError> {
        Ok(self.height_cmp(lo)? != Ordering::Less && self.height_cmp(hi)? != Ordering::Greater)
    }

    /// Floating approximation of `h(self)`, for plotting only.
    pub fn approx_height(&self) -> f64 {
        let iv = embed_point(self, 48);
        rational_to_f64(&((&iv.lo + &iv.hi) * half()))
    }
}

impl Ord for ExternalAddress {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lex_cmp(other)
    }
}

impl PartialOrd for ExternalAddress {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn join(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for ExternalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.tail {
            Tail::Zero => write!(f, "{}", join(&self.prefix)),
            Tail::Periodic(p) => write!(f, "{}|{}", join(&self.prefix), join(p)),
        }
    }
}

fn parse_list(src: &str, part: &str) -> Result<Vec<i64>, AddressError> {
    if part.trim().is_empty() {
        return Ok(Vec::new());
    }
    part.split(',')
        .map(|x| {
            x.trim()
                .parse::<i64>()
                .map_err(|_| AddressError::Parse(src.to_string(), "entries must be integers"))
        })
        .collect()
}

impl FromStr for ExternalAddress {
    type Err = AddressError;

    /// `"3,1,4"` is `3 1 4 0 0 ...`; `"1|2,3"` is `1 2 3 2 3 ...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('|') {
            None => Self::with_zero_tail(parse_list(s, s)?),
            Some((pre, per)) => {
                if per.contains('|') {
                    return Err(AddressError::Parse(s.to_string(), "at most one `|`"));
                }
                Self::periodic(parse_list(s, pre)?, parse_list(s, per)?)
            }
        }
    }
}

impl Serialize for ExternalAddress {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `q(t) = 1/2 + t / (2 (1 + |t|))`.
pub fn q(t: &BigRational) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    half() + t / (two * (BigRational::one() + t.abs()))
}

/// Inverse of `q` on `(0, 1)`.
pub fn q_inv(u: &BigRational) -> BigRational {
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let v = &two * u - &one;
    if *u >= half() {
        v / (&two - &two * u)
    } else {
        v / (two * u)
    }
}

/// Unreduced fraction `n / d` with `d > 0`, for long chains of `q` and `q⁻¹`
/// where normalising every step would dominate the cost.
struct Frac {
    n: BigInt,
    d: BigInt,
}

impl Frac {
    fn integer(n: BigInt) -> Self {
        Frac { n, d: BigInt::one() }
    }

    fn from_rational(r: &BigRational) -> Self {
        Frac {
            n: r.numer().clone(),
            d: r.denom().clone(),
        }
    }

    fn to_rational(&self) -> BigRational {
        BigRational::new(self.n.clone(), self.d.clone())
    }

    fn floor(&self) -> BigInt {
        self.n.div_floor(&self.d)
    }

    fn sub_int(&mut self, k: &BigInt) {
        self.n -= k * &self.d;
    }

    fn add_int(&mut self, k: &BigInt) {
        self.n += k * &self.d;
    }

    /// `q(n/d)`: `(d + 2n) / (2d + 2n)` for `n >= 0`, else `d / (2(d - n))`.
    fn q(&mut self) {
        if self.n.is_negative() {
            let d = std::mem::take(&mut self.d);
            self.d = (&d - &self.n) * 2;
            self.n = d;
        } else {
            let num = &self.d + &self.n * 2;
            self.d = (&self.d + &self.n) * 2;
            self.n = num;
        }
        self.reduce_twos();
    }

    /// Inverse of `q` for `0 < n/d < 1`.
    fn q_inv(&mut self) {
        let num: BigInt = &self.n * 2 - &self.d;
        if num.is_negative() {
            self.d = &self.n * 2;
        } else {
            self.d = (&self.d - &self.n) * 2;
        }
        self.n = num;
        self.reduce_twos();
    }

    fn reduce_twos(&mut self) {
        let z = self
            .n
            .trailing_zeros()
            .unwrap_or(0)
            .min(self.d.trailing_zeros().unwrap_or(0));
        if z > 0 {
            self.n >>= z;
            self.d >>= z;
        }
    }

    fn reduce(&mut self) {
        let g = self.n.gcd(&self.d);
        if !g.is_one() {
            self.n /= &g;
            self.d /= &g;
        }
    }
}

/// An open interval `(lo, hi)` with rational ends.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RationalInterval {
    #[serde(serialize_with = "serialize_rational")]
    pub lo: BigRational,
    #[serde(serialize_with = "serialize_rational")]
    pub hi: BigRational,
}

impl RationalInterval {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    /// `other ⊆ self` as closed intervals.
    pub fn contains_interval(&self, other: &RationalInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains(&self, y: &BigRational) -> bool {
        self.lo < *y && *y < self.hi
    }
}

/// The set of addresses starting with `prefix`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cylinder {
    pub prefix: Vec<i64>,
}

impl Cylinder {
    pub fn new(prefix: Vec<i64>) -> Result<Self, AddressError> {
        if prefix.is_empty() {
            return Err(AddressError::EmptyPrefix);
        }
        Ok(Cylinder { prefix })
    }

    pub fn interval(&self) -> RationalInterval {
        cylinder_interval(self)
    }
}

/// Image of a cylinder under the embedding: the tail ranges over all of the
/// line, `q` maps that to `(0, 1)`, and each outer digit shifts and squeezes.
pub fn cylinder_interval(c: &Cylinder) -> RationalInterval {
    let Some((&last, rest)) = c.prefix.split_last() else {
        return RationalInterval {
            lo: BigRational::zero(),
            hi: BigRational::one(),
        };
    };
    let mut lo = Frac::integer(BigInt::from(last));
    let mut hi = Frac::integer(BigInt::from(last) + 1);
    for &d in rest.iter().rev() {
        let shift = BigInt::from(d);
        for end in [&mut lo, &mut hi] {
            end.q();
            end.add_int(&shift);
        }
    }
    RationalInterval {
        lo: lo.to_rational(),
        hi: hi.to_rational(),
    }
}

/// Cylinder interval of the depth-`depth` truncation of `s`.
pub fn embed_point(s: &ExternalAddress, depth: usize) -> RationalInterval {
    cylinder_interval(&Cylinder {
        prefix: s.truncate(depth.max(1)),
    })
}

/// Depth-`depth` prefix of the cylinder containing a rational point, or `None`
/// if the point is an endpoint of some cylinder of depth `<= depth`.
pub fn prefix_of_point(y: &BigRational, depth: usize) -> Option<Vec<i64>> {
    use num_traits::ToPrimitive;
    let mut y = Frac::from_rational(y);
    let mut out = Vec::with_capacity(depth);
    for i in 0..depth {
        let n = y.floor();
        y.sub_int(&n);
        if y.n.is_zero() {
            return None;
        }
        out.push(n.to_i64()?);
        y.q_inv();
        if i % 64 == 63 {
            y.reduce();
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> ExternalAddress {
        s.parse().unwrap()
    }

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn lex_examples() {
        assert_eq!(ExternalAddress::zero().lex_cmp(&a("0")), Ordering::Equal);
        assert_eq!(a("0,1,2").lex_cmp(&a("0,2")), Ordering::Less);
        assert_eq!(a("-1,5").lex_cmp(&a("0,-9")), Ordering::Less);
        assert_eq!(a("1|2,3").lex_cmp(&a("1,2|3,2")), Ordering::Equal);
        assert_eq!(a("0|1").lex_cmp(&a("0,1,1,1,1,1,1")), Ordering::Greater);
    }

    #[test]
    fn shift_examples() {
        assert_eq!(a("3,1,4").shift(), a("1,4"));
        assert_eq!(ExternalAddress::zero().shift(), ExternalAddress::zero());
        assert_eq!(a("1|2,3").shift(), a("2|3,2"));
        assert_eq!(a("7").shift(), ExternalAddress::zero());
        assert_eq!(a("5,-2|4").prepend(9).shift(), a("5,-2|4"));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(a("3,1,4").to_string(), "3,1,4");
        assert_eq!(a(" 1 | 2, 3").to_string(), "1|2,3");
        assert!("".parse::<ExternalAddress>().is_err());
        assert!("1|".parse::<ExternalAddress>().is_err());
        assert!("|1".parse::<ExternalAddress>().is_err());
        assert!("1,x".parse::<ExternalAddress>().is_err());
        assert!("1|2|3".parse::<ExternalAddress>().is_err());
    }

    #[test]
    fn cylinder_examples() {
        let c = |p: &[i64]| cylinder_interval(&Cylinder::new(p.to_vec()).unwrap());
        assert_eq!(
            c(&[0]),
            RationalInterval {
                lo: r(0, 1),
                hi: r(1, 1)
            }
        );
        assert_eq!(
            c(&[0, 0]),
            RationalInterval {
                lo: r(1, 2),
                hi: r(3, 4)
            }
        );
        assert_eq!(q(&r(-1, 1)), r(1, 4));
        let iv = c(&[1, -1]);
        assert_eq!(
            iv,
            RationalInterval {
                lo: r(5, 4),
                hi: r(3, 2)
            }
        );
        assert!(c(&[1]).contains_interval(&iv));
    }

    #[test]
    fn embed_examples() {
        let z = ExternalAddress::zero();
        assert_eq!(
            embed_point(&z, 1),
            RationalInterval {
                lo: r(0, 1),
                hi: r(1, 1)
            }
        );
        assert_eq!(
            embed_point(&z, 2),
            RationalInterval {
                lo: r(1, 2),
                hi: r(3, 4)
            }
        );
        let two = a("2");
        let d3 = embed_point(&two, 3);
        assert!(embed_point(&two, 1).contains_interval(&d3));
        assert!(embed_point(&two, 2).contains_interval(&d3));
        assert!(d3.lo < d3.hi);
    }

    #[test]
    fn q_inverse_roundtrip() {
        for (p, d) in [(-7, 3), (0, 1), (5, 11), (-1, 100), (13, 2)] {
            let t = r(p, d);
            assert_eq!(q_inv(&q(&t)), t);
        }
    }

    #[test]
    fn height_of_zero_is_inverse_sqrt2() {
        // h(0̄) solves t = q(t), i.e. t = 1/sqrt(2) ≈ 0.70710678.
        let z = ExternalAddress::zero();
        assert_eq!(z.height_cmp(&r(7071, 10000)).unwrap(), Ordering::Greater);
        assert_eq!(z.height_cmp(&r(7072, 10000)).unwrap(), Ordering::Less);
        assert!((z.approx_height() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(z.height_cmp(&r(1, 1)).unwrap(), Ordering::Less);
        assert_eq!(z.height_cmp(&r(0, 1)).unwrap(), Ordering::Greater);
    }

    #[test]
    fn prefix_of_point_inverts_embedding() {
        let s = a("2,-3,0,5");
        let iv = embed_point(&s, 6);
        let mid = (&iv.lo + &iv.hi) * half();
        assert_eq!(prefix_of_point(&mid, 6).unwrap(), s.truncate(6));
        assert_eq!(prefix_of_point(&r(1, 2), 3), None);
    }
}
