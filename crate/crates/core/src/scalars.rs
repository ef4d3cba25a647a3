//! Exact arithmetic in `Q_p` and in its ramified quadratic extension
//! `Q_p(s)` with `s^2 = p`, together with half-integer valuations and
//! reduction modulo `s`.
//!
//! Rationals stand in for elements of `Q_p`: every number the rest of the
//! crate manipulates is rational, so no truncated p-adic expansion is
//! needed.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::finite::{FqElem, FqField};

pub type Rat = BigRational;

/// A rational prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p.is_multiple_of(d)) {
            return Err(Error::InvalidParameters(format!("{p} is not prime")));
        }
        Ok(Prime(p))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn big(self) -> BigInt {
        BigInt::from(self.0)
    }

    pub fn rat(self) -> Rat {
        Rat::from_integer(self.big())
    }

    /// `p^e` as a rational, `e` of either sign.
    pub fn pow(self, e: i64) -> Rat {
        let base = num_traits::pow(self.big(), e.unsigned_abs() as usize);
        if e >= 0 {
            Rat::from_integer(base)
        } else {
            Rat::new(BigInt::one(), base)
        }
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of `(1/2)Z`, stored as its number of halves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt(i64);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub fn from_halves(h: i64) -> Self {
        HalfInt(h)
    }

    pub fn from_int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    pub fn halves(self) -> i64 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn floor(self) -> i64 {
        self.0.div_euclid(2)
    }

    pub fn ceil(self) -> i64 {
        -(-self.0).div_euclid(2)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 + o.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 - o.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl Mul<i64> for HalfInt {
    type Output = HalfInt;
    fn mul(self, k: i64) -> HalfInt {
        HalfInt(self.0 * k)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A valuation: a half-integer or `+inf` (the valuation of zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valuation {
    Finite(HalfInt),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<HalfInt> {
        match self {
            Valuation::Finite(h) => Some(h),
            Valuation::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Valuation::Infinity
    }

    pub fn int(n: i64) -> Self {
        Valuation::Finite(HalfInt::from_int(n))
    }
}

impl Add for Valuation {
    type Output = Valuation;
    fn add(self, o: Valuation) -> Valuation {
        match (self, o) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinity,
        }
    }
}

impl Add<HalfInt> for Valuation {
    type Output = Valuation;
    fn add(self, o: HalfInt) -> Valuation {
        self + Valuation::Finite(o)
    }
}

impl PartialEq<HalfInt> for Valuation {
    fn eq(&self, o: &HalfInt) -> bool {
        *self == Valuation::Finite(*o)
    }
}

impl PartialOrd<HalfInt> for Valuation {
    fn partial_cmp(&self, o: &HalfInt) -> Option<Ordering> {
        self.partial_cmp(&Valuation::Finite(*o))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(h) => h.fmt(f),
            Valuation::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for Valuation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Integer p-adic valuation of a nonzero integer.
pub fn val_int(n: &BigInt, p: Prime) -> i64 {
    debug_assert!(!n.is_zero());
    let pb = p.big();
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// p-adic valuation of a rational; `None` for zero.
pub fn val_rat(x: &Rat, p: Prime) -> Option<i64> {
    if x.is_zero() {
        None
    } else {
        Some(val_int(x.numer(), p) - val_int(x.denom(), p))
    }
}

/// Splits a nonzero rational as `p^v * u` with `u` a p-adic unit.
pub fn split_unit(x: &Rat, p: Prime) -> (i64, Rat) {
    let v = val_rat(x, p).expect("split_unit of zero");
    (v, x * p.pow(-v))
}

/// Image of a p-integral rational in `Z/p^e`, as an integer in `[0, p^e)`.
pub fn residue_mod_power(x: &Rat, p: Prime, e: u32) -> BigInt {
    let modulus = num_traits::pow(p.big(), e as usize);
    let d = x.denom().mod_floor(&modulus);
    let inv = mod_inverse(&d, &modulus).expect("denominator not a p-adic unit");
    (x.numer() * inv).mod_floor(&modulus)
}

pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let g = a.extended_gcd(m);
    if !g.gcd.is_one() {
        return None;
    }
    Some(g.x.mod_floor(m))
}

/// The canonical representative of `x` modulo `p^e Z_p`: the unique
/// rational in `[0, p^e)` whose denominator is a power of `p` and which is
/// congruent to `x`.
pub fn canonical_mod_power(x: &Rat, p: Prime, e: i64) -> Rat {
    if x.is_zero() {
        return Rat::zero();
    }
    // Work with y = x / p^e, reduce modulo Z_p, then scale back.
    let y = x * p.pow(-e);
    let s = val_int(y.denom(), p);
    if s == 0 {
        return Rat::zero();
    }
    let ps = num_traits::pow(p.big(), s as usize);
    let other = y.denom() / &ps;
    let inv = mod_inverse(&other.mod_floor(&ps), &ps).expect("unit");
    let t = (y.numer() * inv).mod_floor(&ps);
    Rat::new(t, ps) * p.pow(e)
}

/// Element `a + b*s` of `Q_p(s)`, `s^2 = p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KHat {
    p: Prime,
    a: Rat,
    b: Rat,
}

impl KHat {
    pub fn new(p: Prime, a: Rat, b: Rat) -> Self {
        KHat { p, a, b }
    }

    pub fn from_rat(p: Prime, a: Rat) -> Self {
        KHat { p, a, b: Rat::zero() }
    }

    pub fn from_int(p: Prime, n: i64) -> Self {
        Self::from_rat(p, Rat::from_integer(n.into()))
    }

    pub fn zero(p: Prime) -> Self {
        Self::from_int(p, 0)
    }

    pub fn one(p: Prime) -> Self {
        Self::from_int(p, 1)
    }

    /// The uniformizer `s` with `s^2 = p`.
    pub fn pihat(p: Prime) -> Self {
        KHat { p, a: Rat::zero(), b: Rat::one() }
    }

    /// `s^e` for any integer `e`.
    pub fn pihat_pow(p: Prime, e: i64) -> Self {
        let half = p.pow(e.div_euclid(2));
        if e.rem_euclid(2) == 0 {
            Self::from_rat(p, half)
        } else {
            KHat { p, a: Rat::zero(), b: half }
        }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn rational_part(&self) -> &Rat {
        &self.a
    }

    pub fn irrational_part(&self) -> &Rat {
        &self.b
    }

    /// The rational value, if the element lies in `Q_p`.
    pub fn as_rat(&self) -> Option<&Rat> {
        self.b.is_zero().then_some(&self.a)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    pub fn valuation(&self) -> Valuation {
        let va = val_rat(&self.a, self.p).map(|v| 2 * v);
        let vb = val_rat(&self.b, self.p).map(|v| 2 * v + 1);
        match (va, vb) {
            (None, None) => Valuation::Infinity,
            (Some(x), None) | (None, Some(x)) => Valuation::Finite(HalfInt(x)),
            (Some(x), Some(y)) => Valuation::Finite(HalfInt(x.min(y))),
        }
    }

    pub fn conj(&self) -> Self {
        KHat { p: self.p, a: self.a.clone(), b: -self.b.clone() }
    }

    /// `a^2 - p b^2`, never zero for a nonzero element since `p` is not a
    /// rational square.
    pub fn norm(&self) -> Rat {
        &self.a * &self.a - self.p.rat() * &self.b * &self.b
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm();
        Ok(KHat { p: self.p, a: &self.a / &n, b: -(&self.b / &n) })
    }

    pub fn div(&self, o: &KHat) -> Result<Self> {
        Ok(self * &o.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = KHat::one(self.p);
        let mut sq = base;
        let mut n = e.unsigned_abs();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &sq;
            }
            sq = &sq * &sq;
            n >>= 1;
        }
        Ok(acc)
    }

    pub fn scale(&self, r: &Rat) -> Self {
        KHat { p: self.p, a: &self.a * r, b: &self.b * r }
    }

    /// Image in `O/(s) = F_p`; `q` is the caller's residue field size.
    pub fn reduce_mod_pihat(&self, q: u64) -> Result<FqElem> {
        if q != self.p.get() {
            return Err(Error::ResidueFieldMismatch { q, p: self.p.get() });
        }
        if self.valuation() < HalfInt::ZERO {
            return Err(Error::NegativeValuation);
        }
        let field = FqField::prime_field(self.p)?;
        if self.a.is_zero() {
            return Ok(field.zero());
        }
        let r = residue_mod_power(&self.a, self.p, 1);
        Ok(field.from_int(r.to_i64().expect("residue fits")))
    }

    fn same_prime(&self, o: &KHat) {
        assert_eq!(self.p, o.p, "mixing elements over different primes");
    }
}

impl fmt::Display for KHat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (true, true) => f.write_str("0"),
            (false, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}*s", self.b),
            (false, false) => write!(f, "{}+{}*s", self.a, self.b),
        }
    }
}

impl Serialize for KHat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'a> Add<&'a KHat> for &'a KHat {
    type Output = KHat;
    fn add(self, o: &KHat) -> KHat {
        self.same_prime(o);
        KHat { p: self.p, a: &self.a + &o.a, b: &self.b + &o.b }
    }
}

impl<'a> Sub<&'a KHat> for &'a KHat {
    type Output = KHat;
    fn sub(self, o: &KHat) -> KHat {
        self.same_prime(o);
        KHat { p: self.p, a: &self.a - &o.a, b: &self.b - &o.b }
    }
}

impl<'a> Mul<&'a KHat> for &'a KHat {
    type Output = KHat;
    fn mul(self, o: &KHat) -> KHat {
        self.same_prime(o);
        let p = self.p.rat();
        KHat {
            p: self.p,
            a: &self.a * &o.a + p * &self.b * &o.b,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
}

impl Neg for &KHat {
    type Output = KHat;
    fn neg(self) -> KHat {
        KHat { p: self.p, a: -self.a.clone(), b: -self.b.clone() }
    }
}

impl Add for KHat {
    type Output = KHat;
    fn add(self, o: KHat) -> KHat {
        &self + &o
    }
}

impl Sub for KHat {
    type Output = KHat;
    fn sub(self, o: KHat) -> KHat {
        &self - &o
    }
}

impl Mul for KHat {
    type Output = KHat;
    fn mul(self, o: KHat) -> KHat {
        &self * &o
    }
}

impl Neg for KHat {
    type Output = KHat;
    fn neg(self) -> KHat {
        -&self
    }
}

/// Parses an exact rational literal such as `-3`, `1/2` or `7/9`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational literal: {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rat::new(n, d))
}

#[cfg(test)]
pub(crate) fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}
