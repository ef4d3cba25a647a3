//! Rational functions over `Q_p(s)` kept in factored form
//! `lead * P(z) * prod (z - x_i)^(m_i)`.
//!
//! `P` is a monic polynomial with no root among the `x_i` (often just `1`);
//! it absorbs numerators that do not split, such as those produced by
//! differentiation or addition. Every pole is among the `x_i`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalars::{HalfInt, KHat, Prime, Rat, Valuation};
use crate::tree::{edge_transporter, GroupElement, TreeEdge, TreeVertex};

/// Dense polynomial over `Q_p(s)`, constant term first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KPoly {
    p: Prime,
    coeffs: Vec<KHat>,
}

impl KPoly {
    pub fn new(p: Prime, mut coeffs: Vec<KHat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        KPoly { p, coeffs }
    }

    pub fn zero(p: Prime) -> Self {
        KPoly { p, coeffs: vec![] }
    }

    pub fn constant(c: KHat) -> Self {
        let p = c.prime();
        Self::new(p, vec![c])
    }

    pub fn one(p: Prime) -> Self {
        Self::constant(KHat::one(p))
    }

    /// `z - x`.
    pub fn linear(x: &KHat) -> Self {
        let p = x.prime();
        Self::new(p, vec![-x, KHat::one(p)])
    }

    pub fn coeffs(&self) -> &[KHat] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> KHat {
        self.coeffs.get(j).cloned().unwrap_or_else(|| KHat::zero(self.p))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> KHat {
        self.coeffs.last().cloned().unwrap_or_else(|| KHat::zero(self.p))
    }

    pub fn add(&self, o: &KPoly) -> KPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new(self.p, (0..n).map(|j| &self.coeff(j) + &o.coeff(j)).collect())
    }

    pub fn sub(&self, o: &KPoly) -> KPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new(self.p, (0..n).map(|j| &self.coeff(j) - &o.coeff(j)).collect())
    }

    pub fn mul(&self, o: &KPoly) -> KPoly {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.p);
        }
        let mut out = vec![KHat::zero(self.p); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Self::new(self.p, out)
    }

    pub fn scale(&self, c: &KHat) -> KPoly {
        Self::new(self.p, self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn pow(&self, e: u32) -> KPoly {
        (0..e).fold(Self::one(self.p), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, z: &KHat) -> KHat {
        self.coeffs.iter().rev().fold(KHat::zero(self.p), |acc, c| &(&acc * z) + c)
    }

    pub fn derivative(&self) -> KPoly {
        Self::new(
            self.p,
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c.scale(&Rat::from_integer(BigInt::from(j))))
                .collect(),
        )
    }

    /// Quotient and remainder by a nonzero divisor.
    pub fn divrem(&self, d: &KPoly) -> Result<(KPoly, KPoly)> {
        let dd = d.degree().ok_or(Error::DivisionByZero)?;
        let lead_inv = d.leading().inv()?;
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return Ok((Self::zero(self.p), self.clone()));
        }
        let mut q = vec![KHat::zero(self.p); r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = &r[i + dd] * &lead_inv;
            for (j, dc) in d.coeffs.iter().enumerate() {
                r[i + j] = &r[i + j] - &(&c * dc);
            }
            q[i] = c;
        }
        r.truncate(dd);
        Ok((Self::new(self.p, q), Self::new(self.p, r)))
    }

    /// Coefficients of `P(b + s w)` in `w`.
    pub fn affine_substitute(&self, b: &KHat, s: &KHat) -> KPoly {
        let lin = Self::new(self.p, vec![b.clone(), s.clone()]);
        self.coeffs
            .iter()
            .rev()
            .fold(Self::zero(self.p), |acc, c| acc.mul(&lin).add(&Self::constant(c.clone())))
    }

    /// Gauss valuation on the disc `b + p^(-m) O`, that is
    /// `min_j ord(t_j) - m j` where `P = sum t_j (z - b)^j`.
    pub fn gauss_on_disc(&self, level: i64, center: &KHat) -> Valuation {
        let shifted = self.affine_substitute(center, &KHat::one(self.p));
        shifted
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c.valuation() + HalfInt::from_int(-level * j as i64))
            .min()
            .unwrap_or(Valuation::Infinity)
    }

    fn fmt_sum(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let coeff = fmt_scalar(c);
            parts.push(match j {
                0 => coeff,
                1 => format!("{coeff}*z"),
                _ => format!("{coeff}*z^{j}"),
            });
        }
        parts.join("+")
    }
}

fn fmt_scalar(c: &KHat) -> String {
    let a = c.rational_part();
    let b = c.irrational_part();
    let wrap = |r: &Rat| {
        if r.is_integer() && !r.numer().sign().eq(&num_bigint::Sign::Minus) {
            r.to_string()
        } else {
            format!("({r})")
        }
    };
    match (a.is_zero(), b.is_zero()) {
        (_, true) => wrap(a),
        (true, false) => format!("{}*s", wrap(b)),
        (false, false) => format!("({}+{}*s)", wrap(a), wrap(b)),
    }
}

/// A rational function `lead * P(z) * prod (z - x_i)^(m_i)`.
#[derive(Clone, Debug)]
pub struct FactoredRational {
    p: Prime,
    lead: KHat,
    extra: KPoly,
    factors: BTreeMap<KHat, i64>,
}

impl PartialEq for FactoredRational {
    fn eq(&self, o: &Self) -> bool {
        self.same_function(o)
    }
}

impl FactoredRational {
    pub fn zero(p: Prime) -> Self {
        FactoredRational { p, lead: KHat::zero(p), extra: KPoly::one(p), factors: BTreeMap::new() }
    }

    pub fn constant(c: KHat) -> Self {
        let p = c.prime();
        FactoredRational { p, lead: c, extra: KPoly::one(p), factors: BTreeMap::new() }
    }

    pub fn one(p: Prime) -> Self {
        Self::constant(KHat::one(p))
    }

    /// The coordinate function `z`.
    pub fn z(p: Prime) -> Self {
        Self::linear_power(&KHat::zero(p), 1)
    }

    /// `(z - x)^m`.
    pub fn linear_power(x: &KHat, m: i64) -> Self {
        let p = x.prime();
        let mut factors = BTreeMap::new();
        if m != 0 {
            factors.insert(x.clone(), m);
        }
        FactoredRational { p, lead: KHat::one(p), extra: KPoly::one(p), factors }
    }

    /// Builds `lead * prod (z - x)^m`, merging repeated roots.
    pub fn from_factors(lead: KHat, factors: impl IntoIterator<Item = (KHat, i64)>) -> Self {
        let p = lead.prime();
        let mut f = Self::constant(lead);
        for (x, m) in factors {
            f = f.mul(&Self::linear_power(&x, m));
        }
        f.normalize();
        let _ = p;
        f
    }

    /// `c * P(z)` for an arbitrary polynomial.
    pub fn from_poly(poly: &KPoly) -> Self {
        let p = poly.p;
        if poly.is_zero() {
            return Self::zero(p);
        }
        let lead = poly.leading();
        let monic = poly.scale(&lead.inv().expect("nonzero"));
        let mut f = FactoredRational { p, lead, extra: monic, factors: BTreeMap::new() };
        f.normalize();
        f
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn lead(&self) -> &KHat {
        &self.lead
    }

    pub fn is_zero(&self) -> bool {
        self.lead.is_zero()
    }

    /// Roots with multiplicities, poles negative.
    pub fn factors(&self) -> impl Iterator<Item = (&KHat, i64)> {
        self.factors.iter().map(|(x, &m)| (x, m))
    }

    /// The non-split monic polynomial factor.
    pub fn extra(&self) -> &KPoly {
        &self.extra
    }

    pub fn poles(&self) -> impl Iterator<Item = (&KHat, i64)> {
        self.factors().filter(|(_, m)| *m < 0).map(|(x, m)| (x, -m))
    }

    pub fn is_polynomial(&self) -> bool {
        self.factors.values().all(|&m| m > 0)
    }

    /// Pulls known roots out of `extra` and splits it when linear.
    fn normalize(&mut self) {
        if self.lead.is_zero() {
            *self = Self::zero(self.p);
            return;
        }
        loop {
            let root = self.factors.keys().find(|x| self.extra.degree().unwrap_or(0) > 0 && self.extra.eval(x).is_zero()).cloned();
            match root {
                Some(x) => {
                    let (q, _) = self.extra.divrem(&KPoly::linear(&x)).expect("nonzero divisor");
                    self.extra = q;
                    *self.factors.entry(x).or_insert(0) += 1;
                }
                None => break,
            }
        }
        if self.extra.degree() == Some(1) {
            let x = -&self.extra.coeff(0);
            self.extra = KPoly::one(self.p);
            *self.factors.entry(x).or_insert(0) += 1;
        }
        self.factors.retain(|_, m| *m != 0);
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.p);
        }
        let mut factors = self.factors.clone();
        for (x, m) in &o.factors {
            *factors.entry(x.clone()).or_insert(0) += m;
        }
        let mut out = FactoredRational {
            p: self.p,
            lead: &self.lead * &o.lead,
            extra: self.extra.mul(&o.extra),
            factors,
        };
        out.normalize();
        out
    }

    pub fn scale(&self, c: &KHat) -> Self {
        self.mul(&Self::constant(c.clone()))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 && self.extra.degree().unwrap_or(0) > 0 {
            return Err(Error::Parse("cannot invert a factor that does not split".into()));
        }
        if self.is_zero() {
            return if e > 0 { Ok(self.clone()) } else { Err(Error::DivisionByZero) };
        }
        Ok(FactoredRational {
            p: self.p,
            lead: self.lead.pow(e)?,
            extra: if e >= 0 { self.extra.pow(e as u32) } else { KPoly::one(self.p) },
            factors: self.factors.iter().map(|(x, m)| (x.clone(), m * e)).filter(|(_, m)| *m != 0).collect(),
        })
    }

    pub fn inv(&self) -> Result<Self> {
        self.pow(-1)
    }

    /// Numerator and denominator as expanded polynomials.
    pub fn expanded(&self) -> (KPoly, KPoly) {
        let p = self.p;
        let mut num = self.extra.scale(&self.lead);
        let mut den = KPoly::one(p);
        for (x, &m) in &self.factors {
            let lin = KPoly::linear(x).pow(m.unsigned_abs() as u32);
            if m > 0 {
                num = num.mul(&lin);
            } else {
                den = den.mul(&lin);
            }
        }
        (num, den)
    }

    /// Denominator as a factored monic polynomial.
    fn denominator_factors(&self) -> BTreeMap<KHat, i64> {
        self.factors.iter().filter(|(_, &m)| m < 0).map(|(x, &m)| (x.clone(), -m)).collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        // Common denominator: the maximum pole order at each root.
        let mut den = self.denominator_factors();
        for (x, m) in o.denominator_factors() {
            let e = den.entry(x).or_insert(0);
            *e = (*e).max(m);
        }
        let numer_over = |f: &Self| -> KPoly {
            // f * den as a polynomial.
            let mut g = f.clone();
            for (x, m) in &den {
                *g.factors.entry(x.clone()).or_insert(0) += m;
            }
            g.factors.retain(|_, m| *m != 0);
            g.expanded().0
        };
        let num = numer_over(self).add(&numer_over(o));
        if num.is_zero() {
            return Self::zero(self.p);
        }
        let mut out = Self::from_poly(&num);
        for (x, m) in den {
            *out.factors.entry(x).or_insert(0) -= m;
        }
        out.factors.retain(|_, m| *m != 0);
        out.normalize();
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-&KHat::one(self.p))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Equality as functions, by cross multiplication.
    pub fn same_function(&self, o: &Self) -> bool {
        let (n1, d1) = self.expanded();
        let (n2, d2) = o.expanded();
        n1.mul(&d2) == n2.mul(&d1)
    }

    /// Value at `z`, or `None` at a pole.
    pub fn eval(&self, z: &KHat) -> Option<KHat> {
        let mut acc = &self.lead * &self.extra.eval(z);
        for (x, &m) in &self.factors {
            let t = (z - x).pow(m).ok()?;
            acc = &acc * &t;
        }
        Some(acc)
    }

    /// `f((b + d z) / (a + c z)) * (a + c z)^(-k)` for `g = [[a, b], [c, d]]`,
    /// the weight-`k` transform without the character factor.
    pub fn slash_raw(&self, g: &GroupElement, k: i64) -> Self {
        let p = self.p;
        if self.is_zero() {
            return self.clone();
        }
        let k_of = |r: &Rat| KHat::from_rat(p, r.clone());
        let (a, b, c, d) = (k_of(&g.a), k_of(&g.b), k_of(&g.c), k_of(&g.d));
        // a + c z
        let denom = if c.is_zero() {
            Self::constant(a.clone())
        } else {
            Self::linear_power(&(-&a).div(&c).expect("c != 0"), 1).scale(&c)
        };
        let mut out = Self::constant(self.lead.clone());
        let mut denom_power = -k;
        for (x, &m) in &self.factors {
            // (b + d z)/(a + c z) - x = ((b - a x) + (d - c x) z)/(a + c z)
            let lin_c = &d - &(&c * x);
            let term = if lin_c.is_zero() {
                Self::constant(&b - &(&a * x))
            } else {
                let root = (&(&a * x) - &b).div(&lin_c).expect("nonzero");
                Self::linear_power(&root, 1).scale(&lin_c)
            };
            out = out.mul(&term.pow(m).expect("split factor"));
            denom_power -= m;
        }
        if let Some(deg) = self.extra.degree().filter(|&d| d > 0) {
            // P((b + d z)/(a + c z)) (a + c z)^deg = sum p_j (b + d z)^j (a + c z)^(deg - j)
            let num_lin = KPoly::new(p, vec![b.clone(), d.clone()]);
            let den_lin = KPoly::new(p, vec![a.clone(), c.clone()]);
            let mut poly = KPoly::zero(p);
            for (j, pj) in self.extra.coeffs().iter().enumerate() {
                let term = num_lin.pow(j as u32).mul(&den_lin.pow((deg - j) as u32)).scale(pj);
                poly = poly.add(&term);
            }
            out = out.mul(&Self::from_poly(&poly));
            denom_power -= deg as i64;
        }
        out.mul(&denom.pow(denom_power).expect("linear factor"))
    }

    /// Gauss valuation on the closed disc of vertex `(m, b)`:
    /// `ord(lead) + sum m_i min(-m, ord(x_i - b)) + gauss(P)`.
    pub fn gauss_valuation(&self, v: &TreeVertex) -> Result<HalfInt> {
        if self.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let p = self.p;
        let center = KHat::from_rat(p, v.offset().clone());
        let radius = Valuation::int(-v.level());
        let mut total = self.lead.valuation();
        for (x, &m) in &self.factors {
            let w = (x - &center).valuation().min(radius);
            total = total + w.finite().expect("finite radius") * m;
        }
        if self.extra.degree().unwrap_or(0) > 0 {
            total = total + self.extra.gauss_on_disc(v.level(), &center);
        }
        total.finite().ok_or(Error::ZeroFunction)
    }

    /// Gauss valuation on the circle `ord(z) = c` (centered at 0):
    /// `min_j ord(a_j) + j c` for any Laurent expansion converging there.
    pub fn gauss_circle(&self, c: HalfInt) -> Result<HalfInt> {
        if self.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let mut total = self.lead.valuation();
        for (x, &m) in &self.factors {
            let w = x.valuation().min(Valuation::Finite(c));
            total = total + w.finite().expect("finite") * m;
        }
        if let Some(deg) = self.extra.degree().filter(|&d| d > 0) {
            let w = (0..=deg)
                .map(|j| self.extra.coeff(j).valuation() + c * j as i64)
                .min()
                .expect("nonempty");
            total = total + w;
        }
        total.finite().ok_or(Error::ZeroFunction)
    }

    /// One derivative in `z`.
    fn derivative_once(&self) -> Self {
        let p = self.p;
        if self.is_zero() {
            return self.clone();
        }
        // f = L P prod (z - x_i)^m_i, f' = L prod (z - x_i)^(m_i - 1) Q with
        // Q = P' prod (z - x_i) + P sum_i m_i prod_{j != i} (z - x_j).
        let roots: Vec<(&KHat, i64)> = self.factors().collect();
        let all = roots.iter().fold(KPoly::one(p), |acc, (x, _)| acc.mul(&KPoly::linear(x)));
        let mut q = self.extra.derivative().mul(&all);
        for (i, (_, m)) in roots.iter().enumerate() {
            let others = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(KPoly::one(p), |acc, (_, (x, _))| acc.mul(&KPoly::linear(x)));
            q = q.add(&others.mul(&self.extra).scale(&KHat::from_int(p, *m)));
        }
        if q.is_zero() {
            return Self::zero(p);
        }
        let mut out = Self::from_poly(&q).scale(&self.lead);
        for (x, m) in roots {
            out = out.mul(&Self::linear_power(x, m - 1));
        }
        out
    }

    /// Exact `order`-th derivative.
    pub fn derivative(&self, order: u32) -> Self {
        (0..order).fold(self.clone(), |f, _| f.derivative_once())
    }

    /// Polynomial part and principal parts `c_{x,r}` of the partial fraction
    /// decomposition `f = poly + sum_x sum_r c_{x,r} (z - x)^(-r)`.
    pub fn partial_fractions(&self) -> (KPoly, Vec<(KHat, Vec<KHat>)>) {
        let p = self.p;
        let (num, den) = self.expanded();
        let (poly, _) = num.divrem(&den).expect("nonzero denominator");
        let mut parts = Vec::new();
        for (x, r) in self.poles() {
            // g = f (z - x)^r is regular at x; Taylor coefficients up to r-1.
            let g = self.mul(&Self::linear_power(x, r));
            let (gn, gd) = g.expanded();
            let one = KHat::one(p);
            let gn = gn.affine_substitute(x, &one);
            let gd = gd.affine_substitute(x, &one);
            let taylor = series_div(&gn, &gd, r as usize);
            // c_{x, r - t} = taylor[t]
            let coeffs: Vec<KHat> = (1..=r as usize).map(|s| taylor[r as usize - s].clone()).collect();
            parts.push((x.clone(), coeffs));
        }
        (poly, parts)
    }

    /// Pullback along the edge transporter, so that the edge becomes the
    /// standard annulus `0 < ord(z) < 1`.
    pub fn transport_to_standard(&self, e: &TreeEdge) -> Self {
        let t = edge_transporter(self.p, e);
        self.slash_raw(&t.inverse(), 0)
    }
}

/// Power series quotient `n / d` to `len` terms; `d(0) != 0`.
fn series_div(n: &KPoly, d: &KPoly, len: usize) -> Vec<KHat> {
    let p = n.p;
    let d0_inv = d.coeff(0).inv().expect("regular point");
    let mut out: Vec<KHat> = Vec::with_capacity(len);
    for t in 0..len {
        let mut acc = n.coeff(t);
        for (i, prev) in out.iter().enumerate() {
            acc = &acc - &(prev * &d.coeff(t - i));
        }
        out.push(&acc * &d0_inv);
    }
    let _ = p;
    out
}

fn binomial(n: u64, k: u64) -> Rat {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rat::from_integer(acc)
}

/// Lower bound `ord(a_j) >= offset + slope * t` where `t = -j` on the inner
/// side and `t = j` on the outer side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct TailBound {
    pub offset: HalfInt,
    pub slope: HalfInt,
}

impl TailBound {
    pub fn at(&self, t: i64) -> HalfInt {
        self.offset + self.slope * t
    }
}

/// Laurent coefficients `a_lo..=a_hi` on the standard annulus
/// `0 < ord(z) < 1`, with tail bounds beyond the window.
#[derive(Clone, Debug)]
pub struct LaurentWindow {
    pub lo: i64,
    pub hi: i64,
    pub coeffs: Vec<KHat>,
    /// Bounds valid for all `j < lo`; the minimum of them holds.
    pub inner_tail: Vec<TailBound>,
    /// Bounds valid for all `j > hi`.
    pub outer_tail: Vec<TailBound>,
    /// Largest `j` with a polynomial-part contribution.
    pub poly_degree: Option<usize>,
}

impl LaurentWindow {
    pub fn coeff(&self, j: i64) -> Option<&KHat> {
        if j < self.lo || j > self.hi {
            None
        } else {
            Some(&self.coeffs[(j - self.lo) as usize])
        }
    }

    /// `min_j ord(a_j) + j c` over the window.
    pub fn window_circle_min(&self, c: HalfInt) -> Valuation {
        (self.lo..=self.hi)
            .map(|j| self.coeff(j).unwrap().valuation() + c * j)
            .min()
            .unwrap_or(Valuation::Infinity)
    }
}

/// Laurent expansion of `f` on the standard annulus `0 < ord(z) < 1`.
pub fn laurent_standard(f: &FactoredRational, lo: i64, hi: i64) -> Result<LaurentWindow> {
    let p = f.prime();
    for (x, _) in f.poles() {
        if let Valuation::Finite(v) = x.valuation() {
            if v > HalfInt::ZERO && v < HalfInt::from_int(1) {
                return Err(Error::PoleInsideAnnulus { root: x.to_string() });
            }
        }
    }
    let width = (hi - lo + 1).max(0) as usize;
    let mut coeffs = vec![KHat::zero(p); width];
    let mut add = |j: i64, c: KHat| {
        if j >= lo && j <= hi {
            let slot = &mut coeffs[(j - lo) as usize];
            *slot = &*slot + &c;
        }
    };
    let (poly, parts) = f.partial_fractions();
    for (j, c) in poly.coeffs().iter().enumerate() {
        add(j as i64, c.clone());
    }
    let mut inner_tail = Vec::new();
    let mut outer_tail = Vec::new();
    for (x, cs) in &parts {
        let vx = x.valuation();
        for (idx, c) in cs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let r = idx as i64 + 1;
            let vc = c.valuation().finite().expect("nonzero");
            if vx >= HalfInt::from_int(1) {
                // c (z - x)^(-r) = c sum_i C(r-1+i, i) x^i z^(-r-i)
                if x.is_zero() {
                    add(-r, c.clone());
                    continue;
                }
                let vxf = vx.finite().unwrap();
                let imax = (-r - lo).max(-1);
                let mut xp = KHat::one(p);
                for i in 0..=imax {
                    let j = -r - i;
                    if j <= hi {
                        add(j, &(c * &xp).scale(&binomial((r - 1 + i) as u64, i as u64)) + &KHat::zero(p));
                    }
                    xp = &xp * x;
                }
                // ord(a_j) >= vc + (t - r) ord(x) for t = -j
                inner_tail.push(TailBound { offset: vc - vxf * r, slope: vxf });
            } else {
                // c (z - x)^(-r) = c (-x)^(-r) sum_i C(r-1+i, i) x^(-i) z^i
                let vxf = vx.finite().expect("pole at 0 is inner");
                let base = c * &(-x).pow(-r).expect("x != 0");
                let xinv = x.inv().expect("x != 0");
                let mut xp = KHat::one(p);
                for i in 0..=hi.max(-1) {
                    if i >= lo {
                        add(i, (&base * &xp).scale(&binomial((r - 1 + i) as u64, i as u64)));
                    }
                    xp = &xp * &xinv;
                }
                outer_tail.push(TailBound { offset: vc - vxf * r, slope: -vxf });
            }
        }
    }
    Ok(LaurentWindow { lo, hi, coeffs, inner_tail, outer_tail, poly_degree: poly.degree() })
}

/// Laurent expansion of `f` on the annulus of edge `e`, after transporting
/// `e` to the standard edge.
pub fn laurent_on_edge(f: &FactoredRational, e: &TreeEdge, lo: i64, hi: i64) -> Result<LaurentWindow> {
    laurent_standard(&f.transport_to_standard(e), lo, hi)
}

/// The infimum of `ord f` over the formal edge tube: the smaller of the two
/// boundary-circle valuations of the transported function.
pub fn edge_tube_valuation(f: &FactoredRational, e: &TreeEdge) -> Result<HalfInt> {
    let g = f.transport_to_standard(e);
    Ok(g.gauss_circle(HalfInt::ZERO)?.min(g.gauss_circle(HalfInt::from_int(1))?))
}

impl fmt::Display for FactoredRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut parts = vec![fmt_scalar(&self.lead)];
        if self.extra.degree().unwrap_or(0) > 0 {
            parts.push(format!("({})", self.extra.fmt_sum()));
        }
        for (x, &m) in &self.factors {
            let base = if x.is_zero() { "z".to_string() } else { format!("(z-{})", fmt_scalar(x)) };
            parts.push(if m == 1 { base } else { format!("{base}^{m}") });
        }
        f.write_str(&parts.join("*"))
    }
}

impl serde::Serialize for FactoredRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Parser for expressions like `3*(z-1)^2*(z-1/2)^-1`, `1/z + s` or
/// `(z^2 + 3)*z^-1`, where `s` is the square root of `p`.
pub fn parse_function(p: Prime, text: &str) -> Result<FactoredRational> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { p, tokens, pos: 0 };
    let f = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Parse(format!("trailing input in {text:?}")));
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Z,
    S,
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Tok::Num(s.parse().expect("digits")));
            }
            'z' => {
                out.push(Tok::Z);
                i += 1;
            }
            's' => {
                out.push(Tok::S);
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            _ => return Err(Error::Parse(format!("unexpected character {c:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    p: Prime,
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<FactoredRational> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<FactoredRational> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.factor()?);
            } else if self.eat('/') {
                acc = acc.mul(&self.factor()?.inv()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<FactoredRational> {
        if self.eat('-') {
            return Ok(self.factor()?.neg());
        }
        let base = self.atom()?;
        if self.eat('^') {
            let neg = self.eat('-');
            let Some(Tok::Num(n)) = self.peek().cloned() else {
                return Err(Error::Parse("expected integer exponent".into()));
            };
            self.pos += 1;
            let e: i64 = n.try_into().map_err(|_| Error::Parse("exponent too large".into()))?;
            return base.pow(if neg { -e } else { e });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<FactoredRational> {
        let p = self.p;
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(FactoredRational::constant(KHat::from_rat(p, Rat::from_integer(n))))
            }
            Some(Tok::Z) => {
                self.pos += 1;
                Ok(FactoredRational::z(p))
            }
            Some(Tok::S) => {
                self.pos += 1;
                Ok(FactoredRational::constant(KHat::pihat(p)))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing ')'".into()));
                }
                Ok(inner)
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    fn pr(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn k(p: Prime, n: i64, d: i64) -> KHat {
        KHat::from_rat(p, rat(n, d))
    }

    #[test]
    fn parse_and_print_roundtrip() {
        let p = pr(2);
        let f = parse_function(p, "3*(z-1)^2*(z-1/2)^-1").unwrap();
        let want = FactoredRational::from_factors(k(p, 3, 1), [(k(p, 1, 1), 2), (k(p, 1, 2), -1)]);
        assert_eq!(f, want);
        let again = parse_function(p, &f.to_string()).unwrap();
        assert_eq!(again, f);
        assert_eq!(f.factors().count(), 2);
    }

    #[test]
    fn sums_keep_denominators_split() {
        let p = pr(3);
        let f = parse_function(p, "1/(z-1) + 1/(z-2)").unwrap();
        // (2z - 3) / ((z-1)(z-2)): numerator is linear, so it splits.
        let want = FactoredRational::from_factors(
            k(p, 2, 1),
            [(k(p, 3, 2), 1), (k(p, 1, 1), -1), (k(p, 2, 1), -1)],
        );
        assert_eq!(f, want);
        assert!(f.extra().degree() == Some(0));
    }

    #[test]
    fn gauss_examples() {
        let p = pr(2);
        let f = parse_function(p, "(z-2)/z").unwrap();
        assert_eq!(f.gauss_valuation(&TreeVertex::root()).unwrap(), HalfInt::ZERO);
        for n in -3..4 {
            let z = FactoredRational::z(p);
            assert_eq!(z.gauss_valuation(&TreeVertex::standard(n)).unwrap(), HalfInt::from_int(-n));
        }
        let c = FactoredRational::constant(k(p, 12, 1));
        let v = TreeVertex::new(p, -2, &rat(3, 1));
        assert_eq!(c.gauss_valuation(&v).unwrap(), HalfInt::from_int(2));
        assert_eq!(FactoredRational::zero(p).gauss_valuation(&v), Err(Error::ZeroFunction));
    }

    #[test]
    fn gauss_by_sampling_unit_points() {
        // (z - p)/z at the central vertex: sample points t with ord(t) = 0 whose
        // residues avoid 0; the minimum over samples equals the Gauss valuation.
        let p = pr(5);
        let f = parse_function(p, "(z-5)/z").unwrap();
        let vals: Vec<_> = (1..=20)
            .map(|i| f.eval(&k(p, (i % 4) + 1 + 5 * i, 1)).unwrap().valuation())
            .collect();
        assert_eq!(vals.iter().min().unwrap(), &Valuation::int(0));
    }

    #[test]
    fn laurent_examples() {
        let p = pr(2);
        let w = laurent_standard(&parse_function(p, "1/z").unwrap(), -3, 0).unwrap();
        let got: Vec<_> = w.coeffs.to_vec();
        assert_eq!(got, vec![KHat::zero(p), KHat::zero(p), KHat::one(p), KHat::zero(p)]);

        let w = laurent_standard(&parse_function(p, "1/(z-2)").unwrap(), -4, 3).unwrap();
        assert_eq!(w.coeff(-1).unwrap(), &k(p, 1, 1));
        assert_eq!(w.coeff(-2).unwrap(), &k(p, 2, 1));
        assert_eq!(w.coeff(-3).unwrap(), &k(p, 4, 1));
        for j in 0..=3 {
            assert!(w.coeff(j).unwrap().is_zero());
        }

        let w = laurent_standard(&parse_function(p, "1/(z-1)").unwrap(), -3, 4).unwrap();
        for j in -3..0 {
            assert!(w.coeff(j).unwrap().is_zero());
        }
        for j in 0..=4 {
            assert_eq!(w.coeff(j).unwrap(), &k(p, -1, 1));
        }
    }

    #[test]
    fn laurent_rejects_annulus_poles() {
        let p = pr(2);
        let f = FactoredRational::linear_power(&KHat::pihat(p), -1);
        assert!(matches!(laurent_standard(&f, -2, 2), Err(Error::PoleInsideAnnulus { .. })));
    }

    #[test]
    fn derivative_examples() {
        let p = pr(3);
        let z3 = parse_function(p, "z^3").unwrap();
        assert!(z3.derivative(4).is_zero());
        let f = parse_function(p, "1/(z-1)").unwrap();
        assert_eq!(f.derivative(1), parse_function(p, "-(z-1)^-2").unwrap());
        // falling factorial: (z-a)^(k/2+m), k = 2, m = 3 => 24 (z-a)^1
        let g = parse_function(p, "(z-2)^4").unwrap();
        assert_eq!(g.derivative(3), parse_function(p, "24*(z-2)").unwrap());
    }

    #[test]
    fn slash_identity_and_translation() {
        let p = pr(3);
        let f = parse_function(p, "(z-1)^2/(z-3)").unwrap();
        assert_eq!(f.slash_raw(&GroupElement::identity(p), 5), f);
        // g = [[1, 1], [0, 1]]: f((1 + z)/1)
        let g = GroupElement::from_ints(p, 1, 1, 0, 1).unwrap();
        let want = parse_function(p, "z^2/(z-2)").unwrap();
        assert_eq!(f.slash_raw(&g, 0), want);
    }

    #[test]
    fn edge_tube_of_one_over_z() {
        let p = pr(2);
        let f = parse_function(p, "1/z").unwrap();
        assert_eq!(edge_tube_valuation(&f, &TreeEdge::standard()).unwrap(), HalfInt::from_int(-1));
    }
}
