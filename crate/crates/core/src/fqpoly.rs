//! Polynomials and rational functions over a finite field, and points of
//! the projective line over it.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::finite::{FqElem, FqField};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FqPoly {
    field: FqField,
    coeffs: Vec<FqElem>,
}

impl FqPoly {
    pub fn new(field: &FqField, mut coeffs: Vec<FqElem>) -> Self {
        while coeffs.last() == Some(&field.zero()) {
            coeffs.pop();
        }
        FqPoly { field: field.clone(), coeffs }
    }

    pub fn zero(field: &FqField) -> Self {
        Self::new(field, vec![])
    }

    pub fn constant(field: &FqField, c: FqElem) -> Self {
        Self::new(field, vec![c])
    }

    pub fn one(field: &FqField) -> Self {
        Self::constant(field, field.one())
    }

    pub fn monomial(field: &FqField, c: FqElem, deg: usize) -> Self {
        let mut v = vec![field.zero(); deg + 1];
        v[deg] = c;
        Self::new(field, v)
    }

    pub fn z(field: &FqField) -> Self {
        Self::monomial(field, field.one(), 1)
    }

    /// `z - b`.
    pub fn linear(field: &FqField, b: FqElem) -> Self {
        Self::new(field, vec![field.neg(b), field.one()])
    }

    pub fn field(&self) -> &FqField {
        &self.field
    }

    pub fn coeffs(&self) -> &[FqElem] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> FqElem {
        self.coeffs.get(j).copied().unwrap_or(self.field.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> FqElem {
        self.coeffs.last().copied().unwrap_or(self.field.zero())
    }

    pub fn add(&self, o: &FqPoly) -> FqPoly {
        let f = &self.field;
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new(f, (0..n).map(|j| f.add(self.coeff(j), o.coeff(j))).collect())
    }

    pub fn neg(&self) -> FqPoly {
        Self::new(&self.field, self.coeffs.iter().map(|&c| self.field.neg(c)).collect())
    }

    pub fn sub(&self, o: &FqPoly) -> FqPoly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &FqPoly) -> FqPoly {
        let f = &self.field;
        if self.is_zero() || o.is_zero() {
            return Self::zero(f);
        }
        let mut out = vec![f.zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(a, b));
            }
        }
        Self::new(f, out)
    }

    pub fn scale(&self, c: FqElem) -> FqPoly {
        Self::new(&self.field, self.coeffs.iter().map(|&x| self.field.mul(x, c)).collect())
    }

    pub fn pow(&self, e: u32) -> FqPoly {
        (0..e).fold(Self::one(&self.field), |acc, _| acc.mul(self))
    }

    pub fn eval(&self, x: FqElem) -> FqElem {
        let f = &self.field;
        self.coeffs.iter().rev().fold(f.zero(), |acc, &c| f.add(f.mul(acc, x), c))
    }

    pub fn divrem(&self, d: &FqPoly) -> Result<(FqPoly, FqPoly)> {
        let f = &self.field;
        let dd = d.degree().ok_or(Error::DivisionByZero)?;
        let inv = f.inv(d.leading())?;
        let mut r = self.coeffs.clone();
        let mut q = vec![f.zero(); r.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let top = r.len() - 1;
            let c = f.mul(r[top], inv);
            let shift = top - dd;
            q[shift] = c;
            for (j, &x) in d.coeffs.iter().enumerate() {
                r[shift + j] = f.sub(r[shift + j], f.mul(c, x));
            }
            r.pop();
            while r.last() == Some(&f.zero()) {
                r.pop();
            }
        }
        Ok((Self::new(f, q), Self::new(f, r)))
    }

    pub fn monic(&self) -> FqPoly {
        match self.field.inv(self.leading()) {
            Ok(inv) => self.scale(inv),
            Err(_) => self.clone(),
        }
    }

    pub fn gcd(&self, o: &FqPoly) -> FqPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).expect("nonzero divisor").1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Multiplicity of the root `b`.
    pub fn order_at(&self, b: FqElem) -> Option<usize> {
        if self.is_zero() {
            return None;
        }
        let lin = Self::linear(&self.field, b);
        let mut p = self.clone();
        let mut n = 0;
        loop {
            let (q, r) = p.divrem(&lin).expect("linear divisor");
            if !r.is_zero() {
                return Some(n);
            }
            p = q;
            n += 1;
        }
    }

    /// `sum c_i u^i w^(n - i)` for `n >= degree`.
    fn homogenise(&self, u: &FqPoly, w: &FqPoly, n: usize) -> FqPoly {
        self.coeffs.iter().enumerate().fold(Self::zero(&self.field), |acc, (i, &c)| {
            acc.add(&u.pow(i as u32).mul(&w.pow((n - i) as u32)).scale(c))
        })
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>, var: &str) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (j, &c) in self.coeffs.iter().enumerate().rev() {
            if c == self.field.zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let cs = elem_to_string(&self.field, c);
            match j {
                0 => write!(f, "{cs}")?,
                _ => {
                    if c != self.field.one() {
                        write!(f, "{cs}*")?;
                    }
                    if j == 1 {
                        write!(f, "{var}")?;
                    } else {
                        write!(f, "{var}^{j}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Prime field elements print as integers, others as powers of the fixed
/// primitive element `w`.
pub fn elem_to_string(field: &FqField, c: FqElem) -> String {
    if field.degree() == 1 || c == field.zero() {
        return c.index().to_string();
    }
    let g = field.primitive();
    let mut x = field.one();
    let mut e = 0;
    while x != c {
        x = field.mul(x, g);
        e += 1;
    }
    if e == 0 {
        "1".into()
    } else {
        format!("w^{e}")
    }
}

impl fmt::Display for FqPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, "z")
    }
}

/// A point of `P^1(F_q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum P1Point {
    Finite(u32),
    Infinity,
}

impl P1Point {
    pub fn all(field: &FqField) -> Vec<P1Point> {
        field.elements().map(|x| P1Point::Finite(x.index())).chain([P1Point::Infinity]).collect()
    }
}

/// Reduced quotient `num / den`, `den` monic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FqRational {
    num: FqPoly,
    den: FqPoly,
}

impl FqRational {
    pub fn new(num: FqPoly, den: FqPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let field = num.field().clone();
        if num.is_zero() {
            return Ok(FqRational { num, den: FqPoly::one(&field) });
        }
        let g = num.gcd(&den);
        let num = num.divrem(&g)?.0;
        let den = den.divrem(&g)?.0;
        let lead = field.inv(den.leading())?;
        Ok(FqRational { num: num.scale(lead), den: den.scale(lead) })
    }

    pub fn from_poly(p: FqPoly) -> Self {
        let one = FqPoly::one(p.field());
        FqRational { num: p, den: one }
    }

    pub fn zero(field: &FqField) -> Self {
        Self::from_poly(FqPoly::zero(field))
    }

    pub fn num(&self) -> &FqPoly {
        &self.num
    }

    pub fn den(&self) -> &FqPoly {
        &self.den
    }

    pub fn field(&self) -> &FqField {
        self.num.field()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den)).expect("nonzero")
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(self.field().neg(self.field().one())))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.num), self.den.mul(&o.den)).expect("nonzero")
    }

    pub fn scale(&self, c: FqElem) -> Self {
        Self::new(self.num.scale(c), self.den.clone()).expect("nonzero")
    }

    pub fn inv(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let n = e.unsigned_abs() as u32;
        Ok(FqRational { num: base.num.pow(n), den: base.den.pow(n) })
    }

    /// `ord_P(f)`; `None` for the zero function.
    pub fn order_at(&self, pt: P1Point) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        match pt {
            P1Point::Finite(i) => {
                let b = self.field().elem(i);
                Some(self.num.order_at(b)? as i64 - self.den.order_at(b)? as i64)
            }
            P1Point::Infinity => Some(self.den.degree()? as i64 - self.num.degree()? as i64),
        }
    }

    /// Coefficient of `t^n` in the expansion at `pt` in the local parameter
    /// `t = z - b` (or `1/z` at infinity), assuming `ord_P(f) >= n`.
    pub fn coefficient_at(&self, pt: P1Point, n: i64) -> FqElem {
        let field = self.field().clone();
        if self.is_zero() {
            return field.zero();
        }
        let ord = self.order_at(pt).expect("nonzero");
        assert!(ord >= n, "expansion starts at t^{ord}");
        if ord > n {
            return field.zero();
        }
        match pt {
            P1Point::Finite(i) => {
                let b = field.elem(i);
                let lin = FqPoly::linear(&field, b);
                let strip = |p: &FqPoly| {
                    let k = p.order_at(b).expect("nonzero");
                    p.divrem(&lin.pow(k as u32)).expect("linear").0.eval(b)
                };
                field.div(strip(&self.num), strip(&self.den)).expect("den nonzero at b")
            }
            P1Point::Infinity => field.div(self.num.leading(), self.den.leading()).expect("monic"),
        }
    }
}

impl fmt::Display for FqRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == Some(0) {
            return write!(f, "{}", self.num);
        }
        write!(f, "({})/({})", self.num, self.den)
    }
}

impl Serialize for FqRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `2 x 2` matrix over `F_q`, `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqMat2 {
    pub a: FqElem,
    pub b: FqElem,
    pub c: FqElem,
    pub d: FqElem,
}

impl FqMat2 {
    pub fn new(a: FqElem, b: FqElem, c: FqElem, d: FqElem) -> Self {
        FqMat2 { a, b, c, d }
    }

    pub fn det(&self, f: &FqField) -> FqElem {
        f.sub(f.mul(self.a, self.d), f.mul(self.b, self.c))
    }

    pub fn mul(&self, f: &FqField, o: &FqMat2) -> FqMat2 {
        let e = |x, y, z, w| f.add(f.mul(x, y), f.mul(z, w));
        FqMat2 {
            a: e(self.a, o.a, self.b, o.c),
            b: e(self.a, o.b, self.b, o.d),
            c: e(self.c, o.a, self.d, o.c),
            d: e(self.c, o.b, self.d, o.d),
        }
    }

    pub fn identity(f: &FqField) -> FqMat2 {
        FqMat2::new(f.one(), f.zero(), f.zero(), f.one())
    }
}

/// All of `GL2(F_q)`.
pub fn gl2_elements(f: &FqField) -> Vec<FqMat2> {
    let els: Vec<FqElem> = f.elements().collect();
    let mut out = Vec::new();
    for &a in &els {
        for &b in &els {
            for &c in &els {
                for &d in &els {
                    let g = FqMat2::new(a, b, c, d);
                    if g.det(f) != f.zero() {
                        out.push(g);
                    }
                }
            }
        }
    }
    out
}

/// `diag(w, 1)`, `[[1, 1], [0, 1]]`, `[[0, 1], [1, 0]]` with `w` primitive.
pub fn gl2_generators(f: &FqField) -> Vec<FqMat2> {
    let (o, z) = (f.one(), f.zero());
    vec![FqMat2::new(f.primitive(), z, z, o), FqMat2::new(o, o, z, o), FqMat2::new(z, o, o, z)]
}

/// `[[1, 1], [0, 1]]`, `[[1, 0], [1, 1]]` and `diag(w, 1/w)`.
pub fn sl2_generators(f: &FqField) -> Vec<FqMat2> {
    let (o, z) = (f.one(), f.zero());
    let w = f.primitive();
    vec![FqMat2::new(o, o, z, o), FqMat2::new(o, z, o, o), FqMat2::new(w, z, z, f.inv(w).expect("unit"))]
}

/// Closure of a generating set under multiplication.
pub fn generated_group(f: &FqField, gens: &[FqMat2]) -> Vec<FqMat2> {
    let mut seen = std::collections::BTreeSet::from([FqMat2::identity(f)]);
    let mut frontier = vec![FqMat2::identity(f)];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = x.mul(f, g);
            if seen.insert(y) {
                frontier.push(y);
            }
        }
    }
    seen.into_iter().collect()
}

/// `f|_g(z) = (a + c z)^(-k) f((b + d z) / (a + c z))`.
pub fn weight_action_p1(g: &FqMat2, f: &FqRational, k: i64) -> Result<FqRational> {
    let field = f.field().clone();
    if g.det(&field) == field.zero() {
        return Err(Error::SingularMatrix);
    }
    let u = FqPoly::new(&field, vec![g.b, g.d]);
    let w = FqPoly::new(&field, vec![g.a, g.c]);
    let dn = f.num().degree().unwrap_or(0);
    let dd = f.den().degree().unwrap_or(0);
    let num = f.num().homogenise(&u, &w, dn);
    let den = f.den().homogenise(&u, &w, dd);
    let base = FqRational::new(num, den)?;
    let wr = FqRational::from_poly(w);
    Ok(base.mul(&wr.pow(dd as i64 - dn as i64 - k)?))
}
