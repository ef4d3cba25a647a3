//! Finite fields `F_q = F_p[x]/(f)` with table arithmetic, plus dense
//! matrices over them (rank, kernel).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalars::Prime;

/// Largest field size handled by the table representation.
pub const MAX_Q: u64 = 1024;

#[derive(Debug)]
struct Tables {
    p: u64,
    degree: u32,
    modulus: Vec<u64>,
    add: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
}

/// The field with `q = p^f` elements. Elements are indexed by the base-`p`
/// digits of their coordinates in the power basis of `x`.
#[derive(Clone, Debug)]
pub struct FqField {
    t: Arc<Tables>,
}

impl PartialEq for FqField {
    fn eq(&self, o: &Self) -> bool {
        self.t.p == o.t.p && self.t.modulus == o.t.modulus
    }
}
impl Eq for FqField {}

/// An element of a fixed `FqField`, as an index into its tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqElem(u32);

impl FqElem {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for FqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn factor_prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut n = q;
    let mut f = 0;
    while n.is_multiple_of(p) {
        n /= p;
        f += 1;
    }
    (n == 1).then_some((p, f))
}

/// Multiplies two coordinate vectors modulo the monic `modulus` over `F_p`.
fn poly_mulmod(a: &[u64], b: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    let f = modulus.len() - 1;
    let mut prod = vec![0u64; 2 * f];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for d in (f..prod.len()).rev() {
        let c = prod[d];
        if c == 0 {
            continue;
        }
        for (i, &m) in modulus.iter().enumerate().take(f) {
            let k = d - f + i;
            prod[k] = (prod[k] + c * (p - m)) % p;
        }
        prod[d] = 0;
    }
    prod.truncate(f);
    prod
}

fn digits(mut n: u64, p: u64, f: u32) -> Vec<u64> {
    (0..f)
        .map(|_| {
            let d = n % p;
            n /= p;
            d
        })
        .collect()
}

fn undigits(d: &[u64], p: u64) -> u64 {
    d.iter().rev().fold(0, |acc, &x| acc * p + x)
}

/// A monic polynomial of degree `f` over `F_p` is irreducible iff it has
/// no monic factor of degree `1..=f/2`; checked by trial division.
fn is_irreducible(m: &[u64], p: u64) -> bool {
    let f = m.len() - 1;
    for d in 1..=f / 2 {
        let count = p.pow(d as u32);
        for low in 0..count {
            let mut cand = digits(low, p, d as u32);
            cand.push(1);
            if poly_rem(m, &cand, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn poly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        for (i, &bc) in b.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p * p - c * bc % p) % p;
        }
        r.pop();
    }
    r
}

impl FqField {
    pub fn new(q: u64) -> Result<Self> {
        if q > MAX_Q {
            return Err(Error::InvalidParameters(format!("q = {q} exceeds {MAX_Q}")));
        }
        let (p, f) = factor_prime_power(q)
            .ok_or_else(|| Error::InvalidParameters(format!("{q} is not a prime power")))?;
        // Smallest monic irreducible polynomial of degree f in index order.
        let modulus = (0..p.pow(f))
            .map(|low| {
                let mut m = digits(low, p, f);
                m.push(1);
                m
            })
            .find(|m| is_irreducible(m, p))
            .expect("irreducible polynomials exist in every degree");
        let n = q as usize;
        let mut add = vec![0u32; n * n];
        let mut mul = vec![0u32; n * n];
        let mut neg = vec![0u32; n];
        let mut inv = vec![0u32; n];
        for i in 0..n {
            let a = digits(i as u64, p, f);
            let na: Vec<u64> = a.iter().map(|&x| (p - x) % p).collect();
            neg[i] = undigits(&na, p) as u32;
            for j in 0..n {
                let b = digits(j as u64, p, f);
                let s: Vec<u64> = a.iter().zip(&b).map(|(x, y)| (x + y) % p).collect();
                add[i * n + j] = undigits(&s, p) as u32;
                mul[i * n + j] = undigits(&poly_mulmod(&a, &b, &modulus, p), p) as u32;
            }
        }
        for i in 1..n {
            inv[i] = (1..n).find(|&j| mul[i * n + j] == 1).expect("field") as u32;
        }
        Ok(FqField { t: Arc::new(Tables { p, degree: f, modulus, add, mul, neg, inv }) })
    }

    pub fn prime_field(p: Prime) -> Result<Self> {
        Self::new(p.get())
    }

    pub fn q(&self) -> u64 {
        self.t.p.pow(self.t.degree)
    }

    pub fn characteristic(&self) -> u64 {
        self.t.p
    }

    pub fn degree(&self) -> u32 {
        self.t.degree
    }

    /// Coefficients of the defining monic polynomial, constant term first.
    pub fn modulus(&self) -> &[u64] {
        &self.t.modulus
    }

    pub fn zero(&self) -> FqElem {
        FqElem(0)
    }

    pub fn one(&self) -> FqElem {
        FqElem(1)
    }

    pub fn elem(&self, index: u32) -> FqElem {
        assert!((index as u64) < self.q());
        FqElem(index)
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FqElem {
        FqElem(n.rem_euclid(self.t.p as i64) as u32)
    }

    pub fn elements(&self) -> impl Iterator<Item = FqElem> {
        (0..self.q() as u32).map(FqElem)
    }

    /// A generator of the multiplicative group.
    pub fn primitive(&self) -> FqElem {
        let q = self.q();
        self.elements()
            .skip(1)
            .find(|&g| {
                let mut x = g;
                let mut order = 1;
                while x != self.one() {
                    x = self.mul(x, g);
                    order += 1;
                }
                order == q - 1
            })
            .expect("cyclic group")
    }

    pub fn coords(&self, x: FqElem) -> Vec<u64> {
        digits(x.0 as u64, self.t.p, self.t.degree)
    }

    pub fn add(&self, a: FqElem, b: FqElem) -> FqElem {
        FqElem(self.t.add[a.0 as usize * self.q() as usize + b.0 as usize])
    }

    pub fn sub(&self, a: FqElem, b: FqElem) -> FqElem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FqElem, b: FqElem) -> FqElem {
        FqElem(self.t.mul[a.0 as usize * self.q() as usize + b.0 as usize])
    }

    pub fn neg(&self, a: FqElem) -> FqElem {
        FqElem(self.t.neg[a.0 as usize])
    }

    pub fn inv(&self, a: FqElem) -> Result<FqElem> {
        if a.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(FqElem(self.t.inv[a.0 as usize]))
    }

    pub fn div(&self, a: FqElem, b: FqElem) -> Result<FqElem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FqElem, e: i64) -> Result<FqElem> {
        let base = if e < 0 { self.inv(a)? } else { a };
        let mut acc = self.one();
        for _ in 0..e.unsigned_abs() {
            acc = self.mul(acc, base);
        }
        Ok(acc)
    }

    pub fn frobenius(&self, a: FqElem) -> FqElem {
        self.pow(a, self.t.p as i64).expect("nonnegative exponent")
    }
}

/// Dense row-major matrix over `F_q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FqMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<FqElem>,
}

impl FqMatrix {
    pub fn zeros(field: &FqField, rows: usize, cols: usize) -> Self {
        FqMatrix { rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: &FqField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<FqElem>>, cols: usize) -> Self {
        let r = rows.len();
        let data: Vec<FqElem> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), r * cols);
        FqMatrix { rows: r, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> FqElem {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FqElem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<FqElem> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn mul(&self, field: &FqField, o: &FqMatrix) -> FqMatrix {
        assert_eq!(self.cols, o.rows);
        let mut out = FqMatrix::zeros(field, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.index() == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let v = field.add(out.get(i, j), field.mul(a, o.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn apply(&self, field: &FqField, v: &[FqElem]) -> Vec<FqElem> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(field.zero(), |acc, j| {
                    field.add(acc, field.mul(self.get(i, j), v[j]))
                })
            })
            .collect()
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self, field: &FqField) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(pr) = (row..self.rows).find(|&r| self.get(r, col).index() != 0) else {
                continue;
            };
            for c in 0..self.cols {
                self.data.swap(pr * self.cols + c, row * self.cols + c);
            }
            let inv = field.inv(self.get(row, col)).expect("nonzero pivot");
            for c in 0..self.cols {
                let v = field.mul(self.get(row, c), inv);
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r == row {
                    continue;
                }
                let factor = self.get(r, col);
                if factor.index() == 0 {
                    continue;
                }
                for c in 0..self.cols {
                    let v = field.sub(self.get(r, c), field.mul(factor, self.get(row, c)));
                    self.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self, field: &FqField) -> usize {
        self.clone().rref(field).len()
    }

    /// Basis of the right kernel `{v : M v = 0}`.
    pub fn kernel(&self, field: &FqField) -> Vec<Vec<FqElem>> {
        let mut m = self.clone();
        let pivots = m.rref(field);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = vec![field.zero(); self.cols];
                v[fc] = field.one();
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = field.neg(m.get(r, fc));
                }
                v
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_small() {
        for q in [2u64, 3, 4, 5, 8, 9] {
            let f = FqField::new(q).unwrap();
            for a in f.elements() {
                assert_eq!(f.add(a, f.neg(a)), f.zero());
                assert_eq!(f.frobenius_q(a), a, "x^q = x in F_{q}");
                if a != f.zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
                }
                for b in f.elements() {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in f.elements() {
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    impl FqField {
        fn frobenius_q(&self, a: FqElem) -> FqElem {
            self.pow(a, self.q() as i64).unwrap()
        }
    }

    #[test]
    fn f4_modulus() {
        let f = FqField::new(4).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        assert_eq!(f.primitive().index(), 2);
    }

    #[test]
    fn rejects_non_prime_powers() {
        assert!(FqField::new(6).is_err());
        assert!(FqField::new(1).is_err());
    }

    #[test]
    fn kernel_and_rank() {
        let f = FqField::new(3).unwrap();
        let e = |n| f.from_int(n);
        let m = FqMatrix::from_rows(vec![vec![e(1), e(2), e(0)], vec![e(2), e(1), e(0)]], 3);
        assert_eq!(m.rank(&f), 1);
        let ker = m.kernel(&f);
        assert_eq!(ker.len(), 2);
        for v in ker {
            assert!(m.apply(&f, &v).iter().all(|x| x.index() == 0));
        }
    }
}
