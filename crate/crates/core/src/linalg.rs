//! Dense matrices over `Q_p(s)` and the Smith normal form over its
//! valuation ring.

use std::fmt;

use crate::error::{Error, Result};
use crate::finite::{FqField, FqMatrix};
use crate::scalars::{residue_mod_power, KHat, Prime, Valuation};

use num_traits::{ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KMatrix {
    p: Prime,
    rows: usize,
    cols: usize,
    data: Vec<KHat>,
}

impl KMatrix {
    pub fn zeros(p: Prime, rows: usize, cols: usize) -> Self {
        KMatrix { p, rows, cols, data: vec![KHat::zero(p); rows * cols] }
    }

    pub fn identity(p: Prime, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.set(i, i, KHat::one(p));
        }
        m
    }

    pub fn diagonal(p: Prime, d: &[KHat]) -> Self {
        let mut m = Self::zeros(p, d.len(), d.len());
        for (i, x) in d.iter().enumerate() {
            m.set(i, i, x.clone());
        }
        m
    }

    pub fn from_columns(p: Prime, rows: usize, cols: &[Vec<KHat>]) -> Self {
        let mut m = Self::zeros(p, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length");
            for (i, x) in c.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &KHat {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: KHat) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<KHat> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<KHat>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.p, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul(&self, o: &KMatrix) -> KMatrix {
        assert_eq!(self.cols, o.rows, "dimension mismatch");
        let mut out = Self::zeros(self.p, self.rows, o.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..o.cols {
                    let v = out.get(r, c) + &(a * o.get(k, c));
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[KHat]) -> Vec<KHat> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| (0..self.cols).fold(KHat::zero(self.p), |acc, c| &acc + &(self.get(r, c) * &v[c])))
            .collect()
    }

    pub fn scale(&self, s: &KHat) -> KMatrix {
        KMatrix { p: self.p, rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// Minimum valuation of the entries.
    pub fn min_valuation(&self) -> Valuation {
        self.data.iter().map(|x| x.valuation()).min().unwrap_or(Valuation::Infinity)
    }

    pub fn is_integral(&self) -> bool {
        self.min_valuation() >= Valuation::int(0)
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(pr) = (row..self.rows).find(|&r| !self.get(r, col).is_zero()) else {
                continue;
            };
            self.swap_rows(pr, row);
            let inv = self.get(row, col).inv().expect("nonzero pivot");
            for c in 0..self.cols {
                let v = self.get(row, c) * &inv;
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r != row && !self.get(r, col).is_zero() {
                    let f = self.get(r, col).clone();
                    for c in 0..self.cols {
                        let v = self.get(r, c) - &(&f * self.get(row, c));
                        self.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right kernel.
    pub fn kernel(&self) -> Vec<Vec<KHat>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![KHat::zero(self.p); self.cols];
                v[f] = KHat::one(self.p);
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = -m.get(r, f);
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self) -> Result<KMatrix> {
        assert_eq!(self.rows, self.cols, "square matrix");
        let n = self.rows;
        let mut aug = Self::zeros(self.p, n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, n + r, KHat::one(self.p));
        }
        let piv = aug.rref();
        if piv.len() < n || piv[n - 1] >= n {
            return Err(Error::SingularMatrix);
        }
        let mut out = Self::zeros(self.p, n, n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, aug.get(r, n + c).clone());
            }
        }
        Ok(out)
    }

    /// Entrywise reduction modulo `s`; all entries must be integral.
    pub fn reduce(&self, field: &FqField) -> Result<FqMatrix> {
        if field.q() != self.p.get() {
            return Err(Error::ResidueFieldMismatch { q: field.q(), p: self.p.get() });
        }
        let mut out = FqMatrix::zeros(field, self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, reduce_entry(field, self.get(r, c))?);
            }
        }
        Ok(out)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// `row[dst] += f * row[src]`
    fn add_row(&mut self, dst: usize, src: usize, f: &KHat) {
        for c in 0..self.cols {
            let v = self.get(dst, c) + &(f * self.get(src, c));
            self.set(dst, c, v);
        }
    }

    /// `col[dst] += f * col[src]`
    fn add_col(&mut self, dst: usize, src: usize, f: &KHat) {
        for r in 0..self.rows {
            let v = self.get(r, dst) + &(f * self.get(r, src));
            self.set(r, dst, v);
        }
    }
}

fn reduce_entry(field: &FqField, x: &KHat) -> Result<crate::finite::FqElem> {
    if x.valuation() < Valuation::int(0) {
        return Err(Error::NegativeValuation);
    }
    let a = x.rational_part();
    if a.is_zero() {
        return Ok(field.zero());
    }
    let r = residue_mod_power(a, x.prime(), 1);
    Ok(field.from_int(r.to_i64().expect("residue fits")))
}

impl fmt::Display for KMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows)
            .map(|r| {
                let cells: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

/// `m = left * diag(s^exponents) * right` with `left`, `right` invertible over
/// the valuation ring.
#[derive(Clone, Debug)]
pub struct SmithForm {
    pub left: KMatrix,
    pub exponents: Vec<i64>,
    pub right: KMatrix,
}

/// Smith normal form of an invertible square matrix over `O[s]`.
pub fn smith_form(m: &KMatrix) -> Result<SmithForm> {
    assert_eq!(m.rows, m.cols, "square matrix");
    let p = m.p;
    let n = m.rows;
    let mut w = m.clone();
    let mut left = KMatrix::identity(p, n);
    let mut right = KMatrix::identity(p, n);
    for t in 0..n {
        // Pivot: entry of least valuation in the trailing block.
        let mut best: Option<(usize, usize, Valuation)> = None;
        for r in t..n {
            for c in t..n {
                let v = w.get(r, c).valuation();
                if best.as_ref().is_none_or(|b| v < b.2) {
                    best = Some((r, c, v));
                }
            }
        }
        let (br, bc, bv) = best.expect("nonempty block");
        if bv.is_infinite() {
            return Err(Error::SingularMatrix);
        }
        w.swap_rows(t, br);
        left.swap_cols(t, br);
        w.swap_cols(t, bc);
        right.swap_rows(t, bc);
        let piv_inv = w.get(t, t).inv()?;
        for r in t + 1..n {
            if w.get(r, t).is_zero() {
                continue;
            }
            let f = -&(w.get(r, t) * &piv_inv);
            w.add_row(r, t, &f);
            // left <- left * (I - f e_rt): col t -= f * col r
            left.add_col(t, r, &-&f);
        }
        for c in t + 1..n {
            if w.get(t, c).is_zero() {
                continue;
            }
            let f = -&(w.get(t, c) * &piv_inv);
            w.add_col(c, t, &f);
            // right <- (I - f e_tc) * right: row t -= f * row c
            right.add_row(t, c, &-&f);
        }
    }
    // Normalise the diagonal to exact powers of s.
    let mut exponents = Vec::with_capacity(n);
    for t in 0..n {
        let d = w.get(t, t).clone();
        let e = d.valuation().finite().expect("nonzero").halves();
        let unit = d.div(&KHat::pihat_pow(p, e))?;
        // w = left' * (s^e) * right with left' col t scaled by the unit.
        for r in 0..n {
            let v = left.get(r, t) * &unit;
            left.set(r, t, v);
        }
        exponents.push(e);
    }
    Ok(SmithForm { left, exponents, right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    fn kq(p: Prime, n: i64, d: i64) -> KHat {
        KHat::from_rat(p, rat(n, d))
    }

    #[test]
    fn inverse_roundtrip() {
        let p = Prime::new(3).unwrap();
        let m = KMatrix::from_columns(p, 2, &[vec![kq(p, 1, 1), KHat::pihat(p)], vec![kq(p, 2, 3), kq(p, 5, 1)]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), KMatrix::identity(p, 2));
    }

    #[test]
    fn smith_reconstructs() {
        let p = Prime::new(2).unwrap();
        let m = KMatrix::from_columns(
            p,
            3,
            &[
                vec![kq(p, 4, 1), KHat::pihat(p), kq(p, 1, 2)],
                vec![kq(p, 6, 1), kq(p, 3, 1), KHat::pihat_pow(p, 3)],
                vec![kq(p, 1, 1), kq(p, 1, 8), kq(p, 7, 1)],
            ],
        );
        let s = smith_form(&m).unwrap();
        let d: Vec<KHat> = s.exponents.iter().map(|&e| KHat::pihat_pow(p, e)).collect();
        assert_eq!(s.left.mul(&KMatrix::diagonal(p, &d)).mul(&s.right), m);
        assert!(s.left.is_integral() && s.right.is_integral());
        assert!(s.left.inverse().unwrap().is_integral());
        assert!(s.right.inverse().unwrap().is_integral());
    }

    #[test]
    fn kernel_of_rank_one() {
        let p = Prime::new(5).unwrap();
        let m = KMatrix::from_columns(p, 2, &[vec![kq(p, 1, 1), kq(p, 2, 1)], vec![kq(p, 3, 1), kq(p, 6, 1)]]);
        assert_eq!(m.rank(), 1);
        let k = m.kernel();
        assert_eq!(k.len(), 1);
        assert!(m.apply(&k[0]).iter().all(|x| x.is_zero()));
    }
}
