//! `Sym^n(St)[s] (x) chi^t` over `Q_p(s)`, its dual, the characters
//! `chi`, `eps`, `det`, and the weight-`k` automorphic action on functions.
//!
//! `g.F(X, Y) = det(g)^s chi(g)^t F(dX + bY, cX + aY)`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::linalg::KMatrix;
use crate::rational::FactoredRational;
use crate::scalars::{val_rat, KHat, Prime, Rat};
use crate::tree::GroupElement;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacterKind {
    /// `s^ord(det)`
    Chi,
    /// `p^(-ord(det)) det`
    Epsilon,
    Det,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Character {
    pub kind: CharacterKind,
    pub exponent: i64,
}

impl Character {
    pub fn chi(exponent: i64) -> Self {
        Character { kind: CharacterKind::Chi, exponent }
    }

    pub fn epsilon(exponent: i64) -> Self {
        Character { kind: CharacterKind::Epsilon, exponent }
    }

    pub fn det(exponent: i64) -> Self {
        Character { kind: CharacterKind::Det, exponent }
    }

    pub fn eval(&self, g: &GroupElement) -> KHat {
        let p = g.prime();
        let det = g.det();
        let v = val_rat(&det, p).expect("invertible");
        let base = match self.kind {
            CharacterKind::Chi => return KHat::pihat_pow(p, v * self.exponent),
            CharacterKind::Epsilon => det * p.pow(-v),
            CharacterKind::Det => det,
        };
        KHat::from_rat(p, rat_pow(&base, self.exponent))
    }
}

fn rat_pow(x: &Rat, e: i64) -> Rat {
    let r = num_traits::pow(x.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        r.recip()
    } else {
        r
    }
}

/// The module `Sym^degree(St)[det_power] (x) chi^chi_power`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SymModule {
    pub degree: usize,
    pub det_power: i64,
    pub chi_power: i64,
}

impl SymModule {
    pub fn new(degree: usize, det_power: i64, chi_power: i64) -> Self {
        SymModule { degree, det_power, chi_power }
    }

    /// `Sym^k(St)[1] (x) chi^(-k-2)`, whose dual carries weight `k + 2`
    /// harmonic cochains.
    pub fn cochain_source(k: usize) -> Self {
        Self::new(k, 1, -(k as i64) - 2)
    }

    /// `Sym^k(St)[-k-1] (x) chi^(k+2)`, isomorphic to the dual of
    /// [`SymModule::cochain_source`].
    pub fn cochain_dual_model(k: usize) -> Self {
        Self::new(k, -(k as i64) - 1, k as i64 + 2)
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    /// Matrix of `g` in the basis `X^i Y^(n-i)`: column `i` holds the
    /// coefficients of `g.(X^i Y^(n-i))`.
    pub fn matrix(&self, g: &GroupElement) -> KMatrix {
        let p = g.prime();
        let n = self.degree;
        let scalar = &KHat::from_rat(p, rat_pow(&g.det(), self.det_power)) * &Character::chi(self.chi_power).eval(g);
        let mut m = KMatrix::zeros(p, n + 1, n + 1);
        // (dX + bY)^i (cX + aY)^(n-i) as a polynomial in X.
        let first = binomial_powers(&g.d, &g.b, n);
        let second = binomial_powers(&g.c, &g.a, n);
        for i in 0..=n {
            let u = &first[i];
            let w = &second[n - i];
            for (s, us) in u.iter().enumerate() {
                if us.is_zero() {
                    continue;
                }
                for (t, wt) in w.iter().enumerate() {
                    let cur = m.get(s + t, i).clone();
                    m.set(s + t, i, &cur + &scalar.scale(&(us * wt)));
                }
            }
        }
        m
    }
}

/// `(x X + y Y)^e` for `e = 0..=n`, as coefficient lists in `X`.
fn binomial_powers(x: &Rat, y: &Rat, n: usize) -> Vec<Vec<Rat>> {
    let mut out = vec![vec![Rat::one()]];
    for e in 1..=n {
        let prev = &out[e - 1];
        let mut next = vec![Rat::zero(); e + 1];
        for (j, c) in prev.iter().enumerate() {
            next[j] += c * y;
            next[j + 1] += c * x;
        }
        out.push(next);
    }
    out
}

/// An element of a [`SymModule`], coefficients of `X^i Y^(n-i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymElement {
    pub module: SymModule,
    pub coeffs: Vec<KHat>,
}

impl SymElement {
    pub fn new(module: SymModule, coeffs: Vec<KHat>) -> Self {
        assert_eq!(coeffs.len(), module.dim(), "homogeneous of the module degree");
        SymElement { module, coeffs }
    }

    /// `X^i Y^(n-i)`.
    pub fn monomial(p: Prime, module: SymModule, i: usize) -> Self {
        let mut c = vec![KHat::zero(p); module.dim()];
        c[i] = KHat::one(p);
        Self::new(module, c)
    }
}

pub fn sym_act(g: &GroupElement, f: &SymElement) -> SymElement {
    SymElement::new(f.module, f.module.matrix(g).apply(&f.coeffs))
}

/// A functional on a [`SymModule`] in the dual basis `h_j`,
/// `h_j(X^i Y^(n-i)) = delta_ij`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualVector {
    pub module: SymModule,
    pub coords: Vec<KHat>,
}

impl DualVector {
    pub fn new(module: SymModule, coords: Vec<KHat>) -> Self {
        assert_eq!(coords.len(), module.dim(), "dual of the module");
        DualVector { module, coords }
    }

    pub fn basis(p: Prime, module: SymModule, j: usize) -> Self {
        let mut c = vec![KHat::zero(p); module.dim()];
        c[j] = KHat::one(p);
        Self::new(module, c)
    }

    pub fn zero(p: Prime, module: SymModule) -> Self {
        Self::new(module, vec![KHat::zero(p); module.dim()])
    }

    pub fn pair(&self, f: &SymElement) -> KHat {
        assert_eq!(self.module, f.module);
        let p = f.module_prime();
        self.coords.iter().zip(&f.coeffs).fold(KHat::zero(p), |acc, (a, b)| &acc + &(a * b))
    }

    pub fn add(&self, o: &DualVector) -> DualVector {
        DualVector::new(self.module, self.coords.iter().zip(&o.coords).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, s: &KHat) -> DualVector {
        DualVector::new(self.module, self.coords.iter().map(|a| a * s).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// Image under `h_j -> X^(k-j) Y^j` in the model
    /// [`SymModule::cochain_dual_model`].
    pub fn relabel(&self) -> SymElement {
        let k = self.module.degree;
        let coeffs = (0..=k).map(|i| self.coords[k - i].clone()).collect();
        SymElement::new(SymModule::cochain_dual_model(k), coeffs)
    }

    /// The equivariant isomorphism onto [`SymModule::cochain_dual_model`]:
    /// `h_j -> (-1)^j C(k, j) X^(k-j) Y^j`.
    pub fn to_dual_model(&self) -> SymElement {
        let k = self.module.degree;
        let coeffs = (0..=k)
            .map(|i| {
                let j = k - i;
                let sign = if j.is_multiple_of(2) { 1 } else { -1 };
                self.coords[j].scale(&(binomial(k, j) * Rat::from_integer(sign.into())))
            })
            .collect();
        SymElement::new(SymModule::cochain_dual_model(k), coeffs)
    }
}

impl SymElement {
    fn module_prime(&self) -> Prime {
        self.coeffs[0].prime()
    }
}

/// Matrix of the contragredient action on coordinates: `S(g^-1)^T`.
pub fn dual_matrix(module: &SymModule, g: &GroupElement) -> KMatrix {
    module.matrix(&g.inverse()).transpose()
}

/// `(g.h)(F) = h(g^-1.F)`.
pub fn dual_act(g: &GroupElement, h: &DualVector) -> DualVector {
    DualVector::new(h.module, dual_matrix(&h.module, g).apply(&h.coords))
}

/// `f|_g(z) = chi(g)^k (a + c z)^(-k) f((b + d z) / (a + c z))`.
pub fn automorphic_act(g: &GroupElement, f: &FactoredRational, k: i64) -> FactoredRational {
    f.slash_raw(g, k).scale(&Character::chi(k).eval(g))
}

/// Dual coordinates as exact rationals when the `s`-parts vanish.
pub fn coords_are_rational(h: &DualVector) -> bool {
    h.coords.iter().all(|c| c.irrational_part().is_zero())
}

fn binomial(n: usize, k: usize) -> Rat {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rat::from_integer(acc)
}
