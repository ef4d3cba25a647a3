//! The reduction mod `s`: line bundles on the components `P^1_{F_q}`, the
//! weight-`k` action of `GL2(F_q)`, symmetric powers realised as global
//! sections, and sections over truncations.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite::{FqElem, FqField, FqMatrix};
use crate::fqpoly::{gl2_elements, gl2_generators, weight_action_p1, FqMat2, FqPoly, FqRational, P1Point};
use crate::lattices::Membership;
use crate::rational::FactoredRational;
use crate::scalars::{residue_mod_power, HalfInt, Prime};
use crate::symrep::automorphic_act;
use crate::tree::{act_on_vertex, GroupElement, TreeVertex, TruncatedTree};

/// A divisor on `P^1` supported on rational points.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct P1Divisor {
    pub coeffs: BTreeMap<P1Point, i64>,
}

impl P1Divisor {
    pub fn new(coeffs: impl IntoIterator<Item = (P1Point, i64)>) -> Self {
        P1Divisor { coeffs: coeffs.into_iter().filter(|&(_, c)| c != 0).collect() }
    }

    pub fn at(&self, pt: P1Point) -> i64 {
        self.coeffs.get(&pt).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.values().sum()
    }

    /// `div(f) + D >= 0` at every rational point.
    pub fn admits(&self, field: &FqField, f: &FqRational) -> bool {
        if f.is_zero() {
            return true;
        }
        let rational_ok = P1Point::all(field).into_iter().all(|pt| f.order_at(pt).expect("nonzero") + self.at(pt) >= 0);
        // Closed points of higher degree carry no multiplicity in D, so the
        // irreducible factors of the denominator must all be linear.
        let den_deg = f.den().degree().unwrap_or(0) as i64;
        let linear_poles: i64 = field
            .elements()
            .map(|b| -f.order_at(P1Point::Finite(b.index())).expect("nonzero").min(0))
            .sum();
        rational_ok && den_deg == linear_poles
    }
}

/// `H^0(P^1, L(D))` with an explicit basis.
#[derive(Clone, Debug, Serialize)]
pub struct GlobalSectionSpace {
    pub divisor: P1Divisor,
    pub dim: usize,
    pub basis: Vec<FqRational>,
}

/// Sections as `P / Q` with `Q` the pole part of `D`; the zero conditions
/// at points with negative multiplicity are imposed on the Taylor
/// coefficients of `P` and the kernel is read off by linear algebra.
pub fn global_sections(field: &FqField, d: &P1Divisor) -> Result<GlobalSectionSpace> {
    let mut q = FqPoly::one(field);
    let mut zero_conditions = Vec::new();
    for (&pt, &c) in &d.coeffs {
        if let P1Point::Finite(i) = pt {
            let b = field.elem(i);
            if c > 0 {
                q = q.mul(&FqPoly::linear(field, b).pow(c as u32));
            } else {
                zero_conditions.push((b, (-c) as usize));
            }
        }
    }
    let top = d.at(P1Point::Infinity) + q.degree().unwrap_or(0) as i64;
    if top < 0 {
        return Ok(GlobalSectionSpace { divisor: d.clone(), dim: 0, basis: vec![] });
    }
    let n = top as usize + 1;
    let mut rows = Vec::new();
    for &(b, order) in &zero_conditions {
        // Taylor coefficients of z^i at b: the coefficients of (z + b)^i.
        let shifted: Vec<FqPoly> =
            (0..n).map(|i| FqPoly::new(field, vec![b, field.one()]).pow(i as u32)).collect();
        for j in 0..order {
            rows.push(shifted.iter().map(|s| s.coeff(j)).collect::<Vec<FqElem>>());
        }
    }
    let basis: Vec<FqRational> = if rows.is_empty() {
        (0..n).map(|i| FqPoly::monomial(field, field.one(), i)).map(|p| FqRational::new(p, q.clone())).collect::<Result<_>>()?
    } else {
        FqMatrix::from_rows(rows, n)
            .kernel(field)
            .into_iter()
            .map(|v| FqRational::new(FqPoly::new(field, v), q.clone()))
            .collect::<Result<_>>()?
    };
    Ok(GlobalSectionSpace { divisor: d.clone(), dim: basis.len(), basis })
}

/// Column `i` holds the coordinates of `g . X^i Y^(t-i)`, where
/// `g . F = det^shift F(dX + bY, cX + aY)`.
pub fn sym_matrix_fq(field: &FqField, g: &FqMat2, t: usize, shift: i64) -> Result<FqMatrix> {
    let det = field.pow(g.det(field), shift)?;
    let x_image = FqPoly::new(field, vec![g.b, g.d]);
    let y_image = FqPoly::new(field, vec![g.a, g.c]);
    let mut m = FqMatrix::zeros(field, t + 1, t + 1);
    for i in 0..=t {
        let col = x_image.pow(i as u32).mul(&y_image.pow((t - i) as u32)).scale(det);
        for j in 0..=t {
            m.set(j, i, col.coeff(j));
        }
    }
    Ok(m)
}

fn drinfeld_factor(field: &FqField) -> FqRational {
    let z = FqPoly::z(field);
    FqRational::from_poly(z.sub(&FqPoly::monomial(field, field.one(), field.q() as usize)))
}

/// `X^r Y^(t-r) -> z^r (z - z^q)^e`.
#[derive(Clone, Debug, Serialize)]
pub struct SymGeom {
    pub q: u64,
    pub k: i64,
    pub i: i64,
    pub t: usize,
    /// Determinant twist on the symmetric power, equal to `e`.
    pub shift: i64,
    pub exponent: i64,
    pub images: Vec<FqRational>,
    /// Divisor whose sections the images span.
    pub target: P1Divisor,
}

pub fn symgeom_iso(field: &FqField, k: i64, i: i64) -> Result<SymGeom> {
    let q = field.q() as i64;
    let (t, e) = if k % 2 == 0 {
        ((q - 1) * k / 2 - i * (q + 1), i - k / 2)
    } else {
        (((q - 1) * k - (q + 1)) / 2 - i * (q + 1), i - (k - 1) / 2)
    };
    if t < 0 {
        return Err(Error::InvalidParameters(format!("t = {t} < 0 for q = {q}, k = {k}, i = {i}")));
    }
    let base = drinfeld_factor(field).pow(e)?;
    let images = (0..=t as usize)
        .map(|r| FqRational::from_poly(FqPoly::monomial(field, field.one(), r)).mul(&base))
        .collect();
    let target = P1Divisor::new(
        field.elements().map(|b| (P1Point::Finite(b.index()), -e)).chain([(P1Point::Infinity, t + q * e)]),
    );
    Ok(SymGeom { q: q as u64, k, i, t: t as usize, shift: e, exponent: e, images, target })
}

impl SymGeom {
    /// `iso(g . v) = (iso v)|_g` on every basis monomial.
    pub fn intertwines(&self, field: &FqField, g: &FqMat2) -> Result<bool> {
        let m = sym_matrix_fq(field, g, self.t, self.shift)?;
        for r in 0..=self.t {
            let lhs = (0..=self.t)
                .fold(FqRational::zero(field), |acc, j| acc.add(&self.images[j].scale(m.get(j, r))));
            if lhs != weight_action_p1(g, &self.images[r], self.k)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Rank of the images inside `L(target)`.
    pub fn rank(&self, field: &FqField) -> Result<usize> {
        let space = global_sections(field, &self.target)?;
        if !self.images.iter().all(|f| self.target.admits(field, f)) {
            return Ok(0);
        }
        // Clear the common denominator and compare numerators.
        let common = drinfeld_factor(field).pow(-self.exponent)?;
        let cols = space.dim.max(self.t + 1);
        let rows: Vec<Vec<FqElem>> = self
            .images
            .iter()
            .map(|f| {
                let p = f.mul(&common);
                (0..cols).map(|j| p.num().coeff(j)).collect()
            })
            .collect();
        Ok(FqMatrix::from_rows(rows, cols).rank(field))
    }
}

/// Degree of the restriction of the weight-`k` bundle to a component,
/// with the local exponents at the finite points and at infinity.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ComponentDegree {
    pub q: u64,
    pub k: i64,
    pub finite_exponent: i64,
    pub infinity_exponent: i64,
    pub degree: i64,
}

pub fn component_degree(q: u64, k: i64) -> ComponentDegree {
    let finite_exponent = k.div_euclid(2);
    let infinity_exponent = -(k + 1).div_euclid(2);
    ComponentDegree { q, k, finite_exponent, infinity_exponent, degree: q as i64 * finite_exponent + infinity_exponent }
}

pub fn component_divisor(field: &FqField, k: i64) -> P1Divisor {
    let c = component_degree(field.q(), k);
    P1Divisor::new(
        field
            .elements()
            .map(|b| (P1Point::Finite(b.index()), c.finite_exponent))
            .chain([(P1Point::Infinity, c.infinity_exponent)]),
    )
}

/// Point of the component of `v` where it meets its neighbour `w`.
pub fn neighbour_point(p: Prime, v: &TreeVertex, w: &TreeVertex) -> P1Point {
    if w.level() == v.level() + 1 {
        return P1Point::Infinity;
    }
    let digit = residue_mod_power(&((w.offset() - v.offset()) * p.pow(v.level())), p, 1);
    P1Point::Finite(u32::try_from(digit).expect("digit below p"))
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedSections {
    pub q: u64,
    pub k: i64,
    pub radius: u32,
    pub vertices: usize,
    pub edges: usize,
    pub component_dim: usize,
    /// Closed form: `|V| (deg + 1)` for odd `k`, `|V| (deg + 1) - |E|` for even `k`.
    pub expected: usize,
    /// Kernel dimension of the assembled gluing system.
    pub dim: usize,
}

/// Sections over a ball: one copy of `L(D_k)` per vertex; for even `k`,
/// one matching condition per edge between the fibre values at the two
/// intersection points. The transition constants are units; they are set
/// to one here, which does not change the kernel dimension on a tree.
pub fn global_sections_truncated(p: Prime, k: i64, radius: u32) -> Result<TruncatedSections> {
    if k < 0 {
        return Err(Error::InvalidParameters(format!("k = {k} must be nonnegative")));
    }
    let field = FqField::prime_field(p)?;
    let tree = TruncatedTree::new(p, TreeVertex::root(), radius)?;
    let divisor = component_divisor(&field, k);
    let space = global_sections(&field, &divisor)?;
    let d = space.dim;
    let nv = tree.vertices().len();
    let ne = tree.edge_indices().len();
    let (expected, dim) = if k % 2 == 1 {
        (nv * d, nv * d)
    } else {
        let mut m = FqMatrix::zeros(&field, ne, nv * d);
        for (row, &(i, j)) in tree.edge_indices().iter().enumerate() {
            let (vi, vj) = (&tree.vertices()[i], &tree.vertices()[j]);
            for (side, sign, at) in [(i, field.one(), neighbour_point(p, vi, vj)), (j, field.neg(field.one()), neighbour_point(p, vj, vi))] {
                for (b, f) in space.basis.iter().enumerate() {
                    let value = f.coefficient_at(at, -divisor.at(at));
                    m.set(row, side * d + b, field.mul(sign, value));
                }
            }
        }
        ((nv * d).saturating_sub(ne), nv * d - m.rank(&field))
    };
    Ok(TruncatedSections { q: p.get(), k, radius, vertices: nv, edges: ne, component_dim: d, expected, dim })
}

/// Quotient of a symmetric power by the span of
/// `X^j Y^(t-j) - X^(q+j-1) Y^(t-q-j+1)`, `1 <= j <= t - q`.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientRep {
    pub q: u64,
    pub t: usize,
    pub shift: i64,
    pub dim: usize,
    /// Monomial exponents `j` of `X^j Y^(t-j)` forming the quotient basis.
    pub basis_monomials: Vec<usize>,
    /// Whether the relation span is stable under every generator.
    pub relations_stable: bool,
    /// Stable lines, each as coordinates in the quotient basis with first
    /// nonzero entry one.
    pub stable_lines: Vec<Vec<u32>>,
    #[serde(skip)]
    relations: FqMatrix,
    #[serde(skip)]
    pivots: Vec<usize>,
}

impl QuotientRep {
    /// Class of a symmetric-power vector in quotient coordinates.
    pub fn class_of(&self, field: &FqField, v: &[FqElem]) -> Vec<FqElem> {
        let mut v = v.to_vec();
        for (r, &c) in self.pivots.iter().enumerate() {
            let factor = v[c];
            for (j, x) in v.iter_mut().enumerate() {
                *x = field.sub(*x, field.mul(factor, self.relations.get(r, j)));
            }
        }
        self.basis_monomials.iter().map(|&j| v[j]).collect()
    }

    fn lift(&self, field: &FqField, coords: &[FqElem]) -> Vec<FqElem> {
        let mut v = vec![field.zero(); self.t + 1];
        for (&j, &c) in self.basis_monomials.iter().zip(coords) {
            v[j] = c;
        }
        v
    }

    pub fn act(&self, field: &FqField, g: &FqMat2, coords: &[FqElem]) -> Result<Vec<FqElem>> {
        let m = sym_matrix_fq(field, g, self.t, self.shift)?;
        Ok(self.class_of(field, &m.apply(field, &self.lift(field, coords))))
    }
}

pub fn quotient_rep_and_stable_lines(field: &FqField, k: i64, i: i64) -> Result<QuotientRep> {
    let geom = symgeom_iso(field, k, i)?;
    let q = field.q() as usize;
    let t = geom.t;
    if t < q + 1 {
        return Err(Error::InvalidParameters(format!("t = {t} < q + 1 leaves no relations")));
    }
    let rows: Vec<Vec<FqElem>> = (1..=t - q)
        .map(|j| {
            let mut r = vec![field.zero(); t + 1];
            r[j] = field.one();
            r[q + j - 1] = field.sub(r[q + j - 1], field.one());
            r
        })
        .collect();
    let mut relations = FqMatrix::from_rows(rows, t + 1);
    let pivots = relations.rref(field);
    relations = FqMatrix::from_rows((0..pivots.len()).map(|r| (0..=t).map(|c| relations.get(r, c)).collect()).collect(), t + 1);
    let basis_monomials: Vec<usize> = (0..=t).filter(|c| !pivots.contains(c)).collect();
    let mut rep = QuotientRep {
        q: field.q(),
        t,
        shift: geom.shift,
        dim: basis_monomials.len(),
        basis_monomials,
        relations_stable: true,
        stable_lines: vec![],
        relations,
        pivots,
    };
    let gens = gl2_generators(field);
    for g in &gens {
        let m = sym_matrix_fq(field, g, t, rep.shift)?;
        for r in 0..rep.pivots.len() {
            let row: Vec<FqElem> = (0..=t).map(|c| rep.relations.get(r, c)).collect();
            if rep.class_of(field, &m.apply(field, &row)).iter().any(|&x| x != field.zero()) {
                rep.relations_stable = false;
            }
        }
    }
    if !rep.relations_stable {
        return Ok(rep);
    }
    // Every line, normalised with leading entry one.
    let n = rep.dim;
    let qq = field.q() as u32;
    for lead in 0..n {
        let free = n - lead - 1;
        for code in 0..qq.pow(free as u32) {
            let mut v = vec![field.zero(); n];
            v[lead] = field.one();
            let mut c = code;
            for x in v.iter_mut().skip(lead + 1) {
                *x = field.elem(c % qq);
                c /= qq;
            }
            let stable = gens.iter().all(|g| {
                let w = rep.act(field, g, &v).expect("invertible");
                let s = w[lead];
                v.iter().zip(&w).all(|(&a, &b)| field.mul(a, s) == b)
            });
            if stable {
                rep.stable_lines.push(v.iter().map(|x| x.index()).collect());
            }
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct BFormsReport {
    pub q: u64,
    pub sl2_elements_checked: usize,
    pub invariant: bool,
    /// `None` when `q` is not prime and no tree model is available.
    pub involution_swaps_parity: Option<bool>,
    pub pass: bool,
}

/// `(z - z^q)^(-1)` is invariant of weight `q + 1` under `SL2(F_q)`, and
/// `[[0, 1], [p, 0]]` swaps the two parity classes of a radius-2 ball.
pub fn b_forms_check(q: u64) -> Result<BFormsReport> {
    let field = FqField::new(q)?;
    let h = drinfeld_factor(&field).inv()?;
    let sl2: Vec<FqMat2> = gl2_elements(&field).into_iter().filter(|g| g.det(&field) == field.one()).collect();
    let mut invariant = true;
    for g in &sl2 {
        invariant &= weight_action_p1(g, &h, q as i64 + 1)? == h;
    }
    let involution_swaps_parity = if field.degree() == 1 {
        let p = Prime::new(q)?;
        let tree = TruncatedTree::new(p, TreeVertex::root(), 2)?;
        let w = GroupElement::from_ints(p, 0, 1, q as i64, 0)?;
        let mut ok = true;
        for v in tree.vertices() {
            ok &= act_on_vertex(&w, v)?.parity() == -v.parity();
        }
        Some(ok)
    } else {
        None
    };
    let pass = invariant && involution_swaps_parity.unwrap_or(true);
    Ok(BFormsReport { q, sl2_elements_checked: sl2.len(), invariant, involution_swaps_parity, pass })
}

/// Integral exponents of the `G^even` model for odd `k` around the vertex
/// `(n, 0)` and the edge towards `(n + 1, 0)`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct GevenProfile {
    pub vertex_exponent: i64,
    pub edge_exponents: (i64, i64),
}

pub fn geven_lattice_profile(k: i64, n: i64) -> GevenProfile {
    let fl = |x: i64| x.div_euclid(2);
    GevenProfile { vertex_exponent: fl(k * n), edge_exponents: (fl(k * n), fl(k * (n + 1))) }
}

/// `gauss(f, v) >= floor(k m / 2)`, the integral analogue of the vertex
/// membership test.
pub fn geven_membership(f: &FactoredRational, k: i64, v: &TreeVertex) -> Result<Membership> {
    let val = f.gauss_valuation(v)?;
    let bound = HalfInt::from_int(geven_lattice_profile(k, v.level()).vertex_exponent);
    Ok(Membership { member: val >= bound, valuation: val - bound })
}

pub fn geven_equivariance_holds(f: &FactoredRational, k: i64, v: &TreeVertex, g: &GroupElement) -> Result<bool> {
    if !g.is_even() {
        return Err(Error::InvalidParameters("element is not in G^even".into()));
    }
    let gv = act_on_vertex(g, v)?;
    let before = geven_membership(f, k, v)?;
    let after = geven_membership(&automorphic_act(g, f, k), k, &gv)?;
    Ok(before.member == after.member)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fqpoly::generated_group;
    use crate::sampling::random_rational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(q: u64) -> FqField {
        FqField::new(q).unwrap()
    }

    #[test]
    fn riemann_roch_on_random_divisors() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..50 {
            let f = field([2, 3, 4, 5][rng.gen_range(0..4)]);
            let pts = P1Point::all(&f);
            let d = P1Divisor::new(pts.iter().map(|&pt| (pt, rng.gen_range(-3..4))));
            let space = global_sections(&f, &d).unwrap();
            assert_eq!(space.dim as i64, (d.degree() + 1).max(0), "{d:?}");
            assert!(space.basis.iter().all(|g| d.admits(&f, g)));
        }
    }

    #[test]
    fn admits_rejects_extra_poles() {
        let f = field(3);
        let d = P1Divisor::new([(P1Point::Finite(0), 1)]);
        let z = FqPoly::z(&f);
        let bad = FqRational::new(FqPoly::one(&f), z.mul(&z).add(&FqPoly::one(&f))).unwrap();
        assert!(!d.admits(&f, &bad));
        let good = FqRational::new(FqPoly::one(&f), z).unwrap();
        assert!(d.admits(&f, &good));
    }

    #[test]
    fn component_degrees() {
        for q in [2u64, 3, 4, 5] {
            for k in -6i64..=9 {
                let expected = if k % 2 == 0 { (q as i64 - 1) * k / 2 } else { (q as i64 - 1) * (k - 1) / 2 - 1 };
                let c = component_degree(q, k);
                assert_eq!(c.degree, expected, "q={q} k={k}");
                assert_eq!(component_divisor(&field(q), k).degree(), expected);
            }
        }
        assert_eq!(component_degree(3, 2).degree, 2);
        assert_eq!(component_degree(3, 3).degree, 1);
        assert_eq!(component_degree(2, 0).degree, 0);
    }

    #[test]
    fn symgeom_examples() {
        let f = field(3);
        let s = symgeom_iso(&f, 4, 0).unwrap();
        assert_eq!((s.t, s.exponent), (4, -2));
        let f2 = field(2);
        let s = symgeom_iso(&f2, 9, 0).unwrap();
        assert_eq!((s.t, s.exponent), (3, -4));
        assert!(symgeom_iso(&f2, 1, 1).is_err());
    }

    #[test]
    fn symgeom_is_an_equivariant_isomorphism() {
        for q in [2u64, 3, 4] {
            let f = field(q);
            let all = gl2_elements(&f);
            for k in 0..=9 {
                for i in 0..4 {
                    let Ok(s) = symgeom_iso(&f, k, i) else { continue };
                    assert_eq!(s.rank(&f).unwrap(), s.t + 1, "q={q} k={k} i={i}");
                    assert_eq!(global_sections(&f, &s.target).unwrap().dim, s.t + 1);
                    let elements: &[FqMat2] = if q <= 3 { &all } else { &gl2_generators(&f) };
                    for g in elements {
                        assert!(s.intertwines(&f, g).unwrap(), "q={q} k={k} i={i} g={g:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn truncated_sections() {
        let p2 = Prime::new(2).unwrap();
        let s = global_sections_truncated(p2, 3, 1).unwrap();
        assert_eq!((s.vertices, s.dim), (4, 4));
        let s = global_sections_truncated(p2, 2, 1).unwrap();
        assert_eq!((s.vertices, s.edges, s.dim), (4, 3, 5));
        for r in 0..=2 {
            assert_eq!(global_sections_truncated(p2, 1, r).unwrap().dim, 0);
        }
        for p in [2u64, 3] {
            let p = Prime::new(p).unwrap();
            for k in 0..=5 {
                for r in 0..=2 {
                    let s = global_sections_truncated(p, k, r).unwrap();
                    assert_eq!(s.dim, s.expected, "{s:?}");
                }
            }
        }
    }

    #[test]
    fn neighbour_points_are_distinct() {
        let p = Prime::new(3).unwrap();
        let v = TreeVertex::new(p, 1, &crate::scalars::rat(1, 3));
        let mut pts: Vec<P1Point> = crate::tree::neighbors(&v, p).iter().map(|w| neighbour_point(p, &v, w)).collect();
        pts.sort();
        pts.dedup();
        assert_eq!(pts.len(), 4);
    }

    #[test]
    fn quotient_and_stable_lines() {
        let f = field(2);
        let rep = quotient_rep_and_stable_lines(&f, 9, 0).unwrap();
        assert_eq!(rep.t, 3);
        assert_eq!(rep.dim, 3);
        assert!(rep.relations_stable);
        let o = f.one();
        let z = f.zero();
        // coefficient vectors indexed by the power of X
        let a = rep.class_of(&f, &[o, z, o, o]);
        let b = rep.class_of(&f, &[o, o, z, o]);
        assert_eq!(a, b);
        let line: Vec<u32> = {
            let lead = a.iter().position(|&x| x != z).unwrap();
            let s = f.inv(a[lead]).unwrap();
            a.iter().map(|&x| f.mul(x, s).index()).collect()
        };
        assert!(rep.stable_lines.contains(&line), "{:?}", rep.stable_lines);
        for q in [2u64, 3, 4] {
            let f = field(q);
            for k in 0..=9 {
                if let Ok(rep) = quotient_rep_and_stable_lines(&f, k, 0) {
                    assert_eq!(rep.dim as u64, q + 1);
                    assert!(rep.relations_stable, "q={q} k={k}");
                }
            }
        }
    }

    #[test]
    fn quotient_action_is_a_representation() {
        let f = field(3);
        let rep = quotient_rep_and_stable_lines(&f, 7, 0).unwrap();
        let group = generated_group(&f, &gl2_generators(&f));
        let v: Vec<FqElem> = (0..rep.dim).map(|j| f.from_int(j as i64 + 1)).collect();
        for (n, g1) in group.iter().enumerate().step_by(11) {
            let g2 = &group[(n * 7 + 3) % group.len()];
            let lhs = rep.act(&f, &g1.mul(&f, g2), &v).unwrap();
            let rhs = rep.act(&f, g1, &rep.act(&f, g2, &v).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn b_forms() {
        for q in [2u64, 3, 4] {
            let r = b_forms_check(q).unwrap();
            assert!(r.pass, "{r:?}");
        }
        assert_eq!(b_forms_check(2).unwrap().sl2_elements_checked, 6);
        assert_eq!(b_forms_check(4).unwrap().involution_swaps_parity, None);
    }

    #[test]
    fn geven_profiles() {
        assert_eq!(geven_lattice_profile(3, 1).edge_exponents, (1, 3));
        assert_eq!(geven_lattice_profile(3, 0).edge_exponents, (0, 1));
        assert_eq!(geven_lattice_profile(1, -1).edge_exponents, (-1, 0));
        assert_eq!(geven_lattice_profile(1, -1).vertex_exponent, -1);
    }

    #[test]
    fn geven_equivariance_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let p = Prime::new(3).unwrap();
        let mut checked = 0;
        while checked < 30 {
            let g = GroupElement::random(p, &mut rng, 2);
            if !g.is_even() {
                assert!(geven_equivariance_holds(&FactoredRational::one(p), 1, &TreeVertex::root(), &g).is_err());
                continue;
            }
            let k = 2 * rng.gen_range(0..3) + 1;
            let v = TreeVertex::new(p, rng.gen_range(-2..3), &crate::scalars::rat(rng.gen_range(-4..5), 1));
            let f = random_rational(p, &mut rng, 3);
            assert!(geven_equivariance_holds(&f, k, &v, &g).unwrap());
            checked += 1;
        }
    }
}
