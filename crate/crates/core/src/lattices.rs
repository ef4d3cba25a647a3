//! Integral structures: the dual lattices `L_Z`, `L_{Z1,Z2}`, their
//! reductions modulo `s`, and membership of functions in the integral
//! subsheaf of weight `k` over vertex and edge formal opens.
//!
//! Lattices live in the dual of `Sym^k(St)[1] (x) chi^(-k-2)` in the basis
//! `h_j`. Exponents written as plain integers count powers of `s`, so a
//! valuation is half of them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite::{FqField, FqMatrix};
use crate::linalg::{smith_form, KMatrix, SmithForm};
use crate::rational::{laurent_standard, FactoredRational, LaurentWindow};
use crate::scalars::{val_rat, HalfInt, KHat, Prime, Valuation};
use crate::symrep::{automorphic_act, dual_matrix, SymModule};
use crate::tree::{act_on_edge, edge_transporter, neighbors, GroupElement, TreeEdge, TreeVertex};

/// A full-rank `O[s]`-lattice given by a basis in its columns.
#[derive(Clone, Debug)]
pub struct Lattice {
    basis: KMatrix,
}

impl Lattice {
    pub fn new(basis: KMatrix) -> Result<Self> {
        basis.inverse()?;
        Ok(Lattice { basis })
    }

    pub fn standard(p: Prime, n: usize) -> Self {
        Lattice { basis: KMatrix::identity(p, n) }
    }

    pub fn basis(&self) -> &KMatrix {
        &self.basis
    }

    pub fn contains(&self, v: &[KHat]) -> bool {
        let inv = self.basis.inverse().expect("full rank");
        inv.apply(v).iter().all(|c| c.valuation() >= Valuation::int(0))
    }

    pub fn same_as(&self, o: &Lattice) -> bool {
        let t = self.basis.inverse().expect("full rank").mul(&o.basis);
        t.is_integral() && t.inverse().map(|i| i.is_integral()).unwrap_or(false)
    }

    pub fn transform(&self, m: &KMatrix) -> Lattice {
        Lattice { basis: m.mul(&self.basis) }
    }

    /// Smith form of `self^-1 o`: the exponents are the elementary divisors
    /// of `o` relative to `self`.
    pub fn relative(&self, o: &Lattice) -> Result<SmithForm> {
        smith_form(&self.basis.inverse()?.mul(&o.basis))
    }

    /// Elementary divisors relative to the standard lattice, ascending.
    pub fn elementary_divisors(&self) -> Vec<HalfInt> {
        let n = self.basis.rows();
        let s = Lattice::standard(self.basis.prime(), n).relative(self).expect("full rank");
        sorted_halves(&s.exponents)
    }

    fn adapted(&self, o: &Lattice, clamp: fn(i64) -> i64) -> Result<Lattice> {
        let s = self.relative(o)?;
        let p = self.basis.prime();
        let d: Vec<KHat> = s.exponents.iter().map(|&e| KHat::pihat_pow(p, clamp(e))).collect();
        Ok(Lattice { basis: self.basis.mul(&s.left).mul(&KMatrix::diagonal(p, &d)) })
    }

    pub fn intersect(&self, o: &Lattice) -> Result<Lattice> {
        self.adapted(o, |e| e.max(0))
    }

    pub fn sum(&self, o: &Lattice) -> Result<Lattice> {
        self.adapted(o, |e| e.min(0))
    }

    /// `O`-length of `self / (self ∩ o)`, counted in powers of `s`.
    pub fn colength_in(&self, o: &Lattice) -> Result<i64> {
        Ok(self.relative(o)?.exponents.iter().map(|&e| e.max(0)).sum())
    }
}

fn sorted_halves(exps: &[i64]) -> Vec<HalfInt> {
    let mut v: Vec<HalfInt> = exps.iter().map(|&e| HalfInt::from_halves(e)).collect();
    v.sort();
    v
}

/// `L_Z = g.Hom_O(Sym^k(St)[1] (x) chi^(-k-2), O)` for a transporter `g`
/// with `Z = g.(0,0)`.
#[derive(Clone, Debug, Serialize)]
pub struct VertexLattice {
    pub vertex: TreeVertex,
    pub k: usize,
    #[serde(skip)]
    pub lattice: Lattice,
    /// Valuations of the diagonal when the basis is diagonal in `h_j`.
    pub diagonal: Option<Vec<HalfInt>>,
    pub elementary_divisors: Vec<HalfInt>,
}

pub fn vertex_lattice_with(p: Prime, v: &TreeVertex, k: usize, transporter: &GroupElement) -> VertexLattice {
    let basis = dual_matrix(&SymModule::cochain_source(k), transporter);
    let lattice = Lattice { basis };
    let diagonal = diagonal_valuations(lattice.basis());
    let elementary_divisors = lattice.elementary_divisors();
    let _ = p;
    VertexLattice { vertex: v.clone(), k, lattice, diagonal, elementary_divisors }
}

pub fn vertex_lattice(p: Prime, v: &TreeVertex, k: usize) -> VertexLattice {
    vertex_lattice_with(p, v, k, &v.transporter(p))
}

fn diagonal_valuations(m: &KMatrix) -> Option<Vec<HalfInt>> {
    let n = m.rows();
    for r in 0..n {
        for c in 0..n {
            if r != c && !m.get(r, c).is_zero() {
                return None;
            }
        }
    }
    Some((0..n).map(|i| m.get(i, i).valuation().finite().expect("invertible")).collect())
}

/// `L_{Z1,Z2} = L_{Z1} ∩ L_{Z2}`; divisors are relative to the outer
/// vertex's lattice.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeLattice {
    pub edge: TreeEdge,
    pub k: usize,
    pub relative_divisors: Vec<HalfInt>,
    #[serde(skip)]
    pub intersection: Lattice,
    #[serde(skip)]
    pub sum: Lattice,
}

pub fn edge_lattice(p: Prime, e: &TreeEdge, k: usize) -> Result<EdgeLattice> {
    let l1 = vertex_lattice(p, e.outer(), k).lattice;
    let l2 = vertex_lattice(p, e.inner(), k).lattice;
    let s = l1.relative(&l2)?;
    let rel: Vec<i64> = s.exponents.iter().map(|&d| d.max(0)).collect();
    Ok(EdgeLattice {
        edge: e.clone(),
        k,
        relative_divisors: sorted_halves(&rel),
        intersection: l1.intersect(&l2)?,
        sum: l1.sum(&l2)?,
    })
}

/// A subspace of `F_p^(k+1)` given by basis vectors (residue indices).
#[derive(Clone, Debug, Serialize)]
pub struct ModSpace {
    pub dim: usize,
    pub basis: Vec<Vec<u32>>,
}

/// The images `D` at both endpoints of an edge and `E`.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeLocalSpaces {
    pub edge: TreeEdge,
    /// `D^{outer}`, coordinates in the basis of `L_outer`.
    pub d_outer: ModSpace,
    /// `D^{inner}`, coordinates in the basis of `L_inner`.
    pub d_inner: ModSpace,
    pub e_dim: usize,
}

/// Star-local harmonic space at a vertex.
#[derive(Clone, Debug, Serialize)]
pub struct VertexLocalSpaces {
    pub vertex: TreeVertex,
    pub neighbours: Vec<TreeVertex>,
    pub d_dims: Vec<usize>,
    pub zhar_dim: usize,
    /// Kernel vectors, coordinates on the concatenated `D` bases.
    pub zhar_basis: Vec<Vec<u32>>,
}

fn residue_field(p: Prime, q: u64) -> Result<FqField> {
    if q != p.get() {
        return Err(Error::ResidueFieldMismatch { q, p: p.get() });
    }
    FqField::prime_field(p)
}

/// `D^{Z1}_{Z1,Z2}` as reduced columns in the `L_{Z1}` basis.
fn d_space(field: &FqField, l1: &Lattice, l2: &Lattice) -> Result<FqMatrix> {
    let s = l1.relative(l2)?;
    let cols: Vec<Vec<KHat>> =
        s.exponents.iter().enumerate().filter(|(_, &d)| d <= 0).map(|(i, _)| s.left.column(i)).collect();
    let p = l1.basis().prime();
    let m = KMatrix::from_columns(p, l1.basis().rows(), &cols);
    m.reduce(field)
}

fn mod_space(field: &FqField, m: &FqMatrix) -> ModSpace {
    let cols: Vec<Vec<u32>> = (0..m.cols).map(|c| m.column(c).iter().map(|x| x.index()).collect()).collect();
    ModSpace { dim: m.rank(field), basis: cols }
}

pub fn edge_local_spaces(p: Prime, e: &TreeEdge, k: usize, q: u64) -> Result<EdgeLocalSpaces> {
    let field = residue_field(p, q)?;
    let l1 = vertex_lattice(p, e.outer(), k).lattice;
    let l2 = vertex_lattice(p, e.inner(), k).lattice;
    let d1 = d_space(&field, &l1, &l2)?;
    let d2 = d_space(&field, &l2, &l1)?;
    let e_dim = l1.relative(&l2)?.exponents.iter().filter(|&&d| d == 0).count();
    Ok(EdgeLocalSpaces { edge: e.clone(), d_outer: mod_space(&field, &d1), d_inner: mod_space(&field, &d2), e_dim })
}

pub fn vertex_local_spaces(p: Prime, v: &TreeVertex, k: usize, q: u64) -> Result<VertexLocalSpaces> {
    let field = residue_field(p, q)?;
    let lv = vertex_lattice(p, v, k).lattice;
    let nbrs = neighbors(v, p);
    let mut blocks = Vec::new();
    for w in &nbrs {
        let lw = vertex_lattice(p, w, k).lattice;
        blocks.push(d_space(&field, &lv, &lw)?);
    }
    let total: usize = blocks.iter().map(|b| b.cols).sum();
    let mut stacked = FqMatrix::zeros(&field, k + 1, total);
    let mut off = 0;
    for b in &blocks {
        for c in 0..b.cols {
            for r in 0..b.rows {
                stacked.set(r, off + c, b.get(r, c));
            }
        }
        off += b.cols;
    }
    let kernel = stacked.kernel(&field);
    Ok(VertexLocalSpaces {
        vertex: v.clone(),
        neighbours: nbrs,
        d_dims: blocks.iter().map(|b| b.rank(&field)).collect(),
        zhar_dim: kernel.len(),
        zhar_basis: kernel.iter().map(|v| v.iter().map(|x| x.index()).collect()).collect(),
    })
}

/// Closed forms for the local dimensions (Sym-degree `k`, residue size `q`).
pub fn expected_local_dims(k: usize, q: u64) -> (usize, usize, usize) {
    let q = q as usize;
    if k.is_multiple_of(2) {
        ((k + 2) / 2, 1, (q - 1) * (k + 2) / 2 + 1)
    } else {
        (k.div_ceil(2), 0, (q - 1) * (k + 1) / 2)
    }
}

/// Vertex membership certificate: the Gauss valuation of the transported
/// function at the root.
#[derive(Clone, Debug, Serialize)]
pub struct Membership {
    pub member: bool,
    pub valuation: HalfInt,
}

pub fn section_lattice_membership(f: &FactoredRational, k: i64, v: &TreeVertex) -> Result<Membership> {
    let p = f.prime();
    let g = v.transporter(p).inverse();
    let val = automorphic_act(&g, f, k).gauss_valuation(&TreeVertex::root())?;
    Ok(Membership { member: val >= HalfInt::ZERO, valuation: val })
}

/// The same condition read directly at `v`: `gauss(f, v) >= k m / 2`.
pub fn section_bound_at(v: &TreeVertex, k: i64) -> HalfInt {
    HalfInt::from_halves(k * v.level())
}

/// Edge membership certificate on the standard annulus `0 < ord(z) < 1`
/// after weight-`k` transport.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeMembership {
    pub member: bool,
    /// Circle `ord(z) = 0` (outer vertex) and its bound.
    pub outer_circle: HalfInt,
    pub outer_bound: HalfInt,
    /// Circle `ord(z) = 1` (inner vertex) and its bound.
    pub inner_circle: HalfInt,
    pub inner_bound: HalfInt,
}

/// Weight-`k` transport of `f` so that `e` becomes the standard edge.
pub fn transport_to_standard_edge(f: &FactoredRational, k: i64, e: &TreeEdge) -> FactoredRational {
    let t = edge_transporter(f.prime(), e);
    automorphic_act(&t.inverse(), f, k)
}

fn check_no_annulus_poles(g: &FactoredRational) -> Result<()> {
    for (x, _) in g.poles() {
        if let Valuation::Finite(v) = x.valuation() {
            if v > HalfInt::ZERO && v < HalfInt::from_int(1) {
                return Err(Error::PoleInsideAnnulus { root: x.to_string() });
            }
        }
    }
    Ok(())
}

/// Membership in the integral subsheaf over the formal open of the edge:
/// both boundary circles of the transported function satisfy the vertex
/// bounds. For odd `k` this is the same module as the one generated by the
/// two monomials, see [`edge_membership_coefficients`].
pub fn edge_membership(f: &FactoredRational, k: i64, e: &TreeEdge) -> Result<EdgeMembership> {
    let g = transport_to_standard_edge(f, k, e);
    check_no_annulus_poles(&g)?;
    let outer_circle = g.gauss_circle(HalfInt::ZERO)?;
    let inner_circle = g.gauss_circle(HalfInt::from_int(1))?;
    let outer_bound = HalfInt::ZERO;
    let inner_bound = HalfInt::from_halves(-k);
    Ok(EdgeMembership {
        member: outer_circle >= outer_bound && inner_circle >= inner_bound,
        outer_circle,
        outer_bound,
        inner_circle,
        inner_bound,
    })
}

/// Monomial generators `(valuation, exponent)` of the weight-`k` edge lattice
/// over the edge `{Z_n, Z_(n+1)}`, `Z_n = (n, 0)`.
pub fn edge_generators(k: i64, n: i64) -> Vec<(HalfInt, i64)> {
    if k % 2 == 0 {
        vec![(HalfInt::ZERO, -k / 2)]
    } else {
        vec![(HalfInt::from_halves(n + 1), -(k - 1) / 2), (HalfInt::from_halves(-n), -(k + 1) / 2)]
    }
}

/// Least valuation of a coefficient `c` with `c z^j` in the module generated
/// by `gens` over the edge ring, `c' z^j'` integral iff
/// `ord(c') >= max(j' n, j' (n + 1))`.
pub fn monomial_bound(gens: &[(HalfInt, i64)], n: i64, j: i64) -> HalfInt {
    gens.iter()
        .map(|&(v, e)| {
            let jp = j - e;
            v + HalfInt::from_int((jp * n).max(jp * (n + 1)))
        })
        .min()
        .expect("nonempty generators")
}

/// Coefficient-wise membership on a window of Laurent coefficients, with
/// tails certified by the tail bounds. `None` when the tails cannot be
/// certified at this window size.
pub fn edge_membership_coefficients(f: &FactoredRational, k: i64, e: &TreeEdge, half_width: i64) -> Result<Option<bool>> {
    let g = transport_to_standard_edge(f, k, e);
    let gens = edge_generators(k, -1);
    let (poly, _) = g.partial_fractions();
    let lo = -half_width.max(k.abs() + 2);
    let hi = half_width.max(k.abs() + 2).max(poly.degree().unwrap_or(0) as i64 + 1);
    let w = laurent_standard(&g, lo, hi)?;
    Ok(window_verdict(&w, &gens, -1))
}

fn window_verdict(w: &LaurentWindow, gens: &[(HalfInt, i64)], n: i64) -> Option<bool> {
    for j in w.lo..=w.hi {
        let a = w.coeff(j).expect("in window");
        if a.valuation() < monomial_bound(gens, n, j) {
            return Some(false);
        }
    }
    // Beyond the window the bound is affine in t = -j (inner) or t = j
    // (outer) with slopes 1 and 0 here.
    let t_in = 1 - w.lo;
    let need_in = monomial_bound(gens, n, -t_in);
    let need_in_slope = HalfInt::from_int(1);
    let inner_ok = w.inner_tail.iter().all(|b| b.at(t_in) >= need_in && b.slope >= need_in_slope);
    let t_out = w.hi + 1;
    let need_out = monomial_bound(gens, n, t_out);
    let outer_ok = w.outer_tail.iter().all(|b| b.at(t_out) >= need_out && b.slope >= HalfInt::ZERO);
    if inner_ok && outer_ok {
        Some(true)
    } else {
        None
    }
}

/// Both sides of `2 ord((a + c z)^-k) + k ord(det) = k (n' - n)` with `z` at
/// the Shilov point of `Z_{n'}`.
pub fn xv_identity(g: &GroupElement, n: i64, n_prime: i64, k: i64) -> Result<(HalfInt, HalfInt)> {
    let p = g.prime();
    let target = crate::tree::act_on_vertex(g, &TreeVertex::standard(n))?;
    if target != TreeVertex::standard(n_prime) {
        return Err(Error::InvalidParameters(format!("g does not map (n,0) to (n',0) for n={n}, n'={n_prime}")));
    }
    let factor = if g.c == num_traits::Zero::zero() {
        FactoredRational::constant(KHat::from_rat(p, g.a.clone()))
    } else {
        let root = KHat::from_rat(p, -(&g.a / &g.c));
        FactoredRational::linear_power(&root, 1).scale(&KHat::from_rat(p, g.c.clone()))
    };
    let w = factor.gauss_valuation(&TreeVertex::standard(n_prime))?;
    let det_val = val_rat(&g.det(), p).expect("invertible");
    let lhs = (w * (-2 * k)) + HalfInt::from_int(k * det_val);
    Ok((lhs, HalfInt::from_int(k * (n_prime - n))))
}

/// Checks `section_lattice_membership(f, k, v) == section_lattice_membership(f|g, k, g v)`.
pub fn equivariance_holds(f: &FactoredRational, k: i64, v: &TreeVertex, g: &GroupElement) -> Result<bool> {
    let gv = crate::tree::act_on_vertex(g, v)?;
    let before = section_lattice_membership(f, k, v)?;
    let after = section_lattice_membership(&automorphic_act(g, f, k), k, &gv)?;
    Ok(before.member == after.member && before.valuation == after.valuation)
}

/// Edge version of [`equivariance_holds`].
pub fn edge_equivariance_holds(f: &FactoredRational, k: i64, e: &TreeEdge, g: &GroupElement) -> Result<bool> {
    let ge = act_on_edge(g, e)?;
    let before = edge_membership(f, k, e)?;
    let after = edge_membership(&automorphic_act(g, f, k), k, &ge)?;
    Ok(before.member == after.member)
}
