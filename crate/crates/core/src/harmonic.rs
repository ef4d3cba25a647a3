//! Cochains on truncated trees with values in the dual of
//! `Sym^k(St)[1] (x) chi^(-k-2)`, the harmonicity operator, and the residue
//! map from rational sections of weight `k + 2`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::finite::{FqField, FqMatrix};
use crate::lattices::{edge_lattice, transport_to_standard_edge, vertex_lattice, vertex_local_spaces, Lattice};
use crate::linalg::KMatrix;
use crate::rational::{laurent_standard, FactoredRational};
use crate::scalars::{HalfInt, KHat, Valuation};
use crate::symrep::{DualVector, SymModule};
use crate::tree::{edge_transporter, GroupElement, TreeEdge, TreeVertex, TruncatedTree};

/// Edge-indexed dual vectors; zero values are not stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cochain {
    pub k: usize,
    pub values: BTreeMap<usize, DualVector>,
}

impl Cochain {
    pub fn zero(k: usize) -> Self {
        Cochain { k, values: BTreeMap::new() }
    }

    pub fn module(&self) -> SymModule {
        SymModule::cochain_source(self.k)
    }

    pub fn set(&mut self, edge: usize, v: DualVector) {
        if v.is_zero() {
            self.values.remove(&edge);
        } else {
            self.values.insert(edge, v);
        }
    }

    pub fn get(&self, edge: usize) -> Option<&DualVector> {
        self.values.get(&edge)
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add(&self, o: &Cochain) -> Cochain {
        let mut out = self.clone();
        for (e, v) in &o.values {
            let sum = match out.values.get(e) {
                Some(w) => w.add(v),
                None => v.clone(),
            };
            out.set(*e, sum);
        }
        out
    }

    pub fn scale(&self, s: &KHat) -> Cochain {
        let mut out = Cochain::zero(self.k);
        for (e, v) in &self.values {
            out.set(*e, v.scale(s));
        }
        out
    }

    pub fn to_json(&self, tree: &TruncatedTree) -> CochainJson {
        let edges = tree.edges();
        CochainJson {
            k: self.k,
            values: self
                .values
                .iter()
                .map(|(&e, v)| EdgeValue { edge: edges[e].clone(), coords: v.coords.iter().map(|c| c.to_string()).collect() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeValue {
    pub edge: TreeEdge,
    pub coords: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CochainJson {
    pub k: usize,
    pub values: Vec<EdgeValue>,
}

/// Where harmonicity is imposed on a truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Interior vertices only.
    Free,
    /// Every vertex, boundary ones with their truncated star.
    Truncated,
}

fn constrained(tree: &TruncatedTree, boundary: Boundary) -> Vec<usize> {
    match boundary {
        Boundary::Free => tree.interior().collect(),
        Boundary::Truncated => (0..tree.vertices().len()).collect(),
    }
}

/// `sg(Z) sum_{Z' in *(Z)} f_{Z,Z'}` at the constrained vertices.
pub fn delta(tree: &TruncatedTree, f: &Cochain, boundary: Boundary) -> BTreeMap<usize, DualVector> {
    let p = tree.prime();
    let module = f.module();
    let mut out = BTreeMap::new();
    for z in constrained(tree, boundary) {
        let mut acc = DualVector::zero(p, module);
        for e in tree.star(z) {
            if let Some(v) = f.get(e) {
                acc = acc.add(v);
            }
        }
        let sign = KHat::from_int(p, tree.vertices()[z].parity() as i64);
        out.insert(z, acc.scale(&sign));
    }
    out
}

pub fn is_harmonic(tree: &TruncatedTree, f: &Cochain, boundary: Boundary) -> bool {
    delta(tree, f, boundary).values().all(|v| v.is_zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// Over `Q_p(s)`, no lattice constraint.
    Free,
    /// On `prod L_e / s L_e`, harmonicity in `L_Z / s L_Z`.
    ModPihat,
    /// Star-local spaces on `prod D` at each constrained interior vertex.
    StarLocal,
}

#[derive(Clone, Debug, Serialize)]
pub struct HarmonicKernel {
    pub mode: KernelMode,
    pub boundary: Boundary,
    pub k: usize,
    pub unknowns: usize,
    pub dim: usize,
    /// Per-vertex dimensions in star-local mode.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub local_dims: Vec<(TreeVertex, usize)>,
    /// Every returned basis vector was checked to be harmonic.
    pub verified: bool,
    #[serde(skip)]
    pub free_basis: Vec<Cochain>,
    #[serde(skip)]
    pub mod_basis: Vec<Vec<u32>>,
}

pub fn harmonic_kernel(tree: &TruncatedTree, k: usize, mode: KernelMode, boundary: Boundary) -> Result<HarmonicKernel> {
    match mode {
        KernelMode::Free => Ok(free_kernel(tree, k, boundary)),
        KernelMode::ModPihat => mod_pihat_kernel(tree, k, boundary),
        KernelMode::StarLocal => star_local_kernel(tree, k, boundary),
    }
}

fn free_kernel(tree: &TruncatedTree, k: usize, boundary: Boundary) -> HarmonicKernel {
    let p = tree.prime();
    let rows = constrained(tree, boundary);
    let n_edges = tree.edge_indices().len();
    // The equations decouple by coordinate; one incidence matrix serves all.
    let mut m = KMatrix::zeros(p, rows.len(), n_edges);
    for (r, &z) in rows.iter().enumerate() {
        for e in tree.star(z) {
            m.set(r, e, KHat::one(p));
        }
    }
    let kernel = m.kernel();
    let module = SymModule::cochain_source(k);
    let mut basis = Vec::new();
    for j in 0..=k {
        for v in &kernel {
            let mut c = Cochain::zero(k);
            for (e, x) in v.iter().enumerate() {
                if !x.is_zero() {
                    c.set(e, DualVector::basis(p, module, j).scale(x));
                }
            }
            basis.push(c);
        }
    }
    let verified = basis.iter().all(|c| is_harmonic(tree, c, boundary));
    HarmonicKernel {
        mode: KernelMode::Free,
        boundary,
        k,
        unknowns: n_edges * (k + 1),
        dim: basis.len(),
        local_dims: vec![],
        verified,
        free_basis: basis,
        mod_basis: vec![],
    }
}

fn mod_pihat_kernel(tree: &TruncatedTree, k: usize, boundary: Boundary) -> Result<HarmonicKernel> {
    let p = tree.prime();
    let field = FqField::prime_field(p)?;
    let n = k + 1;
    let edges = tree.edges();
    let edge_bases: Vec<KMatrix> =
        edges.iter().map(|e| edge_lattice(p, e, k).map(|l| l.intersection.basis().clone())).collect::<Result<_>>()?;
    let rows = constrained(tree, boundary);
    let mut m = FqMatrix::zeros(&field, rows.len() * n, edges.len() * n);
    for (r, &z) in rows.iter().enumerate() {
        let inv = vertex_lattice(p, &tree.vertices()[z], k).lattice.basis().inverse()?;
        for e in tree.star(z) {
            let block = inv.mul(&edge_bases[e]).reduce(&field)?;
            for i in 0..n {
                for j in 0..n {
                    m.set(r * n + i, e * n + j, block.get(i, j));
                }
            }
        }
    }
    let kernel = m.kernel(&field);
    let verified = kernel.iter().all(|v| m.apply(&field, v).iter().all(|x| *x == field.zero()));
    Ok(HarmonicKernel {
        mode: KernelMode::ModPihat,
        boundary,
        k,
        unknowns: edges.len() * n,
        dim: kernel.len(),
        local_dims: vec![],
        verified,
        free_basis: vec![],
        mod_basis: kernel.iter().map(|v| v.iter().map(|x| x.index()).collect()).collect(),
    })
}

fn star_local_kernel(tree: &TruncatedTree, k: usize, boundary: Boundary) -> Result<HarmonicKernel> {
    let p = tree.prime();
    // Full stars exist only at interior vertices; the boundary choice does
    // not change this mode.
    let mut local_dims = Vec::new();
    let mut unknowns = 0;
    for z in tree.interior() {
        let v = &tree.vertices()[z];
        let ls = vertex_local_spaces(p, v, k, p.get())?;
        unknowns += ls.d_dims.iter().sum::<usize>();
        local_dims.push((v.clone(), ls.zhar_dim));
    }
    Ok(HarmonicKernel {
        mode: KernelMode::StarLocal,
        boundary,
        k,
        unknowns,
        dim: local_dims.iter().map(|(_, d)| d).sum(),
        local_dims,
        verified: true,
        free_basis: vec![],
        mod_basis: vec![],
    })
}

/// Residue oriented from the image of the standard outer vertex, i.e. the
/// Laurent data of the transported section on `0 < ord(z) < 1`.
fn oriented_residue(g: &FactoredRational, k: usize, transporter: &GroupElement) -> Result<DualVector> {
    let gamma = transporter.inverse();
    let moved = crate::symrep::automorphic_act(&gamma, g, k as i64 + 2);
    let w = laurent_standard(&moved, -(k as i64) - 1, -1)?;
    let module = SymModule::cochain_source(k);
    let s = module.matrix(&gamma);
    // value on X^i Y^(k-i) = sum_s a_(-s-1) c_s, c = column i of S(gamma)
    let a: Vec<KHat> = (0..=k).map(|s| w.coeff(-(s as i64) - 1).cloned().expect("in window")).collect();
    Ok(DualVector::new(module, s.transpose().apply(&a)))
}

/// Unordered-edge value: the residue oriented away from the even endpoint.
/// This is the normalisation under which `delta` kills residues.
fn residue_on_edge(g: &FactoredRational, k: usize, transporter: &GroupElement) -> Result<DualVector> {
    let p = g.prime();
    let from = crate::tree::act_on_vertex(transporter, &TreeVertex::root())?;
    let v = oriented_residue(g, k, transporter)?;
    Ok(v.scale(&KHat::from_int(p, from.parity() as i64)))
}

/// Residue on `e` oriented from its outer vertex towards its inner one.
pub fn res0_oriented(g: &FactoredRational, k: usize, e: &TreeEdge) -> Result<DualVector> {
    oriented_residue(g, k, &edge_transporter(g.prime(), e))
}

pub fn res0_edge(g: &FactoredRational, k: usize, e: &TreeEdge) -> Result<DualVector> {
    residue_on_edge(g, k, &edge_transporter(g.prime(), e))
}

/// `Res^0(g)` on every edge of the truncation.
pub fn res0(g: &FactoredRational, k: usize, tree: &TruncatedTree) -> Result<Cochain> {
    let mut c = Cochain::zero(k);
    for (i, e) in tree.edges().iter().enumerate() {
        c.set(i, res0_edge(g, k, e)?);
    }
    Ok(c)
}

/// Recomputes the residue on `e` with the transporter `T delta`, where
/// `delta` fixes the standard edge.
pub fn res0_edge_with_stabiliser(g: &FactoredRational, k: usize, e: &TreeEdge, delta: &GroupElement) -> Result<DualVector> {
    let t = edge_transporter(g.prime(), e).mul(delta);
    residue_on_edge(g, k, &t)
}

/// Elements with small entries that fix the standard edge, including the
/// swap `[[0, p], [1, 0]]` of its endpoints.
pub fn standard_edge_stabilisers(p: crate::scalars::Prime) -> Vec<GroupElement> {
    let std = TreeEdge::standard();
    let mut out = Vec::new();
    for a in -2..=2i64 {
        for b in -2..=2i64 {
            for c in -2..=2i64 {
                for d in -2..=2i64 {
                    let Ok(g) = GroupElement::from_ints(p, a, b, c, d) else { continue };
                    if crate::tree::act_on_edge(&g, &std).ok().as_ref() == Some(&std) {
                        out.push(g);
                    }
                }
            }
        }
    }
    let swap = GroupElement::from_ints(p, 0, p.get() as i64, 1, 0).expect("invertible");
    if !out.contains(&swap) && crate::tree::act_on_edge(&swap, &std).ok().as_ref() == Some(&std) {
        out.push(swap);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeIntegrality {
    pub edge: TreeEdge,
    pub in_lattice: bool,
    /// Least valuation of the coordinates in a basis of `L_e`.
    pub min_valuation: Valuation,
}

/// Checks `Res^0(g)` edge by edge against `L_e`.
pub fn res0_integrality(g: &FactoredRational, k: usize, tree: &TruncatedTree) -> Result<Vec<EdgeIntegrality>> {
    let p = g.prime();
    let c = res0(g, k, tree)?;
    let mut out = Vec::new();
    for (i, e) in tree.edges().iter().enumerate() {
        let lattice: Lattice = edge_lattice(p, e, k)?.intersection;
        let coords = match c.get(i) {
            Some(v) => lattice.basis().inverse()?.apply(&v.coords),
            None => vec![KHat::zero(p); k + 1],
        };
        let min_valuation = coords.iter().map(|x| x.valuation()).min().unwrap_or(Valuation::Infinity);
        out.push(EdgeIntegrality { edge: e.clone(), in_lattice: min_valuation >= HalfInt::ZERO, min_valuation });
    }
    Ok(out)
}

/// Weight-`k + 2` transport used by the residue, exposed for audits.
pub fn transported_section(g: &FactoredRational, k: usize, e: &TreeEdge) -> FactoredRational {
    transport_to_standard_edge(g, k as i64 + 2, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattices::{expected_local_dims, section_lattice_membership};
    use crate::rational::parse_function;
    use crate::scalars::{rat, Prime};
    use crate::symrep::dual_act;
    use crate::tree::act_on_edge;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pr(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn on_geodesic(e: &TreeEdge) -> bool {
        e.endpoints().iter().all(|v| v.offset() == &rat(0, 1))
    }

    #[test]
    fn delta_examples() {
        let p = pr(2);
        for (center, sign) in [(TreeVertex::root(), 1i64), (TreeVertex::standard(1), -1)] {
            let tree = TruncatedTree::new(p, center, 1).unwrap();
            let module = SymModule::cochain_source(0);
            assert!(delta(&tree, &Cochain::zero(0), Boundary::Free).values().all(|v| v.is_zero()));
            let mut f = Cochain::zero(0);
            for e in 0..3 {
                f.set(e, DualVector::basis(p, module, 0));
            }
            let d = delta(&tree, &f, Boundary::Free);
            assert_eq!(d.len(), 1);
            assert_eq!(d[&0].coords, vec![KHat::from_int(p, 3 * sign)]);
        }
    }

    #[test]
    fn star_kernels_match_local_spaces() {
        for &(p, k, want) in &[(2u64, 0usize, 2usize), (2, 1, 1)] {
            let tree = TruncatedTree::new(pr(p), TreeVertex::root(), 1).unwrap();
            let hk = harmonic_kernel(&tree, k, KernelMode::StarLocal, Boundary::Free).unwrap();
            assert_eq!(hk.dim, want);
            assert_eq!(hk.dim, expected_local_dims(k, p).2);
        }
    }

    #[test]
    fn free_kernel_dimension() {
        for &p in &[2u64, 3] {
            for r in 1..3 {
                let tree = TruncatedTree::new(pr(p), TreeVertex::root(), r).unwrap();
                for k in 0..3 {
                    let hk = harmonic_kernel(&tree, k, KernelMode::Free, Boundary::Free).unwrap();
                    let e = tree.edge_indices().len();
                    let vi = tree.interior().count();
                    assert_eq!(hk.dim, (k + 1) * (e - vi));
                    assert!(hk.verified);
                    let ht = harmonic_kernel(&tree, k, KernelMode::Free, Boundary::Truncated).unwrap();
                    assert_eq!(ht.dim, 0);
                }
            }
        }
    }

    #[test]
    fn mod_pihat_kernel_is_verified() {
        let tree = TruncatedTree::new(pr(2), TreeVertex::root(), 2).unwrap();
        for k in 0..4 {
            let hk = harmonic_kernel(&tree, k, KernelMode::ModPihat, Boundary::Free).unwrap();
            assert!(hk.verified);
            // Reduced harmonicity is surjective onto prod L_Z / s at interior
            // vertices, so the count is exact.
            assert_eq!(hk.dim, hk.unknowns - (k + 1) * tree.interior().count());
        }
    }

    #[test]
    fn residue_of_one_over_z() {
        let p = pr(2);
        let tree = TruncatedTree::new(p, TreeVertex::root(), 3).unwrap();
        let g = parse_function(p, "1/z").unwrap();
        let c = res0(&g, 0, &tree).unwrap();
        let module = SymModule::cochain_source(0);
        for (i, e) in tree.edges().iter().enumerate() {
            if on_geodesic(e) {
                let h0 = DualVector::basis(p, module, 0);
                assert_eq!(res0_oriented(&g, 0, e).unwrap(), h0, "{e}");
                let sign = KHat::from_int(p, e.outer().parity() as i64);
                assert_eq!(c.get(i), Some(&h0.scale(&sign)), "{e}");
            } else {
                assert_eq!(c.get(i), None, "{e}");
                assert!(res0_oriented(&g, 0, e).unwrap().is_zero());
            }
        }
        assert!(is_harmonic(&tree, &c, Boundary::Free));
        assert!(res0_integrality(&g, 0, &TruncatedTree::new(p, TreeVertex::root(), 2).unwrap())
            .unwrap()
            .iter()
            .all(|x| x.in_lattice));
    }

    #[test]
    fn constants_have_no_residue() {
        let p = pr(3);
        let tree = TruncatedTree::new(p, TreeVertex::root(), 2).unwrap();
        for k in 0..4 {
            assert!(res0(&FactoredRational::constant(KHat::from_int(p, 7)), k, &tree).unwrap().is_zero());
        }
    }

    #[test]
    fn scaled_residue_leaves_lattice() {
        let p = pr(2);
        let tree = TruncatedTree::new(p, TreeVertex::root(), 2).unwrap();
        let g = parse_function(p, "s^-1/z").unwrap();
        let cert = res0_integrality(&g, 0, &tree).unwrap();
        assert!(cert.iter().any(|x| !x.in_lattice && x.min_valuation == Valuation::Finite(HalfInt::from_halves(-1))));
    }

    #[test]
    fn bounds_give_integral_residues() {
        // k = 2: omega(a_j) >= max(0, -(k+2)/2 - j) holds coefficient-wise.
        let p = pr(3);
        let g = parse_function(p, "1/z + z^-2 + 3*z^-3 + 5 + z").unwrap();
        let v = res0_edge(&g, 2, &TreeEdge::standard()).unwrap();
        let lattice = edge_lattice(p, &TreeEdge::standard(), 2).unwrap().intersection;
        assert!(lattice.contains(&v.coords));
    }

    #[test]
    fn residues_are_harmonic_and_transporter_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = pr(2);
        let tree = TruncatedTree::new(p, TreeVertex::root(), 3).unwrap();
        let stab = standard_edge_stabilisers(p);
        for _ in 0..6 {
            let k = rng.gen_range(0..3usize);
            let mut factors = Vec::new();
            for _ in 0..3 {
                factors.push((KHat::from_rat(p, rat(rng.gen_range(-6..7), rng.gen_range(1..5))), rng.gen_range(-2..2)));
            }
            let g = FactoredRational::from_factors(KHat::one(p), factors);
            let c = res0(&g, k, &tree).unwrap();
            assert!(is_harmonic(&tree, &c, Boundary::Free));
            for e in tree.edges().iter().take(6) {
                let base = res0_edge(&g, k, e).unwrap();
                for delta in &stab {
                    assert_eq!(res0_edge_with_stabiliser(&g, k, e, delta).unwrap(), base, "{e} {delta:?}");
                }
            }
        }
    }

    #[test]
    fn stabilisers_fix_the_standard_edge() {
        for p in [pr(2), pr(3), pr(5)] {
            let stab = standard_edge_stabilisers(p);
            let std = TreeEdge::standard();
            assert!(stab.iter().all(|g| act_on_edge(g, &std).unwrap() == std));
            // one of them exchanges the endpoints
            assert!(stab.iter().any(|g| !g.is_even()));
        }
    }

    #[test]
    fn residue_is_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = pr(3);
        let f = parse_function(p, "(z-1)^-2*(z-1/3)^-1*(z-9)").unwrap();
        for _ in 0..10 {
            let g = GroupElement::random(p, &mut rng, 2);
            let k = rng.gen_range(0..3usize);
            let e = TreeEdge::new(p, TreeVertex::standard(rng.gen_range(-2..2)), TreeVertex::standard(0)).ok();
            let e = e.unwrap_or_else(TreeEdge::standard);
            let moved = crate::symrep::automorphic_act(&g, &f, k as i64 + 2);
            let lhs = res0_edge(&moved, k, &act_on_edge(&g, &e).unwrap()).unwrap();
            // Equivariant up to the sign (-1)^ord(det g) coming from the
            // parity convention on unordered edges.
            let sign = if g.is_even() { 1 } else { -1 };
            let rhs = dual_act(&g, &res0_edge(&f, k, &e).unwrap()).scale(&KHat::from_int(p, sign));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn residue_is_linear() {
        let p = pr(2);
        let tree = TruncatedTree::new(p, TreeVertex::root(), 2).unwrap();
        let f = parse_function(p, "(z-1)^-2").unwrap();
        let g = parse_function(p, "z^-3*(z-2)").unwrap();
        let three = KHat::from_int(p, 3);
        let lhs = res0(&f.add(&g.scale(&three)), 1, &tree).unwrap();
        let rhs = res0(&f, 1, &tree).unwrap().add(&res0(&g, 1, &tree).unwrap().scale(&three));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn vertex_membership_gives_integral_residues() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let p = pr(2);
        let tree = TruncatedTree::new(p, TreeVertex::root(), 2).unwrap();
        let mut checked = 0;
        for _ in 0..40 {
            let k = rng.gen_range(0..3usize);
            let mut factors = Vec::new();
            for _ in 0..2 {
                factors.push((KHat::from_rat(p, rat(rng.gen_range(-4..5), 1)), rng.gen_range(-2..1)));
            }
            let g = FactoredRational::from_factors(KHat::pihat_pow(p, rng.gen_range(0..4)), factors);
            let all_in = tree
                .vertices()
                .iter()
                .all(|v| section_lattice_membership(&g, k as i64 + 2, v).map(|m| m.member).unwrap_or(false));
            if all_in {
                checked += 1;
                assert!(res0_integrality(&g, k, &tree).unwrap().iter().all(|x| x.in_lattice));
            }
        }
        assert!(checked > 3);
    }
}
