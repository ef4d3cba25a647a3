//! The Bruhat-Tits tree of `GL2(Q_p)`.
//!
//! A vertex `(m, b)` is the closed disc `b + p^(-m) Z_p` in the coordinate
//! `z`, with `b` reduced to its canonical residue modulo `p^(-m) Z_p`. Level
//! `m` grows towards `z = inf`, so `(n, 0)` is the component on which
//! `ord(z) = -n`. As lattice classes the vertex is the class of the columns
//! of `[[p^(-m), b], [0, 1]]`.
//!
//! Group elements act on `z` by `g.z = (-b + a z) / (d - c z)`, which is the
//! ordinary Moebius action of `J g J` with `J = diag(1, -1)`. The action on
//! vertices is therefore the action of `J g J` on lattice classes.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalars::{canonical_mod_power, val_rat, KHat, Prime, Rat};

/// An invertible 2x2 matrix over `Q` (viewed inside `GL2(Q_p)`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    p: Prime,
    pub a: Rat,
    pub b: Rat,
    pub c: Rat,
    pub d: Rat,
}

impl GroupElement {
    pub fn new(p: Prime, a: Rat, b: Rat, c: Rat, d: Rat) -> Result<Self> {
        let g = GroupElement { p, a, b, c, d };
        if g.det().is_zero() {
            return Err(Error::SingularMatrix);
        }
        Ok(g)
    }

    pub fn from_ints(p: Prime, a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let r = |x: i64| Rat::from_integer(x.into());
        Self::new(p, r(a), r(b), r(c), r(d))
    }

    pub fn identity(p: Prime) -> Self {
        Self::from_ints(p, 1, 0, 0, 1).expect("invertible")
    }

    /// `diag(1, p^n)`.
    pub fn gamma(p: Prime, n: i64) -> Self {
        GroupElement { p, a: Rat::one(), b: Rat::zero(), c: Rat::zero(), d: p.pow(n) }
    }

    /// `[[1, p^(-n) a], [0, 1]]`.
    pub fn gamma_shift(p: Prime, a: &Rat, n: i64) -> Self {
        GroupElement { p, a: Rat::one(), b: p.pow(-n) * a, c: Rat::zero(), d: Rat::one() }
    }

    pub fn scalar(p: Prime, x: Rat) -> Result<Self> {
        Self::new(p, x.clone(), Rat::zero(), Rat::zero(), x)
    }

    /// A random invertible element with entries `u p^e`, `|u| <= 2p`,
    /// `|e| <= spread`.
    pub fn random<R: rand::Rng + ?Sized>(p: Prime, rng: &mut R, spread: i64) -> Self {
        let bound = 2 * p.get() as i64;
        let entry = |rng: &mut R| -> Rat {
            let u: i64 = rng.gen_range(-bound..=bound);
            Rat::from_integer(u.into()) * p.pow(rng.gen_range(-spread..=spread))
        };
        loop {
            let (a, b, c, d) = (entry(rng), entry(rng), entry(rng), entry(rng));
            if let Ok(g) = Self::new(p, a, b, c, d) {
                return g;
            }
        }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn det(&self) -> Rat {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn mul(&self, o: &GroupElement) -> GroupElement {
        assert_eq!(self.p, o.p);
        GroupElement {
            p: self.p,
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let det = self.det();
        GroupElement {
            p: self.p,
            a: &self.d / &det,
            b: -(&self.b / &det),
            c: -(&self.c / &det),
            d: &self.a / &det,
        }
    }

    /// `J g J` with `J = diag(1, -1)`.
    fn flipped(&self) -> [Rat; 4] {
        [self.a.clone(), -self.b.clone(), -self.c.clone(), self.d.clone()]
    }

    /// `g.z = (-b + a z) / (d - c z)`; `None` means the point at infinity.
    pub fn act_on_point(&self, z: &KHat) -> Option<KHat> {
        let p = self.p;
        let num = &(&KHat::from_rat(p, self.a.clone()) * z) - &KHat::from_rat(p, self.b.clone());
        let den = &KHat::from_rat(p, self.d.clone()) - &(&KHat::from_rat(p, self.c.clone()) * z);
        den.inv().ok().map(|inv| &num * &inv)
    }

    /// Image of the point at infinity.
    pub fn act_on_infinity(&self) -> Option<KHat> {
        if self.c.is_zero() {
            None
        } else {
            Some(KHat::from_rat(self.p, -(&self.a / &self.c)))
        }
    }

    pub fn is_sl2(&self) -> bool {
        self.det().is_one()
    }

    /// Parity of the determinant valuation; even elements preserve the
    /// level parity of every vertex.
    pub fn is_even(&self) -> bool {
        val_rat(&self.det(), self.p).expect("invertible") % 2 == 0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A vertex of the tree in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeVertex {
    level: i64,
    offset: Rat,
}

impl TreeVertex {
    /// Canonicalizes `offset` modulo `p^(-level) Z_p`.
    pub fn new(p: Prime, level: i64, offset: &Rat) -> Self {
        TreeVertex { level, offset: canonical_mod_power(offset, p, -level) }
    }

    /// The vertex `(n, 0)`, image of the central vertex under `diag(1, p^n)`.
    pub fn standard(n: i64) -> Self {
        TreeVertex { level: n, offset: Rat::zero() }
    }

    pub fn root() -> Self {
        Self::standard(0)
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn offset(&self) -> &Rat {
        &self.offset
    }

    /// `+1` on the orbit of the central vertex under `SL2`, `-1` otherwise.
    pub fn parity(&self) -> i8 {
        if self.level.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }

    /// The representative `[[1, -b p^m], [0, p^m]]`, which maps the central
    /// vertex to this one.
    pub fn transporter(&self, p: Prime) -> GroupElement {
        let pm = p.pow(self.level);
        GroupElement {
            p,
            a: Rat::one(),
            b: -(&self.offset * &pm),
            c: Rat::zero(),
            d: pm,
        }
    }

    /// Whether the point `x` lies in the closed disc of this vertex.
    pub fn disc_contains(&self, p: Prime, x: &Rat) -> bool {
        match val_rat(&(x - &self.offset), p) {
            None => true,
            Some(v) => v >= -self.level,
        }
    }

    /// The enclosing disc one level up.
    pub fn parent(&self, p: Prime) -> TreeVertex {
        TreeVertex::new(p, self.level + 1, &self.offset)
    }

    /// The `p` subdiscs one level down, ordered by the digit they add.
    pub fn children(&self, p: Prime) -> Vec<TreeVertex> {
        let step = p.pow(-self.level);
        (0..p.get())
            .map(|c| {
                let off = &self.offset + &step * Rat::from_integer(c.into());
                TreeVertex::new(p, self.level - 1, &off)
            })
            .collect()
    }
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.level, self.offset)
    }
}

#[derive(Serialize)]
struct VertexJson {
    m: i64,
    b: String,
}

impl Serialize for TreeVertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VertexJson { m: self.level, b: self.offset.to_string() }.serialize(s)
    }
}

/// Reduces the lattice spanned by the columns of `[[a, b], [c, d]]` to the
/// form `[[p^e, t], [0, 1]]` and returns the corresponding vertex.
fn lattice_class(p: Prime, m: [Rat; 4]) -> Result<TreeVertex> {
    let [mut a, mut b, mut c, mut d] = m;
    if (&a * &d - &b * &c).is_zero() {
        return Err(Error::SingularMatrix);
    }
    let vc = val_rat(&c, p);
    let vd = val_rat(&d, p);
    let swap = match (vc, vd) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    };
    if swap {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut c, &mut d);
    }
    let ratio = &c / &d;
    let a1 = &a - &b * &ratio;
    let top = &a1 / &d;
    let off = &b / &d;
    let e = val_rat(&top, p).expect("nonsingular");
    Ok(TreeVertex::new(p, -e, &off))
}

/// `g` applied to the vertex `v`.
pub fn act_on_vertex(g: &GroupElement, v: &TreeVertex) -> Result<TreeVertex> {
    let p = g.p;
    if g.det().is_zero() {
        return Err(Error::SingularMatrix);
    }
    let [a, b, c, d] = g.flipped();
    let s = p.pow(-v.level);
    let t = v.offset.clone();
    // (J g J) * [[s, t], [0, 1]]
    let m = [&a * &s, &a * &t + &b, &c * &s, &c * &t + &d];
    lattice_class(p, m)
}

/// The `q + 1 = p + 1` neighbours: the parent first, then the children.
pub fn neighbors(v: &TreeVertex, p: Prime) -> Vec<TreeVertex> {
    let mut out = vec![v.parent(p)];
    out.extend(v.children(p));
    out
}

pub fn distance(p: Prime, u: &TreeVertex, v: &TreeVertex) -> u64 {
    let eu = -u.level;
    let ev = -v.level;
    let mut e = eu.min(ev);
    if let Some(w) = val_rat(&(&u.offset - &v.offset), p) {
        e = e.min(w);
    }
    ((eu - e) + (ev - e)) as u64
}

/// An edge, stored as (larger disc, smaller disc).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeEdge {
    outer: TreeVertex,
    inner: TreeVertex,
}

impl TreeEdge {
    pub fn new(p: Prime, u: TreeVertex, v: TreeVertex) -> Result<Self> {
        if distance(p, &u, &v) != 1 {
            return Err(Error::InvalidParameters(format!("{u} and {v} are not adjacent")));
        }
        Ok(if u.level > v.level { TreeEdge { outer: u, inner: v } } else { TreeEdge { outer: v, inner: u } })
    }

    /// The edge between the central vertex and `(-1, 0)`.
    pub fn standard() -> Self {
        TreeEdge { outer: TreeVertex::root(), inner: TreeVertex::standard(-1) }
    }

    pub fn outer(&self) -> &TreeVertex {
        &self.outer
    }

    pub fn inner(&self) -> &TreeVertex {
        &self.inner
    }

    pub fn endpoints(&self) -> [&TreeVertex; 2] {
        [&self.outer, &self.inner]
    }

    pub fn contains(&self, v: &TreeVertex) -> bool {
        &self.outer == v || &self.inner == v
    }

    pub fn other(&self, v: &TreeVertex) -> Option<&TreeVertex> {
        if &self.outer == v {
            Some(&self.inner)
        } else if &self.inner == v {
            Some(&self.outer)
        } else {
            None
        }
    }
}

impl fmt::Display for TreeEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.outer, self.inner)
    }
}

impl Serialize for TreeEdge {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [&self.outer, &self.inner].serialize(s)
    }
}

/// `g` applied to both endpoints of `e`.
pub fn act_on_edge(g: &GroupElement, e: &TreeEdge) -> Result<TreeEdge> {
    let u = act_on_vertex(g, &e.outer)?;
    let v = act_on_vertex(g, &e.inner)?;
    TreeEdge::new(g.p, u, v)
}

/// An element taking the standard edge `{(0,0), (-1,0)}` to `e`, with the
/// central vertex going to the outer endpoint. It is the affine map
/// `z -> b + p^(-m) z` with `m` the outer level and `b` the inner offset.
pub fn edge_transporter(p: Prime, e: &TreeEdge) -> GroupElement {
    let pm = p.pow(e.outer.level);
    GroupElement { p, a: Rat::one(), b: -(&e.inner.offset * &pm), c: Rat::zero(), d: pm }
}

/// A ball in the tree around `center`.
#[derive(Clone, Debug)]
pub struct TruncatedTree {
    p: Prime,
    center: TreeVertex,
    radius: u32,
    vertices: Vec<TreeVertex>,
    depth: Vec<u32>,
    index: BTreeMap<TreeVertex, usize>,
    edges: Vec<(usize, usize)>,
}

/// Largest radius accepted by the truncation builder.
pub const MAX_RADIUS: u32 = 8;

impl TruncatedTree {
    pub fn new(p: Prime, center: TreeVertex, radius: u32) -> Result<Self> {
        if radius > MAX_RADIUS {
            return Err(Error::InvalidParameters(format!("radius {radius} exceeds {MAX_RADIUS}")));
        }
        let mut vertices = vec![center.clone()];
        let mut depth = vec![0];
        let mut index = BTreeMap::new();
        index.insert(center.clone(), 0);
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            if depth[i] == radius {
                continue;
            }
            for w in neighbors(&vertices[i], p) {
                if index.contains_key(&w) {
                    continue;
                }
                let j = vertices.len();
                index.insert(w.clone(), j);
                vertices.push(w);
                depth.push(depth[i] + 1);
                edges.push((i, j));
                queue.push_back(j);
            }
        }
        Ok(TruncatedTree { p, center, radius, vertices, depth, index, edges })
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn center(&self) -> &TreeVertex {
        &self.center
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn vertices(&self) -> &[TreeVertex] {
        &self.vertices
    }

    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edges(&self) -> Vec<TreeEdge> {
        self.edges
            .iter()
            .map(|&(i, j)| {
                TreeEdge::new(self.p, self.vertices[i].clone(), self.vertices[j].clone())
                    .expect("BFS edges join neighbours")
            })
            .collect()
    }

    pub fn index_of(&self, v: &TreeVertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn depth(&self, i: usize) -> u32 {
        self.depth[i]
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.depth[i] < self.radius
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&i| self.is_interior(i))
    }

    /// Edge indices incident to vertex `i`.
    pub fn star(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == i || b == i)
            .map(|(k, _)| k)
            .collect()
    }

    /// Predicted vertex count `1 + (q+1)(q^r - 1)/(q - 1)`.
    pub fn expected_vertex_count(q: u64, radius: u32) -> u64 {
        1 + (q + 1) * (q.pow(radius) - 1) / (q - 1)
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
            parity: self.vertices.iter().map(|v| v.parity()).collect(),
        }
    }
}

/// Adjacency export.
#[derive(Clone, Debug, Serialize)]
pub struct TreeJson {
    pub vertices: Vec<TreeVertex>,
    pub edges: Vec<[usize; 2]>,
    pub parity: Vec<i8>,
}

/// Whether `x` is a p-adic integer.
pub fn is_integral(p: Prime, x: &Rat) -> bool {
    val_rat(x, p).is_none_or(|v| v >= 0)
}

/// Whether `g` lies in `GL2(Z_p)`.
pub fn in_gl2_integers(g: &GroupElement) -> bool {
    let p = g.p;
    [&g.a, &g.b, &g.c, &g.d].iter().all(|x| is_integral(p, x))
        && val_rat(&g.det(), p) == Some(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    fn two() -> Prime {
        Prime::new(2).unwrap()
    }

    #[test]
    fn gamma_one_moves_root_up() {
        let g = GroupElement::gamma(two(), 1);
        assert_eq!(act_on_vertex(&g, &TreeVertex::root()).unwrap(), TreeVertex::standard(1));
    }

    #[test]
    fn identity_fixes_vertices() {
        let v = TreeVertex::new(two(), -2, &rat(3, 1));
        assert_eq!(act_on_vertex(&GroupElement::identity(two()), &v).unwrap(), v);
    }

    #[test]
    fn shifted_child_of_root() {
        // gamma_{1,0} gamma_{-1}: z -> p z - 1, so the unit disc goes to -1 + 2 Z_2.
        let p = two();
        let g = GroupElement::gamma_shift(p, &rat(1, 1), 0).mul(&GroupElement::gamma(p, -1));
        let v = act_on_vertex(&g, &TreeVertex::root()).unwrap();
        assert_eq!(v, TreeVertex::new(p, -1, &rat(1, 1)));
        assert_eq!(v, TreeVertex::new(p, -1, &rat(-1, 1)));
    }

    #[test]
    fn root_neighbours_q2() {
        let p = two();
        let mut got = neighbors(&TreeVertex::root(), p);
        got.sort();
        let mut want = vec![
            TreeVertex::standard(1),
            TreeVertex::standard(-1),
            TreeVertex::new(p, -1, &rat(1, 1)),
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn listed_neighbours_match_group_elements() {
        // (n+1, 0) and gamma_{a,n} gamma_{n-1} . (0,0) for a in {0..p-1}.
        let p = Prime::new(3).unwrap();
        for n in -2..3 {
            let v = TreeVertex::standard(n);
            let mut want = vec![TreeVertex::standard(n + 1)];
            for a in 0..3 {
                let g = GroupElement::gamma_shift(p, &rat(a, 1), n).mul(&GroupElement::gamma(p, n - 1));
                want.push(act_on_vertex(&g, &TreeVertex::root()).unwrap());
            }
            want.sort();
            let mut got = neighbors(&v, p);
            got.sort();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn parity_examples() {
        assert_eq!(TreeVertex::root().parity(), 1);
        assert_eq!(TreeVertex::standard(1).parity(), -1);
    }

    #[test]
    fn transporter_examples() {
        let p = two();
        let std_edge = TreeEdge::standard();
        assert_eq!(edge_transporter(p, &std_edge), GroupElement::identity(p));
        let e = TreeEdge::new(p, TreeVertex::root(), TreeVertex::standard(1)).unwrap();
        let g = edge_transporter(p, &e);
        assert_eq!(g, GroupElement::gamma(p, 1));
        assert_eq!(act_on_edge(&g, &std_edge).unwrap(), e);
    }

    #[test]
    fn ball_sizes() {
        for p in [2u64, 3, 5] {
            let pr = Prime::new(p).unwrap();
            for r in 0..4 {
                let t = TruncatedTree::new(pr, TreeVertex::root(), r).unwrap();
                assert_eq!(t.vertices().len() as u64, TruncatedTree::expected_vertex_count(p, r));
                assert_eq!(t.edges().len(), t.vertices().len() - 1);
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        assert_eq!(GroupElement::from_ints(two(), 1, 2, 2, 4), Err(Error::SingularMatrix));
    }

    #[test]
    fn non_adjacent_edge_rejected() {
        let p = two();
        assert!(TreeEdge::new(p, TreeVertex::root(), TreeVertex::standard(2)).is_err());
    }
}
