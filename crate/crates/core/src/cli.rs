//! Command-line front end. Every command returns a [`Report`] holding the
//! resolved configuration, the closed-form prediction (when there is one),
//! the computed value and a pass flag.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::finite::FqField;
use crate::fqpoly::{gl2_elements, gl2_generators, FqMat2};
use crate::harmonic::{
    harmonic_kernel, is_harmonic, res0, res0_edge, res0_edge_with_stabiliser, res0_integrality, standard_edge_stabilisers,
    Boundary, KernelMode,
};
use crate::lattices::{
    edge_lattice, edge_local_spaces, equivariance_holds, expected_local_dims, vertex_lattice, vertex_local_spaces,
};
use crate::modp_geometry::{
    b_forms_check, component_degree, component_divisor, global_sections, global_sections_truncated,
    quotient_rep_and_stable_lines, symgeom_iso,
};
use crate::rational::parse_function;
use crate::sampling::random_rational;
use crate::scalars::{parse_rat, HalfInt, KHat, Prime};
use crate::theta::{complement_b_identity, complement_b_scalars, res_kills_theta, theta, theta_integrality};
use crate::tree::{neighbors, GroupElement, TreeEdge, TreeVertex, TruncatedTree, MAX_RADIUS};

/// Environment variable holding the worker count for sweeps.
pub const THREADS_ENV: &str = "DRINFELD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "drinfeld", version, about = "Exact computations on the Bruhat-Tits tree and its mod-p geometry")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Residue characteristic.
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// Size of the finite field for the mod-p commands.
    #[arg(long, global = true)]
    pub q: Option<u64>,
    /// Weight or symmetric-power degree.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k: Option<i64>,
    #[arg(long, global = true)]
    pub radius: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Recompute residues with a second transporter.
    #[arg(long, global = true)]
    pub audit: bool,
    /// File of `key = value` lines; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Vertex and edge counts of a ball.
    Tree {
        /// Center as `m,b`.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
    },
    /// Lattice at a vertex `m,b` or an edge `m,b;m,b`.
    Lattice {
        #[arg(long, allow_hyphen_values = true)]
        vertex: Option<String>,
        #[arg(long, conflicts_with = "vertex", allow_hyphen_values = true)]
        edge: Option<String>,
    },
    /// Local dimensions of D, E and the star-local harmonic space.
    LocalDims,
    /// Kernel of the harmonicity operator on a ball.
    Harmonic {
        #[arg(long, value_enum, default_value = "free")]
        mode: KernelMode,
        #[arg(long, value_enum, default_value = "free")]
        boundary: Boundary,
    },
    /// Residue cochain of a weight `k + 2` section.
    Residue {
        #[arg(long, allow_hyphen_values = true)]
        g: String,
    },
    /// The operator d^(k+1).
    Theta {
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        check_vertex: Option<String>,
        #[arg(long)]
        identity_b: Option<i64>,
    },
    /// Operator identity for D_a on monomials.
    IdentityB {
        #[arg(long, default_value_t = 6)]
        kmax: i64,
    },
    /// Computations over F_q.
    Modp {
        #[arg(long, default_value_t = 0)]
        i: i64,
        #[command(subcommand)]
        what: ModpCommand,
    },
    /// Random transport-invariance checks.
    Sweep {
        #[arg(long, default_value_t = 30)]
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum ModpCommand {
    Degrees,
    Sections,
    StableLines,
    SymgeomCheck,
    BForms,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub p: u64,
    pub q: u64,
    pub k: i64,
    pub radius: u32,
    pub seed: u64,
    pub audit: bool,
}

impl RunConfig {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(args: &ConfigArgs) -> Result<Self> {
        let mut c = RunConfig { p: 2, q: 0, k: 0, radius: 2, seed: 0, audit: args.audit };
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidParameters(format!("cannot read {}: {e}", path.display())))?;
            c.apply_file(&text)?;
        }
        if let Some(p) = args.p {
            c.p = p;
        }
        if let Some(q) = args.q {
            c.q = q;
        }
        if let Some(k) = args.k {
            c.k = k;
        }
        if let Some(r) = args.radius {
            c.radius = r;
        }
        if let Some(s) = args.seed {
            c.seed = s;
        }
        if c.q == 0 {
            c.q = c.p;
        }
        c.validate()?;
        Ok(c)
    }

    fn apply_file(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameters(format!("line {}: expected key = value", n + 1)))?;
            let value = value.trim().trim_matches('"');
            let bad = || Error::InvalidParameters(format!("line {}: bad value {value:?}", n + 1));
            match key.trim() {
                "p" => self.p = value.parse().map_err(|_| bad())?,
                "q" => self.q = value.parse().map_err(|_| bad())?,
                "k" => self.k = value.parse().map_err(|_| bad())?,
                "radius" => self.radius = value.parse().map_err(|_| bad())?,
                "seed" => self.seed = value.parse().map_err(|_| bad())?,
                "audit" => self.audit = value.parse().map_err(|_| bad())?,
                other => return Err(Error::InvalidParameters(format!("line {}: unknown key {other:?}", n + 1))),
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        Prime::new(self.p)?;
        FqField::new(self.q)?;
        if self.radius > MAX_RADIUS {
            return Err(Error::InvalidParameters(format!("radius {} exceeds {MAX_RADIUS}", self.radius)));
        }
        Ok(())
    }

    pub fn prime(&self) -> Prime {
        Prime::new(self.p).expect("validated")
    }

    fn k_nonneg(&self) -> Result<usize> {
        usize::try_from(self.k).map_err(|_| Error::InvalidParameters(format!("k = {} must be nonnegative", self.k)))
    }

    /// `q` must be the residue field of `Q_p`.
    fn q_is_p(&self) -> Result<()> {
        if self.q != self.p {
            return Err(Error::ResidueFieldMismatch { q: self.q, p: self.p });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub prediction: Value,
    pub computed: Value,
    pub pass: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable")
    }
}

/// Exit status for an error: 2 for bad input, 3 for internal failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameters(_)
        | Error::Parse(_)
        | Error::ResidueFieldMismatch { .. }
        | Error::ZeroFunction
        | Error::PoleInsideAnnulus { .. }
        | Error::DivisionByZero => 2,
        Error::InvariantViolation(_) | Error::SingularMatrix | Error::NegativeValuation | Error::NonInvertibleDeterminant => 3,
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serialisable")
}

/// Parses `m,b` with `b` rational.
pub fn parse_vertex(p: Prime, s: &str) -> Result<TreeVertex> {
    let (m, b) = s.split_once(',').ok_or_else(|| Error::Parse(format!("expected m,b: {s:?}")))?;
    let m: i64 = m.trim().parse().map_err(|_| Error::Parse(format!("bad level {m:?}")))?;
    Ok(TreeVertex::new(p, m, &parse_rat(b)?))
}

fn parse_edge(p: Prime, s: &str) -> Result<TreeEdge> {
    let (u, v) = s.split_once(';').ok_or_else(|| Error::Parse(format!("expected m,b;m,b: {s:?}")))?;
    TreeEdge::new(p, parse_vertex(p, u)?, parse_vertex(p, v)?)
}

pub fn run(command: &Command, config: &RunConfig) -> Result<Report> {
    let (name, prediction, computed, pass) = match command {
        Command::Tree { center } => run_tree(config, center.as_deref())?,
        Command::Lattice { vertex, edge } => run_lattice(config, vertex.as_deref(), edge.as_deref())?,
        Command::LocalDims => run_local_dims(config)?,
        Command::Harmonic { mode, boundary } => run_harmonic(config, *mode, *boundary)?,
        Command::Residue { g } => run_residue(config, g)?,
        Command::Theta { f, check_vertex, identity_b } => run_theta(config, f, check_vertex.as_deref(), *identity_b)?,
        Command::IdentityB { kmax } => run_identity_b(config, *kmax)?,
        Command::Modp { i, what } => run_modp(config, *what, *i)?,
        Command::Sweep { count } => run_sweep(config, *count)?,
    };
    Ok(Report { command: name.into(), config: config.clone(), prediction, computed, pass })
}

type Outcome = (&'static str, Value, Value, bool);

fn run_tree(c: &RunConfig, center: Option<&str>) -> Result<Outcome> {
    let p = c.prime();
    let center = center.map(|s| parse_vertex(p, s)).transpose()?.unwrap_or_else(TreeVertex::root);
    let tree = TruncatedTree::new(p, center, c.radius)?;
    let nv = tree.vertices().len() as u64;
    let ne = tree.edge_indices().len() as u64;
    let expected = TruncatedTree::expected_vertex_count(c.p, c.radius);
    let regular = tree.interior().all(|i| tree.star(i).len() as u64 == c.p + 1)
        && tree.vertices().iter().all(|v| neighbors(v, p).len() as u64 == c.p + 1);
    let pass = nv == expected && ne + 1 == nv && regular;
    Ok((
        "tree",
        json!({"vertices": expected, "edges": expected - 1, "degree": c.p + 1}),
        json!({"vertices": nv, "edges": ne, "regular": regular, "interior": tree.interior().count()}),
        pass,
    ))
}

fn run_lattice(c: &RunConfig, vertex: Option<&str>, edge: Option<&str>) -> Result<Outcome> {
    let p = c.prime();
    let k = c.k_nonneg()?;
    if let Some(e) = edge {
        let e = parse_edge(p, e)?;
        let l = edge_lattice(p, &e, k)?;
        // The inner lattice differs from the outer one by k, k-2, ..., -k halves;
        // the intersection only sees the positive part.
        let mut expected: Vec<HalfInt> = (0..=k as i64).map(|j| HalfInt::from_halves((k as i64 - 2 * j).max(0))).collect();
        expected.sort();
        let pass = l.relative_divisors == expected;
        return Ok(("lattice", json!({"relative_divisors": expected}), to_value(&l), pass));
    }
    let v = vertex.map(|s| parse_vertex(p, s)).transpose()?.unwrap_or_else(TreeVertex::root);
    let l = vertex_lattice(p, &v, k);
    let prediction: Option<Vec<HalfInt>> = (v.offset() == &crate::scalars::Rat::from_integer(0.into())
        && v.level().abs() <= 1)
        .then(|| (0..=k as i64).map(|j| HalfInt::from_halves(v.level() * (k as i64 - 2 * j))).collect());
    let pass = match &prediction {
        Some(d) => l.diagonal.as_ref() == Some(d),
        None => l.elementary_divisors.len() == k + 1,
    };
    Ok(("lattice", json!({ "diagonal": prediction }), to_value(&l), pass))
}

fn run_local_dims(c: &RunConfig) -> Result<Outcome> {
    c.q_is_p()?;
    let p = c.prime();
    let k = c.k_nonneg()?;
    let e = edge_local_spaces(p, &TreeEdge::standard(), k, c.q)?;
    let v = vertex_local_spaces(p, &TreeVertex::root(), k, c.q)?;
    let (d, ed, z) = expected_local_dims(k, c.q);
    let computed = json!({
        "dimD": e.d_outer.dim,
        "dimD_inner": e.d_inner.dim,
        "dimE": e.e_dim,
        "dimZhar": v.zhar_dim,
        "dimD_per_neighbour": v.d_dims,
    });
    let pass = e.d_outer.dim == d && e.d_inner.dim == d && e.e_dim == ed && v.zhar_dim == z && v.d_dims.iter().all(|&x| x == d);
    Ok(("local-dims", json!({"dimD": d, "dimE": ed, "dimZhar": z}), computed, pass))
}

fn run_harmonic(c: &RunConfig, mode: KernelMode, boundary: Boundary) -> Result<Outcome> {
    let p = c.prime();
    let k = c.k_nonneg()?;
    let tree = TruncatedTree::new(p, TreeVertex::root(), c.radius)?;
    let h = harmonic_kernel(&tree, k, mode, boundary)?;
    let ne = tree.edge_indices().len();
    let (prediction, pass) = match (mode, boundary) {
        (KernelMode::Free, Boundary::Free) => {
            let d = (k + 1) * (ne - tree.interior().count());
            (json!({ "dim": d }), h.dim == d && h.verified)
        }
        (KernelMode::Free, Boundary::Truncated) => (json!({ "dim": 0 }), h.dim == 0),
        (KernelMode::StarLocal, _) => {
            let z = expected_local_dims(k, c.p).2;
            (json!({ "local_dim": z }), h.local_dims.iter().all(|(_, d)| *d == z) && h.verified)
        }
        (KernelMode::ModPihat, _) => (Value::Null, h.verified),
    };
    Ok(("harmonic", prediction, to_value(&h), pass))
}

fn run_residue(c: &RunConfig, g: &str) -> Result<Outcome> {
    let p = c.prime();
    let k = c.k_nonneg()?;
    let g = parse_function(p, g)?;
    let tree = TruncatedTree::new(p, TreeVertex::root(), c.radius)?;
    let cochain = res0(&g, k, &tree)?;
    let harmonic = is_harmonic(&tree, &cochain, Boundary::Free);
    let integrality = res0_integrality(&g, k, &tree)?;
    let mut audit = Value::Null;
    let mut audit_ok = true;
    if c.audit {
        let stab = standard_edge_stabilisers(p);
        let mut checked = 0;
        for e in tree.edges() {
            let base = res0_edge(&g, k, &e)?;
            for delta in &stab {
                audit_ok &= res0_edge_with_stabiliser(&g, k, &e, delta)? == base;
                checked += 1;
            }
        }
        audit = json!({ "transporter_checks": checked, "agree": audit_ok });
    }
    let computed = json!({
        "cochain": cochain.to_json(&tree),
        "harmonic": harmonic,
        "edges_in_lattice": integrality.iter().filter(|e| e.in_lattice).count(),
        "edges": integrality.len(),
        "audit": audit,
    });
    Ok(("residue", json!({ "harmonic": true }), computed, harmonic && audit_ok))
}

fn run_theta(c: &RunConfig, f: &str, vertex: Option<&str>, identity_b: Option<i64>) -> Result<Outcome> {
    let p = c.prime();
    let k = c.k_nonneg()?;
    let f = parse_function(p, f)?;
    let image = theta(&f, k);
    let tree = TruncatedTree::new(p, TreeVertex::root(), c.radius)?;
    let kills = res_kills_theta(&f, k, &tree)?;
    let mut pass = kills;
    let certificate = match vertex {
        Some(v) => {
            let cert = theta_integrality(&f, k, &parse_vertex(p, v)?)?;
            pass &= cert.pass;
            to_value(&cert)
        }
        None => Value::Null,
    };
    let identity = match identity_b {
        Some(kmax) => {
            let (_, _, table, ok) = run_identity_b(c, kmax)?;
            pass &= ok;
            table
        }
        None => Value::Null,
    };
    let computed = json!({
        "theta": image.to_string(),
        "residue_of_theta_vanishes": kills,
        "integrality": certificate,
        "identity_b": identity,
    });
    Ok(("theta", json!({ "residue_of_theta_vanishes": true }), computed, pass))
}

fn run_identity_b(c: &RunConfig, kmax: i64) -> Result<Outcome> {
    if kmax < 2 {
        return Err(Error::InvalidParameters(format!("kmax = {kmax} must be at least 2")));
    }
    let p = c.prime();
    let points = [
        KHat::zero(p),
        KHat::one(p),
        KHat::from_rat(p, crate::scalars::Rat::new(1.into(), (c.p as i64).into())),
        KHat::new(p, crate::scalars::Rat::from_integer(2.into()), crate::scalars::Rat::from_integer(1.into())),
    ];
    let mut rows = Vec::new();
    let mut pass = true;
    for k in (2..=kmax).step_by(2) {
        for m in -8..=8 {
            let (lhs, rhs) = complement_b_scalars(k, m);
            pass &= lhs == rhs;
            rows.push(json!({ "k": k, "m": m, "lhs": lhs, "rhs": rhs, "equal": lhs == rhs }));
        }
        for a in &points {
            pass &= complement_b_identity(k, a, -8..=8)?;
        }
    }
    Ok(("identity-b", json!({ "all_equal": true }), json!({ "table": rows, "operator_checks": points.len() }), pass))
}

fn run_modp(c: &RunConfig, what: ModpCommand, i: i64) -> Result<Outcome> {
    let field = FqField::new(c.q)?;
    match what {
        ModpCommand::Degrees => {
            let mut rows = Vec::new();
            let mut pass = true;
            for k in -6..=9 {
                let d = component_degree(c.q, k);
                let q = c.q as i64;
                let formula = if k % 2 == 0 { (q - 1) * k / 2 } else { (q - 1) * (k - 1) / 2 - 1 };
                let h0 = global_sections(&field, &component_divisor(&field, k))?.dim as i64;
                let ok = d.degree == formula && h0 == (formula + 1).max(0);
                pass &= ok;
                rows.push(json!({ "k": k, "formula": formula, "degree": d.degree, "h0": h0, "pass": ok }));
            }
            Ok(("modp degrees", json!("(q-1)k/2 for even k, (q-1)(k-1)/2 - 1 for odd k"), json!(rows), pass))
        }
        ModpCommand::Sections => {
            let p = Prime::new(c.q).map_err(|_| Error::InvalidParameters(format!("sections need prime q, got {}", c.q)))?;
            let s = global_sections_truncated(p, c.k, c.radius)?;
            Ok(("modp sections", json!({ "dim": s.expected }), to_value(&s), s.dim == s.expected))
        }
        ModpCommand::StableLines => {
            let rep = quotient_rep_and_stable_lines(&field, c.k, i)?;
            let lines: Vec<String> = rep
                .stable_lines
                .iter()
                .map(|coords| {
                    let terms: Vec<String> = coords
                        .iter()
                        .zip(&rep.basis_monomials)
                        .filter(|(&x, _)| x != 0)
                        .map(|(&x, &j)| {
                            let mono = monomial_string(j, rep.t - j);
                            if x == 1 {
                                mono
                            } else {
                                format!("{}*{mono}", crate::fqpoly::elem_to_string(&field, field.elem(x)))
                            }
                        })
                        .collect();
                    terms.join(" + ")
                })
                .collect();
            let pass = rep.dim as u64 == c.q + 1 && rep.relations_stable;
            Ok((
                "modp stable-lines",
                json!({ "dim": c.q + 1 }),
                json!({ "rep": to_value(&rep), "lines": lines }),
                pass,
            ))
        }
        ModpCommand::SymgeomCheck => {
            let s = symgeom_iso(&field, c.k, i)?;
            let elements: Vec<FqMat2> = if c.q <= 3 { gl2_elements(&field) } else { gl2_generators(&field) };
            let mut equivariant = true;
            for g in &elements {
                equivariant &= s.intertwines(&field, g)?;
            }
            let rank = s.rank(&field)?;
            let computed = json!({
                "t": s.t,
                "shift": s.shift,
                "images": s.images.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                "rank": rank,
                "elements_checked": elements.len(),
                "equivariant": equivariant,
            });
            Ok(("modp symgeom-check", json!({ "rank": s.t + 1, "equivariant": true }), computed, equivariant && rank == s.t + 1))
        }
        ModpCommand::BForms => {
            let r = b_forms_check(c.q)?;
            Ok(("modp b-forms", json!({ "pass": true }), to_value(&r), r.pass))
        }
    }
}

fn monomial_string(x: usize, y: usize) -> String {
    let part = |v: &str, e: usize| match e {
        0 => None,
        1 => Some(v.to_string()),
        _ => Some(format!("{v}^{e}")),
    };
    let parts: Vec<String> = [part("X", x), part("Y", y)].into_iter().flatten().collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

#[derive(Serialize)]
struct SweepItem {
    g: [String; 4],
    f: String,
    v: TreeVertex,
    k: i64,
    invariant: bool,
}

fn sweep_item(p: Prime, seed: u64, index: usize, k: i64) -> Result<SweepItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(index as u64));
    let g = GroupElement::random(p, &mut rng, 2);
    let f = random_rational(p, &mut rng, 3);
    let v = TreeVertex::new(p, rng.gen_range(-3..4), &crate::scalars::Rat::from_integer(rng.gen_range(-5..6i64).into()));
    let invariant = equivariance_holds(&f, k, &v, &g)?;
    let entries = [&g.a, &g.b, &g.c, &g.d].map(|x| x.to_string());
    Ok(SweepItem { g: entries, f: f.to_string(), v, k, invariant })
}

/// Worker count from [`THREADS_ENV`], at least one.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.parse().ok()).filter(|&n| n > 0).unwrap_or(1)
}

fn run_sweep(c: &RunConfig, count: usize) -> Result<Outcome> {
    let p = c.prime();
    let threads = thread_count().min(count.max(1));
    let mut slots: Vec<Option<Result<SweepItem>>> = (0..count).map(|_| None).collect();
    std::thread::scope(|s| {
        for (t, chunk) in slots.chunks_mut(count.div_ceil(threads).max(1)).enumerate() {
            let start = t * count.div_ceil(threads).max(1);
            s.spawn(move || {
                for (j, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(sweep_item(p, c.seed, start + j, c.k));
                }
            });
        }
    });
    let items: Vec<SweepItem> = slots.into_iter().map(|x| x.expect("filled")).collect::<Result<_>>()?;
    let passed = items.iter().filter(|i| i.invariant).count();
    Ok((
        "sweep",
        json!({ "invariant": count }),
        json!({ "items": items.iter().map(to_value).collect::<Vec<_>>(), "invariant": passed }),
        passed == count,
    ))
}
