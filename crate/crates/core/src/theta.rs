//! The operator `d^(k+1)` from weight `-k` to weight `k + 2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::res0;
use crate::linalg::KMatrix;
use crate::rational::{FactoredRational, KPoly};
use crate::scalars::{HalfInt, KHat, Prime, Valuation};
use crate::tree::{TreeVertex, TruncatedTree};

pub fn theta(f: &FactoredRational, k: usize) -> FactoredRational {
    f.derivative(k as u32 + 1)
}

/// Vertex integrality of `theta`: `f` in the weight `-k` lattice at `v`
/// should land in the weight `k + 2` lattice.
#[derive(Clone, Debug, Serialize)]
pub struct ThetaCertificate {
    pub vertex: TreeVertex,
    pub k: usize,
    pub input_valuation: HalfInt,
    pub input_bound: HalfInt,
    pub output_valuation: Valuation,
    pub output_bound: HalfInt,
    pub pass: bool,
}

pub fn theta_integrality(f: &FactoredRational, k: usize, v: &TreeVertex) -> Result<ThetaCertificate> {
    let input_valuation = f.gauss_valuation(v)?;
    let out = theta(f, k);
    let output_valuation = if out.is_zero() { Valuation::Infinity } else { Valuation::Finite(out.gauss_valuation(v)?) };
    let m = v.level();
    let k = k as i64;
    let input_bound = HalfInt::from_halves(-k * m);
    let output_bound = HalfInt::from_halves((k + 2) * m);
    let pass = input_valuation < input_bound || output_valuation >= output_bound;
    Ok(ThetaCertificate { vertex: v.clone(), k: k as usize, input_valuation, input_bound, output_valuation, output_bound, pass })
}

/// Dimension of the kernel of `theta` on polynomials of degree `<= max_degree`.
pub fn polynomial_kernel_dim(p: Prime, k: usize, max_degree: usize) -> usize {
    let columns: Vec<Vec<KHat>> = (0..=max_degree)
        .map(|j| {
            let mut c = vec![KHat::zero(p); max_degree + 1];
            c[j] = KHat::one(p);
            let image = theta(&FactoredRational::from_poly(&KPoly::new(p, c)), k).expanded().0;
            (0..=max_degree).map(|i| image.coeff(i)).collect()
        })
        .collect();
    let m = KMatrix::from_columns(p, max_degree + 1, &columns);
    max_degree + 1 - m.rank()
}

/// Scalars by which both sides of
/// `(z-a)^((k+2)/2) d^(k+1) (z-a)^(k/2) = D_a prod_(j=1..k/2) (D_a^2 - j^2)`
/// act on `(z - a)^m`, with `D_a = (z - a) d/dz`.
pub fn complement_b_scalars(k: i64, m: i64) -> (i64, i64) {
    let lhs = (0..=k).map(|i| k / 2 + m - i).product();
    let rhs = m * (1..=k / 2).map(|j| m * m - j * j).product::<i64>();
    (lhs, rhs)
}

fn d_a(f: &FactoredRational, a: &KHat) -> FactoredRational {
    FactoredRational::linear_power(a, 1).mul(&f.derivative(1))
}

/// Checks the operator identity by applying both sides to `(z - a)^m` for
/// every `m` in the range, comparing against each other and against the
/// closed-form scalars.
pub fn complement_b_identity(k: i64, a: &KHat, m_range: std::ops::RangeInclusive<i64>) -> Result<bool> {
    if k <= 0 || k % 2 != 0 {
        return Err(Error::InvalidParameters(format!("k = {k} must be even and positive")));
    }
    let p = a.prime();
    for m in m_range {
        let base = FactoredRational::linear_power(a, m);
        let lhs = FactoredRational::linear_power(a, (k + 2) / 2)
            .mul(&FactoredRational::linear_power(a, k / 2).mul(&base).derivative(k as u32 + 1));
        let mut rhs = base.clone();
        for j in 1..=k / 2 {
            let twice = d_a(&d_a(&rhs, a), a);
            rhs = twice.sub(&rhs.scale(&KHat::from_int(p, j * j)));
        }
        let rhs = d_a(&rhs, a);
        let (ls, rs) = complement_b_scalars(k, m);
        if lhs != rhs || lhs != base.scale(&KHat::from_int(p, ls)) || ls != rs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `res0(theta(f)) = 0` on the truncation.
pub fn res_kills_theta(f: &FactoredRational, k: usize, tree: &TruncatedTree) -> Result<bool> {
    Ok(res0(&theta(f, k), k, tree)?.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_function;
    use crate::sampling::{random_rational, random_rational_with_poles};
    use crate::scalars::{rat, Rat};
    use crate::symrep::{automorphic_act, Character};
    use crate::tree::GroupElement;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pr(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn theta_examples() {
        let p = pr(3);
        assert!(theta(&parse_function(p, "1 + 2*z + z^2").unwrap(), 2).is_zero());
        for k in 0..5usize {
            let f = parse_function(p, &format!("z^{}", k + 1)).unwrap();
            let fact: i64 = (1..=k as i64 + 1).product();
            assert_eq!(theta(&f, k), FactoredRational::constant(KHat::from_int(p, fact)));
        }
        let f = parse_function(p, "1/(z-1)").unwrap();
        assert_eq!(theta(&f, 0), parse_function(p, "-(z-1)^-2").unwrap());
    }

    #[test]
    fn integrality_examples() {
        let p = pr(2);
        let c = theta_integrality(&parse_function(p, "1/z").unwrap(), 0, &TreeVertex::standard(1)).unwrap();
        assert_eq!(c.input_valuation, HalfInt::from_int(1));
        assert_eq!(c.output_valuation, Valuation::int(2));
        assert_eq!(c.output_bound, HalfInt::from_int(1));
        assert!(c.pass);
        let c = theta_integrality(&parse_function(p, "z^2").unwrap(), 2, &TreeVertex::root()).unwrap();
        assert_eq!(c.input_valuation, HalfInt::from_int(0));
        assert_eq!(c.output_valuation, Valuation::Infinity);
        assert!(c.pass);
        assert_eq!(theta_integrality(&FactoredRational::zero(p), 1, &TreeVertex::root()).unwrap_err(), Error::ZeroFunction);
    }

    #[test]
    fn integrality_on_lattice_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for p in [pr(2), pr(3)] {
            for _ in 0..30 {
                let k = rng.gen_range(0..5usize);
                let v = TreeVertex::new(p, rng.gen_range(-3..4), &rat(rng.gen_range(-4..5), 1));
                let f = random_rational(p, &mut rng, 3);
                // Rescale into the lattice: valuation exactly at the bound.
                let shift = HalfInt::from_halves(-(k as i64) * v.level()) - f.gauss_valuation(&v).unwrap();
                let f = f.scale(&KHat::pihat_pow(p, shift.halves()));
                let c = theta_integrality(&f, k, &v).unwrap();
                assert_eq!(c.input_valuation, c.input_bound);
                assert!(c.pass, "{f} at {v}: {c:?}");
            }
        }
    }

    #[test]
    fn kernel_on_polynomials() {
        for k in 0..6 {
            assert_eq!(polynomial_kernel_dim(pr(5), k, k + 5), k + 1);
            // the kernel is exactly the low-degree part
            assert_eq!(polynomial_kernel_dim(pr(5), k, k), k + 1);
        }
    }

    #[test]
    fn complement_b() {
        assert_eq!(complement_b_scalars(2, 3), (24, 24));
        assert_eq!(complement_b_scalars(2, 1), (0, 0));
        let p = pr(3);
        let points = [KHat::zero(p), KHat::one(p), KHat::from_rat(p, rat(1, 3)), KHat::new(p, rat(2, 1), rat(1, 1))];
        for k in [2, 4, 6] {
            for m in -8..=8 {
                let (l, r) = complement_b_scalars(k, m);
                assert_eq!(l, r, "k={k} m={m}");
            }
            for a in &points {
                assert!(complement_b_identity(k, a, -8..=8).unwrap());
            }
        }
        assert!(complement_b_identity(3, &KHat::one(p), 0..=1).is_err());
    }

    #[test]
    fn residues_vanish_on_image() {
        let p = pr(2);
        let tree = TruncatedTree::new(p, TreeVertex::root(), 2).unwrap();
        assert!(res_kills_theta(&parse_function(p, "1/(z-1)").unwrap(), 0, &tree).unwrap());
        assert!(res_kills_theta(&parse_function(p, "3 + z^4").unwrap(), 2, &tree).unwrap());
        let poles: Vec<KHat> =
            [rat(0, 1), rat(1, 1), rat(2, 1), rat(1, 2), rat(3, 1)].into_iter().map(|x| KHat::from_rat(p, x)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let k = rng.gen_range(0..3usize);
            let f = random_rational_with_poles(p, &mut rng, &poles, 2);
            assert!(res_kills_theta(&f, k, &tree).unwrap(), "{f}");
        }
        // The operator is needed: a generic weight-2 section has residues.
        assert!(!res0(&parse_function(p, "1/(z-1)").unwrap(), 0, &tree).unwrap().is_zero());
    }

    #[test]
    fn equivariance_with_epsilon_twist() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let p = pr(3);
        for _ in 0..10 {
            let g = GroupElement::random(p, &mut rng, 2);
            let k = rng.gen_range(0..4usize);
            let f = random_rational(p, &mut rng, 3);
            let lhs = theta(&automorphic_act(&g, &f, -(k as i64)), k);
            let twist = Character::epsilon(k as i64 + 1).eval(&g);
            let rhs = automorphic_act(&g, &theta(&f, k), k as i64 + 2).scale(&twist);
            assert_eq!(lhs, rhs, "g={g:?} k={k}");
        }
        // Without the twist it fails for some element with det of odd valuation.
        let g = GroupElement::new(p, Rat::from_integer((-1).into()), rat(0, 1), rat(0, 1), rat(3, 1)).unwrap();
        let f = parse_function(p, "z^2/(z-1)").unwrap();
        assert_eq!(Character::epsilon(3).eval(&g), KHat::from_int(p, -1));
        assert_ne!(theta(&automorphic_act(&g, &f, -2), 2), automorphic_act(&g, &theta(&f, 2), 4));
    }
}
