//! Seeded random inputs for sweeps and property checks.

use rand::Rng;

use crate::rational::FactoredRational;
use crate::scalars::{KHat, Prime, Rat};

/// A random rational point `u p^e` with `|u| <= 2p`, `|e| <= spread`.
pub fn random_point<R: Rng + ?Sized>(p: Prime, rng: &mut R, spread: i64) -> KHat {
    let bound = 2 * p.get() as i64;
    let u = rng.gen_range(-bound..=bound);
    let e = rng.gen_range(-spread..=spread);
    KHat::from_rat(p, Rat::from_integer(u.into()) * p.pow(e))
}

/// Product of `terms` random linear factors with exponents in `-2..=2` and a
/// random nonzero leading coefficient.
pub fn random_rational<R: Rng + ?Sized>(p: Prime, rng: &mut R, terms: usize) -> FactoredRational {
    let factors: Vec<(KHat, i64)> = (0..terms).map(|_| (random_point(p, rng, 1), rng.gen_range(-2..=2))).collect();
    let mut lead = random_point(p, rng, 1);
    if lead.is_zero() {
        lead = KHat::one(p);
    }
    FactoredRational::from_factors(lead, factors)
}

/// Like [`random_rational`], with poles drawn from `poles` only.
pub fn random_rational_with_poles<R: Rng + ?Sized>(p: Prime, rng: &mut R, poles: &[KHat], terms: usize) -> FactoredRational {
    let factors: Vec<(KHat, i64)> =
        (0..terms).map(|_| (poles[rng.gen_range(0..poles.len())].clone(), -rng.gen_range(1..=3))).collect();
    let numerator = (0..rng.gen_range(0..3)).map(|_| (random_point(p, rng, 1), 1));
    FactoredRational::from_factors(KHat::one(p), factors.into_iter().chain(numerator))
}
