//! Named model variations and seeded random weight-zero representations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::orbits::{GammaTerm, NilpotentOrbit, Truncation, VariationSample};
use crate::scalar::{Field, GaussRat};
use crate::sl2::Sl2Rep;

pub const RANDOM_RANK_LIMIT: usize = 12;

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub rep: Sl2Rep,
}

pub fn elliptic() -> Sl2Rep {
    Sl2Rep::elliptic()
}

pub fn sym(n: usize) -> Sl2Rep {
    Sl2Rep::elliptic()
        .sym_power(n)
        .expect("symmetric power of the elliptic representation")
}

/// `E ⊗ E^∨`, the endomorphisms of the elliptic representation.
pub fn end_elliptic() -> Sl2Rep {
    let e = Sl2Rep::elliptic();
    e.tensor(&e.dual().expect("dual")).expect("endomorphisms")
}

/// Two-variable `E ⊠ E`.
pub fn tensor_ee() -> Sl2Rep {
    let e = Sl2Rep::elliptic();
    e.external_tensor(&e).expect("external tensor")
}

/// Two-variable `E ⊠ Sym² E`.
pub fn tensor_e_sym2() -> Sl2Rep {
    Sl2Rep::elliptic().external_tensor(&sym(2)).expect("external tensor")
}

/// The named suite.
pub fn standard_suite() -> Vec<Fixture> {
    let twisted = |r: Sl2Rep| {
        let k = r.weight() / 2;
        r.tate_twist(k).expect("Tate twist")
    };
    vec![
        Fixture {
            name: "trivial",
            rep: Sl2Rep::trivial(1),
        },
        Fixture {
            name: "elliptic",
            rep: elliptic(),
        },
        Fixture {
            name: "sym2",
            rep: sym(2),
        },
        Fixture {
            name: "sym3",
            rep: sym(3),
        },
        Fixture {
            name: "sym4",
            rep: sym(4),
        },
        Fixture {
            name: "end_elliptic",
            rep: end_elliptic(),
        },
        Fixture {
            name: "sym2_twisted",
            rep: twisted(sym(2)),
        },
        Fixture {
            name: "tensor_ee",
            rep: tensor_ee(),
        },
        Fixture {
            name: "tensor_ee_twisted",
            rep: twisted(tensor_ee()),
        },
        Fixture {
            name: "tensor_e_sym2",
            rep: tensor_e_sym2(),
        },
    ]
}

pub fn by_name(name: &str) -> Option<Sl2Rep> {
    standard_suite().into_iter().find(|f| f.name == name).map(|f| f.rep)
}

/// Weight-zero members of the suite, on which classes can be enumerated.
pub fn weight_zero_suite() -> Vec<Fixture> {
    standard_suite().into_iter().filter(|f| f.rep.weight() == 0).collect()
}

/// Elliptic orbit perturbed by `Γ(s) = sN`, so that `Φ(z) = ⟨(1, z + s)⟩`.
pub fn rank2_family() -> VariationSample {
    let orbit = elliptic().to_orbit().expect("elliptic orbit");
    let n = orbit.generators()[0].map(GaussRat::from_rational);
    VariationSample::new(
        orbit,
        vec![GammaTerm {
            degree: vec![1],
            coeff: n,
        }],
        Truncation::Exact,
    )
    .expect("rank-two family")
}

/// `(E ⊠ E)(1)` perturbed by `Γ(s) = s_1 N_1`, with the class
/// `e1⊗e2 − e2⊗e1` whose orbit locus is the diagonal `z_1 = z_2`.
pub fn projection_family() -> (VariationSample, Vec<i64>) {
    let rep = tensor_ee().tate_twist(1).expect("Tate twist");
    let orbit = rep.to_orbit().expect("product orbit");
    let n1 = orbit.generators()[0].map(GaussRat::from_rational);
    let sample = VariationSample::new(
        orbit,
        vec![GammaTerm {
            degree: vec![1, 0],
            coeff: n1,
        }],
        Truncation::Exact,
    )
    .expect("product family");
    (sample, vec![0, 1, -1, 0])
}

/// A random weight-zero representation: an external tensor of symmetric
/// powers of the elliptic representation, possibly dualized, twisted by
/// powers of the elliptic Hodge structure at `i` and Tate-twisted to weight
/// zero. Ranks stay at most [`RANDOM_RANK_LIMIT`].
pub fn random_weight_zero(seed: u64) -> Result<Sl2Rep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let d = rng.gen_range(1..=2);
        let powers: Vec<usize> = (0..d).map(|_| rng.gen_range(0..=3)).collect();
        let dualize = rng.gen_bool(1.0 / 3.0);
        let mut twists = rng.gen_range(0..=1);
        let weight: usize = powers.iter().sum::<usize>() + twists;
        twists += weight % 2;
        let rank = powers.iter().map(|n| n + 1).product::<usize>() << twists;
        if rank > RANDOM_RANK_LIMIT {
            continue;
        }
        let mut rep = Sl2Rep::trivial(0);
        for &n in &powers {
            rep = rep.external_tensor(&sym(n))?;
        }
        if dualize {
            rep = rep.dual()?;
        }
        let point = Sl2Rep::elliptic_point(d);
        for _ in 0..twists {
            rep = rep.tensor(&point)?;
        }
        let k = rep.weight() / 2;
        return rep.tate_twist(k);
    }
}

/// Orbits of the suite, by name.
pub fn orbit_suite() -> Result<Vec<(&'static str, NilpotentOrbit)>> {
    standard_suite()
        .into_iter()
        .map(|f| Ok((f.name, f.rep.to_orbit()?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_builds_valid_orbits() {
        let orbits = orbit_suite().unwrap();
        assert_eq!(orbits.len(), 10);
        let ranks: Vec<usize> = orbits.iter().map(|(_, o)| o.rank()).collect();
        assert_eq!(ranks, vec![1, 2, 3, 4, 5, 4, 3, 4, 4, 6]);
    }

    #[test]
    fn random_reps_have_weight_zero() {
        for seed in 0..20 {
            let r = random_weight_zero(seed).unwrap();
            assert_eq!(r.weight(), 0);
            assert!(r.rank() <= RANDOM_RANK_LIMIT);
            r.check().unwrap();
        }
        assert_eq!(
            random_weight_zero(7).unwrap().rank(),
            random_weight_zero(7).unwrap().rank()
        );
    }

    #[test]
    fn families_build() {
        let (s, v) = projection_family();
        assert_eq!(s.orbit.rank(), v.len());
        assert_eq!(rank2_family().orbit.rank(), 2);
    }
}
