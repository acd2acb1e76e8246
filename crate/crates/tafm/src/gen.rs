//! Seeded random instances and fractional assignments.
//!
//! Everything here is a pure function of its seed, so generated files can
//! be regenerated byte for byte. Instances draw their free coordinates
//! from small alphabets under the variant's structural constraints, using
//! the same coordinate layout as the audit grid; edges are a fair coin per
//! cell.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::FractionalAssignment;
use crate::audit::{decode_grid_instance, grid_instance_space};
use crate::error::{Error, Result};
use crate::instance::{canonical_edge_order, EdgeSet, Instance, Variant};
use crate::rational::{parse_rational, rat, rat_int, Rational};

use num_traits::Zero;

/// Value, size, and capacity pools for generation.
#[derive(Debug, Clone)]
pub struct Alphabets {
    pub values: Vec<Rational>,
    pub sizes: Vec<Rational>,
    pub capacities: Vec<Rational>,
}

impl Default for Alphabets {
    fn default() -> Self {
        Alphabets {
            values: vec![rat_int(1), rat_int(2), rat_int(3)],
            sizes: vec![rat_int(1), rat_int(2)],
            capacities: vec![rat_int(1), rat_int(2), rat_int(3)],
        }
    }
}

/// Parses overrides like "values=1,2,3;sizes=1,2;capacities=1,2,3".
/// Unmentioned pools keep their defaults; an empty string keeps them all.
pub fn parse_alphabets(text: &str) -> Result<Alphabets> {
    let mut alphabets = Alphabets::default();
    for part in text.split(';').filter(|p| !p.trim().is_empty()) {
        let (key, list) = part
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("alphabet clause {part:?} wants key=v1,v2,...")))?;
        let pool: Vec<Rational> = list
            .split(',')
            .map(|tok| parse_rational(tok.trim()))
            .collect::<std::result::Result<_, _>>()?;
        if pool.is_empty() {
            return Err(Error::Format(format!("alphabet {key:?} is empty")));
        }
        match key.trim() {
            "values" => alphabets.values = pool,
            "sizes" => alphabets.sizes = pool,
            "capacities" | "caps" => alphabets.capacities = pool,
            other => {
                return Err(Error::Format(format!(
                    "unknown alphabet {other:?}; expected values, sizes, or capacities"
                )))
            }
        }
    }
    Ok(alphabets)
}

/// Draws one instance of the given shape plus an edge set.
pub fn generate_instance(
    variant: Variant,
    n: usize,
    m: usize,
    alphabets: &Alphabets,
    seed: u64,
) -> Result<(Instance, EdgeSet)> {
    if n == 0 || m == 0 {
        return Err(Error::BadParameter("n and m must be at least 1".into()));
    }
    if n * m > 64 {
        return Err(Error::BadParameter(format!(
            "edge masks want n*m <= 64, got {}",
            n * m
        )));
    }
    if alphabets.values.is_empty()
        || alphabets.sizes.is_empty()
        || alphabets.capacities.is_empty()
    {
        return Err(Error::BadParameter("alphabets must be nonempty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = grid_instance_space(
        variant,
        n,
        m,
        &alphabets.values,
        &alphabets.sizes,
        &alphabets.capacities,
    );
    let idx = rng.gen_range(0..space);
    let inst = decode_grid_instance(
        variant,
        n,
        m,
        &alphabets.values,
        &alphabets.sizes,
        &alphabets.capacities,
        idx,
    );
    let mask: u64 = if n * m == 64 {
        rng.gen()
    } else {
        rng.gen::<u64>() & ((1u64 << (n * m)) - 1)
    };
    Ok((inst, EdgeSet::from_mask(mask, n, m)))
}

const FRACTION_MENU: [(i64, i64); 7] = [(0, 1), (1, 4), (1, 3), (1, 2), (2, 3), (3, 4), (1, 1)];

/// A random feasible fractional assignment on the given edges: each edge in
/// canonical order takes a menu fraction of whatever its job and machine
/// still allow. Feasibility is by construction; entries stay small rationals.
pub fn random_fractional(
    inst: &Instance,
    edges: &EdgeSet,
    seed: u64,
) -> FractionalAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = FractionalAssignment::zero(inst.n, inst.m);
    let mut job_left = vec![rat_int(1); inst.n];
    let mut room: Vec<Rational> = inst.capacities.clone();
    for (i, j) in canonical_edge_order(inst.n, inst.m) {
        if !edges.contains(i, j) {
            continue;
        }
        let (p, q) = FRACTION_MENU[rng.gen_range(0..FRACTION_MENU.len())];
        let pick = rat(p, q);
        if pick.is_zero() {
            continue;
        }
        let cap_bound = &room[j] / inst.size(i, j);
        let limit = if job_left[i] <= cap_bound {
            job_left[i].clone()
        } else {
            cap_bound
        };
        let amount = pick * &limit;
        if amount.is_zero() {
            continue;
        }
        job_left[i] -= &amount;
        room[j] -= &amount * inst.size(i, j);
        x.set(i, j, amount);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::emit_instance;

    #[test]
    fn same_seed_same_bytes() {
        for variant in [Variant::Mbm, Variant::Mwbm, Variant::Mkp, Variant::Gap] {
            let a = generate_instance(variant, 3, 3, &Alphabets::default(), 42).unwrap();
            let b = generate_instance(variant, 3, 3, &Alphabets::default(), 42).unwrap();
            assert_eq!(emit_instance(&a.0, &a.1), emit_instance(&b.0, &b.1));
            let c = generate_instance(variant, 3, 3, &Alphabets::default(), 43).unwrap();
            assert!(a.0 != c.0 || a.1 != c.1, "seed 43 repeated seed 42");
        }
    }

    #[test]
    fn generated_instances_satisfy_their_variant() {
        for variant in Variant::all() {
            let m = if variant == Variant::Kp { 1 } else { 3 };
            for seed in 0..20 {
                let (inst, _) =
                    generate_instance(variant, 2, m, &Alphabets::default(), seed).unwrap();
                assert!(inst.check_structure(variant).is_ok(), "{variant:?} {seed}");
            }
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(generate_instance(Variant::Gap, 0, 2, &Alphabets::default(), 0).is_err());
        assert!(generate_instance(Variant::Gap, 9, 9, &Alphabets::default(), 0).is_err());
        let empty = Alphabets {
            values: vec![],
            ..Alphabets::default()
        };
        assert!(generate_instance(Variant::Gap, 2, 2, &empty, 0).is_err());
    }

    #[test]
    fn alphabet_parsing() {
        let a = parse_alphabets("values=1,5/2;caps=4").unwrap();
        assert_eq!(a.values, vec![rat_int(1), rat(5, 2)]);
        assert_eq!(a.sizes, Alphabets::default().sizes);
        assert_eq!(a.capacities, vec![rat_int(4)]);
        assert!(parse_alphabets("nonsense=1").is_err());
        assert!(parse_alphabets("values=").is_err());
        let d = parse_alphabets("").unwrap();
        assert_eq!(d.values, Alphabets::default().values);
    }

    #[test]
    fn random_fractional_is_always_feasible() {
        for seed in 0..40 {
            let (inst, edges) =
                generate_instance(Variant::Gap, 3, 3, &Alphabets::default(), seed).unwrap();
            let x = random_fractional(&inst, &edges, seed * 31 + 1);
            x.check_feasible(&inst, &edges).unwrap();
        }
    }

    #[test]
    fn random_fractional_touches_only_reported_edges() {
        let (inst, _) = generate_instance(Variant::Gap, 2, 2, &Alphabets::default(), 5).unwrap();
        let edges = EdgeSet::from_edges([(0, 1)]);
        let x = random_fractional(&inst, &edges, 9);
        for i in 0..2 {
            for j in 0..2 {
                if (i, j) != (0, 1) {
                    assert!(x.get(i, j).is_zero());
                }
            }
        }
    }
}
