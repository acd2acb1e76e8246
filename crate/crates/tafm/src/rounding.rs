//! Rounding, scaled decomposition, and mechanism composition.
//!
//! The rounder turns any nonnegative objective into an integral assignment
//! worth at least half the fractional optimum. That factor is exactly what
//! lets a feasible fractional point, scaled by one half, be written as a
//! convex combination of integral assignments; handing out that combination
//! as a lottery halves every job's expected utility and so preserves
//! truthfulness. The final mechanism runs a value-threshold ladder on top of
//! the composed pipeline to handle fully general instances.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::{Assignment, FractionalAssignment, OutcomeLottery};
use crate::error::{Error, Result};
use crate::instance::{EdgeSet, Instance, Variant};
use crate::lp::{build_gap_lp, lex_refine, solve_lp, LexSense, LinearProgram};
use crate::rational::{rat, rat_int, Rational};

/// Worst-case welfare factor of `gap_mechanism`, before the ladder-depth
/// divisor: expected welfare is at least OPT / (FACTOR * (depth + 1)).
pub const GAP_WELFARE_FACTOR: u32 = 16;

/// Objective coefficients keyed by edge; absent edges count as zero.
pub type EdgeValues = BTreeMap<(usize, usize), Rational>;

const MASTER_ITERATION_CAP: usize = 500;

/// Threshold-ladder depth: the smallest k with 2^k at least n squared, so
/// values below the lowest rung cost at most a 1/n fraction of the optimum.
pub fn default_ladder_depth(n: usize) -> u32 {
    if n <= 1 {
        return 1;
    }
    let target = (n as u128) * (n as u128);
    let mut k = 0u32;
    while (1u128 << k) < target {
        k += 1;
    }
    k
}

fn edge_value(c: &EdgeValues, i: usize, j: usize) -> Rational {
    c.get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
}

/// Integral assignment worth at least half of the fractional optimum for
/// the given objective. Negative-valued edges are discarded up front; the
/// polytope only shrinks downward, so the optimum is unaffected.
///
/// The construction solves the fractional program, splits each machine's
/// fractional load into unit-fraction slots in decreasing size order, takes
/// a maximum-value job-to-slot matching, and then keeps, per machine, the
/// better of the first slot alone or all later slots together. Both sides
/// are feasible and their values add up to the matching's, which is at
/// least the fractional optimum.
pub fn st_round(inst: &Instance, edges: &EdgeSet, c: &EdgeValues) -> Assignment {
    let kept: EdgeSet = inst
        .effective_edges(edges)
        .iter()
        .filter(|&(i, j)| !edge_value(c, i, j).is_negative())
        .collect();
    if kept.is_empty() {
        return Assignment::empty(inst.n);
    }
    let gap = build_gap_lp(inst, &kept);
    let coeff: Vec<Vec<Rational>> = (0..inst.n)
        .map(|i| (0..inst.m).map(|j| edge_value(c, i, j)).collect())
        .collect();
    let lp = gap.with_objective(&coeff);
    let order: Vec<usize> = (0..gap.vars.len()).collect();
    let frac = lex_refine(&lp, &order, LexSense::Minimal)
        .expect("assignment program is feasible and bounded");
    let x = gap.point_to_matrix(&frac.point);

    // Slot layout: per machine, pieces of job fraction in decreasing size
    // order, cut into slots holding total fraction one. A piece can straddle
    // a cut, putting its job in two adjacent slots.
    let mut slots: Vec<(usize, usize, Vec<usize>)> = Vec::new(); // (machine, rank, jobs)
    for j in 0..inst.m {
        let mut pieces: Vec<(usize, Rational)> = (0..inst.n)
            .filter(|&i| x[i][j].is_positive())
            .map(|i| (i, x[i][j].clone()))
            .collect();
        pieces.sort_by(|a, b| {
            inst.size(b.0, j)
                .cmp(inst.size(a.0, j))
                .then(a.0.cmp(&b.0))
        });
        let mut rank = 0usize;
        let mut room = Rational::one();
        let mut members: Vec<usize> = Vec::new();
        for (i, mut frac_left) in pieces {
            while frac_left.is_positive() {
                let take = frac_left.clone().min(room.clone());
                if take.is_positive() && !members.contains(&i) {
                    members.push(i);
                }
                frac_left -= &take;
                room -= &take;
                if room.is_zero() {
                    slots.push((j, rank, std::mem::take(&mut members)));
                    rank += 1;
                    room = Rational::one();
                }
            }
        }
        if !members.is_empty() {
            slots.push((j, rank, members));
        }
    }

    // Maximum-value matching of jobs to slots. The fractional point is a
    // fractional matching of the same graph, so the integral optimum is
    // worth at least the fractional program's objective.
    let mut vars: Vec<(usize, usize)> = Vec::new(); // (slot index, job)
    for (s, (_, _, members)) in slots.iter().enumerate() {
        for &i in members {
            vars.push((s, i));
        }
    }
    let mut matched: Vec<Option<usize>> = vec![None; slots.len()]; // job per slot
    if !vars.is_empty() {
        let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
        for i in 0..inst.n {
            let coeffs: Vec<Rational> = vars
                .iter()
                .map(|&(_, vi)| if vi == i { Rational::one() } else { Rational::zero() })
                .collect();
            rows.push((coeffs, Rational::one()));
        }
        for s in 0..slots.len() {
            let coeffs: Vec<Rational> = vars
                .iter()
                .map(|&(vs, _)| if vs == s { Rational::one() } else { Rational::zero() })
                .collect();
            rows.push((coeffs, Rational::one()));
        }
        let objective: Vec<Rational> = vars
            .iter()
            .map(|&(s, i)| edge_value(c, i, slots[s].0))
            .collect();
        let match_lp = LinearProgram {
            objective,
            constraints: rows,
            upper: vec![Rational::one(); vars.len()],
        };
        let var_order: Vec<usize> = (0..vars.len()).collect();
        let sol = lex_refine(&match_lp, &var_order, LexSense::Minimal)
            .expect("matching program is feasible and bounded");
        for (k, v) in sol.point.iter().enumerate() {
            if v.is_one() {
                let (s, i) = vars[k];
                matched[s] = Some(i);
            }
        }
    }

    // Per machine, the first slot's job alone is feasible, and the later
    // slots together are feasible; keep whichever side is worth more.
    let mut out = Assignment::empty(inst.n);
    for j in 0..inst.m {
        let first: Option<usize> = slots
            .iter()
            .enumerate()
            .find(|(_, &(mj, rank, _))| mj == j && rank == 0)
            .and_then(|(s, _)| matched[s]);
        let rest: Vec<usize> = slots
            .iter()
            .enumerate()
            .filter(|(_, &(mj, rank, _))| mj == j && rank > 0)
            .filter_map(|(s, _)| matched[s])
            .collect();
        let first_value = first
            .map(|i| edge_value(c, i, j))
            .unwrap_or_else(Rational::zero);
        let rest_value: Rational = rest.iter().map(|&i| edge_value(c, i, j)).sum();
        if first_value >= rest_value {
            if let Some(i) = first {
                out.set(i, j);
            }
        } else {
            for i in rest {
                out.set(i, j);
            }
        }
    }
    out
}

/// Half-scaled convex decomposition: the target is x/2, and the support is
/// a genuine probability distribution over integral feasible assignments
/// averaging to the target exactly.
#[derive(Debug, Clone)]
pub struct ScaledDecomposition {
    pub target: FractionalAssignment,
    pub support: Vec<(Assignment, Rational)>,
}

fn assignment_key(a: &Assignment, n: usize) -> Vec<Option<usize>> {
    (0..n).map(|i| a.get(i)).collect()
}

fn verify_decomposition(
    dec: &ScaledDecomposition,
    inst: &Instance,
    usable: &EdgeSet,
) -> Result<()> {
    let mut total = Rational::zero();
    let mut coverage = FractionalAssignment::zero(dec.target.n, dec.target.m);
    for (z, lambda) in &dec.support {
        if !lambda.is_positive() {
            return Err(Error::infeasible("decomposition", "nonpositive weight"));
        }
        z.check_feasible(inst, usable)?;
        total += lambda;
        for (i, j) in z.pairs() {
            let v = coverage.get(i, j) + lambda;
            coverage.set(i, j, v);
        }
    }
    if !total.is_one() {
        return Err(Error::infeasible("decomposition", "weights do not sum to one"));
    }
    for i in 0..dec.target.n {
        for j in 0..dec.target.m {
            if coverage.get(i, j) != dec.target.get(i, j) {
                return Err(Error::infeasible(
                    "decomposition",
                    format!("coordinate ({i}, {j}) does not average to the target"),
                ));
            }
        }
    }
    Ok(())
}

/// Writes x/2 as a convex combination of integral feasible assignments.
///
/// Column generation on the covering program min sum(lambda) subject to
/// sum(lambda_l z^l) >= x/2: seeded with one singleton per support edge,
/// priced by handing the dual to `st_round`. The rounder's half guarantee
/// keeps producing violated columns until the optimum reaches one, which
/// proves x/2 lies in the convex hull. Leftover probability goes to the
/// empty assignment and any overshoot is split off job by job.
pub fn decompose_scaled(
    x: &FractionalAssignment,
    inst: &Instance,
    edges: &EdgeSet,
) -> Result<ScaledDecomposition> {
    let usable = inst.effective_edges(edges);
    x.check_feasible(inst, &usable)?;
    let target = x.scale(&rat(1, 2));
    let support_edges: Vec<(usize, usize)> = usable
        .iter()
        .filter(|&(i, j)| target.get(i, j).is_positive())
        .collect();

    let mut entries: Vec<(Assignment, Rational)> = Vec::new();
    if support_edges.is_empty() {
        entries.push((Assignment::empty(inst.n), Rational::one()));
        let dec = ScaledDecomposition { target, support: entries };
        verify_decomposition(&dec, inst, &usable)?;
        return Ok(dec);
    }

    let mut pool: Vec<Assignment> = support_edges
        .iter()
        .map(|&(i, j)| {
            let mut a = Assignment::empty(inst.n);
            a.set(i, j);
            a
        })
        .collect();

    let bound = rat_int(inst.n as i64 + 1);
    let weights: Vec<Rational>;
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        if iterations > MASTER_ITERATION_CAP {
            return Err(Error::IterationCap("covering decomposition".to_string()));
        }
        let rows: Vec<(Vec<Rational>, Rational)> = support_edges
            .iter()
            .map(|&(i, j)| {
                let coeffs: Vec<Rational> = pool
                    .iter()
                    .map(|z| {
                        if z.get(i) == Some(j) {
                            -Rational::one()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect();
                (coeffs, -target.get(i, j).clone())
            })
            .collect();
        let rmp = LinearProgram {
            objective: vec![-Rational::one(); pool.len()],
            constraints: rows,
            upper: vec![bound.clone(); pool.len()],
        };
        let sol = solve_lp(&rmp)?;
        let mass = -sol.objective_value.clone();
        if mass <= Rational::one() {
            weights = sol.point;
            break;
        }
        let prices: EdgeValues = support_edges
            .iter()
            .enumerate()
            .map(|(r, &e)| (e, sol.dual[r].clone()))
            .collect();
        let candidate = st_round(inst, edges, &prices);
        let score: Rational = support_edges
            .iter()
            .map(|&(i, j)| {
                if candidate.get(i) == Some(j) {
                    edge_value(&prices, i, j)
                } else {
                    Rational::zero()
                }
            })
            .sum();
        if score <= Rational::one() {
            return Err(Error::IterationCap(
                "covering decomposition stalled".to_string(),
            ));
        }
        pool.push(candidate);
    }

    let mut total = Rational::zero();
    for (z, lambda) in pool.into_iter().zip(weights) {
        if lambda.is_positive() {
            total += &lambda;
            entries.push((z, lambda));
        }
    }
    let slack = Rational::one() - total;
    if slack.is_positive() {
        entries.push((Assignment::empty(inst.n), slack));
    }

    // Exact-equality reduction. Clearing a job touches exactly one
    // coordinate, so each coordinate's overshoot is absorbed independently.
    for i in 0..inst.n {
        for j in 0..inst.m {
            let covered: Rational = entries
                .iter()
                .filter(|(z, _)| z.get(i) == Some(j))
                .map(|(_, l)| l.clone())
                .sum();
            let mut excess = covered - target.get(i, j);
            if excess.is_negative() {
                return Err(Error::infeasible(
                    "decomposition",
                    "covering fell short of the target",
                ));
            }
            while excess.is_positive() {
                let k = entries
                    .iter()
                    .position(|(z, l)| z.get(i) == Some(j) && l.is_positive())
                    .expect("positive excess implies a covering entry");
                let take = entries[k].1.clone().min(excess.clone());
                entries[k].1 -= &take;
                let mut reduced = entries[k].0.clone();
                reduced.clear(i);
                entries.push((reduced, take.clone()));
                excess -= &take;
            }
        }
    }

    let mut merged: BTreeMap<Vec<Option<usize>>, (Assignment, Rational)> = BTreeMap::new();
    for (z, lambda) in entries {
        if !lambda.is_positive() {
            continue;
        }
        let key = assignment_key(&z, inst.n);
        merged
            .entry(key)
            .and_modify(|(_, l)| *l += &lambda)
            .or_insert((z, lambda));
    }
    let dec = ScaledDecomposition {
        target,
        support: merged.into_values().collect(),
    };
    verify_decomposition(&dec, inst, &usable)?;
    Ok(dec)
}

/// Runs a fractional mechanism and hands out its half-scaled decomposition
/// as a lottery. Every job's expected utility is exactly half its
/// fractional utility, so whatever reporting incentives the fractional
/// mechanism had, the lottery has too.
pub fn compose_mechanism<F>(frac: F, inst: &Instance, edges: &EdgeSet) -> Result<OutcomeLottery>
where
    F: Fn(&Instance, &EdgeSet) -> FractionalAssignment,
{
    let x = frac(inst, edges);
    let dec = decompose_scaled(&x, inst, edges)?;
    OutcomeLottery::from_weighted(dec.support)
}

/// Draws one assignment from the lottery, deterministically in the seed.
pub fn sample_lottery(lottery: &OutcomeLottery, seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ticket: u64 = rng.gen();
    let r = Rational::new(
        BigInt::from(ticket),
        BigInt::from(2u8).pow(64),
    );
    let mut cumulative = Rational::zero();
    for (a, p) in lottery.support() {
        cumulative += p;
        if r < cumulative {
            return a.clone();
        }
    }
    lottery
        .support()
        .last()
        .map(|(a, _)| a.clone())
        .expect("lottery support is nonempty")
}

/// General-instance mechanism: a fair coin either assigns the job holding
/// the maximum-value usable edge on that edge, or removes it, draws a value
/// threshold from a geometric ladder under that maximum, flattens all
/// values at or above the threshold down to it, runs the composed
/// value-invariant pipeline, and finally cancels each realized assignment
/// with the probability that makes its expected counted value exactly the
/// threshold. The returned lottery enumerates every branch with its exact
/// probability.
pub fn gap_mechanism(inst: &Instance, edges: &EdgeSet) -> Result<OutcomeLottery> {
    let usable = inst.effective_edges(edges);
    if usable.is_empty() {
        return Ok(OutcomeLottery::point_mass(Assignment::empty(inst.n)));
    }
    let (mut i_star, mut j_star) = (0usize, 0usize);
    let mut v_max: Option<Rational> = None;
    for (i, j) in usable.iter() {
        if v_max.as_ref().is_none_or(|best| inst.value(i, j) > best) {
            v_max = Some(inst.value(i, j).clone());
            i_star = i;
            j_star = j;
        }
    }
    let v_max = v_max.expect("usable edge set is nonempty");

    let mut outcomes: Vec<(Assignment, Rational)> = Vec::new();
    let mut heads = Assignment::empty(inst.n);
    heads.set(i_star, j_star);
    outcomes.push((heads, rat(1, 2)));

    let depth = default_ladder_depth(inst.n);
    let rung_probability = rat(1, 2) * rat(1, i64::from(depth) + 1);
    for k in 0..=depth {
        let threshold = &v_max / rat_int(1i64 << k);
        let sub_edges: EdgeSet = usable
            .iter()
            .filter(|&(i, j)| i != i_star && inst.value(i, j) >= &threshold)
            .collect();
        let flattened = Instance::new(
            vec![vec![threshold.clone(); inst.m]; inst.n],
            (0..inst.n)
                .map(|i| (0..inst.m).map(|j| inst.size(i, j).clone()).collect())
                .collect(),
            (0..inst.m).map(|j| inst.capacity(j).clone()).collect(),
            Variant::Vigap,
        );
        let lottery = compose_mechanism(
            crate::fractional::vigap_fractional_greedy,
            &flattened,
            &sub_edges,
        )?;
        for (z, lambda) in lottery.support() {
            let pairs: Vec<(usize, usize)> = z.pairs().collect();
            for mask in 0u32..(1 << pairs.len()) {
                let mut survivor = Assignment::empty(inst.n);
                let mut probability = rung_probability.clone() * lambda;
                for (b, &(i, j)) in pairs.iter().enumerate() {
                    let keep = &threshold / inst.value(i, j);
                    if mask & (1 << b) != 0 {
                        survivor.set(i, j);
                        probability *= &keep;
                    } else {
                        probability *= Rational::one() - &keep;
                    }
                }
                if probability.is_positive() {
                    outcomes.push((survivor, probability));
                }
            }
        }
    }
    OutcomeLottery::from_weighted(outcomes)
}
