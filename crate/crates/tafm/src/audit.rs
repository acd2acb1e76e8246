//! Exact strategyproofness auditing.
//!
//! The auditor replays a mechanism against every way a job could lie about
//! its edges and compares exact expected utilities on the job's true edges.
//! No sampling anywhere: randomized outcomes are expanded into per-job
//! machine marginals, so every comparison is a rational comparison.
//!
//! A witness is recorded only for a strict utility increase. Truthfulness
//! is a weak inequality, so ties are fine.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::{Assignment, Outcome};
use crate::error::{Error, Result};
use crate::instance::{EdgeSet, Instance, Variant};
use crate::mechanism::Mechanism;
use crate::rational::{rat_int, Rational};

/// Brute force enumerates every integral assignment; this caps n·m.
pub const BRUTE_FORCE_CELL_GUARD: usize = 16;
/// Misreport enumeration is 2^m per job; this caps m.
pub const MISREPORT_MACHINE_GUARD: usize = 6;

/// Exhaustive welfare oracle. Enumerates every feasible integral assignment
/// of true edges and keeps the best; on ties the first one found wins, and
/// the search order (job by job, unassigned before machine 1 before
/// machine 2, ...) makes that the lexicographically smallest maximizer.
pub fn brute_force_optimal(inst: &Instance, edges: &EdgeSet) -> Result<(Assignment, Rational)> {
    let (n, m) = (inst.n, inst.m);
    if n * m > BRUTE_FORCE_CELL_GUARD {
        return Err(Error::GuardExceeded(format!(
            "brute force enumeration wants n*m <= {BRUTE_FORCE_CELL_GUARD}, got {}",
            n * m
        )));
    }
    let mut best = (Assignment::empty(n), Rational::zero());
    let mut current = Assignment::empty(n);
    let mut room: Vec<Rational> = inst.capacities.clone();
    fn go(
        i: usize,
        inst: &Instance,
        edges: &EdgeSet,
        current: &mut Assignment,
        room: &mut [Rational],
        value: &Rational,
        best: &mut (Assignment, Rational),
    ) {
        if i == inst.n {
            if *value > best.1 {
                *best = (current.clone(), value.clone());
            }
            return;
        }
        go(i + 1, inst, edges, current, room, value, best);
        for j in 0..inst.m {
            if !edges.contains(i, j) || *inst.size(i, j) > room[j] {
                continue;
            }
            room[j] -= inst.size(i, j);
            current.set(i, j);
            let v = value + inst.value(i, j);
            go(i + 1, inst, edges, current, room, &v, best);
            current.clear(i);
            room[j] += inst.size(i, j);
        }
    }
    go(
        0,
        inst,
        edges,
        &mut current,
        &mut room,
        &Rational::zero(),
        &mut best,
    );
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Truthful,
    Violated,
}

/// One profitable lie: the job, what it actually has, what it claimed,
/// and the exact utilities before and after.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub job: usize,
    pub true_edges: EdgeSet,
    pub misreport: Vec<usize>,
    pub honest_utility: Rational,
    pub deviant_utility: Rational,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub mechanism: String,
    pub instance: String,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub honest_welfare: Rational,
    /// Brute-force optimum over the true edges; absent past the size guard.
    pub optimal_welfare: Option<Rational>,
    /// optimal / honest, when both are positive.
    pub ratio: Option<Rational>,
}

pub fn instance_label(inst: &Instance) -> String {
    let row = |mat: &[Vec<Rational>]| {
        mat.iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join(";")
    };
    format!(
        "{} {}x{} v=[{}] s=[{}] c=[{}]",
        inst.variant.name(),
        inst.n,
        inst.m,
        row(&inst.values),
        row(&inst.sizes),
        inst.capacities
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )
}

/// Per-job machine marginals of an outcome. Utilities and welfare are
/// linear in the assignment, so the marginals carry everything the audit
/// needs from a run, in O(n·m) space regardless of lottery support size.
fn outcome_marginals(outcome: &Outcome, n: usize, m: usize) -> Vec<Vec<Rational>> {
    let mut marg = vec![vec![Rational::zero(); m]; n];
    match outcome {
        Outcome::Deterministic(a) => {
            for (i, j) in a.pairs() {
                marg[i][j] = rat_int(1);
            }
        }
        Outcome::Fractional(x) => {
            for (row, mrow) in marg.iter_mut().enumerate() {
                for (col, cell) in mrow.iter_mut().enumerate() {
                    *cell = x.get(row, col).clone();
                }
            }
        }
        Outcome::Randomized(l) => {
            for (a, p) in l.support() {
                for (i, j) in a.pairs() {
                    marg[i][j] += p;
                }
            }
        }
    }
    marg
}

/// Memoized mechanism runs, keyed by the reported edge mask. Across a full
/// audit of one instance every mask appears as somebody's report, so the
/// cache tops out at 2^(n·m) entries and each mechanism run is paid once.
struct MaskCache<'a> {
    mech: Mechanism,
    inst: &'a Instance,
    map: BTreeMap<u64, Vec<Vec<Rational>>>,
}

impl<'a> MaskCache<'a> {
    fn new(mech: Mechanism, inst: &'a Instance) -> Self {
        MaskCache {
            mech,
            inst,
            map: BTreeMap::new(),
        }
    }

    fn marginals(&mut self, mask: u64) -> Result<&Vec<Vec<Rational>>> {
        if !self.map.contains_key(&mask) {
            let edges = EdgeSet::from_mask(mask, self.inst.n, self.inst.m);
            let outcome = self.mech.run(self.inst, &edges)?;
            self.map
                .insert(mask, outcome_marginals(&outcome, self.inst.n, self.inst.m));
        }
        Ok(&self.map[&mask])
    }

    fn runs(&self) -> u64 {
        self.map.len() as u64
    }
}

fn edge_mask(edges: &EdgeSet, m: usize) -> u64 {
    let mut mask = 0u64;
    for (i, j) in edges.iter() {
        mask |= 1u64 << (i * m + j);
    }
    mask
}

/// Expected utility of `job` over its true machines `row` (a bitmask).
fn row_utility(job: usize, row: u64, marg: &[Vec<Rational>], inst: &Instance) -> Rational {
    let mut total = Rational::zero();
    for j in 0..inst.m {
        if row & (1 << j) != 0 && !marg[job][j].is_zero() {
            total += &marg[job][j] * inst.value(job, j);
        }
    }
    total
}

/// Audits one true edge set against all misreports, reusing `cache`.
/// Returns the honest welfare on true edges plus every strict violation.
fn audit_against_cache(cache: &mut MaskCache, true_mask: u64) -> Result<(Rational, Vec<Witness>)> {
    let inst = cache.inst;
    let (n, m) = (inst.n, inst.m);
    let row_bits = (1u64 << m) - 1;
    let honest = cache.marginals(true_mask)?.clone();
    let mut welfare = Rational::zero();
    let mut witnesses = Vec::new();
    for i in 0..n {
        let row = (true_mask >> (i * m)) & row_bits;
        let honest_u = row_utility(i, row, &honest, inst);
        for rep in 0..(1u64 << m) {
            if rep == row {
                continue;
            }
            let rep_mask = (true_mask & !(row_bits << (i * m))) | (rep << (i * m));
            let deviant_u = row_utility(i, row, cache.marginals(rep_mask)?, inst);
            if deviant_u > honest_u {
                witnesses.push(Witness {
                    job: i,
                    true_edges: EdgeSet::from_mask(true_mask, n, m),
                    misreport: (0..m).filter(|j| rep & (1 << j) != 0).collect(),
                    honest_utility: honest_u.clone(),
                    deviant_utility: deviant_u,
                });
            }
        }
        welfare += honest_u;
    }
    Ok((welfare, witnesses))
}

fn check_audit_guards(inst: &Instance) -> Result<()> {
    if inst.m > MISREPORT_MACHINE_GUARD {
        return Err(Error::GuardExceeded(format!(
            "misreport enumeration wants m <= {MISREPORT_MACHINE_GUARD}, got {}",
            inst.m
        )));
    }
    if inst.n * inst.m > 64 {
        return Err(Error::GuardExceeded(format!(
            "edge masks want n*m <= 64, got {}",
            inst.n * inst.m
        )));
    }
    Ok(())
}

/// Full unilateral audit of one mechanism on one true edge set. For every
/// job and every reported edge subset, the mechanism runs on the doctored
/// report and the job's exact expected utility on its true edges is
/// compared against the honest run.
pub fn audit_strategyproofness(
    mech: Mechanism,
    inst: &Instance,
    true_edges: &EdgeSet,
) -> Result<AuditReport> {
    check_audit_guards(inst)?;
    let mut cache = MaskCache::new(mech, inst);
    let true_mask = edge_mask(true_edges, inst.m);
    let (honest_welfare, witnesses) = audit_against_cache(&mut cache, true_mask)?;
    let optimal_welfare = if inst.n * inst.m <= BRUTE_FORCE_CELL_GUARD {
        Some(brute_force_optimal(inst, true_edges)?.1)
    } else {
        None
    };
    let ratio = match &optimal_welfare {
        Some(opt) if !opt.is_zero() && !honest_welfare.is_zero() => {
            Some(opt / &honest_welfare)
        }
        _ => None,
    };
    Ok(AuditReport {
        mechanism: mech.name().to_string(),
        instance: instance_label(inst),
        verdict: if witnesses.is_empty() {
            Verdict::Truthful
        } else {
            Verdict::Violated
        },
        witnesses,
        honest_welfare,
        optimal_welfare,
        ratio,
    })
}

/// A rectangular family of instances to sweep: every shape crossed with
/// every way to fill the variant's free coordinates from small alphabets.
/// `run_budget` caps the total number of mechanism invocations; shapes are
/// visited cheapest first and each gets at least one instance, sampled by
/// seed once a shape's instance space outruns its share of the budget.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub shapes: Vec<(usize, usize)>,
    pub values: Vec<Rational>,
    pub sizes: Vec<Rational>,
    pub capacities: Vec<Rational>,
    pub run_budget: u64,
    pub seed: u64,
}

impl GridSpec {
    /// Alphabets keep LP vertices small; budgets are sized so a full sweep
    /// of any one mechanism stays in the tens of seconds.
    pub fn default_for(mech: Mechanism) -> GridSpec {
        let run_budget = match mech {
            Mechanism::Mbm => 20_000,
            Mechanism::MwbmGreedy => 60_000,
            Mechanism::MwbmOptimalBaseline => 1_500,
            Mechanism::MkpFractional => 4_000,
            Mechanism::SigapGreedy | Mechanism::VigapGreedy => 40_000,
            Mechanism::ComposeMkp => 800,
            Mechanism::ComposeSigap | Mechanism::ComposeVigap => 1_200,
            Mechanism::Gap => 2_000,
        };
        GridSpec {
            shapes: vec![
                (1, 1),
                (1, 2),
                (2, 1),
                (1, 3),
                (3, 1),
                (2, 2),
                (2, 3),
                (3, 2),
                (3, 3),
            ],
            values: vec![rat_int(1), rat_int(2), rat_int(3)],
            sizes: vec![rat_int(1), rat_int(2)],
            capacities: vec![rat_int(1), rat_int(2), rat_int(3)],
            run_budget,
            seed: 7,
        }
    }

    pub fn named(name: &str, mech: Mechanism) -> Option<GridSpec> {
        match name {
            "default" => Some(GridSpec::default_for(mech)),
            "small" => {
                let mut spec = GridSpec::default_for(mech);
                spec.shapes.retain(|&(n, m)| n <= 2 && m <= 2);
                spec.run_budget = (spec.run_budget / 8).max(200);
                Some(spec)
            }
            _ => None,
        }
    }
}

/// How many instances a shape contributes for a variant's free coordinates.
pub fn grid_instance_space(
    variant: Variant,
    n: usize,
    m: usize,
    values: &[Rational],
    sizes: &[Rational],
    capacities: &[Rational],
) -> u128 {
    let (vc, sc, cc) = grid_cells(variant, n, m);
    (values.len() as u128).pow(vc as u32)
        * (sizes.len() as u128).pow(sc as u32)
        * (capacities.len() as u128).pow(cc as u32)
}

fn grid_cells(variant: Variant, n: usize, m: usize) -> (usize, usize, usize) {
    let vc = match variant {
        Variant::Mbm => 0,
        Variant::Mwbm | Variant::Sigap | Variant::Gap => n * m,
        Variant::Mkp | Variant::Vigap | Variant::Kp => n,
    };
    let sc = match variant {
        Variant::Mbm | Variant::Mwbm => 0,
        Variant::Mkp | Variant::Sigap | Variant::Kp => n,
        Variant::Vigap | Variant::Gap => n * m,
    };
    let cc = match variant {
        Variant::Mbm | Variant::Mwbm => 0,
        _ => m,
    };
    (vc, sc, cc)
}

/// Decodes instance `idx` of a shape: mixed-radix digits over the value,
/// size, and capacity alphabets in that order, least significant first.
pub fn decode_grid_instance(
    variant: Variant,
    n: usize,
    m: usize,
    values: &[Rational],
    sizes: &[Rational],
    capacities: &[Rational],
    mut idx: u128,
) -> Instance {
    let (vc, sc, cc) = grid_cells(variant, n, m);
    let mut digits = |alphabet: &[Rational], count: usize| -> Vec<Rational> {
        (0..count)
            .map(|_| {
                let d = (idx % alphabet.len() as u128) as usize;
                idx /= alphabet.len() as u128;
                alphabet[d].clone()
            })
            .collect()
    };
    let vals = digits(values, vc);
    let sizes = digits(sizes, sc);
    let caps = digits(capacities, cc);

    let expand = |cells: &[Rational]| -> Vec<Vec<Rational>> {
        match cells.len() {
            0 => vec![vec![rat_int(1); m]; n],
            len if len == n => (0..n).map(|i| vec![cells[i].clone(); m]).collect(),
            _ => (0..n)
                .map(|i| cells[i * m..(i + 1) * m].to_vec())
                .collect(),
        }
    };
    let capacities = if cc == 0 { vec![rat_int(1); m] } else { caps };
    Instance::new(expand(&vals), expand(&sizes), capacities, variant)
}

/// The instances a grid sweep will actually visit, selected under the
/// run budget: shapes cheapest first, at least one instance per shape,
/// seeded sampling once a shape's space outruns the remaining budget.
#[derive(Debug, Clone)]
pub struct GridSelection {
    pub instances: Vec<Instance>,
    pub instance_space: u128,
    pub exhaustive: bool,
}

pub fn select_grid_instances(variant: Variant, spec: &GridSpec) -> Result<GridSelection> {
    if spec.values.is_empty() || spec.sizes.is_empty() || spec.capacities.is_empty() {
        return Err(Error::BadParameter("grid alphabets must be nonempty".into()));
    }
    let mut shapes = spec.shapes.clone();
    shapes.sort_by_key(|&(n, m)| (n * m, n, m));
    shapes.dedup();

    let mut selection = GridSelection {
        instances: Vec::new(),
        instance_space: 0,
        exhaustive: true,
    };
    let mut planned_runs = 0u64;
    for &(n, m) in &shapes {
        if n * m > BRUTE_FORCE_CELL_GUARD || m > MISREPORT_MACHINE_GUARD {
            return Err(Error::GuardExceeded(format!(
                "grid shape {n}x{m} exceeds audit guards"
            )));
        }
        let space = grid_instance_space(variant, n, m, &spec.values, &spec.sizes, &spec.capacities);
        selection.instance_space += space;
        let runs_per_instance = 1u64 << (n * m);
        let remaining = spec.run_budget.saturating_sub(planned_runs);
        let quota = (remaining / runs_per_instance)
            .max(1)
            .min(space.min(u64::MAX as u128) as u64);

        let indices: Vec<u128> = if (quota as u128) >= space {
            (0..space).collect()
        } else {
            selection.exhaustive = false;
            let mut rng = ChaCha8Rng::seed_from_u64(
                spec.seed ^ ((n as u64) << 32 | m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let mut picks = std::collections::BTreeSet::new();
            while picks.len() < quota as usize {
                picks.insert(rng.gen_range(0..space));
            }
            picks.into_iter().collect()
        };
        for idx in indices {
            selection.instances.push(decode_grid_instance(
                variant,
                n,
                m,
                &spec.values,
                &spec.sizes,
                &spec.capacities,
                idx,
            ));
            planned_runs += runs_per_instance;
        }
    }
    Ok(selection)
}

/// One grid hit that broke truthfulness, with enough data to replay it.
#[derive(Debug, Clone)]
pub struct WitnessRecord {
    pub instance: Instance,
    pub witness: Witness,
}

#[derive(Debug, Clone)]
pub struct GridReport {
    pub mechanism: String,
    pub instance_space: u128,
    pub instances_audited: u64,
    pub edge_sets_audited: u64,
    pub mechanism_runs: u64,
    /// True when every instance of every shape was audited.
    pub exhaustive: bool,
    pub witness_count: u64,
    /// At most the first 16 witnesses, for reporting.
    pub witnesses: Vec<WitnessRecord>,
    pub min_ratio: Option<Rational>,
    pub max_ratio: Option<Rational>,
    /// True edge sets where the optimum was positive but the mechanism
    /// collected nothing.
    pub undefined_ratios: u64,
}

const WITNESS_KEEP: usize = 16;

/// Sweeps the grid: every kept instance is audited against every true edge
/// set and every misreport, and the honest welfare of each true edge set is
/// compared against the brute-force optimum.
pub fn audit_grid(mech: Mechanism, spec: &GridSpec) -> Result<GridReport> {
    let selection = select_grid_instances(mech.required_variant(), spec)?;

    let mut report = GridReport {
        mechanism: mech.name().to_string(),
        instance_space: selection.instance_space,
        instances_audited: 0,
        edge_sets_audited: 0,
        mechanism_runs: 0,
        exhaustive: selection.exhaustive,
        witness_count: 0,
        witnesses: Vec::new(),
        min_ratio: None,
        max_ratio: None,
        undefined_ratios: 0,
    };

    for inst in &selection.instances {
        let (n, m) = (inst.n, inst.m);
        let mut cache = MaskCache::new(mech, inst);
        for true_mask in 0..(1u64 << (n * m)) {
            let (honest_welfare, witnesses) = audit_against_cache(&mut cache, true_mask)?;
            report.edge_sets_audited += 1;
            for w in witnesses {
                report.witness_count += 1;
                if report.witnesses.len() < WITNESS_KEEP {
                    report.witnesses.push(WitnessRecord {
                        instance: inst.clone(),
                        witness: w,
                    });
                }
            }
            let true_edges = EdgeSet::from_mask(true_mask, n, m);
            let (_, opt) = brute_force_optimal(inst, &true_edges)?;
            if opt.is_zero() {
                continue;
            }
            if honest_welfare.is_zero() {
                report.undefined_ratios += 1;
                continue;
            }
            let ratio = &opt / &honest_welfare;
            if report
                .min_ratio
                .as_ref()
                .is_none_or(|best| ratio < *best)
            {
                report.min_ratio = Some(ratio.clone());
            }
            if report
                .max_ratio
                .as_ref()
                .is_none_or(|best| ratio > *best)
            {
                report.max_ratio = Some(ratio);
            }
        }
        report.instances_audited += 1;
        report.mechanism_runs += cache.runs();
    }
    Ok(report)
}
