//! Matching mechanisms for unit-size, unit-capacity instances.
//!
//! Two truthful mechanisms live here: a deterministic maximum-cardinality
//! matching with report-independent tie-breaking, and a greedy half-optimal
//! maximum-weight matching whose scan order is fixed before reports are
//! seen. The exact maximum-weight matching is also provided; it is not
//! truthful and exists to be caught by the auditor.

use num_traits::Zero;

use crate::assignment::{Assignment, FractionalAssignment};
use crate::instance::{canonical_edge_order, EdgeSet, Instance};
use crate::lp::{build_gap_lp, lex_refine, LexSense};
use crate::rational::Rational;

fn kuhn_augment(
    job: usize,
    adj: &[Vec<usize>],
    match_of_machine: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &j in &adj[job] {
        if visited[j] {
            continue;
        }
        visited[j] = true;
        let free = match match_of_machine[j] {
            None => true,
            Some(other) => kuhn_augment(other, adj, match_of_machine, visited),
        };
        if free {
            match_of_machine[j] = Some(job);
            return true;
        }
    }
    false
}

fn max_matching_excluding(
    n: usize,
    m: usize,
    edges: &EdgeSet,
    job_taken: &[bool],
    machine_taken: &[bool],
) -> usize {
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if job_taken[i] {
                Vec::new()
            } else {
                edges
                    .machines_of(i)
                    .into_iter()
                    .filter(|&j| !machine_taken[j])
                    .collect()
            }
        })
        .collect();
    let mut match_of_machine = vec![None; m];
    let mut size = 0;
    for i in 0..n {
        let mut visited = vec![false; m];
        if kuhn_augment(i, &adj, &mut match_of_machine, &mut visited) {
            size += 1;
        }
    }
    size
}

/// Maximum cardinality of a matching inside the edge set.
pub fn max_matching_size(n: usize, m: usize, edges: &EdgeSet) -> usize {
    max_matching_excluding(n, m, edges, &vec![false; n], &vec![false; m])
}

/// Deterministic maximum-cardinality matching. Edges are scanned in
/// canonical order and committed whenever doing so still permits a matching
/// of maximum size; the scan prefers earlier canonical edges, and that
/// preference is a property of the index grid alone, never of the reports.
pub fn mbm_mechanism(inst: &Instance, edges: &EdgeSet) -> Assignment {
    let full = max_matching_size(inst.n, inst.m, edges);
    let mut out = Assignment::empty(inst.n);
    let mut job_taken = vec![false; inst.n];
    let mut machine_taken = vec![false; inst.m];
    let mut committed = 0usize;
    for (i, j) in edges.iter() {
        if committed == full {
            break;
        }
        if job_taken[i] || machine_taken[j] {
            continue;
        }
        let mut jt = job_taken.clone();
        let mut mt = machine_taken.clone();
        jt[i] = true;
        mt[j] = true;
        let rest = max_matching_excluding(inst.n, inst.m, edges, &jt, &mt);
        if committed + 1 + rest == full {
            out.set(i, j);
            job_taken = jt;
            machine_taken = mt;
            committed += 1;
        }
    }
    out
}

/// All index pairs ordered by decreasing value, ties broken by canonical
/// edge order. Computed from the public values only, so the order is the
/// same no matter which edges get reported.
pub fn value_order(inst: &Instance) -> Vec<(usize, usize)> {
    let mut pairs = canonical_edge_order(inst.n, inst.m);
    pairs.sort_by(|&(i1, j1), &(i2, j2)| {
        inst.value(i2, j2)
            .cmp(inst.value(i1, j1))
            .then((i1, j1).cmp(&(i2, j2)))
    });
    pairs
}

/// Greedy maximum-weight matching: walk `value_order`, accepting each
/// reported pair that still fits into the matching. Half-optimal and
/// truthful.
pub fn mwbm_greedy(inst: &Instance, edges: &EdgeSet) -> Assignment {
    let mut out = Assignment::empty(inst.n);
    let mut job_taken = vec![false; inst.n];
    let mut machine_taken = vec![false; inst.m];
    for (i, j) in value_order(inst) {
        if edges.contains(i, j) && !job_taken[i] && !machine_taken[j] {
            out.set(i, j);
            job_taken[i] = true;
            machine_taken[j] = true;
        }
    }
    out
}

/// Exact maximum-weight matching over the reports, with ties resolved to
/// the coordinatewise-minimal optimal vertex. Dropping an edge can strictly
/// raise a job's utility under this rule, which is the whole point of
/// keeping it around as a baseline.
pub fn mwbm_optimal_baseline(inst: &Instance, edges: &EdgeSet) -> Assignment {
    let gap = build_gap_lp(inst, edges);
    let order: Vec<usize> = (0..gap.vars.len()).collect();
    let refined = lex_refine(&gap.lp, &order, LexSense::Minimal)
        .expect("matching program is feasible and bounded");
    let x = FractionalAssignment::from_matrix(gap.point_to_matrix(&refined.point));
    x.to_assignment()
        .expect("matching polytope vertices are integral")
}

/// Welfare restricted to pairs present in the edge set.
pub fn matching_welfare(a: &Assignment, inst: &Instance, edges: &EdgeSet) -> Rational {
    a.pairs()
        .filter(|&(i, j)| edges.contains(i, j))
        .map(|(i, j)| inst.value(i, j).clone())
        .fold(Rational::zero(), |acc, v| acc + v)
}
