//! Fractional truthful mechanisms.
//!
//! Machine-independent instances get the exact linear-program optimum with
//! deterministic tie-breaking. Size-invariant and value-invariant instances
//! get a density greedy whose scan order is fixed by public data; the
//! size-invariant run also emits a dual certificate proving the greedy is
//! within a factor two of the fractional optimum.

use num_traits::Zero;

use crate::assignment::FractionalAssignment;
use crate::instance::{canonical_edge_order, EdgeSet, Instance};
use crate::lp::{build_gap_lp, lex_refine, LexSense};
use crate::rational::Rational;

/// One committed step of a density greedy. Fractions of zero are never
/// recorded.
#[derive(Debug, Clone)]
pub struct GreedyStep {
    pub edge: (usize, usize),
    pub assigned_fraction: Rational,
    pub job_exhausted: bool,
    pub machine_filled: bool,
}

#[derive(Debug, Clone)]
pub struct GreedyRun {
    pub steps: Vec<GreedyStep>,
    pub x: FractionalAssignment,
}

/// Feasible point of the assignment program's dual. Its objective value
/// bounds every feasible welfare from above.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub u: Vec<Rational>,
    pub z: Vec<Rational>,
}

impl DualCertificate {
    pub fn value(&self, inst: &Instance) -> Rational {
        let jobs: Rational = self.u.iter().cloned().sum();
        let machines: Rational = self
            .z
            .iter()
            .enumerate()
            .map(|(j, z)| inst.capacity(j) * z)
            .sum();
        jobs + machines
    }
}

/// Exact optimum of the machine-independent assignment program, with ties
/// resolved by coordinatewise minimization in canonical order.
pub fn mkp_fractional(inst: &Instance, edges: &EdgeSet) -> FractionalAssignment {
    let gap = build_gap_lp(inst, edges);
    let order: Vec<usize> = (0..gap.vars.len()).collect();
    let refined = lex_refine(&gap.lp, &order, LexSense::Minimal)
        .expect("assignment program is feasible and bounded");
    FractionalAssignment::from_matrix(gap.point_to_matrix(&refined.point))
}

/// All index pairs by decreasing density, ties broken canonically. Density
/// is a function of public values and sizes only.
fn density_order(inst: &Instance, density: impl Fn(usize, usize) -> Rational) -> Vec<(usize, usize)> {
    let mut pairs = canonical_edge_order(inst.n, inst.m);
    pairs.sort_by(|&(i1, j1), &(i2, j2)| {
        density(i2, j2)
            .cmp(&density(i1, j1))
            .then((i1, j1).cmp(&(i2, j2)))
    });
    pairs
}

fn greedy_over(
    inst: &Instance,
    edges: &EdgeSet,
    order: &[(usize, usize)],
) -> GreedyRun {
    let usable = inst.effective_edges(edges);
    let mut x = FractionalAssignment::zero(inst.n, inst.m);
    let mut remaining = vec![Rational::from_integer(1.into()); inst.n];
    let mut room: Vec<Rational> = (0..inst.m).map(|j| inst.capacity(j).clone()).collect();
    let mut steps = Vec::new();
    for &(i, j) in order {
        if !usable.contains(i, j) {
            continue;
        }
        let s = inst.size(i, j);
        let by_room = &room[j] / s;
        let phi = remaining[i].clone().min(by_room);
        if phi.is_zero() {
            continue;
        }
        remaining[i] -= &phi;
        room[j] -= &phi * s;
        x.set(i, j, phi.clone());
        steps.push(GreedyStep {
            edge: (i, j),
            assigned_fraction: phi,
            job_exhausted: remaining[i].is_zero(),
            machine_filled: room[j].is_zero(),
        });
    }
    GreedyRun { steps, x }
}

/// Density greedy for size-invariant instances: pairs scanned by v_ij/s_i
/// descending, each assigning as much of the job as the machine's remaining
/// capacity allows. Pairs whose size exceeds the machine's capacity are
/// ignored outright.
pub fn sigap_greedy_traced(inst: &Instance, edges: &EdgeSet) -> GreedyRun {
    let order = density_order(inst, |i, j| inst.value(i, j) / inst.size(i, 0));
    greedy_over(inst, edges, &order)
}

pub fn sigap_fractional_greedy(inst: &Instance, edges: &EdgeSet) -> FractionalAssignment {
    sigap_greedy_traced(inst, edges).x
}

/// Density greedy for value-invariant instances, scanning by v_i/s_ij. A
/// fraction phi on (i, j) consumes phi of the job and phi times s_ij of the
/// machine.
pub fn vigap_fractional_greedy(inst: &Instance, edges: &EdgeSet) -> FractionalAssignment {
    let order = density_order(inst, |i, j| inst.value(i, 0) / inst.size(i, j));
    greedy_over(inst, edges, &order).x
}

/// Reads a dual point off a size-invariant greedy run: a job exhausting at
/// an edge pins its multiplier to that edge's value, a machine filling pins
/// its multiplier to that edge's density. Densities only fall during the
/// scan, so every later edge sees a large enough pinned multiplier.
pub fn sigap_dual_certificate(run: &GreedyRun, inst: &Instance) -> DualCertificate {
    let mut u = vec![Rational::zero(); inst.n];
    let mut z = vec![Rational::zero(); inst.m];
    for step in &run.steps {
        let (i, j) = step.edge;
        if step.job_exhausted {
            u[i] = inst.value(i, j).clone();
        }
        if step.machine_filled {
            z[j] = inst.value(i, j) / inst.size(i, 0);
        }
    }
    DualCertificate { u, z }
}

/// Checks the certificate exactly: multipliers nonnegative, every usable
/// edge's dual constraint satisfied, and the dual value at most twice the
/// point's welfare. Success certifies welfare(x) is at least half the
/// program optimum. Failure names the violated constraint.
pub fn verify_2approx(
    cert: &DualCertificate,
    x: &FractionalAssignment,
    inst: &Instance,
    edges: &EdgeSet,
) -> std::result::Result<(), String> {
    if cert.u.len() != inst.n || cert.z.len() != inst.m {
        return Err("certificate has the wrong shape".to_string());
    }
    for (i, u) in cert.u.iter().enumerate() {
        if u < &Rational::zero() {
            return Err(format!("job multiplier {} is negative", i + 1));
        }
    }
    for (j, z) in cert.z.iter().enumerate() {
        if z < &Rational::zero() {
            return Err(format!("machine multiplier {} is negative", j + 1));
        }
    }
    for (i, j) in inst.effective_edges(edges).iter() {
        let lhs = &cert.u[i] + inst.size(i, j) * &cert.z[j];
        if &lhs < inst.value(i, j) {
            return Err(format!(
                "dual constraint at edge ({}, {}): {} + s*{} < {}",
                i + 1,
                j + 1,
                cert.u[i],
                cert.z[j],
                inst.value(i, j)
            ));
        }
    }
    let welfare = crate::assignment::welfare(x, inst, edges)
        .map_err(|e| format!("point is not feasible: {e}"))?;
    let dual_value = cert.value(inst);
    if dual_value > Rational::from_integer(2.into()) * &welfare {
        return Err(format!(
            "dual value {dual_value} exceeds twice the welfare {welfare}"
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Variant;
    use crate::lp::solve_lp;
    use crate::rational::{rat, rat_int};

    fn mkp(values: Vec<(i64, i64)>, sizes: Vec<(i64, i64)>, caps: Vec<i64>, m: usize) -> Instance {
        Instance::new(
            values
                .into_iter()
                .map(|(p, q)| vec![rat(p, q); m])
                .collect(),
            sizes.into_iter().map(|(p, q)| vec![rat(p, q); m]).collect(),
            caps.into_iter().map(rat_int).collect(),
            Variant::Mkp,
        )
    }

    fn two_machine_sigap() -> (Instance, EdgeSet) {
        let inst = Instance::new(
            vec![
                vec![rat_int(5), rat_int(3)],
                vec![rat_int(4), rat_int(0)],
            ],
            vec![vec![rat_int(1); 2]; 2],
            vec![rat_int(1), rat_int(1)],
            Variant::Sigap,
        );
        let edges = EdgeSet::from_edges([(0, 0), (0, 1), (1, 0)]);
        (inst, edges)
    }

    #[test]
    fn lp_mechanism_on_empty_edges_is_zero() {
        let inst = mkp(vec![(3, 1), (1, 1)], vec![(3, 5), (3, 5)], vec![1], 1);
        let x = mkp_fractional(&inst, &EdgeSet::new());
        assert_eq!(x.job_total(0), rat_int(0));
        assert_eq!(x.job_total(1), rat_int(0));
    }

    #[test]
    fn lp_mechanism_splits_the_second_job() {
        let inst = mkp(vec![(3, 1), (1, 1)], vec![(3, 5), (3, 5)], vec![1], 1);
        let edges = EdgeSet::complete(2, 1);
        let x = mkp_fractional(&inst, &edges);
        assert_eq!(x.get(0, 0), &rat_int(1));
        assert_eq!(x.get(1, 0), &rat(2, 3));
        assert_eq!(
            crate::assignment::welfare(&x, &inst, &edges).unwrap(),
            rat(11, 3)
        );
    }

    #[test]
    fn lp_mechanism_ties_resolve_to_the_later_job() {
        let inst = mkp(vec![(1, 1), (1, 1)], vec![(1, 1), (1, 1)], vec![1], 1);
        let x = mkp_fractional(&inst, &EdgeSet::complete(2, 1));
        assert_eq!(x.get(0, 0), &rat_int(0));
        assert_eq!(x.get(1, 0), &rat_int(1));
    }

    #[test]
    fn lp_mechanism_welfare_matches_solver_exactly() {
        let inst = mkp(
            vec![(7, 2), (3, 1), (5, 3)],
            vec![(2, 3), (1, 2), (5, 4)],
            vec![1, 2],
            2,
        );
        for mask in [0u64, 5, 21, 63] {
            let edges = EdgeSet::from_mask(mask, 3, 2);
            let x = mkp_fractional(&inst, &edges);
            let sol = solve_lp(&build_gap_lp(&inst, &edges).lp).unwrap();
            assert_eq!(
                crate::assignment::welfare(&x, &inst, &edges).unwrap(),
                sol.objective_value,
                "mask {mask}"
            );
        }
    }

    #[test]
    fn sigap_greedy_on_empty_edges_is_zero() {
        let (inst, _) = two_machine_sigap();
        let run = sigap_greedy_traced(&inst, &EdgeSet::new());
        assert!(run.steps.is_empty());
        assert_eq!(run.x.job_total(0), rat_int(0));
    }

    #[test]
    fn sigap_greedy_takes_the_dense_edge_first() {
        let (inst, edges) = two_machine_sigap();
        let run = sigap_greedy_traced(&inst, &edges);
        assert_eq!(run.x.get(0, 0), &rat_int(1));
        assert_eq!(run.x.get(1, 0), &rat_int(0));
        assert_eq!(run.x.get(0, 1), &rat_int(0));
        assert_eq!(
            crate::assignment::welfare(&run.x, &inst, &edges).unwrap(),
            rat_int(5)
        );
        // One committed step, exhausting the job and filling the machine.
        assert_eq!(run.steps.len(), 1);
        assert!(run.steps[0].job_exhausted && run.steps[0].machine_filled);
        // The program optimum routes around the contested machine.
        let sol = solve_lp(&build_gap_lp(&inst, &edges).lp).unwrap();
        assert_eq!(sol.objective_value, rat_int(7));
    }

    #[test]
    fn single_fitting_job_is_fully_assigned() {
        let inst = Instance::new(
            vec![vec![rat_int(3)]],
            vec![vec![rat_int(2)]],
            vec![rat_int(5)],
            Variant::Sigap,
        );
        let run = sigap_greedy_traced(&inst, &EdgeSet::complete(1, 1));
        assert_eq!(run.x.get(0, 0), &rat_int(1));
        assert!(run.steps[0].job_exhausted);
        assert!(!run.steps[0].machine_filled);
        let cert = sigap_dual_certificate(&run, &inst);
        assert_eq!(cert.u, vec![rat_int(3)]);
        assert_eq!(cert.z, vec![rat_int(0)]);
    }

    #[test]
    fn certificate_of_the_contested_run_is_tight() {
        let (inst, edges) = two_machine_sigap();
        let run = sigap_greedy_traced(&inst, &edges);
        let cert = sigap_dual_certificate(&run, &inst);
        assert_eq!(cert.u, vec![rat_int(5), rat_int(0)]);
        assert_eq!(cert.z, vec![rat_int(5), rat_int(0)]);
        assert_eq!(cert.value(&inst), rat_int(10));
        assert!(verify_2approx(&cert, &run.x, &inst, &edges).is_ok());
    }

    #[test]
    fn empty_certificate_fails_on_positive_values() {
        let (inst, edges) = two_machine_sigap();
        let run = sigap_greedy_traced(&inst, &edges);
        let zero = DualCertificate {
            u: vec![rat_int(0); 2],
            z: vec![rat_int(0); 2],
        };
        let err = verify_2approx(&zero, &run.x, &inst, &edges).unwrap_err();
        assert!(err.contains("dual constraint"), "{err}");
    }

    #[test]
    fn corrupted_certificate_is_caught() {
        let (inst, edges) = two_machine_sigap();
        let run = sigap_greedy_traced(&inst, &edges);
        let mut cert = sigap_dual_certificate(&run, &inst);
        cert.z[0] = rat_int(1);
        assert!(verify_2approx(&cert, &run.x, &inst, &edges).is_err());
        cert.z[0] = rat_int(-5);
        let err = verify_2approx(&cert, &run.x, &inst, &edges).unwrap_err();
        assert!(err.contains("negative"), "{err}");
    }

    #[test]
    fn vigap_job_lands_on_the_machine_it_fits() {
        // The denser machine cannot hold the whole job, and partial use of
        // an oversized pair is ruled out, so everything goes to the roomy
        // machine at the same welfare the split would have had.
        let inst = Instance::new(
            vec![vec![rat_int(6), rat_int(6)]],
            vec![vec![rat_int(2), rat_int(3)]],
            vec![rat_int(1), rat_int(3)],
            Variant::Vigap,
        );
        let edges = EdgeSet::complete(1, 2);
        let x = vigap_fractional_greedy(&inst, &edges);
        assert_eq!(x.get(0, 0), &rat_int(0));
        assert_eq!(x.get(0, 1), &rat_int(1));
        assert_eq!(
            crate::assignment::welfare(&x, &inst, &edges).unwrap(),
            rat_int(6)
        );
    }

    #[test]
    fn vigap_splits_across_machines_when_both_fit() {
        let inst = Instance::new(
            vec![vec![rat_int(6), rat_int(6)]],
            vec![vec![rat_int(2), rat_int(3)]],
            vec![rat_int(2), rat_int(3)],
            Variant::Vigap,
        );
        let edges = EdgeSet::complete(1, 2);
        let x = vigap_fractional_greedy(&inst, &edges);
        assert_eq!(x.get(0, 0), &rat_int(1));
        assert_eq!(x.get(0, 1), &rat_int(0));
    }

    #[test]
    fn vigap_identical_jobs_spread_by_canonical_ties() {
        let inst = Instance::new(
            vec![vec![rat_int(1); 2]; 2],
            vec![vec![rat_int(1); 2]; 2],
            vec![rat_int(1), rat_int(1)],
            Variant::Vigap,
        );
        let x = vigap_fractional_greedy(&inst, &EdgeSet::complete(2, 2));
        assert_eq!(x.get(0, 0), &rat_int(1));
        assert_eq!(x.get(1, 1), &rat_int(1));
        assert_eq!(x.get(0, 1), &rat_int(0));
        assert_eq!(x.get(1, 0), &rat_int(0));
    }

    #[test]
    fn vigap_partial_fill_respects_remaining_room() {
        // Second machine already half used by a denser job; the next job
        // takes what is left and spills nowhere.
        let inst = Instance::new(
            vec![
                vec![rat_int(8), rat_int(8)],
                vec![rat_int(3), rat_int(3)],
            ],
            vec![
                vec![rat_int(1), rat_int(1)],
                vec![rat_int(2), rat_int(2)],
            ],
            vec![rat_int(1), rat_int(1)],
            Variant::Vigap,
        );
        let x = vigap_fractional_greedy(&inst, &EdgeSet::complete(2, 2));
        assert_eq!(x.get(0, 0), &rat_int(1));
        // Size 2 against capacity 1: both pairs for the second job are
        // oversized and ignored.
        assert_eq!(x.job_total(1), rat_int(0));
    }

    /// Coordinate maximality oracle: pin the greedy point's earlier
    /// coordinates in density order and ask the solver to push the next
    /// one; the greedy value must already be the maximum.
    #[test]
    fn sigap_greedy_is_coordinatewise_maximal_in_density_order() {
        let (inst, edges) = two_machine_sigap();
        let run = sigap_greedy_traced(&inst, &edges);
        let gap = build_gap_lp(&inst, &edges);
        let order = density_order(&inst, |i, j| inst.value(i, j) / inst.size(i, 0));
        let mut pinned = build_gap_lp(&inst, &edges).lp;
        for (i, j) in order {
            let Some(k) = gap.vars.iter().position(|&e| e == (i, j)) else {
                continue;
            };
            let mut objective = vec![rat_int(0); gap.vars.len()];
            objective[k] = rat_int(1);
            let mut probe = pinned.clone();
            probe.objective = objective;
            let sol = solve_lp(&probe).unwrap();
            assert_eq!(
                sol.objective_value,
                run.x.get(i, j).clone(),
                "coordinate ({i}, {j}) is not maximal"
            );
            let mut row = vec![rat_int(0); gap.vars.len()];
            row[k] = rat_int(1);
            pinned
                .constraints
                .push((row.clone(), run.x.get(i, j).clone()));
            let neg: Vec<Rational> = row.iter().map(|v| -v.clone()).collect();
            pinned.constraints.push((neg, -run.x.get(i, j).clone()));
        }
    }

    #[test]
    fn greedy_half_optimality_holds_across_small_edge_sets() {
        let (inst, _) = two_machine_sigap();
        for mask in 0u64..(1 << 4) {
            let edges = EdgeSet::from_mask(mask, 2, 2);
            let run = sigap_greedy_traced(&inst, &edges);
            let cert = sigap_dual_certificate(&run, &inst);
            verify_2approx(&cert, &run.x, &inst, &edges)
                .unwrap_or_else(|e| panic!("mask {mask}: {e}"));
            let opt = solve_lp(&build_gap_lp(&inst, &edges).lp)
                .unwrap()
                .objective_value;
            let greedy = crate::assignment::welfare(&run.x, &inst, &edges).unwrap();
            assert!(rat_int(2) * &greedy >= opt, "mask {mask}");
        }
    }
}
