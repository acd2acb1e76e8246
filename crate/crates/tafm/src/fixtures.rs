//! Small named instances used by the test suite and the auditor.
//!
//! Each fixture packages an instance together with the true edge set it is
//! meant to be run on. The parameterized ones exist to pin down specific
//! mechanism behaviors: a profitable lie for the exact matching baseline,
//! and the family that pushes the greedy matching's loss to its limit.

use crate::error::{Error, Result};
use crate::instance::{EdgeSet, Instance, Variant};
use crate::rational::{rat_int, Rational};

use num_traits::{One, Zero};

/// Two jobs, two machines, unit sizes and capacities. Job 1 values machine 1
/// at `1 + eps` and machine 2 at 1; job 2 values machine 1 at 1 and has no
/// edge to machine 2. Welfare maximization sends job 1 to machine 2, so job 1
/// gains by hiding that edge. Requires `eps > 0`.
pub fn contested_machine(eps: &Rational) -> Result<(Instance, EdgeSet)> {
    if *eps <= Rational::zero() {
        return Err(Error::BadParameter(format!(
            "contested_machine needs eps > 0, got {eps}"
        )));
    }
    let inst = Instance::new(
        vec![
            vec![rat_int(1) + eps.clone(), rat_int(1)],
            vec![rat_int(1), rat_int(0)],
        ],
        vec![vec![rat_int(1); 2]; 2],
        vec![rat_int(1); 2],
        Variant::Mwbm,
    );
    let edges = EdgeSet::from_edges([(0, 0), (0, 1), (1, 0)]);
    Ok((inst, edges))
}

/// Two jobs that both value machine 1 at `gamma` and machine 2 at 1, with
/// every edge present. Requires `gamma > 1`.
pub fn shared_favorite(gamma: &Rational) -> Result<(Instance, EdgeSet)> {
    if *gamma <= Rational::one() {
        return Err(Error::BadParameter(format!(
            "shared_favorite needs gamma > 1, got {gamma}"
        )));
    }
    let inst = Instance::new(
        vec![
            vec![gamma.clone(), rat_int(1)],
            vec![gamma.clone(), rat_int(1)],
        ],
        vec![vec![rat_int(1); 2]; 2],
        vec![rat_int(1); 2],
        Variant::Mwbm,
    );
    Ok((inst, EdgeSet::complete(2, 2)))
}

/// `shared_favorite` with job 2's edge to machine 2 removed. The greedy
/// matching sends job 1 to machine 1 and strands job 2, collecting `gamma`
/// while the optimum collects `gamma + 1`; as `gamma` approaches 1 the
/// ratio approaches 2. Requires `gamma > 1`.
pub fn lopsided_favorite(gamma: &Rational) -> Result<(Instance, EdgeSet)> {
    let (inst, _) = shared_favorite(gamma)?;
    let edges = EdgeSet::from_edges([(0, 0), (0, 1), (1, 0)]);
    Ok((inst, edges))
}

/// One job, one machine, everything 1, edge present. Satisfies every
/// structural family at once.
pub fn unit_square() -> (Instance, EdgeSet) {
    let inst = Instance::new(
        vec![vec![rat_int(1)]],
        vec![vec![rat_int(1)]],
        vec![rat_int(1)],
        Variant::Mbm,
    );
    (inst, EdgeSet::complete(1, 1))
}

/// One job, one machine, no edges at all.
pub fn no_edges() -> (Instance, EdgeSet) {
    let (inst, _) = unit_square();
    (inst, EdgeSet::from_edges([]))
}
