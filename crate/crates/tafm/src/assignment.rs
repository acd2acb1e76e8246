//! Assignment outcomes: integral, fractional, and randomized.
//!
//! Welfare is counted over the edge set a solution is measured against; a
//! job's utility is counted only over its *true* edges. A job assigned via an
//! edge it does not actually have receives zero, which is exactly what makes
//! fabricating edges unattractive.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::instance::{EdgeSet, Instance};
use crate::rational::{rational_sum, Rational};

/// Integral assignment: each job goes to at most one machine.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    slots: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment {
            slots: vec![None; n],
        }
    }

    pub fn from_slots(slots: Vec<Option<usize>>) -> Self {
        Assignment { slots }
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.slots[i]
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.slots[i] = Some(j);
    }

    pub fn clear(&mut self, i: usize) {
        self.slots[i] = None;
    }

    /// Assigned (job, machine) pairs in job order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (i, j)))
    }

    pub fn assigned_count(&self) -> usize {
        self.slots.iter().filter(|j| j.is_some()).count()
    }

    /// 0/1 matrix view of this assignment.
    pub fn to_fractional(&self, m: usize) -> FractionalAssignment {
        let mut x = FractionalAssignment::zero(self.n(), m);
        for (i, j) in self.pairs() {
            x.set(i, j, Rational::one());
        }
        x
    }

    /// Checks edge membership and machine capacities.
    pub fn check_feasible(&self, inst: &Instance, edges: &EdgeSet) -> Result<()> {
        let mut load = vec![Rational::zero(); inst.m];
        for (i, j) in self.pairs() {
            if j >= inst.m {
                return Err(Error::infeasible(
                    "assignment",
                    format!("job {} assigned to machine {} out of range", i + 1, j + 1),
                ));
            }
            if !edges.contains(i, j) {
                return Err(Error::infeasible(
                    "assignment",
                    format!("job {} uses absent edge ({}, {})", i + 1, i + 1, j + 1),
                ));
            }
            load[j] += inst.size(i, j);
        }
        for j in 0..inst.m {
            if load[j] > *inst.capacity(j) {
                return Err(Error::infeasible(
                    "assignment",
                    format!("machine {} over capacity", j + 1),
                ));
            }
        }
        Ok(())
    }

    pub fn welfare(&self, inst: &Instance, edges: &EdgeSet) -> Result<Rational> {
        self.check_feasible(inst, edges)?;
        Ok(self
            .pairs()
            .map(|(i, j)| inst.value(i, j).clone())
            .fold(Rational::zero(), |a, v| a + v))
    }
}

/// Fractional assignment: an n-by-m matrix with entries in [0, 1].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalAssignment {
    pub n: usize,
    pub m: usize,
    x: Vec<Vec<Rational>>,
}

impl FractionalAssignment {
    pub fn zero(n: usize, m: usize) -> Self {
        FractionalAssignment {
            n,
            m,
            x: vec![vec![Rational::zero(); m]; n],
        }
    }

    pub fn from_matrix(x: Vec<Vec<Rational>>) -> Self {
        let n = x.len();
        let m = x.first().map_or(0, |r| r.len());
        FractionalAssignment { n, m, x }
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.x[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.x[i][j] = v;
    }

    pub fn matrix(&self) -> &Vec<Vec<Rational>> {
        &self.x
    }

    pub fn scale(&self, factor: &Rational) -> FractionalAssignment {
        let x = self
            .x
            .iter()
            .map(|row| row.iter().map(|v| v * factor).collect())
            .collect();
        FractionalAssignment { n: self.n, m: self.m, x }
    }

    /// Fraction of job `i` assigned anywhere.
    pub fn job_total(&self, i: usize) -> Rational {
        rational_sum(self.x[i].iter())
    }

    /// Load placed on machine `j`, in size units.
    pub fn machine_load(&self, j: usize, inst: &Instance) -> Rational {
        (0..self.n)
            .map(|i| inst.size(i, j) * &self.x[i][j])
            .fold(Rational::zero(), |a, v| a + v)
    }

    /// Checks the assignment polytope constraints plus edge membership:
    /// entries in [0, 1], per-job totals at most 1, machine loads within
    /// capacity, and zero outside `edges`.
    pub fn check_feasible(&self, inst: &Instance, edges: &EdgeSet) -> Result<()> {
        if self.n != inst.n || self.m != inst.m {
            return Err(Error::infeasible("fractional assignment", "shape mismatch"));
        }
        let one = Rational::one();
        for i in 0..self.n {
            for j in 0..self.m {
                let v = &self.x[i][j];
                if *v < Rational::zero() || *v > one {
                    return Err(Error::infeasible(
                        "fractional assignment",
                        format!("x({}, {}) outside [0, 1]", i + 1, j + 1),
                    ));
                }
                if !v.is_zero() && !edges.contains(i, j) {
                    return Err(Error::infeasible(
                        "fractional assignment",
                        format!("positive weight on absent edge ({}, {})", i + 1, j + 1),
                    ));
                }
            }
            if self.job_total(i) > one {
                return Err(Error::infeasible(
                    "fractional assignment",
                    format!("job {} assigned more than once", i + 1),
                ));
            }
        }
        for j in 0..self.m {
            if self.machine_load(j, inst) > *inst.capacity(j) {
                return Err(Error::infeasible(
                    "fractional assignment",
                    format!("machine {} over capacity", j + 1),
                ));
            }
        }
        Ok(())
    }

    /// Interprets an exactly 0/1 matrix as an integral assignment.
    pub fn to_assignment(&self) -> Result<Assignment> {
        let mut a = Assignment::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.m {
                let v = &self.x[i][j];
                if v.is_one() {
                    if a.get(i).is_some() {
                        return Err(Error::infeasible("assignment", "job split across machines"));
                    }
                    a.set(i, j);
                } else if !v.is_zero() {
                    return Err(Error::infeasible(
                        "assignment",
                        format!("entry ({}, {}) is fractional", i + 1, j + 1),
                    ));
                }
            }
        }
        Ok(a)
    }
}

/// Total value of a feasible fractional assignment, counted over `edges`.
pub fn welfare(x: &FractionalAssignment, inst: &Instance, edges: &EdgeSet) -> Result<Rational> {
    x.check_feasible(inst, edges)?;
    let mut total = Rational::zero();
    for (i, j) in edges.iter() {
        total += inst.value(i, j) * x.get(i, j);
    }
    Ok(total)
}

/// A finite distribution over integral assignments. Probabilities are exact,
/// positive, and sum to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeLottery {
    support: Vec<(Assignment, Rational)>,
}

impl OutcomeLottery {
    pub fn point_mass(a: Assignment) -> Self {
        OutcomeLottery {
            support: vec![(a, Rational::one())],
        }
    }

    /// Builds a lottery from weighted assignments: merges duplicates, drops
    /// zero weights, and sorts the support by descending probability, then by
    /// assignment. Errors if weights are negative or do not sum to one.
    pub fn from_weighted(entries: impl IntoIterator<Item = (Assignment, Rational)>) -> Result<Self> {
        let mut merged: BTreeMap<Assignment, Rational> = BTreeMap::new();
        for (a, p) in entries {
            if p < Rational::zero() {
                return Err(Error::infeasible("lottery", "negative probability"));
            }
            if p.is_zero() {
                continue;
            }
            *merged.entry(a).or_insert_with(Rational::zero) += p;
        }
        let total = rational_sum(merged.values());
        if !total.is_one() {
            return Err(Error::infeasible(
                "lottery",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        let mut support: Vec<(Assignment, Rational)> = merged.into_iter().collect();
        support.sort_by(|(a1, p1), (a2, p2)| p2.cmp(p1).then_with(|| a1.cmp(a2)));
        Ok(OutcomeLottery { support })
    }

    pub fn support(&self) -> &[(Assignment, Rational)] {
        &self.support
    }

    pub fn check_feasible(&self, inst: &Instance, edges: &EdgeSet) -> Result<()> {
        for (a, _) in &self.support {
            a.check_feasible(inst, edges)?;
        }
        Ok(())
    }

    /// Exact expectation of the assignment matrix.
    pub fn expectation(&self, m: usize) -> FractionalAssignment {
        let n = self.support.first().map_or(0, |(a, _)| a.n());
        let mut x = FractionalAssignment::zero(n, m);
        for (a, p) in &self.support {
            for (i, j) in a.pairs() {
                let v = x.get(i, j) + p;
                x.set(i, j, v);
            }
        }
        x
    }

    pub fn expected_welfare(&self, inst: &Instance, edges: &EdgeSet) -> Result<Rational> {
        let mut total = Rational::zero();
        for (a, p) in &self.support {
            total += a.welfare(inst, edges)? * p;
        }
        Ok(total)
    }
}

/// What a mechanism hands back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Deterministic(Assignment),
    Fractional(FractionalAssignment),
    Randomized(OutcomeLottery),
}

impl Outcome {
    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Deterministic(_) => "assignment",
            Outcome::Fractional(_) => "fractional",
            Outcome::Randomized(_) => "lottery",
        }
    }

    /// Welfare (expected welfare for lotteries) measured against `edges`.
    pub fn welfare(&self, inst: &Instance, edges: &EdgeSet) -> Result<Rational> {
        match self {
            Outcome::Deterministic(a) => a.welfare(inst, edges),
            Outcome::Fractional(x) => welfare(x, inst, edges),
            Outcome::Randomized(l) => l.expected_welfare(inst, edges),
        }
    }
}

/// Utility of `job` under an outcome, counted only over `true_edges`: the
/// value of the assigned machine if the job truly has that edge, else zero.
/// Fractional and randomized outcomes contribute exact (expected) value.
pub fn utility(job: usize, outcome: &Outcome, true_edges: &EdgeSet, inst: &Instance) -> Rational {
    match outcome {
        Outcome::Deterministic(a) => match a.get(job) {
            Some(j) if true_edges.contains(job, j) => inst.value(job, j).clone(),
            _ => Rational::zero(),
        },
        Outcome::Fractional(x) => {
            let mut total = Rational::zero();
            for j in 0..inst.m {
                if true_edges.contains(job, j) {
                    total += inst.value(job, j) * x.get(job, j);
                }
            }
            total
        }
        Outcome::Randomized(l) => {
            let mut total = Rational::zero();
            for (a, p) in l.support() {
                if let Some(j) = a.get(job) {
                    if true_edges.contains(job, j) {
                        total += inst.value(job, j) * p;
                    }
                }
            }
            total
        }
    }
}
