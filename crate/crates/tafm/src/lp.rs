//! Exact linear programming over rationals.
//!
//! A dense two-phase primal simplex with Bland's least-index pivot rule.
//! Bland's rule never cycles, and with exact arithmetic every solve
//! terminates at a true optimum. The solver also reports a dual vector read
//! off the final tableau, so callers can check strong duality exactly.
//!
//! Problems are small (tens of rows); a dense tableau is the simplest thing
//! that is obviously correct.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::instance::{EdgeSet, Instance};
use crate::rational::Rational;

/// max objective . x  subject to  a . x <= b per row,  0 <= x_k <= upper_k.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<(Vec<Rational>, Rational)>,
    pub upper: Vec<Rational>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Exact feasibility check of a point against constraints and box.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        for (k, v) in x.iter().enumerate() {
            if v.is_negative() || *v > self.upper[k] {
                return false;
            }
        }
        self.constraints.iter().all(|(a, b)| {
            let lhs: Rational = a.iter().zip(x).map(|(c, v)| c * v).sum();
            lhs <= *b
        })
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. `dual` has one multiplier per constraint row followed by
/// one per variable upper bound, all nonnegative at an optimum; together with
/// `point` it satisfies strong duality exactly.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub point: Vec<Rational>,
    pub objective_value: Rational,
    pub dual: Vec<Rational>,
}

const PIVOT_CAP: usize = 200_000;

struct Tableau {
    // rows[r] has ncols coefficient entries plus the rhs at index ncols.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
    allowed: Vec<bool>,
    // Objective row: z[j] = c_B B^-1 A_j - c_j, z[ncols] = current value.
    z: Vec<Rational>,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rational {
        &self.rows[r][self.ncols]
    }

    fn recompute_z(&mut self, costs: &[Rational]) {
        let ncols = self.ncols;
        let mut z = vec![Rational::zero(); ncols + 1];
        for (j, zj) in z.iter_mut().enumerate().take(ncols) {
            *zj -= &costs[j];
        }
        for r in 0..self.rows.len() {
            let cb = costs[self.basis[r]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=ncols {
                let t = &cb * &self.rows[r][j];
                z[j] += t;
            }
        }
        // Basic columns must price to exactly zero.
        for r in 0..self.rows.len() {
            z[self.basis[r]] = Rational::zero();
        }
        self.z = z;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let ncols = self.ncols;
        let piv = self.rows[r][c].clone();
        for j in 0..=ncols {
            self.rows[r][j] /= &piv;
        }
        for rr in 0..self.rows.len() {
            if rr == r || self.rows[rr][c].is_zero() {
                continue;
            }
            let factor = self.rows[rr][c].clone();
            for j in 0..=ncols {
                let t = &factor * &self.rows[r][j];
                self.rows[rr][j] -= t;
            }
            self.rows[rr][c] = Rational::zero();
        }
        if !self.z[c].is_zero() {
            let factor = self.z[c].clone();
            for j in 0..=ncols {
                let t = &factor * &self.rows[r][j];
                self.z[j] -= t;
            }
            self.z[c] = Rational::zero();
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Bland's rule: enter the smallest-index improving column, leave by the
    /// minimum ratio with the smallest basic index on ties.
    fn run_simplex(&mut self) -> Result<()> {
        loop {
            if self.pivots > PIVOT_CAP {
                return Err(Error::IterationCap("simplex".to_string()));
            }
            let entering = (0..self.ncols)
                .find(|&j| self.allowed[j] && self.z[j].is_negative());
            let c = match entering {
                Some(c) => c,
                None => return Ok(()),
            };
            let mut leave: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                if !self.rows[r][c].is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / &self.rows[r][c];
                match &leave {
                    None => leave = Some((r, ratio)),
                    Some((best_r, best)) => {
                        if ratio < *best
                            || (ratio == *best && self.basis[r] < self.basis[*best_r])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Err(Error::LpUnbounded),
            }
        }
    }
}

/// Solves the program exactly. Variable bounds are folded in as ordinary
/// rows, so the dual covers constraint rows first, then bound rows.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    let nv = lp.num_vars();
    // Augment: original constraints then one bound row per variable.
    let mut rows_a: Vec<(Vec<Rational>, Rational)> = lp.constraints.clone();
    for k in 0..nv {
        let mut a = vec![Rational::zero(); nv];
        a[k] = Rational::one();
        rows_a.push((a, lp.upper[k].clone()));
    }
    let p = rows_a.len();

    let negated: Vec<bool> = rows_a.iter().map(|(_, b)| b.is_negative()).collect();
    let n_art = negated.iter().filter(|&&x| x).count();
    let ncols = nv + p + n_art;

    let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(p);
    let mut basis = Vec::with_capacity(p);
    let mut art_cols = Vec::new();
    let mut next_art = nv + p;
    for (r, (a, b)) in rows_a.iter().enumerate() {
        let mut row = vec![Rational::zero(); ncols + 1];
        let flip = negated[r];
        for (k, coeff) in a.iter().enumerate() {
            row[k] = if flip { -coeff.clone() } else { coeff.clone() };
        }
        row[nv + r] = if flip { -Rational::one() } else { Rational::one() };
        row[ncols] = if flip { -b.clone() } else { b.clone() };
        if flip {
            row[next_art] = Rational::one();
            basis.push(next_art);
            art_cols.push(next_art);
            next_art += 1;
        } else {
            basis.push(nv + r);
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        basis,
        ncols,
        allowed: vec![true; ncols],
        z: vec![],
        pivots: 0,
    };

    if n_art > 0 {
        // Phase 1: drive the artificials to zero.
        let mut costs = vec![Rational::zero(); ncols];
        for &c in &art_cols {
            costs[c] = -Rational::one();
        }
        t.recompute_z(&costs);
        t.run_simplex()?;
        if t.z[ncols].is_negative() {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                point: vec![],
                objective_value: Rational::zero(),
                dual: vec![],
            });
        }
        // Evict artificials still in the basis; rows with no usable entry
        // are redundant and stay inert (their artificial is pinned at zero
        // and every allowed coefficient in the row is zero).
        for &c in &art_cols {
            t.allowed[c] = false;
        }
        for r in 0..t.rows.len() {
            if t.basis[r] >= nv + p {
                let q = (0..nv + p).find(|&q| t.allowed[q] && !t.rows[r][q].is_zero());
                if let Some(q) = q {
                    t.pivot(r, q);
                }
            }
        }
    }

    // Phase 2 with the real objective.
    let mut costs = vec![Rational::zero(); ncols];
    costs[..nv].clone_from_slice(&lp.objective);
    t.recompute_z(&costs);
    match t.run_simplex() {
        Ok(()) => {}
        Err(Error::LpUnbounded) => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                point: vec![],
                objective_value: Rational::zero(),
                dual: vec![],
            })
        }
        Err(e) => return Err(e),
    }

    let mut point = vec![Rational::zero(); nv];
    for r in 0..t.rows.len() {
        if t.basis[r] < nv {
            point[t.basis[r]] = t.rhs(r).clone();
        }
    }
    // The dual of row i is the reduced cost of its slack column; the sign
    // convention works out identically for phase-1-negated rows.
    let dual: Vec<Rational> = (0..p).map(|i| t.z[nv + i].clone()).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        point,
        objective_value: t.z[ncols].clone(),
        dual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexSense {
    Minimal,
    Maximal,
}

/// Among the optimal points of `lp`, selects the one whose coordinate vector
/// is lexicographically extremal in the given variable order: the objective
/// is pinned at its optimum (an equality written as two inequalities), then
/// each coordinate in turn is pushed to its extreme and pinned.
///
/// The returned solution carries the refined point, the *original* optimal
/// objective value, and the original solve's dual.
pub fn lex_refine(lp: &LinearProgram, order: &[usize], sense: LexSense) -> Result<LpSolution> {
    let base = solve_lp(lp)?;
    if base.status != LpStatus::Optimal {
        return Ok(base);
    }
    let nv = lp.num_vars();
    let mut constraints = lp.constraints.clone();
    let neg = |v: &[Rational]| -> Vec<Rational> { v.iter().map(|c| -c.clone()).collect() };
    constraints.push((lp.objective.clone(), base.objective_value.clone()));
    constraints.push((neg(&lp.objective), -base.objective_value.clone()));

    let mut point = base.point.clone();
    for &k in order {
        let mut obj = vec![Rational::zero(); nv];
        obj[k] = match sense {
            LexSense::Maximal => Rational::one(),
            LexSense::Minimal => -Rational::one(),
        };
        let sub = LinearProgram {
            objective: obj,
            constraints: constraints.clone(),
            upper: lp.upper.clone(),
        };
        let sol = solve_lp(&sub)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::infeasible(
                "lexicographic refinement",
                "pinned program lost feasibility",
            ));
        }
        let pinned = sol.point[k].clone();
        let mut unit = vec![Rational::zero(); nv];
        unit[k] = Rational::one();
        constraints.push((unit.clone(), pinned.clone()));
        constraints.push((neg(&unit), -pinned));
        point = sol.point;
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        point,
        objective_value: base.objective_value,
        dual: base.dual,
    })
}

/// The assignment LP for an instance and reported edge set, with one
/// variable per usable edge in canonical order. Rows are laid out as the n
/// per-job constraints (total fraction at most 1) followed by the m machine
/// capacity constraints; every variable has the box [0, 1].
///
/// Edges whose size exceeds the machine capacity get no variable: no
/// integral assignment can use them, and leaving them out keeps the
/// polytope's integral points within a factor two of any fractional point.
#[derive(Debug, Clone)]
pub struct GapLp {
    pub lp: LinearProgram,
    /// Variable index -> (job, machine), in canonical order.
    pub vars: Vec<(usize, usize)>,
    pub n: usize,
    pub m: usize,
}

impl GapLp {
    /// Replaces the objective with per-edge coefficients from a matrix.
    pub fn with_objective(&self, coeff: &[Vec<Rational>]) -> LinearProgram {
        let objective = self
            .vars
            .iter()
            .map(|&(i, j)| coeff[i][j].clone())
            .collect();
        LinearProgram {
            objective,
            constraints: self.lp.constraints.clone(),
            upper: self.lp.upper.clone(),
        }
    }

    /// Expands an LP point into a full n-by-m matrix.
    pub fn point_to_matrix(&self, point: &[Rational]) -> Vec<Vec<Rational>> {
        let mut x = vec![vec![Rational::zero(); self.m]; self.n];
        for (k, &(i, j)) in self.vars.iter().enumerate() {
            x[i][j] = point[k].clone();
        }
        x
    }
}

pub fn build_gap_lp(inst: &Instance, edges: &EdgeSet) -> GapLp {
    build_gap_lp_inner(inst, &inst.effective_edges(edges))
}

/// Same LP but keeping every reported edge, including ones no integral
/// assignment can use. Only test oracles want this.
pub fn build_gap_lp_unfiltered(inst: &Instance, edges: &EdgeSet) -> GapLp {
    build_gap_lp_inner(inst, edges)
}

fn build_gap_lp_inner(inst: &Instance, edges: &EdgeSet) -> GapLp {
    let vars: Vec<(usize, usize)> = edges.iter().collect();
    let nv = vars.len();
    let objective: Vec<Rational> = vars.iter().map(|&(i, j)| inst.value(i, j).clone()).collect();
    let mut constraints = Vec::with_capacity(inst.n + inst.m);
    for i in 0..inst.n {
        let mut a = vec![Rational::zero(); nv];
        for (k, &(vi, _)) in vars.iter().enumerate() {
            if vi == i {
                a[k] = Rational::one();
            }
        }
        constraints.push((a, Rational::one()));
    }
    for j in 0..inst.m {
        let mut a = vec![Rational::zero(); nv];
        for (k, &(vi, vj)) in vars.iter().enumerate() {
            if vj == j {
                a[k] = inst.size(vi, vj).clone();
            }
        }
        constraints.push((a, inst.capacity(j).clone()));
    }
    GapLp {
        lp: LinearProgram {
            objective,
            constraints,
            upper: vec![Rational::one(); nv],
        },
        vars,
        n: inst.n,
        m: inst.m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Variant;
    use crate::rational::{rat, rat_int};
    use crate::testutil::{enumerate_vertices, fractional_knapsack};

    fn assert_certified(lp: &LinearProgram, sol: &LpSolution) {
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(lp.is_feasible(&sol.point), "primal point infeasible");
        assert_eq!(lp.objective_value(&sol.point), sol.objective_value);
        // Dual feasibility over constraint rows then bound rows.
        let nv = lp.num_vars();
        let p = lp.constraints.len() + nv;
        assert_eq!(sol.dual.len(), p);
        for y in &sol.dual {
            assert!(!y.is_negative(), "negative dual multiplier");
        }
        for k in 0..nv {
            let mut lhs = Rational::zero();
            for (r, (a, _)) in lp.constraints.iter().enumerate() {
                lhs += &sol.dual[r] * &a[k];
            }
            lhs += &sol.dual[lp.constraints.len() + k];
            assert!(
                lhs >= lp.objective[k],
                "dual constraint violated at variable {k}"
            );
        }
        let mut dual_value = Rational::zero();
        for (r, (_, b)) in lp.constraints.iter().enumerate() {
            dual_value += &sol.dual[r] * b;
        }
        for k in 0..nv {
            dual_value += &sol.dual[lp.constraints.len() + k] * &lp.upper[k];
        }
        assert_eq!(dual_value, sol.objective_value, "duality gap");
    }

    #[test]
    fn maximizes_simple_program() {
        let lp = LinearProgram {
            objective: vec![rat_int(2), rat_int(1)],
            constraints: vec![(vec![rat_int(1), rat_int(1)], rat_int(1))],
            upper: vec![rat_int(1), rat_int(1)],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.point, vec![rat_int(1), rat_int(0)]);
        assert_eq!(sol.objective_value, rat_int(2));
        assert_certified(&lp, &sol);
    }

    #[test]
    fn zero_variable_program_is_trivial() {
        let lp = LinearProgram {
            objective: vec![],
            constraints: vec![(vec![], rat_int(1))],
            upper: vec![],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.objective_value, rat_int(0));
    }

    #[test]
    fn detects_infeasibility() {
        // x >= 2 against the box [0, 1].
        let lp = LinearProgram {
            objective: vec![rat_int(1)],
            constraints: vec![(vec![rat_int(-1)], rat_int(-2))],
            upper: vec![rat_int(1)],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn handles_negative_rhs_with_phase_one() {
        // x1 + x2 >= 1, minimize-ish via max of -x1: optimum x = (0, 1).
        let lp = LinearProgram {
            objective: vec![rat_int(-1), rat_int(0)],
            constraints: vec![(vec![rat_int(-1), rat_int(-1)], rat_int(-1))],
            upper: vec![rat_int(1), rat_int(1)],
        };
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.objective_value, rat_int(0));
        assert_eq!(sol.point[0], rat_int(0));
        assert_certified(&lp, &sol);
    }

    fn knapsack_instance() -> (Instance, EdgeSet) {
        let inst = Instance::new(
            vec![vec![rat_int(3)], vec![rat_int(1)]],
            vec![vec![rat(3, 5)], vec![rat(3, 5)]],
            vec![rat_int(1)],
            Variant::Kp,
        );
        (inst, EdgeSet::complete(2, 1))
    }

    #[test]
    fn knapsack_lp_matches_greedy_oracle() {
        let (inst, edges) = knapsack_instance();
        let gap = build_gap_lp(&inst, &edges);
        let sol = solve_lp(&gap.lp).unwrap();
        assert_certified(&gap.lp, &sol);
        assert_eq!(sol.point, vec![rat_int(1), rat(2, 3)]);
        assert_eq!(sol.objective_value, rat(11, 3));

        let oracle = fractional_knapsack(
            &[(rat_int(3), rat(3, 5)), (rat_int(1), rat(3, 5))],
            &rat_int(1),
        );
        assert_eq!(sol.objective_value, oracle);
    }

    #[test]
    fn knapsack_lp_matches_vertex_enumeration() {
        let (inst, edges) = knapsack_instance();
        let gap = build_gap_lp(&inst, &edges);
        let verts = enumerate_vertices(&gap.lp);
        assert!(!verts.is_empty());
        let best = verts
            .iter()
            .map(|v| gap.lp.objective_value(v))
            .max()
            .unwrap();
        let sol = solve_lp(&gap.lp).unwrap();
        assert_eq!(sol.objective_value, best);
    }

    #[test]
    fn empty_edge_set_gives_zero_program() {
        let (inst, _) = knapsack_instance();
        let gap = build_gap_lp(&inst, &EdgeSet::new());
        assert_eq!(gap.vars.len(), 0);
        let sol = solve_lp(&gap.lp).unwrap();
        assert_eq!(sol.objective_value, rat_int(0));
    }

    #[test]
    fn gap_lp_has_expected_shape() {
        let (inst, edges) = knapsack_instance();
        let gap = build_gap_lp(&inst, &edges);
        // Two job rows plus one machine row; box bounds are separate.
        assert_eq!(gap.lp.constraints.len(), 3);
        assert_eq!(gap.vars, vec![(0, 0), (1, 0)]);
        assert_eq!(gap.lp.upper, vec![rat_int(1), rat_int(1)]);
    }

    #[test]
    fn gap_lp_drops_oversized_edges() {
        let inst = Instance::new(
            vec![vec![rat_int(9), rat_int(1)]],
            vec![vec![rat_int(3), rat_int(1)]],
            vec![rat_int(2), rat_int(2)],
            Variant::Gap,
        );
        let gap = build_gap_lp(&inst, &EdgeSet::complete(1, 2));
        assert_eq!(gap.vars, vec![(0, 1)]);
        let unfiltered = build_gap_lp_unfiltered(&inst, &EdgeSet::complete(1, 2));
        assert_eq!(unfiltered.vars.len(), 2);
    }

    #[test]
    fn lex_refine_is_identity_on_unique_optimum() {
        let (inst, edges) = knapsack_instance();
        let gap = build_gap_lp(&inst, &edges);
        let order: Vec<usize> = (0..gap.vars.len()).collect();
        let refined = lex_refine(&gap.lp, &order, LexSense::Minimal).unwrap();
        assert_eq!(refined.point, vec![rat_int(1), rat(2, 3)]);
        assert_eq!(refined.objective_value, rat(11, 3));
    }

    #[test]
    fn lex_refine_breaks_ties_coordinatewise() {
        // Two identical unit jobs on one unit machine: both corners are
        // optimal; minimal refinement pins x1 to 0, forcing (0, 1).
        let inst = Instance::new(
            vec![vec![rat_int(1)], vec![rat_int(1)]],
            vec![vec![rat_int(1)], vec![rat_int(1)]],
            vec![rat_int(1)],
            Variant::Kp,
        );
        let gap = build_gap_lp(&inst, &EdgeSet::complete(2, 1));
        let order: Vec<usize> = (0..2).collect();
        let minimal = lex_refine(&gap.lp, &order, LexSense::Minimal).unwrap();
        assert_eq!(minimal.point, vec![rat_int(0), rat_int(1)]);
        assert_eq!(minimal.objective_value, rat_int(1));
        let maximal = lex_refine(&gap.lp, &order, LexSense::Maximal).unwrap();
        assert_eq!(maximal.point, vec![rat_int(1), rat_int(0)]);
    }

    #[test]
    fn lex_refine_minimum_matches_vertex_oracle() {
        // Independent route: enumerate polytope vertices, keep the optimal
        // ones, compare coordinate vectors directly.
        let inst = Instance::new(
            vec![
                vec![rat_int(1), rat_int(1)],
                vec![rat_int(1), rat_int(1)],
            ],
            vec![vec![rat_int(1); 2]; 2],
            vec![rat_int(1), rat_int(1)],
            Variant::Mwbm,
        );
        let gap = build_gap_lp(&inst, &EdgeSet::complete(2, 2));
        let sol = solve_lp(&gap.lp).unwrap();
        let verts = enumerate_vertices(&gap.lp);
        let optimal: Vec<_> = verts
            .into_iter()
            .filter(|v| gap.lp.objective_value(v) == sol.objective_value)
            .collect();
        assert!(optimal.len() >= 2, "expected a tied optimum");
        let lex_min = optimal
            .iter()
            .min_by(|a, b| {
                a.iter()
                    .zip(b.iter())
                    .find_map(|(x, y)| if x != y { Some(x.cmp(y)) } else { None })
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let order: Vec<usize> = (0..gap.vars.len()).collect();
        let refined = lex_refine(&gap.lp, &order, LexSense::Minimal).unwrap();
        assert_eq!(&refined.point, lex_min);
    }

    #[test]
    fn duality_holds_across_random_gap_programs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=3);
            let values: Vec<Vec<Rational>> = (0..n)
                .map(|_| (0..m).map(|_| rat_int(rng.gen_range(0..=4))).collect())
                .collect();
            let sizes: Vec<Vec<Rational>> = (0..n)
                .map(|_| (0..m).map(|_| rat_int(rng.gen_range(1..=2))).collect())
                .collect();
            let caps: Vec<Rational> = (0..m).map(|_| rat_int(rng.gen_range(1..=3))).collect();
            let inst = Instance::new(values, sizes, caps, Variant::Gap);
            let mut edges = EdgeSet::new();
            for i in 0..n {
                for j in 0..m {
                    if rng.gen_bool(0.7) {
                        edges.insert(i, j);
                    }
                }
            }
            let gap = build_gap_lp(&inst, &edges);
            let sol = solve_lp(&gap.lp).unwrap();
            assert_certified(&gap.lp, &sol);
        }
    }
}
