//! Independent oracles used only by tests: small, slow, and written without
//! reference to the production solvers so disagreements mean something.

use num_traits::{One, Signed, Zero};

use crate::lp::LinearProgram;
use crate::rational::Rational;

/// Solves a square linear system by Gaussian elimination. Returns None when
/// the matrix is singular.
pub fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let div = a[col][col].clone();
        for j in col..n {
            a[col][j] /= &div;
        }
        b[col] /= &div;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in col..n {
                let t = &f * &a[col][j];
                a[r][j] -= t;
            }
            let t = &f * &b[col];
            b[r] -= t;
        }
    }
    Some(b)
}

/// All vertices of the polytope {x : constraints, 0 <= x <= upper}, found by
/// intersecting every choice of num_vars defining hyperplanes and keeping the
/// feasible intersection points. Exponential; fine for tiny programs.
pub fn enumerate_vertices(lp: &LinearProgram) -> Vec<Vec<Rational>> {
    let nv = lp.num_vars();
    if nv == 0 {
        return vec![vec![]];
    }
    // Row list: constraints, upper bounds, nonnegativity.
    let mut rows: Vec<(Vec<Rational>, Rational)> = lp.constraints.clone();
    for k in 0..nv {
        let mut a = vec![Rational::zero(); nv];
        a[k] = Rational::one();
        rows.push((a.clone(), lp.upper[k].clone()));
        let neg: Vec<Rational> = a.iter().map(|c| -c.clone()).collect();
        rows.push((neg, Rational::zero()));
    }
    let total = rows.len();
    let mut verts: Vec<Vec<Rational>> = Vec::new();
    let mut choice: Vec<usize> = (0..nv).collect();
    loop {
        let a: Vec<Vec<Rational>> = choice.iter().map(|&r| rows[r].0.clone()).collect();
        let b: Vec<Rational> = choice.iter().map(|&r| rows[r].1.clone()).collect();
        if let Some(x) = solve_square(a, b) {
            if lp.is_feasible(&x) && !verts.contains(&x) {
                verts.push(x);
            }
        }
        // Next combination in lexicographic order.
        let mut i = nv;
        loop {
            if i == 0 {
                return verts;
            }
            i -= 1;
            if choice[i] + 1 <= total - (nv - i) {
                choice[i] += 1;
                for j in i + 1..nv {
                    choice[j] = choice[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Classic fractional knapsack value: items as (value, size), each usable at
/// most once, greedy by density. Optimal for the single-machine relaxation.
pub fn fractional_knapsack(items: &[(Rational, Rational)], capacity: &Rational) -> Rational {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        let da = &items[a].0 / &items[a].1;
        let db = &items[b].0 / &items[b].1;
        db.cmp(&da).then(a.cmp(&b))
    });
    let mut remaining = capacity.clone();
    let mut total = Rational::zero();
    for &k in &order {
        if !remaining.is_positive() {
            break;
        }
        let (v, s) = &items[k];
        if s <= &remaining {
            total += v;
            remaining -= s;
        } else {
            total += v * &remaining / s;
            remaining = Rational::zero();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    #[test]
    fn gaussian_solve_round_trip() {
        let a = vec![
            vec![rat_int(2), rat_int(1)],
            vec![rat_int(1), rat_int(-1)],
        ];
        let b = vec![rat_int(4), rat_int(-1)];
        let x = solve_square(a, b).unwrap();
        assert_eq!(x, vec![rat_int(1), rat_int(2)]);
    }

    #[test]
    fn gaussian_solve_detects_singularity() {
        let a = vec![
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(2), rat_int(2)],
        ];
        assert!(solve_square(a, vec![rat_int(1), rat_int(2)]).is_none());
    }

    #[test]
    fn unit_box_has_four_vertices() {
        let lp = LinearProgram {
            objective: vec![rat_int(0), rat_int(0)],
            constraints: vec![],
            upper: vec![rat_int(1), rat_int(1)],
        };
        let verts = enumerate_vertices(&lp);
        assert_eq!(verts.len(), 4);
    }

    #[test]
    fn knapsack_greedy_splits_final_item() {
        let items = [(rat_int(3), rat(3, 5)), (rat_int(1), rat(3, 5))];
        assert_eq!(fractional_knapsack(&items, &rat_int(1)), rat(11, 3));
    }
}
