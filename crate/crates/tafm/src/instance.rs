//! Problem instances and edge sets.
//!
//! The public data of an instance is a value matrix, a size matrix, and a
//! capacity vector. The private data is the bipartite compatibility graph: a
//! set of (job, machine) edges. Mechanisms receive the public data plus a
//! *reported* edge set; jobs may report any subset of their row, including
//! edges they do not actually have.
//!
//! Indices are 0-based in memory. The file format (see `io`) is 1-based.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::rational::Rational;

/// Shape classes, ordered from most general to most constrained. Each class
/// constrains the public matrices only; the edge set is free in all of them.
///
/// - `Gap`: no constraints beyond positivity.
/// - `Sigap`: each job's size is machine independent (one s_i per row).
/// - `Vigap`: each job's value is machine independent (one v_i per row).
/// - `Mkp`: both value and size are machine independent.
/// - `Kp`: `Mkp` with a single machine.
/// - `Mwbm`: unit sizes and unit capacities.
/// - `Mbm`: `Mwbm` with unit values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Gap,
    Sigap,
    Vigap,
    Mkp,
    Kp,
    Mwbm,
    Mbm,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Gap => "gap",
            Variant::Sigap => "sigap",
            Variant::Vigap => "vigap",
            Variant::Mkp => "mkp",
            Variant::Kp => "kp",
            Variant::Mwbm => "mwbm",
            Variant::Mbm => "mbm",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(Variant::Gap),
            "sigap" => Ok(Variant::Sigap),
            "vigap" => Ok(Variant::Vigap),
            "mkp" => Ok(Variant::Mkp),
            "kp" => Ok(Variant::Kp),
            "mwbm" => Ok(Variant::Mwbm),
            "mbm" => Ok(Variant::Mbm),
        _ => Err(Error::Format(format!("unknown variant {s:?}"))),
        }
    }

    pub fn all() -> [Variant; 7] {
        [
            Variant::Gap,
            Variant::Sigap,
            Variant::Vigap,
            Variant::Mkp,
            Variant::Kp,
            Variant::Mwbm,
            Variant::Mbm,
        ]
    }
}

/// All (job, machine) pairs of an n-by-m grid in row-major order. This order
/// is the tie-breaker used everywhere in the crate; it depends only on the
/// instance shape, never on reported edges or on any numeric data.
pub fn canonical_edge_order(n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            order.push((i, j));
        }
    }
    order
}

/// A set of (job, machine) edges. Iteration follows the canonical row-major
/// order, so code iterating an `EdgeSet` is deterministic for free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EdgeSet {
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new() -> Self {
        EdgeSet::default()
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        EdgeSet {
            edges: edges.into_iter().collect(),
        }
    }

    /// Every pair of the n-by-m grid.
    pub fn complete(n: usize, m: usize) -> Self {
        EdgeSet::from_edges(canonical_edge_order(n, m))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        self.edges.insert((i, j));
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Machines job `i` has edges to, ascending.
    pub fn machines_of(&self, i: usize) -> Vec<usize> {
        self.edges
            .range((i, 0)..(i + 1, 0))
            .map(|&(_, j)| j)
            .collect()
    }

    /// The slice of this set belonging to job `i`.
    pub fn job_slice(&self, i: usize) -> EdgeSet {
        EdgeSet::from_edges(self.edges.range((i, 0)..(i + 1, 0)).copied())
    }

    /// Everyone else's edges: the set with job `i`'s slice removed.
    pub fn without_job(&self, i: usize) -> EdgeSet {
        EdgeSet::from_edges(self.iter().filter(|&(a, _)| a != i))
    }

    /// Replaces job `i`'s slice with edges to the given machines. This is how
    /// a single job's report is spliced into everyone else's edges.
    pub fn with_job_edges(&self, i: usize, machines: &[usize]) -> EdgeSet {
        let mut out = self.without_job(i);
        for &j in machines {
            out.insert(i, j);
        }
        out
    }

    /// Bitmask over canonical positions; requires n*m <= 64.
    pub fn mask(&self, m: usize) -> u64 {
        let mut mask = 0u64;
        for (i, j) in self.iter() {
            mask |= 1 << (i * m + j);
        }
        mask
    }

    pub fn from_mask(mask: u64, n: usize, m: usize) -> Self {
        let mut edges = EdgeSet::new();
        for i in 0..n {
            for j in 0..m {
                if mask & (1 << (i * m + j)) != 0 {
                    edges.insert(i, j);
                }
            }
        }
        edges
    }
}

impl FromIterator<(usize, usize)> for EdgeSet {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        EdgeSet::from_edges(iter)
    }
}

/// Public data of a problem: values, sizes, capacities, and the shape class
/// the data is expected to satisfy. Construction does not validate; call
/// `validate` before trusting the data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub n: usize,
    pub m: usize,
    pub values: Vec<Vec<Rational>>,
    pub sizes: Vec<Vec<Rational>>,
    pub capacities: Vec<Rational>,
    pub variant: Variant,
}

impl Instance {
    pub fn new(
        values: Vec<Vec<Rational>>,
        sizes: Vec<Vec<Rational>>,
        capacities: Vec<Rational>,
        variant: Variant,
    ) -> Self {
        let n = values.len();
        let m = capacities.len();
        Instance {
            n,
            m,
            values,
            sizes,
            capacities,
            variant,
        }
    }

    pub fn value(&self, i: usize, j: usize) -> &Rational {
        &self.values[i][j]
    }

    pub fn size(&self, i: usize, j: usize) -> &Rational {
        &self.sizes[i][j]
    }

    pub fn capacity(&self, j: usize) -> &Rational {
        &self.capacities[j]
    }

    /// Checks dimensions, positivity, and the structural constraints of the
    /// tagged variant. Returns the first violation found.
    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        self.check_structure(self.variant)
            .map_err(Error::InvalidInstance)
    }

    fn check_shape(&self) -> Result<()> {
        let fail = |field: &str, index: String, constraint: &str| {
            Err(Error::InvalidInstance(Violation {
                field: field.to_string(),
                index,
                constraint: constraint.to_string(),
            }))
        };
        if self.n == 0 {
            return fail("n", "-".into(), "at least one job");
        }
        if self.m == 0 {
            return fail("m", "-".into(), "at least one machine");
        }
        if self.values.len() != self.n {
            return fail("values", "-".into(), "n rows");
        }
        if self.sizes.len() != self.n {
            return fail("sizes", "-".into(), "n rows");
        }
        if self.capacities.len() != self.m {
            return fail("capacities", "-".into(), "m entries");
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != self.m {
                return fail("values", format!("row {}", i + 1), "m entries");
            }
        }
        for (i, row) in self.sizes.iter().enumerate() {
            if row.len() != self.m {
                return fail("sizes", format!("row {}", i + 1), "m entries");
            }
        }
        Ok(())
    }

    /// Structural constraints of `variant` against this instance's data,
    /// independent of the tag the instance carries. Used both by `validate`
    /// and by mechanisms checking that an instance fits their shape class.
    pub fn check_structure(&self, variant: Variant) -> std::result::Result<(), Violation> {
        let one = Rational::from_integer(1.into());
        let violation = |field: &str, index: String, constraint: &str| Violation {
            field: field.to_string(),
            index,
            constraint: constraint.to_string(),
        };
        for i in 0..self.n {
            for j in 0..self.m {
                if self.values[i][j] < Rational::zero() {
                    return Err(violation(
                        "values",
                        format!("({}, {})", i + 1, j + 1),
                        "v >= 0",
                    ));
                }
                if self.sizes[i][j] <= Rational::zero() {
                    return Err(violation(
                        "sizes",
                        format!("({}, {})", i + 1, j + 1),
                        "s > 0",
                    ));
                }
            }
        }
        for j in 0..self.m {
            if self.capacities[j] <= Rational::zero() {
                return Err(violation("capacities", format!("{}", j + 1), "c > 0"));
            }
        }

        let row_constant = |mat: &[Vec<Rational>]| -> Option<usize> {
            (0..self.n).find(|&i| (1..self.m).any(|j| mat[i][j] != mat[i][0]))
        };
        let size_invariant = |field: &str| -> std::result::Result<(), Violation> {
            match row_constant(&self.sizes) {
                Some(i) => Err(violation(
                    field,
                    format!("row {}", i + 1),
                    "machine-independent sizes",
                )),
                None => Ok(()),
            }
        };
        let value_invariant = |field: &str| -> std::result::Result<(), Violation> {
            match row_constant(&self.values) {
                Some(i) => Err(violation(
                    field,
                    format!("row {}", i + 1),
                    "machine-independent values",
                )),
                None => Ok(()),
            }
        };
        let all_unit = |mat: &[Vec<Rational>], field: &str| -> std::result::Result<(), Violation> {
            for i in 0..self.n {
                for j in 0..self.m {
                    if mat[i][j] != one {
                        return Err(violation(
                            field,
                            format!("({}, {})", i + 1, j + 1),
                            "all entries 1",
                        ));
                    }
                }
            }
            Ok(())
        };
        let unit_caps = |field: &str| -> std::result::Result<(), Violation> {
            for j in 0..self.m {
                if self.capacities[j] != one {
                    return Err(violation(field, format!("{}", j + 1), "all capacities 1"));
                }
            }
            Ok(())
        };

        match variant {
            Variant::Gap => Ok(()),
            Variant::Sigap => size_invariant("sizes"),
            Variant::Vigap => value_invariant("values"),
            Variant::Mkp => {
                size_invariant("sizes")?;
                value_invariant("values")
            }
            Variant::Kp => {
                size_invariant("sizes")?;
                value_invariant("values")?;
                if self.m != 1 {
                    return Err(violation("m", "-".into(), "exactly one machine"));
                }
                Ok(())
            }
            Variant::Mwbm => {
                all_unit(&self.sizes, "sizes")?;
                unit_caps("capacities")
            }
            Variant::Mbm => {
                all_unit(&self.sizes, "sizes")?;
                unit_caps("capacities")?;
                all_unit(&self.values, "values")
            }
        }
    }

    /// True when the data satisfies `variant`'s structural constraints,
    /// regardless of the tag. Every `Mbm` instance satisfies `Mwbm`, `Mkp`,
    /// and so on up to `Gap`.
    pub fn satisfies(&self, variant: Variant) -> bool {
        self.check_structure(variant).is_ok()
    }

    /// An edge a single job can never occupy in full: its size on that
    /// machine exceeds the machine's capacity. Such edges are unusable by any
    /// integral assignment, so every mechanism in the crate ignores them.
    /// The filter depends only on public data, never on reports.
    pub fn edge_fits(&self, i: usize, j: usize) -> bool {
        self.sizes[i][j] <= self.capacities[j]
    }

    /// The subset of `edges` a mechanism actually works with: edges whose job
    /// fits on the machine.
    pub fn effective_edges(&self, edges: &EdgeSet) -> EdgeSet {
        edges.iter().filter(|&(i, j)| self.edge_fits(i, j)).collect()
    }
}
