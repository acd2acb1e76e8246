//! Circulation networks over assignment instances.
//!
//! A fractional assignment corresponds to a circulation on a four-layer
//! network (source, jobs, machines, sink, plus a return edge), with weights
//! arranged so that circulation weight equals assignment welfare. The
//! difference of two feasible circulations decomposes into sign-conformal
//! flow cycles, and adding any subset of those cycles to the first
//! circulation stays feasible; both facts are checked exactly here and
//! leaned on by the mechanism tests.

use num_traits::{Signed, Zero};

use crate::assignment::FractionalAssignment;
use crate::error::{Error, Result, Violation};
use crate::instance::{EdgeSet, Instance, Variant};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Mkp,
    Sigap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Node {
    Source,
    Job(usize),
    Machine(usize),
    Sink,
}

#[derive(Debug, Clone)]
pub struct FlowEdge {
    pub from: Node,
    pub to: Node,
    pub weight: Rational,
    /// None is an uncapacitated edge.
    pub capacity: Option<Rational>,
}

/// Network layout, in deterministic edge order: source->job edges by job,
/// job->machine edges in canonical order over the edge set, machine->sink
/// edges by machine, and the return edge last.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub kind: NetworkKind,
    pub n: usize,
    pub m: usize,
    pub edges: Vec<FlowEdge>,
    /// Row size per job (machine independent in both builds).
    sizes: Vec<Rational>,
    assign_edges: Vec<((usize, usize), usize)>,
}

/// Flow value per edge, parallel to `FlowNetwork::edges`. May be negative
/// (differences of circulations are circulations).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circulation {
    pub flow: Vec<Rational>,
}

impl Circulation {
    pub fn zero(net: &FlowNetwork) -> Self {
        Circulation {
            flow: vec![Rational::zero(); net.edges.len()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.flow.iter().all(|f| f.is_zero())
    }

    pub fn add(&self, other: &Circulation) -> Circulation {
        Circulation {
            flow: self
                .flow
                .iter()
                .zip(&other.flow)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Circulation) -> Circulation {
        Circulation {
            flow: self
                .flow
                .iter()
                .zip(&other.flow)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl FlowNetwork {
    fn node_index(&self, node: Node) -> usize {
        match node {
            Node::Source => 0,
            Node::Job(i) => 1 + i,
            Node::Machine(j) => 1 + self.n + j,
            Node::Sink => 1 + self.n + self.m,
        }
    }

    pub fn node_count(&self) -> usize {
        2 + self.n + self.m
    }

    pub fn assignment_edge(&self, i: usize, j: usize) -> Option<usize> {
        self.assign_edges
            .iter()
            .find(|&&(e, _)| e == (i, j))
            .map(|&(_, idx)| idx)
    }

    /// Net outflow minus inflow is zero at every node.
    pub fn is_conserving(&self, f: &Circulation) -> bool {
        let mut net = vec![Rational::zero(); self.node_count()];
        for (e, flow) in self.edges.iter().zip(&f.flow) {
            net[self.node_index(e.from)] += flow;
            net[self.node_index(e.to)] -= flow;
        }
        net.iter().all(|v| v.is_zero())
    }

    /// Conservation plus the box 0 <= f(e) <= c_e.
    pub fn is_feasible(&self, f: &Circulation) -> bool {
        if !self.is_conserving(f) {
            return false;
        }
        self.edges.iter().zip(&f.flow).all(|(e, flow)| {
            !flow.is_negative() && e.capacity.as_ref().is_none_or(|c| flow <= c)
        })
    }

    pub fn weight_of(&self, f: &Circulation) -> Rational {
        self.edges
            .iter()
            .zip(&f.flow)
            .map(|(e, flow)| &e.weight * flow)
            .sum()
    }
}

/// Builds the circulation network for a size-invariant instance. The MKP
/// build carries job value density on the source edges; the size-invariant
/// build carries per-edge density v_ij/s_i on the job->machine edges. In
/// both, a feasible assignment maps to a feasible circulation of weight
/// equal to its welfare.
pub fn build_network(inst: &Instance, edges: &EdgeSet, kind: NetworkKind) -> Result<FlowNetwork> {
    let required = match kind {
        NetworkKind::Mkp => Variant::Mkp,
        NetworkKind::Sigap => Variant::Sigap,
    };
    if let Err(v) = inst.check_structure(required) {
        return Err(Error::InvalidInstance(Violation {
            field: v.field,
            index: v.index,
            constraint: format!("{} (for the {:?} network)", v.constraint, kind),
        }));
    }
    let sizes: Vec<Rational> = (0..inst.n).map(|i| inst.size(i, 0).clone()).collect();
    let mut net_edges = Vec::new();
    for (i, s_i) in sizes.iter().enumerate() {
        let weight = match kind {
            NetworkKind::Mkp => inst.value(i, 0) / s_i,
            NetworkKind::Sigap => Rational::zero(),
        };
        net_edges.push(FlowEdge {
            from: Node::Source,
            to: Node::Job(i),
            weight,
            capacity: Some(s_i.clone()),
        });
    }
    let mut assign_edges = Vec::new();
    for (i, j) in edges.iter() {
        let weight = match kind {
            NetworkKind::Mkp => Rational::zero(),
            NetworkKind::Sigap => inst.value(i, j) / &sizes[i],
        };
        assign_edges.push(((i, j), net_edges.len()));
        net_edges.push(FlowEdge {
            from: Node::Job(i),
            to: Node::Machine(j),
            weight,
            capacity: None,
        });
    }
    for j in 0..inst.m {
        net_edges.push(FlowEdge {
            from: Node::Machine(j),
            to: Node::Sink,
            weight: Rational::zero(),
            capacity: Some(inst.capacity(j).clone()),
        });
    }
    net_edges.push(FlowEdge {
        from: Node::Sink,
        to: Node::Source,
        weight: Rational::zero(),
        capacity: None,
    });
    Ok(FlowNetwork {
        kind,
        n: inst.n,
        m: inst.m,
        edges: net_edges,
        sizes,
        assign_edges,
    })
}

/// f_x: the job->machine edge (i, j) carries x_ij * s_i, and the remaining
/// edges carry the implied totals.
pub fn assignment_to_circulation(x: &FractionalAssignment, net: &FlowNetwork) -> Result<Circulation> {
    if x.n != net.n || x.m != net.m {
        return Err(Error::infeasible("circulation", "shape mismatch"));
    }
    let mut flow = vec![Rational::zero(); net.edges.len()];
    let mut total = Rational::zero();
    for &((i, j), idx) in &net.assign_edges {
        let units = x.get(i, j) * &net.sizes[i];
        flow[idx] = units;
    }
    for i in 0..net.n {
        // Source edges come first, one per job.
        let mut out = Rational::zero();
        for &((vi, _), idx) in &net.assign_edges {
            if vi == i {
                out += &flow[idx];
            }
        }
        flow[i] = out;
    }
    for j in 0..net.m {
        let mut into = Rational::zero();
        for &((_, vj), idx) in &net.assign_edges {
            if vj == j {
                into += &flow[idx];
            }
        }
        total += &into;
        let sink_idx = net.n + net.assign_edges.len() + j;
        flow[sink_idx] = into;
    }
    let ret = net.edges.len() - 1;
    flow[ret] = total;
    Ok(Circulation { flow })
}

/// Inverse of `assignment_to_circulation`. Rejects circulations that do not
/// conserve flow or violate edge capacities.
pub fn circulation_to_assignment(f: &Circulation, net: &FlowNetwork) -> Result<FractionalAssignment> {
    if f.flow.len() != net.edges.len() {
        return Err(Error::infeasible("circulation", "edge count mismatch"));
    }
    if !net.is_feasible(f) {
        return Err(Error::infeasible(
            "circulation",
            "not a feasible conserving circulation",
        ));
    }
    let mut x = FractionalAssignment::zero(net.n, net.m);
    for &((i, j), idx) in &net.assign_edges {
        x.set(i, j, &f.flow[idx] / &net.sizes[i]);
    }
    Ok(x)
}

/// Splits a conserving (possibly negative) flow into at most |edges| flow
/// cycles: each cycle is itself a circulation supported on one simple cycle,
/// the cycles sum to the input exactly, and every cycle agrees in sign with
/// the input on every edge it uses.
pub fn conformal_decompose(delta: &Circulation, net: &FlowNetwork) -> Result<Vec<Circulation>> {
    if delta.flow.len() != net.edges.len() {
        return Err(Error::infeasible("decomposition", "edge count mismatch"));
    }
    if !net.is_conserving(delta) {
        return Err(Error::infeasible("decomposition", "input does not conserve flow"));
    }
    let mut residual = delta.flow.clone();
    let mut cycles = Vec::new();
    loop {
        let start = match residual.iter().position(|f| !f.is_zero()) {
            Some(e) => e,
            None => return Ok(cycles),
        };
        if cycles.len() > net.edges.len() {
            return Err(Error::IterationCap("conformal decomposition".to_string()));
        }
        // Walk sign-consistent edges until a node repeats. An edge with
        // positive residual is traversed forward, negative backward;
        // conservation of the residual guarantees the walk never gets stuck.
        let leaves = |e: usize, u: usize, residual: &[Rational]| -> bool {
            let edge = &net.edges[e];
            if residual[e].is_positive() {
                net.node_index(edge.from) == u
            } else if residual[e].is_negative() {
                net.node_index(edge.to) == u
            } else {
                false
            }
        };
        let head = |e: usize, residual: &[Rational]| -> usize {
            let edge = &net.edges[e];
            if residual[e].is_positive() {
                net.node_index(edge.to)
            } else {
                net.node_index(edge.from)
            }
        };
        let mut path: Vec<usize> = vec![start];
        let mut seen_at: Vec<Option<usize>> = vec![None; net.node_count()];
        let tail = {
            let edge = &net.edges[start];
            if residual[start].is_positive() {
                net.node_index(edge.from)
            } else {
                net.node_index(edge.to)
            }
        };
        seen_at[tail] = Some(0);
        let cycle_edges: Vec<usize>;
        loop {
            let u = head(*path.last().unwrap(), &residual);
            if let Some(k) = seen_at[u] {
                cycle_edges = path[k..].to_vec();
                break;
            }
            seen_at[u] = Some(path.len());
            let next = (0..net.edges.len())
                .find(|&e| leaves(e, u, &residual))
                .ok_or_else(|| {
                    Error::infeasible("decomposition", "walk stuck at a conserving node")
                })?;
            path.push(next);
        }
        let bottleneck = cycle_edges
            .iter()
            .map(|&e| residual[e].abs())
            .min()
            .expect("cycle is nonempty");
        let mut cycle_flow = vec![Rational::zero(); net.edges.len()];
        for &e in &cycle_edges {
            let signed = if residual[e].is_positive() {
                bottleneck.clone()
            } else {
                -bottleneck.clone()
            };
            residual[e] -= &signed;
            cycle_flow[e] = signed;
        }
        cycles.push(Circulation { flow: cycle_flow });
    }
}

/// Is f plus the selected subset of cycles still feasible? For any
/// conformal decomposition of f' - f with both endpoints feasible, this
/// holds for every subset; tests call it exhaustively.
pub fn check_prefix_feasibility(
    f: &Circulation,
    cycles: &[Circulation],
    selection: &[usize],
    net: &FlowNetwork,
) -> bool {
    let mut g = f.clone();
    for &l in selection {
        g = g.add(&cycles[l]);
    }
    net.is_feasible(&g)
}
