//! Best-first branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::model::{IpModel, LinExpr, VarId, VarKind};
use super::simplex::{solve_lp, LpProblem, LpResult};

pub const INT_TOL: f64 = 1e-6;
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    /// Wall-clock limit. Hitting it makes the result depend on machine speed;
    /// use `node_limit` when reproducibility matters.
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    /// A known feasible assignment used as the starting incumbent.
    pub incumbent: Option<Vec<f64>>,
}

impl SolveOptions {
    pub fn with_time_limit(limit: Duration) -> Self {
        SolveOptions { time_limit: Some(limit), ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// A limit stopped the search; `values` is the best incumbent and `gap`
    /// bounds its distance from the optimum.
    TimeLimitIncumbent,
}

#[derive(Clone, Debug)]
pub struct IpSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
    pub nodes: usize,
    /// LP relaxation value at the root.
    pub root_bound: f64,
}

impl IpSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn is_set(&self, v: VarId) -> bool {
        self.values[v.0] > 0.5
    }

    pub fn has_assignment(&self) -> bool {
        self.status != SolveStatus::Infeasible
    }

    fn infeasible(nodes: usize, root_bound: f64) -> Self {
        IpSolution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective: f64::INFINITY,
            gap: 0.0,
            nodes,
            root_bound,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("model is unbounded")]
    Unbounded,
    #[error("search limit reached after {nodes} nodes without a feasible solution")]
    NoIncumbent { nodes: usize },
    #[error("LP relaxation failed to converge")]
    Numerical,
    #[error("supplied incumbent is infeasible (violation {0})")]
    BadIncumbent(f64),
}

struct Node {
    bound: f64,
    id: u64,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smaller bound first, then older node first
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

enum Frontier {
    /// depth-first while no incumbent exists
    Dive(Vec<Node>),
    Best(BinaryHeap<Node>),
}

impl Frontier {
    fn push(&mut self, n: Node) {
        match self {
            Frontier::Dive(v) => v.push(n),
            Frontier::Best(h) => h.push(n),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Frontier::Dive(v) => v.pop(),
            Frontier::Best(h) => h.pop(),
        }
    }

    fn to_best(&mut self) {
        if let Frontier::Dive(v) = self {
            *self = Frontier::Best(std::mem::take(v).into_iter().collect());
        }
    }

    fn min_bound(&self) -> f64 {
        match self {
            Frontier::Dive(v) => v.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min),
            Frontier::Best(h) => h.peek().map_or(f64::INFINITY, |n| n.bound),
        }
    }
}

/// Step by which any two integer-feasible objective values differ, when the
/// objective only touches binaries with commensurable integer coefficients.
fn objective_step(model: &IpModel) -> Option<f64> {
    let mut g: u64 = 0;
    for (v, c) in model.objective().terms() {
        if model.variable(v).kind != VarKind::Binary {
            return None;
        }
        let r = c.round();
        if (c - r).abs() > 1e-9 || r.abs() > 1e12 {
            return None;
        }
        g = gcd(g, r.abs() as u64);
    }
    (g > 0).then_some(g as f64)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact branch-and-bound solve. Branches on the most fractional binary
/// (lowest index on ties); continuous variables are never branched on.
pub fn solve(model: &IpModel, options: &SolveOptions) -> Result<IpSolution, SolveError> {
    let start = Instant::now();
    let problem = LpProblem::from_model(model);
    let base_lo: Vec<f64> = model.variables().iter().map(|v| v.lo).collect();
    let base_hi: Vec<f64> = model.variables().iter().map(|v| v.hi).collect();
    let binaries: Vec<usize> = model
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(i, _)| i)
        .collect();

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    if let Some(start_values) = &options.incumbent {
        let (viol, integral) = model.check(start_values, INT_TOL);
        if viol > FEAS_TOL || !integral || start_values.len() != model.num_vars() {
            return Err(SolveError::BadIncumbent(viol));
        }
        let mut vals = start_values.clone();
        for &b in &binaries {
            vals[b] = vals[b].round();
        }
        let obj = model.objective().eval(&vals);
        incumbent = Some((vals, obj));
    }

    let root_bound = match solve_lp(&problem, &base_lo, &base_hi) {
        LpResult::Optimal { objective, .. } => objective,
        LpResult::Infeasible => return Ok(IpSolution::infeasible(1, f64::INFINITY)),
        LpResult::Unbounded => {
            // the recession cone does not depend on the binaries, so the MIP is
            // unbounded exactly when it has any feasible point
            let mut feas = model.clone();
            feas.set_objective(LinExpr::new()).expect("empty objective");
            let probe = solve(&feas, &SolveOptions { incumbent: None, ..options.clone() })?;
            return match probe.status {
                SolveStatus::Infeasible => Ok(IpSolution::infeasible(probe.nodes, f64::NEG_INFINITY)),
                _ => Err(SolveError::Unbounded),
            };
        }
        LpResult::Stalled => return Err(SolveError::Numerical),
    };

    let step = objective_step(model);
    let can_improve = |bound: f64, inc: &Option<(Vec<f64>, f64)>| match inc {
        None => true,
        Some((_, best)) => match step {
            Some(s) => bound < best - s + 1e-6,
            None => bound < best - 1e-9 * best.abs().max(1.0),
        },
    };

    let mut frontier = if incumbent.is_some() {
        Frontier::Best(BinaryHeap::new())
    } else {
        Frontier::Dive(Vec::new())
    };
    frontier.push(Node { bound: root_bound, id: 0, fixings: Vec::new() });
    let mut next_id = 1u64;
    let mut nodes = 0usize;
    let mut limited = false;

    let mut lo = base_lo.clone();
    let mut hi = base_hi.clone();
    while let Some(node) = frontier.pop() {
        if !can_improve(node.bound, &incumbent) {
            continue;
        }
        let over_time = options.time_limit.is_some_and(|t| start.elapsed() >= t);
        let over_nodes = options.node_limit.is_some_and(|n| nodes >= n);
        if over_time || over_nodes {
            frontier.push(node);
            limited = true;
            break;
        }
        nodes += 1;

        lo.copy_from_slice(&base_lo);
        hi.copy_from_slice(&base_hi);
        for &(v, val) in &node.fixings {
            lo[v] = val;
            hi[v] = val;
        }
        // TODO: warm-start from the parent basis with dual simplex; every node
        // currently re-solves from a slack basis, which dominates on larger trees.
        let (x, bound) = match solve_lp(&problem, &lo, &hi) {
            LpResult::Optimal { x, objective } => (x, objective),
            LpResult::Infeasible => continue,
            LpResult::Unbounded | LpResult::Stalled => return Err(SolveError::Numerical),
        };
        if !can_improve(bound, &incumbent) {
            continue;
        }

        let mut branch_var: Option<(usize, f64)> = None;
        let mut best_frac = INT_TOL;
        for &b in &binaries {
            let f = x[b] - x[b].floor();
            let frac = f.min(1.0 - f);
            if frac > best_frac {
                best_frac = frac;
                branch_var = Some((b, x[b]));
            }
        }

        match branch_var {
            None => {
                let mut vals = x;
                for &b in &binaries {
                    vals[b] = vals[b].round();
                }
                if model.check(&vals, INT_TOL).0 > FEAS_TOL {
                    // re-derive the continuous part with every binary pinned
                    for &b in &binaries {
                        lo[b] = vals[b];
                        hi[b] = vals[b];
                    }
                    match solve_lp(&problem, &lo, &hi) {
                        LpResult::Optimal { x, .. } => vals = x,
                        _ => continue,
                    }
                }
                let obj = model.objective().eval(&vals);
                if incumbent.as_ref().is_none_or(|(_, best)| obj < *best) {
                    incumbent = Some((vals, obj));
                }
                frontier.to_best();
            }
            Some((v, value)) => {
                let toward = if value >= 0.5 { 1.0 } else { 0.0 };
                // the child pushed last is explored first while diving
                for val in [1.0 - toward, toward] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((v, val));
                    frontier.push(Node { bound, id: next_id, fixings });
                    next_id += 1;
                }
            }
        }
    }

    match incumbent {
        None if limited => Err(SolveError::NoIncumbent { nodes }),
        None => Ok(IpSolution::infeasible(nodes, root_bound)),
        Some((values, objective)) => {
            let (status, gap) = if limited {
                let lb = frontier.min_bound().min(objective);
                (SolveStatus::TimeLimitIncumbent, (objective - lb).max(0.0) / objective.abs().max(1.0))
            } else {
                (SolveStatus::Optimal, 0.0)
            };
            Ok(IpSolution { status, values, objective, gap, nodes, root_bound })
        }
    }
}
