//! Static pre-provisioning with diversity coding trees.
//!
//! Demands are grouped by destination and each group is solved on its own.
//! A group may be split over up to `T` trees; every tree owns a *primary* tree
//! (span-disjoint working paths, one per demand, all ending at the
//! destination) and a *protection* tree whose branches start at the sources,
//! merge on the way and reach the destination carrying the XOR of everything
//! upstream. Within one tree no span may carry both a primary and a
//! protection link, so any single span cut erases at most one received row.

mod buffer;
mod dump;
mod extract;
mod heuristic;
mod model;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::demand::Demand;
use crate::graph::{LinkId, NetworkGraph, NodeId};
use crate::ip::{SolveError, SolveOptions, SolveStatus};

pub use buffer::{
    check_equalization, compute_buffer_plan, compute_buffer_plan_with, Arrival, Buffer, BufferPlan, BufferSite,
    EncodingInput, PathDelay, PathKind,
};
pub use dump::{parse_solution, write_solution};
pub use extract::{extract_paths, ExtractedTree};
pub use model::{build_tree_model, TreeModel};
pub use validate::{validate_tree_set, ValidationReport, Violation};

/// Demands sharing one destination.
#[derive(Clone, Debug, PartialEq)]
pub struct Subproblem {
    pub destination: NodeId,
    pub demands: Vec<Demand>,
}

/// User-facing knobs; unset values fall back to the per-subproblem defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeConfig {
    /// Maximum number of trees per subproblem. Default `ceil(N / 3)`.
    pub max_trees: Option<usize>,
    /// Voltage step. Default `1 / |V|`.
    pub alpha: Option<f64>,
    /// Big constant in the protection-tree inequalities. Default `N + 1`.
    pub beta: Option<f64>,
    /// Fix `n(i, t) = 0` for `t > i`. Removes tree-relabelling symmetry
    /// without changing the optimum.
    pub symmetry_breaking: bool,
    /// Pin every primary path to its shortest path (spare-capacity-only
    /// placement). Off means joint optimization.
    pub fixed_shortest_primaries: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_trees: None,
            alpha: None,
            beta: None,
            symmetry_breaking: true,
            fixed_shortest_primaries: false,
        }
    }
}

/// Concrete parameters for one subproblem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub trees: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl TreeConfig {
    pub fn resolve(&self, g: &NetworkGraph, demand_count: usize) -> Result<TreeParams, TreeError> {
        let v = g.node_count().max(1) as f64;
        let trees = self.max_trees.unwrap_or(demand_count.div_ceil(3).max(1));
        let alpha = self.alpha.unwrap_or(1.0 / v);
        let beta = self.beta.unwrap_or(demand_count as f64 + 1.0);
        if trees == 0 {
            return Err(TreeError::InvalidConfig("at least one tree is required".into()));
        }
        if !(alpha > 0.0 && alpha <= 1.0 / v + 1e-12) {
            return Err(TreeError::InvalidConfig(format!("alpha must be in (0, 1/|V|], got {alpha}")));
        }
        if !(beta >= demand_count as f64 + 1.0) {
            return Err(TreeError::InvalidConfig(format!("beta must be at least N + 1, got {beta}")));
        }
        Ok(TreeParams { trees, alpha, beta })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("subproblem mixes destinations {expected} and {found}")]
    MixedDestinations { expected: NodeId, found: NodeId },
    #[error("invalid tree configuration: {0}")]
    InvalidConfig(String),
    #[error("destination {destination}: {}", match .unprotected {
        Some(s) => format!("source {s} has no two span-disjoint routes"),
        None => "no feasible tree assignment".to_string(),
    })]
    Infeasible { destination: NodeId, unprotected: Option<NodeId> },
    #[error(transparent)]
    Solver(#[from] SolveError),
    #[error("tree {tree}: path extraction failed: {msg}")]
    Extraction { tree: usize, msg: String },
    #[error("no delay known for link {0}")]
    MissingDelay(LinkId),
    #[error("line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

/// One diversity coding tree.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignTree {
    pub destination: NodeId,
    pub demands: Vec<Demand>,
    pub primary_links: BTreeSet<LinkId>,
    pub protection_links: BTreeSet<LinkId>,
    /// Node voltages certifying acyclicity; empty when not produced by the solver.
    pub primary_voltage: Vec<f64>,
    pub protection_voltage: Vec<f64>,
}

impl DesignTree {
    pub fn new(destination: NodeId) -> Self {
        DesignTree {
            destination,
            demands: Vec::new(),
            primary_links: BTreeSet::new(),
            protection_links: BTreeSet::new(),
            primary_voltage: Vec::new(),
            protection_voltage: Vec::new(),
        }
    }

    pub fn capacity(&self, g: &NetworkGraph) -> f64 {
        self.primary_links.iter().chain(&self.protection_links).map(|&l| g.link(l).cost()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubproblemReport {
    pub destination: NodeId,
    pub demands: usize,
    pub trees: usize,
    pub status: SolveStatus,
    pub objective: f64,
    pub gap: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TreeSolution {
    pub trees: Vec<DesignTree>,
    pub reports: Vec<SubproblemReport>,
}

impl TreeSolution {
    pub fn is_optimal(&self) -> bool {
        self.reports.iter().all(|r| r.status == SolveStatus::Optimal)
    }

    pub fn demand_count(&self) -> usize {
        self.trees.iter().map(|t| t.demands.len()).sum()
    }
}

/// Group demands by destination, in ascending destination order.
pub fn partition_demands(demands: &[Demand]) -> Vec<Subproblem> {
    let mut by_dest: BTreeMap<NodeId, Vec<Demand>> = BTreeMap::new();
    for d in demands {
        by_dest.entry(d.destination).or_default().push(d.clone());
    }
    by_dest
        .into_iter()
        .map(|(destination, demands)| Subproblem { destination, demands })
        .collect()
}

/// Solve one destination subproblem to optimality (or to the configured limit).
///
/// With `max_trees` unset, the tree count starts at the default but never
/// below what the destination's degree allows (each tree needs one incoming
/// link per member plus one for protection), and doubles up to one tree per
/// demand while the model stays infeasible.
pub fn solve_subproblem(
    g: &NetworkGraph,
    sub: &Subproblem,
    cfg: &TreeConfig,
    options: &SolveOptions,
) -> Result<(Vec<DesignTree>, SubproblemReport), TreeError> {
    if let Some(d) = sub.demands.iter().find(|d| d.destination != sub.destination) {
        return Err(TreeError::MixedDestinations { expected: sub.destination, found: d.destination });
    }
    let n = sub.demands.len();
    if cfg.max_trees.is_some() || n <= 1 {
        return solve_with(g, sub, cfg, options);
    }
    if let err @ TreeError::Infeasible { unprotected: Some(_), .. } = diagnose_infeasible(g, sub) {
        return Err(err);
    }
    let per_tree = g.degree(sub.destination).saturating_sub(1).max(1);
    let mut trees = n.div_ceil(3).max(n.div_ceil(per_tree)).min(n);
    loop {
        let attempt = TreeConfig { max_trees: Some(trees), ..cfg.clone() };
        match solve_with(g, sub, &attempt, options) {
            Err(TreeError::Infeasible { .. }) if trees < n => trees = (trees * 2).min(n),
            other => return other,
        }
    }
}

fn solve_with(
    g: &NetworkGraph,
    sub: &Subproblem,
    cfg: &TreeConfig,
    options: &SolveOptions,
) -> Result<(Vec<DesignTree>, SubproblemReport), TreeError> {
    let tm = build_tree_model(g, sub, cfg)?;
    let mut opts = options.clone();
    if opts.incumbent.is_none() {
        opts.incumbent = heuristic::greedy_incumbent(g, &tm, cfg);
    }
    let sol = match tm.model.solve(&opts) {
        Ok(s) => s,
        Err(SolveError::NoIncumbent { .. }) => return Err(diagnose_infeasible(g, sub)),
        Err(e) => return Err(e.into()),
    };
    if sol.status == SolveStatus::Infeasible {
        return Err(diagnose_infeasible(g, sub));
    }
    let trees = tm.trees_from(&sol.values, g);
    let report = SubproblemReport {
        destination: sub.destination,
        demands: sub.demands.len(),
        trees: tm.params.trees,
        status: sol.status,
        objective: sol.objective,
        gap: sol.gap,
        nodes: sol.nodes,
    };
    Ok((trees, report))
}

/// Solve every destination subproblem independently.
pub fn solve_all(
    g: &NetworkGraph,
    demands: &[Demand],
    cfg: &TreeConfig,
    options: &SolveOptions,
) -> Result<TreeSolution, TreeError> {
    let mut out = TreeSolution::default();
    for sub in partition_demands(demands) {
        let (trees, report) = solve_subproblem(g, &sub, cfg, options)?;
        out.trees.extend(trees);
        out.reports.push(report);
    }
    Ok(out)
}

/// Sum of link costs over primary and protection trees.
pub fn total_capacity(g: &NetworkGraph, sol: &TreeSolution) -> f64 {
    sol.trees.iter().map(|t| t.capacity(g)).sum()
}

fn diagnose_infeasible(g: &NetworkGraph, sub: &Subproblem) -> TreeError {
    let sources: BTreeSet<NodeId> = sub.demands.iter().map(|d| d.source).collect();
    let unprotected = sources
        .into_iter()
        .find(|&s| span_disjoint_route_count(g, s, sub.destination, 2) < 2);
    TreeError::Infeasible { destination: sub.destination, unprotected }
}

/// Number of pairwise span-disjoint routes from `s` to `t`, capped at `cap`
/// (unit-capacity augmenting paths over undirected spans).
pub fn span_disjoint_route_count(g: &NetworkGraph, s: NodeId, t: NodeId, cap: usize) -> usize {
    // flow[span] in {-1, 0, 1}: +1 means a -> b
    let mut flow = vec![0i8; g.spans().len()];
    let mut count = 0;
    while count < cap {
        let mut prev: Vec<Option<LinkId>> = vec![None; g.node_count()];
        let mut seen = vec![false; g.node_count()];
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &l in g.outgoing(v) {
                let link = g.link(l);
                let span = g.span(link.span);
                let dir: i8 = if link.tail == span.a { 1 } else { -1 };
                if flow[span.id.0] == dir || seen[link.head] {
                    continue;
                }
                seen[link.head] = true;
                prev[link.head] = Some(l);
                queue.push_back(link.head);
            }
        }
        if !seen[t] {
            break;
        }
        let mut v = t;
        while let Some(l) = prev[v] {
            let link = g.link(l);
            let span = g.span(link.span);
            flow[span.id.0] += if link.tail == span.a { 1 } else { -1 };
            v = link.tail;
        }
        count += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_topology, GraphBuilder};

    fn ring(n: usize) -> NetworkGraph {
        let mut b = GraphBuilder::new(n);
        for i in 0..n {
            b = b.span(i, (i + 1) % n, 1);
        }
        b.build().unwrap()
    }

    #[test]
    fn partition_by_destination() {
        let ds = vec![Demand::new(0, 0, 5), Demand::new(1, 2, 5), Demand::new(2, 1, 3)];
        let subs = partition_demands(&ds);
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].destination, 3);
        assert_eq!(subs[0].demands.len(), 1);
        assert_eq!(subs[1].demands.len(), 2);
        assert!(partition_demands(&[]).is_empty());
    }

    #[test]
    fn config_defaults_and_bounds() {
        let g = ring(4);
        let p = TreeConfig::default().resolve(&g, 7).unwrap();
        assert_eq!(p, TreeParams { trees: 3, alpha: 0.25, beta: 8.0 });
        let bad = TreeConfig { alpha: Some(0.5), ..Default::default() };
        assert!(bad.resolve(&g, 1).is_err());
        let bad = TreeConfig { beta: Some(2.0), ..Default::default() };
        assert!(bad.resolve(&g, 2).is_err());
        let bad = TreeConfig { max_trees: Some(0), ..Default::default() };
        assert!(bad.resolve(&g, 2).is_err());
    }

    #[test]
    fn single_demand_on_ring() {
        let g = ring(4);
        let sub = Subproblem { destination: 2, demands: vec![Demand::new(0, 0, 2)] };
        let (trees, report) = solve_subproblem(&g, &sub, &TreeConfig::default(), &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert_eq!(report.objective, 4.0);
        let sol = TreeSolution { trees, reports: vec![report] };
        assert_eq!(total_capacity(&g, &sol), 4.0);
        assert!(validate_tree_set(&g, &sol).is_clean());
    }

    #[test]
    fn bridge_is_infeasible() {
        // 0 - 1 is a bridge into the triangle 1 2 3
        let g = load_topology("nodes 4\nspan 0 1 1\nspan 1 2 1\nspan 2 3 1\nspan 3 1 1\n").unwrap();
        let sub = Subproblem { destination: 2, demands: vec![Demand::new(0, 0, 2)] };
        let err = solve_subproblem(&g, &sub, &TreeConfig::default(), &SolveOptions::default()).unwrap_err();
        assert_eq!(err, TreeError::Infeasible { destination: 2, unprotected: Some(0) });
    }

    #[test]
    fn total_capacity_adds_tree_costs() {
        let g = load_topology("nodes 3\nspan 0 1 7\nspan 0 2 9\nspan 1 2 1\n").unwrap();
        assert_eq!(total_capacity(&g, &TreeSolution::default()), 0.0);
        // one primary link of cost 7 and one protection link of cost 9
        let mut t = DesignTree::new(1);
        t.demands.push(Demand::new(0, 0, 1));
        t.primary_links.insert(g.link_between(0, 1).unwrap());
        t.protection_links.insert(g.link_between(0, 2).unwrap());
        let sol = TreeSolution { trees: vec![t], reports: vec![] };
        assert_eq!(total_capacity(&g, &sol), 16.0);
    }

    #[test]
    fn disjoint_route_count() {
        let g = ring(5);
        assert_eq!(span_disjoint_route_count(&g, 0, 2, 3), 2);
        let line = GraphBuilder::new(3).span(0, 1, 1).span(1, 2, 1).build().unwrap();
        assert_eq!(span_disjoint_route_count(&line, 0, 2, 2), 1);
    }
}
