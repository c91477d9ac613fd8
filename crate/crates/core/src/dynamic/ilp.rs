use std::collections::BTreeSet;

use crate::demand::Demand;
use crate::graph::{LinkId, NetworkGraph, NodeId};
use crate::ip::{IpModel, LinExpr, Sense, SolveError, SolveOptions, SolveStatus, VarId};

use super::{CodingGroup, ProvisionError, ProvisionState};

/// Per-link costs for the two copies of a new connection. `None` marks a
/// forbidden link, which gets no variable at all.
#[derive(Clone, Debug, PartialEq)]
pub struct CostVectors {
    /// Cost for the disjoint copy.
    pub primary: Vec<Option<f64>>,
    /// Cost for the coded copy.
    pub secondary: Vec<Option<f64>>,
}

/// Cost vectors for placing `demand` into `group` (`None` for a fresh group).
///
/// The disjoint copy may not touch any span the group owns. The coded copy
/// rides group links for free, may not run against them, and pays the base
/// cost elsewhere. Links without free capacity are forbidden unless the group
/// already owns them.
pub fn build_cost_vectors(
    state: &ProvisionState,
    group: Option<&CodingGroup>,
    demand: &Demand,
) -> Result<CostVectors, ProvisionError> {
    let g = state.graph();
    if let Some(grp) = group {
        if grp.destination != demand.destination {
            return Err(ProvisionError::DestinationMismatch { group: grp.id, destination: demand.destination });
        }
    }
    let owned: BTreeSet<LinkId> = group.map(|grp| grp.owned_links().keys().copied().collect()).unwrap_or_default();
    let owned_spans: BTreeSet<_> = owned.iter().map(|&l| g.span_of(l)).collect();
    let mut primary = Vec::with_capacity(g.links().len());
    let mut secondary = Vec::with_capacity(g.links().len());
    for link in g.links() {
        let l = link.id;
        let free = state.has_free_capacity(l);
        primary.push((free && !owned_spans.contains(&link.span)).then(|| link.cost()));
        secondary.push(if owned.contains(&l) {
            Some(0.0)
        } else if owned.contains(&g.reverse(l)) || !free {
            None
        } else {
            Some(link.cost())
        });
    }
    Ok(CostVectors { primary, secondary })
}

/// Result of the disjoint-pair ILP.
#[derive(Clone, Debug, PartialEq)]
pub struct DisjointPair {
    pub primary: Vec<LinkId>,
    pub secondary: Vec<LinkId>,
    pub cost: f64,
}

/// Minimum-cost span-disjoint pair of unit flows from the demand's source to
/// its destination. With a non-empty group the coded copy must enter exactly
/// one group route and follow it to the destination.
///
/// Returns `Ok(None)` when no pair exists under these costs.
pub fn solve_disjoint_pair(
    g: &NetworkGraph,
    demand: &Demand,
    cv: &CostVectors,
    group: Option<&CodingGroup>,
) -> Result<Option<DisjointPair>, ProvisionError> {
    let (s, d) = (demand.source, demand.destination);
    let mut m = IpModel::new();
    let mut x: Vec<Option<VarId>> = vec![None; g.links().len()];
    let mut y: Vec<Option<VarId>> = vec![None; g.links().len()];
    let mut obj = LinExpr::new();
    for link in g.links() {
        let e = link.id.0;
        if let Some(c) = cv.primary[e] {
            let v = m.add_binary(format!("x({e})"));
            obj.add(v, c);
            x[e] = Some(v);
        }
        if let Some(c) = cv.secondary[e] {
            let v = m.add_binary(format!("y({e})"));
            obj.add(v, c);
            y[e] = Some(v);
        }
    }
    let add = |m: &mut IpModel, name: String, e: LinExpr, sense: Sense, rhs: f64| {
        m.add_constraint(name, e, sense, rhs).expect("declared variables");
    };
    let balance = |v: NodeId| -> f64 {
        if v == s {
            -1.0
        } else if v == d {
            1.0
        } else {
            0.0
        }
    };
    for v in g.nodes() {
        for (tag, vars) in [("x", &x), ("y", &y)] {
            let mut e = LinExpr::new();
            for l in g.incoming(v) {
                if let Some(var) = vars[l.0] {
                    e.add(var, 1.0);
                }
            }
            for l in g.outgoing(v) {
                if let Some(var) = vars[l.0] {
                    e.add(var, -1.0);
                }
            }
            if e.is_empty() {
                if balance(v) != 0.0 {
                    return Ok(None);
                }
                continue;
            }
            add(&mut m, format!("flow_{tag}({v})"), e, Sense::Eq, balance(v));
        }
    }
    for span in g.spans() {
        let e: LinExpr = span.links.iter().flat_map(|l| [x[l.0], y[l.0]]).flatten().map(|v| (v, 1.0)).collect();
        if e.terms().count() > 1 {
            add(&mut m, format!("disjoint({})", span.id.0), e, Sense::Le, 1.0);
        }
    }
    if let Some(grp) = group.filter(|grp| !grp.rows.is_empty()) {
        let mut join = LinExpr::new();
        for row in &grp.rows {
            for &l in row.links.keys() {
                let ye = y[l.0].expect("group links are free for the coded copy");
                join.add(ye, 1.0);
                if let Some(next) = row.next_link(g, l) {
                    let yn = y[next.0].expect("group links are free for the coded copy");
                    add(&mut m, format!("stay({},{})", row.id, l.0), LinExpr::new().term(ye, 1.0).term(yn, -1.0), Sense::Le, 0.0);
                }
            }
        }
        add(&mut m, "join".into(), join, Sense::Ge, 1.0);
    }
    m.set_objective(obj).expect("declared variables");

    let sol = match m.solve(&SolveOptions::default()) {
        Ok(sol) if sol.status == SolveStatus::Infeasible => return Ok(None),
        Ok(sol) => sol,
        Err(SolveError::NoIncumbent { .. }) => return Ok(None),
        Err(e) => return Err(ProvisionError::Solver(e)),
    };
    let walk = |vars: &[Option<VarId>]| -> Vec<LinkId> {
        let used: BTreeSet<LinkId> =
            (0..vars.len()).filter(|&e| vars[e].is_some_and(|v| sol.values[v.0] > 0.5)).map(LinkId).collect();
        let mut path = Vec::new();
        let mut v = s;
        while v != d && path.len() <= used.len() {
            let l = *g.outgoing(v).iter().find(|l| used.contains(l)).expect("unit flow leaves every path node");
            path.push(l);
            v = g.link(l).head;
        }
        path
    };
    let primary = walk(&x);
    let secondary = walk(&y);
    Ok(Some(DisjointPair { primary, secondary, cost: sol.objective }))
}
