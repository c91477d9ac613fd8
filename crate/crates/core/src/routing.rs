//! Small path utilities shared by the heuristics and checkers.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{LinkId, NetworkGraph, NodeId};

/// Cheapest path from `s` to the first node satisfying `is_target`, using
/// only links accepted by `allowed`. Ties resolve toward lower node and link
/// ids, so the result is deterministic.
pub fn shortest_path_to(
    g: &NetworkGraph,
    s: NodeId,
    is_target: impl Fn(NodeId) -> bool,
    allowed: impl Fn(LinkId) -> bool,
) -> Option<Vec<LinkId>> {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<LinkId>> = vec![None; n];
    let mut done = vec![false; n];
    dist[s] = 0.0;
    loop {
        let u = (0..n).filter(|&v| !done[v] && dist[v].is_finite()).min_by(|&a, &b| {
            dist[a].partial_cmp(&dist[b]).expect("finite").then(a.cmp(&b))
        })?;
        if is_target(u) {
            let mut path = Vec::new();
            let mut v = u;
            while let Some(l) = prev[v] {
                path.push(l);
                v = g.link(l).tail;
            }
            path.reverse();
            return Some(path);
        }
        done[u] = true;
        for &l in g.outgoing(u) {
            if !allowed(l) {
                continue;
            }
            let link = g.link(l);
            let nd = dist[u] + link.cost();
            if nd < dist[link.head] {
                dist[link.head] = nd;
                prev[link.head] = Some(l);
            }
        }
    }
}

pub fn shortest_path(g: &NetworkGraph, s: NodeId, t: NodeId, allowed: impl Fn(LinkId) -> bool) -> Option<Vec<LinkId>> {
    shortest_path_to(g, s, |v| v == t, allowed)
}

/// Topological order of the nodes touched by `links`, or `None` on a cycle.
/// Among ready nodes the lowest id goes first.
pub fn topo_order(g: &NetworkGraph, links: &BTreeSet<LinkId>) -> Option<Vec<NodeId>> {
    let mut indeg: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &l in links {
        let link = g.link(l);
        indeg.entry(link.tail).or_insert(0);
        *indeg.entry(link.head).or_insert(0) += 1;
    }
    let mut ready: BTreeSet<NodeId> = indeg.iter().filter(|&(_, &d)| d == 0).map(|(&v, _)| v).collect();
    let mut order = Vec::with_capacity(indeg.len());
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for l in g.outgoing(v).iter().filter(|l| links.contains(l)) {
            let h = g.link(*l).head;
            let d = indeg.get_mut(&h).expect("head registered");
            *d -= 1;
            if *d == 0 {
                ready.insert(h);
            }
        }
    }
    (order.len() == indeg.len()).then_some(order)
}

/// Longest-path level of every node in the DAG formed by `links` (0 for
/// nodes outside it), or `None` when the links contain a cycle.
pub fn longest_levels(g: &NetworkGraph, links: &BTreeSet<LinkId>) -> Option<Vec<usize>> {
    let order = topo_order(g, links)?;
    let mut level = vec![0usize; g.node_count()];
    for v in order {
        for l in g.outgoing(v).iter().filter(|l| links.contains(l)) {
            let h = g.link(*l).head;
            level[h] = level[h].max(level[v] + 1);
        }
    }
    Some(level)
}

/// Links of `links` from which `target` is reachable inside `links`
/// (including `target` itself).
pub fn upstream_of(g: &NetworkGraph, links: &BTreeSet<LinkId>, target: LinkId) -> BTreeSet<LinkId> {
    let mut out = BTreeSet::from([target]);
    let mut stack = vec![g.link(target).tail];
    let mut seen = BTreeSet::new();
    while let Some(v) = stack.pop() {
        if !seen.insert(v) {
            continue;
        }
        for &l in g.incoming(v) {
            if links.contains(&l) {
                out.insert(l);
                stack.push(g.link(l).tail);
            }
        }
    }
    out
}

/// Nodes that can reach `v` inside `links`, including `v`.
pub fn nodes_reaching(g: &NetworkGraph, links: &BTreeSet<LinkId>, v: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        if !seen.insert(u) {
            continue;
        }
        for &l in g.incoming(u) {
            if links.contains(&l) {
                stack.push(g.link(l).tail);
            }
        }
    }
    seen
}
