use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{LinkId, NetworkGraph, NodeId, SpanId};
use crate::routing::topo_order;

use super::{extract_paths, TreeSolution};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A demand id appears in more than one tree.
    DuplicateAssignment { demand: usize },
    /// A tree holds a demand for another destination.
    WrongDestination { tree: usize, demand: usize },
    /// A span carries more than one link of the tree.
    SpanReuse { tree: usize, span: SpanId },
    PrimaryCycle { tree: usize },
    ProtectionCycle { tree: usize },
    /// Primary flow in and out of a node does not balance.
    PrimaryImbalance { tree: usize, node: NodeId },
    /// A primary or protection link leaves the destination.
    LeavesDestination { tree: usize, link: LinkId },
    /// A node has protection input (local source or incoming link) but no output.
    ProtectionDeadEnd { tree: usize, node: NodeId },
    /// No protection link reaches the destination.
    ProtectionMissing { tree: usize },
    Extraction { tree: usize, msg: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Structural checks on a set of trees, independent of any solver output
/// such as voltages.
pub fn validate_tree_set(g: &NetworkGraph, sol: &TreeSolution) -> ValidationReport {
    let mut v = Vec::new();
    let mut seen = BTreeSet::new();
    for (ti, tree) in sol.trees.iter().enumerate() {
        for d in &tree.demands {
            if !seen.insert(d.id) {
                v.push(Violation::DuplicateAssignment { demand: d.id });
            }
            if d.destination != tree.destination {
                v.push(Violation::WrongDestination { tree: ti, demand: d.id });
            }
        }
        if tree.demands.is_empty() {
            continue;
        }
        let dest = tree.destination;

        let mut per_span: BTreeMap<SpanId, usize> = BTreeMap::new();
        for &l in tree.primary_links.iter().chain(&tree.protection_links) {
            *per_span.entry(g.span_of(l)).or_default() += 1;
        }
        for (span, k) in per_span {
            if k > 1 {
                v.push(Violation::SpanReuse { tree: ti, span });
            }
        }

        let prim_ok = topo_order(g, &tree.primary_links).is_some();
        if !prim_ok {
            v.push(Violation::PrimaryCycle { tree: ti });
        }
        if topo_order(g, &tree.protection_links).is_none() {
            v.push(Violation::ProtectionCycle { tree: ti });
        }

        for &l in g.outgoing(dest) {
            if tree.primary_links.contains(&l) || tree.protection_links.contains(&l) {
                v.push(Violation::LeavesDestination { tree: ti, link: l });
            }
        }

        let mut sources: BTreeMap<NodeId, usize> = BTreeMap::new();
        for d in &tree.demands {
            *sources.entry(d.source).or_default() += 1;
        }
        let count = |links: &BTreeSet<LinkId>, ls: &[LinkId]| ls.iter().filter(|l| links.contains(l)).count();
        for node in g.nodes() {
            let local = sources.get(&node).copied().unwrap_or(0);
            let p_in = count(&tree.primary_links, g.incoming(node));
            let p_out = count(&tree.primary_links, g.outgoing(node));
            let balanced = if node == dest { p_in == tree.demands.len() } else { p_out == local + p_in };
            if !balanced {
                v.push(Violation::PrimaryImbalance { tree: ti, node });
            }
            let c_in = count(&tree.protection_links, g.incoming(node));
            let c_out = count(&tree.protection_links, g.outgoing(node));
            if node != dest && local + c_in > 0 && c_out == 0 {
                v.push(Violation::ProtectionDeadEnd { tree: ti, node });
            }
            if node == dest && c_in == 0 {
                v.push(Violation::ProtectionMissing { tree: ti });
            }
        }

        if prim_ok {
            if let Err(super::TreeError::Extraction { msg, .. }) = extract_paths(g, tree, ti) {
                v.push(Violation::Extraction { tree: ti, msg });
            }
        }
    }
    ValidationReport { violations: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::Demand;
    use crate::graph::GraphBuilder;
    use crate::tree::DesignTree;

    fn graph() -> NetworkGraph {
        GraphBuilder::new(4).span(0, 1, 1).span(1, 3, 1).span(0, 2, 1).span(2, 3, 1).span(1, 2, 1).build().unwrap()
    }

    fn good(g: &NetworkGraph) -> DesignTree {
        let l = |u, v| g.link_between(u, v).unwrap();
        let mut t = DesignTree::new(3);
        t.demands.push(Demand::new(0, 0, 3));
        t.primary_links = [l(0, 1), l(1, 3)].into();
        t.protection_links = [l(0, 2), l(2, 3)].into();
        t
    }

    #[test]
    fn clean_tree() {
        let g = graph();
        let sol = TreeSolution { trees: vec![good(&g)], reports: vec![] };
        assert!(validate_tree_set(&g, &sol).is_clean());
    }

    #[test]
    fn span_overlap_flagged() {
        let g = graph();
        let mut t = good(&g);
        // protection reuses the primary's first span in reverse, then loops back
        t.protection_links = [g.link_between(1, 0).unwrap(), g.link_between(0, 2).unwrap(), g.link_between(2, 3).unwrap()].into();
        let sol = TreeSolution { trees: vec![t], reports: vec![] };
        let r = validate_tree_set(&g, &sol);
        assert!(r.violations.contains(&Violation::SpanReuse { tree: 0, span: g.span_of(g.link_between(0, 1).unwrap()) }));
    }

    #[test]
    fn protection_cycle_flagged() {
        let g = graph();
        let l = |u, v| g.link_between(u, v).unwrap();
        let mut t = good(&g);
        t.protection_links = [l(0, 2), l(2, 1), l(1, 0)].into();
        t.primary_links = [l(1, 3)].into();
        let sol = TreeSolution { trees: vec![t], reports: vec![] };
        let r = validate_tree_set(&g, &sol);
        assert!(r.violations.contains(&Violation::ProtectionCycle { tree: 0 }));
        assert!(r.violations.contains(&Violation::ProtectionMissing { tree: 0 }));
    }

    #[test]
    fn deleted_protection_link_flagged() {
        let g = graph();
        let mut t = good(&g);
        t.protection_links.remove(&g.link_between(2, 3).unwrap());
        let sol = TreeSolution { trees: vec![t], reports: vec![] };
        let r = validate_tree_set(&g, &sol);
        assert!(r.violations.contains(&Violation::ProtectionDeadEnd { tree: 0, node: 2 }));
    }
}
