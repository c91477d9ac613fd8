//! Greedy starting incumbent for the tree MIP.
//!
//! Demands are inserted one at a time into the tree where they add the least
//! cost: a cheapest primary over spans the tree does not use yet, then a
//! cheapest protection branch from the source to the existing protection tree
//! (or the destination). The result only seeds branch-and-bound; it is
//! discarded unless it satisfies every model row.

use std::collections::BTreeSet;

use crate::graph::{LinkId, NetworkGraph, SpanId};
use crate::ip::FEAS_TOL;
use crate::routing::{shortest_path, shortest_path_to, topo_order};

use super::model::TreeModel;
use super::TreeConfig;

#[derive(Clone, Default)]
struct Partial {
    members: Vec<usize>,
    prim: BTreeSet<LinkId>,
    prot: BTreeSet<LinkId>,
    spans: BTreeSet<SpanId>,
}

pub(crate) fn greedy_incumbent(g: &NetworkGraph, tm: &TreeModel, cfg: &TreeConfig) -> Option<Vec<f64>> {
    let nd = tm.demands.len();
    let far_first = {
        let hops = |i: usize| shortest_path(g, tm.demands[i].source, tm.destination, |_| true).map_or(0, |p| p.len());
        let mut v: Vec<usize> = (0..nd).collect();
        v.sort_by_key(|&i| std::cmp::Reverse(hops(i)));
        v
    };
    let orders = [(0..nd).collect::<Vec<_>>(), (0..nd).rev().collect(), far_first];
    // cheapest insertion first; spreading demands over trees rescues
    // instances where packing them exhausts the destination's spans
    for spread in [false, true] {
        for order in &orders {
            let Some(mut trees) = greedy(g, tm, cfg, order, spread) else {
                continue;
            };
            // relabel so tree t never holds a demand with index below t
            trees.sort_by_key(|p| p.members.iter().min().copied().unwrap_or(usize::MAX));
            let spec: Vec<_> = trees.into_iter().map(|p| (p.members, p.prim, p.prot)).collect();
            let x = tm.assignment(g, &spec);
            let (viol, integral) = tm.model.check(&x, 1e-9);
            if viol <= FEAS_TOL && integral {
                return Some(x);
            }
        }
    }
    None
}

fn greedy(g: &NetworkGraph, tm: &TreeModel, cfg: &TreeConfig, order: &[usize], spread: bool) -> Option<Vec<Partial>> {
    let dest = tm.destination;
    let mut trees: Vec<Partial> = vec![Partial::default(); tm.params.trees];
    for &i in order {
        let dem = &tm.demands[i];
        let mut best: Option<((usize, f64), usize, Partial)> = None;
        for (t, tree) in trees.iter().enumerate() {
            if let Some((cost, next)) = insert(g, tree, dem.source, dest, cfg.fixed_shortest_primaries) {
                let key = (if spread { tree.members.len() } else { 0 }, cost);
                if best.as_ref().is_none_or(|(k, _, _)| key < *k) {
                    best = Some((key, t, next));
                }
            }
            if tree.members.is_empty() {
                // every later tree is empty too
                break;
            }
        }
        let (_, t, mut next) = best?;
        next.members.push(i);
        trees[t] = next;
    }
    Some(trees)
}

fn insert(g: &NetworkGraph, tree: &Partial, s: usize, dest: usize, fixed_primary: bool) -> Option<(f64, Partial)> {
    let free = |l: LinkId| !tree.spans.contains(&g.span_of(l));
    let primary = if fixed_primary {
        let p = shortest_path(g, s, dest, |_| true)?;
        p.iter().all(|&l| free(l)).then_some(p)?
    } else {
        shortest_path(g, s, dest, free)?
    };
    let mut next = tree.clone();
    next.prim.extend(primary.iter().copied());
    next.spans.extend(primary.iter().map(|&l| g.span_of(l)));
    topo_order(g, &next.prim)?;

    let on_prot: BTreeSet<usize> = tree
        .prot
        .iter()
        .flat_map(|&l| [g.link(l).tail, g.link(l).head])
        .chain([dest])
        .collect();
    let branch = shortest_path_to(g, s, |v| on_prot.contains(&v), |l| !next.spans.contains(&g.span_of(l)))?;
    next.prot.extend(branch.iter().copied());
    next.spans.extend(branch.iter().map(|&l| g.span_of(l)));
    topo_order(g, &next.prot)?;

    let cost = primary.iter().chain(&branch).map(|&l| g.link(l).cost()).sum();
    Some((cost, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::Demand;
    use crate::graph::GraphBuilder;
    use crate::tree::{build_tree_model, Subproblem};

    #[test]
    fn incumbent_is_feasible_on_grid() {
        let mut b = GraphBuilder::new(9);
        for r in 0..3 {
            for c in 0..3 {
                let v = r * 3 + c;
                if c < 2 {
                    b = b.span(v, v + 1, 1);
                }
                if r < 2 {
                    b = b.span(v, v + 3, 1);
                }
            }
        }
        let g = b.build().unwrap();
        let demands: Vec<_> = [0, 2, 6, 8, 1].iter().enumerate().map(|(i, &s)| Demand::new(i, s, 4)).collect();
        let sub = Subproblem { destination: 4, demands };
        let cfg = TreeConfig::default();
        let tm = build_tree_model(&g, &sub, &cfg).unwrap();
        let x = greedy_incumbent(&g, &tm, &cfg).expect("grid admits a greedy design");
        assert!(tm.model.check(&x, 1e-9).0 <= FEAS_TOL);
    }
}
