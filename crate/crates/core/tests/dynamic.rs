mod common;

use std::collections::BTreeSet;

use common::*;
use divcode::demand::Demand;
use divcode::dynamic::{replay, CodingGroup, ProvisionOutcome, ProvisionState};
use divcode::graph::{Capacity, LinkId, NetworkGraph, NodeId};
use divcode::traffic::{dynamic_event_stream, TrafficSpec};
use rand::Rng;

fn simple_paths(g: &NetworkGraph, s: NodeId, d: NodeId, ok: &dyn Fn(LinkId) -> bool) -> Vec<Vec<LinkId>> {
    fn go(
        g: &NetworkGraph,
        v: NodeId,
        d: NodeId,
        ok: &dyn Fn(LinkId) -> bool,
        seen: &mut Vec<bool>,
        path: &mut Vec<LinkId>,
        out: &mut Vec<Vec<LinkId>>,
    ) {
        if v == d {
            out.push(path.clone());
            return;
        }
        for &l in g.outgoing(v) {
            let h = g.link(l).head;
            if !seen[h] && ok(l) {
                seen[h] = true;
                path.push(l);
                go(g, h, d, ok, seen, path, out);
                path.pop();
                seen[h] = false;
            }
        }
    }
    let mut seen = vec![false; g.node_count()];
    seen[s] = true;
    let mut out = Vec::new();
    go(g, s, d, ok, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Cheapest extra spare capacity for placing `dem` in `group` (or a fresh
/// group), by trying every pair of simple paths.
fn esc_oracle(st: &ProvisionState, group: Option<&CodingGroup>, dem: &Demand) -> Option<f64> {
    let g = st.graph();
    let owned: BTreeSet<LinkId> = group.map(|grp| grp.rows.iter().flat_map(|r| r.links.keys().copied()).collect()).unwrap_or_default();
    let owned_spans: BTreeSet<_> = owned.iter().map(|&l| g.span_of(l)).collect();
    let free = |l: LinkId| st.free_capacity(l) != Capacity::Limited(0);
    let xs = simple_paths(g, dem.source, dem.destination, &|l| free(l) && !owned_spans.contains(&g.span_of(l)));
    let ys = simple_paths(g, dem.source, dem.destination, &|l| {
        owned.contains(&l) || (!owned.contains(&g.reverse(l)) && free(l))
    });
    let cost = |p: &[LinkId], zero: &BTreeSet<LinkId>| -> f64 {
        p.iter().filter(|l| !zero.contains(l)).map(|&l| g.link(l).cost()).sum()
    };
    let mut best: Option<f64> = None;
    for y in &ys {
        if let Some(grp) = group {
            if !grp.rows.is_empty() {
                let Some(join) = y.iter().position(|l| owned.contains(l)) else { continue };
                // from the join point on, the copy follows its row hop by hop
                let row = grp.rows.iter().find(|r| r.links.contains_key(&y[join])).unwrap();
                let follows = y[join..].windows(2).all(|w| row.next_link(g, w[0]) == Some(w[1]))
                    && row.next_link(g, *y.last().unwrap()).is_none();
                if !follows {
                    continue;
                }
            }
        }
        let yspans: BTreeSet<_> = y.iter().map(|&l| g.span_of(l)).collect();
        let ycost = cost(y, &owned);
        for x in &xs {
            if x.iter().any(|&l| yspans.contains(&g.span_of(l))) {
                continue;
            }
            let c = ycost + cost(x, &BTreeSet::new());
            if best.is_none_or(|b| c < b - 1e-9) {
                best = Some(c);
            }
        }
    }
    best
}

#[test]
fn extra_spare_capacity_matches_path_pair_enumeration() {
    let mut r = rng(404);
    let mut compared = 0;
    for round in 0..12 {
        let n = r.random_range(5..=6);
        let chords = r.random_range(2..=4);
        let g = random_protectable(&mut r, n, chords, 9, Some(2));
        let mut st = ProvisionState::new(g.clone());
        let mut live: Vec<usize> = Vec::new();
        for id in 0..14 {
            if !live.is_empty() && r.random_bool(0.25) {
                let k = live.swap_remove(r.random_range(0..live.len()));
                st.teardown_connection(k).unwrap();
            }
            let d = r.random_range(0..2);
            let s = r.random_range(2..n);
            let dem = Demand::new(id, s, d);
            let expected: Vec<(Option<usize>, Option<f64>)> = st
                .groups()
                .iter()
                .filter(|grp| grp.destination == d)
                .map(|grp| (Some(grp.id), esc_oracle(&st, Some(grp), &dem)))
                .chain([(None, esc_oracle(&st, None, &dem))])
                .collect();
            let outcome = st.provision_demand(&dem).unwrap();
            let cands = match &outcome {
                ProvisionOutcome::Provisioned { candidates, .. } | ProvisionOutcome::Blocked { candidates, .. } => candidates,
            };
            assert_eq!(cands.len(), expected.len(), "round {round} demand {id}");
            for (c, (gid, want)) in cands.iter().zip(&expected) {
                assert_eq!(c.group, *gid);
                match (c.esc, want) {
                    (None, None) => {}
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-6, "round {round} demand {id} group {gid:?}: {a} vs {b}"),
                    other => panic!("round {round} demand {id} group {gid:?}: {other:?}"),
                }
                compared += 1;
            }
            let best = expected.iter().filter_map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
            match outcome {
                ProvisionOutcome::Provisioned { esc, .. } => {
                    assert!((esc - best).abs() < 1e-6);
                    live.push(id);
                }
                ProvisionOutcome::Blocked { .. } => assert!(best.is_infinite()),
            }
            st.audit().unwrap();
        }
    }
    assert!(compared >= 150, "only {compared} candidates compared");
}

/// Every capacity unit in use belongs to exactly one row link.
fn assert_conserved(st: &ProvisionState) {
    let g = st.graph();
    for link in g.links() {
        let owners = st.groups().iter().flat_map(|grp| &grp.rows).filter(|row| row.links.contains_key(&link.id)).count();
        match (g.capacity(link.id), st.free_capacity(link.id)) {
            (Capacity::Limited(c), Capacity::Limited(f)) => assert_eq!((c - f) as usize, owners, "link {:?}", link.id),
            (Capacity::Unlimited, Capacity::Unlimited) => {}
            other => panic!("capacity kind changed: {other:?}"),
        }
    }
}

#[test]
fn capacity_is_conserved_and_fully_returned() {
    let mut r = rng(12);
    for seed in 0..6 {
        let g = random_protectable(&mut r, 7, 5, 9, Some(2));
        let spec = TrafficSpec { count: 80, seed, load: 6.0, ..Default::default() };
        let events = dynamic_event_stream(&g, &spec, f64::INFINITY).unwrap();
        let mut st = ProvisionState::new(g.clone());
        let log = replay(&mut st, &events, 1, |_, st, _, _| assert_conserved(st)).unwrap();
        assert_eq!(log.offered, 80);
        // every arrival departs within the stream
        assert!(st.connections().is_empty());
        assert!(st.groups().is_empty());
        assert!(g.links().iter().all(|l| st.free_capacity(l.id) == g.capacity(l.id)));
    }
}

#[test]
fn teardown_in_any_order_keeps_groups_decodable() {
    let mut r = rng(3);
    let g = random_protectable(&mut r, 8, 6, 9, None);
    let mut st = ProvisionState::new(g);
    for id in 0..12 {
        let s = r.random_range(1..8);
        st.provision_demand(&Demand::new(id, s, 0)).unwrap();
    }
    let mut ids: Vec<usize> = st.connections().keys().copied().collect();
    while !ids.is_empty() {
        let k = ids.swap_remove(r.random_range(0..ids.len()));
        st.teardown_connection(k).unwrap();
        st.audit().unwrap();
        for grp in st.groups() {
            let rows: Vec<u64> = grp
                .rows
                .iter()
                .map(|row| grp.signals.iter().enumerate().filter(|(_, s)| row.combination.contains(s)).fold(0, |m, (i, _)| m | 1 << i))
                .collect();
            assert!(full_rank_after_any_deletion(&rows, grp.signals.len()));
        }
    }
    assert!(st.groups().is_empty());
}
