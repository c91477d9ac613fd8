//! Brute-force oracles shared by the integration tests. None of them call
//! into the library's solvers, extraction or algebra.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use divcode::demand::Demand;
use divcode::graph::{Capacity, GraphBuilder, LinkId, NetworkGraph, NodeId, SpanId};
use divcode::ip::{IpModel, Sense, VarKind};
use divcode::tree::{BufferPlan, BufferSite, Arrival, EncodingInput, DesignTree};
use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn add_span(spans: &mut BTreeSet<(usize, usize)>, a: usize, b: usize) -> bool {
    a != b && spans.insert((a.min(b), a.max(b)))
}

fn build(n: usize, spans: &BTreeSet<(usize, usize)>, r: &mut ChaCha8Rng, max_len: i64, cap: Option<u32>) -> NetworkGraph {
    let mut b = GraphBuilder::new(n);
    for &(a, c) in spans {
        let len = Rational64::from_integer(r.random_range(1..=max_len));
        let capacity = cap.map_or(Capacity::Unlimited, |c| Capacity::Limited(r.random_range(1..=c)));
        b = b.span_with(a, c, len, capacity);
    }
    b.build().expect("generated topology is valid")
}

/// Connected graph: a random spanning tree plus `extra` random spans. May
/// contain bridges.
pub fn random_connected(r: &mut ChaCha8Rng, n: usize, extra: usize, max_len: i64) -> NetworkGraph {
    let mut spans = BTreeSet::new();
    for v in 1..n {
        let u = r.random_range(0..v);
        add_span(&mut spans, u, v);
    }
    let limit = n * (n - 1) / 2;
    let mut tries = 0;
    while spans.len() < (n - 1 + extra).min(limit) && tries < 1000 {
        tries += 1;
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        add_span(&mut spans, a, b);
    }
    build(n, &spans, r, max_len, None)
}

/// Two-edge-connected graph: a random Hamiltonian cycle plus chords.
/// `cap` draws per-span capacities in `1..=cap`.
pub fn random_protectable(r: &mut ChaCha8Rng, n: usize, chords: usize, max_len: i64, cap: Option<u32>) -> NetworkGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let mut spans = BTreeSet::new();
    for i in 0..n {
        add_span(&mut spans, order[i], order[(i + 1) % n]);
    }
    let limit = n * (n - 1) / 2;
    let mut tries = 0;
    while spans.len() < (n + chords).min(limit) && tries < 1000 {
        tries += 1;
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        add_span(&mut spans, a, b);
    }
    build(n, &spans, r, max_len, cap)
}

// ---------------------------------------------------------------- IP oracle

pub enum Enumerated {
    Optimal(f64),
    Infeasible,
}

/// Exhaustive search over a pure-binary model.
pub fn enumerate_binary(m: &IpModel) -> Enumerated {
    let n = m.num_vars();
    assert!(m.variables().iter().all(|v| v.kind == VarKind::Binary) && n <= 20);
    let mut best: Option<f64> = None;
    let mut x = vec![0.0; n];
    for mask in 0u32..(1 << n) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = f64::from((mask >> i) & 1);
        }
        if m.variables().iter().zip(&x).any(|(v, &xi)| xi < v.lo || xi > v.hi) {
            continue;
        }
        let ok = m.constraints().iter().all(|c| {
            let lhs = c.expr.eval(&x);
            match c.sense {
                Sense::Le => lhs <= c.rhs + 1e-9,
                Sense::Ge => lhs >= c.rhs - 1e-9,
                Sense::Eq => (lhs - c.rhs).abs() <= 1e-9,
            }
        });
        if ok {
            let obj = m.objective().eval(&x);
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best.map_or(Enumerated::Infeasible, Enumerated::Optimal)
}

// -------------------------------------------------------------- tree oracle

fn acyclic(g: &NetworkGraph, links: &[LinkId]) -> bool {
    let mut indeg = vec![0usize; g.node_count()];
    for &l in links {
        indeg[g.link(l).head] += 1;
    }
    let mut stack: Vec<NodeId> = (0..g.node_count()).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &l in links {
            let k = g.link(l);
            if k.tail == v {
                indeg[k.head] -= 1;
                if indeg[k.head] == 0 {
                    stack.push(k.head);
                }
            }
        }
    }
    seen == g.node_count()
}

/// Cheapest single-tree structure serving `sources` (one entry per demand)
/// toward `dest`, by enumerating every span as unused, primary in either
/// direction or protection in either direction. The acceptance rules are the
/// tree constraints written out directly, with protection fan-in limited by
/// `beta`.
pub fn cheapest_single_tree(g: &NetworkGraph, dest: NodeId, sources: &[NodeId], beta: f64) -> Option<f64> {
    let m = g.spans().len();
    assert!(m <= 10, "enumeration is 5^spans");
    let nv = g.node_count();
    let mut local = vec![0usize; nv];
    for &s in sources {
        local[s] += 1;
    }
    let mut state = vec![0u8; m];
    let mut best: Option<f64> = None;
    loop {
        let mut prim = Vec::new();
        let mut prot = Vec::new();
        let mut cost = 0.0;
        for (si, &st) in state.iter().enumerate() {
            let span = &g.spans()[si];
            match st {
                0 => {}
                1 | 2 => prim.push(span.links[(st - 1) as usize]),
                _ => prot.push(span.links[(st - 3) as usize]),
            }
            if st != 0 {
                cost += g.link(span.links[0]).cost();
            }
        }
        if best.is_none_or(|b| cost < b - 1e-9) && feasible_tree(g, dest, &local, sources.len(), &prim, &prot, beta) {
            best = Some(cost);
        }
        let mut i = 0;
        loop {
            if i == m {
                return best;
            }
            state[i] += 1;
            if state[i] < 5 {
                break;
            }
            state[i] = 0;
            i += 1;
        }
    }
}

fn feasible_tree(
    g: &NetworkGraph,
    dest: NodeId,
    local: &[usize],
    n: usize,
    prim: &[LinkId],
    prot: &[LinkId],
    beta: f64,
) -> bool {
    let nv = g.node_count();
    let (mut pin, mut pout, mut cin, mut cout) = (vec![0; nv], vec![0; nv], vec![0; nv], vec![0; nv]);
    for &l in prim {
        pin[g.link(l).head] += 1;
        pout[g.link(l).tail] += 1;
    }
    for &l in prot {
        cin[g.link(l).head] += 1;
        cout[g.link(l).tail] += 1;
    }
    if pin[dest] != n || pout[dest] != 0 || cout[dest] != 0 || beta * (cin[dest] as f64) < n as f64 - 1e-9 {
        return false;
    }
    for v in (0..nv).filter(|&v| v != dest) {
        if pout[v] != local[v] + pin[v] {
            return false;
        }
        if beta * (cout[v] as f64) < (local[v] + cin[v]) as f64 - 1e-9 {
            return false;
        }
    }
    acyclic(g, prim) && acyclic(g, prot)
}

/// Minimum total capacity for a same-destination demand list with at most
/// `trees` trees, over every assignment of demands to trees.
pub fn tree_oracle(g: &NetworkGraph, dest: NodeId, sources: &[NodeId], trees: usize) -> Option<f64> {
    let beta = sources.len() as f64 + 1.0;
    let n = sources.len();
    let mut memo: BTreeMap<u32, Option<f64>> = BTreeMap::new();
    let mut cost_of = |mask: u32| -> Option<f64> {
        *memo.entry(mask).or_insert_with(|| {
            let s: Vec<NodeId> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| sources[i]).collect();
            cheapest_single_tree(g, dest, &s, beta)
        })
    };
    // label each demand with a tree index; empty trees cost nothing
    let mut best: Option<f64> = None;
    let mut label = vec![0usize; n];
    loop {
        let mut total = Some(0.0);
        for t in 0..trees {
            let mask = (0..n).filter(|&i| label[i] == t).fold(0u32, |m, i| m | 1 << i);
            if mask != 0 {
                total = match (total, cost_of(mask)) {
                    (Some(a), Some(b)) => Some(a + b),
                    _ => None,
                };
            }
        }
        if let Some(t) = total {
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            label[i] += 1;
            if label[i] < trees {
                break;
            }
            label[i] = 0;
            i += 1;
        }
    }
}

// -------------------------------------------------------------- GF(2) oracle

/// Rank of rows given as bitmasks, by plain elimination.
pub fn rank_u64(rows: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for &r in rows {
        let mut x = r;
        for &b in &basis {
            x = x.min(x ^ b);
        }
        if x != 0 {
            basis.push(x);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Every single-row deletion leaves full column rank.
pub fn full_rank_after_any_deletion(rows: &[u64], columns: usize) -> bool {
    (0..rows.len()).all(|skip| {
        let rest: Vec<u64> = rows.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &r)| r).collect();
        rank_u64(&rest) == columns
    })
}

/// Whether `target` is the XOR of some subset of `rows`, by trying subsets.
pub fn in_span_by_subsets(rows: &[u64], target: u64) -> bool {
    assert!(rows.len() <= 20);
    (0u32..1 << rows.len()).any(|mask| {
        let x = (0..rows.len()).filter(|i| mask >> i & 1 == 1).fold(0u64, |a, i| a ^ rows[i]);
        x == target
    })
}

// ---------------------------------------------------- static decode oracle

/// Simulate one static tree under a span cut. Primary paths arrive intact or
/// not at all. Protection nodes XOR their local signals with every incoming
/// protection link and send the result on each outgoing protection link; any
/// cut input taints the output. Returns the demands the destination can
/// recover.
pub fn static_tree_survivors(
    g: &NetworkGraph,
    tree: &DesignTree,
    primary_paths: &BTreeMap<usize, Vec<LinkId>>,
    cut: SpanId,
) -> BTreeSet<usize> {
    let ids: Vec<usize> = tree.demands.iter().map(|d| d.id).collect();
    let col = |id: usize| 1u64 << ids.iter().position(|&x| x == id).unwrap();
    let mut rows = Vec::new();
    for (&id, path) in primary_paths {
        if path.iter().all(|&l| g.span_of(l) != cut) {
            rows.push(col(id));
        }
    }
    // evaluate protection outputs in dependency order
    let mut out: BTreeMap<NodeId, Option<u64>> = BTreeMap::new();
    let nodes: BTreeSet<NodeId> = tree.protection_links.iter().map(|&l| g.link(l).tail).collect();
    let mut pending: Vec<NodeId> = nodes.into_iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|&v| {
            let inputs: Vec<LinkId> = tree.protection_links.iter().copied().filter(|&l| g.link(l).head == v).collect();
            if inputs.iter().any(|&l| !out.contains_key(&g.link(l).tail)) {
                return true;
            }
            let mut acc = Some(tree.demands.iter().filter(|d| d.source == v).fold(0u64, |a, d| a ^ col(d.id)));
            for l in inputs {
                let upstream = out[&g.link(l).tail];
                acc = match (acc, upstream) {
                    (Some(a), Some(b)) if g.span_of(l) != cut => Some(a ^ b),
                    _ => None,
                };
            }
            out.insert(v, acc);
            false
        });
        assert!(pending.len() < before, "protection links contain a cycle");
    }
    for &l in &tree.protection_links {
        if g.link(l).head == tree.destination && g.span_of(l) != cut {
            if let Some(Some(x)) = out.get(&g.link(l).tail) {
                rows.push(*x);
            }
        }
    }
    ids.iter().copied().filter(|&id| in_span_by_subsets(&rows, col(id))).collect()
}

// --------------------------------------------------- buffer equalization

/// Walk every primary path and protection route adding link delays and the
/// buffers met along the way; return the distinct totals.
pub fn path_totals(
    g: &NetworkGraph,
    tree: &DesignTree,
    primary: &BTreeMap<usize, Vec<LinkId>>,
    protection: &BTreeMap<usize, Vec<LinkId>>,
    plan: &BufferPlan,
    delay: impl Fn(LinkId) -> Rational64,
) -> BTreeSet<Rational64> {
    let buf = |s: BufferSite| plan.buffer(s).unwrap_or_default();
    let mut totals = BTreeSet::new();
    for (&id, path) in primary {
        let sum: Rational64 = path.iter().map(|&l| delay(l)).sum();
        totals.insert(sum + buf(BufferSite::Destination(Arrival::Primary(id))));
    }
    for d in &tree.demands {
        let route = &protection[&d.id];
        let mut t = buf(BufferSite::Encoder { node: d.source, input: EncodingInput::Local(d.id) });
        for (k, &l) in route.iter().enumerate() {
            t += delay(l);
            if k + 1 < route.len() {
                t += buf(BufferSite::Encoder { node: g.link(l).head, input: EncodingInput::Link(l) });
            } else {
                t += buf(BufferSite::Destination(Arrival::Protection(l)));
            }
        }
        totals.insert(t);
    }
    totals
}

pub fn demands_to(dest: NodeId, sources: &[NodeId]) -> Vec<Demand> {
    sources.iter().enumerate().map(|(i, &s)| Demand::new(i, s, dest)).collect()
}
