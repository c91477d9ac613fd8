//! Design coding trees for a seeded demand set on NSFNET and report the
//! capacity each destination needs.
//!
//! `cargo run --release --example static_design -- [demands] [seed]`

use std::time::Duration;

use divcode::graph::load_topology;
use divcode::ip::SolveOptions;
use divcode::traffic::uniform_demands;
use divcode::tree::{solve_all, total_capacity, validate_tree_set, TreeConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse().expect("demand count")).unwrap_or(12);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(7);

    let g = load_topology(include_str!("../data/nsfnet.topo")).unwrap();
    let demands = uniform_demands(&g, n, seed).unwrap();
    let opts = SolveOptions::with_time_limit(Duration::from_secs(5));
    let sol = solve_all(&g, &demands, &TreeConfig::default(), &opts).expect("NSFNET is two-edge-connected");

    for r in &sol.reports {
        println!(
            "dest {:>2}: {:>2} demands, {} trees, cost {:>6}, {:?} (gap {:.3}, {} nodes)",
            r.destination, r.demands, r.trees, r.objective, r.status, r.gap, r.nodes
        );
    }
    for (i, t) in sol.trees.iter().enumerate() {
        let srcs: Vec<_> = t.demands.iter().map(|d| d.source).collect();
        println!("tree {i} -> {}: sources {srcs:?}, {} primary + {} protection links", t.destination, t.primary_links.len(), t.protection_links.len());
    }
    println!("total capacity {} km", total_capacity(&g, &sol));
    let report = validate_tree_set(&g, &sol);
    println!("structural check: {}", if report.is_clean() { "clean".to_string() } else { format!("{:?}", report.violations) });
}
