//! Load the bundled topologies and print basic facts about each.

use divcode::graph::{format_rational, load_topology};
use divcode::routing::shortest_path;

fn main() {
    for (name, text) in [
        ("nsfnet", include_str!("../data/nsfnet.topo")),
        ("smallnet", include_str!("../data/smallnet.topo")),
        ("fig1", include_str!("../data/fig1.topo")),
    ] {
        let g = load_topology(text).expect("bundled topology parses");
        let min_deg = g.nodes().map(|v| g.degree(v)).min().unwrap_or(0);
        println!("{name}: {} nodes, {} spans, {} links, min degree {min_deg}", g.node_count(), g.spans().len(), g.links().len());
        let far = g.nodes().last().unwrap();
        if let Some(p) = shortest_path(&g, 0, far, |_| true) {
            let nodes = g.path_nodes(&p).unwrap();
            println!("  shortest 0 -> {far}: {nodes:?}, length {}, delay {}", format_rational(g.path_length(&p)), format_rational(g.path_delay(&p)));
        }
    }
    let g = load_topology("nodes 3\nspan 0 1 10\nspan 1 2 10\nspan 0 2 25\n").unwrap();
    print!("round trip:\n{}", g.to_topology_string());
}
