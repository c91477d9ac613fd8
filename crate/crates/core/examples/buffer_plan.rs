//! Buffer plan for the three-source example tree with unit link delays.
//!
//! Sources 0, 1 and 3 send to node 5. The protection tree merges the first
//! two at node 1 and the third at node 2, so the encoders and the decoder
//! need delay buffers to line the copies up.

use divcode::demand::Demand;
use divcode::graph::{format_rational, load_topology};
use divcode::tree::{check_equalization, compute_buffer_plan_with, extract_paths, DesignTree};
use num_rational::Rational64;

fn main() {
    let g = load_topology(include_str!("../data/fig1.topo")).unwrap();
    let l = |u, v| g.link_between(u, v).unwrap();
    let mut t = DesignTree::new(5);
    t.demands = vec![Demand::new(0, 0, 5), Demand::new(1, 1, 5), Demand::new(2, 3, 5)];
    t.primary_links = [l(0, 5), l(1, 6), l(6, 5), l(3, 9), l(9, 10), l(10, 5)].into();
    t.protection_links = [l(0, 1), l(1, 2), l(2, 5), l(3, 2)].into();

    let paths = extract_paths(&g, &t, 0).unwrap();
    let unit = |_| Some(Rational64::from_integer(1));
    let plan = compute_buffer_plan_with(&g, &t, &paths, unit).unwrap();
    println!("reference arrival {}", format_rational(plan.reference));
    for b in &plan.buffers {
        println!("{:?}: {}", b.site, format_rational(b.delay));
    }
    for p in &plan.paths {
        println!("{:?} demand {}: path delay {}", p.kind, p.demand, format_rational(p.delay));
    }
    check_equalization(&g, &t, &paths, &plan, |_| Rational64::from_integer(1)).unwrap();
    println!("every path plus its buffers reaches the decoder at the reference time");
}
