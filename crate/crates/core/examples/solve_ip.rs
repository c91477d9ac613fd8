//! A small set-cover model solved with the built-in branch-and-bound.
//!
//! Pick the cheapest set of monitoring sites so every link is watched by at
//! least one endpoint.

use divcode::ip::{solve, IpModel, LinExpr, Sense, SolveOptions, SolveStatus};

fn main() {
    let costs = [4.0, 3.0, 5.0, 2.0, 6.0, 3.0];
    let links = [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (4, 5), (2, 5), (1, 4)];

    let mut m = IpModel::new();
    let site: Vec<_> = (0..costs.len()).map(|i| m.add_binary(format!("site{i}"))).collect();
    for &(a, b) in &links {
        let expr = LinExpr::new().term(site[a], 1.0).term(site[b], 1.0);
        m.add_constraint(format!("cover_{a}_{b}"), expr, Sense::Ge, 1.0).unwrap();
    }
    let obj = site.iter().zip(costs).fold(LinExpr::new(), |e, (&v, c)| e.term(v, c));
    m.set_objective(obj).unwrap();

    print!("{}", m.to_lp_string());
    let sol = solve(&m, &SolveOptions::default()).expect("model is bounded");
    assert_eq!(sol.status, SolveStatus::Optimal);
    let chosen: Vec<usize> = (0..costs.len()).filter(|&i| sol.is_set(site[i])).collect();
    println!("optimal cost {} with sites {chosen:?} ({} nodes, root bound {:.3})", sol.objective, sol.nodes, sol.root_bound);

    // an odd cycle of pairwise exclusions cannot be covered by at most one pick
    let mut bad = IpModel::new();
    let x: Vec<_> = (0..3).map(|i| bad.add_binary(format!("x{i}"))).collect();
    bad.add_constraint("two", LinExpr::sum(x.iter().copied()), Sense::Ge, 2.0).unwrap();
    bad.add_constraint("one", LinExpr::sum(x.iter().copied()), Sense::Le, 1.0).unwrap();
    println!("contradictory model: {:?}", solve(&bad, &SolveOptions::default()).unwrap().status);
}
