//! Fail every span of a designed network and report how each connection
//! survives, for both a static tree design and a dynamic one.

use std::time::Duration;

use divcode::dynamic::ProvisionState;
use divcode::failure::{restoration_time, simulate_span_failure, verify_design, Design, Mode, Outcome, RestorationParams};
use divcode::graph::{load_topology, SpanId};
use divcode::ip::SolveOptions;
use divcode::demand::Demand;
use divcode::traffic::uniform_demands;
use divcode::tree::{solve_all, TreeConfig};

fn main() {
    let g = load_topology(include_str!("../data/nsfnet.topo")).unwrap();
    let params = RestorationParams::default();
    println!(
        "restoration time: static {:?}, dynamic {:?}",
        restoration_time(&params, Mode::Static),
        restoration_time(&params, Mode::Dynamic)
    );

    let demands = uniform_demands(&g, 8, 3).unwrap();
    let sol = solve_all(&g, &demands, &TreeConfig::default(), &SolveOptions::with_time_limit(Duration::from_secs(5))).unwrap();
    let report = simulate_span_failure(&g, Design::Static(&sol), SpanId(0), &params).unwrap();
    let s = g.span(SpanId(0));
    println!("span {}-{} cut:", s.a, s.b);
    for o in &report.outcomes {
        match &o.outcome {
            Outcome::Delivered => println!("  connection {}: unaffected", o.connection),
            Outcome::Recovered { recipe } => {
                println!("  connection {}: recovered from {} after {:?}", o.connection, recipe.join(" ^ "), o.restoration.unwrap())
            }
            Outcome::Lost => println!("  connection {}: LOST", o.connection),
        }
    }
    let v = verify_design(&g, Design::Static(&sol), &params);
    println!("static design, all {} spans: {}", g.spans().len(), if v.passed() { "every connection survives" } else { "losses" });

    let mut st = ProvisionState::new(g.clone());
    for d in &demands {
        st.provision_demand(&Demand::new(d.id, d.source, d.destination)).unwrap();
    }
    let v = verify_design(&g, Design::Dynamic(&st), &params);
    println!("dynamic design, all spans: {} lost", v.lost());
}
