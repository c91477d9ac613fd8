//! Seeded demand sets and a dynamic event stream.

use divcode::graph::load_topology;
use divcode::traffic::{dynamic_event_stream, gravity_demands, parse_populations, uniform_demands, TrafficModel, TrafficSpec};

fn main() {
    let g = load_topology(include_str!("../data/nsfnet.topo")).unwrap();
    let pop = parse_populations(include_str!("../data/nsfnet.pop")).unwrap();

    let count_dest = |ds: &[divcode::demand::Demand]| {
        let mut c = vec![0usize; g.node_count()];
        for d in ds {
            c[d.destination] += 1;
        }
        c
    };
    let uni = uniform_demands(&g, 2000, 1).unwrap();
    let grav = gravity_demands(&g, 2000, &pop, 1).unwrap();
    println!("demands per destination, uniform: {:?}", count_dest(&uni));
    println!("demands per destination, gravity: {:?}", count_dest(&grav));

    let spec = TrafficSpec { model: TrafficModel::Uniform, count: 0, seed: 9, load: 5.0, rate: 2.0 };
    let events = dynamic_event_stream(&g, &spec, 10.0).unwrap();
    print!("{}", divcode::dynamic::write_trace(&events[..events.len().min(8)]));
    println!("... {} events within a horizon of 10 time units", events.len());
}
