//! Blocking probability on Smallnet as offered load and link capacity grow.
//! Prints CSV suitable for plotting.

use divcode::dynamic::{replay, ProvisionState};
use divcode::graph::{load_topology, Capacity};
use divcode::traffic::{dynamic_event_stream, TrafficModel, TrafficSpec};

fn main() {
    let g = load_topology(include_str!("../data/smallnet.topo")).unwrap();
    println!("capacity,load,offered,blocked,blocking");
    for cap in [1, 2, 3] {
        let gc = g.with_uniform_capacity(Capacity::Limited(cap));
        for load in [5.0, 10.0, 20.0, 40.0, 80.0] {
            let spec = TrafficSpec { model: TrafficModel::Uniform, count: 2000, seed: 42, load, rate: 1.0 };
            let events = dynamic_event_stream(&gc, &spec, f64::INFINITY).unwrap();
            let mut st = ProvisionState::new(gc.clone());
            let log = replay(&mut st, &events, 0, |_, _, _, _| {}).unwrap();
            println!("{cap},{load},{},{},{:.4}", log.offered, log.blocked, log.blocking_probability());
        }
    }
}
