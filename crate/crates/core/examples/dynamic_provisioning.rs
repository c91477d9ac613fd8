//! Provision a handful of connections one at a time, showing which coding
//! group each joins and what it costs, then tear one down.

use divcode::demand::Demand;
use divcode::dynamic::{ProvisionOutcome, ProvisionState};
use divcode::graph::load_topology;

fn main() {
    let g = load_topology(include_str!("../data/nsfnet.topo")).unwrap();
    let mut st = ProvisionState::new(g);
    let requests = [(0, 13), (2, 13), (5, 13), (1, 8), (3, 8), (12, 13)];
    for (id, &(s, d)) in requests.iter().enumerate() {
        match st.provision_demand(&Demand::new(id, s, d)).unwrap() {
            ProvisionOutcome::Provisioned { group, new_group, esc, primary, secondary, candidates, .. } => {
                let how = if new_group { "opens" } else { "joins" };
                println!(
                    "{s} -> {d}: {how} group {group}, extra cost {esc} ({} + {} links, {} options tried)",
                    primary.len(),
                    secondary.len(),
                    candidates.len()
                );
            }
            ProvisionOutcome::Blocked { .. } => println!("{s} -> {d}: blocked"),
        }
        st.audit().expect("groups stay decodable");
    }
    println!("capacity in use: {} link units, {} km", st.used_units(), st.owned_cost());
    print!("{}", st.snapshot());

    let freed = st.teardown_connection(1).unwrap();
    st.audit().unwrap();
    println!("after tearing down connection 1: {} links freed, {} km in use", freed.len(), st.owned_cost());
}
