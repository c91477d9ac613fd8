//! Seeded demand sets and dynamic arrival/departure streams.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use thiserror::Error;

use crate::demand::Demand;
use crate::dynamic::Event;
use crate::graph::{NetworkGraph, NodeId};

#[derive(Clone, Debug, PartialEq)]
pub enum TrafficModel {
    Uniform,
    /// Pair weight proportional to `pop(src) * pop(dst)`.
    Gravity(BTreeMap<NodeId, f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrafficSpec {
    pub model: TrafficModel,
    /// Number of demands; for event streams a cap on arrivals (0 = no cap).
    pub count: usize,
    pub seed: u64,
    /// Offered load in Erlangs (arrival rate times mean holding time).
    pub load: f64,
    /// Arrival rate; the mean holding time is `load / rate`.
    pub rate: f64,
}

impl Default for TrafficSpec {
    fn default() -> Self {
        TrafficSpec { model: TrafficModel::Uniform, count: 0, seed: 0, load: 0.0, rate: 1.0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("no population given for node {0}")]
    MissingPopulation(NodeId),
    #[error("population of node {0} must be finite and nonnegative")]
    InvalidPopulation(NodeId),
    #[error("every node pair has zero weight")]
    ZeroWeights,
    #[error("at least two nodes are needed")]
    TooFewNodes,
    #[error("load and rate must be finite, load nonnegative and rate positive")]
    InvalidLoad,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

// independent streams so that changing one knob leaves the others' draws alone
const PAIRS: u64 = 1;
const GAPS: u64 = 2;
const HOLDING: u64 = 3;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

enum PairSampler {
    Uniform(usize),
    Weighted(Vec<(NodeId, NodeId)>, WeightedIndex<f64>),
}

impl PairSampler {
    fn new(g: &NetworkGraph, model: &TrafficModel) -> Result<Self, TrafficError> {
        let n = g.node_count();
        if n < 2 {
            return Err(TrafficError::TooFewNodes);
        }
        match model {
            TrafficModel::Uniform => Ok(PairSampler::Uniform(n)),
            TrafficModel::Gravity(pop) => {
                for v in g.nodes() {
                    let p = *pop.get(&v).ok_or(TrafficError::MissingPopulation(v))?;
                    if !(p.is_finite() && p >= 0.0) {
                        return Err(TrafficError::InvalidPopulation(v));
                    }
                }
                let pairs: Vec<(NodeId, NodeId)> =
                    g.nodes().flat_map(|s| g.nodes().filter(move |&d| d != s).map(move |d| (s, d))).collect();
                let w: Vec<f64> = pairs.iter().map(|&(s, d)| pop[&s] * pop[&d]).collect();
                let idx = WeightedIndex::new(&w).map_err(|_| TrafficError::ZeroWeights)?;
                Ok(PairSampler::Weighted(pairs, idx))
            }
        }
    }

    fn sample(&self, r: &mut ChaCha8Rng) -> (NodeId, NodeId) {
        match self {
            PairSampler::Uniform(n) => {
                let s = r.random_range(0..*n);
                let mut d = r.random_range(0..*n - 1);
                if d >= s {
                    d += 1;
                }
                (s, d)
            }
            PairSampler::Weighted(pairs, idx) => pairs[idx.sample(r)],
        }
    }
}

/// `n` demands with source and destination uniform over ordered pairs of
/// distinct nodes. Repeated pairs are allowed.
pub fn uniform_demands(g: &NetworkGraph, n: usize, seed: u64) -> Result<Vec<Demand>, TrafficError> {
    demands(g, &TrafficModel::Uniform, n, seed)
}

/// `n` demands drawn with probability proportional to `pop(s) * pop(d)`.
pub fn gravity_demands(
    g: &NetworkGraph,
    n: usize,
    populations: &BTreeMap<NodeId, f64>,
    seed: u64,
) -> Result<Vec<Demand>, TrafficError> {
    demands(g, &TrafficModel::Gravity(populations.clone()), n, seed)
}

pub fn demands(g: &NetworkGraph, model: &TrafficModel, n: usize, seed: u64) -> Result<Vec<Demand>, TrafficError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let sampler = PairSampler::new(g, model)?;
    let mut r = rng(seed, PAIRS);
    Ok((0..n)
        .map(|id| {
            let (s, d) = sampler.sample(&mut r);
            Demand::new(id, s, d)
        })
        .collect())
}

/// Poisson arrivals at `spec.rate` up to `horizon` (and at most `spec.count`
/// arrivals when nonzero), each held for an exponential time with mean
/// `spec.load / spec.rate`. Every arrival gets its departure, even past the
/// horizon. For a fixed seed, raising the load stretches the same holding
/// times without moving any arrival.
pub fn dynamic_event_stream(g: &NetworkGraph, spec: &TrafficSpec, horizon: f64) -> Result<Vec<Event>, TrafficError> {
    if !(spec.load.is_finite() && spec.load >= 0.0 && spec.rate.is_finite() && spec.rate > 0.0) {
        return Err(TrafficError::InvalidLoad);
    }
    if spec.load == 0.0 {
        return Ok(Vec::new());
    }
    let sampler = PairSampler::new(g, &spec.model)?;
    let mean_hold = spec.load / spec.rate;
    let (mut pr, mut gr, mut hr) = (rng(spec.seed, PAIRS), rng(spec.seed, GAPS), rng(spec.seed, HOLDING));
    let mut events = Vec::new();
    let mut t = 0.0;
    for id in 0.. {
        if spec.count > 0 && id >= spec.count {
            break;
        }
        let gap: f64 = Exp1.sample(&mut gr);
        t += gap / spec.rate;
        if t > horizon {
            break;
        }
        let (source, destination) = sampler.sample(&mut pr);
        let hold: f64 = Exp1.sample(&mut hr);
        events.push(Event::Arrive { id, source, destination, time: t });
        events.push(Event::Depart { id, time: t + hold * mean_hold });
    }
    // departures first at equal times so capacity frees before it is needed
    events.sort_by(|a, b| {
        let rank = |e: &Event| matches!(e, Event::Arrive { .. }) as u8;
        a.time().total_cmp(&b.time()).then(rank(a).cmp(&rank(b))).then(a.id().cmp(&b.id()))
    });
    Ok(events)
}

/// Read `<node> <weight>` lines.
pub fn parse_populations(text: &str) -> Result<BTreeMap<NodeId, f64>, TrafficError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: &str| TrafficError::Parse { line, msg: msg.to_string() };
        let w: Vec<&str> = body.split_whitespace().collect();
        let [node, weight] = w.as_slice() else {
            return Err(err("expected `<node> <weight>`"));
        };
        let node: NodeId = node.parse().map_err(|_| err("bad node id"))?;
        let weight: f64 = weight.parse().map_err(|_| err("bad weight"))?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(err("weight must be finite and nonnegative"));
        }
        if out.insert(node, weight).is_some() {
            return Err(err("duplicate node"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn ring(n: usize) -> NetworkGraph {
        let mut b = GraphBuilder::new(n);
        for i in 0..n {
            b = b.span(i, (i + 1) % n, 1);
        }
        b.build().unwrap()
    }

    #[test]
    fn uniform_basics() {
        let g = ring(5);
        assert!(uniform_demands(&g, 0, 1).unwrap().is_empty());
        let a = uniform_demands(&g, 50, 7).unwrap();
        assert_eq!(a.len(), 50);
        assert!(a.iter().all(|d| d.source != d.destination));
        assert_eq!(a, uniform_demands(&g, 50, 7).unwrap());
        assert_ne!(a, uniform_demands(&g, 50, 8).unwrap());
    }

    #[test]
    fn gravity_zero_weight_node_never_drawn() {
        let g = ring(4);
        let pop: BTreeMap<_, _> = [(0, 1.0), (1, 2.0), (2, 0.0), (3, 5.0)].into();
        let ds = gravity_demands(&g, 2000, &pop, 3).unwrap();
        assert!(ds.iter().all(|d| d.source != 2 && d.destination != 2));
        let missing: BTreeMap<_, _> = [(0, 1.0)].into();
        assert_eq!(gravity_demands(&g, 1, &missing, 0), Err(TrafficError::MissingPopulation(1)));
        let zero: BTreeMap<_, _> = [(0, 1.0), (1, 0.0), (2, 0.0), (3, 0.0)].into();
        assert_eq!(gravity_demands(&g, 1, &zero, 0), Err(TrafficError::ZeroWeights));
    }

    #[test]
    fn streams() {
        let g = ring(4);
        let spec = TrafficSpec { load: 0.0, ..Default::default() };
        assert!(dynamic_event_stream(&g, &spec, 100.0).unwrap().is_empty());
        let spec = TrafficSpec { load: 3.0, seed: 11, count: 40, ..Default::default() };
        let ev = dynamic_event_stream(&g, &spec, 1e9).unwrap();
        assert_eq!(ev.len(), 80);
        assert!(ev.windows(2).all(|w| w[0].time() <= w[1].time()));
        let mut arrived = std::collections::BTreeSet::new();
        for e in &ev {
            match e {
                Event::Arrive { id, .. } => assert!(arrived.insert(*id)),
                Event::Depart { id, .. } => assert!(arrived.contains(id)),
            }
        }
        assert_eq!(ev, dynamic_event_stream(&g, &spec, 1e9).unwrap());
    }

    #[test]
    fn load_only_stretches_holding() {
        let g = ring(4);
        let lo = TrafficSpec { load: 1.0, seed: 5, count: 20, ..Default::default() };
        let hi = TrafficSpec { load: 4.0, ..lo.clone() };
        let arrivals = |ev: Vec<Event>| -> Vec<Event> { ev.into_iter().filter(|e| matches!(e, Event::Arrive { .. })).collect() };
        assert_eq!(arrivals(dynamic_event_stream(&g, &lo, 1e9).unwrap()), arrivals(dynamic_event_stream(&g, &hi, 1e9).unwrap()));
    }

    #[test]
    fn population_file() {
        let p = parse_populations("# metro\n0 8.4\n1 3\n").unwrap();
        assert_eq!(p[&0], 8.4);
        assert!(parse_populations("0 -1\n").is_err());
        assert!(parse_populations("0 1\n0 2\n").is_err());
    }
}
