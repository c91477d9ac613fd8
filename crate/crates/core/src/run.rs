//! Command pipelines behind the `divcode` binary.
//!
//! Options arrive as a flat key/value map: the config file is read first and
//! command-line flags override it. Keys use the long flag names.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::demand::{parse_demands, write_demands, Demand, DemandError};
use crate::dynamic::{parse_trace, replay, write_trace, Event, EventOutcome, ProvisionState, TraceError};
use crate::failure::{report_csv, verify_design, Design, RestorationParams};
use crate::graph::{format_rational, load_topology, Capacity, NetworkGraph, TopologyError};
use crate::ip::{SolveOptions, SolveStatus};
use crate::traffic::{demands, dynamic_event_stream, parse_populations, TrafficError, TrafficModel, TrafficSpec};
use crate::tree::{
    compute_buffer_plan, extract_paths, parse_solution, solve_all, total_capacity, write_solution, Arrival, BufferSite,
    EncodingInput, TreeConfig, TreeError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_TIME_LIMIT: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Preprovision,
    Dynamic,
    Verify,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    pub topology: PathBuf,
    pub demands: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub solution: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Used when no demand or trace file is given.
    pub traffic: TrafficSpec,
    pub populations: Option<PathBuf>,
    pub horizon: f64,
    /// Overrides every link capacity for dynamic runs.
    pub capacity: Option<Capacity>,
    pub tree: TreeConfig,
    pub restoration: RestorationParams,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    pub audit_every: usize,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("demands: {0}")]
    Demand(#[from] DemandError),
    #[error("trace: {0}")]
    Trace(#[from] TraceError),
    #[error("traffic: {0}")]
    Traffic(#[from] TrafficError),
    #[error("{0}")]
    Tree(#[from] TreeError),
}

const KEYS: &[&str] = &[
    "mode",
    "topology",
    "demands",
    "trace",
    "solution",
    "out",
    "traffic",
    "count",
    "seed",
    "load",
    "rate",
    "horizon",
    "populations",
    "capacity",
    "trees-per-group",
    "alpha",
    "beta",
    "fixed-primaries",
    "symmetry-breaking",
    "time-limit",
    "node-limit",
    "audit-every",
    "detection-us",
    "processing-us",
    "configuration-us",
];

/// Parse a flat `key = value` file (`#` comments, blank lines ignored).
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, RunError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| RunError::Config(format!("config line {}: expected `key = value`", idx + 1)))?;
        let k = k.trim().to_string();
        if !KEYS.contains(&k.as_str()) {
            return Err(RunError::Config(format!("config line {}: unknown key `{k}`", idx + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn parse_val<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, RunError> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| RunError::Config(format!("invalid value `{v}` for {key}"))))
        .transpose()
}

fn parse_bool(map: &BTreeMap<String, String>, key: &str, default: bool) -> Result<bool, RunError> {
    match map.get(key).map(String::as_str) {
        None => Ok(default),
        Some("true" | "yes" | "1" | "on") => Ok(true),
        Some("false" | "no" | "0" | "off") => Ok(false),
        Some(v) => Err(RunError::Config(format!("invalid value `{v}` for {key}"))),
    }
}

fn micros(map: &BTreeMap<String, String>, key: &str, default: Duration) -> Result<Duration, RunError> {
    Ok(parse_val::<u64>(map, key)?.map(Duration::from_micros).unwrap_or(default))
}

impl RunConfig {
    /// Build from config-file entries overridden by flag entries.
    pub fn from_maps(file: BTreeMap<String, String>, flags: BTreeMap<String, String>) -> Result<RunConfig, RunError> {
        let mut map = file;
        map.extend(flags);
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(RunError::Config(format!("unknown option `{k}`")));
        }
        let path = |k: &str| map.get(k).map(PathBuf::from);
        let mode = match map.get("mode").map(String::as_str) {
            Some("preprovision") => RunMode::Preprovision,
            Some("dynamic") => RunMode::Dynamic,
            Some("verify") => RunMode::Verify,
            Some(other) => return Err(RunError::Config(format!("unknown mode `{other}`"))),
            None => return Err(RunError::Config("--mode is required".into())),
        };
        let topology = path("topology").ok_or_else(|| RunError::Config("--topology is required".into()))?;
        if map.contains_key("demands") && map.contains_key("trace") {
            return Err(RunError::Config("--demands and --trace are mutually exclusive".into()));
        }
        let traffic_model = match map.get("traffic").map(String::as_str) {
            None | Some("uniform") => TrafficModel::Uniform,
            // populations are filled in when the file is read
            Some("gravity") => TrafficModel::Gravity(BTreeMap::new()),
            Some(other) => return Err(RunError::Config(format!("unknown traffic model `{other}`"))),
        };
        if matches!(traffic_model, TrafficModel::Gravity(_)) && !map.contains_key("populations") {
            return Err(RunError::Config("gravity traffic needs --populations".into()));
        }
        let capacity = match map.get("capacity").map(String::as_str) {
            None => None,
            Some("inf" | "unlimited") => Some(Capacity::Unlimited),
            Some(v) => Some(Capacity::Limited(
                v.parse().map_err(|_| RunError::Config(format!("invalid value `{v}` for capacity")))?,
            )),
        };
        let defaults = RestorationParams::default();
        let time_limit = match parse_val::<f64>(&map, "time-limit")? {
            Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
            Some(_) => return Err(RunError::Config("time-limit must be a positive number of seconds".into())),
            None => None,
        };
        Ok(RunConfig {
            mode,
            topology,
            demands: path("demands"),
            trace: path("trace"),
            solution: path("solution"),
            out: path("out"),
            traffic: TrafficSpec {
                model: traffic_model,
                count: parse_val(&map, "count")?.unwrap_or(0),
                seed: parse_val(&map, "seed")?.unwrap_or(0),
                load: parse_val(&map, "load")?.unwrap_or(0.0),
                rate: parse_val(&map, "rate")?.unwrap_or(1.0),
            },
            populations: path("populations"),
            horizon: parse_val(&map, "horizon")?.unwrap_or(f64::INFINITY),
            capacity,
            tree: TreeConfig {
                max_trees: parse_val(&map, "trees-per-group")?,
                alpha: parse_val(&map, "alpha")?,
                beta: parse_val(&map, "beta")?,
                symmetry_breaking: parse_bool(&map, "symmetry-breaking", true)?,
                fixed_shortest_primaries: parse_bool(&map, "fixed-primaries", false)?,
            },
            restoration: RestorationParams {
                detection: micros(&map, "detection-us", defaults.detection)?,
                processing: micros(&map, "processing-us", defaults.processing)?,
                configuration: micros(&map, "configuration-us", defaults.configuration)?,
            },
            time_limit,
            node_limit: parse_val(&map, "node-limit")?,
            audit_every: parse_val(&map, "audit-every")?.unwrap_or(1),
        })
    }
}

/// Exit code plus the lines meant for the terminal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub code: i32,
    pub messages: Vec<String>,
}

fn read(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

struct Artifacts<'a>(Option<&'a Path>);

impl Artifacts<'_> {
    fn write(&self, name: &str, body: &str) -> Result<(), RunError> {
        let Some(dir) = self.0 else { return Ok(()) };
        fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        let p = dir.join(name);
        fs::write(&p, body).map_err(|source| RunError::Io { path: p, source })
    }
}

fn load_graph(cfg: &RunConfig) -> Result<NetworkGraph, RunError> {
    Ok(load_topology(&read(&cfg.topology)?)?)
}

fn traffic_spec(cfg: &RunConfig) -> Result<TrafficSpec, RunError> {
    let mut spec = cfg.traffic.clone();
    if let (TrafficModel::Gravity(pop), Some(p)) = (&mut spec.model, &cfg.populations) {
        *pop = parse_populations(&read(p)?)?;
    }
    Ok(spec)
}

/// Dispatch on `cfg.mode`; errors map to exit code 1.
pub fn run(cfg: &RunConfig) -> RunOutcome {
    let result = match cfg.mode {
        RunMode::Preprovision => cmd_preprovision(cfg),
        RunMode::Dynamic => cmd_dynamic(cfg),
        RunMode::Verify => cmd_verify(cfg),
    };
    result.unwrap_or_else(|e| RunOutcome { code: EXIT_FAILURE, messages: vec![format!("error: {e}")] })
}

/// Design static protection for a demand set and verify it.
pub fn cmd_preprovision(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let g = load_graph(cfg)?;
    let demand_set: Vec<Demand> = match &cfg.demands {
        Some(p) => parse_demands(&read(p)?, Some(&g))?,
        None => {
            let spec = traffic_spec(cfg)?;
            demands(&g, &spec.model, spec.count, spec.seed)?
        }
    };
    let out = Artifacts(cfg.out.as_deref());
    out.write("demands.txt", &write_demands(&demand_set))?;

    let options = SolveOptions { time_limit: cfg.time_limit, node_limit: cfg.node_limit, incumbent: None };
    let sol = solve_all(&g, &demand_set, &cfg.tree, &options)?;
    out.write("solution.txt", &write_solution(&g, &sol))?;

    let mut summary = String::from("destination,demands,trees,status,objective,gap\n");
    let mut optimal = true;
    for r in &sol.reports {
        let status = match r.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::TimeLimitIncumbent => "incumbent",
            SolveStatus::Infeasible => "infeasible",
        };
        optimal &= r.status == SolveStatus::Optimal;
        let _ = writeln!(summary, "{},{},{},{status},{},{:.6}", r.destination, r.demands, r.trees, r.objective, r.gap);
    }
    let tc = total_capacity(&g, &sol);
    let _ = writeln!(summary, "total,{},{},{},{tc},", demand_set.len(), sol.trees.len(), if optimal { "optimal" } else { "incumbent" });
    out.write("summary.csv", &summary)?;

    let mut buffers = String::from("tree,destination,site,delay,reference\n");
    for (i, tree) in sol.trees.iter().enumerate() {
        let x = extract_paths(&g, tree, i)?;
        let plan = compute_buffer_plan(&g, tree, &x)?;
        for b in &plan.buffers {
            let site = match b.site {
                BufferSite::Encoder { node, input: EncodingInput::Local(id) } => format!("encoder {node} local {id}"),
                BufferSite::Encoder { node, input: EncodingInput::Link(l) } => {
                    format!("encoder {node} link {}>{}", g.link(l).tail, g.link(l).head)
                }
                BufferSite::Destination(Arrival::Primary(id)) => format!("destination primary {id}"),
                BufferSite::Destination(Arrival::Protection(l)) => {
                    format!("destination link {}>{}", g.link(l).tail, g.link(l).head)
                }
            };
            let _ = writeln!(
                buffers,
                "{i},{},{site},{},{}",
                tree.destination,
                format_rational(b.delay),
                format_rational(plan.reference)
            );
        }
    }
    out.write("buffers.csv", &buffers)?;

    let v = verify_design(&g, Design::Static(&sol), &cfg.restoration);
    out.write("verification.csv", &report_csv(&g, &v.reports))?;

    let mut messages = vec![format!("total capacity {tc} over {} demands in {} trees", demand_set.len(), sol.trees.len())];
    for r in sol.reports.iter().filter(|r| r.status != SolveStatus::Optimal) {
        messages.push(format!("destination {}: time limit reached, gap {:.4}", r.destination, r.gap));
    }
    let code = if !v.passed() {
        let (span, lost) = v.worst.expect("failed verification has a worst span");
        let s = g.span(span);
        messages.push(format!("verification FAIL: span {}-{} loses {lost} connection(s)", s.a, s.b));
        EXIT_FAILURE
    } else if !optimal {
        messages.push("verification PASS".into());
        EXIT_TIME_LIMIT
    } else {
        messages.push("verification PASS".into());
        EXIT_OK
    };
    Ok(RunOutcome { code, messages })
}

/// Replay arrivals and departures through coding-group provisioning.
pub fn cmd_dynamic(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let mut g = load_graph(cfg)?;
    if let Some(c) = cfg.capacity {
        g = g.with_uniform_capacity(c);
    }
    let events: Vec<Event> = match &cfg.trace {
        Some(p) => parse_trace(&read(p)?, Some(&g))?,
        None => dynamic_event_stream(&g, &traffic_spec(cfg)?, cfg.horizon)?,
    };
    let out = Artifacts(cfg.out.as_deref());
    out.write("trace.txt", &write_trace(&events))?;

    let mut timeline = String::from("event,time,active,groups,used_units,owned_cost\n");
    let mut state = ProvisionState::new(g.clone());
    let log = replay(&mut state, &events, cfg.audit_every, |i, st, ev, _| {
        let _ = writeln!(
            timeline,
            "{i},{},{},{},{},{}",
            ev.time(),
            st.connections().len(),
            st.groups().len(),
            st.used_units(),
            st.owned_cost()
        );
    })?;

    let mut esc = String::from("event,time,kind,connection,outcome,group,esc\n");
    for (i, (ev, outcome)) in log.entries.iter().enumerate() {
        let kind = if matches!(ev, Event::Arrive { .. }) { "arrive" } else { "depart" };
        let (what, group, cost) = match outcome {
            EventOutcome::Provisioned { group, esc, new_group } => {
                (if *new_group { "new-group" } else { "joined" }, group.to_string(), esc.to_string())
            }
            EventOutcome::Blocked => ("blocked", String::new(), String::new()),
            EventOutcome::Departed { freed } => ("departed", String::new(), format!("-{freed}")),
            EventOutcome::Ignored => ("ignored", String::new(), String::new()),
        };
        let _ = writeln!(esc, "{i},{},{kind},{},{what},{group},{cost}", ev.time(), ev.id());
    }
    out.write("events.csv", &esc)?;
    out.write("capacity.csv", &timeline)?;
    out.write("state.txt", &state.snapshot())?;
    let summary = format!(
        "offered,{}\nblocked,{}\nblocking_probability,{}\n",
        log.offered,
        log.blocked,
        log.blocking_probability()
    );
    out.write("summary.csv", &summary)?;
    Ok(RunOutcome {
        code: EXIT_OK,
        messages: vec![format!(
            "offered {} blocked {} blocking probability {:.6}",
            log.offered,
            log.blocked,
            log.blocking_probability()
        )],
    })
}

/// Fail every span against a saved solution.
pub fn cmd_verify(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let g = load_graph(cfg)?;
    let path = cfg.solution.as_ref().ok_or_else(|| RunError::Config("--solution is required for verify".into()))?;
    let sol = parse_solution(&g, &read(path)?)?;
    let v = verify_design(&g, Design::Static(&sol), &cfg.restoration);
    Artifacts(cfg.out.as_deref()).write("verification.csv", &report_csv(&g, &v.reports))?;
    Ok(match v.worst {
        None => RunOutcome {
            code: EXIT_OK,
            messages: vec![format!("verification PASS: {} spans, {} connections", g.spans().len(), sol.demand_count())],
        },
        Some((span, lost)) => {
            let s = g.span(span);
            RunOutcome {
                code: EXIT_FAILURE,
                messages: vec![format!("verification FAIL: span {}-{} loses {lost} connection(s)", s.a, s.b)],
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
        kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn flags_override_config() {
        let file = parse_config_file("mode = dynamic\ntopology = a.topo\nseed = 3 # x\nload = 2\n").unwrap();
        let cfg = RunConfig::from_maps(file, flags(&[("seed", "9"), ("capacity", "4")])).unwrap();
        assert_eq!(cfg.mode, RunMode::Dynamic);
        assert_eq!(cfg.traffic.seed, 9);
        assert_eq!(cfg.traffic.load, 2.0);
        assert_eq!(cfg.capacity, Some(Capacity::Limited(4)));
        assert_eq!(cfg.audit_every, 1);
    }

    #[test]
    fn config_errors() {
        assert!(parse_config_file("bogus = 1\n").is_err());
        assert!(parse_config_file("no equals sign\n").is_err());
        let base = flags(&[("mode", "verify"), ("topology", "t")]);
        assert!(RunConfig::from_maps(base.clone(), flags(&[("alpha", "x")])).is_err());
        assert!(RunConfig::from_maps(base.clone(), flags(&[("demands", "a"), ("trace", "b")])).is_err());
        assert!(RunConfig::from_maps(base.clone(), flags(&[("traffic", "gravity")])).is_err());
        assert!(RunConfig::from_maps(flags(&[("topology", "t")]), BTreeMap::new()).is_err());
        assert!(RunConfig::from_maps(base, flags(&[("mode", "fly")])).is_err());
    }
}
