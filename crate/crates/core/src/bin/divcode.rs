use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Parser;
use divcode::run::{parse_config_file, run, RunConfig, EXIT_FAILURE};

/// Diversity-coded protection design, dynamic provisioning and failure checks.
#[derive(Parser, Debug)]
#[command(name = "divcode", version)]
struct Cli {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// preprovision | dynamic | verify
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    topology: Option<String>,
    #[arg(long, conflicts_with = "trace")]
    demands: Option<String>,
    #[arg(long)]
    trace: Option<String>,
    /// Solution dump to check in verify mode.
    #[arg(long)]
    solution: Option<String>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<String>,
    /// uniform | gravity
    #[arg(long)]
    traffic: Option<String>,
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Offered load in Erlangs.
    #[arg(long)]
    load: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    populations: Option<String>,
    /// Uniform per-link capacity for dynamic mode (integer or `inf`).
    #[arg(long)]
    capacity: Option<String>,
    #[arg(long)]
    trees_per_group: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    fixed_primaries: Option<String>,
    #[arg(long)]
    symmetry_breaking: Option<String>,
    /// Per-subproblem solver limit in seconds.
    #[arg(long)]
    time_limit: Option<String>,
    #[arg(long)]
    node_limit: Option<String>,
    /// Audit coding groups every K events (0 disables).
    #[arg(long)]
    audit_every: Option<String>,
    #[arg(long)]
    detection_us: Option<String>,
    #[arg(long)]
    processing_us: Option<String>,
    #[arg(long)]
    configuration_us: Option<String>,
}

impl Cli {
    fn flags(self) -> BTreeMap<String, String> {
        let pairs = [
            ("mode", self.mode),
            ("topology", self.topology),
            ("demands", self.demands),
            ("trace", self.trace),
            ("solution", self.solution),
            ("out", self.out),
            ("traffic", self.traffic),
            ("count", self.count),
            ("seed", self.seed),
            ("load", self.load),
            ("rate", self.rate),
            ("horizon", self.horizon),
            ("populations", self.populations),
            ("capacity", self.capacity),
            ("trees-per-group", self.trees_per_group),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("fixed-primaries", self.fixed_primaries),
            ("symmetry-breaking", self.symmetry_breaking),
            ("time-limit", self.time_limit),
            ("node-limit", self.node_limit),
            ("audit-every", self.audit_every),
            ("detection-us", self.detection_us),
            ("processing-us", self.processing_us),
            ("configuration-us", self.configuration_us),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect()
    }
}

fn main() {
    let mut cli = Cli::parse();
    let file = match cli.config.take() {
        None => Ok(BTreeMap::new()),
        Some(p) => std::fs::read_to_string(&p)
            .map_err(|e| format!("{}: {e}", p.display()))
            .and_then(|t| parse_config_file(&t).map_err(|e| e.to_string())),
    };
    let cfg = file.and_then(|f| RunConfig::from_maps(f, cli.flags()).map_err(|e| e.to_string()));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_FAILURE);
        }
    };
    let outcome = run(&cfg);
    for m in &outcome.messages {
        if outcome.code == EXIT_FAILURE {
            eprintln!("{m}");
        } else {
            println!("{m}");
        }
    }
    std::process::exit(outcome.code);
}
