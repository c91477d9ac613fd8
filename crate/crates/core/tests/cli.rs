use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const RING: &str = "nodes 4\nspan 0 1 1\nspan 1 2 1\nspan 2 3 1\nspan 3 0 1\n";
/// Node 3 hangs off node 2 by a single span.
const BRIDGE: &str = "nodes 4\nspan 0 1 1\nspan 1 2 1\nspan 2 0 1\nspan 2 3 1\n";
const TRIANGLE: &str = "nodes 3\nspan 0 1 1\nspan 1 2 1\nspan 2 0 1\n";

fn divcode(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divcode")).current_dir(dir).args(args).output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn blocking(o: &Output) -> f64 {
    let t = text(o);
    t.split("blocking probability ").nth(1).and_then(|s| s.trim().parse().ok()).unwrap_or_else(|| panic!("no blocking line in {t}"))
}

#[test]
fn ring_design_succeeds_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ring.topo"), RING).unwrap();
    fs::write(dir.path().join("ring.dem"), "demand 0 2\ndemand 1 2\ndemand 3 2\n").unwrap();
    let o = divcode(dir.path(), &["--mode", "preprovision", "--topology", "ring.topo", "--demands", "ring.dem", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("total capacity"));
    assert!(text(&o).contains("verification PASS"));
    for f in ["solution.txt", "summary.csv", "buffers.csv", "verification.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "missing {f}");
    }

    let o = divcode(dir.path(), &["--mode", "verify", "--topology", "ring.topo", "--solution", "out/solution.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));

    // cut the protection side short
    let dump = fs::read_to_string(dir.path().join("out/solution.txt")).unwrap();
    let broken: String = dump
        .lines()
        .map(|l| if l.starts_with("c ") { "c".to_string() } else { l.to_string() })
        .map(|l| l + "\n")
        .collect();
    fs::write(dir.path().join("broken.txt"), broken).unwrap();
    let o = divcode(dir.path(), &["--mode", "verify", "--topology", "ring.topo", "--solution", "broken.txt"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(text(&o).contains("verification FAIL: span"), "{}", text(&o));

    fs::write(dir.path().join("empty.txt"), "").unwrap();
    let o = divcode(dir.path(), &["--mode", "verify", "--topology", "ring.topo", "--solution", "empty.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));

    fs::write(dir.path().join("junk.txt"), "tree zero\n").unwrap();
    let o = divcode(dir.path(), &["--mode", "verify", "--topology", "ring.topo", "--solution", "junk.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bridge_names_the_unprotectable_source() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("b.topo"), BRIDGE).unwrap();
    fs::write(dir.path().join("b.dem"), "demand 3 0\n").unwrap();
    let o = divcode(dir.path(), &["--mode", "preprovision", "--topology", "b.topo", "--demands", "b.dem"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("source 3"), "{}", text(&o));
}

#[test]
fn zero_load_blocks_nothing() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.topo"), TRIANGLE).unwrap();
    let o = divcode(dir.path(), &["--mode", "dynamic", "--topology", "t.topo", "--count", "200", "--load", "0", "--capacity", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert_eq!(blocking(&o), 0.0);
}

#[test]
fn second_same_pair_demand_on_unit_triangle_is_blocked() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.topo"), TRIANGLE).unwrap();
    fs::write(dir.path().join("t.trace"), "arrive 0 0 1 0.0\narrive 1 0 1 1.0\ndepart 0 5.0\ndepart 1 6.0\n").unwrap();
    let o = divcode(dir.path(), &["--mode", "dynamic", "--topology", "t.topo", "--trace", "t.trace", "--capacity", "1", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert_eq!(blocking(&o), 0.5);
    let events = fs::read_to_string(dir.path().join("o/events.csv")).unwrap();
    assert!(events.contains(",blocked,"));
}

#[test]
fn more_capacity_never_blocks_more() {
    let topo = concat!(env!("CARGO_MANIFEST_DIR"), "/data/smallnet.topo");
    let dir = tempfile::tempdir().unwrap();
    let probs: Vec<f64> = ["1", "2", "4", "inf"]
        .iter()
        .map(|c| {
            let o = divcode(dir.path(), &["--mode", "dynamic", "--topology", topo, "--count", "600", "--seed", "5", "--load", "30", "--capacity", c]);
            assert_eq!(o.status.code(), Some(0), "{}", text(&o));
            blocking(&o)
        })
        .collect();
    assert!(probs.windows(2).all(|w| w[1] <= w[0]), "{probs:?}");
    assert_eq!(*probs.last().unwrap(), 0.0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.topo"), TRIANGLE).unwrap();
    fs::write(dir.path().join("run.cfg"), "# dynamic run\nmode = dynamic\ntopology = t.topo\ncount = 100\nload = 2\ncapacity = 1\n").unwrap();
    let o = divcode(dir.path(), &["--config", "run.cfg"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("offered 100"));
    let o = divcode(dir.path(), &["--config", "run.cfg", "--count", "40"]);
    assert!(text(&o).contains("offered 40"), "{}", text(&o));

    fs::write(dir.path().join("bad.cfg"), "mode = dynamic\ncolour = red\n").unwrap();
    let o = divcode(dir.path(), &["--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("colour"));
}
