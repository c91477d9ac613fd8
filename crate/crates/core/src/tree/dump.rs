//! Line-oriented solution dump.
//!
//! ```text
//! tree 0 destination 5
//! demand 3 2
//! d 2>4 4>5
//! c 2>1 1>5
//! path 3 2>4 4>5
//! reference 0.03
//! buffer destination primary 3 0
//! buffer encoder 1 link 2>1 0.005
//! end
//! ```
//!
//! `tree`, `demand`, `d` and `c` lines define the design; `path`, `reference`
//! and `buffer` lines are derived and ignored when reading back.

use std::fmt::Write as _;

use crate::demand::Demand;
use crate::graph::{format_rational, LinkId, NetworkGraph};

use super::{
    compute_buffer_plan, extract_paths, Arrival, BufferSite, DesignTree, EncodingInput, TreeError, TreeSolution,
};

fn link_str(g: &NetworkGraph, l: LinkId) -> String {
    let link = g.link(l);
    format!("{}>{}", link.tail, link.head)
}

pub fn write_solution(g: &NetworkGraph, sol: &TreeSolution) -> String {
    let mut out = String::new();
    for (i, tree) in sol.trees.iter().enumerate() {
        let _ = writeln!(out, "tree {i} destination {}", tree.destination);
        for d in &tree.demands {
            let _ = writeln!(out, "demand {} {}", d.id, d.source);
        }
        let links = |set: &std::collections::BTreeSet<LinkId>| {
            set.iter().map(|&l| format!(" {}", link_str(g, l))).collect::<String>()
        };
        let _ = writeln!(out, "d{}", links(&tree.primary_links));
        let _ = writeln!(out, "c{}", links(&tree.protection_links));
        match extract_paths(g, tree, i) {
            Ok(x) => {
                for (id, p) in &x.primary {
                    let hops: String = p.iter().map(|&l| format!(" {}", link_str(g, l))).collect();
                    let _ = writeln!(out, "path {id}{hops}");
                }
                if let Ok(plan) = compute_buffer_plan(g, tree, &x) {
                    let _ = writeln!(out, "reference {}", format_rational(plan.reference));
                    for b in &plan.buffers {
                        let site = match b.site {
                            BufferSite::Encoder { node, input: EncodingInput::Local(id) } => {
                                format!("encoder {node} local {id}")
                            }
                            BufferSite::Encoder { node, input: EncodingInput::Link(l) } => {
                                format!("encoder {node} link {}", link_str(g, l))
                            }
                            BufferSite::Destination(Arrival::Primary(id)) => format!("destination primary {id}"),
                            BufferSite::Destination(Arrival::Protection(l)) => {
                                format!("destination link {}", link_str(g, l))
                            }
                        };
                        let _ = writeln!(out, "buffer {site} {}", format_rational(b.delay));
                    }
                }
            }
            Err(e) => {
                let _ = writeln!(out, "# {e}");
            }
        }
        out.push_str("end\n");
    }
    out
}

/// Read the design part of a dump back. Reports carry no solver data.
pub fn parse_solution(g: &NetworkGraph, text: &str) -> Result<TreeSolution, TreeError> {
    let mut sol = TreeSolution::default();
    let mut current: Option<DesignTree> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| TreeError::Dump { line, msg };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut words = body.split_whitespace();
        let key = words.next().expect("non-empty");
        let node = |w: Option<&str>| -> Result<usize, TreeError> {
            let w = w.ok_or_else(|| err("missing field".into()))?;
            let v: usize = w.parse().map_err(|_| err(format!("bad node `{w}`")))?;
            if g.contains(v) {
                Ok(v)
            } else {
                Err(err(format!("unknown node {v}")))
            }
        };
        match key {
            "tree" => {
                if current.is_some() {
                    return Err(err("`tree` before `end`".into()));
                }
                let _index = words.next();
                if words.next() != Some("destination") {
                    return Err(err("expected `tree <i> destination <node>`".into()));
                }
                current = Some(DesignTree::new(node(words.next())?));
            }
            "end" => {
                let t = current.take().ok_or_else(|| err("`end` outside a tree".into()))?;
                sol.trees.push(t);
            }
            "demand" | "d" | "c" => {
                let t = current.as_mut().ok_or_else(|| err(format!("`{key}` outside a tree")))?;
                if key == "demand" {
                    let id: usize = words
                        .next()
                        .and_then(|w| w.parse().ok())
                        .ok_or_else(|| err("bad demand id".into()))?;
                    let src = node(words.next())?;
                    if src == t.destination {
                        return Err(err("demand source equals destination".into()));
                    }
                    t.demands.push(Demand::new(id, src, t.destination));
                } else {
                    for w in words.by_ref() {
                        let (a, b) = w.split_once('>').ok_or_else(|| err(format!("bad link `{w}`")))?;
                        let (u, v) = (node(Some(a))?, node(Some(b))?);
                        let l = g.link_between(u, v).ok_or_else(|| err(format!("no link {u}>{v}")))?;
                        let set = if key == "d" { &mut t.primary_links } else { &mut t.protection_links };
                        set.insert(l);
                    }
                }
            }
            "path" | "reference" | "buffer" => {
                if current.is_none() {
                    return Err(err(format!("`{key}` outside a tree")));
                }
            }
            other => return Err(err(format!("unknown keyword `{other}`"))),
        }
    }
    if current.is_some() {
        return Err(TreeError::Dump { line: text.lines().count(), msg: "missing `end`".into() });
    }
    Ok(sol)
}
