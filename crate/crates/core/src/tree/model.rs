use std::collections::BTreeSet;

use crate::demand::Demand;
use crate::graph::{LinkId, NetworkGraph, NodeId};
use crate::ip::{IpModel, LinExpr, Sense, VarId, VarKind};
use crate::routing::shortest_path;

use super::{DesignTree, Subproblem, TreeConfig, TreeError, TreeParams};

/// A built tree MIP together with the variable maps needed to read it back.
#[derive(Clone, Debug)]
pub struct TreeModel {
    pub model: IpModel,
    pub params: TreeParams,
    pub destination: NodeId,
    pub demands: Vec<Demand>,
    /// `n[i][t]`: demand `i` is served by tree `t`.
    pub n: Vec<Vec<VarId>>,
    /// `d[t][link]`: link carries a primary path of tree `t`.
    pub d: Vec<Vec<VarId>>,
    /// `c[t][link]`: link belongs to the protection tree of tree `t`.
    pub c: Vec<Vec<VarId>>,
    /// Primary voltages `g[t][node]`.
    pub g: Vec<Vec<VarId>>,
    /// Protection voltages `p[t][node]`.
    pub p: Vec<Vec<VarId>>,
}

pub fn build_tree_model(g: &NetworkGraph, sub: &Subproblem, cfg: &TreeConfig) -> Result<TreeModel, TreeError> {
    let dest = sub.destination;
    for d in &sub.demands {
        if d.destination != dest {
            return Err(TreeError::MixedDestinations { expected: dest, found: d.destination });
        }
    }
    let nd = sub.demands.len();
    let params = cfg.resolve(g, nd)?;
    let (alpha, beta, tn) = (params.alpha, params.beta, params.trees);
    let links = g.links().len();
    let mut m = IpModel::new();

    let n: Vec<Vec<VarId>> = (0..nd)
        .map(|i| (0..tn).map(|t| m.add_binary(format!("n({i},{t})"))).collect())
        .collect();
    let mut d = Vec::with_capacity(tn);
    let mut c = Vec::with_capacity(tn);
    let mut gv = Vec::with_capacity(tn);
    let mut pv = Vec::with_capacity(tn);
    for t in 0..tn {
        d.push((0..links).map(|e| m.add_binary(format!("d({e},{t})"))).collect::<Vec<_>>());
        c.push((0..links).map(|e| m.add_binary(format!("c({e},{t})"))).collect::<Vec<_>>());
        let volt = |m: &mut IpModel, prefix: &str| -> Vec<VarId> {
            g.nodes()
                .map(|v| {
                    m.add_named_variable(format!("{prefix}({v},{t})"), VarKind::Continuous, 0.0, 1.0)
                        .expect("unit interval")
                })
                .collect()
        };
        gv.push(volt(&mut m, "g"));
        pv.push(volt(&mut m, "p"));
    }

    let add = |m: &mut IpModel, name: String, e: LinExpr, s: Sense, rhs: f64| {
        m.add_constraint(name, e, s, rhs).expect("variables declared above");
    };

    for t in 0..tn {
        let all_n = || (0..nd).map(|i| n[i][t]);
        // destination balance
        let mut e = LinExpr::sum(g.incoming(dest).iter().map(|l| d[t][l.0]));
        for v in all_n() {
            e.add(v, -1.0);
        }
        add(&mut m, format!("prim_dest_in({t})"), e, Sense::Eq, 0.0);
        let e = LinExpr::sum(g.outgoing(dest).iter().map(|l| d[t][l.0]));
        add(&mut m, format!("prim_dest_out({t})"), e, Sense::Eq, 0.0);

        let mut e = LinExpr::sum(g.incoming(dest).iter().map(|l| c[t][l.0]));
        for v in all_n() {
            e.add(v, -1.0 / beta);
        }
        add(&mut m, format!("prot_dest_in({t})"), e, Sense::Ge, 0.0);
        let e = LinExpr::sum(g.outgoing(dest).iter().map(|l| c[t][l.0]));
        add(&mut m, format!("prot_dest_out({t})"), e, Sense::Le, 0.0);

        for v in g.nodes().filter(|&v| v != dest) {
            let local: Vec<usize> = (0..nd).filter(|&i| sub.demands[i].source == v).collect();

            let mut e = LinExpr::sum(g.outgoing(v).iter().map(|l| d[t][l.0]));
            for &i in &local {
                e.add(n[i][t], -1.0);
            }
            for l in g.incoming(v) {
                e.add(d[t][l.0], -1.0);
            }
            add(&mut m, format!("prim_flow({v},{t})"), e, Sense::Eq, 0.0);

            let mut e = LinExpr::sum(g.outgoing(v).iter().map(|l| c[t][l.0]));
            for &i in &local {
                e.add(n[i][t], -1.0 / beta);
            }
            for l in g.incoming(v) {
                e.add(c[t][l.0], -1.0 / beta);
            }
            add(&mut m, format!("prot_flow({v},{t})"), e, Sense::Ge, 0.0);
        }

        for link in g.links() {
            let e = link.id.0;
            let (u, v) = (link.tail, link.head);
            let expr = LinExpr::new().term(gv[t][v], 1.0).term(gv[t][u], -1.0).term(d[t][e], -(alpha + 1.0));
            add(&mut m, format!("prim_volt({e},{t})"), expr, Sense::Ge, -1.0);
            let expr = LinExpr::new().term(pv[t][v], 1.0).term(pv[t][u], -1.0).term(c[t][e], -(alpha + 1.0));
            add(&mut m, format!("prot_volt({e},{t})"), expr, Sense::Ge, -1.0);
        }

        for span in g.spans() {
            let e = LinExpr::sum(span.links.iter().flat_map(|l| [d[t][l.0], c[t][l.0]]));
            add(&mut m, format!("span_disjoint({},{t})", span.id.0), e, Sense::Le, 1.0);
        }
    }

    for i in 0..nd {
        add(&mut m, format!("assign({i})"), LinExpr::sum(n[i].iter().copied()), Sense::Eq, 1.0);
    }

    if cfg.symmetry_breaking {
        for (i, row) in n.iter().enumerate() {
            for &v in row.iter().skip(i + 1) {
                m.fix(v, 0.0);
            }
        }
    }

    if cfg.fixed_shortest_primaries {
        for (i, dem) in sub.demands.iter().enumerate() {
            let path = shortest_path(g, dem.source, dest, |_| true)
                .ok_or(TreeError::Infeasible { destination: dest, unprotected: Some(dem.source) })?;
            for t in 0..tn {
                for l in &path {
                    let e = LinExpr::new().term(d[t][l.0], 1.0).term(n[i][t], -1.0);
                    add(&mut m, format!("fixed_primary({i},{},{t})", l.0), e, Sense::Ge, 0.0);
                }
            }
        }
    }

    let mut obj = LinExpr::new();
    for t in 0..tn {
        for link in g.links() {
            obj.add(d[t][link.id.0], link.cost());
            obj.add(c[t][link.id.0], link.cost());
        }
    }
    m.set_objective(obj).expect("variables declared above");

    m.set_metadata("destination", dest.to_string());
    m.set_metadata("demands", nd.to_string());
    m.set_metadata("trees", tn.to_string());
    m.set_metadata("alpha", alpha.to_string());
    m.set_metadata("beta", beta.to_string());

    Ok(TreeModel { model: m, params, destination: dest, demands: sub.demands.clone(), n, d, c, g: gv, p: pv })
}

impl TreeModel {
    /// Read solved values back into trees. Trees without demands are dropped.
    pub fn trees_from(&self, values: &[f64], _g: &NetworkGraph) -> Vec<DesignTree> {
        let on = |v: VarId| values[v.0] > 0.5;
        let mut out = Vec::new();
        for t in 0..self.params.trees {
            let demands: Vec<Demand> = self
                .demands
                .iter()
                .enumerate()
                .filter(|&(i, _)| on(self.n[i][t]))
                .map(|(_, d)| d.clone())
                .collect();
            if demands.is_empty() {
                continue;
            }
            let pick = |vars: &[VarId]| -> BTreeSet<LinkId> {
                vars.iter().enumerate().filter(|&(_, &v)| on(v)).map(|(e, _)| LinkId(e)).collect()
            };
            out.push(DesignTree {
                destination: self.destination,
                demands,
                primary_links: pick(&self.d[t]),
                protection_links: pick(&self.c[t]),
                primary_voltage: self.g[t].iter().map(|v| values[v.0]).collect(),
                protection_voltage: self.p[t].iter().map(|v| values[v.0]).collect(),
            });
        }
        out
    }

    /// Assignment vector for a set of trees, with voltages derived from
    /// longest-path levels. `trees[t]` lists demand indices and link sets.
    pub fn assignment(&self, g: &NetworkGraph, trees: &[(Vec<usize>, BTreeSet<LinkId>, BTreeSet<LinkId>)]) -> Vec<f64> {
        let mut x = vec![0.0; self.model.num_vars()];
        for (t, (members, prim, prot)) in trees.iter().enumerate().take(self.params.trees) {
            for &i in members {
                x[self.n[i][t].0] = 1.0;
            }
            for l in prim {
                x[self.d[t][l.0].0] = 1.0;
            }
            for l in prot {
                x[self.c[t][l.0].0] = 1.0;
            }
            if let Some(levels) = crate::routing::longest_levels(g, prim) {
                for (v, lv) in levels.into_iter().enumerate() {
                    x[self.g[t][v].0] = self.params.alpha * lv as f64;
                }
            }
            if let Some(levels) = crate::routing::longest_levels(g, prot) {
                for (v, lv) in levels.into_iter().enumerate() {
                    x[self.p[t][v].0] = self.params.alpha * lv as f64;
                }
            }
        }
        x
    }
}
