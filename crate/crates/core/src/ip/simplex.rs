//! Dense bounded-variable primal simplex.
//!
//! Rows are turned into equalities with one slack per inequality. Nonbasic
//! variables sit at a finite bound (or at zero when free). Phase 1 minimizes
//! the sum of artificials for rows whose slack cannot start basic. Pricing is
//! Dantzig's rule; after a run of degenerate pivots it falls back to Bland's
//! rule until the objective moves again.

use super::model::{IpModel, Sense};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_RUN: usize = 50;

/// Dense copy of a model's constraint rows, shared by every node LP.
#[derive(Clone, Debug)]
pub(crate) struct LpProblem {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
    pub sense: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub cost: Vec<f64>,
}

impl LpProblem {
    pub fn from_model(model: &IpModel) -> Self {
        let n = model.num_vars();
        let mut rows = Vec::with_capacity(model.constraints().len());
        let mut sense = Vec::new();
        let mut rhs = Vec::new();
        for c in model.constraints() {
            let mut row = vec![0.0; n];
            for (v, coef) in c.expr.terms() {
                row[v.0] += coef;
            }
            rows.push(row);
            sense.push(c.sense);
            rhs.push(c.rhs);
        }
        let mut cost = vec![0.0; n];
        for (v, c) in model.objective().terms() {
            cost[v.0] += c;
        }
        LpProblem { n, rows, sense, rhs, cost }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LpResult {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    /// Iteration limit hit; treated as a numerical failure by callers.
    Stalled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NonBasic {
    Lower,
    Upper,
    Free,
}

struct Tableau {
    m: usize,
    /// structural + slack columns; artificials are implicit
    ncol: usize,
    width: usize,
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    state: Vec<NonBasic>,
    d: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.ncol
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.t[r * w + j];
        for k in 0..w {
            self.t[r * w + k] /= p;
        }
        self.t[r * w + j] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[j];
            if f != 0.0 {
                for k in 0..w {
                    row[k] -= f * prow[k];
                }
                row[j] = 0.0;
            }
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for k in 0..self.ncol {
                self.d[k] -= dj * prow[k];
            }
            self.d[j] = 0.0;
        }
    }

    /// Recompute basic values from the rhs column to shed accumulated drift.
    fn refresh_basics(&mut self) {
        for i in 0..self.m {
            let mut v = self.at(i, self.ncol);
            for j in 0..self.ncol {
                if self.pos[j] == NONE {
                    let a = self.at(i, j);
                    if a != 0.0 {
                        v -= a * self.x[j];
                    }
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        // cost has ncol + m entries
        for j in 0..self.ncol {
            let mut dj = cost[j];
            for i in 0..self.m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    dj -= cb * self.at(i, j);
                }
            }
            self.d[j] = if self.pos[j] == NONE { dj } else { 0.0 };
        }
    }

    /// Returns `Ok(true)` at optimality, `Ok(false)` if unbounded.
    fn run(&mut self, max_iter: usize) -> Result<bool, ()> {
        let mut bland = false;
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            // pricing
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.ncol {
                if self.pos[j] != NONE || self.hi[j] - self.lo[j] <= 0.0 {
                    continue;
                }
                let dj = self.d[j];
                let dir = match self.state[j] {
                    NonBasic::Lower if dj < -OPT_TOL => 1.0,
                    NonBasic::Upper if dj > OPT_TOL => -1.0,
                    NonBasic::Free if dj.abs() > OPT_TOL => -dj.signum(),
                    _ => continue,
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some((j, dir));
                }
            }
            let Some((j, dir)) = enter else {
                return Ok(true);
            };

            // ratio test
            let mut theta = if self.lo[j].is_finite() && self.hi[j].is_finite() {
                self.hi[j] - self.lo[j]
            } else {
                f64::INFINITY
            };
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_a = 0.0;
            for i in 0..self.m {
                let a = self.at(i, j);
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * a;
                let (lim, to_upper) = if rate > 0.0 {
                    if !self.hi[b].is_finite() {
                        continue;
                    }
                    (((self.hi[b] - self.x[b]) / rate).max(0.0), true)
                } else {
                    if !self.lo[b].is_finite() {
                        continue;
                    }
                    (((self.x[b] - self.lo[b]) / -rate).max(0.0), false)
                };
                let better = if lim < theta - 1e-12 {
                    true
                } else if lim <= theta + 1e-12 {
                    match leave {
                        None => false,
                        Some((li, _)) if bland => b < self.basis[li],
                        Some(_) => a.abs() > leave_a,
                    }
                } else {
                    false
                };
                if better {
                    theta = lim;
                    leave = Some((i, to_upper));
                    leave_a = a.abs();
                }
            }
            if theta.is_infinite() {
                return Ok(false);
            }

            if theta < 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }

            if theta > 0.0 {
                self.x[j] += dir * theta;
                for i in 0..self.m {
                    let a = self.at(i, j);
                    if a != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= dir * a * theta;
                    }
                }
            }
            match leave {
                None => {
                    self.state[j] = match self.state[j] {
                        NonBasic::Lower => NonBasic::Upper,
                        _ => NonBasic::Lower,
                    };
                    self.x[j] = if self.state[j] == NonBasic::Upper { self.hi[j] } else { self.lo[j] };
                }
                Some((r, to_upper)) => {
                    let b = self.basis[r];
                    self.x[b] = if to_upper { self.hi[b] } else { self.lo[b] };
                    if !self.is_artificial(b) {
                        self.pos[b] = NONE;
                        self.state[b] = if to_upper { NonBasic::Upper } else { NonBasic::Lower };
                    }
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.pos[j] = r;
                }
            }
        }
        Err(())
    }
}

/// Solve `min cost·x` over the rows of `p` with per-variable bounds `lo..=hi`.
pub(crate) fn solve_lp(p: &LpProblem, lo: &[f64], hi: &[f64]) -> LpResult {
    let n = p.n;
    let m = p.rows.len();
    for j in 0..n {
        if lo[j] > hi[j] + FEAS_TOL {
            return LpResult::Infeasible;
        }
    }
    let slack_of: Vec<Option<usize>> = {
        let mut next = n;
        p.sense
            .iter()
            .map(|s| match s {
                Sense::Eq => None,
                _ => {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let ncol = n + slack_of.iter().filter(|s| s.is_some()).count();
    let width = ncol + 1;
    let total = ncol + m;

    let mut tab = Tableau {
        m,
        ncol,
        width,
        t: vec![0.0; m * width],
        lo: vec![0.0; total],
        hi: vec![f64::INFINITY; total],
        x: vec![0.0; total],
        basis: vec![0; m],
        pos: vec![NONE; total],
        state: vec![NonBasic::Lower; ncol],
        d: vec![0.0; ncol],
    };
    for j in 0..n {
        tab.lo[j] = lo[j];
        tab.hi[j] = hi[j];
        if lo[j].is_finite() {
            tab.x[j] = lo[j];
        } else if hi[j].is_finite() {
            tab.x[j] = hi[j];
            tab.state[j] = NonBasic::Upper;
        } else {
            tab.state[j] = NonBasic::Free;
        }
    }

    let mut any_artificial = false;
    for i in 0..m {
        let row = &p.rows[i];
        let r = p.rhs[i] - (0..n).map(|j| row[j] * tab.x[j]).sum::<f64>();
        let slack_coef = match p.sense[i] {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => 0.0,
        };
        // basic column for row i and the sign that makes it nonnegative
        let (basic, sigma) = match slack_of[i] {
            Some(s) if r * slack_coef >= 0.0 => (s, slack_coef),
            _ => {
                any_artificial = true;
                (ncol + i, if r >= 0.0 { 1.0 } else { -1.0 })
            }
        };
        let base = i * width;
        for j in 0..n {
            tab.t[base + j] = sigma * row[j];
        }
        if let Some(s) = slack_of[i] {
            tab.t[base + s] = sigma * slack_coef;
        }
        tab.t[base + ncol] = sigma * p.rhs[i];
        tab.basis[i] = basic;
        tab.pos[basic] = i;
        tab.x[basic] = sigma * r;
    }

    let max_iter = 50_000 + 50 * (m + ncol);
    if any_artificial {
        let mut c1 = vec![0.0; total];
        for c in c1.iter_mut().skip(ncol) {
            *c = 1.0;
        }
        tab.set_costs(&c1);
        match tab.run(max_iter) {
            Ok(true) => {}
            Ok(false) | Err(()) => return LpResult::Stalled,
        }
        tab.refresh_basics();
        let infeasibility: f64 = tab.basis.iter().filter(|&&b| b >= ncol).map(|&b| tab.x[b].abs()).sum();
        let scale = 1.0 + p.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeasibility > FEAS_TOL * scale {
            return LpResult::Infeasible;
        }
        for a in ncol..total {
            tab.hi[a] = 0.0;
            tab.x[a] = 0.0;
        }
    }

    let mut c2 = vec![0.0; total];
    c2[..n].copy_from_slice(&p.cost);
    tab.set_costs(&c2);
    match tab.run(max_iter) {
        Ok(true) => {}
        Ok(false) => return LpResult::Unbounded,
        Err(()) => return LpResult::Stalled,
    }
    tab.refresh_basics();
    let x: Vec<f64> = tab.x[..n].to_vec();
    let objective = (0..n).map(|j| p.cost[j] * x[j]).sum();
    LpResult::Optimal { x, objective }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ip::model::{IpModel, LinExpr, VarKind};

    fn lp(model: &IpModel) -> LpResult {
        let p = LpProblem::from_model(model);
        let lo: Vec<f64> = model.variables().iter().map(|v| v.lo).collect();
        let hi: Vec<f64> = model.variables().iter().map(|v| v.hi).collect();
        solve_lp(&p, &lo, &hi)
    }

    #[test]
    fn bounded_single_variable() {
        let mut m = IpModel::new();
        let x = m.add_variable(VarKind::Continuous, 3.0, 10.0).unwrap();
        m.set_objective(LinExpr::new().term(x, 1.0)).unwrap();
        assert_eq!(lp(&m), LpResult::Optimal { x: vec![3.0], objective: 3.0 });
    }

    #[test]
    fn textbook_lp() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let mut m = IpModel::new();
        let x = m.add_variable(VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
        let y = m.add_variable(VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
        m.add_constraint("a", LinExpr::new().term(x, 1.0), Sense::Le, 4.0).unwrap();
        m.add_constraint("b", LinExpr::new().term(y, 2.0), Sense::Le, 12.0).unwrap();
        m.add_constraint("c", LinExpr::new().term(x, 3.0).term(y, 2.0), Sense::Le, 18.0).unwrap();
        m.set_objective(LinExpr::new().term(x, -3.0).term(y, -5.0)).unwrap();
        match lp(&m) {
            LpResult::Optimal { x, objective } => {
                assert!((objective + 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_rows_need_phase_one() {
        // min x + y st x + y = 2, x - y >= 1, x,y >= 0 -> obj 2
        let mut m = IpModel::new();
        let x = m.add_variable(VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
        let y = m.add_variable(VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
        m.add_constraint("e", LinExpr::new().term(x, 1.0).term(y, 1.0), Sense::Eq, 2.0).unwrap();
        m.add_constraint("g", LinExpr::new().term(x, 1.0).term(y, -1.0), Sense::Ge, 1.0).unwrap();
        m.set_objective(LinExpr::new().term(x, 1.0).term(y, 1.0)).unwrap();
        assert!(matches!(lp(&m), LpResult::Optimal { objective, .. } if (objective - 2.0).abs() < 1e-9));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut m = IpModel::new();
        let x = m.add_variable(VarKind::Continuous, 0.0, 1.0).unwrap();
        m.add_constraint("lo", LinExpr::new().term(x, 1.0), Sense::Ge, 2.0).unwrap();
        assert_eq!(lp(&m), LpResult::Infeasible);

        let mut m = IpModel::new();
        let x = m.add_variable(VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
        let y = m.add_variable(VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_constraint("r", LinExpr::new().term(x, 1.0).term(y, -1.0), Sense::Le, 1.0).unwrap();
        m.set_objective(LinExpr::new().term(x, -1.0)).unwrap();
        assert_eq!(lp(&m), LpResult::Unbounded);
    }

    #[test]
    fn free_variable_enters_in_either_direction() {
        // min y st y >= -5, y free
        let mut m = IpModel::new();
        let y = m.add_variable(VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_constraint("r", LinExpr::new().term(y, 1.0), Sense::Ge, -5.0).unwrap();
        m.set_objective(LinExpr::new().term(y, 1.0)).unwrap();
        assert!(matches!(lp(&m), LpResult::Optimal { objective, .. } if (objective + 5.0).abs() < 1e-9));
    }
}
