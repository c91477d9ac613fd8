use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

/// Sparse linear expression. Terms on the same variable are merged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    terms: BTreeMap<VarId, f64>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, var: VarId, coef: f64) -> Self {
        self.add(var, coef);
        self
    }

    pub fn add(&mut self, var: VarId, coef: f64) {
        *self.terms.entry(var).or_insert(0.0) += coef;
    }

    pub fn sum<I: IntoIterator<Item = VarId>>(vars: I) -> Self {
        let mut e = Self::new();
        for v in vars {
            e.add(v, 1.0);
        }
        e
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.terms.iter().map(|(&v, &c)| (v, c)).filter(|&(_, c)| c != 0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.terms().next().is_none()
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms().map(|(v, c)| c * values[v.0]).sum()
    }
}

impl FromIterator<(VarId, f64)> for LinExpr {
    fn from_iter<I: IntoIterator<Item = (VarId, f64)>>(iter: I) -> Self {
        let mut e = LinExpr::new();
        for (v, c) in iter {
            e.add(v, c);
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// Signed violation: positive when the constraint does not hold.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.eval(values);
        match self.sense {
            Sense::Le => lhs - self.rhs,
            Sense::Ge => self.rhs - lhs,
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid bounds [{lo}, {hi}] for variable `{name}`")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    #[error("constraint `{constraint}` references undeclared variable {var:?}")]
    UnknownVariable { constraint: String, var: VarId },
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
}

/// Minimization model with binary and bounded continuous variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IpModel {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: LinExpr,
    metadata: BTreeMap<String, String>,
}

impl IpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, kind: VarKind, lo: f64, hi: f64) -> Result<VarId, ModelError> {
        let name = format!("x{}", self.vars.len());
        self.add_named_variable(name, kind, lo, hi)
    }

    pub fn add_named_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lo: f64,
        hi: f64,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        let ok = match kind {
            VarKind::Binary => lo == 0.0 && hi == 1.0,
            VarKind::Continuous => {
                !lo.is_nan() && !hi.is_nan() && lo <= hi && lo < f64::INFINITY && hi > f64::NEG_INFINITY
            }
        };
        if !ok {
            return Err(ModelError::InvalidBounds { name, lo, hi });
        }
        self.vars.push(Variable { name, kind, lo, hi });
        Ok(VarId(self.vars.len() - 1))
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_named_variable(name, VarKind::Binary, 0.0, 1.0).expect("binary bounds are valid")
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        sense: Sense,
        rhs: f64,
    ) -> Result<(), ModelError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite(name));
        }
        for (v, c) in expr.terms() {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable { constraint: name, var: v });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        self.constraints.push(Constraint { name, expr, sense, rhs });
        Ok(())
    }

    pub fn set_objective(&mut self, expr: LinExpr) -> Result<(), ModelError> {
        for (v, c) in expr.terms() {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable { constraint: "objective".into(), var: v });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite("objective".into()));
            }
        }
        self.objective = expr;
        Ok(())
    }

    /// Tighten a variable's bounds in place, e.g. to fix a binary.
    pub fn fix(&mut self, var: VarId, value: f64) {
        let v = &mut self.vars[var.0];
        v.lo = value;
        v.hi = value;
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    pub fn metadata(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn find_constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    /// Largest constraint or bound violation of `values`, and whether every
    /// binary is within `int_tol` of 0 or 1.
    pub fn check(&self, values: &[f64], int_tol: f64) -> (f64, bool) {
        let mut worst: f64 = 0.0;
        let mut integral = true;
        for (i, v) in self.vars.iter().enumerate() {
            let x = values[i];
            worst = worst.max(v.lo - x).max(x - v.hi);
            if v.kind == VarKind::Binary && (x - x.round()).abs() > int_tol {
                integral = false;
            }
        }
        for c in &self.constraints {
            worst = worst.max(c.violation(values));
        }
        (worst, integral)
    }

    /// LP-format text dump for debugging; not a stable interchange format.
    pub fn to_lp_string(&self) -> String {
        let name = |v: VarId| sanitize(&self.vars[v.0].name);
        let expr = |e: &LinExpr| {
            let mut s = String::new();
            for (i, (v, c)) in e.terms().enumerate() {
                match (i, c < 0.0) {
                    (0, false) => {}
                    (0, true) => s.push_str("- "),
                    (_, false) => s.push_str(" + "),
                    (_, true) => s.push_str(" - "),
                }
                let _ = write!(s, "{} {}", c.abs(), name(v));
            }
            if s.is_empty() {
                s.push('0');
            }
            s
        };
        let mut out = String::from("\\ divcode model\n");
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "\\ {k} = {v}");
        }
        let _ = writeln!(out, "Minimize\n obj: {}\nSubject To", expr(&self.objective));
        for c in &self.constraints {
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, " {}: {} {} {}", sanitize(&c.name), expr(&c.expr), op, c.rhs);
        }
        out.push_str("Bounds\n");
        for (i, v) in self.vars.iter().enumerate() {
            if v.kind == VarKind::Continuous {
                let _ = writeln!(out, " {} <= {} <= {}", v.lo, name(VarId(i)), v.hi);
            }
        }
        out.push_str("Binaries\n");
        for (i, v) in self.vars.iter().enumerate() {
            if v.kind == VarKind::Binary {
                let _ = writeln!(out, " {}", name(VarId(i)));
            }
        }
        out.push_str("End\n");
        out
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect()
}
