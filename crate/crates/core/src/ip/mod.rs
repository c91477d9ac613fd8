//! Mixed binary/continuous linear programs and an exact branch-and-bound
//! solver built on a dense bounded simplex.
//!
//! ```
//! use divcode::ip::{IpModel, LinExpr, Sense, SolveOptions, SolveStatus};
//!
//! let mut m = IpModel::new();
//! let a = m.add_binary("a");
//! let b = m.add_binary("b");
//! m.add_constraint("cover", LinExpr::sum([a, b]), Sense::Ge, 1.0).unwrap();
//! m.set_objective(LinExpr::new().term(a, 1.0).term(b, 2.0)).unwrap();
//! let sol = m.solve(&SolveOptions::default()).unwrap();
//! assert_eq!(sol.status, SolveStatus::Optimal);
//! assert_eq!(sol.objective, 1.0);
//! ```

mod branch;
mod model;
mod simplex;

pub use branch::{solve, IpSolution, SolveError, SolveOptions, SolveStatus, FEAS_TOL, INT_TOL};
pub use model::{Constraint, IpModel, LinExpr, ModelError, Sense, VarId, VarKind, Variable};

impl IpModel {
    pub fn solve(&self, options: &SolveOptions) -> Result<IpSolution, SolveError> {
        branch::solve(self, options)
    }
}
