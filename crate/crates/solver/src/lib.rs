//! Solvers for [`LpInstance`]s: a deterministic bounded-variable revised
//! simplex, and a bridge that hands MPS files to an external solver.

mod external;
pub mod lu;
mod simplex;

use flowgraph_core::lp::{LpInstance, SolveResult};
use flowgraph_core::Scalar;
use serde::{Deserialize, Serialize};

pub use external::{default_spec_from_env, solve_external, ExternalSolverSpec, SOLVER_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Pricing {
    /// Smallest eligible index, entering and leaving. Slow but never cycles.
    Bland,
    /// Largest reduced cost, switching to Bland after a stall.
    #[default]
    DantzigBland,
    /// Devex reference weights, switching to Bland after a stall.
    DevexBland,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexOptions {
    pub feas_tol: f64,
    pub pivot_tol: f64,
    /// Reduced-cost tolerance for optimality.
    pub opt_tol: f64,
    /// `None` means 50·(rows + cols).
    pub max_iterations: Option<u64>,
    pub pricing: Pricing,
    pub refactor_every: usize,
    /// Iterations without objective progress before Bland's rule takes over.
    pub stall_window: u64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feas_tol: 1e-7,
            pivot_tol: 1e-9,
            opt_tol: 1e-9,
            max_iterations: None,
            pricing: Pricing::DantzigBland,
            refactor_every: 100,
            stall_window: 1000,
        }
    }
}

impl SimplexOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.feas_tol) && ok(self.pivot_tol) && ok(self.opt_tol)) {
            return Err(SolverError::InvalidOptions("tolerances must be positive".into()));
        }
        if self.refactor_every == 0 {
            return Err(SolverError::InvalidOptions("refactor_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("iteration limit reached after {iterations} iterations")]
    IterationLimit { iterations: u64 },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("numerical trouble: {0}")]
    Numerical(String),
    #[error("could not launch `{executable}`: {reason}")]
    SolverLaunchFailure { executable: String, reason: String },
    #[error("solver exited with status {code:?}: {stderr}")]
    NonzeroExit { code: Option<i32>, stderr: String },
    #[error("could not read solver output: {0}")]
    ParseError(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Solves the LP with the bundled simplex. Integrality marks are dropped.
pub fn solve_reference<T: Scalar>(lp: &LpInstance<T>, opts: &SimplexOptions) -> Result<SolveResult<T>, SolverError> {
    opts.validate()?;
    if lp.has_integers() {
        let count = lp.vars.iter().filter(|v| v.integer).count();
        log::warn!("{}: relaxing integrality of {count} variables", lp.name);
    }
    simplex::Simplex::new(lp, opts).solve()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    Row(usize),
    Bound(usize),
}

/// A row activity or variable value outside its range.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Violation {
    pub fn amount(&self) -> f64 {
        (self.lower - self.value).max(self.value - self.upper).max(0.0)
    }
}

/// Rows and bounds violated by more than `tol` (absolute).
pub fn check_primal<T: Scalar>(lp: &LpInstance<T>, primal: &[T], tol: f64) -> Vec<Violation> {
    assert_eq!(primal.len(), lp.n_vars(), "primal must cover every variable");
    let mut out = Vec::new();
    for (j, (v, x)) in lp.vars.iter().zip(primal).enumerate() {
        let (x, l, u) = (x.as_f64(), v.lower.as_f64(), v.upper.as_f64());
        if !(x >= l - tol && x <= u + tol) {
            out.push(Violation { kind: ViolationKind::Bound(j), name: lp.var_name(j), value: x, lower: l, upper: u });
        }
    }
    for (i, r) in lp.rows.iter().enumerate() {
        let (cols, vals) = lp.row(i);
        let act: f64 = cols.iter().zip(vals).map(|(&j, &a)| a.as_f64() * primal[j as usize].as_f64()).sum();
        let (l, u) = (r.lower.as_f64(), r.upper.as_f64());
        if !(act >= l - tol && act <= u + tol) {
            out.push(Violation { kind: ViolationKind::Row(i), name: lp.row_name(i), value: act, lower: l, upper: u });
        }
    }
    out
}
