//! Sparse LP container, size accounting and naming.
//!
//! Rows are stored in compressed sparse row form with a lower and an upper
//! bound each. A row whose bounds are both finite and distinct is a range row.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Placeholder for an absent entity or timestep in a key.
pub const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRole {
    Flow,
    StorageLevel,
    Invest,
    UnitsOn,
    FlowAboveMin,
    VoltageAngle,
}

impl VarRole {
    pub fn prefix(self) -> &'static str {
        match self {
            VarRole::Flow => "f",
            VarRole::StorageLevel => "s",
            VarRole::Invest => "i",
            VarRole::UnitsOn => "u",
            VarRole::FlowAboveMin => "fa",
            VarRole::VoltageAngle => "th",
        }
    }
}

/// One LP column. `a` and `b` index [`LpInstance::entities`]; `b` is only
/// used by flows, `t` is 1-based and [`NONE`] for investment variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableRef<T> {
    pub role: VarRole,
    pub a: u32,
    pub b: u32,
    pub t: u32,
    pub lower: T,
    pub upper: T,
    pub integer: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RowFamily {
    ConsumerBalance,
    StorageBalance,
    ConversionBalance,
    NodeBalance,
    TransportBalance,
    CapacityLimit,
    ChargingLimit,
    StorageCapacity,
    FlowBound,
    DcAngle,
    UcMinOper,
    UcLimit,
    UcMaxAbove,
}

impl RowFamily {
    pub const ALL: [RowFamily; 13] = [
        RowFamily::ConsumerBalance,
        RowFamily::StorageBalance,
        RowFamily::ConversionBalance,
        RowFamily::NodeBalance,
        RowFamily::TransportBalance,
        RowFamily::CapacityLimit,
        RowFamily::ChargingLimit,
        RowFamily::StorageCapacity,
        RowFamily::FlowBound,
        RowFamily::DcAngle,
        RowFamily::UcMinOper,
        RowFamily::UcLimit,
        RowFamily::UcMaxAbove,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            RowFamily::ConsumerBalance => "cb",
            RowFamily::StorageBalance => "sb",
            RowFamily::ConversionBalance => "cv",
            RowFamily::NodeBalance => "nb",
            RowFamily::TransportBalance => "tb",
            RowFamily::CapacityLimit => "cap",
            RowFamily::ChargingLimit => "chg",
            RowFamily::StorageCapacity => "scap",
            RowFamily::FlowBound => "fb",
            RowFamily::DcAngle => "dc",
            RowFamily::UcMinOper => "ucm",
            RowFamily::UcLimit => "ucl",
            RowFamily::UcMaxAbove => "ucx",
        }
    }

    /// Human-readable name of the constraint a row of this family states.
    pub fn description(self) -> &'static str {
        match self {
            RowFamily::ConsumerBalance => "consumer balance",
            RowFamily::StorageBalance => "storage balance",
            RowFamily::ConversionBalance => "conversion balance",
            RowFamily::NodeBalance => "node balance",
            RowFamily::TransportBalance => "connection balance",
            RowFamily::CapacityLimit => "capacity limit",
            RowFamily::ChargingLimit => "charging limit",
            RowFamily::StorageCapacity => "storage capacity",
            RowFamily::FlowBound => "flow bounds",
            RowFamily::DcAngle => "DC power flow",
            RowFamily::UcMinOper => "min_oper_point",
            RowFamily::UcLimit => "uc_limit",
            RowFamily::UcMaxAbove => "max_flow_above_min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
    Range,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMeta<T> {
    pub family: RowFamily,
    pub a: u32,
    pub b: u32,
    pub t: u32,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> RowMeta<T> {
    pub fn sense(&self) -> Sense {
        row_sense(self.lower, self.upper)
    }

    /// Range rows count as two constraints.
    pub fn n_constraints(&self) -> usize {
        if self.sense() == Sense::Range {
            2
        } else {
            1
        }
    }
}

fn row_sense<T: Scalar>(lower: T, upper: T) -> Sense {
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) if lower == upper => Sense::Eq,
        (true, true) => Sense::Range,
        (false, _) => Sense::Le,
        (true, false) => Sense::Ge,
    }
}

/// A row on its way into an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow<T> {
    pub family: RowFamily,
    pub a: u32,
    pub b: u32,
    pub t: u32,
    pub lower: T,
    pub upper: T,
    pub terms: Vec<(usize, T)>,
}

impl<T: Scalar> ConstraintRow<T> {
    pub fn sense(&self) -> Sense {
        row_sense(self.lower, self.upper)
    }

    /// Row value at `x`.
    pub fn activity(&self, x: &[T]) -> T {
        self.terms.iter().map(|&(j, c)| c * x[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelSize {
    pub n_vars: usize,
    pub n_constraints: usize,
    pub n_nonzeros: usize,
}

impl ModelSize {
    /// Relative reduction of `self` against `reference`, in percent, per dimension.
    pub fn reduction_vs(&self, reference: &ModelSize) -> [f64; 3] {
        let pct = |a: usize, r: usize| if r == 0 { 0.0 } else { 100.0 * (r as f64 - a as f64) / r as f64 };
        [
            pct(self.n_vars, reference.n_vars),
            pct(self.n_constraints, reference.n_constraints),
            pct(self.n_nonzeros, reference.n_nonzeros),
        ]
    }
}

impl fmt::Display for ModelSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.n_vars, self.n_constraints, self.n_nonzeros)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance<T> {
    pub name: String,
    /// Names that variable and row keys point into.
    pub entities: Vec<String>,
    pub vars: Vec<VariableRef<T>>,
    pub rows: Vec<RowMeta<T>>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
    /// Minimisation objective, sorted by variable index.
    pub objective: Vec<(usize, T)>,
}

impl<T: Scalar> LpInstance<T> {
    pub fn new(name: impl Into<String>) -> Self {
        LpInstance {
            name: name.into(),
            entities: Vec::new(),
            vars: Vec::new(),
            rows: Vec::new(),
            row_start: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_nonzeros(&self) -> usize {
        self.cols.len()
    }

    pub fn add_var(&mut self, v: VariableRef<T>) -> usize {
        self.vars.push(v);
        self.vars.len() - 1
    }

    pub fn push_row(&mut self, row: ConstraintRow<T>) {
        self.push_row_parts(row.family, row.a, row.b, row.t, row.lower, row.upper, &row.terms);
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push_row_parts(&mut self, family: RowFamily, a: u32, b: u32, t: u32, lower: T, upper: T, terms: &[(usize, T)]) {
        for &(j, c) in terms {
            self.cols.push(j as u32);
            self.vals.push(c);
        }
        self.row_start.push(self.cols.len());
        self.rows.push(RowMeta { family, a, b, t, lower, upper });
    }

    /// Column indices and coefficients of row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[T]) {
        let (s, e) = (self.row_start[i], self.row_start[i + 1]);
        (&self.cols[s..e], &self.vals[s..e])
    }

    pub fn row_owned(&self, i: usize) -> ConstraintRow<T> {
        let m = self.rows[i];
        let (c, v) = self.row(i);
        ConstraintRow {
            family: m.family,
            a: m.a,
            b: m.b,
            t: m.t,
            lower: m.lower,
            upper: m.upper,
            terms: c.iter().zip(v).map(|(&j, &x)| (j as usize, x)).collect(),
        }
    }

    pub fn activity(&self, i: usize, x: &[T]) -> T {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&j, &a)| a * x[j as usize]).sum()
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    /// Sizes under the counting convention: bounds are not constraints, every
    /// row is one constraint except range rows (two), every row term is one
    /// nonzero.
    pub fn size(&self) -> ModelSize {
        ModelSize {
            n_vars: self.vars.len(),
            n_constraints: self.rows.iter().map(RowMeta::n_constraints).sum(),
            n_nonzeros: self.cols.len(),
        }
    }

    /// Checks the structural invariants: valid indices, finite nonzero
    /// coefficients, no duplicate terms in a row, consistent bounds.
    pub fn check(&self) -> Result<(), String> {
        let n = self.vars.len();
        let mut seen = vec![usize::MAX; n];
        for i in 0..self.rows.len() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                let j = j as usize;
                if j >= n {
                    return Err(format!("row {} references variable {j} of {n}", self.row_name(i)));
                }
                if !a.is_finite() || a == T::zero() {
                    return Err(format!("row {} has coefficient {a}", self.row_name(i)));
                }
                if seen[j] == i {
                    return Err(format!("row {} repeats variable {}", self.row_name(i), self.var_name(j)));
                }
                seen[j] = i;
            }
            let m = &self.rows[i];
            if m.lower.is_nan() || m.upper.is_nan() || m.lower > m.upper || (m.lower.is_infinite() && m.upper.is_infinite()) {
                return Err(format!("row {} has bounds [{}, {}]", self.row_name(i), m.lower, m.upper));
            }
        }
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(format!("variable {} has bounds [{}, {}]", self.var_name(j), v.lower, v.upper));
            }
        }
        for &(j, c) in &self.objective {
            if j >= n || !c.is_finite() {
                return Err(format!("bad objective term ({j}, {c})"));
            }
        }
        Ok(())
    }

    fn entity(&self, k: u32) -> &str {
        self.entities.get(k as usize).map(String::as_str).unwrap_or("?")
    }

    fn key_name(&self, prefix: &str, a: u32, b: u32, t: u32) -> String {
        let mut s = String::with_capacity(24);
        s.push_str(prefix);
        s.push('(');
        s.push_str(self.entity(a));
        if b != NONE {
            s.push(',');
            s.push_str(self.entity(b));
        }
        if t != NONE {
            s.push(',');
            s.push_str(&t.to_string());
        }
        s.push(')');
        s
    }

    /// `f(pv,bt,1)`, `s(bt,1)`, `i(bt)` and so on.
    pub fn var_name(&self, j: usize) -> String {
        let v = &self.vars[j];
        self.key_name(v.role.prefix(), v.a, v.b, v.t)
    }

    pub fn row_name(&self, i: usize) -> String {
        let m = &self.rows[i];
        self.key_name(m.family.prefix(), m.a, m.b, m.t)
    }

    pub fn var_index_by_name(&self) -> HashMap<String, usize> {
        (0..self.vars.len()).map(|j| (self.var_name(j), j)).collect()
    }

    /// Reorders columns so that new column `k` is old column `perm[k]`.
    pub fn permute_columns(&self, perm: &[usize]) -> LpInstance<T> {
        assert_eq!(perm.len(), self.vars.len(), "permutation length");
        let mut inv = vec![0u32; perm.len()];
        for (k, &old) in perm.iter().enumerate() {
            inv[old] = k as u32;
        }
        let mut out = self.clone();
        out.vars = perm.iter().map(|&old| self.vars[old]).collect();
        for c in out.cols.iter_mut() {
            *c = inv[*c as usize];
        }
        out.objective = self.objective.iter().map(|&(j, c)| (inv[j] as usize, c)).collect();
        out.objective.sort_by_key(|&(j, _)| j);
        out
    }

    /// Counts per row family, in family order.
    pub fn family_counts(&self) -> Vec<(RowFamily, usize)> {
        RowFamily::ALL
            .iter()
            .map(|&f| (f, self.rows.iter().filter(|r| r.family == f).count()))
            .filter(|&(_, n)| n > 0)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration_limit",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a solve. `primal` is `Some` exactly when the status is optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub status: SolveStatus,
    pub objective: T,
    pub primal: Option<Vec<T>>,
    pub iterations: u64,
    pub wall_time_s: f64,
}

impl<T: Scalar> SolveResult<T> {
    pub fn without_solution(status: SolveStatus, iterations: u64, wall_time_s: f64) -> Self {
        SolveResult { status, objective: T::nan(), primal: None, iterations, wall_time_s }
    }
}
