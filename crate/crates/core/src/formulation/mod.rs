//! Builds the LP of an asset graph under each modelling approach.

mod emit;
mod lower;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LpInstance;
use crate::model::{AssetKind, Diagnostic, EnergySystem, ModelError, Severity};
use crate::scalar::Scalar;

pub use emit::{
    emit_capacity_rows, emit_consumer_balance, emit_conversion_balance, emit_dc_opf, emit_flow_bounds,
    emit_node_balance, emit_objective, emit_storage_balance, emit_unit_commitment, VarIndex,
};
pub use lower::{lower_to_node_form, transport_id};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Approach {
    #[serde(rename = "3BB-4F")]
    ThreeBB4F,
    #[serde(rename = "2BB-2F")]
    TwoBB2F,
    #[serde(rename = "2BB-1F")]
    TwoBB1F,
    #[serde(rename = "1BB-1F")]
    OneBB1F,
}

impl Approach {
    pub const ALL: [Approach; 4] = [Approach::ThreeBB4F, Approach::TwoBB2F, Approach::TwoBB1F, Approach::OneBB1F];

    pub fn label(self) -> &'static str {
        match self {
            Approach::ThreeBB4F => "3BB-4F",
            Approach::TwoBB2F => "2BB-2F",
            Approach::TwoBB1F => "2BB-1F",
            Approach::OneBB1F => "1BB-1F",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Approach::ALL
            .into_iter()
            .find(|a| a.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown approach `{s}` (expected 3BB-4F, 2BB-2F, 2BB-1F or 1BB-1F)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Extensions {
    pub dc_opf: bool,
    pub unit_commitment: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("system is invalid: {}", join(.0))]
    InvalidSystem(Vec<Diagnostic>),
    #[error("no hub annotation covers arcs {}", .0.join(", "))]
    MissingHubAnnotation(Vec<String>),
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("DC flow touches `{0}`, which has no voltage angle")]
    MissingAngleAsset(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Builds the LP of `system` under `approach`.
///
/// Variables are ordered by (role, asset, timestep) and rows by (family,
/// asset, timestep), so equal inputs give identical instances.
pub fn build_model<T: Scalar>(
    system: &EnergySystem<T>,
    approach: Approach,
    ext: Extensions,
) -> Result<LpInstance<T>, BuildError> {
    let name = format!("flowgraph-{approach}");
    if approach == Approach::OneBB1F {
        let errors: Vec<Diagnostic> = system.validate().into_iter().filter(|d| d.severity == Severity::Error).collect();
        if !errors.is_empty() {
            return Err(BuildError::InvalidSystem(errors));
        }
        return build_graph(system, ext, name);
    }
    if ext.dc_opf && approach == Approach::ThreeBB4F {
        if let Some(arc) = system.arcs().find(|a| a.dc.is_some()) {
            return Err(BuildError::UnsupportedCombination(format!(
                "DC power flow on the four-variable connection {}->{}",
                arc.from, arc.to
            )));
        }
    }
    let lowered = lower_to_node_form(system, approach)?;
    build_graph(&lowered, ext, name)
}

/// Emits the rows of an already lowered (or asset-only) graph.
pub fn build_graph<T: Scalar>(system: &EnergySystem<T>, ext: Extensions, name: String) -> Result<LpInstance<T>, BuildError> {
    let (vars, columns) = VarIndex::new(system, ext)?;
    let horizon = vars.horizon;
    let n_assets = vars.assets.len();

    let mut lp = LpInstance::new(name);
    lp.entities = vars.entities();
    lp.vars = columns;
    lp.objective = emit_objective(&vars);

    let ts = 1..=horizon;
    let mut push = |row: Option<crate::lp::ConstraintRow<T>>| {
        if let Some(r) = row {
            lp.push_row_parts(r.family, r.a, r.b, r.t, r.lower, r.upper, &r.terms);
        }
    };
    type RowFn<'a, T> = fn(&VarIndex<'a, T>, usize, usize) -> Option<crate::lp::ConstraintRow<T>>;
    let balance_fns: [RowFn<'_, T>; 4] = [
        VarIndex::consumer_balance_row,
        VarIndex::storage_balance_row,
        VarIndex::conversion_balance_row,
        VarIndex::node_balance_row,
    ];
    for f in balance_fns {
        for a in 0..n_assets {
            for t in ts.clone() {
                push(f(&vars, a, t));
            }
        }
    }
    for a in 0..n_assets {
        if vars.assets[a].kind != AssetKind::Transport {
            continue;
        }
        // Both directions of one connection, each over the horizon.
        let per_t: Vec<_> = ts.clone().map(|t| vars.transport_balance_rows(a, t)).collect();
        let n_dir = per_t.first().map_or(0, Vec::len);
        for d in 0..n_dir {
            for rows in &per_t {
                push(rows.get(d).cloned());
            }
        }
    }
    let limit_fns: [RowFn<'_, T>; 3] = [VarIndex::capacity_row, VarIndex::charging_row, VarIndex::storage_capacity_row];
    for f in limit_fns {
        for a in 0..n_assets {
            for t in ts.clone() {
                push(f(&vars, a, t));
            }
        }
    }
    for k in 0..vars.arcs.len() {
        for t in ts.clone() {
            push(vars.flow_bound_row(k, t));
        }
    }
    for k in 0..vars.dc_arcs.len() {
        for t in ts.clone() {
            push(vars.dc_row(k, t));
        }
    }
    if ext.unit_commitment {
        let uc_fns: [RowFn<'_, T>; 3] = [VarIndex::uc_min_oper_row, VarIndex::uc_limit_row, VarIndex::uc_max_above_row];
        for f in uc_fns {
            for a in 0..n_assets {
                for t in ts.clone() {
                    push(f(&vars, a, t));
                }
            }
        }
    }
    Ok(lp)
}
