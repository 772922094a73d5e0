//! Variable layout and row emitters for one (possibly lowered) asset graph.
//!
//! Every emitter takes a [`VarIndex`] and produces rows for a single family.
//! `build_model` calls the per-asset functions in (family, asset, timestep)
//! order; the `emit_*` wrappers return all rows of a family at one timestep.

use std::collections::HashMap;

use crate::lp::{ConstraintRow, RowFamily, VarRole, VariableRef, NONE};
use crate::model::{Asset, AssetKind, EnergySystem, FlowArc};
use crate::scalar::Scalar;

use super::{BuildError, Extensions};

/// Column layout of a built model plus adjacency lists of the graph.
///
/// Entity numbers are positions of assets in id order; they double as the
/// entity table of the resulting [`crate::LpInstance`].
pub struct VarIndex<'s, T> {
    pub system: &'s EnergySystem<T>,
    pub horizon: usize,
    pub ext: Extensions,
    pub assets: Vec<&'s Asset<T>>,
    pub arcs: Vec<&'s FlowArc<T>>,
    /// `(from, to)` entity numbers per arc.
    pub ends: Vec<(u32, u32)>,
    pub incoming: Vec<Vec<usize>>,
    pub outgoing: Vec<Vec<usize>>,
    flow_base: Vec<usize>,
    storage_base: Vec<Option<usize>>,
    invest: Vec<Option<usize>>,
    units_on_base: Vec<Option<usize>>,
    above_min_base: Vec<Option<usize>>,
    angle_base: Vec<Option<usize>>,
    /// Arcs that carry a DC row, with the optional opposite arc whose flow
    /// enters the same row with a negative sign.
    pub dc_arcs: Vec<(usize, Option<usize>)>,
}

impl<'s, T: Scalar> VarIndex<'s, T> {
    /// Lays out all columns. Returns the index and the column list in order.
    pub fn new(system: &'s EnergySystem<T>, ext: Extensions) -> Result<(Self, Vec<VariableRef<T>>), BuildError> {
        let horizon = system.horizon();
        let assets: Vec<&Asset<T>> = system.assets().collect();
        let pos: HashMap<&str, u32> = assets.iter().enumerate().map(|(k, a)| (a.id.as_str(), k as u32)).collect();
        let arcs: Vec<&FlowArc<T>> = system.arcs().collect();
        let ends: Vec<(u32, u32)> = arcs.iter().map(|a| (pos[a.from.as_str()], pos[a.to.as_str()])).collect();
        let mut incoming = vec![Vec::new(); assets.len()];
        let mut outgoing = vec![Vec::new(); assets.len()];
        for (k, &(f, t)) in ends.iter().enumerate() {
            outgoing[f as usize].push(k);
            incoming[t as usize].push(k);
        }

        let n_t = horizon as u32;
        let mut vars = Vec::new();
        let per_t = |vars: &mut Vec<VariableRef<T>>, role, a, b, lower, upper, integer| {
            let base = vars.len();
            for t in 1..=n_t {
                vars.push(VariableRef { role, a, b, t, lower, upper, integer });
            }
            base
        };

        let mut flow_base = Vec::with_capacity(arcs.len());
        for (arc, &(f, t)) in arcs.iter().zip(&ends) {
            flow_base.push(per_t(&mut vars, VarRole::Flow, f, t, arc.lower(), arc.upper(), false));
        }

        let mut storage_base = vec![None; assets.len()];
        for (k, a) in assets.iter().enumerate() {
            if a.kind == AssetKind::Storage {
                let cap = a.storage_capacity_mwh.unwrap_or_else(T::zero);
                storage_base[k] = Some(per_t(&mut vars, VarRole::StorageLevel, k as u32, NONE, T::zero(), cap, false));
            }
        }

        let mut invest = vec![None; assets.len()];
        for (k, a) in assets.iter().enumerate() {
            if a.investable {
                invest[k] = Some(vars.len());
                vars.push(VariableRef {
                    role: VarRole::Invest,
                    a: k as u32,
                    b: NONE,
                    t: NONE,
                    lower: T::zero(),
                    upper: T::of(a.invest_limit as f64),
                    integer: false,
                });
            }
        }

        let mut units_on_base = vec![None; assets.len()];
        let mut above_min_base = vec![None; assets.len()];
        if ext.unit_commitment {
            let uc: Vec<usize> = (0..assets.len()).filter(|&k| assets[k].uc_enabled && !outgoing[k].is_empty()).collect();
            for &k in &uc {
                units_on_base[k] = Some(per_t(&mut vars, VarRole::UnitsOn, k as u32, NONE, T::zero(), T::infinity(), true));
            }
            for &k in &uc {
                above_min_base[k] =
                    Some(per_t(&mut vars, VarRole::FlowAboveMin, k as u32, NONE, T::zero(), T::infinity(), false));
            }
        }

        let mut angle_base = vec![None; assets.len()];
        let mut dc_arcs = Vec::new();
        if ext.dc_opf {
            let key: HashMap<(u32, u32), usize> = ends.iter().enumerate().map(|(k, &e)| (e, k)).collect();
            for (k, arc) in arcs.iter().enumerate() {
                if arc.dc.is_none() {
                    continue;
                }
                let (f, t) = ends[k];
                for e in [f, t] {
                    if !assets[e as usize].voltage_angle_enabled {
                        return Err(BuildError::MissingAngleAsset(assets[e as usize].id.clone()));
                    }
                }
                // A reverse arc without its own DC data is the other half of the same line.
                let twin = key.get(&(t, f)).copied().filter(|&r| arcs[r].dc.is_none());
                dc_arcs.push((k, twin));
            }
            let mut reference_fixed = false;
            for (k, a) in assets.iter().enumerate() {
                if a.voltage_angle_enabled {
                    let (lo, up) = if reference_fixed { (T::neg_infinity(), T::infinity()) } else { (T::zero(), T::zero()) };
                    reference_fixed = true;
                    angle_base[k] = Some(per_t(&mut vars, VarRole::VoltageAngle, k as u32, NONE, lo, up, false));
                }
            }
        }

        let index = VarIndex {
            system,
            horizon,
            ext,
            assets,
            arcs,
            ends,
            incoming,
            outgoing,
            flow_base,
            storage_base,
            invest,
            units_on_base,
            above_min_base,
            angle_base,
            dc_arcs,
        };
        Ok((index, vars))
    }

    pub fn entities(&self) -> Vec<String> {
        self.assets.iter().map(|a| a.id.clone()).collect()
    }

    #[inline]
    pub fn flow(&self, arc: usize, t: usize) -> usize {
        self.flow_base[arc] + t - 1
    }

    pub fn storage(&self, asset: usize, t: usize) -> Option<usize> {
        self.storage_base[asset].map(|b| b + t - 1)
    }

    pub fn invest(&self, asset: usize) -> Option<usize> {
        self.invest[asset]
    }

    pub fn units_on(&self, asset: usize, t: usize) -> Option<usize> {
        self.units_on_base[asset].map(|b| b + t - 1)
    }

    pub fn above_min(&self, asset: usize, t: usize) -> Option<usize> {
        self.above_min_base[asset].map(|b| b + t - 1)
    }

    pub fn angle(&self, asset: usize, t: usize) -> Option<usize> {
        self.angle_base[asset].map(|b| b + t - 1)
    }

    pub fn asset_number(&self, id: &str) -> Option<usize> {
        self.assets.iter().position(|a| a.id == id)
    }

    pub fn arc_number(&self, from: &str, to: &str) -> Option<usize> {
        self.arcs.iter().position(|a| a.from == from && a.to == to)
    }

    fn row(&self, family: RowFamily, a: usize, t: usize, lower: T, upper: T, terms: Vec<(usize, T)>) -> ConstraintRow<T> {
        ConstraintRow { family, a: a as u32, b: NONE, t: t as u32, lower, upper, terms }
    }

    fn flows(&self, arcs: &[usize], t: usize, coef: T, terms: &mut Vec<(usize, T)>) {
        terms.extend(arcs.iter().map(|&k| (self.flow(k, t), coef)));
    }

    /// Σ in − Σ out = rhs, used by consumers, hubs and nothing else.
    fn balance(&self, family: RowFamily, a: usize, t: usize, rhs: T) -> ConstraintRow<T> {
        let mut terms = Vec::with_capacity(self.incoming[a].len() + self.outgoing[a].len());
        self.flows(&self.incoming[a], t, T::one(), &mut terms);
        self.flows(&self.outgoing[a], t, -T::one(), &mut terms);
        self.row(family, a, t, rhs, rhs, terms)
    }

    pub fn consumer_balance_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        let asset = self.assets[a];
        (asset.kind == AssetKind::Consumer).then(|| self.balance(RowFamily::ConsumerBalance, a, t, asset.demand(t)))
    }

    pub fn node_balance_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        (self.assets[a].kind == AssetKind::Hub).then(|| self.balance(RowFamily::NodeBalance, a, t, T::zero()))
    }

    pub fn storage_balance_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        let asset = self.assets[a];
        let s = self.storage(a, t)?;
        let mut terms = vec![(s, T::one())];
        let mut rhs = T::zero();
        if t > 1 {
            terms.push((s - 1, -T::one()));
        } else {
            rhs = asset.initial_storage_mwh.unwrap_or_else(T::zero);
        }
        self.flows(&self.incoming[a], t, -asset.eta_in, &mut terms);
        self.flows(&self.outgoing[a], t, T::one() / asset.eta_out, &mut terms);
        Some(self.row(RowFamily::StorageBalance, a, t, rhs, rhs, terms))
    }

    pub fn conversion_balance_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        let asset = self.assets[a];
        if asset.kind != AssetKind::Conversion {
            return None;
        }
        let mut terms = Vec::new();
        self.flows(&self.incoming[a], t, asset.eta_in, &mut terms);
        self.flows(&self.outgoing[a], t, -T::one(), &mut terms);
        Some(self.row(RowFamily::ConversionBalance, a, t, T::zero(), T::zero(), terms))
    }

    /// Flow conservation through a connection, one row per direction. The
    /// row is keyed by the vertex the direction delivers to.
    pub fn transport_balance_rows(&self, a: usize, t: usize) -> Vec<ConstraintRow<T>> {
        if self.assets[a].kind != AssetKind::Transport {
            return Vec::new();
        }
        let mut rows = Vec::new();
        let mut outs = self.outgoing[a].clone();
        outs.sort_by_key(|&k| self.ends[k].1);
        for out_arc in outs {
            let dest = self.ends[out_arc].1;
            // The matching inflow comes from the other neighbour.
            let Some(&in_arc) = self.incoming[a].iter().find(|&&k| self.ends[k].0 != dest) else {
                continue;
            };
            let mut row = self.row(
                RowFamily::TransportBalance,
                a,
                t,
                T::zero(),
                T::zero(),
                vec![(self.flow(out_arc, t), T::one()), (self.flow(in_arc, t), -T::one())],
            );
            row.b = dest;
            rows.push(row);
        }
        rows
    }

    fn produces(&self, a: usize) -> bool {
        matches!(self.assets[a].kind, AssetKind::Producer | AssetKind::Storage | AssetKind::Conversion)
    }

    /// Σ arcs − P̄·avail·i ≤ P̄·avail·U⁰.
    fn limit_row(&self, family: RowFamily, a: usize, arcs: &[usize], t: usize, avail: T) -> ConstraintRow<T> {
        let asset = self.assets[a];
        let cap = asset.capacity_mw * avail;
        let mut terms = Vec::with_capacity(arcs.len() + 1);
        self.flows(arcs, t, T::one(), &mut terms);
        if let Some(i) = self.invest(a) {
            if cap != T::zero() {
                terms.push((i, -cap));
            }
        }
        let rhs = cap * T::of(asset.initial_units as f64);
        self.row(family, a, t, T::neg_infinity(), rhs, terms)
    }

    pub fn capacity_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        if !self.produces(a) || self.outgoing[a].is_empty() {
            return None;
        }
        let avail = self.assets[a].availability(t);
        Some(self.limit_row(RowFamily::CapacityLimit, a, &self.outgoing[a], t, avail))
    }

    pub fn charging_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        if self.assets[a].kind != AssetKind::Storage || self.incoming[a].is_empty() {
            return None;
        }
        Some(self.limit_row(RowFamily::ChargingLimit, a, &self.incoming[a], t, T::one()))
    }

    pub fn storage_capacity_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        let s = self.storage(a, t)?;
        let cap = self.assets[a].storage_capacity_mwh.unwrap_or_else(T::zero);
        Some(self.row(RowFamily::StorageCapacity, a, t, T::neg_infinity(), cap, vec![(s, T::one())]))
    }

    /// Rows for the finite sides of an arc's bounds; a two-sided bound is one
    /// range row.
    pub fn flow_bound_row(&self, arc: usize, t: usize) -> Option<ConstraintRow<T>> {
        let a = self.arcs[arc];
        let (lo, up) = (a.lower(), a.upper());
        if !lo.is_finite() && !up.is_finite() || (lo == T::zero() && !up.is_finite()) {
            return None;
        }
        let lo = if lo.is_finite() && a.max_bwd_mw.is_some() { lo } else { T::neg_infinity() };
        let (f, to) = self.ends[arc];
        Some(ConstraintRow {
            family: RowFamily::FlowBound,
            a: f,
            b: to,
            t: t as u32,
            lower: lo,
            upper: up,
            terms: vec![(self.flow(arc, t), T::one())],
        })
    }

    /// f − k·θ_from + k·θ_to = 0 with k = S_base / X; an opposite twin arc
    /// enters with −1.
    pub fn dc_row(&self, entry: usize, t: usize) -> Option<ConstraintRow<T>> {
        let (arc, twin) = *self.dc_arcs.get(entry)?;
        let k = self.arcs[arc].dc?.susceptance();
        let (f, to) = self.ends[arc];
        let mut terms = vec![(self.flow(arc, t), T::one())];
        if let Some(r) = twin {
            terms.push((self.flow(r, t), -T::one()));
        }
        terms.push((self.angle(f as usize, t)?, -k));
        terms.push((self.angle(to as usize, t)?, k));
        Some(ConstraintRow { family: RowFamily::DcAngle, a: f, b: to, t: t as u32, lower: T::zero(), upper: T::zero(), terms })
    }

    /// f̂ − Σ out + P̲·u = 0.
    pub fn uc_min_oper_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        let (u, fa) = (self.units_on(a, t)?, self.above_min(a, t)?);
        let mut terms = vec![(fa, T::one())];
        self.flows(&self.outgoing[a], t, -T::one(), &mut terms);
        let pmin = self.assets[a].min_capacity_mw;
        if pmin != T::zero() {
            terms.push((u, pmin));
        }
        Some(self.row(RowFamily::UcMinOper, a, t, T::zero(), T::zero(), terms))
    }

    /// u − i ≤ U⁰.
    pub fn uc_limit_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        let u = self.units_on(a, t)?;
        let mut terms = vec![(u, T::one())];
        if let Some(i) = self.invest(a) {
            terms.push((i, -T::one()));
        }
        let u0 = T::of(self.assets[a].initial_units as f64);
        Some(self.row(RowFamily::UcLimit, a, t, T::neg_infinity(), u0, terms))
    }

    /// f̂ − (P̄ − P̲)·u ≤ 0.
    pub fn uc_max_above_row(&self, a: usize, t: usize) -> Option<ConstraintRow<T>> {
        let (u, fa) = (self.units_on(a, t)?, self.above_min(a, t)?);
        let asset = self.assets[a];
        let span = asset.capacity_mw - asset.min_capacity_mw;
        let mut terms = vec![(fa, T::one())];
        if span != T::zero() {
            terms.push((u, -span));
        }
        Some(self.row(RowFamily::UcMaxAbove, a, t, T::neg_infinity(), T::zero(), terms))
    }
}

/// Investment and operating cost terms, sorted by column.
pub fn emit_objective<T: Scalar>(vars: &VarIndex<'_, T>) -> Vec<(usize, T)> {
    let mut obj = Vec::new();
    for (k, arc) in vars.arcs.iter().enumerate() {
        if arc.op_cost != T::zero() {
            obj.extend((1..=vars.horizon).map(|t| (vars.flow(k, t), arc.op_cost)));
        }
    }
    for (a, asset) in vars.assets.iter().enumerate() {
        if let Some(i) = vars.invest(a) {
            if asset.invest_cost != T::zero() {
                obj.push((i, asset.invest_cost));
            }
        }
    }
    obj.sort_by_key(|&(j, _)| j);
    obj
}

fn per_asset<'s, T: Scalar>(
    vars: &VarIndex<'s, T>,
    t: usize,
    f: impl Fn(&VarIndex<'s, T>, usize, usize) -> Option<ConstraintRow<T>>,
) -> Vec<ConstraintRow<T>> {
    (0..vars.assets.len()).filter_map(|a| f(vars, a, t)).collect()
}

pub fn emit_consumer_balance<T: Scalar>(vars: &VarIndex<'_, T>, t: usize) -> Vec<ConstraintRow<T>> {
    per_asset(vars, t, VarIndex::consumer_balance_row)
}

pub fn emit_node_balance<T: Scalar>(vars: &VarIndex<'_, T>, t: usize) -> Vec<ConstraintRow<T>> {
    per_asset(vars, t, VarIndex::node_balance_row)
}

pub fn emit_storage_balance<T: Scalar>(vars: &VarIndex<'_, T>, t: usize) -> Vec<ConstraintRow<T>> {
    per_asset(vars, t, VarIndex::storage_balance_row)
}

pub fn emit_conversion_balance<T: Scalar>(vars: &VarIndex<'_, T>, t: usize) -> Vec<ConstraintRow<T>> {
    per_asset(vars, t, VarIndex::conversion_balance_row)
}

/// Outflow capacity rows, then charging rows, then storage capacity rows.
pub fn emit_capacity_rows<T: Scalar>(vars: &VarIndex<'_, T>, t: usize) -> Vec<ConstraintRow<T>> {
    let mut rows = per_asset(vars, t, VarIndex::capacity_row);
    rows.extend(per_asset(vars, t, VarIndex::charging_row));
    rows.extend(per_asset(vars, t, VarIndex::storage_capacity_row));
    rows
}

pub fn emit_flow_bounds<T: Scalar>(vars: &VarIndex<'_, T>, t: usize) -> Vec<ConstraintRow<T>> {
    (0..vars.arcs.len()).filter_map(|k| vars.flow_bound_row(k, t)).collect()
}

pub fn emit_dc_opf<T: Scalar>(vars: &VarIndex<'_, T>, t: usize) -> Vec<ConstraintRow<T>> {
    (0..vars.dc_arcs.len()).filter_map(|k| vars.dc_row(k, t)).collect()
}

pub fn emit_unit_commitment<T: Scalar>(vars: &VarIndex<'_, T>, t: usize) -> Vec<ConstraintRow<T>> {
    let mut rows = per_asset(vars, t, VarIndex::uc_min_oper_row);
    rows.extend(per_asset(vars, t, VarIndex::uc_limit_row));
    rows.extend(per_asset(vars, t, VarIndex::uc_max_above_row));
    rows
}
