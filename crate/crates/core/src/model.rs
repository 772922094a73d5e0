//! The asset graph: energy assets as vertices, flows as directed arcs.
//!
//! An [`EnergySystem`] written by a user contains only producers, consumers,
//! storage and conversion assets connected directly to each other. Hub
//! annotations describe where a node-based formulation would place a shared
//! balance node; they are consumed by [`crate::formulation::lower_to_node_form`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetKind {
    Producer,
    Consumer,
    Storage,
    Conversion,
    /// Balance node. Only created by lowering.
    Hub,
    /// Connection between two balance vertices. Only created by lowering.
    Transport,
}

impl AssetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AssetKind::Producer => "producer",
            AssetKind::Consumer => "consumer",
            AssetKind::Storage => "storage",
            AssetKind::Conversion => "conversion",
            AssetKind::Hub => "hub",
            AssetKind::Transport => "transport",
        }
    }

    /// Vertices whose balance is an equality that can pass energy through in
    /// either direction.
    pub fn is_balance_point(self) -> bool {
        matches!(self, AssetKind::Consumer | AssetKind::Hub | AssetKind::Transport)
    }
}

impl fmt::Display for AssetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AssetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "producer" => AssetKind::Producer,
            "consumer" => AssetKind::Consumer,
            "storage" => AssetKind::Storage,
            "conversion" => AssetKind::Conversion,
            "hub" => AssetKind::Hub,
            "transport" => AssetKind::Transport,
            other => return Err(format!("unknown asset kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Asset<T> {
    pub id: String,
    pub kind: AssetKind,
    /// Maximum capacity per unit, MW.
    pub capacity_mw: T,
    /// Minimum operating point per unit, MW. Only used with unit commitment.
    pub min_capacity_mw: T,
    pub initial_units: u32,
    pub investable: bool,
    pub invest_limit: u32,
    /// Cost per invested unit.
    pub invest_cost: T,
    pub storage_capacity_mwh: Option<T>,
    pub initial_storage_mwh: Option<T>,
    pub eta_in: T,
    pub eta_out: T,
    pub demand_profile: Option<Vec<T>>,
    /// Multiplies `capacity_mw` per timestep. Producers only.
    pub availability_profile: Option<Vec<T>>,
    pub uc_enabled: bool,
    pub voltage_angle_enabled: bool,
}

impl<T: Scalar> Asset<T> {
    fn base(id: impl Into<String>, kind: AssetKind, capacity_mw: T) -> Self {
        Asset {
            id: id.into(),
            kind,
            capacity_mw,
            min_capacity_mw: T::zero(),
            initial_units: 1,
            investable: false,
            invest_limit: 0,
            invest_cost: T::zero(),
            storage_capacity_mwh: None,
            initial_storage_mwh: None,
            eta_in: T::one(),
            eta_out: T::one(),
            demand_profile: None,
            availability_profile: None,
            uc_enabled: false,
            voltage_angle_enabled: false,
        }
    }

    pub fn producer(id: impl Into<String>, capacity_mw: T) -> Self {
        Self::base(id, AssetKind::Producer, capacity_mw)
    }

    pub fn consumer(id: impl Into<String>, demand: Vec<T>) -> Self {
        let mut a = Self::base(id, AssetKind::Consumer, T::zero());
        a.initial_units = 0;
        a.demand_profile = Some(demand);
        a
    }

    pub fn storage(id: impl Into<String>, capacity_mw: T, storage_capacity_mwh: T, initial_storage_mwh: T) -> Self {
        let mut a = Self::base(id, AssetKind::Storage, capacity_mw);
        a.storage_capacity_mwh = Some(storage_capacity_mwh);
        a.initial_storage_mwh = Some(initial_storage_mwh);
        a
    }

    pub fn conversion(id: impl Into<String>, capacity_mw: T, eta_in: T) -> Self {
        let mut a = Self::base(id, AssetKind::Conversion, capacity_mw);
        a.eta_in = eta_in;
        a
    }

    pub(crate) fn hub(id: impl Into<String>) -> Self {
        let mut a = Self::base(id, AssetKind::Hub, T::zero());
        a.initial_units = 0;
        a
    }

    pub(crate) fn transport(id: impl Into<String>) -> Self {
        let mut a = Self::base(id, AssetKind::Transport, T::zero());
        a.initial_units = 0;
        a
    }

    pub fn with_availability(mut self, profile: Vec<T>) -> Self {
        self.availability_profile = Some(profile);
        self
    }

    pub fn with_investment(mut self, limit: u32, cost: T) -> Self {
        self.investable = true;
        self.invest_limit = limit;
        self.invest_cost = cost;
        self
    }

    pub fn with_initial_units(mut self, units: u32) -> Self {
        self.initial_units = units;
        self
    }

    pub fn with_efficiencies(mut self, eta_in: T, eta_out: T) -> Self {
        self.eta_in = eta_in;
        self.eta_out = eta_out;
        self
    }

    pub fn with_unit_commitment(mut self, min_capacity_mw: T) -> Self {
        self.uc_enabled = true;
        self.min_capacity_mw = min_capacity_mw;
        self
    }

    pub fn with_voltage_angle(mut self) -> Self {
        self.voltage_angle_enabled = true;
        self
    }

    /// Availability factor at 1-based timestep `t`; 1 when no profile is set.
    pub fn availability(&self, t: usize) -> T {
        match &self.availability_profile {
            Some(p) if self.kind == AssetKind::Producer => p.get(t - 1).copied().unwrap_or_else(T::one),
            _ => T::one(),
        }
    }

    pub fn demand(&self, t: usize) -> T {
        self.demand_profile
            .as_ref()
            .and_then(|p| p.get(t - 1).copied())
            .unwrap_or_else(T::zero)
    }

    /// Existing units plus the investment limit when investable.
    pub fn max_units(&self) -> T {
        let extra = if self.investable { self.invest_limit } else { 0 };
        T::of(self.initial_units as f64 + extra as f64)
    }

    /// Largest outflow the asset can ever deliver under its capacity limit with full investment.
    pub fn max_output(&self) -> T {
        let units = self.max_units();
        let peak = self
            .availability_profile
            .as_ref()
            .filter(|_| self.kind == AssetKind::Producer)
            .map(|p| p.iter().copied().fold(T::zero(), T::max))
            .unwrap_or_else(T::one);
        self.capacity_mw * peak * units
    }

    /// Checks the per-asset invariants. Returns the first violation.
    pub fn check(&self) -> Result<(), String> {
        check_id(&self.id)?;
        let nonneg = |name: &str, v: T| {
            if v.is_finite() && v >= T::zero() {
                Ok(())
            } else {
                Err(format!("{name} must be a finite nonnegative number, got {v}"))
            }
        };
        nonneg("capacity_mw", self.capacity_mw)?;
        nonneg("min_capacity_mw", self.min_capacity_mw)?;
        nonneg("invest_cost", self.invest_cost)?;
        if self.min_capacity_mw > self.capacity_mw {
            return Err("min_capacity_mw exceeds capacity_mw".into());
        }
        for (name, eta) in [("eta_in", self.eta_in), ("eta_out", self.eta_out)] {
            if !(eta > T::zero() && eta <= T::one()) {
                return Err(format!("{name} must lie in (0, 1], got {eta}"));
            }
        }
        let is_storage = self.kind == AssetKind::Storage;
        match (is_storage, self.storage_capacity_mwh, self.initial_storage_mwh) {
            (true, Some(cap), Some(init)) => {
                nonneg("storage_capacity_mwh", cap)?;
                nonneg("initial_storage_mwh", init)?;
                if init > cap {
                    return Err("initial_storage_mwh exceeds storage_capacity_mwh".into());
                }
            }
            (true, _, _) => return Err("storage assets need storage_capacity_mwh and initial_storage_mwh".into()),
            (false, None, None) => {}
            (false, _, _) => return Err(format!("storage fields set on a {} asset", self.kind)),
        }
        match (self.kind == AssetKind::Consumer, &self.demand_profile) {
            (true, Some(profile)) => {
                if let Some(v) = profile.iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
                    return Err(format!("demand values must be finite and nonnegative, got {v}"));
                }
            }
            (true, None) => return Err("consumer assets need a demand profile".into()),
            (false, Some(_)) => return Err(format!("demand profile set on a {} asset", self.kind)),
            (false, None) => {}
        }
        if let Some(profile) = &self.availability_profile {
            if self.kind != AssetKind::Producer {
                return Err(format!("availability profile set on a {} asset", self.kind));
            }
            if let Some(v) = profile.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
                return Err(format!("availability values must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

/// Identifiers end up in MPS names, so they are restricted to a safe alphabet.
pub fn check_id(id: &str) -> Result<(), String> {
    if id.is_empty() {
        return Err("identifier is empty".into());
    }
    if id.len() > 64 {
        return Err(format!("identifier `{id}` is longer than 64 bytes"));
    }
    if let Some(c) = id.chars().find(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '"')) {
        return Err(format!("identifier `{id}` contains forbidden character {c:?}"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcFlowParams<T> {
    pub reactance_pu: T,
    pub s_base_mva: T,
}

impl<T: Scalar> DcFlowParams<T> {
    /// Coefficient linking angle difference to flow, `S_base / X`.
    pub fn susceptance(&self) -> T {
        self.s_base_mva / self.reactance_pu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowArc<T> {
    pub from: String,
    pub to: String,
    /// Forward limit; `None` is unbounded.
    pub max_fwd_mw: Option<T>,
    /// `None`: the flow is nonnegative. `Some(b)`: the flow is a free variable
    /// bounded below by `-b` (`b` may be zero or infinite).
    pub max_bwd_mw: Option<T>,
    pub op_cost: T,
    pub dc: Option<DcFlowParams<T>>,
}

impl<T: Scalar> FlowArc<T> {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        FlowArc {
            from: from.into(),
            to: to.into(),
            max_fwd_mw: None,
            max_bwd_mw: None,
            op_cost: T::zero(),
            dc: None,
        }
    }

    pub fn with_cost(mut self, op_cost: T) -> Self {
        self.op_cost = op_cost;
        self
    }

    pub fn with_max_fwd(mut self, cap: T) -> Self {
        self.max_fwd_mw = Some(cap);
        self
    }

    pub fn bidirectional(mut self, max_bwd: T) -> Self {
        self.max_bwd_mw = Some(max_bwd);
        self
    }

    pub fn with_dc(mut self, reactance_pu: T, s_base_mva: T) -> Self {
        self.dc = Some(DcFlowParams { reactance_pu, s_base_mva });
        self
    }

    pub fn key(&self) -> (String, String) {
        (self.from.clone(), self.to.clone())
    }

    /// Lower bound of the flow variable.
    pub fn lower(&self) -> T {
        match self.max_bwd_mw {
            Some(b) => -b,
            None => T::zero(),
        }
    }

    pub fn upper(&self) -> T {
        self.max_fwd_mw.unwrap_or_else(T::infinity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortDirection {
    In,
    Out,
}

impl std::str::FromStr for PortDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "in" => Ok(PortDirection::In),
            "out" => Ok(PortDirection::Out),
            other => Err(format!("unknown port direction `{other}`")),
        }
    }
}

impl fmt::Display for PortDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortDirection::In => "in",
            PortDirection::Out => "out",
        })
    }
}

/// Marks a set of asset ports that share one balance node in node-based
/// formulations.
///
/// Every pair (out-port member, in-port member) other than a forbidden route
/// is a route that the asset graph must carry as a direct arc.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HubAnnotation {
    pub id: String,
    pub member_ports: BTreeSet<(String, PortDirection)>,
    pub forbidden_routes: BTreeSet<(String, String)>,
}

impl HubAnnotation {
    pub fn new(id: impl Into<String>) -> Self {
        HubAnnotation { id: id.into(), ..Default::default() }
    }

    pub fn port(mut self, asset: impl Into<String>, dir: PortDirection) -> Self {
        self.member_ports.insert((asset.into(), dir));
        self
    }

    pub fn forbid(mut self, source: impl Into<String>, sink: impl Into<String>) -> Self {
        self.forbidden_routes.insert((source.into(), sink.into()));
        self
    }

    pub fn members(&self) -> BTreeSet<&str> {
        self.member_ports.iter().map(|(a, _)| a.as_str()).collect()
    }

    pub fn sources(&self) -> BTreeSet<&str> {
        self.ports(PortDirection::Out)
    }

    pub fn sinks(&self) -> BTreeSet<&str> {
        self.ports(PortDirection::In)
    }

    fn ports(&self, dir: PortDirection) -> BTreeSet<&str> {
        self.member_ports
            .iter()
            .filter(|(_, d)| *d == dir)
            .map(|(a, _)| a.as_str())
            .collect()
    }

    /// Source/sink pairs the hub carries.
    pub fn routes(&self) -> BTreeSet<(String, String)> {
        let mut out = BTreeSet::new();
        for s in self.sources() {
            for k in self.sinks() {
                if s != k && !self.forbidden_routes.contains(&(s.to_string(), k.to_string())) {
                    out.insert((s.to_string(), k.to_string()));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub entity: String,
    pub message: String,
}

impl Diagnostic {
    fn error(entity: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, entity: entity.into(), message: message.into() }
    }

    fn warning(entity: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, entity: entity.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.entity, self.message)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("identifier `{0}` is already in use")]
    DuplicateId(String),
    #[error("unknown asset `{0}`")]
    UnknownAsset(String),
    #[error("an arc from `{0}` to `{1}` already exists")]
    DuplicateArc(String, String),
    #[error("arc from `{0}` to itself")]
    SelfLoop(String),
    #[error("invariant violated on `{id}`: {reason}")]
    InvariantViolation { id: String, reason: String },
}

/// Directed graph of energy assets over an hourly horizon `1..=horizon`.
///
/// Assets, arcs and hubs are kept in sorted maps so iteration order, and with
/// it every generated model, is independent of insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySystem<T> {
    assets: BTreeMap<String, Asset<T>>,
    arcs: BTreeMap<(String, String), FlowArc<T>>,
    hubs: BTreeMap<String, HubAnnotation>,
    horizon: usize,
}

impl<T: Scalar> EnergySystem<T> {
    pub fn new(horizon: usize) -> Self {
        EnergySystem { assets: BTreeMap::new(), arcs: BTreeMap::new(), hubs: BTreeMap::new(), horizon }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn assets(&self) -> impl Iterator<Item = &Asset<T>> {
        self.assets.values()
    }

    pub fn asset(&self, id: &str) -> Option<&Asset<T>> {
        self.assets.get(id)
    }

    pub fn asset_mut(&mut self, id: &str) -> Option<&mut Asset<T>> {
        self.assets.get_mut(id)
    }

    pub fn arcs(&self) -> impl Iterator<Item = &FlowArc<T>> {
        self.arcs.values()
    }

    pub fn arc(&self, from: &str, to: &str) -> Option<&FlowArc<T>> {
        self.arcs.get(&(from.to_string(), to.to_string()))
    }

    pub fn arc_mut(&mut self, from: &str, to: &str) -> Option<&mut FlowArc<T>> {
        self.arcs.get_mut(&(from.to_string(), to.to_string()))
    }

    pub fn hubs(&self) -> impl Iterator<Item = &HubAnnotation> {
        self.hubs.values()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn add_asset(&mut self, asset: Asset<T>) -> Result<(), ModelError> {
        if self.assets.contains_key(&asset.id) || self.hubs.contains_key(&asset.id) {
            return Err(ModelError::DuplicateId(asset.id));
        }
        asset
            .check()
            .map_err(|reason| ModelError::InvariantViolation { id: asset.id.clone(), reason })?;
        self.assets.insert(asset.id.clone(), asset);
        Ok(())
    }

    /// Removes an asset together with its arcs and hub ports.
    pub fn remove_asset(&mut self, id: &str) -> Result<Asset<T>, ModelError> {
        let asset = self.assets.remove(id).ok_or_else(|| ModelError::UnknownAsset(id.to_string()))?;
        self.arcs.retain(|(f, t), _| f != id && t != id);
        for hub in self.hubs.values_mut() {
            hub.member_ports.retain(|(a, _)| a != id);
            hub.forbidden_routes.retain(|(s, k)| s != id && k != id);
        }
        Ok(asset)
    }

    pub fn add_flow(&mut self, arc: FlowArc<T>) -> Result<(), ModelError> {
        for end in [&arc.from, &arc.to] {
            if !self.assets.contains_key(end) {
                return Err(ModelError::UnknownAsset(end.clone()));
            }
        }
        if arc.from == arc.to {
            return Err(ModelError::SelfLoop(arc.from));
        }
        let key = arc.key();
        if self.arcs.contains_key(&key) {
            return Err(ModelError::DuplicateArc(key.0, key.1));
        }
        self.arcs.insert(key, arc);
        Ok(())
    }

    pub fn remove_flow(&mut self, from: &str, to: &str) -> Option<FlowArc<T>> {
        self.arcs.remove(&(from.to_string(), to.to_string()))
    }

    pub fn add_hub(&mut self, hub: HubAnnotation) -> Result<(), ModelError> {
        check_id(&hub.id).map_err(|reason| ModelError::InvariantViolation { id: hub.id.clone(), reason })?;
        if self.hubs.contains_key(&hub.id) || self.assets.contains_key(&hub.id) {
            return Err(ModelError::DuplicateId(hub.id));
        }
        self.hubs.insert(hub.id.clone(), hub);
        Ok(())
    }

    pub fn clear_hubs(&mut self) {
        self.hubs.clear();
    }

    /// Replaces the horizon without touching profiles. See
    /// [`crate::casegen::scale_horizon`] for the version that tiles profiles.
    pub fn set_horizon(&mut self, horizon: usize) {
        self.horizon = horizon;
    }

    pub fn incoming(&self, id: &str) -> impl Iterator<Item = &FlowArc<T>> + '_ {
        let id = id.to_string();
        self.arcs.values().filter(move |a| a.to == id)
    }

    pub fn outgoing(&self, id: &str) -> impl Iterator<Item = &FlowArc<T>> + '_ {
        let id = id.to_string();
        self.arcs.values().filter(move |a| a.from == id)
    }

    /// Checks every type and graph invariant. An empty result means the system
    /// can be built under every approach; warnings alone only rule out
    /// node-based lowering.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.horizon == 0 {
            out.push(Diagnostic::error("system", "horizon must be at least one timestep"));
        }
        let mut n_in: BTreeMap<&str, usize> = BTreeMap::new();
        let mut n_out: BTreeMap<&str, usize> = BTreeMap::new();
        for arc in self.arcs.values() {
            *n_out.entry(arc.from.as_str()).or_default() += 1;
            *n_in.entry(arc.to.as_str()).or_default() += 1;
        }

        for a in self.assets.values() {
            if let Err(reason) = a.check() {
                out.push(Diagnostic::error(&a.id, reason));
            }
            if let Some(p) = &a.demand_profile {
                if p.len() != self.horizon {
                    out.push(Diagnostic::error(
                        &a.id,
                        format!("demand profile has {} values for a horizon of {}", p.len(), self.horizon),
                    ));
                }
            }
            if let Some(p) = &a.availability_profile {
                if p.len() != self.horizon {
                    out.push(Diagnostic::error(
                        &a.id,
                        format!("availability profile has {} values for a horizon of {}", p.len(), self.horizon),
                    ));
                }
            }
            match a.kind {
                AssetKind::Consumer if !n_in.contains_key(a.id.as_str()) => {
                    out.push(Diagnostic::error(&a.id, "consumer has no incoming flow"));
                }
                AssetKind::Producer if !n_out.contains_key(a.id.as_str()) => {
                    out.push(Diagnostic::error(&a.id, "producer has no outgoing flow"));
                }
                AssetKind::Transport => {
                    if let Err(reason) = self.transport_neighbours(&a.id) {
                        out.push(Diagnostic::error(&a.id, reason));
                    }
                }
                _ => {}
            }
        }

        for arc in self.arcs.values() {
            let name = format!("{}->{}", arc.from, arc.to);
            let kinds: Vec<Option<AssetKind>> =
                [&arc.from, &arc.to].iter().map(|id| self.assets.get(*id).map(|a| a.kind)).collect();
            for (end, kind) in [&arc.from, &arc.to].iter().zip(&kinds) {
                if kind.is_none() {
                    out.push(Diagnostic::error(&name, format!("endpoint `{end}` does not exist")));
                }
            }
            if arc.from == arc.to {
                out.push(Diagnostic::error(&name, "self-loop"));
            }
            if let Some(f) = arc.max_fwd_mw {
                if f.is_nan() || f < T::zero() {
                    out.push(Diagnostic::error(&name, "max_fwd_mw must be nonnegative"));
                }
            }
            if let Some(b) = arc.max_bwd_mw {
                if b.is_nan() || b < T::zero() {
                    out.push(Diagnostic::error(&name, "max_bwd_mw must be nonnegative"));
                }
                let both_balance = kinds.iter().all(|k| k.is_some_and(AssetKind::is_balance_point));
                if !both_balance && arc.dc.is_none() {
                    out.push(Diagnostic::error(
                        &name,
                        "bidirectional flow needs balance-point endpoints or DC parameters",
                    ));
                }
            }
            if !arc.op_cost.is_finite() {
                out.push(Diagnostic::error(&name, "op_cost must be finite"));
            }
            if let Some(dc) = &arc.dc {
                if !(dc.reactance_pu > T::zero() && dc.reactance_pu.is_finite()) {
                    out.push(Diagnostic::error(&name, "reactance_pu must be positive"));
                }
                if !(dc.s_base_mva > T::zero() && dc.s_base_mva.is_finite()) {
                    out.push(Diagnostic::error(&name, "s_base_mva must be positive"));
                }
            }
        }

        let mut routed: BTreeMap<(String, String), &str> = BTreeMap::new();
        for hub in self.hubs.values() {
            self.validate_hub(hub, &mut routed, &mut out);
        }

        for arc in self.arcs.values() {
            let key = arc.key();
            if routed.contains_key(&key) {
                continue;
            }
            let balance = |id: &str| self.assets.get(id).is_some_and(|a| a.kind.is_balance_point());
            if !balance(&arc.from) && !balance(&arc.to) {
                out.push(Diagnostic::warning(
                    format!("{}->{}", arc.from, arc.to),
                    "arc joins two non-balance assets and no hub routes it; node-based forms cannot be built",
                ));
            }
        }
        out
    }

    fn validate_hub<'a>(
        &self,
        hub: &'a HubAnnotation,
        routed: &mut BTreeMap<(String, String), &'a str>,
        out: &mut Vec<Diagnostic>,
    ) {
        let id = hub.id.as_str();
        if let Err(reason) = check_id(id) {
            out.push(Diagnostic::error(id, reason));
        }
        if self.assets.contains_key(id) {
            out.push(Diagnostic::error(id, "hub id collides with an asset id"));
        }
        let mut members_ok = true;
        for (asset, _) in &hub.member_ports {
            match self.assets.get(asset) {
                None => {
                    out.push(Diagnostic::error(id, format!("member `{asset}` does not exist")));
                    members_ok = false;
                }
                Some(a) if matches!(a.kind, AssetKind::Hub | AssetKind::Transport) => {
                    out.push(Diagnostic::error(id, format!("member `{asset}` is a {}", a.kind)));
                    members_ok = false;
                }
                _ => {}
            }
        }
        let members = hub.members();
        for (s, k) in &hub.forbidden_routes {
            for end in [s, k] {
                if !members.contains(end.as_str()) {
                    out.push(Diagnostic::error(id, format!("forbidden route references non-member `{end}`")));
                    members_ok = false;
                }
            }
            if self.arcs.contains_key(&(s.clone(), k.clone())) {
                out.push(Diagnostic::error(id, format!("forbidden route {s}->{k} exists as an arc")));
            }
        }
        if !members_ok {
            return;
        }

        let routes = hub.routes();
        let active_sources: BTreeSet<&str> = routes.iter().map(|(s, _)| s.as_str()).collect();
        let active_sinks: BTreeSet<&str> = routes.iter().map(|(_, k)| k.as_str()).collect();
        for s in &active_sources {
            for k in &active_sinks {
                if s != k && !routes.contains(&(s.to_string(), k.to_string())) {
                    out.push(Diagnostic::error(
                        id,
                        format!("route {s}->{k} is forbidden while both ends keep other routes; a shared node cannot represent it"),
                    ));
                }
            }
        }

        let mut source_cost: BTreeMap<&str, T> = BTreeMap::new();
        for (s, k) in &routes {
            let Some(arc) = self.arcs.get(&(s.clone(), k.clone())) else {
                out.push(Diagnostic::error(id, format!("route {s}->{k} has no arc in the asset graph")));
                continue;
            };
            if let Some(prev) = routed.insert((s.clone(), k.clone()), id) {
                out.push(Diagnostic::error(id, format!("arc {s}->{k} is already routed by hub `{prev}`")));
            }
            if arc.max_fwd_mw.is_some() || arc.max_bwd_mw.is_some() || arc.dc.is_some() {
                out.push(Diagnostic::error(
                    id,
                    format!("routed arc {s}->{k} must be unidirectional, unbounded and without DC parameters"),
                ));
            }
            match source_cost.get(s.as_str()) {
                Some(c) if *c != arc.op_cost => out.push(Diagnostic::error(
                    id,
                    format!("routes leaving `{s}` carry different operating costs"),
                )),
                _ => {
                    source_cost.insert(s.as_str(), arc.op_cost);
                }
            }
            if self.assets[s].kind == AssetKind::Consumer && arc.op_cost != T::zero() {
                out.push(Diagnostic::error(
                    id,
                    format!("route {s}->{k} leaves a consumer and must have zero operating cost"),
                ));
            }
        }
    }

    /// The two balance vertices a transport asset connects, as `(x, y)` with
    /// arcs x->T, T->y, y->T and T->x all present.
    pub fn transport_neighbours(&self, id: &str) -> Result<(String, String), String> {
        let ins: BTreeSet<&str> = self.incoming(id).map(|a| a.from.as_str()).collect();
        let outs: BTreeSet<&str> = self.outgoing(id).map(|a| a.to.as_str()).collect();
        if ins.len() != 2 || ins != outs {
            return Err("transport must exchange flows in both directions with exactly two vertices".into());
        }
        let mut it = ins.into_iter();
        let x = it.next().unwrap_or_default().to_string();
        let y = it.next().unwrap_or_default().to_string();
        Ok((x, y))
    }
}
