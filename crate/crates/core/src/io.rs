//! CSV bundle: `assets.csv`, `flows.csv`, `hubs.csv`, `forbidden.csv` and
//! `profiles.csv` in one directory.
//!
//! Empty cells mean "absent". In `flows.csv` an empty `max_fwd_mw` is
//! unbounded and an empty `max_bwd_mw` makes the flow unidirectional; `inf`
//! is accepted for infinite bounds. `profiles.csv` holds demand for consumers
//! and availability for producers; the horizon is the largest timestep.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Asset, AssetKind, DcFlowParams, EnergySystem, FlowArc, HubAnnotation, ModelError, PortDirection};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("i/o failure on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{file}: {source}")]
    Csv { file: String, source: csv::Error },
    #[error("{file}: {message}")]
    Invalid { file: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Serialize, Deserialize)]
struct AssetRow {
    id: String,
    kind: String,
    capacity_mw: Option<f64>,
    min_capacity_mw: Option<f64>,
    initial_units: Option<u32>,
    investable: Option<bool>,
    invest_limit: Option<u32>,
    invest_cost: Option<f64>,
    storage_capacity_mwh: Option<f64>,
    initial_storage_mwh: Option<f64>,
    eta_in: Option<f64>,
    eta_out: Option<f64>,
    uc: Option<bool>,
    dc: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FlowRow {
    from: String,
    to: String,
    max_fwd_mw: Option<f64>,
    max_bwd_mw: Option<f64>,
    op_cost: Option<f64>,
    reactance_pu: Option<f64>,
    s_base_mva: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct HubRow {
    hub_id: String,
    asset_id: String,
    direction: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ForbiddenRow {
    hub_id: String,
    source: String,
    sink: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRow {
    asset_id: String,
    timestep: usize,
    value: f64,
}

fn read_rows<R: for<'de> Deserialize<'de>>(dir: &Path, file: &str, required: bool) -> Result<Vec<R>, CsvError> {
    let path = dir.join(file);
    if !path.exists() && !required {
        return Ok(Vec::new());
    }
    let csv_err = |source| CsvError::Csv { file: file.to_string(), source };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&path).map_err(csv_err)?;
    rdr.deserialize().collect::<Result<Vec<R>, _>>().map_err(csv_err)
}

fn write_rows<R: Serialize>(dir: &Path, file: &str, rows: &[R], header: &[&str]) -> Result<(), CsvError> {
    let csv_err = |source| CsvError::Csv { file: file.to_string(), source };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(dir.join(file)).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CsvError::Io { path: file.to_string(), source })
}

/// Loads a bundle. The returned system is not validated.
pub fn read_bundle<T: Scalar>(dir: &Path) -> Result<EnergySystem<T>, CsvError> {
    let assets: Vec<AssetRow> = read_rows(dir, "assets.csv", true)?;
    let flows: Vec<FlowRow> = read_rows(dir, "flows.csv", true)?;
    let hubs: Vec<HubRow> = read_rows(dir, "hubs.csv", false)?;
    let forbidden: Vec<ForbiddenRow> = read_rows(dir, "forbidden.csv", false)?;
    let profiles: Vec<ProfileRow> = read_rows(dir, "profiles.csv", false)?;

    let horizon = profiles.iter().map(|p| p.timestep).max().unwrap_or(1);
    let mut series: BTreeMap<&str, Vec<T>> = BTreeMap::new();
    for p in &profiles {
        if p.timestep == 0 {
            return Err(CsvError::Invalid { file: "profiles.csv".into(), message: "timesteps start at 1".into() });
        }
        let s = series.entry(p.asset_id.as_str()).or_insert_with(|| vec![T::nan(); horizon]);
        s[p.timestep - 1] = T::of(p.value);
    }
    for (id, s) in &series {
        if s.iter().any(|v| v.is_nan()) {
            return Err(CsvError::Invalid {
                file: "profiles.csv".into(),
                message: format!("profile of `{id}` does not cover timesteps 1..={horizon}"),
            });
        }
    }

    let mut sys = EnergySystem::new(horizon);
    for r in assets {
        let kind: AssetKind = r.kind.parse().map_err(|m| CsvError::Invalid { file: "assets.csv".into(), message: m })?;
        let profile = series.remove(r.id.as_str());
        let is_storage = kind == AssetKind::Storage;
        let asset = Asset {
            kind,
            capacity_mw: T::of(r.capacity_mw.unwrap_or(0.0)),
            min_capacity_mw: T::of(r.min_capacity_mw.unwrap_or(0.0)),
            initial_units: r.initial_units.unwrap_or(if kind == AssetKind::Consumer { 0 } else { 1 }),
            investable: r.investable.unwrap_or(false),
            invest_limit: r.invest_limit.unwrap_or(0),
            invest_cost: T::of(r.invest_cost.unwrap_or(0.0)),
            storage_capacity_mwh: r.storage_capacity_mwh.map(T::of).or(is_storage.then(T::zero)),
            initial_storage_mwh: r.initial_storage_mwh.map(T::of).or(is_storage.then(T::zero)),
            eta_in: T::of(r.eta_in.unwrap_or(1.0)),
            eta_out: T::of(r.eta_out.unwrap_or(1.0)),
            demand_profile: match kind {
                AssetKind::Consumer => Some(profile.clone().unwrap_or_else(|| vec![T::zero(); horizon])),
                _ => None,
            },
            availability_profile: if kind == AssetKind::Producer { profile } else { None },
            uc_enabled: r.uc.unwrap_or(false),
            voltage_angle_enabled: r.dc.unwrap_or(false),
            id: r.id,
        };
        sys.add_asset(asset)?;
    }
    if let Some(id) = series.keys().next() {
        return Err(CsvError::Invalid {
            file: "profiles.csv".into(),
            message: format!("profile for `{id}`, which is neither a listed consumer nor producer"),
        });
    }
    for r in flows {
        let dc = match (r.reactance_pu, r.s_base_mva) {
            (Some(x), Some(s)) => Some(DcFlowParams { reactance_pu: T::of(x), s_base_mva: T::of(s) }),
            (None, None) => None,
            _ => {
                return Err(CsvError::Invalid {
                    file: "flows.csv".into(),
                    message: format!("{}->{} needs both reactance_pu and s_base_mva", r.from, r.to),
                })
            }
        };
        sys.add_flow(FlowArc {
            from: r.from,
            to: r.to,
            max_fwd_mw: r.max_fwd_mw.map(T::of),
            max_bwd_mw: r.max_bwd_mw.map(T::of),
            op_cost: T::of(r.op_cost.unwrap_or(0.0)),
            dc,
        })?;
    }
    let mut annotations: BTreeMap<String, HubAnnotation> = BTreeMap::new();
    for r in hubs {
        let dir: PortDirection =
            r.direction.parse().map_err(|m| CsvError::Invalid { file: "hubs.csv".into(), message: m })?;
        let h = annotations.entry(r.hub_id.clone()).or_insert_with(|| HubAnnotation::new(r.hub_id.clone()));
        h.member_ports.insert((r.asset_id, dir));
    }
    for r in forbidden {
        let h = annotations.get_mut(&r.hub_id).ok_or_else(|| CsvError::Invalid {
            file: "forbidden.csv".into(),
            message: format!("hub `{}` has no ports in hubs.csv", r.hub_id),
        })?;
        h.forbidden_routes.insert((r.source, r.sink));
    }
    for h in annotations.into_values() {
        sys.add_hub(h)?;
    }
    Ok(sys)
}

/// Writes `system` as a bundle into `dir`, creating it when needed. Output is
/// sorted by id and therefore byte-identical for equal systems.
pub fn write_bundle<T: Scalar>(system: &EnergySystem<T>, dir: &Path) -> Result<(), CsvError> {
    fs::create_dir_all(dir).map_err(|source| CsvError::Io { path: dir.display().to_string(), source })?;
    let f = |v: T| Some(v.as_f64());
    let assets: Vec<AssetRow> = system
        .assets()
        .map(|a| AssetRow {
            id: a.id.clone(),
            kind: a.kind.as_str().to_string(),
            capacity_mw: f(a.capacity_mw),
            min_capacity_mw: f(a.min_capacity_mw),
            initial_units: Some(a.initial_units),
            investable: Some(a.investable),
            invest_limit: Some(a.invest_limit),
            invest_cost: f(a.invest_cost),
            storage_capacity_mwh: a.storage_capacity_mwh.map(Scalar::as_f64),
            initial_storage_mwh: a.initial_storage_mwh.map(Scalar::as_f64),
            eta_in: f(a.eta_in),
            eta_out: f(a.eta_out),
            uc: Some(a.uc_enabled),
            dc: Some(a.voltage_angle_enabled),
        })
        .collect();
    write_rows(
        dir,
        "assets.csv",
        &assets,
        &[
            "id", "kind", "capacity_mw", "min_capacity_mw", "initial_units", "investable", "invest_limit", "invest_cost",
            "storage_capacity_mwh", "initial_storage_mwh", "eta_in", "eta_out", "uc", "dc",
        ],
    )?;
    let flows: Vec<FlowRow> = system
        .arcs()
        .map(|a| FlowRow {
            from: a.from.clone(),
            to: a.to.clone(),
            max_fwd_mw: a.max_fwd_mw.map(Scalar::as_f64),
            max_bwd_mw: a.max_bwd_mw.map(Scalar::as_f64),
            op_cost: f(a.op_cost),
            reactance_pu: a.dc.map(|d| d.reactance_pu.as_f64()),
            s_base_mva: a.dc.map(|d| d.s_base_mva.as_f64()),
        })
        .collect();
    write_rows(
        dir,
        "flows.csv",
        &flows,
        &["from", "to", "max_fwd_mw", "max_bwd_mw", "op_cost", "reactance_pu", "s_base_mva"],
    )?;
    let mut hubs = Vec::new();
    let mut forbidden = Vec::new();
    for h in system.hubs() {
        for (asset, dir) in &h.member_ports {
            hubs.push(HubRow { hub_id: h.id.clone(), asset_id: asset.clone(), direction: dir.to_string() });
        }
        for (s, k) in &h.forbidden_routes {
            forbidden.push(ForbiddenRow { hub_id: h.id.clone(), source: s.clone(), sink: k.clone() });
        }
    }
    write_rows(dir, "hubs.csv", &hubs, &["hub_id", "asset_id", "direction"])?;
    write_rows(dir, "forbidden.csv", &forbidden, &["hub_id", "source", "sink"])?;
    let mut profiles = Vec::new();
    for a in system.assets() {
        let series = a.demand_profile.as_ref().or(a.availability_profile.as_ref());
        for (k, v) in series.into_iter().flatten().enumerate() {
            profiles.push(ProfileRow { asset_id: a.id.clone(), timestep: k + 1, value: v.as_f64() });
        }
    }
    write_rows(dir, "profiles.csv", &profiles, &["asset_id", "timestep", "value"])
}
