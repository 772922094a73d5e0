//! Deterministic test systems: the PV + battery hybrid and the tri-area
//! multi-sector case.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::model::{Asset, EnergySystem, FlowArc, HubAnnotation, PortDirection};
use crate::scalar::Scalar;

/// Instance numbers of the tri-area case and their horizons in hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceId(u8);

impl InstanceId {
    pub const HORIZONS: [usize; 6] = [672, 4032, 8760, 17520, 26280, 35040];

    pub fn new(n: u8) -> Option<Self> {
        (1..=6).contains(&n).then_some(InstanceId(n))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn horizon(self) -> usize {
        Self::HORIZONS[self.0 as usize - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub seed: u64,
    pub instance: InstanceId,
    /// Replaces the instance horizon, for desk-scale runs.
    pub horizon: Option<usize>,
}

impl CaseSpec {
    pub fn new(seed: u64, instance: InstanceId) -> Self {
        CaseSpec { seed, instance, horizon: None }
    }

    pub fn with_horizon(mut self, t: usize) -> Self {
        self.horizon = Some(t);
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| self.instance.horizon())
    }
}

/// Solar PV (`pv`) and a battery (`bt`) feeding a demand (`ed`), where the
/// battery may only charge from PV. 24 hourly steps starting at midnight.
///
/// The hub `cp` groups all three; the grid side may not feed the battery.
pub fn hybrid_fixture<T: Scalar>() -> EnergySystem<T> {
    let hours = 24;
    let avail: Vec<T> = (0..hours).map(|h| T::of(solar_shape(h))).collect();
    let demand: Vec<T> = (0..hours)
        .map(|h| T::of(20.0 + 5.0 * (2.0 * PI * (h as f64 - 14.0) / 24.0).cos()))
        .collect();

    let mut sys = EnergySystem::new(hours);
    let add = |sys: &mut EnergySystem<T>, a| sys.add_asset(a).expect("fixture asset");
    add(&mut sys, Asset::producer("pv", T::of(100.0)).with_availability(avail));
    add(&mut sys, Asset::storage("bt", T::of(50.0), T::of(400.0), T::of(200.0)));
    add(&mut sys, Asset::consumer("ed", demand));
    for (f, t) in [("pv", "bt"), ("pv", "ed"), ("bt", "ed")] {
        sys.add_flow(FlowArc::new(f, t)).expect("fixture arc");
    }
    let hub = HubAnnotation::new("cp")
        .port("pv", PortDirection::Out)
        .port("bt", PortDirection::Out)
        .port("bt", PortDirection::In)
        .port("ed", PortDirection::In)
        .port("ed", PortDirection::Out)
        .forbid("ed", "bt");
    sys.add_hub(hub).expect("fixture hub");
    sys
}

/// Clear-sky shape for hour-of-day `h`, zero at night.
fn solar_shape(h: usize) -> f64 {
    let x = ((h % 24) as f64 - 6.0) / 12.0;
    if (0.0..=1.0).contains(&x) {
        (PI * x).sin().max(0.0)
    } else {
        0.0
    }
}

/// Tiles or truncates every profile to `t` steps and sets the horizon.
pub fn scale_horizon<T: Scalar>(system: &EnergySystem<T>, t: usize) -> EnergySystem<T> {
    let mut out = system.clone();
    let ids: Vec<String> = out.assets().map(|a| a.id.clone()).collect();
    let tile = |p: &Vec<T>| -> Vec<T> {
        if p.is_empty() {
            return p.clone();
        }
        (0..t).map(|k| p[k % p.len()]).collect()
    };
    for id in ids {
        let a = out.asset_mut(&id).expect("listed asset");
        if let Some(p) = &a.demand_profile {
            a.demand_profile = Some(tile(p));
        }
        if let Some(p) = &a.availability_profile {
            a.availability_profile = Some(tile(p));
        }
    }
    out.set_horizon(t);
    out
}

/// Numerical Recipes LCG; the top 53 bits map to [0, 1).
struct Lcg(u64);

impl Lcg {
    fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1))
    }

    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn availability<T: Scalar>(rng: &mut Lcg, t: usize, shape: impl Fn(usize) -> f64) -> Vec<T> {
    (0..t).map(|k| T::of((shape(k) * (0.6 + 0.4 * rng.next())).clamp(0.0, 1.0))).collect()
}

fn demand<T: Scalar>(rng: &mut Lcg, t: usize, base: f64, swing: f64, noise: f64) -> Vec<T> {
    (0..t)
        .map(|k| {
            let daily = (2.0 * PI * (k as f64 - 18.0) / 24.0).cos();
            let yearly = (2.0 * PI * k as f64 / 8760.0).cos();
            T::of((base + swing * (0.7 * daily + 0.3 * yearly) + noise * (rng.next() - 0.5)).max(0.0))
        })
        .collect()
}

/// Three areas (Asgard, Midgard, Valhalla) with electricity, heat, gas and
/// hydrogen, written as a direct asset graph with hub annotations for the
/// node-based forms.
///
/// Area demands are consumers linked by three bidirectional lines; the gas
/// grid is three gas consumers joined by two pipelines and fed by one import
/// producer. Twelve assets are investable.
pub fn tri_area_case<T: Scalar>(spec: &CaseSpec) -> EnergySystem<T> {
    let t = spec.horizon();
    let mut rng = Lcg::new(spec.seed);
    let mut sys = EnergySystem::new(t);
    let v = T::of;
    let mut add = |a: Asset<T>| sys.add_asset(a).expect("case asset");

    // Asgard
    add(Asset::producer("solar", v(120.0)).with_availability(availability(&mut rng, t, solar_shape)).with_investment(4, v(4.0e4)));
    add(Asset::conversion("ccgt", v(150.0), v(0.55)).with_investment(2, v(6.0e4)));
    add(Asset::storage("battery", v(40.0), v(160.0), v(80.0)).with_efficiencies(v(0.95), v(0.95)).with_investment(3, v(2.0e4)));
    add(Asset::consumer("e_asgard", demand(&mut rng, t, 160.0, 40.0, 10.0)));
    add(Asset::consumer("g_asgard", demand(&mut rng, t, 20.0, 5.0, 2.0)));
    // Midgard
    add(Asset::producer("wind", v(150.0)).with_availability(availability(&mut rng, t, |_| 1.0)).with_investment(4, v(5.0e4)));
    add(Asset::storage("hydro", v(80.0), v(2000.0), v(1000.0)).with_efficiencies(v(1.0), v(0.9)).with_investment(1, v(9.0e4)));
    add(Asset::producer("smr", v(100.0)).with_investment(1, v(2.0e5)));
    add(Asset::conversion("chp", v(100.0), v(0.9)).with_investment(1, v(1.0e4)));
    add(Asset::conversion("heatpump", v(20.0), v(1.0)).with_investment(2, v(1.5e4)));
    add(Asset::consumer("e_midgard", demand(&mut rng, t, 140.0, 30.0, 10.0)));
    add(Asset::consumer("h_midgard", demand(&mut rng, t, 30.0, 10.0, 3.0)));
    add(Asset::consumer("g_midgard", demand(&mut rng, t, 10.0, 2.0, 1.0)));
    add(Asset::producer("gas", v(600.0)));
    // Valhalla
    add(Asset::conversion("electrolyzer", v(40.0), v(0.7)).with_investment(3, v(3.0e4)));
    add(Asset::storage("h2store", v(40.0), v(800.0), v(200.0)).with_investment(3, v(1.0e4)));
    add(Asset::conversion("fuelcell", v(40.0), v(0.5)).with_investment(2, v(3.5e4)));
    add(Asset::producer("solar_v", v(60.0)).with_availability(availability(&mut rng, t, solar_shape)).with_investment(2, v(4.0e4)));
    add(Asset::consumer("e_valhalla", demand(&mut rng, t, 80.0, 20.0, 6.0)));
    add(Asset::consumer("h2_valhalla", demand(&mut rng, t, 10.0, 3.0, 1.0)));
    add(Asset::consumer("g_valhalla", demand(&mut rng, t, 8.0, 2.0, 1.0)));

    // (from, to, operating cost, forward limit)
    let arcs: &[(&str, &str, f64, Option<f64>)] = &[
        ("solar", "battery", 0.0, None),
        ("solar", "e_asgard", 0.0, None),
        ("ccgt", "e_asgard", 1.0, None),
        ("battery", "e_asgard", 0.0, None),
        ("g_asgard", "ccgt", 0.0, Some(300.0)),
        ("wind", "e_midgard", 0.0, None),
        ("hydro", "e_midgard", 0.0, None),
        ("chp", "e_midgard", 2.0, None),
        ("smr", "chp", 8.0, None),
        ("chp", "h_midgard", 2.0, Some(60.0)),
        ("e_midgard", "heatpump", 0.0, Some(20.0)),
        ("heatpump", "h_midgard", 0.0, Some(60.0)),
        ("gas", "g_midgard", 25.0, Some(600.0)),
        ("gas", "g_asgard", 28.0, Some(200.0)),
        ("solar_v", "electrolyzer", 0.0, None),
        ("fuelcell", "electrolyzer", 0.0, None),
        ("solar_v", "e_valhalla", 0.0, Some(60.0)),
        ("fuelcell", "e_valhalla", 0.0, Some(40.0)),
        ("e_valhalla", "electrolyzer", 0.0, Some(40.0)),
        ("electrolyzer", "h2store", 0.0, None),
        ("electrolyzer", "fuelcell", 0.0, None),
        ("h2store", "fuelcell", 0.0, None),
        ("electrolyzer", "h2_valhalla", 0.0, Some(40.0)),
        ("h2store", "h2_valhalla", 0.0, Some(40.0)),
    ];
    for &(f, to, cost, cap) in arcs {
        let mut arc = FlowArc::new(f, to).with_cost(v(cost));
        arc.max_fwd_mw = cap.map(v);
        sys.add_flow(arc).expect("case arc");
    }
    let lines = [
        ("e_asgard", "e_midgard", 120.0),
        ("e_midgard", "e_valhalla", 100.0),
        ("e_asgard", "e_valhalla", 80.0),
        ("g_midgard", "g_asgard", 500.0),
        ("g_midgard", "g_valhalla", 200.0),
    ];
    for (a, b, cap) in lines {
        sys.add_flow(FlowArc::new(a, b).with_max_fwd(v(cap)).bidirectional(v(cap))).expect("case line");
    }

    let hub = |id: &str, outs: &[&str], ins: &[&str]| {
        let mut h = HubAnnotation::new(id);
        for o in outs {
            h = h.port(*o, PortDirection::Out);
        }
        for i in ins {
            h = h.port(*i, PortDirection::In);
        }
        h
    };
    for h in [
        hub("n_e_asgard", &["solar", "ccgt", "battery"], &["e_asgard"]),
        hub("n_e_midgard", &["wind", "hydro", "chp"], &["e_midgard"]),
        hub("n_e_valhalla", &["solar_v", "fuelcell"], &["electrolyzer"]),
        hub("n_solar_battery", &["solar"], &["battery"]),
        hub("n_h2_valhalla", &["electrolyzer", "h2store"], &["h2store", "fuelcell"]),
        hub("n_smr", &["smr"], &["chp"]),
    ] {
        sys.add_hub(h).expect("case hub");
    }
    sys
}
