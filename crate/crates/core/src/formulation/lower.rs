//! Rewrites an asset graph into the node-based shapes.
//!
//! Each hub annotation becomes a Hub asset. Non-consumer members attach to
//! the hub with one arc per port; consumer members, which are balance vertices
//! of their own, attach through a link. Links between two balance vertices are
//! then materialised in the shape of the requested approach.

use std::collections::BTreeMap;

use crate::model::{Asset, AssetKind, EnergySystem, FlowArc, Severity};
use crate::scalar::Scalar;

use super::{Approach, BuildError};

/// A connection between two balance vertices before it is given a shape.
#[derive(Debug, Clone)]
struct Link<T> {
    x: String,
    y: String,
    /// `None` means unbounded.
    fwd: Option<T>,
    bwd: Option<T>,
    cost: T,
    dc: Option<crate::model::DcFlowParams<T>>,
}

fn sum_caps<T: Scalar>(caps: impl Iterator<Item = T>) -> Option<T> {
    let total = caps.fold(T::zero(), |s, c| s + c);
    total.is_finite().then_some(total)
}

/// Upper bound on what an asset can push into a route.
fn cap_out<T: Scalar>(a: &Asset<T>) -> T {
    match a.kind {
        AssetKind::Consumer | AssetKind::Hub | AssetKind::Transport => T::infinity(),
        _ => a.max_output(),
    }
}

/// Upper bound on what an asset can take from a route. Only storage charging
/// is limited directly.
fn cap_in<T: Scalar>(a: &Asset<T>) -> T {
    match a.kind {
        AssetKind::Storage => a.capacity_mw * a.max_units(),
        _ => T::infinity(),
    }
}

/// Name of the connection asset created for a 3BB-4F link.
pub fn transport_id(x: &str, y: &str) -> String {
    format!("cl-{x}-{y}")
}

/// Lowers `system` into the node form of `approach`. The result contains no
/// hub annotations; Hub and Transport assets take their place.
pub fn lower_to_node_form<T: Scalar>(system: &EnergySystem<T>, approach: Approach) -> Result<EnergySystem<T>, BuildError> {
    if approach == Approach::OneBB1F {
        return Err(BuildError::UnsupportedCombination("1BB-1F has no node form".into()));
    }
    let diags = system.validate();
    let errors: Vec<_> = diags.iter().filter(|d| d.severity == Severity::Error).cloned().collect();
    if !errors.is_empty() {
        return Err(BuildError::InvalidSystem(errors));
    }
    let uncovered: Vec<String> = diags.into_iter().map(|d| d.entity).collect();
    if !uncovered.is_empty() {
        return Err(BuildError::MissingHubAnnotation(uncovered));
    }

    let mut out = EnergySystem::new(system.horizon());
    for a in system.assets() {
        out.add_asset(a.clone()).map_err(BuildError::from)?;
    }
    let kind = |id: &str| system.asset(id).map(|a| a.kind);
    let is_consumer = |id: &str| kind(id) == Some(AssetKind::Consumer);

    let mut routed = BTreeMap::new();
    let mut links: Vec<Link<T>> = Vec::new();
    let mut plain: Vec<FlowArc<T>> = Vec::new();

    for hub in system.hubs() {
        out.add_asset(Asset::hub(hub.id.clone())).map_err(BuildError::from)?;
        let routes = hub.routes();
        for r in &routes {
            routed.insert(r.clone(), hub.id.clone());
        }
        let mut sources: BTreeMap<&str, T> = BTreeMap::new();
        let mut sinks: BTreeMap<&str, ()> = BTreeMap::new();
        for (s, k) in &routes {
            let cost = system.arc(s, k).map(|a| a.op_cost).unwrap_or_else(T::zero);
            sources.insert(s.as_str(), cost);
            sinks.insert(k.as_str(), ());
        }
        for (&s, &cost) in &sources {
            if !is_consumer(s) {
                plain.push(FlowArc::new(s, hub.id.clone()).with_cost(cost));
            }
        }
        for &k in sinks.keys() {
            if !is_consumer(k) {
                plain.push(FlowArc::new(hub.id.clone(), k));
            }
        }
        let members: Vec<&str> = sources.keys().chain(sinks.keys()).copied().filter(|m| is_consumer(m)).collect();
        let mut done = std::collections::BTreeSet::new();
        for c in members {
            if !done.insert(c) {
                continue;
            }
            let into_c = routes.iter().filter(|(_, k)| k == c).map(|(s, _)| cap_out(system.asset(s).unwrap()));
            let out_of_c = routes.iter().filter(|(s, _)| s == c).map(|(_, k)| cap_in(system.asset(k).unwrap()));
            links.push(Link {
                x: hub.id.clone(),
                y: c.to_string(),
                fwd: sum_caps(into_c),
                bwd: sum_caps(out_of_c),
                cost: T::zero(),
                dc: None,
            });
        }
    }

    for arc in system.arcs() {
        if routed.contains_key(&arc.key()) {
            continue;
        }
        let balance = |id: &str| kind(id).is_some_and(AssetKind::is_balance_point);
        if balance(&arc.from) && balance(&arc.to) {
            if system.arc(&arc.to, &arc.from).is_some_and(|r| !routed.contains_key(&r.key())) {
                return Err(BuildError::UnsupportedCombination(format!(
                    "opposing arcs {0}->{1} and {1}->{0} between balance vertices; describe them as one bidirectional arc",
                    arc.from, arc.to
                )));
            }
            links.push(Link {
                x: arc.from.clone(),
                y: arc.to.clone(),
                fwd: arc.max_fwd_mw.filter(|v| v.is_finite()),
                bwd: match arc.max_bwd_mw {
                    None => Some(T::zero()),
                    Some(b) => Some(b).filter(|v| v.is_finite()),
                },
                cost: arc.op_cost,
                dc: arc.dc,
            });
        } else {
            plain.push(arc.clone());
        }
    }

    for arc in plain {
        out.add_flow(arc).map_err(BuildError::from)?;
    }
    for link in links {
        materialise(&mut out, link, approach)?;
    }
    Ok(out)
}

fn materialise<T: Scalar>(out: &mut EnergySystem<T>, link: Link<T>, approach: Approach) -> Result<(), BuildError> {
    let bwd_closed = link.bwd == Some(T::zero());
    let bwd_cost = if bwd_closed { T::zero() } else { -link.cost };
    let with_cap = |mut arc: FlowArc<T>, cap: Option<T>| {
        arc.max_fwd_mw = cap;
        arc
    };
    match approach {
        Approach::TwoBB2F => {
            let mut fwd = with_cap(FlowArc::new(&link.x, &link.y).with_cost(link.cost), link.fwd);
            fwd.dc = link.dc;
            out.add_flow(fwd)?;
            out.add_flow(with_cap(FlowArc::new(&link.y, &link.x).with_cost(bwd_cost), link.bwd))?;
        }
        Approach::TwoBB1F => {
            let mut arc = with_cap(FlowArc::new(&link.x, &link.y).with_cost(link.cost), link.fwd);
            arc.max_bwd_mw = Some(link.bwd.unwrap_or_else(T::infinity));
            arc.dc = link.dc;
            out.add_flow(arc)?;
        }
        Approach::ThreeBB4F => {
            let id = transport_id(&link.x, &link.y);
            out.add_asset(Asset::transport(id.clone()))?;
            out.add_flow(FlowArc::new(&link.x, &id).with_cost(link.cost))?;
            out.add_flow(with_cap(FlowArc::new(&id, &link.y), link.fwd))?;
            out.add_flow(FlowArc::new(&link.y, &id).with_cost(bwd_cost))?;
            out.add_flow(with_cap(FlowArc::new(&id, &link.x), link.bwd))?;
        }
        Approach::OneBB1F => unreachable!("checked by the caller"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casegen::hybrid_fixture;

    fn arc_keys(sys: &EnergySystem<f64>) -> Vec<(String, String)> {
        sys.arcs().map(|a| a.key()).collect()
    }

    fn keys(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        let mut v: Vec<_> = pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        v.sort();
        v
    }

    #[test]
    fn hybrid_two_flow_form() {
        let low = lower_to_node_form(&hybrid_fixture::<f64>(), Approach::TwoBB2F).unwrap();
        assert_eq!(low.asset("cp").unwrap().kind, AssetKind::Hub);
        assert_eq!(
            arc_keys(&low),
            keys(&[("bt", "cp"), ("pv", "cp"), ("ed", "cp"), ("cp", "bt"), ("cp", "ed")])
        );
        // Grid-side flow toward the battery is closed.
        assert_eq!(low.arc("ed", "cp").unwrap().max_fwd_mw, Some(0.0));
        assert_eq!(low.hubs().count(), 0);
    }

    #[test]
    fn hybrid_one_flow_form() {
        let low = lower_to_node_form(&hybrid_fixture::<f64>(), Approach::TwoBB1F).unwrap();
        assert_eq!(arc_keys(&low), keys(&[("bt", "cp"), ("pv", "cp"), ("cp", "bt"), ("cp", "ed")]));
        let link = low.arc("cp", "ed").unwrap();
        assert_eq!(link.max_bwd_mw, Some(0.0));
        assert!(link.max_fwd_mw.is_some());
    }

    #[test]
    fn hybrid_four_flow_form() {
        let low = lower_to_node_form(&hybrid_fixture::<f64>(), Approach::ThreeBB4F).unwrap();
        let cl = transport_id("cp", "ed");
        assert_eq!(low.asset(&cl).unwrap().kind, AssetKind::Transport);
        assert_eq!(low.n_arcs(), 7);
        assert_eq!(low.transport_neighbours(&cl).unwrap(), ("cp".to_string(), "ed".to_string()));
        assert_eq!(low.arc(&cl, "cp").unwrap().max_fwd_mw, Some(0.0));
    }

    #[test]
    fn missing_hub_is_reported() {
        let mut sys = hybrid_fixture::<f64>();
        sys.clear_hubs();
        match lower_to_node_form(&sys, Approach::TwoBB2F) {
            Err(BuildError::MissingHubAnnotation(arcs)) => assert_eq!(arcs, vec!["pv->bt".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn link_capacity_sums_routed_sources() {
        let low = lower_to_node_form(&hybrid_fixture::<f64>(), Approach::TwoBB2F).unwrap();
        let sys = hybrid_fixture::<f64>();
        let expected = sys.asset("pv").unwrap().max_output() + sys.asset("bt").unwrap().max_output();
        assert_eq!(low.arc("cp", "ed").unwrap().max_fwd_mw, Some(expected));
    }
}
