use flowgraph_core::{Asset, EnergySystem, FlowArc, HubAnnotation};
use flowgraph_core::mps::write_mps;
use flowgraph_core::{build_model, Approach, Extensions, LpInstance, PortDirection};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Shape {
    producers: Vec<(f64, f64)>,
    storages: Vec<(f64, f64)>,
    demands: Vec<f64>,
    line: Option<f64>,
    horizon: usize,
}

fn shape() -> impl Strategy<Value = Shape> {
    (
        prop::collection::vec((10.0..200.0f64, 0.0..5.0f64), 1..4),
        prop::collection::vec((5.0..50.0f64, 10.0..400.0f64), 0..3),
        prop::collection::vec(0.0..80.0f64, 1..3),
        prop::option::of(1.0..100.0f64),
        1usize..5,
    )
        .prop_map(|(producers, storages, demands, line, horizon)| Shape { producers, storages, demands, line, horizon })
}

/// One hub in which every producer and storage may feed every storage and
/// consumer; with `line`, a second area joined to the first consumer.
fn system(s: &Shape) -> EnergySystem {
    let t = s.horizon;
    let mut sys = EnergySystem::new(t);
    let mut hub = HubAnnotation::new("h");
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    for (k, &(cap, cost)) in s.producers.iter().enumerate() {
        let id = format!("p{k}");
        sys.add_asset(Asset::producer(&id, cap)).unwrap();
        sources.push((id, cost));
    }
    for (k, &(cap, energy)) in s.storages.iter().enumerate() {
        let id = format!("s{k}");
        sys.add_asset(Asset::storage(&id, cap, energy, energy / 2.0)).unwrap();
        sources.push((id.clone(), 0.0));
        sinks.push(id);
    }
    for (k, &d) in s.demands.iter().enumerate() {
        let id = format!("d{k}");
        sys.add_asset(Asset::consumer(&id, vec![d; t])).unwrap();
        sinks.push(id);
    }
    for (src, cost) in &sources {
        hub = hub.port(src, PortDirection::Out);
        for snk in &sinks {
            if src != snk {
                sys.add_flow(FlowArc::new(src, snk).with_cost(*cost)).unwrap();
            }
        }
    }
    for snk in &sinks {
        hub = hub.port(snk, PortDirection::In);
    }
    sys.add_hub(hub).unwrap();
    if let Some(cap) = s.line {
        sys.add_asset(Asset::producer("q", 50.0)).unwrap();
        sys.add_asset(Asset::consumer("e", vec![10.0; t])).unwrap();
        sys.add_flow(FlowArc::new("q", "e")).unwrap();
        sys.add_hub(HubAnnotation::new("h2").port("q", PortDirection::Out).port("e", PortDirection::In)).unwrap();
        sys.add_flow(FlowArc::new("d0", "e").with_max_fwd(cap).bidirectional(cap)).unwrap();
    }
    sys
}

fn mps_bytes(lp: &LpInstance) -> Vec<u8> {
    let mut out = Vec::new();
    write_mps(lp, &mut out).unwrap();
    out
}

fn shuffled_rows(lp: &LpInstance, seed: u64) -> LpInstance {
    let mut order: Vec<usize> = (0..lp.n_rows()).collect();
    let mut x = seed | 1;
    for i in (1..order.len()).rev() {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        order.swap(i, (x % (i as u64 + 1)) as usize);
    }
    let mut out = LpInstance::new(lp.name.clone());
    out.entities = lp.entities.clone();
    out.vars = lp.vars.clone();
    out.objective = lp.objective.clone();
    for i in order {
        out.push_row(lp.row_owned(i));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_systems_validate_and_build(s in shape()) {
        let sys = system(&s);
        prop_assert_eq!(sys.validate(), vec![]);
        for a in Approach::ALL {
            let lp = build_model(&sys, a, Extensions::default()).unwrap();
            prop_assert!(lp.check().is_ok());
        }
    }

    #[test]
    fn validate_is_pure(s in shape()) {
        let sys = system(&s);
        prop_assert_eq!(sys.validate(), sys.validate());
    }

    #[test]
    fn builds_are_byte_identical(s in shape()) {
        let sys = system(&s);
        for a in Approach::ALL {
            let x = build_model(&sys, a, Extensions::default()).unwrap();
            let y = build_model(&sys.clone(), a, Extensions::default()).unwrap();
            prop_assert_eq!(mps_bytes(&x), mps_bytes(&y));
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn size_ignores_row_and_column_order(s in shape(), seed in any::<u64>()) {
        let lp = build_model(&system(&s), Approach::OneBB1F, Extensions::default()).unwrap();
        let n = lp.n_vars();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left((seed % n.max(1) as u64) as usize);
        perm.reverse();
        prop_assert_eq!(lp.permute_columns(&perm).size(), lp.size());
        prop_assert_eq!(shuffled_rows(&lp, seed).size(), lp.size());
    }

    #[test]
    fn node_forms_never_have_fewer_constraints(s in shape()) {
        let sys = system(&s);
        let c = |a| build_model(&sys, a, Extensions::default()).unwrap().size().n_constraints;
        prop_assert!(c(Approach::OneBB1F) <= c(Approach::TwoBB1F));
        prop_assert!(c(Approach::TwoBB1F) <= c(Approach::TwoBB2F));
        prop_assert!(c(Approach::TwoBB2F) <= c(Approach::ThreeBB4F));
    }

    #[test]
    fn fewer_flow_variables_per_link_is_never_larger(s in shape()) {
        let sys = system(&s);
        let size = |a| build_model(&sys, a, Extensions::default()).unwrap().size();
        let (one, two, three) = (size(Approach::TwoBB1F), size(Approach::TwoBB2F), size(Approach::ThreeBB4F));
        prop_assert!(one.n_vars <= two.n_vars && two.n_vars <= three.n_vars);
        prop_assert!(one.n_nonzeros <= two.n_nonzeros && two.n_nonzeros <= three.n_nonzeros);
    }

    #[test]
    fn single_source_hubs_shrink_in_one_bb(cap in 10.0..200.0f64, sinks in 1usize..4, horizon in 1usize..4) {
        let s = Shape { producers: vec![(cap, 1.0)], storages: vec![], demands: vec![5.0; sinks], line: None, horizon };
        let sys = system(&s);
        let size = |a| build_model(&sys, a, Extensions::default()).unwrap().size();
        let (one, two) = (size(Approach::OneBB1F), size(Approach::TwoBB1F));
        prop_assert!(one.n_vars <= two.n_vars);
        prop_assert!(one.n_nonzeros <= two.n_nonzeros);
    }

    #[test]
    fn add_then_remove_restores_the_graph(s in shape()) {
        let sys = system(&s);
        let mut grown = sys.clone();
        grown.add_asset(Asset::producer("extra", 1.0)).unwrap();
        grown.add_flow(FlowArc::new("extra", "d0")).unwrap();
        grown.remove_asset("extra").unwrap();
        prop_assert_eq!(grown, sys);
    }
}

/// A dense hub routes every source to every sink. Written directly that is
/// more arcs than the hub's star of arcs, so the direct form is larger here.
#[test]
fn dense_hub_is_larger_without_the_node() {
    let s = Shape {
        producers: vec![(100.0, 1.0), (100.0, 2.0), (100.0, 3.0)],
        storages: vec![],
        demands: vec![10.0, 10.0, 10.0],
        line: None,
        horizon: 1,
    };
    let sys = system(&s);
    let size = |a| build_model(&sys, a, Extensions::default()).unwrap().size();
    assert_eq!(size(Approach::OneBB1F).n_vars, 9);
    assert_eq!(size(Approach::TwoBB1F).n_vars, 6);
    assert!(size(Approach::OneBB1F).n_constraints < size(Approach::TwoBB1F).n_constraints);
}

#[test]
fn shipped_cases_shrink_in_every_dimension() {
    use flowgraph_core::casegen::{hybrid_fixture, tri_area_case, CaseSpec, InstanceId};
    let tri: EnergySystem = tri_area_case(&CaseSpec::new(1, InstanceId::new(1).unwrap()).with_horizon(24));
    for sys in [hybrid_fixture(), tri] {
        let sizes: Vec<_> = [Approach::OneBB1F, Approach::TwoBB1F, Approach::TwoBB2F, Approach::ThreeBB4F]
            .into_iter()
            .map(|a| build_model(&sys, a, Extensions::default()).unwrap().size())
            .collect();
        for w in sizes.windows(2) {
            assert!(w[0].n_vars <= w[1].n_vars, "{} > {}", w[0], w[1]);
            assert!(w[0].n_constraints <= w[1].n_constraints, "{} > {}", w[0], w[1]);
            assert!(w[0].n_nonzeros <= w[1].n_nonzeros, "{} > {}", w[0], w[1]);
        }
    }
}
