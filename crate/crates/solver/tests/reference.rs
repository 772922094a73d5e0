#![allow(clippy::needless_range_loop)]

use flowgraph_core::casegen::{hybrid_fixture, tri_area_case, CaseSpec, InstanceId};
use flowgraph_core::lp::{LpInstance, RowFamily, SolveStatus, VarRole, VariableRef, NONE};
use flowgraph_core::model::{Asset, EnergySystem, FlowArc};
use flowgraph_core::{build_model, Approach, Extensions};
use flowgraph_solver::{check_primal, solve_external, solve_reference, ExternalSolverSpec, Pricing, SimplexOptions, SolverError, ViolationKind};
use proptest::prelude::*;

fn opts() -> SimplexOptions {
    SimplexOptions::default()
}

fn var(lp: &mut LpInstance<f64>, lower: f64, upper: f64) -> usize {
    let a = lp.entities.len() as u32;
    lp.entities.push(format!("x{a}"));
    lp.add_var(VariableRef { role: VarRole::Flow, a, b: NONE, t: NONE, lower, upper, integer: false })
}

#[test]
fn single_bound() {
    let mut lp = LpInstance::new("bound");
    let x = var(&mut lp, 0.0, 5.0);
    lp.objective = vec![(x, -1.0)];
    let r = solve_reference(&lp, &opts()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_eq!(r.objective, -5.0);
    assert_eq!(r.primal.unwrap(), vec![5.0]);
}

fn wyndor() -> LpInstance<f64> {
    // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
    let mut lp = LpInstance::new("wyndor");
    let x = var(&mut lp, 0.0, f64::INFINITY);
    let y = var(&mut lp, 0.0, f64::INFINITY);
    lp.objective = vec![(x, -3.0), (y, -5.0)];
    lp.push_row_parts(RowFamily::FlowBound, 0, NONE, 1, f64::NEG_INFINITY, 4.0, &[(x, 1.0)]);
    lp.push_row_parts(RowFamily::FlowBound, 1, NONE, 1, f64::NEG_INFINITY, 12.0, &[(y, 2.0)]);
    lp.push_row_parts(RowFamily::FlowBound, 0, 1, 1, f64::NEG_INFINITY, 18.0, &[(x, 3.0), (y, 2.0)]);
    lp
}

#[test]
fn textbook_lp_under_every_pricing_rule() {
    let lp = wyndor();
    for pricing in [Pricing::Bland, Pricing::DantzigBland, Pricing::DevexBland] {
        let r = solve_reference(&lp, &SimplexOptions { pricing, ..opts() }).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 36.0).abs() < 1e-9);
        let p = r.primal.unwrap();
        assert!((p[0] - 2.0).abs() < 1e-9 && (p[1] - 6.0).abs() < 1e-9);
    }
}

#[test]
fn short_of_capacity_is_infeasible() {
    // Demand 50 against 30 MW and no investment.
    let mut sys = EnergySystem::<f64>::new(1);
    sys.add_asset(Asset::producer("gen", 30.0)).unwrap();
    sys.add_asset(Asset::consumer("load", vec![50.0])).unwrap();
    sys.add_flow(FlowArc::new("gen", "load")).unwrap();
    let lp = build_model(&sys, Approach::OneBB1F, Extensions::default()).unwrap();
    let r = solve_reference(&lp, &opts()).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    assert!(r.primal.is_none());
}

#[test]
fn unbounded_ray_is_reported() {
    let mut lp = LpInstance::new("unb");
    let x = var(&mut lp, 0.0, f64::INFINITY);
    let y = var(&mut lp, f64::NEG_INFINITY, f64::INFINITY);
    lp.objective = vec![(x, -1.0)];
    lp.push_row_parts(RowFamily::FlowBound, 0, NONE, 1, 1.0, f64::INFINITY, &[(x, 1.0), (y, -1.0)]);
    assert_eq!(solve_reference(&lp, &opts()).unwrap().status, SolveStatus::Unbounded);
}

#[test]
fn iteration_limit_is_an_error() {
    let lp = wyndor();
    let err = solve_reference(&lp, &SimplexOptions { max_iterations: Some(1), ..opts() }).unwrap_err();
    assert!(matches!(err, SolverError::IterationLimit { iterations: 1 }), "{err}");
}

#[test]
fn nonpositive_tolerances_are_rejected() {
    let bad = SimplexOptions { feas_tol: 0.0, ..opts() };
    assert!(matches!(solve_reference(&wyndor(), &bad), Err(SolverError::InvalidOptions(_))));
}

#[test]
fn integrality_is_relaxed() {
    let mut lp = LpInstance::new("int");
    let x = var(&mut lp, 0.0, 10.0);
    lp.vars[x].integer = true;
    lp.objective = vec![(x, 1.0)];
    lp.push_row_parts(RowFamily::FlowBound, 0, NONE, 1, 2.5, f64::INFINITY, &[(x, 1.0)]);
    let r = solve_reference(&lp, &opts()).unwrap();
    assert!((r.objective - 2.5).abs() < 1e-12);
}

#[test]
fn check_primal_flags_unmet_demand() {
    let mut sys = EnergySystem::<f64>::new(1);
    sys.add_asset(Asset::producer("gen", 80.0)).unwrap();
    sys.add_asset(Asset::consumer("load", vec![50.0])).unwrap();
    sys.add_flow(FlowArc::new("gen", "load")).unwrap();
    let lp = build_model(&sys, Approach::OneBB1F, Extensions::default()).unwrap();
    let zeros = vec![0.0; lp.n_vars()];
    let v = check_primal(&lp, &zeros, 1e-7);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::Row(0));
    assert_eq!(v[0].lower, 50.0);
    assert_eq!(v[0].amount(), 50.0);
}

#[test]
fn check_primal_catches_a_small_perturbation() {
    let sys = hybrid_fixture::<f64>();
    let lp = build_model(&sys, Approach::TwoBB2F, Extensions::default()).unwrap();
    let x = solve_reference(&lp, &opts()).unwrap().primal.unwrap();
    let tol = 1e-7;
    assert!(check_primal(&lp, &x, tol).is_empty());
    for j in [0, lp.n_vars() / 2, lp.n_vars() - 1] {
        let mut y = x.clone();
        y[j] += 2.0 * tol;
        let mut z = x.clone();
        z[j] -= 2.0 * tol;
        assert!(!check_primal(&lp, &y, tol).is_empty() || !check_primal(&lp, &z, tol).is_empty(), "{}", lp.var_name(j));
    }
}

/// The two-step hybrid: demand (50, 60), PV availability (1.0, 0.2) on
/// 100 MW, a 100 MWh battery holding 40 MWh, unit efficiencies, PV flows at
/// 1 per MWh and battery discharge at 2.
fn two_step_hybrid() -> EnergySystem<f64> {
    let base = hybrid_fixture::<f64>();
    let mut sys = EnergySystem::new(2);
    for mut a in base.assets().cloned() {
        match a.id.as_str() {
            "pv" => a.availability_profile = Some(vec![1.0, 0.2]),
            "ed" => a.demand_profile = Some(vec![50.0, 60.0]),
            "bt" => {
                a.storage_capacity_mwh = Some(100.0);
                a.initial_storage_mwh = Some(40.0);
                a.eta_in = 1.0;
                a.eta_out = 1.0;
            }
            _ => {}
        }
        sys.add_asset(a).unwrap();
    }
    for f in base.arcs() {
        let cost = if f.from == "pv" { 1.0 } else { 2.0 };
        sys.add_flow(f.clone().with_cost(cost)).unwrap();
    }
    for h in base.hubs() {
        sys.add_hub(h.clone()).unwrap();
    }
    sys
}

#[test]
fn two_step_hybrid_matches_hand_solution() {
    // Step 1: PV covers 50. Step 2: PV gives 20, the battery the other 40.
    let lp = build_model(&two_step_hybrid(), Approach::OneBB1F, Extensions::default()).unwrap();
    let r = solve_reference(&lp, &opts()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.objective - (50.0 + 20.0 + 80.0)).abs() < 1e-9, "{}", r.objective);
}

#[test]
fn two_step_hybrid_matches_highs() {
    let script = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tools/highs_solve.py");
    let spec = ExternalSolverSpec {
        executable: "python3".into(),
        args: vec![script.display().to_string(), "{input}".into(), "{output}".into()],
        solution_path: None,
        seed_param: None,
    };
    let lp = build_model(&two_step_hybrid(), Approach::OneBB1F, Extensions::default()).unwrap();
    let ours = solve_reference(&lp, &opts()).unwrap();
    let theirs = solve_external(&lp, &spec, 0).unwrap();
    assert_eq!(theirs.status, SolveStatus::Optimal);
    assert!((ours.objective - theirs.objective).abs() <= 1e-9 * theirs.objective.abs());
}

fn solve_all(sys: &EnergySystem<f64>) -> Vec<f64> {
    Approach::ALL
        .iter()
        .map(|&a| {
            let lp = build_model(sys, a, Extensions::default()).unwrap();
            let r = solve_reference(&lp, &opts()).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal, "{a}");
            let v = check_primal(&lp, r.primal.as_ref().unwrap(), 1e-7);
            assert!(v.is_empty(), "{a}: {:?}", &v[..v.len().min(5)]);
            r.objective
        })
        .collect()
}

fn assert_equal(objs: &[f64]) {
    for o in objs {
        assert!((o - objs[0]).abs() <= 1e-8 * objs[0].abs().max(1.0), "{objs:?}");
    }
}

#[test]
fn approaches_agree_on_the_priced_hybrid() {
    assert_equal(&solve_all(&two_step_hybrid()));
}

#[test]
fn approaches_agree_on_tri_area() {
    let sys = tri_area_case(&CaseSpec::new(1, InstanceId::new(1).unwrap()).with_horizon(48));
    assert_equal(&solve_all(&sys));
}

#[test]
fn repeated_solves_are_identical() {
    let sys = tri_area_case::<f64>(&CaseSpec::new(3, InstanceId::new(1).unwrap()).with_horizon(24));
    let lp = build_model(&sys, Approach::TwoBB1F, Extensions::default()).unwrap();
    for pricing in [Pricing::DantzigBland, Pricing::DevexBland] {
        let o = SimplexOptions { pricing, ..opts() };
        let a = solve_reference(&lp, &o).unwrap();
        let b = solve_reference(&lp, &o).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.primal, b.primal);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }
}

#[test]
fn f32_instances_solve() {
    let sys = hybrid_fixture::<f32>();
    let lp = build_model(&sys, Approach::OneBB1F, Extensions::default()).unwrap();
    let r = solve_reference(&lp, &opts()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(check_primal(&lp, &r.primal.unwrap(), 1e-3).is_empty());
}

/// Small LP with finite variable bounds, so it is either infeasible or has
/// an optimal vertex.
#[derive(Debug, Clone)]
struct Small {
    cost: Vec<i32>,
    bounds: Vec<(i32, i32)>,
    rows: Vec<(Vec<i32>, Option<i32>, Option<i32>)>,
}

fn small() -> impl Strategy<Value = Small> {
    (2usize..=3, 1usize..=4).prop_flat_map(|(n, m)| {
        let cost = prop::collection::vec(-3i32..=3, n);
        let bounds = prop::collection::vec((-2i32..=1, 0i32..=4), n);
        let row = (prop::collection::vec(-3i32..=3, n), prop::option::of(-6i32..=6), prop::option::of(0i32..=8));
        let rows = prop::collection::vec(row, m);
        (cost, bounds, rows).prop_map(|(cost, bounds, rows)| Small { cost, bounds, rows })
    })
}

impl Small {
    fn lp(&self) -> LpInstance<f64> {
        let mut lp = LpInstance::new("small");
        for &(l, w) in &self.bounds {
            var(&mut lp, l as f64, (l + w) as f64);
        }
        lp.objective = self.cost.iter().enumerate().filter(|(_, &c)| c != 0).map(|(j, &c)| (j, c as f64)).collect();
        for (k, (a, lo, width)) in self.rows.iter().enumerate() {
            let terms: Vec<(usize, f64)> = a.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, &v)| (j, v as f64)).collect();
            let l = lo.map_or(f64::NEG_INFINITY, |v| v as f64);
            let u = match (lo, width) {
                (Some(l), Some(w)) => (l + w) as f64,
                (None, Some(w)) => *w as f64,
                _ => f64::INFINITY,
            };
            lp.push_row_parts(RowFamily::FlowBound, k as u32, NONE, 1, l, u, &terms);
        }
        lp
    }

    /// Best objective over all vertices, by enumerating every choice of `n`
    /// tight constraints.
    fn brute_force(&self) -> Option<f64> {
        let n = self.cost.len();
        let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
        for (j, &(l, w)) in self.bounds.iter().enumerate() {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            planes.push((e.clone(), l as f64));
            planes.push((e, (l + w) as f64));
        }
        let lp = self.lp();
        for i in 0..lp.n_rows() {
            let mut a = vec![0.0; n];
            let (c, v) = lp.row(i);
            for (&j, &x) in c.iter().zip(v) {
                a[j as usize] = x;
            }
            for b in [lp.rows[i].lower, lp.rows[i].upper] {
                if b.is_finite() {
                    planes.push((a.clone(), b));
                }
            }
        }
        let mut best: Option<f64> = None;
        let mut pick = vec![0usize; n];
        fn combos(k: usize, start: usize, total: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
            if k == pick.len() {
                f(pick);
                return;
            }
            for i in start..total {
                pick[k] = i;
                combos(k + 1, i + 1, total, pick, f);
            }
        }
        let total = planes.len();
        combos(0, 0, total, &mut pick, &mut |sel| {
            let mut a: Vec<Vec<f64>> = sel.iter().map(|&i| {
                let mut r = planes[i].0.clone();
                r.push(planes[i].1);
                r
            }).collect();
            for k in 0..n {
                let p = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
                if a[p][k].abs() < 1e-9 {
                    return;
                }
                a.swap(k, p);
                for i in 0..n {
                    if i != k {
                        let f = a[i][k] / a[k][k];
                        for c in k..=n {
                            a[i][c] -= f * a[k][c];
                        }
                    }
                }
            }
            let x: Vec<f64> = (0..n).map(|k| a[k][n] / a[k][k]).collect();
            if check_primal(&lp, &x, 1e-9).is_empty() {
                let obj = lp.objective_value(&x);
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        });
        best
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn small_lps_match_vertex_enumeration(p in small(), pricing in prop_oneof![Just(Pricing::Bland), Just(Pricing::DantzigBland), Just(Pricing::DevexBland)]) {
        let lp = p.lp();
        let r = solve_reference(&lp, &SimplexOptions { pricing, ..opts() }).unwrap();
        match p.brute_force() {
            None => prop_assert_eq!(r.status, SolveStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(r.status, SolveStatus::Optimal);
                prop_assert!((r.objective - best).abs() < 1e-7, "{} vs {}", r.objective, best);
                prop_assert!(check_primal(&lp, r.primal.as_ref().unwrap(), 1e-7).is_empty());
            }
        }
    }
}
