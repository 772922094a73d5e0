use std::path::{Path, PathBuf};

use flowgraph_core::casegen::{hybrid_fixture, tri_area_case, CaseSpec, InstanceId};
use flowgraph_core::lp::{LpInstance, SolveResult, SolveStatus};
use flowgraph_core::mps::write_solution;
use flowgraph_core::{build_model, Approach, Extensions};
use flowgraph_solver::{check_primal, solve_external, solve_reference, ExternalSolverSpec, SimplexOptions, SolverError};

fn sh(script: &str) -> ExternalSolverSpec {
    ExternalSolverSpec {
        executable: "sh".into(),
        args: vec!["-c".into(), script.into(), "stub".into(), "{input}".into(), "{output}".into()],
        solution_path: None,
        seed_param: None,
    }
}

fn highs() -> ExternalSolverSpec {
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tools/highs_solve.py");
    ExternalSolverSpec {
        executable: "python3".into(),
        args: vec![script.display().to_string(), "{input}".into(), "{output}".into()],
        solution_path: None,
        seed_param: Some("--seed".into()),
    }
}

fn hybrid() -> LpInstance<f64> {
    build_model(&hybrid_fixture::<f64>(), Approach::OneBB1F, Extensions::default()).unwrap()
}

#[test]
fn canned_solution_is_parsed() {
    let lp = hybrid();
    let reference = solve_reference(&lp, &SimplexOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let canned = dir.path().join("canned.txt");
    write_solution(&lp, &reference, std::fs::File::create(&canned).unwrap()).unwrap();
    let spec = sh(&format!("test -s \"$1\" && cp '{}' \"$2\"", canned.display()));
    let r = solve_external(&lp, &spec, 7).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert_eq!(r.primal.as_ref().unwrap().len(), lp.n_vars());
    assert!(check_primal(&lp, r.primal.as_ref().unwrap(), 1e-7).is_empty());
    assert!(r.wall_time_s >= 0.0);
}

#[test]
fn seed_is_substituted() {
    let lp = hybrid();
    let dir = tempfile::tempdir().unwrap();
    let seen = dir.path().join("seed.txt");
    let mut spec = sh(&format!("echo \"$3\" > '{}'; printf 'status infeasible\\n' > \"$2\"", seen.display()));
    spec.args.push("{seed}".into());
    let r: SolveResult<f64> = solve_external(&lp, &spec, 42).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    assert_eq!(std::fs::read_to_string(&seen).unwrap().trim(), "42");
}

#[test]
fn missing_executable_fails_to_launch() {
    let mut spec = sh("true");
    spec.executable = PathBuf::from("/nonexistent/solver-binary");
    let err = solve_external(&hybrid(), &spec, 1).unwrap_err();
    assert!(matches!(err, SolverError::SolverLaunchFailure { .. }), "{err}");
}

#[test]
fn nonzero_exit_is_reported() {
    let err = solve_external(&hybrid(), &sh("echo broken >&2; exit 3"), 1).unwrap_err();
    match err {
        SolverError::NonzeroExit { code, stderr } => {
            assert_eq!(code, Some(3));
            assert_eq!(stderr, "broken");
        }
        other => panic!("{other}"),
    }
}

#[test]
fn garbage_output_is_a_parse_error() {
    let err = solve_external(&hybrid(), &sh("echo 'hello world' > \"$2\""), 1).unwrap_err();
    assert!(matches!(err, SolverError::ParseError(_)), "{err}");
    let err = solve_external(&hybrid(), &sh("true"), 1).unwrap_err();
    assert!(matches!(err, SolverError::ParseError(_)), "{err}");
}

#[test]
fn template_without_placeholders_is_rejected() {
    let spec = ExternalSolverSpec { executable: "true".into(), args: vec!["{input}".into()], solution_path: None, seed_param: None };
    assert!(spec.validate().is_err());
}

#[test]
fn spec_round_trips_through_json() {
    let spec = highs();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    assert_eq!(ExternalSolverSpec::from_json_file(&path).unwrap(), spec);
}

#[test]
fn highs_agrees_with_the_reference_simplex() {
    let sys = tri_area_case::<f64>(&CaseSpec::new(5, InstanceId::new(1).unwrap()).with_horizon(24));
    let lp = build_model(&sys, Approach::TwoBB1F, Extensions::default()).unwrap();
    let ours = solve_reference(&lp, &SimplexOptions::default()).unwrap();
    let a = solve_external(&lp, &highs(), 1).unwrap();
    let b = solve_external(&lp, &highs(), 2).unwrap();
    assert_eq!(a.status, SolveStatus::Optimal);
    assert!((a.objective - ours.objective).abs() <= 1e-6 * ours.objective.abs());
    assert!((a.objective - b.objective).abs() <= 1e-6 * a.objective.abs());
    assert!(check_primal(&lp, a.primal.as_ref().unwrap(), 1e-6).is_empty());
}
