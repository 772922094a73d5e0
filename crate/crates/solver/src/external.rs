//! Runs an external LP solver on an MPS file and reads back its solution.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use flowgraph_core::lp::{LpInstance, SolveResult};
use flowgraph_core::mps::{self, FormatError};
use flowgraph_core::Scalar;
use serde::{Deserialize, Serialize};

use crate::SolverError;

/// Names a JSON spec file used when no spec is given explicitly.
pub const SOLVER_ENV: &str = "FLOWGRAPH_SOLVER";

/// How to call a solver.
///
/// Arguments may use `{input}` (the MPS file), `{output}` (where the solver
/// writes its solution) and `{seed}`. When no argument mentions `{seed}` and
/// `seed_param` is set, `seed_param` and the seed are appended as two more
/// arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSolverSpec {
    pub executable: PathBuf,
    pub args: Vec<String>,
    /// Solution file to read, as a template. Defaults to `{output}`.
    #[serde(default)]
    pub solution_path: Option<String>,
    #[serde(default)]
    pub seed_param: Option<String>,
}

impl ExternalSolverSpec {
    pub fn from_json_file(path: &Path) -> Result<Self, SolverError> {
        let text = std::fs::read_to_string(path)?;
        let spec: ExternalSolverSpec = serde_json::from_str(&text).map_err(|e| SolverError::ParseError(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for ph in ["{input}", "{output}"] {
            if !self.args.iter().any(|a| a.contains(ph)) {
                return Err(SolverError::ParseError(format!("solver arguments lack the {ph} placeholder")));
            }
        }
        Ok(())
    }

    fn expand(template: &str, input: &Path, output: &Path, seed: u64) -> String {
        template
            .replace("{input}", &input.to_string_lossy())
            .replace("{output}", &output.to_string_lossy())
            .replace("{seed}", &seed.to_string())
    }

    fn command_args(&self, input: &Path, output: &Path, seed: u64) -> Vec<String> {
        let mut args: Vec<String> = self.args.iter().map(|a| Self::expand(a, input, output, seed)).collect();
        if let Some(p) = &self.seed_param {
            if !self.args.iter().any(|a| a.contains("{seed}")) {
                args.push(p.clone());
                args.push(seed.to_string());
            }
        }
        args
    }
}

/// The spec named by `FLOWGRAPH_SOLVER`, if the variable is set.
pub fn default_spec_from_env() -> Option<Result<ExternalSolverSpec, SolverError>> {
    let path = std::env::var_os(SOLVER_ENV)?;
    Some(ExternalSolverSpec::from_json_file(Path::new(&path)))
}

fn lock_for(spec: &ExternalSolverSpec) -> Arc<Mutex<()>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>> = OnceLock::new();
    let mut map = LOCKS.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    map.entry(spec.executable.clone()).or_default().clone()
}

/// Writes `lp` as MPS, runs the solver and parses its solution file.
/// Calls through the same executable run one at a time so timings do not
/// compete; `wall_time_s` covers the subprocess only.
pub fn solve_external<T: Scalar>(lp: &LpInstance<T>, spec: &ExternalSolverSpec, seed: u64) -> Result<SolveResult<T>, SolverError> {
    spec.validate()?;
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("model.mps");
    let output = dir.path().join("solution.txt");
    mps::write_mps_file(lp, &input).map_err(|e| match e {
        FormatError::IoFailure(io) => SolverError::Io(io),
        other => SolverError::ParseError(other.to_string()),
    })?;

    let lock = lock_for(spec);
    let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let out = Command::new(&spec.executable)
        .args(spec.command_args(&input, &output, seed))
        .output()
        .map_err(|e| SolverError::SolverLaunchFailure { executable: spec.executable.display().to_string(), reason: e.to_string() })?;
    let wall = start.elapsed().as_secs_f64();
    if !out.status.success() {
        return Err(SolverError::NonzeroExit { code: out.status.code(), stderr: String::from_utf8_lossy(&out.stderr).trim().to_string() });
    }
    let sol_path = match &spec.solution_path {
        Some(t) => PathBuf::from(ExternalSolverSpec::expand(t, &input, &output, seed)),
        None => output,
    };
    let mut result = mps::read_solution(&sol_path, lp).map_err(|e| SolverError::ParseError(format!("{}: {e}", sol_path.display())))?;
    result.wall_time_s = wall;
    Ok(result)
}
