use std::fmt;
use std::path::Path;

use flowgraph_core::casegen::{CaseSpec, InstanceId};
use flowgraph_core::Approach;
use flowgraph_solver::{ExternalSolverSpec, Pricing, SimplexOptions};
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// A case-study instance by number, or the tri-area case at an explicit
/// horizon for desk-scale runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSel {
    Number(u8),
    Horizon { horizon: usize },
}

impl InstanceSel {
    pub fn case_spec(self, case_seed: u64) -> Result<CaseSpec, BenchError> {
        match self {
            InstanceSel::Number(n) => InstanceId::new(n)
                .map(|id| CaseSpec::new(case_seed, id))
                .ok_or_else(|| BenchError::InvalidConfig(format!("instance {n} is not in 1..=6"))),
            InstanceSel::Horizon { horizon: 0 } => Err(BenchError::InvalidConfig("horizon must be positive".into())),
            InstanceSel::Horizon { horizon } => Ok(CaseSpec::new(case_seed, InstanceId::new(1).expect("instance 1")).with_horizon(horizon)),
        }
    }
}

impl fmt::Display for InstanceSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceSel::Number(n) => write!(f, "{n}"),
            InstanceSel::Horizon { horizon } => write!(f, "T{horizon}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SolverChoice {
    Reference {
        #[serde(default = "bench_simplex")]
        options: SimplexOptions,
    },
    External {
        spec: ExternalSolverSpec,
    },
}

/// Simplex settings for timing runs: Devex pricing, which needs far fewer
/// iterations on the tri-area case than Dantzig.
pub fn bench_simplex() -> SimplexOptions {
    SimplexOptions { pricing: Pricing::DevexBland, ..SimplexOptions::default() }
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::Reference { options: bench_simplex() }
    }
}

fn default_reference() -> Approach {
    Approach::TwoBB2F
}

fn default_alpha() -> f64 {
    0.05
}

fn default_case_seed() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub approaches: Vec<Approach>,
    pub instances: Vec<InstanceSel>,
    pub n_seeds: usize,
    #[serde(default = "default_reference")]
    pub reference: Approach,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Seed of the generated profiles. Solver seeds run from 1 to `n_seeds`.
    #[serde(default = "default_case_seed")]
    pub case_seed: u64,
    /// One discarded build per approach and instance before timing.
    #[serde(default = "default_true")]
    pub warmup: bool,
}

impl BenchConfig {
    pub fn new(approaches: Vec<Approach>, instances: Vec<InstanceSel>, n_seeds: usize) -> Self {
        BenchConfig {
            approaches,
            instances,
            n_seeds,
            reference: default_reference(),
            solver: SolverChoice::default(),
            alpha: default_alpha(),
            case_seed: default_case_seed(),
            warmup: true,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: BenchConfig = serde_json::from_str(&text).map_err(|e| BenchError::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidConfig(m));
        if self.approaches.is_empty() || self.instances.is_empty() {
            return bad("approaches and instances must be nonempty".into());
        }
        if !self.approaches.contains(&self.reference) {
            return bad(format!("reference {} is not among the approaches", self.reference));
        }
        if self.n_seeds < 2 {
            return bad(format!("n_seeds must be at least 2, got {}", self.n_seeds));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        for i in &self.instances {
            i.case_spec(self.case_seed)?;
        }
        Ok(())
    }
}
