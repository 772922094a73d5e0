use std::time::Instant;

use flowgraph_core::casegen::tri_area_case;
use flowgraph_core::lp::SolveStatus;
use flowgraph_core::{build_model, Approach, EnergySystem, Extensions, LpInstance};
use flowgraph_solver::{solve_external, solve_reference};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BenchConfig, SolverChoice};
use crate::stats::{median_speedup, two_sample_t_test, TTestResult};
use crate::BenchError;

/// Relative tolerance of the cross-approach objective check.
pub const OBJECTIVE_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    pub approach: Approach,
    pub instance: String,
    pub seed: u64,
    pub build_time_s: f64,
    pub solve_time_s: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub approach: Approach,
    pub instance: String,
    pub median_build_speedup: f64,
    pub median_solve_speedup: f64,
}

/// Solve-time comparison of one approach against the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestRow {
    pub approach: Approach,
    pub instance: String,
    pub result: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub reference: Approach,
    pub alpha: f64,
    pub samples: Vec<TimingSample>,
    pub speedups: Vec<Speedup>,
    pub ttests: Vec<TTestRow>,
}

impl BenchReport {
    pub fn speedup(&self, approach: Approach, instance: &str) -> Option<&Speedup> {
        self.speedups.iter().find(|s| s.approach == approach && s.instance == instance)
    }

    fn times(&self, approach: Approach, instance: &str, pick: fn(&TimingSample) -> f64) -> Vec<f64> {
        self.samples.iter().filter(|s| s.approach == approach && s.instance == instance).map(pick).collect()
    }

    /// Speedups and t-tests from the samples.
    pub fn summarize(&mut self) -> Result<(), BenchError> {
        let mut instances: Vec<String> = Vec::new();
        let mut approaches: Vec<Approach> = Vec::new();
        for s in &self.samples {
            if !instances.contains(&s.instance) {
                instances.push(s.instance.clone());
            }
            if !approaches.contains(&s.approach) {
                approaches.push(s.approach);
            }
        }
        self.speedups.clear();
        self.ttests.clear();
        for inst in &instances {
            let ref_build = self.times(self.reference, inst, |s| s.build_time_s);
            let ref_solve = self.times(self.reference, inst, |s| s.solve_time_s);
            for &a in &approaches {
                let build = self.times(a, inst, |s| s.build_time_s);
                let solve = self.times(a, inst, |s| s.solve_time_s);
                self.speedups.push(Speedup {
                    approach: a,
                    instance: inst.clone(),
                    median_build_speedup: median_speedup(&ref_build, &build)?,
                    median_solve_speedup: median_speedup(&ref_solve, &solve)?,
                });
                if a != self.reference {
                    let result = two_sample_t_test(&solve, &ref_solve, self.alpha)?;
                    self.ttests.push(TTestRow { approach: a, instance: inst.clone(), result });
                }
            }
        }
        Ok(())
    }
}

/// Column order for `seed`: a seeded shuffle of the variables.
pub fn shuffle_columns(lp: &LpInstance, seed: u64) -> LpInstance {
    let mut perm: Vec<usize> = (0..lp.n_vars()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    lp.permute_columns(&perm)
}

fn build(sys: &EnergySystem, approach: Approach) -> Result<(LpInstance, f64), BenchError> {
    let start = Instant::now();
    let lp = build_model(sys, approach, Extensions::default()).map_err(|e| BenchError::Build(approach, e.to_string()))?;
    Ok((lp, start.elapsed().as_secs_f64()))
}

fn solve(lp: &LpInstance, solver: &SolverChoice, seed: u64) -> Result<(f64, f64), BenchError> {
    let (result, elapsed) = match solver {
        SolverChoice::Reference { options } => {
            let shuffled = shuffle_columns(lp, seed);
            let start = Instant::now();
            let r = solve_reference(&shuffled, options).map_err(|e| BenchError::SolverFailure(e.to_string()))?;
            (r, start.elapsed().as_secs_f64())
        }
        SolverChoice::External { spec } => {
            let r = solve_external(lp, spec, seed).map_err(|e| BenchError::SolverFailure(e.to_string()))?;
            let wall = r.wall_time_s;
            (r, wall)
        }
    };
    if result.status != SolveStatus::Optimal {
        return Err(BenchError::SolverFailure(format!("{} ended {}", lp.name, result.status)));
    }
    Ok((result.objective, elapsed))
}

/// Times every (instance, seed, approach) build and solve, strictly one
/// after another, and checks that all approaches reach the same objective.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let mut report = BenchReport { reference: config.reference, alpha: config.alpha, samples: Vec::new(), speedups: Vec::new(), ttests: Vec::new() };
    for &inst in &config.instances {
        let label = inst.to_string();
        let sys: EnergySystem = tri_area_case(&inst.case_spec(config.case_seed)?);
        if config.warmup {
            for &a in &config.approaches {
                build(&sys, a)?;
            }
        }
        for seed in 1..=config.n_seeds as u64 {
            let mut reference_objective = None;
            let mut row = Vec::new();
            for &a in &config.approaches {
                let (lp, build_time_s) = build(&sys, a)?;
                let (objective, solve_time_s) = solve(&lp, &config.solver, seed)?;
                log::info!("instance {label} seed {seed} {a}: build {build_time_s:.3}s solve {solve_time_s:.3}s obj {objective:e}");
                if a == config.reference {
                    reference_objective = Some(objective);
                }
                row.push(TimingSample { approach: a, instance: label.clone(), seed, build_time_s, solve_time_s, objective });
            }
            let r = reference_objective.expect("reference is validated to be among the approaches");
            for s in &row {
                if (s.objective - r).abs() > OBJECTIVE_RTOL * r.abs().max(1.0) {
                    return Err(BenchError::ObjectiveMismatch { approach: s.approach, instance: label, seed, objective: s.objective, reference: r });
                }
            }
            report.samples.extend(row);
        }
    }
    report.summarize()?;
    Ok(report)
}
