//! The `flowgraph` command line: build, solve, compare and benchmark the
//! modelling approaches on the shipped cases or on a CSV bundle.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use flowgraph_bench::harness::OBJECTIVE_RTOL;
use flowgraph_bench::{run_benchmark, write_report, BenchConfig, SolverChoice};
use flowgraph_core::casegen::{hybrid_fixture, scale_horizon, tri_area_case, CaseSpec, InstanceId};
use flowgraph_core::{build_model, io, mps, Approach, EnergySystem, Extensions, LpInstance, ModelSize, Severity, SolveResult, SolveStatus};
use flowgraph_solver::{check_primal, default_spec_from_env, solve_external, solve_reference, ExternalSolverSpec, Pricing, SimplexOptions};

/// Absolute tolerance of the feasibility check printed after a solve.
pub const PRIMAL_TOL: f64 = 1e-7;

#[derive(Debug, Parser)]
#[command(name = "flowgraph", version, about = "Energy-system LP builder comparing modelling approaches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one approach, print its size and optionally write MPS.
    Build {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value = "1BB-1F")]
        approach: Approach,
        /// Directory for `<approach>.mps`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a case under one approach, or an MPS file written by `build`.
    Solve {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value = "1BB-1F", conflicts_with = "mps")]
        approach: Approach,
        #[arg(long)]
        mps: Option<PathBuf>,
        /// reference or external:<spec.json>; defaults to FLOWGRAPH_SOLVER,
        /// then reference.
        #[arg(long)]
        solver: Option<SolverArg>,
        /// Directory for `solution.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Size table per approach, plus the objective-equality check.
    Compare {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, value_delimiter = ',', default_values = ["3BB-4F", "2BB-2F", "2BB-1F", "1BB-1F"])]
        approaches: Vec<Approach>,
        /// Print sizes only.
        #[arg(long, conflicts_with = "solve")]
        sizes_only: bool,
        /// Solve every approach and compare objectives (the default).
        #[arg(long)]
        solve: bool,
        #[arg(long)]
        solver: Option<SolverArg>,
    },
    /// Run a benchmark config and write samples, speedups and t-tests as CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replaces the solver named in the config.
        #[arg(long)]
        solver: Option<SolverArg>,
    },
    /// Write a case as a CSV bundle.
    ExportCase {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a CSV bundle and list its diagnostics.
    Validate {
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CaseArgs {
    /// hybrid, tri-area or csv:<dir>.
    #[arg(long, default_value = "hybrid")]
    pub case: CaseArg,
    /// Case-study instance of the tri-area case.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=6))]
    pub instance: u8,
    /// Horizon override in hours.
    #[arg(long = "T", value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: Option<u64>,
    /// Generator seed of the tri-area case; also handed to external solvers.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub uc: bool,
    #[arg(long)]
    pub dc_opf: bool,
}

impl CaseArgs {
    pub fn extensions(&self) -> Extensions {
        Extensions { dc_opf: self.dc_opf, unit_commitment: self.uc }
    }

    pub fn load(&self) -> anyhow::Result<EnergySystem> {
        let t = self.horizon.map(|t| t as usize);
        let sys = match &self.case {
            CaseArg::Hybrid => hybrid_fixture(),
            CaseArg::TriArea => {
                let id = InstanceId::new(self.instance).expect("clap checks the range");
                let mut spec = CaseSpec::new(self.seed, id);
                spec.horizon = t;
                return Ok(tri_area_case(&spec));
            }
            CaseArg::Csv(dir) => io::read_bundle(dir).with_context(|| format!("reading bundle {}", dir.display()))?,
        };
        Ok(match t {
            Some(t) => scale_horizon(&sys, t),
            None => sys,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaseArg {
    Hybrid,
    TriArea,
    Csv(PathBuf),
}

impl FromStr for CaseArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hybrid" => Ok(CaseArg::Hybrid),
            "tri-area" => Ok(CaseArg::TriArea),
            _ => match s.strip_prefix("csv:") {
                Some(dir) if !dir.is_empty() => Ok(CaseArg::Csv(dir.into())),
                _ => Err(format!("unknown case `{s}` (expected hybrid, tri-area or csv:<dir>)")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverArg {
    Reference,
    External(PathBuf),
}

impl FromStr for SolverArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reference" => Ok(SolverArg::Reference),
            _ => match s.strip_prefix("external:") {
                Some(p) if !p.is_empty() => Ok(SolverArg::External(p.into())),
                _ => Err(format!("unknown solver `{s}` (expected reference or external:<spec.json>)")),
            },
        }
    }
}

/// A solver ready to run: the bundled simplex or a loaded external spec.
#[derive(Debug, Clone)]
pub enum Solver {
    Reference(SimplexOptions),
    External(ExternalSolverSpec),
}

impl Solver {
    /// Without a flag, the spec named by `FLOWGRAPH_SOLVER` wins over the
    /// bundled simplex.
    pub fn resolve(arg: Option<&SolverArg>) -> anyhow::Result<Solver> {
        match arg {
            Some(SolverArg::External(p)) => {
                let spec = ExternalSolverSpec::from_json_file(p).with_context(|| format!("loading {}", p.display()))?;
                Ok(Solver::External(spec))
            }
            Some(SolverArg::Reference) => Ok(Solver::Reference(cli_simplex())),
            None => match default_spec_from_env() {
                Some(spec) => Ok(Solver::External(spec.context("loading the spec named by FLOWGRAPH_SOLVER")?)),
                None => Ok(Solver::Reference(cli_simplex())),
            },
        }
    }

    pub fn solve(&self, lp: &LpInstance, seed: u64) -> anyhow::Result<SolveResult> {
        Ok(match self {
            Solver::Reference(o) => solve_reference(lp, o)?,
            Solver::External(spec) => solve_external(lp, spec, seed)?,
        })
    }

    fn choice(&self) -> SolverChoice {
        match self {
            Solver::Reference(options) => SolverChoice::Reference { options: options.clone() },
            Solver::External(spec) => SolverChoice::External { spec: spec.clone() },
        }
    }
}

fn cli_simplex() -> SimplexOptions {
    SimplexOptions { pricing: Pricing::DevexBland, ..SimplexOptions::default() }
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code: 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", error_chain(&e));
            1
        }
    }
}

/// The error and its causes, leaving out causes already quoted by their parent.
fn error_chain(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    let mut last = msg.clone();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !last.contains(&c) {
            msg.push_str(": ");
            msg.push_str(&c);
        }
        last = c;
    }
    msg
}

fn execute(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Build { case, approach, out: dir } => {
            let sys = case.load()?;
            let lp = build_model(&sys, approach, case.extensions())?;
            writeln!(out, "{}", size_table(&[(approach, lp.size())], sys.horizon()))?;
            if let Some(dir) = dir {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join(format!("{approach}.mps"));
                mps::write_mps_file(&lp, &path)?;
                writeln!(out, "wrote {}", path.display())?;
            }
        }
        Command::Solve { case, approach, mps: file, solver, out: dir } => {
            let lp = match &file {
                Some(p) => mps::read_mps_file(p).with_context(|| format!("reading {}", p.display()))?,
                None => build_model(&case.load()?, approach, case.extensions())?,
            };
            let solver = Solver::resolve(solver.as_ref())?;
            let res = solver.solve(&lp, case.seed)?;
            writeln!(out, "status      {}", res.status)?;
            writeln!(out, "objective   {}", res.objective + 0.0)?;
            writeln!(out, "iterations  {}", res.iterations)?;
            writeln!(out, "time        {:.3} s", res.wall_time_s)?;
            if let Some(x) = &res.primal {
                let bad = check_primal(&lp, x, PRIMAL_TOL);
                writeln!(out, "violations  {} at {PRIMAL_TOL:e}", bad.len())?;
            }
            if let Some(dir) = dir {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join("solution.txt");
                mps::write_solution(&lp, &res, std::fs::File::create(&path)?)?;
                writeln!(out, "wrote {}", path.display())?;
            }
            if res.status != SolveStatus::Optimal {
                bail!("model is {}", res.status);
            }
        }
        Command::Compare { case, approaches, sizes_only, solve: _, solver } => {
            let sys = case.load()?;
            let mut sizes = Vec::new();
            let mut lps = Vec::new();
            for &a in &approaches {
                let lp = build_model(&sys, a, case.extensions()).with_context(|| format!("building {a}"))?;
                sizes.push((a, lp.size()));
                lps.push(lp);
            }
            writeln!(out, "{}", size_table(&sizes, sys.horizon()))?;
            if !sizes_only {
                let solver = Solver::resolve(solver.as_ref())?;
                let mut objectives = Vec::new();
                for (lp, &a) in lps.iter().zip(&approaches) {
                    let res = solver.solve(lp, case.seed).with_context(|| format!("solving {a}"))?;
                    if res.status != SolveStatus::Optimal {
                        bail!("{a} is {}", res.status);
                    }
                    objectives.push((a, res.objective));
                }
                let verdict = objective_verdict(&objectives);
                write!(out, "{}", verdict.text)?;
                if !verdict.agree {
                    bail!("objectives differ across approaches");
                }
            }
        }
        Command::Bench { config, out: dir, solver } => {
            let mut cfg = BenchConfig::from_json_file(&config)?;
            if let Some(s) = solver {
                cfg.solver = Solver::resolve(Some(&s))?.choice();
            }
            let report = run_benchmark(&cfg)?;
            let paths = write_report(&report, &dir)?;
            writeln!(out, "approach  instance  build speedup  solve speedup")?;
            for s in &report.speedups {
                writeln!(out, "{:<9} {:<9} {:>13.3} {:>14.3}", s.approach.label(), s.instance, s.median_build_speedup, s.median_solve_speedup)?;
            }
            for t in &report.ttests {
                let r = &t.result;
                writeln!(
                    out,
                    "t-test {} vs {} on {}: t = {:.4}, p = {:.4}, df = {}, {}",
                    t.approach,
                    report.reference,
                    t.instance,
                    r.t_statistic,
                    r.p_value,
                    r.df,
                    if r.reject_null { "reject" } else { "keep" }
                )?;
            }
            for p in paths {
                writeln!(out, "wrote {}", p.display())?;
            }
        }
        Command::ExportCase { case, out: dir } => {
            let sys = case.load()?;
            std::fs::create_dir_all(&dir)?;
            io::write_bundle(&sys, &dir)?;
            writeln!(out, "wrote {} assets, {} flows over {} steps to {}", sys.assets().count(), sys.arcs().count(), sys.horizon(), dir.display())?;
        }
        Command::Validate { dir } => {
            let sys: EnergySystem = io::read_bundle(&dir).with_context(|| format!("reading bundle {}", dir.display()))?;
            let diags = sys.validate();
            for d in &diags {
                writeln!(out, "{d}")?;
            }
            let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
            writeln!(out, "{} errors, {} warnings", errors, diags.len() - errors)?;
            if errors > 0 {
                return Err(anyhow!("{} is invalid", dir.display()));
            }
        }
    }
    Ok(())
}

/// Sizes per approach, with reductions in percent against 2BB-2F when it
/// is listed, otherwise against the first row.
pub fn size_table(rows: &[(Approach, ModelSize)], horizon: usize) -> String {
    let reference = rows.iter().find(|(a, _)| *a == Approach::TwoBB2F).or(rows.first()).map(|r| r.0);
    let mut s = String::new();
    let _ = writeln!(s, "T = {horizon}");
    let _ = write!(s, "{:<8} {:>10} {:>12} {:>10}", "approach", "variables", "constraints", "nonzeros");
    if rows.len() > 1 {
        let _ = write!(s, "   reduction vs {} (vars / constraints / nonzeros)", reference.unwrap());
    }
    s.push('\n');
    let base = rows.iter().find(|r| Some(r.0) == reference).map(|r| r.1);
    for (a, size) in rows {
        let _ = write!(s, "{:<8} {:>10} {:>12} {:>10}", a.label(), size.n_vars, size.n_constraints, size.n_nonzeros);
        if let Some(b) = base.filter(|_| Some(*a) != reference) {
            let [v, c, n] = size.reduction_vs(&b).map(|x| x + 0.0);
            let _ = write!(s, "   {v:.1}% / {c:.1}% / {n:.1}%");
        }
        s.push('\n');
    }
    s.pop();
    s
}

pub struct Verdict {
    pub agree: bool,
    pub text: String,
}

/// Lists the objectives and whether they agree to [`OBJECTIVE_RTOL`].
pub fn objective_verdict(objectives: &[(Approach, f64)]) -> Verdict {
    let mut text = String::new();
    for (a, v) in objectives {
        let _ = writeln!(text, "objective {:<8} {:.9e}", a.label(), v + 0.0);
    }
    let r = objectives.first().map_or(0.0, |o| o.1);
    let agree = objectives.iter().all(|(_, v)| (v - r).abs() <= OBJECTIVE_RTOL * r.abs().max(1.0));
    let _ = writeln!(
        text,
        "verdict: objectives {} within relative tolerance {OBJECTIVE_RTOL:e}",
        if agree { "agree" } else { "DIFFER" }
    );
    Verdict { agree, text }
}
