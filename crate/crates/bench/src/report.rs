use std::fs;
use std::path::{Path, PathBuf};

use crate::harness::BenchReport;
use crate::BenchError;

pub const SAMPLES_CSV: &str = "samples.csv";
pub const SPEEDUPS_CSV: &str = "speedups.csv";
pub const TTESTS_CSV: &str = "ttests.csv";

/// Writes `samples.csv`, `speedups.csv` and `ttests.csv` into `dir`,
/// creating it if needed. Returns the three paths.
pub fn write_report(report: &BenchReport, dir: &Path) -> Result<[PathBuf; 3], BenchError> {
    if report.samples.is_empty() {
        return Err(BenchError::InvalidConfig("report has no samples".into()));
    }
    fs::create_dir_all(dir)?;
    let paths = [dir.join(SAMPLES_CSV), dir.join(SPEEDUPS_CSV), dir.join(TTESTS_CSV)];

    let mut w = csv::Writer::from_path(&paths[0])?;
    w.write_record(["approach", "instance", "seed", "build_time_s", "solve_time_s", "objective"])?;
    for s in &report.samples {
        w.write_record([
            s.approach.label().to_string(),
            s.instance.clone(),
            s.seed.to_string(),
            s.build_time_s.to_string(),
            s.solve_time_s.to_string(),
            s.objective.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[1])?;
    w.write_record(["approach", "instance", "median_build_speedup", "median_solve_speedup"])?;
    for s in &report.speedups {
        w.write_record([s.approach.label().to_string(), s.instance.clone(), s.median_build_speedup.to_string(), s.median_solve_speedup.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[2])?;
    w.write_record(["approach", "reference", "instance", "t", "p", "df", "reject"])?;
    for t in &report.ttests {
        w.write_record([
            t.approach.label().to_string(),
            report.reference.label().to_string(),
            t.instance.clone(),
            t.result.t_statistic.to_string(),
            t.result.p_value.to_string(),
            t.result.df.to_string(),
            t.result.reject_null.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(paths)
}
