//! Runs every stage end to end and writes the artifacts to a directory.
//!
//! Usage: pipeline [out-dir] [config-file]

use std::path::PathBuf;

use stepsls::harness::{run_pipeline, ExperimentConfig};

fn main() -> stepsls::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "pipeline-out".into()));
    let cfg = match args.next() {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => ExperimentConfig::amber(),
    };
    let run = run_pipeline(&cfg, &out)?;
    println!("d* = ({:.3e}, {:.3e})", run.learned.model.dstar[0], run.learned.model.dstar[1]);
    println!("certificate passed: {}", run.certificate.passed());
    for r in &run.report.rows {
        println!("{:<9} max|u| {:.4}  recovery {:?}", r.controller, r.max_abs_u, r.recovery_steps);
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
