use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stepsls::harness::pipeline::{self, ControllerKind, Workspace};
use stepsls::harness::ExperimentConfig;
use stepsls::Error;

#[derive(Parser)]
#[command(name = "stepsls", version, about = "Learned step-to-step models and SLS push-recovery stepping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file; the AMBER-style preset when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Walk the plant over the velocity grid and write data.csv
    GenData(Common),
    /// Fit the L-infinity step-to-step model and write model.txt
    Learn(Common),
    /// Synthesize the FIR controller and write controller.txt and certificate.txt
    Synthesize(Common),
    /// Run the SLS controller through the configured pushes
    Simulate(Common),
    /// Run identical push episodes under several controllers
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of sls, deadbeat, lqr
        #[arg(long, default_value = "sls,deadbeat,lqr", value_delimiter = ',')]
        controllers: Vec<String>,
    },
    /// Write velocity, input and residual plots
    Plot(Common),
    /// Run every stage end to end
    Pipeline(Common),
}

fn load(c: &Common) -> stepsls::Result<ExperimentConfig> {
    match &c.config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::amber()),
    }
}

fn write_config(cfg: &ExperimentConfig, out: &Path) -> stepsls::Result<()> {
    Workspace::new(out).write("config.txt", &cfg.to_text())
}

fn run(cli: Cli) -> stepsls::Result<()> {
    match cli.command {
        Command::GenData(c) => {
            let cfg = load(&c)?;
            write_config(&cfg, &c.out)?;
            let data = pipeline::stage_gen_data(&cfg, &Workspace::new(&c.out))?;
            println!("wrote {} triples to {}", data.len(), c.out.join(pipeline::DATA_FILE).display());
        }
        Command::Learn(c) => {
            let cfg = load(&c)?;
            let l = pipeline::stage_learn(&cfg, &Workspace::new(&c.out))?;
            println!(
                "d* = [{:.6}, {:.6}], held-out coverage {:.3}",
                l.model.dstar[0], l.model.dstar[1], l.holdout_coverage
            );
        }
        Command::Synthesize(c) => {
            let cfg = load(&c)?;
            let (_, fir, cert) = pipeline::stage_synthesize(&cfg, &Workspace::new(&c.out))?;
            println!("objective {:.6}, certificate {}", fir.objective, if cert.passed() { "passed" } else { "FAILED" });
            if !cert.passed() {
                return Err(Error::Numeric(format!("certificate hypotheses failed: {:?}", cert.failing())));
            }
        }
        Command::Simulate(c) => {
            let cfg = load(&c)?;
            let log = pipeline::stage_simulate(&cfg, &Workspace::new(&c.out))?;
            println!("{} steps, max |u| {:.4}, fell {}", log.steps.len(), log.max_abs_u(), log.fell);
        }
        Command::Compare { common, controllers } => {
            let cfg = load(&common)?;
            let kinds: Vec<ControllerKind> =
                controllers.iter().map(|s| ControllerKind::parse(s.trim())).collect::<stepsls::Result<_>>()?;
            let ws = Workspace::new(&common.out);
            let model = ws.load_model(&cfg)?;
            let design = pipeline::build_design(&cfg, &model)?;
            let fir = if kinds.contains(&ControllerKind::Sls) { Some(ws.load_controller(&cfg, &design)?) } else { None };
            let (report, logs) = pipeline::compare_controllers(&cfg, &design, fir.as_ref(), &kinds)?;
            for (log, kind) in logs.iter().zip(&kinds) {
                stepsls::harness::emit_csv(log, &ws.path(&Workspace::episode_file(*kind)))?;
            }
            ws.write(pipeline::COMPARISON_FILE, &report.to_text(&cfg.hash()))?;
            for r in &report.rows {
                println!("{:<9} max|u| {:.4}  recovery {:?}  input violations {}", r.controller, r.max_abs_u, r.recovery_steps, r.input_violations);
            }
        }
        Command::Plot(c) => {
            let cfg = load(&c)?;
            pipeline::stage_plot(&cfg, &Workspace::new(&c.out))?;
            println!("wrote plots to {}", c.out.display());
        }
        Command::Pipeline(c) => {
            let cfg = load(&c)?;
            let out = pipeline::run_pipeline(&cfg, &c.out)?;
            println!("certificate {}", if out.certificate.passed() { "passed" } else { "FAILED" });
            for r in &out.report.rows {
                println!("{:<9} max|u| {:.4}  recovery {:?}", r.controller, r.max_abs_u, r.recovery_steps);
            }
            if !out.certificate.passed() {
                return Err(Error::Numeric(format!("certificate hypotheses failed: {:?}", out.certificate.failing())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_infeasible() { ExitCode::from(2) } else { ExitCode::from(1) }
        }
    }
}
