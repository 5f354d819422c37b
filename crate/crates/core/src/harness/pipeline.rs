use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Matrix2, Vector2};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hlip::{deadbeat_gain, dlqr_gain, push_to_disturbance, s2s_matrices, DiscreteState, GainMatrix, HlipParams};
use crate::learn::{error_constraint_sets, extract_dataset, fit_linf, p1_orbit, OrbitSpec, S2SModel, StepDataset, Triple};
use crate::plant::{run_episode, PlantEpisode, PlantState, PushSchedule, StepController};
use crate::sets::{mrpi_outer, BoxSet};
use crate::sls::{
    build_profile, synthesize, theorem1_certificate, Certificate, DisturbanceProfile, FirController, RunningWindows,
    SynthesisProblem,
};
use crate::textfmt::{fmt_f64, write_atomic, KvDoc};

use super::config::{ExperimentConfig, PushDirection, S0Choice};
use super::controllers::{GainStepper, SlsStepper};
use super::log::{emit_csv, EpisodeLog, LogFrame};
use super::plot::{emit_plot, PlotContext, PlotKind, ResidualData};

pub const DATA_FILE: &str = "data.csv";
pub const MODEL_FILE: &str = "model.txt";
pub const LEARN_REPORT_FILE: &str = "learn_report.txt";
pub const CONTROLLER_FILE: &str = "controller.txt";
pub const CERTIFICATE_FILE: &str = "certificate.txt";
pub const COMPARISON_FILE: &str = "comparison.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn to_dmat(m: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 2, m.as_slice())
}

fn to_dcol(v: &Vector2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 1, v.as_slice())
}

/// Plant state at the start of a step whose pre-impact state and step size sit on the orbit.
pub fn orbit_start(cfg: &ExperimentConfig, x_star: DiscreteState, u_star: f64) -> PlantState {
    PlantState {
        x: x_star.p - u_star,
        vx: cfg.plant.impact_loss * x_star.v,
        swing_x: -u_star,
        ..PlantState::standstill(&cfg.plant)
    }
}

/// The H-LIP itself as an affine step-to-step model.
pub fn hlip_model(h: &HlipParams) -> S2SModel {
    let (a, b) = s2s_matrices(h);
    S2SModel::new(a, b, Vector2::zeros())
}

/// Walks the plant under H-LIP deadbeat stepping with dithered step sizes,
/// one episode per grid velocity.
pub fn generate_training_data(cfg: &ExperimentConfig) -> Result<Vec<PlantEpisode>> {
    let h = cfg.plant.hlip();
    let reference = hlip_model(&h);
    let (a, b) = s2s_matrices(&h);
    let gain = deadbeat_gain(&a, &b)?;
    cfg.velocity_grid
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let OrbitSpec::P1 { u_star, x_star, .. } = p1_orbit(&reference, v, h.period)? else {
                unreachable!()
            };
            let seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            let mut c = GainStepper::new("hlip", gain, x_star, u_star, h).with_dither(cfg.dither, seed);
            let ep = run_episode(
                &cfg.plant,
                &mut c,
                cfg.steps_per_velocity,
                &PushSchedule::none(),
                orbit_start(cfg, x_star, u_star),
                false,
            )?;
            if ep.fell {
                return Err(Error::numeric(format!("training walk at {v} m/s fell")));
            }
            Ok(ep)
        })
        .collect()
}

pub fn dataset_to_csv(data: &StepDataset) -> String {
    let mut s = String::from("p,v,u,p_next,v_next\n");
    for t in &data.triples {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(t.x.p),
            fmt_f64(t.x.v),
            fmt_f64(t.u),
            fmt_f64(t.next.p),
            fmt_f64(t.next.v)
        );
    }
    s
}

pub fn dataset_from_csv(text: &str, provenance: &str) -> Result<StepDataset> {
    let mut lines = text.lines();
    if lines.next() != Some("p,v,u,p_next,v_next") {
        return Err(Error::Parse { line: 1, msg: "unexpected data header".into() });
    }
    let triples = lines
        .enumerate()
        .map(|(i, l)| {
            let n: Vec<f64> = l
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line: i + 2, msg: "bad number".into() })?;
            if n.len() != 5 {
                return Err(Error::Parse { line: i + 2, msg: "expected 5 columns".into() });
            }
            Ok(Triple {
                x: DiscreteState::new(n[0], n[1]),
                u: n[2],
                next: DiscreteState::new(n[3], n[4]),
            })
        })
        .collect::<Result<_>>()?;
    Ok(StepDataset { triples, provenance: provenance.to_string() })
}

pub fn training_dataset(cfg: &ExperimentConfig) -> Result<StepDataset> {
    let episodes = generate_training_data(cfg)?;
    extract_dataset(&episodes, &format!("config {} seed {}", cfg.hash(), cfg.seed))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Learned {
    pub model: S2SModel,
    pub train: StepDataset,
    pub holdout: StepDataset,
    /// fraction of held-out residuals within `1.5 d*` in both coordinates
    pub holdout_coverage: f64,
}

impl Learned {
    pub fn report(&self) -> String {
        let mut d = KvDoc::new();
        d.set("train_size", self.train.len().to_string());
        d.set("holdout_size", self.holdout.len().to_string());
        d.set_floats("dstar", &[self.model.dstar[0], self.model.dstar[1]]);
        d.set("holdout_coverage_1.5dstar", fmt_f64(self.holdout_coverage));
        d.set("meta.config_hash", self.model.meta.config_hash.clone());
        d.render("L-infinity fit of the step-to-step model")
    }
}

pub fn holdout_coverage(model: &S2SModel, holdout: &StepDataset, factor: f64) -> f64 {
    if holdout.is_empty() {
        return 1.0;
    }
    let inside = holdout
        .triples
        .iter()
        .filter(|t| {
            let r = model.residual(t);
            r[0].abs() <= factor * model.dstar[0] && r[1].abs() <= factor * model.dstar[1]
        })
        .count();
    inside as f64 / holdout.len() as f64
}

pub fn learn(cfg: &ExperimentConfig, data: &StepDataset) -> Result<Learned> {
    let (train, holdout) = data.split_holdout(cfg.holdout, cfg.seed);
    let mut model = fit_linf(&train)?;
    model.meta.config_hash = cfg.hash();
    let holdout_coverage = holdout_coverage(&model, &holdout, 1.5);
    Ok(Learned { model, train, holdout, holdout_coverage })
}

/// Sets, orbit and disturbance profile derived from a learned model.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub model: S2SModel,
    pub hlip: HlipParams,
    pub x_star: DiscreteState,
    pub u_star: f64,
    pub xe: BoxSet,
    pub ue: BoxSet,
    pub s0: BoxSet,
    pub d: BoxSet,
    pub wext: BoxSet,
    pub profile: DisturbanceProfile,
}

impl Design {
    pub fn frame(&self) -> LogFrame<'_> {
        LogFrame { model: &self.model, x_star: self.x_star, u_star: self.u_star, xe: &self.xe, ue: &self.ue }
    }

    pub fn model_hash(&self) -> String {
        hex(self.model.to_text().as_bytes())
    }
}

/// Box of push disturbances for forces up to `f_max` in the configured directions.
pub fn push_box(cfg: &ExperimentConfig, f_max: f64) -> Result<BoxSet> {
    let h = cfg.plant.hlip();
    let w = |f: f64| {
        let v = push_to_disturbance(f, &h);
        vec![v[0], v[1]]
    };
    let pts = match cfg.push_direction {
        PushDirection::Both => vec![w(f_max), w(-f_max)],
        PushDirection::Forward => vec![vec![0.0, 0.0], w(f_max)],
        PushDirection::Backward => vec![vec![0.0, 0.0], w(-f_max)],
    };
    BoxSet::hull(&pts)
}

pub fn build_design(cfg: &ExperimentConfig, model: &S2SModel) -> Result<Design> {
    let h = cfg.plant.hlip();
    let orbit = p1_orbit(model, cfg.v_d, h.period)?;
    let OrbitSpec::P1 { u_star, x_star, .. } = orbit else { unreachable!() };
    let sets = error_constraint_sets(&cfg.x_set, &cfg.u_set, &orbit)?;
    let d = BoxSet::symmetric(&[cfg.d_scale * model.dstar[0], cfg.d_scale * model.dstar[1]])?;
    let wext = push_box(cfg, cfg.f_ext_max)?;
    let s0 = match cfg.s0 {
        S0Choice::Fixed(half) => {
            let s0 = BoxSet::symmetric(&half)?;
            if !s0.is_subset_of(&sets.xe, 0.0) {
                return Err(Error::usage("sls.s0 does not fit inside Xe"));
            }
            s0
        }
        S0Choice::Auto { inflation } => {
            let gain = deadbeat_gain(&model.abar, &model.bbar)?;
            let a_cl = model.abar + model.bbar * gain.0;
            let s0 = mrpi_outer(&to_dmat(&a_cl), &d, 50, inflation)?;
            s0.intersect(&sets.xe)?
                .ok_or_else(|| Error::usage("automatic S0 does not meet Xe"))?
        }
    };
    let profile = build_profile(&s0, &wext, &d, cfg.nf)?;
    Ok(Design { model: model.clone(), hlip: h, x_star, u_star, xe: sets.xe, ue: sets.ue, s0, d, wext, profile })
}

pub fn synthesize_design(cfg: &ExperimentConfig, design: &Design) -> Result<FirController> {
    let a = to_dmat(&design.model.abar);
    let b = to_dcol(&design.model.bbar);
    let pushed = design.wext.minkowski_sum(&design.d)?;
    let problem = SynthesisProblem {
        a: &a,
        b: &b,
        profile: &design.profile,
        xe: &design.xe,
        ue: &design.ue,
        s0: &design.s0,
        weights: &cfg.weights,
        running_windows: cfg
            .running_windows
            .then_some(RunningWindows { pushed: &pushed, residual: &design.d }),
    };
    let mut fir = synthesize(&problem)?;
    fir.model_hash = design.model_hash();
    fir.config_hash = cfg.hash();
    Ok(fir)
}

pub fn certify(cfg: &ExperimentConfig, design: &Design, fir: std::result::Result<&FirController, &Error>) -> Certificate {
    theorem1_certificate(fir, &design.profile, &design.s0, &design.xe, &design.ue, cfg.nf, cfg.n_push)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerKind {
    Sls,
    Deadbeat,
    Lqr,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Sls => "sls",
            ControllerKind::Deadbeat => "deadbeat",
            ControllerKind::Lqr => "lqr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sls" => Ok(Self::Sls),
            "deadbeat" => Ok(Self::Deadbeat),
            "lqr" => Ok(Self::Lqr),
            other => Err(Error::usage(format!("unknown controller `{other}`"))),
        }
    }

    pub const ALL: [ControllerKind; 3] = [ControllerKind::Sls, ControllerKind::Deadbeat, ControllerKind::Lqr];
}

fn baseline_gain(cfg: &ExperimentConfig, design: &Design, kind: ControllerKind) -> Result<GainMatrix> {
    let (a, b) = (design.model.abar, design.model.bbar);
    match kind {
        ControllerKind::Deadbeat => deadbeat_gain(&a, &b),
        ControllerKind::Lqr => dlqr_gain(&a, &b, &Matrix2::from_diagonal(&Vector2::from(cfg.lqr_q)), cfg.lqr_r),
        ControllerKind::Sls => unreachable!(),
    }
}

/// One plant episode started on the learned orbit.
pub fn run_controller(
    cfg: &ExperimentConfig,
    design: &Design,
    kind: ControllerKind,
    fir: Option<&FirController>,
    pushes: &[(usize, f64)],
    n_steps: usize,
    trace: bool,
) -> Result<EpisodeLog> {
    let schedule = PushSchedule::new(pushes.to_vec(), cfg.n_push)?;
    let mut controller: Box<dyn StepController> = match kind {
        ControllerKind::Sls => {
            let fir = fir.ok_or_else(|| Error::usage("the sls controller needs a synthesized controller"))?;
            Box::new(SlsStepper::new(fir.clone(), design.x_star, design.u_star, design.hlip))
        }
        _ => Box::new(GainStepper::new(
            kind.name(),
            baseline_gain(cfg, design, kind)?,
            design.x_star,
            design.u_star,
            design.hlip,
        )),
    };
    let start = orbit_start(cfg, design.x_star, design.u_star);
    let ep = run_episode(&cfg.plant, controller.as_mut(), n_steps, &schedule, start, trace)?;
    Ok(EpisodeLog::from_episode(&ep, kind.name(), &design.frame()))
}

/// First `j >= 1` with `e_{k+j}` inside `target`.
pub fn recovery_steps(log: &EpisodeLog, k_push: usize, target: &BoxSet) -> Option<usize> {
    log.steps
        .iter()
        .filter(|s| s.k > k_push)
        .find(|s| target.contains(s.e.as_slice(), 1e-12))
        .map(|s| s.k - k_push)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub controller: String,
    pub max_abs_u: f64,
    /// one entry per push
    pub recovery_steps: Vec<Option<usize>>,
    pub input_violations: usize,
    pub state_violations: usize,
    pub fell: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub pushes: Vec<(usize, f64)>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn to_text(&self, config_hash: &str) -> String {
        let mut d = KvDoc::new();
        d.set("meta.config_hash", config_hash);
        d.set(
            "pushes",
            self.pushes.iter().map(|(k, f)| format!("{k}:{}", fmt_f64(*f))).collect::<Vec<_>>().join(" "),
        );
        for r in &self.rows {
            let c = &r.controller;
            d.set(&format!("{c}.max_abs_u"), fmt_f64(r.max_abs_u));
            d.set(
                &format!("{c}.recovery_steps"),
                r.recovery_steps.iter().map(|s| s.map_or("none".into(), |n| n.to_string())).collect::<Vec<_>>().join(" "),
            );
            d.set(&format!("{c}.input_violations"), r.input_violations.to_string());
            d.set(&format!("{c}.state_violations"), r.state_violations.to_string());
            d.set(&format!("{c}.fell"), r.fell.to_string());
        }
        d.render("controller comparison on identical push episodes")
    }
}

pub fn summarize(log: &EpisodeLog, pushes: &[(usize, f64)], s0: &BoxSet) -> ComparisonRow {
    ComparisonRow {
        controller: log.controller.clone(),
        max_abs_u: log.max_abs_u(),
        recovery_steps: pushes.iter().map(|&(k, _)| recovery_steps(log, k, s0)).collect(),
        input_violations: log.steps.iter().filter(|s| s.margin_u < -1e-9).count(),
        state_violations: log.steps.iter().filter(|s| s.margin_xp < -1e-9 || s.margin_xv < -1e-9).count(),
        fell: log.fell,
    }
}

/// Runs the same push schedule under each controller.
pub fn compare_controllers(
    cfg: &ExperimentConfig,
    design: &Design,
    fir: Option<&FirController>,
    kinds: &[ControllerKind],
) -> Result<(ComparisonReport, Vec<EpisodeLog>)> {
    let pushes = cfg.push_schedule();
    let logs: Vec<EpisodeLog> = kinds
        .iter()
        .map(|&k| run_controller(cfg, design, k, fir, &pushes, cfg.sim_steps, true))
        .collect::<Result<_>>()?;
    let rows = logs.iter().map(|l| summarize(l, &pushes, &design.s0)).collect();
    Ok((ComparisonReport { pushes, rows }, logs))
}

pub fn residual_data(design: &Design, data: &StepDataset) -> ResidualData {
    let reference = hlip_model(&design.hlip);
    let pair = |v: Vector2<f64>| [v[0], v[1]];
    ResidualData {
        eps: data.triples.iter().map(|t| pair(design.model.residual(t))).collect(),
        w_m: data.triples.iter().map(|t| pair(reference.residual(t))).collect(),
        dstar: [design.model.dstar[0], design.model.dstar[1]],
    }
}

pub fn plot_context(cfg: &ExperimentConfig, design: &Design, data: &StepDataset) -> PlotContext {
    PlotContext {
        u_bounds: (cfg.u_set.lo()[0], cfg.u_set.hi()[0]),
        v_d: cfg.v_d,
        period: cfg.plant.period,
        residual: residual_data(design, data),
    }
}

/// Output directory layout shared by the CLI stages.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub dir: PathBuf,
}

impl Workspace {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn episode_file(kind: ControllerKind) -> String {
        format!("episode_{}.csv", kind.name())
    }

    fn read(&self, name: &str, stage: &'static str) -> Result<String> {
        std::fs::read_to_string(self.path(name)).map_err(|e| {
            Error::usage(format!("{}: {e}; run the `{stage}` stage first", self.path(name).display()))
        })
    }

    pub fn write(&self, name: &str, text: &str) -> Result<()> {
        write_atomic(&self.path(name), text.as_bytes())
    }

    pub fn load_data(&self, cfg: &ExperimentConfig) -> Result<StepDataset> {
        dataset_from_csv(&self.read(DATA_FILE, "gen-data")?, &format!("config {}", cfg.hash()))
    }

    pub fn load_model(&self, cfg: &ExperimentConfig) -> Result<S2SModel> {
        let model = S2SModel::from_text(&self.read(MODEL_FILE, "learn")?)?;
        if model.meta.config_hash != cfg.hash() {
            return Err(Error::usage("model.txt was produced by a different config; rerun `learn`"));
        }
        Ok(model)
    }

    pub fn load_controller(&self, cfg: &ExperimentConfig, design: &Design) -> Result<FirController> {
        let fir = FirController::from_text(&self.read(CONTROLLER_FILE, "synthesize")?)?;
        if fir.config_hash != cfg.hash() || fir.model_hash != design.model_hash() {
            return Err(Error::usage("controller.txt does not match the current config and model; rerun `synthesize`"));
        }
        Ok(fir)
    }
}

pub fn stage_gen_data(cfg: &ExperimentConfig, ws: &Workspace) -> Result<StepDataset> {
    let data = training_dataset(cfg).map_err(|e| e.in_stage("gen-data"))?;
    ws.write(DATA_FILE, &dataset_to_csv(&data))?;
    Ok(data)
}

pub fn stage_learn(cfg: &ExperimentConfig, ws: &Workspace) -> Result<Learned> {
    let data = ws.load_data(cfg)?;
    let learned = learn(cfg, &data).map_err(|e| e.in_stage("learn"))?;
    ws.write(MODEL_FILE, &learned.model.to_text())?;
    ws.write(LEARN_REPORT_FILE, &learned.report())?;
    Ok(learned)
}

/// Writes the certificate in every case and the controller when synthesis succeeds.
pub fn stage_synthesize(cfg: &ExperimentConfig, ws: &Workspace) -> Result<(Design, FirController, Certificate)> {
    let model = ws.load_model(cfg)?;
    let design = build_design(cfg, &model).map_err(|e| e.in_stage("design"))?;
    let fir = synthesize_design(cfg, &design);
    let cert = certify(cfg, &design, fir.as_ref());
    ws.write(CERTIFICATE_FILE, &cert.to_text())?;
    let fir = fir.map_err(|e| e.in_stage("synthesize"))?;
    ws.write(CONTROLLER_FILE, &fir.to_text())?;
    Ok((design, fir, cert))
}

fn load_design(cfg: &ExperimentConfig, ws: &Workspace) -> Result<(Design, FirController)> {
    let model = ws.load_model(cfg)?;
    let design = build_design(cfg, &model).map_err(|e| e.in_stage("design"))?;
    let fir = ws.load_controller(cfg, &design)?;
    Ok((design, fir))
}

pub fn stage_simulate(cfg: &ExperimentConfig, ws: &Workspace) -> Result<EpisodeLog> {
    let (design, fir) = load_design(cfg, ws)?;
    let log = run_controller(cfg, &design, ControllerKind::Sls, Some(&fir), &cfg.push_schedule(), cfg.sim_steps, false)
        .map_err(|e| e.in_stage("simulate"))?;
    emit_csv(&log, &ws.path(&Workspace::episode_file(ControllerKind::Sls)))?;
    Ok(log)
}

pub fn stage_compare(cfg: &ExperimentConfig, ws: &Workspace) -> Result<(ComparisonReport, Vec<EpisodeLog>)> {
    let (design, fir) = load_design(cfg, ws)?;
    let (report, logs) =
        compare_controllers(cfg, &design, Some(&fir), &ControllerKind::ALL).map_err(|e| e.in_stage("compare"))?;
    for (log, kind) in logs.iter().zip(ControllerKind::ALL) {
        emit_csv(log, &ws.path(&Workspace::episode_file(kind)))?;
    }
    ws.write(COMPARISON_FILE, &report.to_text(&cfg.hash()))?;
    Ok((report, logs))
}

pub fn stage_plot(cfg: &ExperimentConfig, ws: &Workspace) -> Result<()> {
    let (design, fir) = load_design(cfg, ws)?;
    let data = ws.load_data(cfg)?;
    let (_, logs) =
        compare_controllers(cfg, &design, Some(&fir), &ControllerKind::ALL).map_err(|e| e.in_stage("plot"))?;
    let ctx = plot_context(cfg, &design, &data);
    for kind in [PlotKind::Velocity, PlotKind::Input, PlotKind::Residual] {
        emit_plot(&logs, kind, &ctx, &ws.path(kind.file_name()))?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub learned: Learned,
    pub design: Design,
    pub controller: FirController,
    pub certificate: Certificate,
    pub report: ComparisonReport,
    pub logs: Vec<EpisodeLog>,
}

/// Lists every artifact with its SHA-256 and the config hash.
fn write_manifest(cfg: &ExperimentConfig, ws: &Workspace, files: &[&str]) -> Result<()> {
    let mut d = KvDoc::new();
    d.set("meta.config_hash", cfg.hash());
    for f in files {
        let bytes = std::fs::read(ws.path(f))?;
        d.set(&format!("sha256.{f}"), hex(&bytes));
    }
    ws.write(MANIFEST_FILE, &d.render("artifacts of one pipeline run"))
}

/// Data generation through push-rejection episodes and plots, all under `out`.
pub fn run_pipeline(cfg: &ExperimentConfig, out: &Path) -> Result<PipelineOutput> {
    cfg.validate()?;
    let ws = Workspace::new(out);
    ws.write("config.txt", &cfg.to_text())?;
    let data = stage_gen_data(cfg, &ws)?;
    let learned = stage_learn(cfg, &ws)?;
    let (design, controller, certificate) = stage_synthesize(cfg, &ws)?;
    let (report, logs) = stage_compare(cfg, &ws)?;
    let ctx = plot_context(cfg, &design, &data);
    for kind in [PlotKind::Velocity, PlotKind::Input, PlotKind::Residual] {
        emit_plot(&logs, kind, &ctx, &ws.path(kind.file_name()))?;
    }
    let mut files = vec![
        "config.txt",
        DATA_FILE,
        MODEL_FILE,
        LEARN_REPORT_FILE,
        CONTROLLER_FILE,
        CERTIFICATE_FILE,
        COMPARISON_FILE,
        "velocity.svg",
        "input.svg",
        "residual.svg",
    ];
    let episode_files: Vec<String> = ControllerKind::ALL.iter().map(|k| Workspace::episode_file(*k)).collect();
    files.extend(episode_files.iter().map(String::as_str));
    write_manifest(cfg, &ws, &files)?;
    Ok(PipelineOutput { learned, design, controller, certificate, report, logs })
}
