use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::plant::PlantConfig;
use crate::sets::BoxSet;
use crate::sls::SlsWeights;
use crate::textfmt::{fmt_f64, KvDoc};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PushDirection {
    Both,
    Forward,
    Backward,
}

impl PushDirection {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(Self::Both),
            "forward" => Ok(Self::Forward),
            "backward" => Ok(Self::Backward),
            other => Err(Error::usage(format!("push.direction must be both, forward or backward, got `{other}`"))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Self::Both => "both",
            Self::Forward => "forward",
            Self::Backward => "backward",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum S0Choice {
    /// outer mRPI of the deadbeat loop under D, inflated, clipped to Xe
    Auto { inflation: f64 },
    /// symmetric half-widths (m, m/s)
    Fixed([f64; 2]),
}

/// Everything one experiment needs; all randomness flows from `seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub plant: PlantConfig,
    pub v_d: f64,
    pub u_set: BoxSet,
    pub x_set: BoxSet,
    pub f_ext_max: f64,
    pub push_direction: PushDirection,
    /// force of the evaluation push (N, signed)
    pub push_force: f64,
    /// step index of the first evaluation push
    pub push_first_step: usize,
    pub push_count: usize,
    pub nf: usize,
    pub n_push: usize,
    pub s0: S0Choice,
    pub weights: SlsWeights,
    pub running_windows: bool,
    /// scale applied to d* when building D
    pub d_scale: f64,
    pub velocity_grid: Vec<f64>,
    pub steps_per_velocity: usize,
    pub dither: f64,
    pub holdout: f64,
    pub lqr_q: [f64; 2],
    pub lqr_r: f64,
    pub sim_steps: usize,
    pub seed: u64,
}

const KEYS: &[&str] = &[
    "plant.z0",
    "plant.period",
    "plant.gravity",
    "plant.mass",
    "plant.kp_z",
    "plant.kd_z",
    "plant.bezier_degree",
    "plant.impact_loss",
    "plant.dt",
    "plant.nl_eps",
    "plant.perfect_height_hold",
    "plant.swing_tolerance",
    "gait.v_d",
    "sets.u",
    "sets.x_lo",
    "sets.x_hi",
    "push.f_ext_max",
    "push.direction",
    "push.force",
    "push.first_step",
    "push.count",
    "push.n_push",
    "sls.nf",
    "sls.s0",
    "sls.s0_inflation",
    "sls.q",
    "sls.r",
    "sls.running_windows",
    "sls.d_scale",
    "data.velocity_grid",
    "data.steps_per_velocity",
    "data.dither",
    "data.holdout",
    "baseline.lqr_q",
    "baseline.lqr_r",
    "sim.steps",
    "seed",
];

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

impl ExperimentConfig {
    /// Planar walker at `z0 = 0.7`, `T = 0.4`, walking at 1 m/s.
    pub fn amber() -> Self {
        Self {
            plant: PlantConfig::for_gait(0.7, 0.4, 60.0),
            v_d: 1.0,
            u_set: BoxSet::interval(-0.7, 0.7).expect("valid"),
            x_set: BoxSet::new(vec![-0.6, -1.5], vec![0.6, 3.5]).expect("valid"),
            f_ext_max: 50.0,
            push_direction: PushDirection::Both,
            push_force: 50.0,
            push_first_step: 8,
            push_count: 1,
            nf: 4,
            n_push: 8,
            s0: S0Choice::Fixed([0.05, 0.2]),
            weights: SlsWeights::uniform(2, 1),
            running_windows: true,
            d_scale: 1.0,
            velocity_grid: linspace(0.0, 2.0, 9),
            steps_per_velocity: 30,
            dither: 0.03,
            holdout: 0.2,
            lqr_q: [1.0, 1.0],
            lqr_r: 1.0,
            sim_steps: 24,
            seed: 7,
        }
    }

    /// Sagittal-plane push recovery in place at `z0 = 0.9`, `T = 0.35`.
    pub fn cassie() -> Self {
        Self {
            plant: PlantConfig::for_gait(0.9, 0.35, 36.0),
            v_d: 0.0,
            f_ext_max: 120.0,
            push_force: 120.0,
            x_set: BoxSet::new(vec![-0.6, -2.5], vec![0.6, 2.5]).expect("valid"),
            s0: S0Choice::Fixed([0.1, 0.4]),
            velocity_grid: linspace(-1.0, 1.0, 9),
            ..Self::amber()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        if self.nf < 2 {
            return Err(Error::usage("sls.nf must be at least 2"));
        }
        if self.nf > self.n_push {
            return Err(Error::usage(format!("sls.nf = {} exceeds push.n_push = {}", self.nf, self.n_push)));
        }
        if !(self.f_ext_max >= 0.0) {
            return Err(Error::usage("push.f_ext_max must be nonnegative"));
        }
        if self.push_force.abs() > self.f_ext_max {
            return Err(Error::usage("|push.force| exceeds push.f_ext_max"));
        }
        if self.push_count > 0 && self.push_first_step < self.nf {
            return Err(Error::usage("the first push needs at least sls.nf settling steps"));
        }
        if self.u_set.dim() != 1 || self.x_set.dim() != 2 {
            return Err(Error::usage("sets.u is an interval and sets.x_lo/x_hi are 2-vectors"));
        }
        if self.velocity_grid.is_empty() || self.steps_per_velocity < 3 {
            return Err(Error::usage("data generation needs a velocity grid and at least 3 steps per velocity"));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return Err(Error::usage("data.holdout must lie in [0, 1)"));
        }
        if !(self.dither >= 0.0 && self.d_scale >= 0.0) {
            return Err(Error::usage("data.dither and sls.d_scale must be nonnegative"));
        }
        if self.weights.q.len() != 2 || self.weights.r.len() != 1 {
            return Err(Error::usage("sls.q has 2 entries and sls.r has 1"));
        }
        match self.s0 {
            S0Choice::Auto { inflation } if !(inflation >= 0.0) => {
                Err(Error::usage("sls.s0_inflation must be nonnegative"))
            }
            S0Choice::Fixed(h) if !(h[0] > 0.0 && h[1] > 0.0) => Err(Error::usage("sls.s0 half-widths must be positive")),
            _ => Ok(()),
        }
    }

    /// Step indices and forces of the evaluation pushes.
    pub fn push_schedule(&self) -> Vec<(usize, f64)> {
        (0..self.push_count)
            .map(|i| (self.push_first_step + i * self.n_push, self.push_force))
            .collect()
    }

    pub fn to_kv(&self) -> KvDoc {
        let p = &self.plant;
        let mut d = KvDoc::new();
        d.set("plant.z0", fmt_f64(p.z0));
        d.set("plant.period", fmt_f64(p.period));
        d.set("plant.gravity", fmt_f64(p.gravity));
        d.set("plant.mass", fmt_f64(p.mass));
        d.set("plant.kp_z", fmt_f64(p.kp_z));
        d.set("plant.kd_z", fmt_f64(p.kd_z));
        d.set("plant.bezier_degree", p.bezier_degree.to_string());
        d.set("plant.impact_loss", fmt_f64(p.impact_loss));
        d.set("plant.dt", fmt_f64(p.dt));
        d.set("plant.nl_eps", fmt_f64(p.nl_eps));
        d.set("plant.perfect_height_hold", p.perfect_height_hold.to_string());
        d.set("plant.swing_tolerance", fmt_f64(p.swing_tolerance));
        d.set("gait.v_d", fmt_f64(self.v_d));
        d.set_floats("sets.u", &[self.u_set.lo()[0], self.u_set.hi()[0]]);
        d.set_floats("sets.x_lo", self.x_set.lo());
        d.set_floats("sets.x_hi", self.x_set.hi());
        d.set("push.f_ext_max", fmt_f64(self.f_ext_max));
        d.set("push.direction", self.push_direction.as_str());
        d.set("push.force", fmt_f64(self.push_force));
        d.set("push.first_step", self.push_first_step.to_string());
        d.set("push.count", self.push_count.to_string());
        d.set("push.n_push", self.n_push.to_string());
        d.set("sls.nf", self.nf.to_string());
        match self.s0 {
            S0Choice::Auto { inflation } => {
                d.set("sls.s0", "auto");
                d.set("sls.s0_inflation", fmt_f64(inflation));
            }
            S0Choice::Fixed(h) => d.set_floats("sls.s0", &h),
        }
        d.set_floats("sls.q", &self.weights.q);
        d.set_floats("sls.r", &self.weights.r);
        d.set("sls.running_windows", self.running_windows.to_string());
        d.set("sls.d_scale", fmt_f64(self.d_scale));
        d.set_floats("data.velocity_grid", &self.velocity_grid);
        d.set("data.steps_per_velocity", self.steps_per_velocity.to_string());
        d.set("data.dither", fmt_f64(self.dither));
        d.set("data.holdout", fmt_f64(self.holdout));
        d.set_floats("baseline.lqr_q", &self.lqr_q);
        d.set("baseline.lqr_r", fmt_f64(self.lqr_r));
        d.set("sim.steps", self.sim_steps.to_string());
        d.set("seed", self.seed.to_string());
        d
    }

    pub fn to_text(&self) -> String {
        self.to_kv().render("experiment configuration")
    }

    /// Starts from `base` (a preset) and overrides the keys present in `text`.
    pub fn parse_over(base: Self, text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        if let Some(bad) = doc.keys().find(|k| !KEYS.contains(k) && *k != "preset") {
            return Err(Error::usage(format!("unknown config key `{bad}`")));
        }
        let mut c = base;
        let f = |key: &str, slot: &mut f64| -> Result<()> {
            if doc.get(key).is_some() {
                *slot = doc.float(key)?;
            }
            Ok(())
        };
        let n = |key: &str, slot: &mut usize| -> Result<()> {
            if doc.get(key).is_some() {
                *slot = doc.usize(key)?;
            }
            Ok(())
        };
        let p = &mut c.plant;
        f("plant.z0", &mut p.z0)?;
        f("plant.period", &mut p.period)?;
        f("plant.gravity", &mut p.gravity)?;
        f("plant.mass", &mut p.mass)?;
        f("plant.kp_z", &mut p.kp_z)?;
        f("plant.kd_z", &mut p.kd_z)?;
        n("plant.bezier_degree", &mut p.bezier_degree)?;
        f("plant.impact_loss", &mut p.impact_loss)?;
        if doc.get("plant.period").is_some() && doc.get("plant.dt").is_none() {
            p.dt = p.period / 400.0;
        }
        f("plant.dt", &mut p.dt)?;
        f("plant.nl_eps", &mut p.nl_eps)?;
        if doc.get("plant.perfect_height_hold").is_some() {
            p.perfect_height_hold = doc.bool("plant.perfect_height_hold")?;
        }
        f("plant.swing_tolerance", &mut p.swing_tolerance)?;
        f("gait.v_d", &mut c.v_d)?;
        if doc.get("sets.u").is_some() {
            let u = doc.floats_n("sets.u", 2)?;
            c.u_set = BoxSet::interval(u[0], u[1])?;
        }
        if doc.get("sets.x_lo").is_some() || doc.get("sets.x_hi").is_some() {
            let lo = match doc.get("sets.x_lo") {
                Some(_) => doc.floats_n("sets.x_lo", 2)?,
                None => c.x_set.lo().to_vec(),
            };
            let hi = match doc.get("sets.x_hi") {
                Some(_) => doc.floats_n("sets.x_hi", 2)?,
                None => c.x_set.hi().to_vec(),
            };
            c.x_set = BoxSet::new(lo, hi)?;
        }
        f("push.f_ext_max", &mut c.f_ext_max)?;
        if let Some(v) = doc.get("push.direction") {
            c.push_direction = PushDirection::parse(v)?;
        }
        f("push.force", &mut c.push_force)?;
        n("push.first_step", &mut c.push_first_step)?;
        n("push.count", &mut c.push_count)?;
        n("push.n_push", &mut c.n_push)?;
        n("sls.nf", &mut c.nf)?;
        match doc.get("sls.s0") {
            Some("auto") => {
                let inflation = match doc.get("sls.s0_inflation") {
                    Some(_) => doc.float("sls.s0_inflation")?,
                    None => 0.05,
                };
                c.s0 = S0Choice::Auto { inflation };
            }
            Some(_) => {
                if doc.get("sls.s0_inflation").is_some() {
                    return Err(Error::usage("sls.s0_inflation only applies to sls.s0 = auto"));
                }
                let h = doc.floats_n("sls.s0", 2)?;
                c.s0 = S0Choice::Fixed([h[0], h[1]]);
            }
            None => {
                if let (S0Choice::Auto { inflation }, true) = (&mut c.s0, doc.get("sls.s0_inflation").is_some()) {
                    *inflation = doc.float("sls.s0_inflation")?;
                }
            }
        }
        if doc.get("sls.q").is_some() {
            c.weights.q = doc.floats_n("sls.q", 2)?;
        }
        if doc.get("sls.r").is_some() {
            c.weights.r = doc.floats_n("sls.r", 1)?;
        }
        if doc.get("sls.running_windows").is_some() {
            c.running_windows = doc.bool("sls.running_windows")?;
        }
        f("sls.d_scale", &mut c.d_scale)?;
        if doc.get("data.velocity_grid").is_some() {
            c.velocity_grid = doc.floats("data.velocity_grid")?;
        }
        n("data.steps_per_velocity", &mut c.steps_per_velocity)?;
        f("data.dither", &mut c.dither)?;
        f("data.holdout", &mut c.holdout)?;
        if doc.get("baseline.lqr_q").is_some() {
            let q = doc.floats_n("baseline.lqr_q", 2)?;
            c.lqr_q = [q[0], q[1]];
        }
        f("baseline.lqr_r", &mut c.lqr_r)?;
        n("sim.steps", &mut c.sim_steps)?;
        if doc.get("seed").is_some() {
            c.seed = doc
                .require("seed")?
                .parse()
                .map_err(|_| Error::usage("seed must be a nonnegative integer"))?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Parses a config file. An optional `preset = amber|cassie` line picks
    /// the defaults that the remaining keys override.
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let base = match doc.get("preset") {
            None | Some("amber") => Self::amber(),
            Some("cassie") => Self::cassie(),
            Some(other) => return Err(Error::usage(format!("unknown preset `{other}`"))),
        };
        Self::parse_over(base, text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_kv().render("").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
