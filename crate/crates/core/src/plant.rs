//! Synthetic planar walker used as ground truth.
//!
//! The COM rides on a massless telescoping stance leg. Leg force is chosen by
//! a PD height regulator that assumes a vertical leg, so the realized height
//! sags with the leg angle and the step-to-step map of `(p, v)` is nonlinear.
//! Impacts are time-based at `t_phase = T`; the swing foot follows its Bézier
//! reference exactly.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hlip::{DiscreteState, HlipParams};

#[derive(Clone, Debug, PartialEq)]
pub struct PlantConfig {
    /// target COM height (m)
    pub z0: f64,
    /// step duration (s)
    pub period: f64,
    pub gravity: f64,
    pub mass: f64,
    pub kp_z: f64,
    pub kd_z: f64,
    pub bezier_degree: usize,
    /// fraction of horizontal velocity kept through impact
    pub impact_loss: f64,
    pub dt: f64,
    /// amplitude of the periodic height excitation, in units of g
    pub nl_eps: f64,
    /// pin `z = z0` exactly, reducing the flow to the linear pendulum
    pub perfect_height_hold: bool,
    /// allowed `|u_real - u_cmd|` (m)
    pub swing_tolerance: f64,
}

impl PlantConfig {
    /// Plant defaults for a given gait; `dt = T / 400`.
    pub fn for_gait(z0: f64, period: f64, mass: f64) -> Self {
        Self {
            z0,
            period,
            gravity: crate::hlip::GRAVITY,
            mass,
            kp_z: 100.0,
            kd_z: 20.0,
            bezier_degree: 5,
            impact_loss: 0.97,
            dt: period / 400.0,
            nl_eps: 0.05,
            perfect_height_hold: false,
            swing_tolerance: 1e-6,
        }
    }

    /// The idealized plant whose step map is exactly the H-LIP one.
    pub fn linear_limit(mut self) -> Self {
        self.nl_eps = 0.0;
        self.impact_loss = 1.0;
        self.perfect_height_hold = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.hlip().validate()?;
        if !(self.dt > 0.0 && self.dt <= self.period / 10.0) {
            return Err(Error::usage("plant dt must lie in (0, T/10]"));
        }
        if !(self.impact_loss > 0.0 && self.impact_loss <= 1.0) {
            return Err(Error::usage("impact_loss must lie in (0, 1]"));
        }
        if self.bezier_degree < 3 {
            return Err(Error::usage("bezier_degree must be at least 3"));
        }
        if !(self.swing_tolerance >= 0.0) {
            return Err(Error::usage("swing_tolerance must be nonnegative"));
        }
        for (name, v) in [("kp_z", self.kp_z), ("kd_z", self.kd_z), ("nl_eps", self.nl_eps)] {
            if !v.is_finite() {
                return Err(Error::usage(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn hlip(&self) -> HlipParams {
        HlipParams {
            z0: self.z0,
            period: self.period,
            gravity: self.gravity,
            mass: self.mass,
        }
    }

    fn substeps(&self) -> usize {
        (self.period / self.dt).round().max(1.0) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantState {
    /// horizontal COM position relative to the stance foot (m)
    pub x: f64,
    pub z: f64,
    pub vx: f64,
    pub vz: f64,
    /// swing foot position relative to the stance foot (m)
    pub swing_x: f64,
    pub t_phase: f64,
    pub stance_world_x: f64,
}

impl PlantState {
    /// Upright at rest over the stance foot, feet together, at the start of a step.
    pub fn standstill(cfg: &PlantConfig) -> Self {
        Self {
            x: 0.0,
            z: cfg.z0,
            vx: 0.0,
            vz: 0.0,
            swing_x: 0.0,
            t_phase: 0.0,
            stance_world_x: 0.0,
        }
    }

    pub fn horizontal(&self) -> DiscreteState {
        DiscreteState::new(self.x, self.vx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    /// pre-impact horizontal COM state
    pub x_pre: DiscreteState,
    pub u_cmd: f64,
    pub u_real: f64,
    /// horizontal push held over the whole step (N)
    pub push_force: f64,
    pub duration: f64,
}

/// Continuous-time sample for plotting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    pub time: f64,
    pub x: f64,
    pub vx: f64,
    pub z: f64,
}

/// The walker fell (COM dropped below 10% of the nominal height, or the state blew up).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FallEvent {
    pub t_phase: f64,
    pub state: PlantState,
}

/// Something that picks the step size.
pub trait StepController {
    fn name(&self) -> &str;

    /// Desired step size given the current horizontal COM state `t_phase` into the step.
    fn command(&self, x: DiscreteState, t_phase: f64) -> f64;

    /// Called once per step at impact with the realized pre-impact state and step size.
    fn commit(&mut self, x_pre: DiscreteState, u_real: f64);
}

/// Open-loop constant step size.
#[derive(Clone, Debug)]
pub struct ConstantStep(pub f64);

impl StepController for ConstantStep {
    fn name(&self) -> &str {
        "constant"
    }

    fn command(&self, _x: DiscreteState, _t_phase: f64) -> f64 {
        self.0
    }

    fn commit(&mut self, _x_pre: DiscreteState, _u_real: f64) {}
}

/// Bernstein-form transition from 0 to 1 over `[0, T]` with zero end slopes.
///
/// Coefficients are `[0, 0, 1/(d-2), ..., (d-3)/(d-2), 1, 1]`. Returns the
/// value and whether `t` had to be clamped into range.
pub fn bezier_transition(t: f64, period: f64, degree: usize) -> (f64, bool) {
    let clamped = !(0.0..=period).contains(&t);
    let s = (t / period).clamp(0.0, 1.0);
    let d = degree.max(3);
    let coeff = |i: usize| -> f64 {
        if i <= 1 {
            0.0
        } else if i >= d - 1 {
            1.0
        } else {
            (i - 1) as f64 / (d - 2) as f64
        }
    };
    let mut value = 0.0;
    let mut binom = 1.0;
    for i in 0..=d {
        if i > 0 {
            binom = binom * (d - i + 1) as f64 / i as f64;
        }
        value += coeff(i) * binom * s.powi(i as i32) * (1.0 - s).powi((d - i) as i32);
    }
    (value, clamped)
}

/// `(1 - c(t)) x_sw_plus + c(t) u`.
pub fn desired_swing_x(x_sw_plus: f64, u: f64, t: f64, cfg: &PlantConfig) -> f64 {
    let (c, _) = bezier_transition(t, cfg.period, cfg.bezier_degree);
    if c == 1.0 {
        return u;
    }
    (1.0 - c) * x_sw_plus + c * u
}

type Continuous = [f64; 4]; // x, z, vx, vz

fn derivative(s: &Continuous, t_phase: f64, force: f64, cfg: &PlantConfig) -> Continuous {
    let [x, z, vx, vz] = *s;
    let g = cfg.gravity;
    let zdd = if cfg.perfect_height_hold {
        0.0
    } else {
        let cmd = cfg.kp_z * (cfg.z0 - z) - cfg.kd_z * vz + cfg.nl_eps * (2.0 * PI * t_phase / cfg.period).sin() * g;
        let r = (x * x + z * z).sqrt();
        (cmd + g) * z / r - g
    };
    let xdd = x / z * (zdd + g) + force / cfg.mass;
    if cfg.perfect_height_hold {
        [vx, 0.0, xdd, 0.0]
    } else {
        [vx, vz, xdd, zdd]
    }
}

fn rk4_step(s: &Continuous, t: f64, h: f64, force: f64, cfg: &PlantConfig) -> Continuous {
    let add = |a: &Continuous, b: &Continuous, k: f64| -> Continuous {
        [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2], a[3] + k * b[3]]
    };
    let k1 = derivative(s, t, force, cfg);
    let k2 = derivative(&add(s, &k1, 0.5 * h), t + 0.5 * h, force, cfg);
    let k3 = derivative(&add(s, &k2, 0.5 * h), t + 0.5 * h, force, cfg);
    let k4 = derivative(&add(s, &k3, h), t + h, force, cfg);
    let mut out = *s;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates one full step from the start of single support through impact.
///
/// `command` is queried after every integrator substep with the current
/// horizontal state and phase time; the swing foot tracks the latest answer.
/// Returns the post-impact state of the next step and the step's record.
pub fn integrate_step(
    s0: &PlantState,
    k: usize,
    command: &mut dyn FnMut(DiscreteState, f64) -> f64,
    push_force: f64,
    cfg: &PlantConfig,
    mut trace: Option<&mut Vec<TraceSample>>,
    time_offset: f64,
) -> std::result::Result<(PlantState, StepRecord), FallEvent> {
    let n = cfg.substeps();
    let h = cfg.period / n as f64;
    let mut s: Continuous = [s0.x, s0.z, s0.vx, s0.vz];
    if cfg.perfect_height_hold {
        s[1] = cfg.z0;
        s[3] = 0.0;
    }
    let swing_start = s0.swing_x;
    let mut u_cmd = command(DiscreteState::new(s[0], s[2]), 0.0);
    let mut swing_x = swing_start;
    if let Some(tr) = trace.as_deref_mut() {
        tr.push(TraceSample { time: time_offset, x: s[0], vx: s[2], z: s[1] });
    }
    for i in 0..n {
        let t = i as f64 * h;
        s = rk4_step(&s, t, h, push_force, cfg);
        let t_next = if i + 1 == n { cfg.period } else { (i + 1) as f64 * h };
        let fell = !s.iter().all(|v| v.is_finite()) || s[1] <= 0.1 * cfg.z0;
        if fell {
            return Err(FallEvent {
                t_phase: t_next,
                state: PlantState {
                    x: s[0],
                    z: s[1],
                    vx: s[2],
                    vz: s[3],
                    swing_x,
                    t_phase: t_next,
                    stance_world_x: s0.stance_world_x,
                },
            });
        }
        u_cmd = command(DiscreteState::new(s[0], s[2]), t_next);
        swing_x = desired_swing_x(swing_start, u_cmd, t_next, cfg);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TraceSample { time: time_offset + t_next, x: s[0], vx: s[2], z: s[1] });
        }
    }

    let x_pre = DiscreteState::new(s[0], s[2]);
    let u_real = swing_x;
    let record = StepRecord {
        k,
        x_pre,
        u_cmd,
        u_real,
        push_force,
        duration: cfg.period,
    };
    let next = PlantState {
        x: s[0] - u_real,
        z: s[1],
        vx: cfg.impact_loss * s[2],
        vz: s[3],
        swing_x: -u_real,
        t_phase: 0.0,
        stance_world_x: s0.stance_world_x + u_real,
    };
    Ok((next, record))
}

/// Pushes keyed by step index, at least `min_spacing` steps apart.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PushSchedule {
    pushes: Vec<(usize, f64)>,
}

impl PushSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(mut pushes: Vec<(usize, f64)>, min_spacing: usize) -> Result<Self> {
        pushes.sort_by_key(|p| p.0);
        for (i, &(k, f)) in pushes.iter().enumerate() {
            if k < 1 {
                return Err(Error::usage("push step indices start at 1"));
            }
            if !f.is_finite() {
                return Err(Error::usage("push force must be finite"));
            }
            if i > 0 && k - pushes[i - 1].0 < min_spacing {
                return Err(Error::usage(format!(
                    "pushes at steps {} and {k} are closer than {min_spacing} steps",
                    pushes[i - 1].0
                )));
            }
        }
        Ok(Self { pushes })
    }

    pub fn force_at(&self, k: usize) -> f64 {
        self.pushes
            .iter()
            .find(|p| p.0 == k)
            .map_or(0.0, |p| p.1)
    }

    pub fn pushes(&self) -> &[(usize, f64)] {
        &self.pushes
    }

    pub fn is_pushed(&self, k: usize) -> bool {
        self.pushes.iter().any(|p| p.0 == k)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlantEpisode {
    pub steps: Vec<StepRecord>,
    pub fell: bool,
    pub trace: Vec<TraceSample>,
}

/// Walks `n_steps` steps from `initial`, applying pushes from the schedule.
pub fn run_episode(
    cfg: &PlantConfig,
    controller: &mut dyn StepController,
    n_steps: usize,
    pushes: &PushSchedule,
    initial: PlantState,
    record_trace: bool,
) -> Result<PlantEpisode> {
    cfg.validate()?;
    let mut episode = PlantEpisode::default();
    let mut state = initial;
    for k in 0..n_steps {
        let force = pushes.force_at(k);
        let trace = record_trace.then_some(&mut episode.trace);
        let time = k as f64 * cfg.period;
        let ctrl = &*controller;
        let mut cb = |x: DiscreteState, t: f64| ctrl.command(x, t);
        match integrate_step(&state, k, &mut cb, force, cfg, trace, time) {
            Ok((next, record)) => {
                if (record.u_real - record.u_cmd).abs() > cfg.swing_tolerance {
                    return Err(Error::numeric(format!(
                        "swing tracking missed by {} m at step {k}",
                        (record.u_real - record.u_cmd).abs()
                    )));
                }
                controller.commit(record.x_pre, record.u_real);
                episode.steps.push(record);
                state = next;
            }
            Err(_) => {
                episode.fell = true;
                break;
            }
        }
    }
    Ok(episode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hlip::{push_to_disturbance, s2s_matrices};
    use nalgebra::Vector2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn amber() -> PlantConfig {
        PlantConfig::for_gait(0.7, 0.4, 20.0)
    }

    #[test]
    fn bezier_endpoints_midpoint_and_slopes() {
        for d in [3, 5, 7] {
            assert_eq!(bezier_transition(0.0, 0.4, d).0, 0.0);
            assert!((bezier_transition(0.4, 0.4, d).0 - 1.0).abs() < 1e-15);
        }
        assert!((bezier_transition(0.2, 0.4, 5).0 - 0.5).abs() < 1e-15);
        let h = 1e-9;
        let s0 = (bezier_transition(h, 0.4, 5).0 - bezier_transition(0.0, 0.4, 5).0) / h;
        let s1 = (bezier_transition(0.4, 0.4, 5).0 - bezier_transition(0.4 - h, 0.4, 5).0) / h;
        assert!(s0.abs() < 1e-6 && s1.abs() < 1e-6);
        let mut prev = 0.0;
        for i in 0..=100 {
            let c = bezier_transition(0.004 * i as f64, 0.4, 6).0;
            assert!(c >= prev - 1e-15);
            prev = c;
        }
        let (c, clamped) = bezier_transition(0.5, 0.4, 5);
        assert!(clamped && c == 1.0);
    }

    #[test]
    fn swing_reference() {
        let cfg = amber();
        assert_eq!(desired_swing_x(-0.3, 0.4, 0.0, &cfg), -0.3);
        assert_eq!(desired_swing_x(-0.3, 0.4, 0.4, &cfg), 0.4);
        assert!((desired_swing_x(-0.3, 0.4, 0.2, &cfg) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rest_is_preserved() {
        let mut cfg = amber();
        cfg.nl_eps = 0.0;
        cfg.impact_loss = 1.0;
        let s0 = PlantState::standstill(&cfg);
        let (_, rec) = integrate_step(&s0, 0, &mut |_, _| 0.0, 0.0, &cfg, None, 0.0).unwrap();
        assert_eq!(rec.x_pre, DiscreteState::default());
    }

    fn one_step(cfg: &PlantConfig, x0: Vector2<f64>, u: f64, force: f64) -> Vector2<f64> {
        // post-impact state that the previous pre-impact x0 and step u produce
        let s = PlantState {
            x: x0[0] - u,
            z: cfg.z0,
            vx: x0[1],
            vz: 0.0,
            swing_x: -u,
            t_phase: 0.0,
            stance_world_x: 0.0,
        };
        let (_, rec) = integrate_step(&s, 0, &mut |_, _| 0.3, force, cfg, None, 0.0).unwrap();
        rec.x_pre.to_vector()
    }

    #[test]
    fn linear_limit_matches_hlip_map() {
        let cfg = amber().linear_limit();
        let (a, b) = s2s_matrices(&cfg.hlip());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x0 = Vector2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-1.5..1.5));
            let u: f64 = rng.gen_range(-0.6..0.6);
            let got = one_step(&cfg, x0, u, 0.0);
            assert!((got - (a * x0 + b * u)).abs().max() < 1e-6);
        }
    }

    #[test]
    fn push_shift_matches_disturbance_map() {
        let cfg = amber().linear_limit();
        let x0 = Vector2::new(0.15, 0.9);
        let diff = one_step(&cfg, x0, 0.35, 50.0) - one_step(&cfg, x0, 0.35, 0.0);
        assert!((diff - push_to_disturbance(50.0, &cfg.hlip())).abs().max() < 1e-6);
    }

    #[test]
    fn orbital_energy_conserved_in_linear_limit() {
        let cfg = amber().linear_limit();
        let l2 = cfg.hlip().lambda().powi(2);
        let s0 = PlantState { x: -0.2, vx: 0.9, ..PlantState::standstill(&cfg) };
        let mut trace = Vec::new();
        integrate_step(&s0, 0, &mut |_, _| 0.4, 0.0, &cfg, Some(&mut trace), 0.0).unwrap();
        let e0 = trace[0].vx.powi(2) - l2 * trace[0].x.powi(2);
        for s in &trace {
            let e = s.vx.powi(2) - l2 * s.x.powi(2);
            assert!(((e - e0) / e0).abs() < 1e-6);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let base = amber();
        let s0 = PlantState { x: -0.2, vx: 0.8, ..PlantState::standstill(&base) };
        let run = |n: usize| {
            let mut cfg = base.clone();
            cfg.dt = cfg.period / n as f64;
            let (_, rec) = integrate_step(&s0, 0, &mut |_, _| 0.4, 30.0, &cfg, None, 0.0).unwrap();
            rec.x_pre.to_vector()
        };
        let reference = run(12_800);
        let ns = [20usize, 40, 80, 160];
        let errs: Vec<f64> = ns.iter().map(|&n| (run(n) - reference).norm()).collect();
        let xs: Vec<f64> = ns.iter().map(|&n| (base.period / n as f64).ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let mx = xs.iter().sum::<f64>() / 4.0;
        let my = ys.iter().sum::<f64>() / 4.0;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope - 4.0).abs() <= 0.3, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn swing_tracks_command_exactly() {
        let cfg = amber();
        let s0 = PlantState::standstill(&cfg);
        let mut cb = |x: DiscreteState, t: f64| 0.3 + 0.2 * x.v + 0.1 * t;
        let (next, rec) = integrate_step(&s0, 0, &mut cb, 0.0, &cfg, None, 0.0).unwrap();
        assert!((rec.u_real - rec.u_cmd).abs() <= 1e-12);
        assert_eq!(next.swing_x, -rec.u_real);
        assert_eq!(next.stance_world_x, rec.u_real);
    }

    #[test]
    fn fall_is_flagged() {
        let mut cfg = amber();
        cfg.kp_z = 0.0;
        cfg.kd_z = 0.0;
        cfg.nl_eps = 0.0;
        // leg nearly horizontal: vertical support collapses
        let s0 = PlantState { x: 3.0, vx: 3.0, ..PlantState::standstill(&cfg) };
        assert!(integrate_step(&s0, 0, &mut |_, _| 0.0, 0.0, &cfg, None, 0.0).is_err());
    }

    #[test]
    fn episode_guards_and_iteration() {
        let cfg = amber().linear_limit();
        let mut c = ConstantStep(0.0);
        let ep = run_episode(&cfg, &mut c, 0, &PushSchedule::none(), PlantState::standstill(&cfg), false).unwrap();
        assert!(ep.steps.is_empty());
        assert!(PushSchedule::new(vec![(3, 10.0), (6, 10.0)], 8).is_err());
        assert!(PushSchedule::new(vec![(0, 10.0)], 8).is_err());
        assert!(PushSchedule::new(vec![(3, 10.0), (11, 10.0)], 8).is_ok());

        // open-loop constant step from a moving start follows the H-LIP recursion
        let (a, b) = s2s_matrices(&cfg.hlip());
        let start = PlantState { x: -0.1, vx: 0.3, ..PlantState::standstill(&cfg) };
        let mut c = ConstantStep(0.12);
        let ep = run_episode(&cfg, &mut c, 4, &PushSchedule::none(), start, false).unwrap();
        let mut x = ep.steps[0].x_pre.to_vector();
        for rec in &ep.steps[1..] {
            x = a * x + b * 0.12;
            assert!((rec.x_pre.to_vector() - x).abs().max() < 1e-6 * (1.0 + x.abs().max()));
        }
    }
}
