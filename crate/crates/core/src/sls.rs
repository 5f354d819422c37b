//! Constrained system-level synthesis of a finite-impulse-response stepping
//! controller on the error dynamics `e+ = A e + B u + w`.
//!
//! The closed loop is parameterized by its impulse response
//! `e_k = Σ_{i=1..N} Φx[i] w_{k-i}`, `u_k = Σ_{i=1..N} Φu[i] w_{k-i}`.
//! Robust box constraints are imposed through nonnegative multipliers
//! `H Φ = Λ G`, `Λ g <= h`, which keeps the whole synthesis a single LP.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus};
use crate::sets::BoxSet;
use crate::textfmt::{fmt_f64, KvDoc};

/// Per-index disturbance bounds `W[0..N]`.
///
/// `W[0]` bounds the initial error, `W[1]` the step that carries the push.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceProfile {
    sets: Vec<BoxSet>,
}

impl DisturbanceProfile {
    pub fn from_sets(sets: Vec<BoxSet>) -> Result<Self> {
        let first = sets.first().ok_or_else(|| Error::usage("empty disturbance profile"))?;
        if sets.iter().any(|s| s.dim() != first.dim()) {
            return Err(Error::usage("profile sets differ in dimension"));
        }
        Ok(Self { sets })
    }

    pub fn horizon(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[BoxSet] {
        &self.sets
    }

    pub fn dim(&self) -> usize {
        self.sets[0].dim()
    }
}

/// `[S0, Wext ⊕ D, D, ..., D]` of length `nf`.
pub fn build_profile(s0: &BoxSet, wext: &BoxSet, d: &BoxSet, nf: usize) -> Result<DisturbanceProfile> {
    if nf < 2 {
        return Err(Error::usage(format!("FIR horizon must be at least 2, got {nf}")));
    }
    let pushed = wext.minkowski_sum(d)?;
    let mut sets = vec![s0.clone(), pushed];
    sets.extend(std::iter::repeat_n(d.clone(), nf - 2));
    DisturbanceProfile::from_sets(sets)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlsWeights {
    /// per state row
    pub q: Vec<f64>,
    /// per input row
    pub r: Vec<f64>,
}

impl SlsWeights {
    pub fn uniform(n: usize, m: usize) -> Self {
        Self { q: vec![1.0; n], r: vec![1.0; m] }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisProblem<'a> {
    pub a: &'a DMatrix<f64>,
    pub b: &'a DMatrix<f64>,
    pub profile: &'a DisturbanceProfile,
    pub xe: &'a BoxSet,
    pub ue: &'a BoxSet,
    pub s0: &'a BoxSet,
    pub weights: &'a SlsWeights,
    /// Also constrain the free-running controller over every window of the
    /// last `N` disturbances holding at most one push: `u ∈ Ue` always, `e ∈ S0`
    /// once the push is at least `N - 1` steps old (or absent), `e ∈ Xe` before.
    pub running_windows: Option<RunningWindows<'a>>,
}

#[derive(Clone, Copy, Debug)]
pub struct RunningWindows<'a> {
    pub pushed: &'a BoxSet,
    pub residual: &'a BoxSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirController {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// `phi_x[i-1]` is `Φx[i]`
    pub phi_x: Vec<DMatrix<f64>>,
    pub phi_u: Vec<DMatrix<f64>>,
    pub weights: SlsWeights,
    pub objective: f64,
    /// SHA-256 of the model text the controller was synthesized on
    pub model_hash: String,
    pub config_hash: String,
}

impl FirController {
    pub fn horizon(&self) -> usize {
        self.phi_x.len()
    }

    pub fn n_state(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_input(&self) -> usize {
        self.b.ncols()
    }

    /// Largest violation of `Φx[1] = I`, the achievability recursion and FIR closure.
    pub fn structural_residual(&self) -> f64 {
        let n = self.n_state();
        let nf = self.horizon();
        let mut worst = (&self.phi_x[0] - DMatrix::<f64>::identity(n, n)).abs().max();
        for i in 0..nf {
            let next = &self.a * &self.phi_x[i] + &self.b * &self.phi_u[i];
            let target = if i + 1 < nf { self.phi_x[i + 1].clone() } else { DMatrix::zeros(n, n) };
            worst = worst.max((next - target).abs().max());
        }
        worst
    }

    pub fn to_text(&self) -> String {
        let mut doc = KvDoc::new();
        doc.set("nf", self.horizon().to_string());
        doc.set("dims", format!("{} {}", self.n_state(), self.n_input()));
        let flat = |ms: &[DMatrix<f64>]| -> Vec<f64> {
            ms.iter()
                .flat_map(|m| (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)])))
                .collect()
        };
        doc.set_floats("phi_x", &flat(&self.phi_x));
        doc.set_floats("phi_u", &flat(&self.phi_u));
        doc.set_floats("abar", &flat(std::slice::from_ref(&self.a)));
        doc.set_floats("bbar", &flat(std::slice::from_ref(&self.b)));
        doc.set("model_hash", self.model_hash.clone());
        doc.set("meta.config_hash", self.config_hash.clone());
        doc.set_floats("weights.q", &self.weights.q);
        doc.set_floats("weights.r", &self.weights.r);
        doc.set("objective", fmt_f64(self.objective));
        doc.render("FIR stepping controller: e_k = sum phi_x[i] w_{k-i}, u_k = sum phi_u[i] w_{k-i}; taps row-major")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let nf = doc.usize("nf")?;
        let dims = doc.floats_n("dims", 2)?;
        let (n, m) = (dims[0] as usize, dims[1] as usize);
        if nf == 0 || n == 0 || m == 0 {
            return Err(Error::Parse { line: 0, msg: "controller dimensions must be positive".into() });
        }
        let taps = |key: &str, rows: usize| -> Result<Vec<DMatrix<f64>>> {
            let v = doc.floats_n(key, nf * rows * n)?;
            Ok(v.chunks(rows * n).map(|c| DMatrix::from_row_slice(rows, n, c)).collect())
        };
        Ok(Self {
            a: DMatrix::from_row_slice(n, n, &doc.floats_n("abar", n * n)?),
            b: DMatrix::from_row_slice(n, m, &doc.floats_n("bbar", n * m)?),
            phi_x: taps("phi_x", n)?,
            phi_u: taps("phi_u", m)?,
            weights: SlsWeights {
                q: doc.floats_n("weights.q", n)?,
                r: doc.floats_n("weights.r", m)?,
            },
            objective: doc.float("objective")?,
            model_hash: doc.require("model_hash")?.to_string(),
            config_hash: doc.require("meta.config_hash")?.to_string(),
        })
    }
}

/// Column layout of the synthesis LP.
struct Layout {
    n: usize,
    m: usize,
    nf: usize,
    n_vars: usize,
}

impl Layout {
    fn new(n: usize, m: usize, nf: usize) -> Self {
        let per_tap = n * n + m * n;
        Self { n, m, nf, n_vars: 2 * nf * per_tap }
    }

    /// `Φx[tap](r, c)`, `tap` 1-based.
    fn phi_x(&self, tap: usize, r: usize, c: usize) -> usize {
        (tap - 1) * (self.n * self.n + self.m * self.n) + r * self.n + c
    }

    fn phi_u(&self, tap: usize, r: usize, c: usize) -> usize {
        (tap - 1) * (self.n * self.n + self.m * self.n) + self.n * self.n + r * self.n + c
    }

    /// `|·|` auxiliary of the same entry.
    fn abs_of(&self, var: usize) -> usize {
        self.nf * (self.n * self.n + self.m * self.n) + var
    }

    /// Row `row` of `[Φx; Φu][tap]` as an LP variable index per column.
    fn response_row(&self, tap: usize, row: usize, c: usize) -> usize {
        if row < self.n {
            self.phi_x(tap, row, c)
        } else {
            self.phi_u(tap, row - self.n, c)
        }
    }
}

/// Which constraint group a robust inequality belongs to, for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    State,
    Terminal,
    Input,
    Window,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::State => "state constraint e_i in Xe",
            Family::Terminal => "terminal constraint e_N in S0",
            Family::Input => "input constraint u_i in Ue",
            Family::Window => "running-window constraint",
        }
    }
}

struct Builder {
    lp: LpProblem,
    layout: Layout,
}

impl Builder {
    fn new_var(&mut self) -> usize {
        let j = self.lp.num_vars();
        self.lp.c.push(0.0);
        self.lp.bounds.push((0.0, f64::INFINITY));
        for row in self.lp.a_ub.iter_mut().chain(self.lp.a_eq.iter_mut()) {
            row.push(0.0);
        }
        j
    }

    /// Robust `row(response) · Σ_terms Φ[tap] w <= bound` for all `w ∈ set`:
    /// one multiplier vector per term with `row·Φ[tap] = λ G`, `Σ λ g <= bound`.
    fn robust_row(&mut self, response_row: usize, sign: f64, terms: &[(usize, &BoxSet)], bound: f64) {
        let n = self.layout.n;
        let mut budget: Vec<(usize, f64)> = Vec::new();
        for &(tap, set) in terms {
            let lam: Vec<usize> = (0..2 * n).map(|_| self.new_var()).collect();
            for c in 0..n {
                // sign * Φ[tap](row, c) - (λ_c - λ_{n+c}) = 0
                let phi = self.layout.response_row(tap, response_row, c);
                self.lp
                    .add_eq_sparse(&[(phi, sign), (lam[c], -1.0), (lam[n + c], 1.0)], 0.0);
                budget.push((lam[c], set.hi()[c]));
                budget.push((lam[n + c], -set.lo()[c]));
            }
        }
        self.lp.add_le_sparse(&budget, bound);
    }

    /// All faces of `e ∈ state_set` (if given) and `u ∈ input_set` for one scenario.
    fn robust_scenario(
        &mut self,
        terms: &[(usize, &BoxSet)],
        state_set: Option<&BoxSet>,
        input_set: Option<&BoxSet>,
    ) {
        let n = self.layout.n;
        if let Some(x) = state_set {
            for r in 0..n {
                self.robust_row(r, 1.0, terms, x.hi()[r]);
                self.robust_row(r, -1.0, terms, -x.lo()[r]);
            }
        }
        if let Some(u) = input_set {
            for r in 0..self.layout.m {
                self.robust_row(n + r, 1.0, terms, u.hi()[r]);
                self.robust_row(n + r, -1.0, terms, -u.lo()[r]);
            }
        }
    }
}

fn build_lp(p: &SynthesisProblem<'_>, skip: &[Family]) -> Result<LpProblem> {
    let n = p.a.nrows();
    let m = p.b.ncols();
    let nf = p.profile.horizon();
    if p.a.ncols() != n || p.b.nrows() != n || m == 0 {
        return Err(Error::usage("A must be square and B must have matching rows"));
    }
    if p.profile.dim() != n || p.xe.dim() != n || p.s0.dim() != n || p.ue.dim() != m {
        return Err(Error::usage("set dimensions do not match the model"));
    }
    if p.weights.q.len() != n || p.weights.r.len() != m {
        return Err(Error::usage("weight vector lengths do not match the model"));
    }
    if !p.s0.is_subset_of(p.xe, 0.0) {
        return Err(Error::usage("S0 must lie inside Xe"));
    }

    let layout = Layout::new(n, m, nf);
    let mut lp = LpProblem::new(layout.n_vars);
    for tap in 1..=nf {
        for r in 0..n {
            for c in 0..n {
                lp.set_free(layout.phi_x(tap, r, c));
            }
        }
        for r in 0..m {
            for c in 0..n {
                lp.set_free(layout.phi_u(tap, r, c));
            }
        }
    }
    let mut b = Builder { lp, layout };

    // |Φ| epigraph and weighted cost
    for tap in 1..=nf {
        let entries: Vec<(usize, f64)> = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| (b.layout.phi_x(tap, r, c), p.weights.q[r]))
            .chain(
                (0..m)
                    .flat_map(|r| (0..n).map(move |c| (r, c)))
                    .map(|(r, c)| (b.layout.phi_u(tap, r, c), p.weights.r[r])),
            )
            .collect();
        for (var, w) in entries {
            let t = b.layout.abs_of(var);
            b.lp.c[t] = w;
            b.lp.add_le_sparse(&[(var, 1.0), (t, -1.0)], 0.0);
            b.lp.add_le_sparse(&[(var, -1.0), (t, -1.0)], 0.0);
        }
    }

    // Φx[1] = I
    for r in 0..n {
        for c in 0..n {
            let rhs = if r == c { 1.0 } else { 0.0 };
            b.lp.add_eq_sparse(&[(b.layout.phi_x(1, r, c), 1.0)], rhs);
        }
    }
    // Φx[i+1] = A Φx[i] + B Φu[i], and A Φx[N] + B Φu[N] = 0
    for tap in 1..=nf {
        for r in 0..n {
            for c in 0..n {
                let mut terms = Vec::new();
                if tap < nf {
                    terms.push((b.layout.phi_x(tap + 1, r, c), 1.0));
                }
                for k in 0..n {
                    terms.push((b.layout.phi_x(tap, k, c), -p.a[(r, k)]));
                }
                for k in 0..m {
                    terms.push((b.layout.phi_u(tap, k, c), -p.b[(r, k)]));
                }
                b.lp.add_eq_sparse(&terms, 0.0);
            }
        }
    }

    // profile scenarios: time i sees w_j through Φ[i - j], j = 0..i-1
    let sets = p.profile.sets();
    for i in 1..=nf {
        let terms: Vec<(usize, &BoxSet)> = (0..i).map(|j| (i - j, &sets[j])).collect();
        let (state_set, family) = if i < nf { (p.xe, Family::State) } else { (p.s0, Family::Terminal) };
        let state = (!skip.contains(&family)).then_some(state_set);
        let input = (!skip.contains(&Family::Input)).then_some(p.ue);
        b.robust_scenario(&terms, state, input);
    }

    if let (Some(w), false) = (p.running_windows, skip.contains(&Family::Window)) {
        // push at window position `pos` (None: push-free)
        for pos in std::iter::once(None).chain((1..=nf).map(Some)) {
            let terms: Vec<(usize, &BoxSet)> = (1..=nf)
                .map(|l| (l, if Some(l) == pos { w.pushed } else { w.residual }))
                .collect();
            let state = match pos {
                Some(l) if l + 1 < nf => p.xe,
                _ => p.s0,
            };
            b.robust_scenario(&terms, Some(state), Some(p.ue));
        }
    }
    Ok(b.lp)
}

fn extract(p: &SynthesisProblem<'_>, x: &[f64], objective: f64) -> FirController {
    let n = p.a.nrows();
    let m = p.b.ncols();
    let nf = p.profile.horizon();
    let layout = Layout::new(n, m, nf);
    let mut phi_x: Vec<DMatrix<f64>> = (1..=nf)
        .map(|t| DMatrix::from_fn(n, n, |r, c| x[layout.phi_x(t, r, c)]))
        .collect();
    // pinned by an equality row; drop solver round-off
    phi_x[0] = DMatrix::identity(n, n);
    FirController {
        a: p.a.clone(),
        b: p.b.clone(),
        phi_x,
        phi_u: (1..=nf)
            .map(|t| DMatrix::from_fn(m, n, |r, c| x[layout.phi_u(t, r, c)]))
            .collect(),
        weights: p.weights.clone(),
        objective,
        model_hash: String::new(),
        config_hash: String::new(),
    }
}

/// Solves the synthesis LP. Infeasibility is reported as
/// [`Error::SynthesisInfeasible`] naming the first constraint family whose
/// removal restores feasibility.
pub fn synthesize(p: &SynthesisProblem<'_>) -> Result<FirController> {
    let lp = build_lp(p, &[])?;
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(extract(p, &sol.x, sol.objective)),
        LpStatus::Unbounded => Err(Error::numeric("synthesis LP is unbounded")),
        LpStatus::Infeasible => {
            let families = [Family::Input, Family::State, Family::Terminal, Family::Window];
            for f in families {
                let relaxed = build_lp(p, &[f])?;
                if lp::solve(&relaxed)?.status == LpStatus::Optimal {
                    return Err(Error::SynthesisInfeasible {
                        family: f.name().into(),
                        detail: format!("no FIR controller of horizon {} exists for these sets", p.profile.horizon()),
                    });
                }
            }
            Err(Error::SynthesisInfeasible {
                family: "combined".into(),
                detail: "infeasible even with any single constraint family removed".into(),
            })
        }
    }
}

/// Exposes the synthesis LP for debugging dumps.
pub fn synthesis_lp(p: &SynthesisProblem<'_>) -> Result<LpProblem> {
    build_lp(p, &[])
}

/// Runtime memory of the controller.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerState {
    /// `w_hat[k-1], w_hat[k-2], ...`, newest first, length `N`
    buffer: VecDeque<DVector<f64>>,
    prev_e: DVector<f64>,
    prev_u: DVector<f64>,
    initialized: bool,
}

impl ControllerState {
    pub fn buffer(&self) -> &VecDeque<DVector<f64>> {
        &self.buffer
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// The most recently reconstructed disturbance.
    pub fn last_w_hat(&self) -> &DVector<f64> {
        &self.buffer[0]
    }
}

pub fn controller_reset(c: &FirController) -> ControllerState {
    let n = c.n_state();
    ControllerState {
        buffer: std::iter::repeat_n(DVector::zeros(n), c.horizon()).collect(),
        prev_e: DVector::zeros(n),
        prev_u: DVector::zeros(c.n_input()),
        initialized: false,
    }
}

/// Consumes the current error and returns the input with the updated state.
///
/// The disturbance is reconstructed as `w_hat_k = e_k - Σ_{i>=2} Φx[i] w_hat_{k+1-i}`.
/// Under the achievability constraints this equals `e_k - A e_{k-1} - B u_{k-1}`,
/// so model residual and pushes are absorbed into `w_hat`, but rounding and
/// closure residuals are fed back instead of drifting along unstable modes of `A`.
/// The first call has empty history, so `w_hat_0 = e_0`.
pub fn controller_step(c: &FirController, s: &ControllerState, e: &DVector<f64>) -> (DVector<f64>, ControllerState) {
    let mut next = s.clone();
    let mut w_hat = e.clone();
    for (phi, w) in c.phi_x.iter().skip(1).zip(s.buffer.iter()) {
        w_hat -= phi * w;
    }
    next.buffer.pop_back();
    next.buffer.push_front(w_hat);
    let mut u = DVector::zeros(c.n_input());
    for (phi, w) in c.phi_u.iter().zip(next.buffer.iter()) {
        u += phi * w;
    }
    next.prev_e = e.clone();
    next.prev_u = u.clone();
    next.initialized = true;
    (u, next)
}

/// The model-based reconstruction `e_k - A e_{k-1} - B u_{k-1}` for diagnostics.
pub fn model_residual_w(c: &FirController, s: &ControllerState, e: &DVector<f64>) -> DVector<f64> {
    if s.initialized {
        e - &c.a * &s.prev_e - &c.b * &s.prev_u
    } else {
        e.clone()
    }
}

/// Worst-case margins over every vertex sequence of a profile.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustReport {
    pub passed: bool,
    /// `state_margins[i-1][r]`: smallest distance of `e_i` coordinate `r` to its bounds
    pub state_margins: Vec<Vec<f64>>,
    pub input_margins: Vec<Vec<f64>>,
    pub sequences_checked: usize,
    /// a disturbance sequence that violates some constraint
    pub violation: Option<Vec<Vec<f64>>>,
}

impl RobustReport {
    pub fn min_margin(&self) -> f64 {
        self.state_margins
            .iter()
            .chain(&self.input_margins)
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Rolls the closed loop out from a fresh controller along `w` and returns `(e_i, u_i)` for `i = 1..N`.
pub fn rollout(c: &FirController, w: &[DVector<f64>]) -> Vec<(DVector<f64>, DVector<f64>)> {
    let mut state = controller_reset(c);
    let mut e = w[0].clone();
    let mut out = Vec::with_capacity(w.len());
    for k in 0..w.len() {
        let (u, s) = controller_step(c, &state, &e);
        state = s;
        out.push((e.clone(), u.clone()));
        if k + 1 < w.len() {
            e = &c.a * &e + &c.b * &u + &w[k + 1];
        }
    }
    out
}

/// Enumerates every combination of profile vertices, rolls out the linear
/// closed loop and checks `e_i ∈ Xe` (`i < N`), `e_N ∈ S0`, `u_i ∈ Ue`.
pub fn verify_robust(
    c: &FirController,
    profile: &DisturbanceProfile,
    xe: &BoxSet,
    ue: &BoxSet,
    s0: &BoxSet,
) -> Result<RobustReport> {
    const TOL: f64 = 1e-9;
    let nf = profile.horizon();
    if nf != c.horizon() {
        return Err(Error::usage("profile length differs from controller horizon"));
    }
    let verts: Vec<Vec<Vec<f64>>> = profile.sets().iter().map(|s| s.vertices()).collect::<Result<_>>()?;
    let total: usize = verts.iter().map(|v| v.len()).product();
    let mut state_margins = vec![vec![f64::INFINITY; c.n_state()]; nf];
    let mut input_margins = vec![vec![f64::INFINITY; c.n_input()]; nf];
    let mut violation = None;
    let mut idx = vec![0usize; nf];
    for _ in 0..total {
        let w: Vec<DVector<f64>> = (0..nf).map(|j| DVector::from_vec(verts[j][idx[j]].clone())).collect();
        let mut bad = false;
        for (i, (e, u)) in rollout(c, &w).iter().enumerate() {
            let set = if i + 1 < nf { xe } else { s0 };
            for (r, mg) in set.margins(e.as_slice()).into_iter().enumerate() {
                state_margins[i][r] = state_margins[i][r].min(mg);
                bad |= mg < -TOL;
            }
            for (r, mg) in ue.margins(u.as_slice()).into_iter().enumerate() {
                input_margins[i][r] = input_margins[i][r].min(mg);
                bad |= mg < -TOL;
            }
        }
        if bad && violation.is_none() {
            violation = Some(w.iter().map(|v| v.as_slice().to_vec()).collect());
        }
        // odometer over vertex indices
        for j in 0..nf {
            idx[j] += 1;
            if idx[j] < verts[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(RobustReport {
        passed: violation.is_none(),
        state_margins,
        input_margins,
        sequences_checked: total,
        violation,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Machine-readable record of the finite-step recovery guarantee's hypotheses.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub hypotheses: Vec<Hypothesis>,
    pub report: Option<RobustReport>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.hypotheses.iter().all(|h| h.passed)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.hypotheses.iter().filter(|h| !h.passed).map(|h| h.name).collect()
    }

    pub fn to_text(&self) -> String {
        let mut doc = KvDoc::new();
        doc.set("passed", self.passed().to_string());
        for h in &self.hypotheses {
            let key = h.name.replace('≤', "le").replace('⊆', "in").replace(' ', "_");
            doc.set(&format!("hypothesis.{key}"), format!("{} {}", h.passed, h.detail));
        }
        if let Some(r) = &self.report {
            doc.set("sequences_checked", r.sequences_checked.to_string());
            for (i, m) in r.state_margins.iter().enumerate() {
                doc.set_floats(&format!("margin.state.{}", i + 1), m);
            }
            for (i, m) in r.input_margins.iter().enumerate() {
                doc.set_floats(&format!("margin.input.{}", i + 1), m);
            }
        }
        doc.render("finite-step push recovery certificate")
    }
}

/// Checks: synthesis feasible, `N_F <= N_push`, `S0 ⊆ Xe`, vertex verification passes.
pub fn theorem1_certificate(
    synthesis: std::result::Result<&FirController, &Error>,
    profile: &DisturbanceProfile,
    s0: &BoxSet,
    xe: &BoxSet,
    ue: &BoxSet,
    nf: usize,
    n_push: usize,
) -> Certificate {
    let mut hypotheses = Vec::new();
    hypotheses.push(Hypothesis {
        name: "synthesis feasible",
        passed: synthesis.is_ok(),
        detail: match &synthesis {
            Ok(c) => format!("objective {}", fmt_f64(c.objective)),
            Err(e) => e.to_string(),
        },
    });
    hypotheses.push(Hypothesis {
        name: "N_F ≤ N_push",
        passed: nf <= n_push,
        detail: format!("N_F={nf} N_push={n_push}"),
    });
    hypotheses.push(Hypothesis {
        name: "S0 ⊆ Xe",
        passed: s0.is_subset_of(xe, 0.0),
        detail: format!("S0={:?}x{:?} Xe={:?}x{:?}", s0.lo(), s0.hi(), xe.lo(), xe.hi()),
    });
    let report = synthesis
        .ok()
        .filter(|c| c.horizon() == profile.horizon())
        .and_then(|c| verify_robust(c, profile, xe, ue, s0).ok());
    hypotheses.push(Hypothesis {
        name: "vertex verification",
        passed: report.as_ref().is_some_and(|r| r.passed),
        detail: report
            .as_ref()
            .map_or("not run".into(), |r| format!("{} sequences, min margin {}", r.sequences_checked, fmt_f64(r.min_margin()))),
    });
    Certificate { hypotheses, report }
}
