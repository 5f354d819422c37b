//! Learned linear step-to-step model `x+ = Ā x + B̄ u + C̄ + ε`, fitted by
//! L∞ (Chebyshev) regression so that the residual bound `d*` is as small as
//! possible, plus the periodic orbits of the fitted map.

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hlip::DiscreteState;
use crate::lp::{self, LpProblem, LpStatus};
use crate::plant::PlantEpisode;
use crate::sets::BoxSet;
use crate::textfmt::KvDoc;

/// One observed step: pre-impact state, step size, next pre-impact state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triple {
    pub x: DiscreteState,
    pub u: f64,
    pub next: DiscreteState,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepDataset {
    pub triples: Vec<Triple>,
    /// config hash and seed of the run that produced the data
    pub provenance: String,
}

impl StepDataset {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Deterministic shuffle-and-split; the second part holds `fraction` of the triples.
    pub fn split_holdout(&self, fraction: f64, seed: u64) -> (StepDataset, StepDataset) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_hold = ((self.len() as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
        let (hold, train) = idx.split_at(n_hold);
        let mut train: Vec<usize> = train.to_vec();
        let mut hold: Vec<usize> = hold.to_vec();
        train.sort_unstable();
        hold.sort_unstable();
        let pick = |ids: &[usize]| StepDataset {
            triples: ids.iter().map(|&i| self.triples[i]).collect(),
            provenance: self.provenance.clone(),
        };
        (pick(&train), pick(&hold))
    }
}

/// Consecutive-step triples from undisturbed walking.
///
/// A transition is dropped when either of its steps carried a push. Episodes
/// are never paired across their boundaries.
pub fn extract_dataset(episodes: &[PlantEpisode], provenance: &str) -> Result<StepDataset> {
    if episodes.iter().any(|e| e.fell) {
        return Err(Error::usage("training logs must not contain falls"));
    }
    let steps: usize = episodes.iter().map(|e| e.steps.len()).sum();
    if steps < 10 {
        return Err(Error::usage(format!("need at least 10 completed steps, got {steps}")));
    }
    let triples = episodes
        .iter()
        .flat_map(|e| e.steps.windows(2))
        .filter(|w| w[0].push_force == 0.0 && w[1].push_force == 0.0)
        .map(|w| Triple {
            x: w[0].x_pre,
            u: w[0].u_real,
            next: w[1].x_pre,
        })
        .collect();
    Ok(StepDataset {
        triples,
        provenance: provenance.to_string(),
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelMeta {
    pub config_hash: String,
    pub dataset_size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct S2SModel {
    pub abar: Matrix2<f64>,
    pub bbar: Vector2<f64>,
    pub cbar: Vector2<f64>,
    /// per-coordinate residual bound (m, m/s)
    pub dstar: Vector2<f64>,
    pub meta: ModelMeta,
}

impl S2SModel {
    pub fn new(abar: Matrix2<f64>, bbar: Vector2<f64>, cbar: Vector2<f64>) -> Self {
        Self {
            abar,
            bbar,
            cbar,
            dstar: Vector2::zeros(),
            meta: ModelMeta::default(),
        }
    }

    pub fn predict(&self, x: DiscreteState, u: f64) -> DiscreteState {
        DiscreteState::from_vector(&(self.abar * x.to_vector() + self.bbar * u + self.cbar))
    }

    pub fn residual(&self, t: &Triple) -> Vector2<f64> {
        t.next.to_vector() - self.predict(t.x, t.u).to_vector()
    }

    /// `D = [-d*_1, d*_1] x [-d*_2, d*_2]`.
    pub fn residual_box(&self) -> BoxSet {
        BoxSet::symmetric(&[self.dstar[0], self.dstar[1]]).expect("d* is nonnegative")
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut doc = KvDoc::new();
        let a = &self.abar;
        doc.set_floats("abar", &[a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]]);
        doc.set_floats("bbar", self.bbar.as_slice());
        doc.set_floats("cbar", self.cbar.as_slice());
        doc.set_floats("dstar", self.dstar.as_slice());
        doc.set("meta.config_hash", self.meta.config_hash.clone());
        doc.set("meta.dataset_size", self.meta.dataset_size.to_string());
        doc
    }

    pub fn to_text(&self) -> String {
        self.to_kv().render("learned step-to-step model: x+ = abar x + bbar u + cbar, |residual| <= dstar")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let a = doc.floats_n("abar", 4)?;
        let b = doc.floats_n("bbar", 2)?;
        let c = doc.floats_n("cbar", 2)?;
        let d = doc.floats_n("dstar", 2)?;
        if d.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Parse { line: 0, msg: "dstar must be nonnegative".into() });
        }
        Ok(Self {
            abar: Matrix2::new(a[0], a[1], a[2], a[3]),
            bbar: Vector2::new(b[0], b[1]),
            cbar: Vector2::new(c[0], c[1]),
            dstar: Vector2::new(d[0], d[1]),
            meta: ModelMeta {
                config_hash: doc.get("meta.config_hash").unwrap_or_default().to_string(),
                dataset_size: doc.usize("meta.dataset_size").unwrap_or(0),
            },
        })
    }
}

/// Rows `[p, v, u, 1]` of the regressor, one per triple.
fn regressor(data: &StepDataset) -> DMatrix<f64> {
    DMatrix::from_fn(data.len(), 4, |i, j| {
        let t = &data.triples[i];
        [t.x.p, t.x.v, t.u, 1.0][j]
    })
}

fn check_rank(data: &StepDataset) -> Result<()> {
    if data.len() < 9 {
        return Err(Error::usage(format!("L-infinity fit needs at least 9 triples, got {}", data.len())));
    }
    if data
        .triples
        .iter()
        .any(|t| !(t.x.is_finite() && t.next.is_finite() && t.u.is_finite()))
    {
        return Err(Error::usage("dataset contains non-finite entries"));
    }
    let sv = regressor(data).svd(false, false).singular_values;
    if !(sv.min() > 1e-9 * sv.max()) {
        return Err(Error::usage("regressors [p, v, u, 1] are rank deficient"));
    }
    Ok(())
}

/// Minimizes `d_1 + d_2` subject to `-d <= o_k q - x_{k+1} <= d` for every triple.
///
/// Variables are `q = [Ā11, Ā12, Ā21, Ā22, B̄1, B̄2, C̄1, C̄2]` (free) and `d >= 0`.
pub fn fit_linf(data: &StepDataset) -> Result<S2SModel> {
    check_rank(data)?;
    let mut lp = LpProblem::new(10);
    for j in 0..8 {
        lp.set_free(j);
    }
    lp.c[8] = 1.0;
    lp.c[9] = 1.0;
    for t in &data.triples {
        let target = [t.next.p, t.next.v];
        for (r, &y) in target.iter().enumerate() {
            // o_k row r: a_r1 p + a_r2 v + b_r u + c_r
            let terms = [(2 * r, t.x.p), (2 * r + 1, t.x.v), (4 + r, t.u), (6 + r, 1.0)];
            let mut up: Vec<(usize, f64)> = terms.to_vec();
            up.push((8 + r, -1.0));
            lp.add_le_sparse(&up, y);
            let mut down: Vec<(usize, f64)> = terms.iter().map(|&(j, v)| (j, -v)).collect();
            down.push((8 + r, -1.0));
            lp.add_le_sparse(&down, -y);
        }
    }
    let sol = lp::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::numeric(format!("L-infinity fit LP ended {:?}", sol.status)));
    }
    let q = &sol.x;
    Ok(S2SModel {
        abar: Matrix2::new(q[0], q[1], q[2], q[3]),
        bbar: Vector2::new(q[4], q[5]),
        cbar: Vector2::new(q[6], q[7]),
        dstar: Vector2::new(q[8].max(0.0), q[9].max(0.0)),
        meta: ModelMeta {
            config_hash: String::new(),
            dataset_size: data.len(),
        },
    })
}

/// Largest absolute residual per coordinate.
pub fn max_abs_residual(model: &S2SModel, data: &StepDataset) -> Vector2<f64> {
    data.triples.iter().fold(Vector2::zeros(), |acc, t| {
        let r = model.residual(t).abs();
        Vector2::new(acc[0].max(r[0]), acc[1].max(r[1]))
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrbitSpec {
    /// one step per cycle
    P1 { v_d: f64, u_star: f64, x_star: DiscreteState },
    /// two steps per cycle, left then right
    P2 {
        v_d: f64,
        u_left: f64,
        u_right: f64,
        x_left: DiscreteState,
        x_right: DiscreteState,
    },
}

impl OrbitSpec {
    pub fn period(&self) -> usize {
        match self {
            OrbitSpec::P1 { .. } => 1,
            OrbitSpec::P2 { .. } => 2,
        }
    }
}

fn invert(m: Matrix2<f64>, what: &str) -> Result<Matrix2<f64>> {
    let det = m.determinant();
    if !(det.abs() > 1e-12 * m.abs().max().max(1.0).powi(2)) {
        return Err(Error::numeric(format!("{what} is singular (det {det:e})")));
    }
    m.try_inverse().ok_or_else(|| Error::numeric(format!("{what} is singular")))
}

/// Fixed point of the model for constant step size `v_d T`.
pub fn p1_orbit(model: &S2SModel, v_d: f64, period: f64) -> Result<OrbitSpec> {
    let u_star = v_d * period;
    let inv = invert(Matrix2::identity() - model.abar, "I - Abar")?;
    let x = inv * (model.bbar * u_star + model.cbar);
    Ok(OrbitSpec::P1 {
        v_d,
        u_star,
        x_star: DiscreteState::from_vector(&x),
    })
}

/// Two-step orbit with step sizes `u_left` and `2 v_d T - u_left`.
pub fn p2_orbit(model: &S2SModel, v_d: f64, period: f64, u_left: f64) -> Result<OrbitSpec> {
    let (a, b, c) = (model.abar, model.bbar, model.cbar);
    let u_sum = 2.0 * v_d * period;
    let u_right = u_sum - u_left;
    let inv = invert(Matrix2::identity() - a * a, "I - Abar^2")?;
    let fixed = |u: f64| inv * ((a * b - b) * u + b * u_sum + (a + Matrix2::identity()) * c);
    Ok(OrbitSpec::P2 {
        v_d,
        u_left,
        u_right,
        x_left: DiscreteState::from_vector(&fixed(u_left)),
        x_right: DiscreteState::from_vector(&fixed(u_right)),
    })
}

/// Same dynamics with input `u_sw = u - p` (swing foot relative to the COM):
/// `Ã = Ā + B̄ [1 0]`.
pub fn reparameterize_to_swing_input(model: &S2SModel) -> S2SModel {
    let mut out = model.clone();
    out.abar += model.bbar * nalgebra::RowVector2::new(1.0, 0.0);
    out
}

/// Inverse of [`reparameterize_to_swing_input`].
pub fn reparameterize_to_step_input(model: &S2SModel) -> S2SModel {
    let mut out = model.clone();
    out.abar -= model.bbar * nalgebra::RowVector2::new(1.0, 0.0);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSets {
    pub xe: BoxSet,
    pub ue: BoxSet,
    /// the target orbit sits on the boundary of the state set
    pub on_boundary: bool,
}

/// State and input sets in error coordinates around a P1 orbit.
pub fn error_constraint_sets(x: &BoxSet, u: &BoxSet, orbit: &OrbitSpec) -> Result<ErrorSets> {
    let OrbitSpec::P1 { u_star, x_star, .. } = orbit else {
        return Err(Error::usage("error sets are built per leg for P2 orbits; pass a P1 orbit"));
    };
    let xs = [x_star.p, x_star.v];
    if !x.contains(&xs, 0.0) {
        return Err(Error::usage(format!(
            "target orbit state ({}, {}) lies outside the state set",
            x_star.p, x_star.v
        )));
    }
    if !u.contains(&[*u_star], 0.0) {
        return Err(Error::usage(format!("target step size {u_star} lies outside the input set")));
    }
    let xe = x.shift(&xs)?;
    let ue = u.shift(&[*u_star])?;
    let on_boundary = xe.margins(&[0.0, 0.0]).contains(&0.0);
    Ok(ErrorSets { xe, ue, on_boundary })
}
