//! Dense two-phase simplex.
//!
//! Entering columns are priced by most negative reduced cost (lowest index on
//! ties), falling back to Bland's rule during long degenerate runs. The ratio
//! test is two-pass and prefers large pivot elements. Every choice is a
//! deterministic function of the tableau, so the returned vertex is
//! reproducible for a given problem. The tableau is stored dense.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};

const COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 1_000_000;
const DEGENERATE_RUN: usize = 50;

/// `minimize c^T x` subject to `A_ub x <= b_ub`, `A_eq x = b_eq`, `lo <= x <= hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpProblem {
    /// `n` variables, zero cost, every variable nonnegative.
    pub fn new(n: usize) -> Self {
        Self {
            c: vec![0.0; n],
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn add_le_sparse(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let row = self.sparse_row(terms);
        self.add_le(row, rhs);
    }

    pub fn add_eq_sparse(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let row = self.sparse_row(terms);
        self.add_eq(row, rhs);
    }

    fn sparse_row(&self, terms: &[(usize, f64)]) -> Vec<f64> {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, v) in terms {
            row[j] += v;
        }
        row
    }

    pub fn set_free(&mut self, j: usize) {
        self.bounds[j] = (f64::NEG_INFINITY, f64::INFINITY);
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::usage("bounds length differs from cost length"));
        }
        if self.a_ub.len() != self.b_ub.len() || self.a_eq.len() != self.b_eq.len() {
            return Err(Error::usage("row count differs from right-hand side length"));
        }
        for row in self.a_ub.iter().chain(&self.a_eq) {
            if row.len() != n {
                return Err(Error::usage("constraint row has wrong length"));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::usage("constraint row has a non-finite entry"));
            }
        }
        if self.c.iter().chain(&self.b_ub).chain(&self.b_eq).any(|v| !v.is_finite()) {
            return Err(Error::usage("cost or right-hand side has a non-finite entry"));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::usage(format!("variable {j} has invalid bounds")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let ub = self
            .a_ub
            .iter()
            .zip(&self.b_ub)
            .map(|(r, b)| (dot(r) - b).max(0.0));
        let eq = self.a_eq.iter().zip(&self.b_eq).map(|(r, b)| (dot(r) - b).abs());
        let bd = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), v)| (lo - v).max(v - hi).max(0.0));
        ub.chain(eq).chain(bd).fold(0.0, f64::max)
    }

    /// Plain-text dump for cross-checking with an external solver.
    ///
    /// ```text
    /// LP <n_vars> <n_ub> <n_eq>
    /// C <c_0> ... <c_n-1>
    /// B <lo> <hi>          (one line per variable)
    /// U <a_0> ... <a_n-1> <b>
    /// E <a_0> ... <a_n-1> <b>
    /// ```
    pub fn write_debug_dump(&self, mut w: impl Write) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "LP {} {} {}", self.num_vars(), self.a_ub.len(), self.a_eq.len());
        s.push('C');
        for v in &self.c {
            let _ = write!(s, " {}", fmt_full(*v));
        }
        s.push('\n');
        for &(lo, hi) in &self.bounds {
            let _ = writeln!(s, "B {} {}", fmt_full(lo), fmt_full(hi));
        }
        for (tag, rows, rhs) in [("U", &self.a_ub, &self.b_ub), ("E", &self.a_eq, &self.b_eq)] {
            for (row, b) in rows.iter().zip(rhs.iter()) {
                s.push_str(tag);
                for v in row {
                    let _ = write!(s, " {}", fmt_full(*v));
                }
                let _ = writeln!(s, " {}", fmt_full(*b));
            }
        }
        w.write_all(s.as_bytes())?;
        Ok(())
    }
}

fn fmt_full(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.17e}")
    }
}

/// How an original variable is expressed through nonnegative tableau columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// `x = lo + y`
    Shift { col: usize, lo: f64 },
    /// `x = hi - y`
    Mirror { col: usize, hi: f64 },
    /// `x = y+ - y-`
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    width: usize,
    /// row-major, last column is the right-hand side
    data: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        self.data[r * w + c] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, pv) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reduced costs of `cost` (indexed by column) for the current basis.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        d.push(0.0);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.width {
                    d[j] -= cb * self.at(i, j);
                }
            }
        }
        d
    }

    /// Two-pass ratio test: among rows within a small feasibility slack of
    /// the minimum ratio, pivot on the largest element.
    fn ratio_harris(&self, enter: usize) -> Option<(usize, f64)> {
        let mut bound = f64::INFINITY;
        for i in 0..self.rows {
            let a = self.at(i, enter);
            if a > PIVOT_TOL {
                bound = bound.min((self.rhs(i).max(0.0) + FEAS_TOL) / a);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut leave: Option<(usize, f64, f64)> = None;
        for i in 0..self.rows {
            let a = self.at(i, enter);
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                if ratio <= bound && leave.is_none_or(|(_, _, la)| a > la) {
                    leave = Some((i, ratio, a));
                }
            }
        }
        leave.map(|(i, r, _)| (i, r))
    }

    /// Runs simplex on `cost` restricted to columns `< allowed`.
    /// Returns false when the objective is unbounded below.
    /// Dantzig pricing; after a run of degenerate pivots, Bland's rule
    /// takes over until the objective moves again, which rules out cycling.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<bool> {
        let mut d = self.reduced_costs(cost);
        let mut degenerate_run = 0usize;
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(Error::numeric(format!("simplex exceeded {MAX_PIVOTS} pivots")));
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let enter = if bland {
                (0..allowed).find(|&j| d[j] < -COST_TOL)
            } else {
                (0..allowed)
                    .filter(|&j| d[j] < -COST_TOL)
                    .fold(None, |best: Option<usize>, j| match best {
                        Some(b) if d[b] <= d[j] => Some(b),
                        _ => Some(j),
                    })
            };
            let Some(enter) = enter else {
                let fresh = self.reduced_costs(cost);
                if (0..allowed).any(|j| fresh[j] < -COST_TOL) {
                    d = fresh;
                    continue;
                }
                return Ok(true);
            };
            let leave = self.ratio_harris(enter);
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if ratio.abs() <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, enter);
            let f = d[enter];
            for j in 0..self.width {
                d[j] -= f * self.at(r, j);
            }
            d[enter] = 0.0;
        }
    }
}

pub fn solve(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars();

    // column layout: structural | slacks | artificials | rhs
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut extra_ub: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &p.bounds {
        let m = if lo.is_finite() {
            if hi.is_finite() {
                extra_ub.push((ncols, hi - lo));
            }
            VarMap::Shift { col: ncols, lo }
        } else if hi.is_finite() {
            VarMap::Mirror { col: ncols, hi }
        } else {
            ncols += 1;
            VarMap::Split { pos: ncols - 1, neg: ncols }
        };
        ncols += 1;
        maps.push(m);
    }
    let n_struct = ncols;

    // Rows as (coeffs over structural columns, rhs, kind)
    enum Kind {
        Le,
        Eq,
    }
    let mut rows: Vec<(Vec<f64>, f64, Kind)> = Vec::new();
    let translate = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; n_struct];
        let mut b = rhs;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    out[col] += a;
                    b -= a * lo;
                }
                VarMap::Mirror { col, hi } => {
                    out[col] -= a;
                    b -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] += a;
                    out[neg] -= a;
                }
            }
        }
        (out, b)
    };
    for (row, &b) in p.a_ub.iter().zip(&p.b_ub) {
        let (r, b) = translate(row, b);
        rows.push((r, b, Kind::Le));
    }
    for &(col, ub) in &extra_ub {
        let mut r = vec![0.0; n_struct];
        r[col] = 1.0;
        rows.push((r, ub, Kind::Le));
    }
    for (row, &b) in p.a_eq.iter().zip(&p.b_eq) {
        let (r, b) = translate(row, b);
        rows.push((r, b, Kind::Eq));
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| matches!(r.2, Kind::Le)).count();
    let needs_art: Vec<bool> = rows
        .iter()
        .map(|(_, b, k)| matches!(k, Kind::Eq) || *b < 0.0)
        .collect();
    let n_art = needs_art.iter().filter(|&&x| x).count();
    let art_start = n_struct + n_slack;
    let width = art_start + n_art + 1;

    let mut t = Tableau {
        rows: m,
        width,
        data: vec![0.0; m * width],
        basis: vec![0; m],
        pivots: 0,
    };
    let mut slack = n_struct;
    let mut art = art_start;
    for (i, (r, b, kind)) in rows.iter().enumerate() {
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        let base = i * width;
        for (j, v) in r.iter().enumerate() {
            t.data[base + j] = sign * v;
        }
        t.data[base + width - 1] = sign * b;
        if matches!(kind, Kind::Le) {
            t.data[base + slack] = sign;
            if !needs_art[i] {
                t.basis[i] = slack;
            }
            slack += 1;
        }
        if needs_art[i] {
            t.data[base + art] = 1.0;
            t.basis[i] = art;
            art += 1;
        }
    }

    // Phase 1
    if n_art > 0 {
        let mut cost1 = vec![0.0; width - 1];
        for c in cost1.iter_mut().skip(art_start) {
            *c = 1.0;
        }
        t.optimize(&cost1, width - 1)?;
        let infeas: f64 = (0..m)
            .filter(|&i| t.basis[i] >= art_start)
            .map(|i| t.rhs(i))
            .sum();
        let scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        if infeas > FEAS_TOL * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
            });
        }
        // Drive remaining artificials out of the basis; rows where that is
        // impossible are redundant and keep a zero-valued artificial.
        for i in 0..m {
            if t.basis[i] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| t.at(i, j).abs() > PIVOT_TOL) {
                    t.pivot(i, j);
                }
            }
        }
    }

    // Phase 2
    let mut cost2 = vec![0.0; width - 1];
    for (j, m) in maps.iter().enumerate() {
        let c = p.c[j];
        match *m {
            VarMap::Shift { col, .. } => cost2[col] += c,
            VarMap::Mirror { col, .. } => cost2[col] -= c,
            VarMap::Split { pos, neg } => {
                cost2[pos] += c;
                cost2[neg] -= c;
            }
        }
    }
    if !t.optimize(&cost2, art_start)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
        });
    }

    let mut y = vec![0.0; art_start];
    for i in 0..m {
        if t.basis[i] < art_start {
            y[t.basis[i]] = t.rhs(i);
        }
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::Mirror { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective = p.c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
    })
}
