//! Hybrid linear inverted pendulum: closed-form single-support flow, the
//! step-to-step matrices, the push-to-disturbance map and baseline gains.

use nalgebra::{DMatrix, DVector, Matrix2, RowVector2, Vector2};

use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.81;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HlipParams {
    /// COM height (m)
    pub z0: f64,
    /// step duration (s)
    pub period: f64,
    pub gravity: f64,
    /// mass (kg), only used to convert push forces
    pub mass: f64,
}

impl HlipParams {
    pub fn new(z0: f64, period: f64, gravity: f64, mass: f64) -> Result<Self> {
        let p = Self { z0, period, gravity, mass };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("z0", self.z0),
            ("period", self.period),
            ("gravity", self.gravity),
            ("mass", self.mass),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::usage(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        (self.gravity / self.z0).sqrt()
    }
}

/// Pre-impact horizontal COM state relative to the stance foot.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiscreteState {
    pub p: f64,
    pub v: f64,
}

impl DiscreteState {
    pub const fn new(p: f64, v: f64) -> Self {
        Self { p, v }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.p, self.v)
    }

    pub fn from_vector(x: &Vector2<f64>) -> Self {
        Self { p: x[0], v: x[1] }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.is_finite()
    }
}

impl std::ops::Sub for DiscreteState {
    type Output = DiscreteState;
    fn sub(self, o: DiscreteState) -> DiscreteState {
        DiscreteState::new(self.p - o.p, self.v - o.v)
    }
}

/// Static state-feedback row gain `u = K x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainMatrix(pub RowVector2<f64>);

impl GainMatrix {
    pub fn zero() -> Self {
        Self(RowVector2::zeros())
    }

    pub fn apply(&self, e: &Vector2<f64>) -> f64 {
        (self.0 * e)[0]
    }
}

/// `exp(A_c t)` for `A_c = [[0, 1], [lambda^2, 0]]`.
pub fn flow_matrix(t: f64, params: &HlipParams) -> Matrix2<f64> {
    let l = params.lambda();
    let (s, c) = ((l * t).sinh(), (l * t).cosh());
    Matrix2::new(c, s / l, l * s, c)
}

pub fn ssp_flow(x0: DiscreteState, t: f64, params: &HlipParams) -> DiscreteState {
    DiscreteState::from_vector(&(flow_matrix(t, params) * x0.to_vector()))
}

/// Constant horizontal force `force` during the single-support phase.
pub fn pushed_flow(x0: DiscreteState, force: f64, t: f64, params: &HlipParams) -> DiscreteState {
    let l = params.lambda();
    // equilibrium of p'' = l^2 p + F/m sits at p = -F/(m l^2)
    let offset = Vector2::new(force / (params.mass * l * l), 0.0);
    let x = flow_matrix(t, params) * (x0.to_vector() + offset) - offset;
    DiscreteState::from_vector(&x)
}

/// `(A, B)` of `x_{k+1} = A x_k + B u_k`: the reset `p+ = p- - u` followed by
/// one single-support flow of duration `T`.
pub fn s2s_matrices(params: &HlipParams) -> (Matrix2<f64>, Vector2<f64>) {
    let a = flow_matrix(params.period, params);
    let b = -a.column(0).into_owned();
    (a, b)
}

/// `lambda * coth(lambda T / 2)`.
pub fn orbital_slope_sigma1(params: &HlipParams) -> f64 {
    let l = params.lambda();
    l / (0.5 * l * params.period).tanh()
}

/// Pre-impact state deviation caused by a constant push over one whole step.
pub fn push_to_disturbance(force: f64, params: &HlipParams) -> Vector2<f64> {
    let l = params.lambda();
    let scale = force * (params.period * l).sinh() / (params.mass * l);
    Vector2::new(scale / orbital_slope_sigma1(params), scale)
}

/// Places both closed-loop eigenvalues at zero.
pub fn deadbeat_gain(a: &Matrix2<f64>, b: &Vector2<f64>) -> Result<GainMatrix> {
    let a = DMatrix::from_column_slice(2, 2, a.as_slice());
    let b = DVector::from_column_slice(b.as_slice());
    let k = deadbeat_gain_n(&a, &b)?;
    Ok(GainMatrix(RowVector2::new(k[0], k[1])))
}

/// Ackermann's formula with all poles at zero: `K = -e_n^T C^-1 A^n`.
pub fn deadbeat_gain_n(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::usage("deadbeat gain needs square A and matching B"));
    }
    let mut ctrb = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        ctrb.set_column(j, &col);
        col = a * col;
    }
    let svd = ctrb.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax.max(1.0)) {
        return Err(Error::usage("(A, B) is not controllable"));
    }
    let inv = ctrb
        .try_inverse()
        .ok_or_else(|| Error::usage("(A, B) is not controllable"))?;
    let an = a.pow(n as u32);
    let last_row = inv.row(n - 1) * an;
    Ok(-last_row.transpose())
}

/// Infinite-horizon discrete LQR gain with the `u = K x` sign convention.
pub fn dlqr_gain(a: &Matrix2<f64>, b: &Vector2<f64>, q: &Matrix2<f64>, r: f64) -> Result<GainMatrix> {
    if !(r > 0.0) {
        return Err(Error::usage("R must be positive"));
    }
    let eig = q.symmetric_eigenvalues();
    if eig.min() < -1e-12 || (q - q.transpose()).abs().max() > 1e-12 {
        return Err(Error::usage("Q must be symmetric positive semidefinite"));
    }
    let p = solve_dare(a, b, q, r)?;
    let denom = r + (b.transpose() * p * b)[0];
    let k = -(b.transpose() * p * a) / denom;
    Ok(GainMatrix(k))
}

fn riccati_map(p: &Matrix2<f64>, a: &Matrix2<f64>, b: &Vector2<f64>, q: &Matrix2<f64>, r: f64) -> Matrix2<f64> {
    let at = a.transpose();
    let pb = p * b;
    let denom = r + (b.transpose() * pb)[0];
    at * p * a - at * pb * (pb.transpose() * a) / denom + q
}

/// Fixed-point iteration of the discrete algebraic Riccati equation.
pub fn solve_dare(a: &Matrix2<f64>, b: &Vector2<f64>, q: &Matrix2<f64>, r: f64) -> Result<Matrix2<f64>> {
    const MAX_ITER: usize = 100_000;
    const TOL: f64 = 1e-10;
    let mut p = *q;
    for _ in 0..MAX_ITER {
        let next = riccati_map(&p, a, b, q, r);
        // symmetrize to keep round-off from accumulating
        let next = 0.5 * (next + next.transpose());
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric("Riccati iteration diverged"));
        }
        let step = (next - p).abs().max();
        p = next;
        if step <= TOL {
            return Ok(p);
        }
    }
    Err(Error::numeric(format!("Riccati iteration did not converge in {MAX_ITER} iterations")))
}

/// `u = u_ref + K (x - x_ref)`.
pub fn hlip_stepping(x: DiscreteState, x_ref: DiscreteState, u_ref: f64, k: &GainMatrix) -> f64 {
    u_ref + k.apply(&(x - x_ref).to_vector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn amber() -> HlipParams {
        HlipParams::new(0.7, 0.4, GRAVITY, 20.0).unwrap()
    }

    /// RK4 on `x' = A_c x + [0; f]`.
    fn rk4(x0: Vector2<f64>, lambda: f64, accel: f64, t: f64, dt: f64) -> Vector2<f64> {
        let f = |x: &Vector2<f64>| Vector2::new(x[1], lambda * lambda * x[0] + accel);
        let n = (t / dt).round().max(1.0) as usize;
        let h = t / n as f64;
        let mut x = x0;
        for _ in 0..n {
            let k1 = f(&x);
            let k2 = f(&(x + 0.5 * h * k1));
            let k3 = f(&(x + 0.5 * h * k2));
            let k4 = f(&(x + h * k3));
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        x
    }

    #[test]
    fn rest_is_equilibrium() {
        let x = ssp_flow(DiscreteState::default(), 0.37, &amber());
        assert_eq!(x, DiscreteState::default());
    }

    #[test]
    fn flow_trace_and_determinant() {
        let p = amber();
        assert!((p.lambda() - 3.7436).abs() < 1e-4);
        let m = flow_matrix(0.4, &p);
        assert!((m.trace() - 2.0 * (1.4974f64).cosh()).abs() < 1e-3);
        assert!((m.trace() - 4.694).abs() < 1e-3);
        for t in [0.0, 0.1, 0.4, 1.0] {
            assert!((flow_matrix(t, &p).determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn s2s_matrices_match_reference_values() {
        let (a, b) = s2s_matrices(&amber());
        let want_a = [2.347, 0.567, 7.949, 2.347];
        for (i, w) in want_a.iter().enumerate() {
            assert!((a[(i / 2, i % 2)] - w).abs() < 1e-3, "A entry {i}");
        }
        assert!((b[0] + 2.347).abs() < 1e-3 && (b[1] + 7.949).abs() < 1e-3);
    }

    #[test]
    fn s2s_small_period_limit() {
        let p = HlipParams::new(0.7, 1e-6, GRAVITY, 1.0).unwrap();
        let (a, b) = s2s_matrices(&p);
        let l2 = p.lambda().powi(2);
        assert!((a - (Matrix2::identity() + Matrix2::new(0.0, 1.0, l2, 0.0) * 1e-6)).abs().max() < 1e-10);
        assert!((b[0] + 1.0).abs() < 1e-10 && (b[1] + l2 * 1e-6).abs() < 1e-10);
    }

    #[test]
    fn s2s_matches_reset_then_flow_simulation() {
        let p = amber();
        let (a, b) = s2s_matrices(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x = Vector2::new(rng.gen_range(-0.5..0.5), rng.gen_range(-2.0..2.0));
            let u: f64 = rng.gen_range(-0.7..0.7);
            let sim = rk4(x - Vector2::new(u, 0.0), p.lambda(), 0.0, p.period, 1e-4);
            assert!((a * x + b * u - sim).abs().max() < 1e-8);
        }
    }

    #[test]
    fn sigma1_values() {
        assert!((orbital_slope_sigma1(&amber()) - 5.902).abs() < 1e-3);
        let long = HlipParams::new(0.7, 40.0, GRAVITY, 1.0).unwrap();
        assert!((orbital_slope_sigma1(&long) - long.lambda()).abs() < 1e-12);
        for t in [0.05, 0.4, 2.0] {
            let p = HlipParams::new(0.9, t, GRAVITY, 1.0).unwrap();
            assert!(orbital_slope_sigma1(&p) > p.lambda());
        }
    }

    #[test]
    fn push_disturbance_values() {
        let p = amber();
        assert_eq!(push_to_disturbance(0.0, &p), Vector2::zeros());
        let w = push_to_disturbance(50.0, &p);
        assert!((w[0] - 0.240).abs() < 1e-3, "{w}");
        assert!((w[1] - 1.418).abs() < 1e-3, "{w}");
        // powers of two keep the scaling exact in floating point
        for alpha in [0.5, 2.0, 8.0, -4.0] {
            assert_eq!(push_to_disturbance(alpha * 50.0, &p), push_to_disturbance(50.0, &p) * alpha);
        }
    }

    #[test]
    fn push_disturbance_matches_integration() {
        let p = amber();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x0 = Vector2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-1.0..1.0));
            let f: f64 = rng.gen_range(-120.0..120.0);
            let pushed = rk4(x0, p.lambda(), f / p.mass, p.period, 1e-4);
            let free = rk4(x0, p.lambda(), 0.0, p.period, 1e-4);
            assert!((pushed - free - push_to_disturbance(f, &p)).abs().max() < 1e-8);
        }
    }

    #[test]
    fn pushed_flow_cases() {
        let p = amber();
        let x0 = DiscreteState::new(0.1, -0.3);
        assert_eq!(pushed_flow(x0, 0.0, 0.3, &p), ssp_flow(x0, 0.3, &p));
        let at0 = pushed_flow(x0, 40.0, 0.0, &p);
        assert!((at0.p - x0.p).abs() < 1e-15 && (at0.v - x0.v).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let x = Vector2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-1.0..1.0));
            let f: f64 = rng.gen_range(-100.0..100.0);
            let t: f64 = rng.gen_range(0.0..0.6);
            let want = rk4(x, p.lambda(), f / p.mass, t, 1e-4);
            let got = pushed_flow(DiscreteState::from_vector(&x), f, t, &p).to_vector();
            assert!((want - got).abs().max() < 1e-8);
        }
    }

    #[test]
    fn deadbeat_is_nilpotent() {
        let (a, b) = s2s_matrices(&amber());
        let k = deadbeat_gain(&a, &b).unwrap();
        let cl = a + b * k.0;
        assert!((cl * cl).abs().max() <= 1e-9);

        let mut e = Vector2::new(0.05, -0.2);
        for _ in 0..2 {
            e = cl * e;
        }
        assert!(e.abs().max() < 1e-9);
    }

    #[test]
    fn deadbeat_scalar_and_uncontrollable() {
        let k = deadbeat_gain_n(&DMatrix::from_element(1, 1, 0.5), &DVector::from_element(1, 1.0)).unwrap();
        assert!((k[0] + 0.5).abs() < 1e-15);
        let a = Matrix2::new(1.0, 0.0, 0.0, 2.0);
        let b = Vector2::new(1.0, 0.0);
        assert!(matches!(deadbeat_gain(&a, &b), Err(Error::Usage(_))));
    }

    #[test]
    fn lqr_solves_riccati_and_stabilizes() {
        let (a, b) = s2s_matrices(&amber());
        let q = Matrix2::identity();
        let p = solve_dare(&a, &b, &q, 1.0).unwrap();
        let residual = (p - riccati_map(&p, &a, &b, &q, 1.0)).abs().max();
        assert!(residual <= 1e-10, "residual {residual}");
        let k = dlqr_gain(&a, &b, &q, 1.0).unwrap();
        let cl = a + b * k.0;
        let rho = cl.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(rho < 1.0);
    }

    #[test]
    fn lqr_zero_state_cost_on_stable_plant() {
        let a = Matrix2::new(0.5, 0.1, 0.0, 0.3);
        let b = Vector2::new(0.0, 1.0);
        let k = dlqr_gain(&a, &b, &Matrix2::zeros(), 1.0).unwrap();
        assert_eq!(k, GainMatrix::zero());
        assert!(dlqr_gain(&a, &b, &Matrix2::identity(), 0.0).is_err());
    }

    #[test]
    fn stepping_law() {
        let k = GainMatrix(RowVector2::new(1.2, 0.3));
        let x = DiscreteState::new(0.1, 0.8);
        assert_eq!(hlip_stepping(x, x, 0.4, &k), 0.4);
        assert_eq!(hlip_stepping(x, DiscreteState::default(), 0.4, &GainMatrix::zero()), 0.4);
        let x2 = DiscreteState::new(-0.2, 0.1);
        let d = hlip_stepping(x, x2, 0.0, &k) - hlip_stepping(x2, x2, 0.0, &k);
        assert!((d - k.apply(&(x - x2).to_vector())).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_rk4_over_random_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = HlipParams::new(rng.gen_range(0.4..1.2), rng.gen_range(0.2..0.6), GRAVITY, 30.0).unwrap();
            let t: f64 = rng.gen_range(0.0..1.0);
            let x0 = Vector2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-1.0..1.0));
            let want = rk4(x0, p.lambda(), 0.0, t, 1e-4);
            let got = flow_matrix(t, &p) * x0;
            assert!((want - got).abs().max() < 1e-8);
            assert!((flow_matrix(t, &p).determinant() - 1.0).abs() < 1e-9);
        }
    }
}
