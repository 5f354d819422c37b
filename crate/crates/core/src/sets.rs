//! Axis-aligned boxes and their half-space form.
//!
//! Every constraint and disturbance set in the toolkit is an interval product,
//! so [`BoxSet`] carries all the arithmetic. [`Polytope`] exists only as the
//! `G x <= g` form consumed by the synthesis LP.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_VERTEX_DIM: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct BoxSet {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::usage(format!(
                "box bounds have different lengths ({} vs {})",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() {
                return Err(Error::usage(format!("box bound {i} is not finite")));
            }
            if l > h {
                return Err(Error::usage(format!("box bound {i}: lo {l} > hi {h}")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[-r_i, r_i]` in every coordinate.
    pub fn symmetric(radius: &[f64]) -> Result<Self> {
        Self::new(radius.iter().map(|r| -r).collect(), radius.to_vec())
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    /// The degenerate box `{0}` in `dim` coordinates.
    pub fn zero(dim: usize) -> Self {
        Self {
            lo: vec![0.0; dim],
            hi: vec![0.0; dim],
        }
    }

    /// Smallest box containing all of `points`.
    pub fn hull(points: &[Vec<f64>]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::usage("hull of an empty point list"))?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for p in &points[1..] {
            check_dim(p.len(), lo.len())?;
            for i in 0..p.len() {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (h - l)).collect()
    }

    pub fn minkowski_sum(&self, other: &BoxSet) -> Result<BoxSet> {
        check_dim(other.dim(), self.dim())?;
        Ok(Self {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a + b).collect(),
        })
    }

    /// Translate by `-c`.
    pub fn shift(&self, c: &[f64]) -> Result<BoxSet> {
        check_dim(c.len(), self.dim())?;
        Ok(Self {
            lo: self.lo.iter().zip(c).map(|(l, c)| l - c).collect(),
            hi: self.hi.iter().zip(c).map(|(h, c)| h - c).collect(),
        })
    }

    /// Scale half-widths by `factor` about the center.
    pub fn scale_about_center(&self, factor: f64) -> Result<BoxSet> {
        if !(factor >= 0.0) {
            return Err(Error::usage("scale factor must be nonnegative"));
        }
        let c = self.center();
        let r = self.half_widths();
        Self::new(
            c.iter().zip(&r).map(|(c, r)| c - factor * r).collect(),
            c.iter().zip(&r).map(|(c, r)| c + factor * r).collect(),
        )
    }

    /// Coordinate-wise intersection; `None` when empty.
    pub fn intersect(&self, other: &BoxSet) -> Result<Option<BoxSet>> {
        check_dim(other.dim(), self.dim())?;
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Ok(None);
        }
        Ok(Some(Self { lo, hi }))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    pub fn is_subset_of(&self, other: &BoxSet, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim())
                .all(|i| self.lo[i] >= other.lo[i] - tol && self.hi[i] <= other.hi[i] + tol)
    }

    /// Signed distance of `x` to the nearest face per coordinate (negative outside).
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| (v - l).min(h - v))
            .collect()
    }

    /// All `2^n` corners. Bit `i` of the corner index selects `hi[i]` when set,
    /// so coordinate 0 toggles fastest.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        if n > MAX_VERTEX_DIM {
            return Err(Error::usage(format!(
                "vertex enumeration limited to dimension {MAX_VERTEX_DIM}, got {n}"
            )));
        }
        Ok((0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] })
                    .collect()
            })
            .collect())
    }

    /// Rows `(+e_i, hi_i)` for every coordinate, then `(-e_i, -lo_i)`.
    pub fn to_halfspaces(&self) -> Polytope {
        let n = self.dim();
        let mut g = DMatrix::zeros(2 * n, n);
        let mut offset = DVector::zeros(2 * n);
        for i in 0..n {
            g[(i, i)] = 1.0;
            offset[i] = self.hi[i];
            g[(n + i, i)] = -1.0;
            offset[n + i] = -self.lo[i];
        }
        Polytope { g, offset }
    }
}

/// `{x : G x <= g}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    pub g: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl Polytope {
    pub fn faces(&self) -> usize {
        self.g.nrows()
    }

    pub fn dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let x = DVector::from_column_slice(x);
        let gx = &self.g * x;
        gx.iter().zip(self.offset.iter()).all(|(a, b)| *a <= b + tol)
    }
}

/// Outer box of the truncated sum `W + A W + ... + A^(n_terms-1) W`, with
/// half-widths grown by `1 + inflation`.
///
/// This is only a proposal for the admissible-error set; it is not the exact
/// minimal robust positively invariant set.
pub fn mrpi_outer(a: &DMatrix<f64>, w: &BoxSet, n_terms: usize, inflation: f64) -> Result<BoxSet> {
    let n = w.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::usage(format!(
            "matrix is {}x{}, disturbance box has dimension {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    if n_terms == 0 {
        return Err(Error::usage("n_terms must be at least 1"));
    }
    if !(inflation >= 0.0) {
        return Err(Error::usage("inflation must be nonnegative"));
    }
    let rho = spectral_radius(a);
    if !(rho < 1.0) {
        return Err(Error::usage(format!(
            "matrix is not Schur stable (spectral radius {rho})"
        )));
    }

    let c = DVector::from_vec(w.center());
    let r = DVector::from_vec(w.half_widths());
    let mut center = DVector::zeros(n);
    let mut radius = DVector::zeros(n);
    let mut power = DMatrix::<f64>::identity(n, n);
    for _ in 0..n_terms {
        center += &power * &c;
        radius += power.abs() * &r;
        power = a * power;
    }
    let radius = radius * (1.0 + inflation);
    BoxSet::new(
        (0..n).map(|i| center[i] - radius[i]).collect(),
        (0..n).map(|i| center[i] + radius[i]).collect(),
    )
}

pub(crate) fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn check_dim(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::usage(format!("dimension mismatch: {got} vs {want}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b1(lo: f64, hi: f64) -> BoxSet {
        BoxSet::interval(lo, hi).unwrap()
    }

    fn b2(a: (f64, f64), b: (f64, f64)) -> BoxSet {
        BoxSet::new(vec![a.0, b.0], vec![a.1, b.1]).unwrap()
    }

    #[test]
    fn minkowski_examples() {
        assert_eq!(b1(-1.0, 1.0).minkowski_sum(&b1(0.0, 0.0)).unwrap(), b1(-1.0, 1.0));
        assert_eq!(b1(-1.0, 1.0).minkowski_sum(&b1(-2.0, 3.0)).unwrap(), b1(-3.0, 4.0));
        let s = b2((-1.0, 1.0), (0.0, 2.0))
            .minkowski_sum(&b2((-1.0, 0.0), (-1.0, 1.0)))
            .unwrap();
        assert_eq!(s, b2((-2.0, 1.0), (-1.0, 3.0)));
        assert!(matches!(
            b1(0.0, 1.0).minkowski_sum(&b2((0.0, 1.0), (0.0, 1.0))),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn shift_examples() {
        assert_eq!(b1(-0.7, 0.7).shift(&[0.0]).unwrap(), b1(-0.7, 0.7));
        let s = b1(-0.7, 0.7).shift(&[0.4]).unwrap();
        assert!((s.lo()[0] + 1.1).abs() < 1e-15 && (s.hi()[0] - 0.3).abs() < 1e-15);
        assert_eq!(
            b2((0.0, 2.0), (-1.0, 1.0)).shift(&[1.0, 1.0]).unwrap(),
            b2((-1.0, 1.0), (-2.0, 0.0))
        );
        assert!(b1(0.0, 1.0).shift(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn halfspace_examples() {
        let p = b1(-1.0, 1.0).to_halfspaces();
        assert_eq!(p.g.as_slice(), &[1.0, -1.0]);
        assert_eq!(p.offset.as_slice(), &[1.0, 1.0]);
        let p = b1(0.0, 2.0).to_halfspaces();
        assert_eq!(p.offset.as_slice(), &[2.0, 0.0]);
        assert_eq!(b2((0.0, 1.0), (0.0, 1.0)).to_halfspaces().faces(), 4);
    }

    #[test]
    fn contains_examples() {
        assert!(b1(-1.0, 1.0).contains(&[0.0], 0.0));
        assert!(b1(-1.0, 1.0).contains(&[1.0000001], 1e-6));
        assert!(!b2((-1.0, 1.0), (-1.0, 1.0)).contains(&[0.0, 1.1], 0.0));
    }

    #[test]
    fn vertex_examples() {
        assert_eq!(b1(-1.0, 1.0).vertices().unwrap(), vec![vec![-1.0], vec![1.0]]);
        assert_eq!(
            b2((0.0, 1.0), (2.0, 3.0)).vertices().unwrap(),
            vec![vec![0.0, 2.0], vec![1.0, 2.0], vec![0.0, 3.0], vec![1.0, 3.0]]
        );
        assert_eq!(b1(0.0, 0.0).vertices().unwrap(), vec![vec![0.0], vec![0.0]]);
        assert!(BoxSet::zero(13).vertices().is_err());
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(BoxSet::interval(1.0, 0.0).is_err());
        assert!(BoxSet::interval(f64::NEG_INFINITY, 0.0).is_err());
        assert!(BoxSet::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn mrpi_examples() {
        let w = b1(-1.0, 1.0);
        let zero = DMatrix::zeros(1, 1);
        let r = mrpi_outer(&zero, &w, 5, 0.05).unwrap();
        assert!((r.hi()[0] - 1.05).abs() < 1e-15 && (r.lo()[0] + 1.05).abs() < 1e-15);

        let half = DMatrix::from_element(1, 1, 0.5);
        let r = mrpi_outer(&half, &w, 20, 0.0).unwrap();
        // 2 - 0.5^19
        assert!((r.hi()[0] - 2.0).abs() < 1e-5);

        // A^2 = 0: W + A W exactly
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let w2 = b2((-1.0, 1.0), (-0.5, 0.5));
        let r = mrpi_outer(&a, &w2, 4, 0.0).unwrap();
        assert_eq!(r, b2((-1.5, 1.5), (-0.5, 0.5)));

        let unstable = DMatrix::from_element(1, 1, 1.5);
        assert!(matches!(mrpi_outer(&unstable, &w, 3, 0.0), Err(Error::Usage(_))));
    }

    fn arb_box(dim: usize) -> impl Strategy<Value = BoxSet> {
        proptest::collection::vec((-10.0f64..10.0, 0.0f64..5.0), dim)
            .prop_map(|v| BoxSet::new(v.iter().map(|p| p.0).collect(), v.iter().map(|p| p.0 + p.1).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn minkowski_commutes_and_associates(a in arb_box(3), b in arb_box(3), c in arb_box(3)) {
            prop_assert_eq!(a.minkowski_sum(&b).unwrap(), b.minkowski_sum(&a).unwrap());
            let l = a.minkowski_sum(&b).unwrap().minkowski_sum(&c).unwrap();
            let r = a.minkowski_sum(&b.minkowski_sum(&c).unwrap()).unwrap();
            for i in 0..3 {
                prop_assert!((l.lo()[i] - r.lo()[i]).abs() <= 1e-12);
                prop_assert!((l.hi()[i] - r.hi()[i]).abs() <= 1e-12);
            }
        }

        #[test]
        fn halfspaces_agree_with_contains(
            b in arb_box(3),
            pts in proptest::collection::vec(proptest::collection::vec(-16.0f64..16.0, 3), 1000),
        ) {
            let p = b.to_halfspaces();
            for x in &pts {
                prop_assert_eq!(p.contains(x, 0.0), b.contains(x, 0.0));
            }
        }

        #[test]
        fn vertices_inside_and_centered(b in arb_box(4)) {
            let vs = b.vertices().unwrap();
            let mut mean = vec![0.0; 4];
            for v in &vs {
                prop_assert!(b.contains(v, 0.0));
                for i in 0..4 { mean[i] += v[i] / vs.len() as f64; }
            }
            let c = b.center();
            for i in 0..4 {
                prop_assert!((mean[i] - c[i]).abs() <= 1e-9);
            }
        }

        #[test]
        fn nilpotent_mrpi_is_invariant(x in -3.0f64..3.0, w in arb_box(2), infl in 0.0f64..0.2) {
            // strictly upper-triangular => nilpotent of order 2
            let a = DMatrix::from_row_slice(2, 2, &[0.0, x, 0.0, 0.0]);
            let r = mrpi_outer(&a, &w, 2, infl).unwrap();
            let grown = r.scale_about_center(1.0 + infl).unwrap();
            for wv in w.vertices().unwrap() {
                for xv in r.vertices().unwrap() {
                    let ax = &a * DVector::from_vec(xv.clone());
                    let next = [ax[0] + wv[0], ax[1] + wv[1]];
                    prop_assert!(grown.contains(&next, 1e-9));
                }
            }
        }
    }
}
