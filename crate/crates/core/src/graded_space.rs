//! Coefficient vectors with a graded family of weighted norms, projection
//! pairs, and time-sampled orbits with exponentially weighted sup norms.

use std::ops::{Deref, DerefMut};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::lagrange4;

/// A finite real coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedVector(DVector<f64>);

impl GradedVector {
    pub fn new(coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("vector coefficients"));
        }
        Ok(GradedVector(coeffs))
    }

    pub fn from_slice(coeffs: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coeffs))
    }

    pub fn zeros(dim: usize) -> Self {
        GradedVector(DVector::zeros(dim))
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

impl Deref for GradedVector {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl DerefMut for GradedVector {
    fn deref_mut(&mut self) -> &mut DVector<f64> {
        &mut self.0
    }
}

/// Per-coordinate weights `mu_i(r)` with `mu_i(0) = 1`.
///
/// The Sobolev ladder uses `mu_i(r) = (1 + symbol_i)^(order_per_level * r / 2)`,
/// so for Fourier models with `symbol_i = |xi_i|^2` level `r` is the
/// `H^(order_per_level * r)` norm of the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum NormLadder {
    Uniform {
        dim: usize,
    },
    Sobolev {
        symbols: Vec<f64>,
        order_per_level: f64,
    },
}

impl NormLadder {
    pub fn uniform(dim: usize) -> Self {
        NormLadder::Uniform { dim }
    }

    pub fn sobolev(symbols: Vec<f64>, order_per_level: f64) -> Result<Self> {
        if symbols.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidInput(
                "ladder symbols must be finite and nonnegative".into(),
            ));
        }
        if !(order_per_level >= 0.0) {
            return Err(Error::InvalidInput(
                "ladder order must be nonnegative".into(),
            ));
        }
        Ok(NormLadder::Sobolev {
            symbols,
            order_per_level,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            NormLadder::Uniform { dim } => *dim,
            NormLadder::Sobolev { symbols, .. } => symbols.len(),
        }
    }

    pub fn weight(&self, i: usize, r: f64) -> f64 {
        match self {
            NormLadder::Uniform { .. } => 1.0,
            NormLadder::Sobolev {
                symbols,
                order_per_level,
            } => (1.0 + symbols[i]).powf(0.5 * order_per_level * r),
        }
    }

    /// Norm without the dimension check; callers guarantee matching length.
    pub(crate) fn norm_unchecked(&self, v: &DVector<f64>, r: f64) -> f64 {
        match self {
            NormLadder::Uniform { .. } => v.norm(),
            NormLadder::Sobolev { .. } => v
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let w = self.weight(i, r) * x;
                    w * w
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// `sqrt(sum_i (mu_i(r) v_i)^2)`.
pub fn graded_norm(v: &DVector<f64>, ladder: &NormLadder, r: f64) -> Result<f64> {
    if v.len() != ladder.dim() {
        return Err(Error::DimensionMismatch {
            expected: ladder.dim(),
            got: v.len(),
        });
    }
    if !(r >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "norm level must be nonnegative, got {r}"
        )));
    }
    Ok(ladder.norm_unchecked(v, r))
}

/// Complementary projections together with adapted bases.
///
/// `coords_plus` and `coords_rest` are the rows of `[basis_plus basis_rest]^-1`,
/// so `coords_plus * v` are the coordinates of `projector_plus * v` in `basis_plus`.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub basis_plus: DMatrix<f64>,
    pub basis_rest: DMatrix<f64>,
    pub projector_plus: DMatrix<f64>,
    pub projector_rest: DMatrix<f64>,
    pub coords_plus: DMatrix<f64>,
    pub coords_rest: DMatrix<f64>,
}

impl ProjectionPair {
    /// Builds the pair from an invertible adapted basis `[basis_plus basis_rest]`.
    pub fn from_bases(basis_plus: DMatrix<f64>, basis_rest: DMatrix<f64>) -> Result<Self> {
        let n = basis_plus.nrows();
        let kp = basis_plus.ncols();
        if basis_rest.nrows() != n || kp + basis_rest.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: kp + basis_rest.ncols(),
            });
        }
        let mut t = DMatrix::zeros(n, n);
        t.view_mut((0, 0), (n, kp)).copy_from(&basis_plus);
        t.view_mut((0, kp), (n, n - kp)).copy_from(&basis_rest);
        let t_inv = t.try_inverse().ok_or(Error::Singular("adapted basis"))?;
        let coords_plus = t_inv.rows(0, kp).into_owned();
        let coords_rest = t_inv.rows(kp, n - kp).into_owned();
        let projector_plus = &basis_plus * &coords_plus;
        let projector_rest = &basis_rest * &coords_rest;
        Ok(ProjectionPair {
            basis_plus,
            basis_rest,
            projector_plus,
            projector_rest,
            coords_plus,
            coords_rest,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis_plus.nrows()
    }

    pub fn dim_plus(&self) -> usize {
        self.basis_plus.ncols()
    }

    pub fn dim_rest(&self) -> usize {
        self.basis_rest.ncols()
    }

    /// Full state from block coordinates.
    pub fn assemble(&self, plus: &DVector<f64>, rest: &DVector<f64>) -> DVector<f64> {
        &self.basis_plus * plus + &self.basis_rest * rest
    }
}

/// A trajectory sampled on an increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitGrid {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl OrbitGrid {
    pub fn new(times: Vec<f64>, states: Vec<DVector<f64>>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: states.len(),
            });
        }
        if times.is_empty() {
            return Err(Error::Empty("orbit"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "orbit times must be strictly increasing".into(),
            ));
        }
        let dim = states[0].len();
        if states.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidInput(
                "orbit states have differing lengths".into(),
            ));
        }
        if states.iter().any(|s| s.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("orbit state"));
        }
        Ok(OrbitGrid { times, states })
    }

    /// Uniform grid `-t_max, -t_max + dt, ..., 0` of zero states.
    ///
    /// `dt` is shrunk slightly if needed so that the grid ends exactly at 0.
    pub fn uniform_backward(t_max: f64, dt: f64, dim: usize) -> Result<Self> {
        if !(t_max > 0.0) || !(dt > 0.0) || dt >= t_max {
            return Err(Error::InvalidInput(format!(
                "need 0 < dt < T_max, got dt = {dt}, T_max = {t_max}"
            )));
        }
        let n = (t_max / dt - 1e-9).ceil() as usize;
        let h = t_max / n as f64;
        let times =
            (0..=n)
                .map(|j| -t_max + j as f64 * h)
                .map(|t| if t.abs() < 1e-14 { 0.0 } else { t });
        let times: Vec<f64> = times.collect();
        let states = vec![DVector::zeros(dim); n + 1];
        Ok(OrbitGrid { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("orbit is nonempty")
    }

    /// Cubic Lagrange interpolation of the stored states.
    pub fn sample(&self, t: f64) -> DVector<f64> {
        lagrange4(&self.times, &self.states, t)
    }

    /// Maximum over nodes of the norm of the state difference.
    pub fn max_distance(&self, other: &OrbitGrid) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `max_j e^{-lambda t_j} |v(t_j)|_r` over the grid nodes.
pub fn weighted_orbit_norm(
    orbit: &OrbitGrid,
    lambda: f64,
    ladder: &NormLadder,
    r: f64,
) -> Result<f64> {
    if orbit.is_empty() {
        return Err(Error::Empty("orbit"));
    }
    let mut out = 0.0f64;
    for (t, v) in orbit.times.iter().zip(&orbit.states) {
        let n = graded_norm(v, ladder, r)?;
        out = out.max((-lambda * t).exp() * n);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_examples() {
        let l = NormLadder::uniform(2);
        assert_eq!(
            graded_norm(&DVector::from_vec(vec![3.0, 4.0]), &l, 0.0).unwrap(),
            5.0
        );
        assert_eq!(graded_norm(&DVector::zeros(2), &l, 3.0).unwrap(), 0.0);
        let s = NormLadder::sobolev(vec![0.0, 3.0], 1.0).unwrap();
        let n = graded_norm(&DVector::from_vec(vec![1.0, 1.0]), &s, 1.0).unwrap();
        assert!((n - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn norm_dimension_mismatch() {
        let l = NormLadder::uniform(3);
        assert!(matches!(
            graded_norm(&DVector::zeros(2), &l, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn level_zero_weights_are_one() {
        let s = NormLadder::sobolev(vec![0.0, 1.0, 4.0, 9.0], 2.5).unwrap();
        for i in 0..4 {
            assert_eq!(s.weight(i, 0.0), 1.0);
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let l = NormLadder::uniform(2);
        let single = OrbitGrid::new(vec![0.0], vec![DVector::from_vec(vec![3.0, 4.0])]).unwrap();
        assert_eq!(weighted_orbit_norm(&single, 7.0, &l, 0.0).unwrap(), 5.0);
        let orbit = OrbitGrid::new(
            vec![-1.0, 0.0],
            vec![
                DVector::from_vec(vec![(-2.0f64).exp(), 0.0]),
                DVector::from_vec(vec![1.0, 0.0]),
            ],
        )
        .unwrap();
        assert!((weighted_orbit_norm(&orbit, 1.0, &l, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_norm_empty_orbit_errors() {
        let o = OrbitGrid {
            times: vec![],
            states: vec![],
        };
        assert!(weighted_orbit_norm(&o, 0.0, &NormLadder::uniform(1), 0.0).is_err());
    }

    #[test]
    fn uniform_backward_ends_at_zero() {
        let g = OrbitGrid::uniform_backward(20.0, 0.01, 2).unwrap();
        assert_eq!(g.len(), 2001);
        assert_eq!(*g.times.last().unwrap(), 0.0);
        assert_eq!(g.times[0], -20.0);
    }

    #[test]
    fn projection_pair_complementary() {
        let bp = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let br = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let p = ProjectionPair::from_bases(bp, br).unwrap();
        let sum = &p.projector_plus + &p.projector_rest;
        assert!((sum - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((&p.projector_plus * &p.projector_rest).norm() < 1e-12);
    }
}
