//! Semilinear splitting `w' = A_blk w + f(w)` about the equilibrium.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use std::sync::Arc;

use crate::linear_analysis::{auto_gap, eigen_split, SpectralSplitting};
use crate::models::{SharedModel, TimeReversed};

/// The model in deviation coordinates `w = u - u_eq`, with the block-diagonal
/// linear part of the splitting and the superlinear remainder.
///
/// Adapted coordinates `z = T^-1 w` list the `X+` coordinates first.
pub struct SplitField {
    pub model: SharedModel,
    pub splitting: SpectralSplitting,
    pub equilibrium: DVector<f64>,
    /// Adapted basis `[basis_plus basis_rest]`.
    pub t: DMatrix<f64>,
    pub t_inv: DMatrix<f64>,
    /// Block-diagonal linear part in adapted coordinates.
    pub a_blk: DMatrix<f64>,
    pub a_plus: DMatrix<f64>,
    pub a_rest: DMatrix<f64>,
}

impl SplitField {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn dim_plus(&self) -> usize {
        self.a_plus.nrows()
    }

    pub fn dim_rest(&self) -> usize {
        self.a_rest.nrows()
    }

    pub fn to_coords(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.t_inv * w
    }

    pub fn from_coords(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.t * z
    }

    /// Deviation from block coordinates.
    pub fn assemble(&self, plus: &DVector<f64>, rest: &DVector<f64>) -> DVector<f64> {
        self.splitting.projection.assemble(plus, rest)
    }

    /// Linear part `T A_blk T^-1` in the original coordinates.
    pub fn linear_part(&self) -> DMatrix<f64> {
        &self.t * &self.a_blk * &self.t_inv
    }

    /// `f(w) = F(u_eq + w) - T A_blk T^-1 w`.
    pub fn remainder(&self, w: &DVector<f64>) -> DVector<f64> {
        self.model.vector_field(&(&self.equilibrium + w)) - self.linear_part() * w
    }

    /// `g(z) = T^-1 F(u_eq + T z) - A_blk z`.
    pub fn remainder_coords(&self, z: &DVector<f64>) -> DVector<f64> {
        let w = &self.t * z;
        &self.t_inv * self.model.vector_field(&(&self.equilibrium + w)) - &self.a_blk * z
    }

    pub fn remainder_jacobian_coords(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let w = &self.t * z;
        &self.t_inv * self.model.jacobian(&(&self.equilibrium + w)) * &self.t - &self.a_blk
    }
}

/// Splits the model about its equilibrium; checks `f(0) = 0` and `Df(0) = 0`
/// by central differences.
pub fn split_field(model: SharedModel, splitting: SpectralSplitting) -> Result<SplitField> {
    let n = model.dimension();
    if splitting.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: splitting.dimension(),
        });
    }
    let p = &splitting.projection;
    let (k, m) = (p.dim_plus(), p.dim_rest());
    let mut t = DMatrix::zeros(n, n);
    t.view_mut((0, 0), (n, k)).copy_from(&p.basis_plus);
    t.view_mut((0, k), (n, m)).copy_from(&p.basis_rest);
    let mut t_inv = DMatrix::zeros(n, n);
    t_inv.view_mut((0, 0), (k, n)).copy_from(&p.coords_plus);
    t_inv.view_mut((k, 0), (m, n)).copy_from(&p.coords_rest);
    let mut a_blk = DMatrix::zeros(n, n);
    a_blk.view_mut((0, 0), (k, k)).copy_from(&splitting.a_plus);
    a_blk.view_mut((k, k), (m, m)).copy_from(&splitting.a_rest);
    let field = SplitField {
        equilibrium: model.equilibrium(),
        a_plus: splitting.a_plus.clone(),
        a_rest: splitting.a_rest.clone(),
        model,
        splitting,
        t,
        t_inv,
        a_blk,
    };

    let f0 = field.remainder(&DVector::zeros(n)).norm();
    let scale = field.splitting.matrix.norm().max(1.0);
    if f0 > 1e-10 * scale {
        return Err(Error::InconsistentSplitting { norm: f0 });
    }
    let step = 1e-5;
    let mut worst = 0.0f64;
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = step;
        let d = (field.remainder(&e) - field.remainder(&(-&e))) / (2.0 * step);
        worst = worst.max(d.norm());
    }
    if worst > 1e-6 * scale {
        return Err(Error::InconsistentSplitting { norm: worst });
    }
    Ok(field)
}

/// Which invariant manifold of the equilibrium to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Unstable,
    /// Computed as the unstable manifold of the time-reversed field.
    Stable,
}

/// Splits the model (time-reversed for the stable side) about its equilibrium,
/// choosing the gap automatically when none is given.
pub fn prepare_field(model: SharedModel, side: Side, gap: Option<f64>) -> Result<Arc<SplitField>> {
    let model: SharedModel = match side {
        Side::Unstable => model,
        Side::Stable => Arc::new(TimeReversed(model)),
    };
    let a = model.jacobian(&model.equilibrium());
    let gap = match gap {
        Some(g) => g,
        None => auto_gap(&a)?,
    };
    let splitting = eigen_split(&a, gap)?;
    Ok(Arc::new(split_field(model, splitting)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_analysis::eigen_split;
    use crate::models::{saddle_toy, AffineModel};

    #[test]
    fn saddle1_pieces() {
        let m: SharedModel = Arc::new(saddle_toy("saddle1").unwrap());
        let s = eigen_split(&m.jacobian(&DVector::zeros(2)), 0.5).unwrap();
        let f = split_field(m, s).unwrap();
        assert_eq!(f.a_plus[(0, 0)], 1.0);
        assert_eq!(f.a_rest[(0, 0)], -1.0);
        let r = f.remainder(&DVector::from_vec(vec![0.3, -0.7]));
        assert!(r[0].abs() < 1e-15 && (r[1] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn linear_model_has_zero_remainder() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.0, -1.0, 0.3, 0.0, 0.0, -2.0]);
        let m: SharedModel = Arc::new(AffineModel::linear(a.clone()));
        let s = eigen_split(&a, 0.5).unwrap();
        let f = split_field(m, s).unwrap();
        let r = f.remainder(&DVector::from_vec(vec![0.3, -0.7, 0.2]));
        assert!(r.norm() < 1e-13);
    }

    #[test]
    fn wrong_splitting_rejected() {
        let m: SharedModel = Arc::new(saddle_toy("saddle1").unwrap());
        let other = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
        let s = eigen_split(&other, 0.5).unwrap();
        assert!(matches!(
            split_field(m, s),
            Err(Error::InconsistentSplitting { .. })
        ));
    }
}

#[cfg(test)]
mod side_tests {
    use super::*;
    use crate::models::saddle_toy;

    #[test]
    fn stable_side_swaps_blocks() {
        let f =
            prepare_field(Arc::new(saddle_toy("saddle2").unwrap()), Side::Stable, None).unwrap();
        assert_eq!(f.a_plus[(0, 0)], 1.0);
        assert_eq!(f.a_rest[(0, 0)], -2.0);
        assert_eq!(f.splitting.projection.basis_plus[(1, 0)], 1.0);
    }
}
