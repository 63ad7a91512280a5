//! Model systems: vector fields with analytic Jacobians, an equilibrium and
//! a norm ladder.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graded_space::NormLadder;

pub mod kdv;
pub mod mmt;
pub mod reaction_diffusion;
pub mod saddle;

pub use kdv::{kdv_wave_profile, KdvProfile};
pub use mmt::{
    mmt_block, mmt_galerkin, mmt_plane_wave_frequency, mmt_unstable_scan, MmtGalerkin, MmtParams,
    ModePairBlock, ScanEntry,
};
pub use reaction_diffusion::{reaction_diffusion, ReactionDiffusion};
pub use saddle::saddle_toy;

/// The contract shared by every model: `u' = F(u)` with `F(equilibrium) = 0`.
pub trait ModelSystem: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn vector_field(&self, u: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64>;
    fn equilibrium(&self) -> DVector<f64>;
    fn ladder(&self) -> NormLadder;

    /// Second variation of a conserved or dissipated energy, if the model has one.
    fn hessian_form(&self, _u: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

pub type SharedModel = Arc<dyn ModelSystem>;

type FieldFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A model assembled from closures.
pub struct FnModel {
    name: String,
    field: Box<FieldFn>,
    jac: Box<JacFn>,
    equilibrium: DVector<f64>,
    ladder: NormLadder,
}

impl FnModel {
    pub fn new(
        name: impl Into<String>,
        equilibrium: DVector<f64>,
        field: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        jac: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        let dim = equilibrium.len();
        FnModel {
            name: name.into(),
            field: Box::new(field),
            jac: Box::new(jac),
            equilibrium,
            ladder: NormLadder::uniform(dim),
        }
    }

    pub fn with_ladder(mut self, ladder: NormLadder) -> Self {
        self.ladder = ladder;
        self
    }
}

impl ModelSystem for FnModel {
    fn name(&self) -> &str {
        &self.name
    }
    fn dimension(&self) -> usize {
        self.equilibrium.len()
    }
    fn vector_field(&self, u: &DVector<f64>) -> DVector<f64> {
        (self.field)(u)
    }
    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        (self.jac)(u)
    }
    fn equilibrium(&self) -> DVector<f64> {
        self.equilibrium.clone()
    }
    fn ladder(&self) -> NormLadder {
        self.ladder.clone()
    }
}

/// `F(u) = A u + b`.
pub struct AffineModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
    equilibrium: DVector<f64>,
}

impl AffineModel {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidInput(
                "affine model needs a square matrix".into(),
            ));
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let equilibrium = if b.iter().all(|x| *x == 0.0) {
            DVector::zeros(n)
        } else {
            a.clone()
                .lu()
                .solve(&(-&b))
                .ok_or(Error::Singular("affine model has no equilibrium"))?
        };
        Ok(AffineModel { a, b, equilibrium })
    }

    pub fn linear(a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        AffineModel {
            a,
            b: DVector::zeros(n),
            equilibrium: DVector::zeros(n),
        }
    }
}

impl ModelSystem for AffineModel {
    fn name(&self) -> &str {
        "affine"
    }
    fn dimension(&self) -> usize {
        self.a.nrows()
    }
    fn vector_field(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.a * u + &self.b
    }
    fn jacobian(&self, _u: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }
    fn equilibrium(&self) -> DVector<f64> {
        self.equilibrium.clone()
    }
    fn ladder(&self) -> NormLadder {
        NormLadder::uniform(self.a.nrows())
    }
}

/// `u' = -F(u)`: stable manifolds of `F` are unstable manifolds of the reversal.
pub struct TimeReversed(pub SharedModel);

impl ModelSystem for TimeReversed {
    fn name(&self) -> &str {
        self.0.name()
    }
    fn dimension(&self) -> usize {
        self.0.dimension()
    }
    fn vector_field(&self, u: &DVector<f64>) -> DVector<f64> {
        -self.0.vector_field(u)
    }
    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        -self.0.jacobian(u)
    }
    fn equilibrium(&self) -> DVector<f64> {
        self.0.equilibrium()
    }
    fn ladder(&self) -> NormLadder {
        self.0.ladder()
    }
    fn hessian_form(&self, u: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.0.hessian_form(u)
    }
}

/// Named model parameters used by [`build_model`].
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Saddle1,
    Saddle2,
    ReactionDiffusion { lambda: f64, modes: usize },
    Mmt(MmtParams),
}

pub fn build_model(spec: &ModelSpec) -> Result<SharedModel> {
    Ok(match spec {
        ModelSpec::Saddle1 => Arc::new(saddle_toy("saddle1")?),
        ModelSpec::Saddle2 => Arc::new(saddle_toy("saddle2")?),
        ModelSpec::ReactionDiffusion { lambda, modes } => {
            Arc::new(reaction_diffusion(*lambda, *modes)?)
        }
        ModelSpec::Mmt(p) => Arc::new(mmt_galerkin(p)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_equilibrium() {
        let m = AffineModel::new(
            DMatrix::from_element(1, 1, -1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        assert!((m.equilibrium()[0] - 1.0).abs() < 1e-15);
        assert!(m.vector_field(&m.equilibrium()).norm() < 1e-15);
    }

    #[test]
    fn time_reversal_negates() {
        let m: SharedModel = Arc::new(saddle_toy("saddle2").unwrap());
        let r = TimeReversed(m.clone());
        let u = DVector::from_vec(vec![0.3, -0.2]);
        assert_eq!(r.vector_field(&u), -m.vector_field(&u));
        assert_eq!(r.jacobian(&u), -m.jacobian(&u));
    }
}
