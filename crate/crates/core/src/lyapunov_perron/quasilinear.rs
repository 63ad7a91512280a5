//! Quasilinearizing change of variables
//! `v = P+ (F(u) - (omega+ - 1) u) + P_rest (F(u) - (omega- + 1) u)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::split::SplitField;
use crate::error::{Error, Result};

pub struct Quasilinear {
    pub field: Arc<SplitField>,
    pub shift_plus: f64,
    pub shift_rest: f64,
    /// Condition number of `DB(0)`.
    pub condition: f64,
    db0_inv: DMatrix<f64>,
}

/// Pieces of the transformed system at one point.
pub struct QuasiPieces {
    pub a_plus: DMatrix<f64>,
    pub a_rest: DMatrix<f64>,
    /// Remainder in adapted coordinates.
    pub remainder: DVector<f64>,
    /// Deviation `u - u_eq` corresponding to the transformed point.
    pub deviation: DVector<f64>,
}

/// Builds the transform with `omega_plus`/`omega_minus` defaulting to the splitting's rates.
pub fn quasilinearize(
    field: Arc<SplitField>,
    omega_plus: Option<f64>,
    omega_minus: Option<f64>,
) -> Result<Quasilinear> {
    let s = &field.splitting;
    let op = omega_plus.unwrap_or(s.omega_plus);
    let om = omega_minus.unwrap_or(s.omega_minus);
    if !op.is_finite() || !om.is_finite() {
        return Err(Error::InvalidInput(
            "transform needs finite rates on both blocks".into(),
        ));
    }
    let shift_plus = op - 1.0;
    let shift_rest = om + 1.0;
    let n = field.dim();
    let mut q = Quasilinear {
        field,
        shift_plus,
        shift_rest,
        condition: f64::INFINITY,
        db0_inv: DMatrix::zeros(n, n),
    };
    let db0 = q.db(&DVector::zeros(n));
    let sv = db0.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    q.condition = smax / smin;
    if !(q.condition < 1e12) {
        return Err(Error::Singular("DB(0) of the quasilinearizing transform"));
    }
    q.db0_inv = db0
        .try_inverse()
        .ok_or(Error::Singular("DB(0) of the quasilinearizing transform"))?;
    Ok(q)
}

impl Quasilinear {
    fn shifted(&self, m: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let p = &self.field.splitting.projection;
        &p.projector_plus * (m - w * self.shift_plus)
            + &p.projector_rest * (m - w * self.shift_rest)
    }

    /// `B(w)` for a deviation `w`.
    pub fn b(&self, w: &DVector<f64>) -> DVector<f64> {
        let f = self
            .field
            .model
            .vector_field(&(&self.field.equilibrium + w));
        self.shifted(&f, w)
    }

    /// `DB(w)`.
    pub fn db(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let p = &self.field.splitting.projection;
        let n = w.len();
        let j = self.field.model.jacobian(&(&self.field.equilibrium + w));
        let id = DMatrix::<f64>::identity(n, n);
        &p.projector_plus * (&j - &id * self.shift_plus)
            + &p.projector_rest * (&j - &id * self.shift_rest)
    }

    /// Solves `B(w) = v` by damped Newton starting from `DB(0)^-1 v`.
    pub fn invert_b(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let tol = 1e-13 * v.norm().max(1.0);
        let mut w = &self.db0_inv * v;
        let mut res = self.b(&w) - v;
        let mut rn = res.norm();
        for _ in 0..60 {
            if rn <= tol {
                return Ok(w);
            }
            let step = self
                .db(&w)
                .lu()
                .solve(&res)
                .ok_or(Error::Singular("DB during inversion"))?;
            let mut damping = 1.0;
            loop {
                let trial = &w - &step * damping;
                let tr = self.b(&trial) - v;
                let tn = tr.norm();
                if tn < rn || damping < 1e-6 {
                    w = trial;
                    res = tr;
                    rn = tn;
                    break;
                }
                damping *= 0.5;
            }
        }
        if rn <= 1e-12 * v.norm().max(1.0) {
            return Ok(w);
        }
        Err(Error::NewtonFailure {
            iterations: 60,
            residual: rn,
        })
    }

    /// Linear blocks and remainder of the transformed system at adapted coordinates `z`.
    pub fn pieces(&self, z: &DVector<f64>) -> Result<QuasiPieces> {
        let f = &self.field;
        let p = &f.splitting.projection;
        let v = f.from_coords(z);
        let w = self.invert_b(&v)?;
        let u = &f.equilibrium + &w;
        let jac = f.model.jacobian(&u);
        let a_plus = &p.coords_plus * &jac * &p.basis_plus;
        let a_rest = &p.coords_rest * &jac * &p.basis_rest;
        let g = self.db(&w) * f.model.vector_field(&u);
        let mut remainder = f.to_coords(&g);
        let k = a_plus.nrows();
        let zp = z.rows(0, k).into_owned();
        let zr = z.rows(k, z.len() - k).into_owned();
        let lin_p = &a_plus * zp;
        let lin_r = &a_rest * zr;
        for i in 0..k {
            remainder[i] -= lin_p[i];
        }
        for i in 0..lin_r.len() {
            remainder[k + i] -= lin_r[i];
        }
        Ok(QuasiPieces {
            a_plus,
            a_rest,
            remainder,
            deviation: w,
        })
    }
}
