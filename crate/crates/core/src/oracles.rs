//! Independent references: backward shooting onto the unstable manifold,
//! finite-difference Jacobians and the closed-form mode-pair quartic.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linear_analysis::SpectralSplitting;
use crate::models::ModelSystem;
use crate::numerics::rk4_integrate;

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    pub base_point: DVector<f64>,
    /// Complement coordinates of `u(0) - u_eq`.
    pub matched_value: DVector<f64>,
    pub shooting_time: f64,
    /// `|P+ (u(0) - u_eq) - target|`.
    pub match_residual: f64,
    pub iterations: usize,
    /// Tolerance plus a step-halving estimate of the integration error and the
    /// start-off-manifold error.
    pub error_budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub horizon: f64,
    pub tol: f64,
    pub dt: f64,
    pub max_iter: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            horizon: 15.0,
            tol: 1e-12,
            dt: 0.0037,
            max_iter: 50,
        }
    }
}

/// Finds `a` such that the orbit starting at `u_eq + basis_plus a` at `t = -T`
/// reaches the target unstable coordinates at `t = 0`, by damped Newton.
pub fn backward_shoot(
    model: &dyn ModelSystem,
    splitting: &SpectralSplitting,
    target_plus: &DVector<f64>,
    opts: ShootingOptions,
) -> Result<ShootingResult> {
    let proj = &splitting.projection;
    let k = proj.dim_plus();
    if target_plus.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: target_plus.len(),
        });
    }
    if k == 0 || k > 3 {
        return Err(Error::InvalidInput(format!(
            "shooting supports 1 to 3 unstable dimensions, got {k}"
        )));
    }
    if !(opts.horizon > 0.0) || !(opts.dt > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(
            "shooting needs positive horizon, step and tolerance".into(),
        ));
    }
    let eq = model.equilibrium();
    let field = |_t: f64, u: &DVector<f64>| model.vector_field(u);
    let t = opts.horizon;
    let end_state = |a: &DVector<f64>, dt: f64| {
        let u0 = &eq + &proj.basis_plus * a;
        rk4_integrate(&field, &u0, -t, 0.0, dt) - &eq
    };
    let residual = |a: &DVector<f64>| &proj.coords_plus * end_state(a, opts.dt) - target_plus;

    let mut a = (&splitting.a_plus * -t).exp() * target_plus;
    let mut r = residual(&a);
    let mut rn = r.norm();
    let mut iterations = 0;
    while rn > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NewtonFailure {
                iterations,
                residual: rn,
            });
        }
        iterations += 1;
        let scale = a.norm().max(1e-300);
        let step = 1e-6 * scale;
        let mut jac = DMatrix::zeros(k, k);
        for j in 0..k {
            let mut e = DVector::zeros(k);
            e[j] = step;
            let col = (residual(&(&a + &e)) - residual(&(&a - &e))) / (2.0 * step);
            jac.set_column(j, &col);
        }
        let delta = jac
            .lu()
            .solve(&r)
            .ok_or(Error::Singular("shooting Jacobian"))?;
        let mut damping = 1.0;
        loop {
            let trial = &a - &delta * damping;
            let tr = residual(&trial);
            let tn = tr.norm();
            if tn.is_finite() && (tn < rn || damping < 1e-4) {
                a = trial;
                r = tr;
                rn = tn;
                break;
            }
            damping *= 0.5;
        }
        if !rn.is_finite() {
            return Err(Error::NonFinite("shooting residual"));
        }
    }
    let w = end_state(&a, opts.dt);
    let w_fine = end_state(&a, opts.dt / 2.0);
    let matched_value = &proj.coords_rest * &w;
    let integration = (&proj.coords_rest * &w_fine - &matched_value).norm() * 16.0 / 15.0;
    let decay = (-(splitting.lambda_plus - splitting.lambda_minus) * t).exp();
    let error_budget = opts.tol + integration + target_plus.norm_squared() * decay;
    Ok(ShootingResult {
        base_point: target_plus.clone(),
        matched_value,
        shooting_time: t,
        match_residual: rn,
        iterations,
        error_budget,
    })
}

/// Central-difference Jacobian, column by column.
pub fn finite_difference_jacobian<F>(f: F, u: &DVector<f64>, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!(
            "difference step must be positive, got {h}"
        )));
    }
    let n = u.len();
    let m = f(u).len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = h;
        let col = (f(&(u + &e)) - f(&(u - &e))) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Roots of `l^4 + (c+^2 + c-^2 - 2c^2) l^2 + (c+ c- - c^2)^2`, sorted by real then imaginary part.
pub fn quartic_roots(c_plus: f64, c_minus: f64, c: f64) -> [Complex64; 4] {
    let p = c_plus * c_plus + c_minus * c_minus - 2.0 * c * c;
    let q = (c_plus * c_minus - c * c).powi(2);
    let sq = Complex64::new(p * p - 4.0 * q, 0.0).sqrt();
    // avoid cancellation: the larger root first, the other from the product q
    let big = if p >= 0.0 {
        (-p - sq) / 2.0
    } else {
        (-p + sq) / 2.0
    };
    let small = if big.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(q, 0.0) / big
    };
    let r1 = big.sqrt();
    let r2 = small.sqrt();
    let mut roots = [r1, -r1, r2, -r2];
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}
