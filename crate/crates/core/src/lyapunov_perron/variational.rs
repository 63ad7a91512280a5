//! First-order variational system of the discretized operator: derivative of the
//! graph with respect to the base point.

use nalgebra::DMatrix;

use super::solver::{LpSolution, LpSolver};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LpVariational {
    pub times: Vec<f64>,
    /// `U^1(t_j)`: derivative of the orbit deviation with respect to the base point.
    pub matrices: Vec<DMatrix<f64>>,
    /// Derivative of the graph value, in complement coordinates.
    pub dq: DMatrix<f64>,
    pub iterations: usize,
}

/// Linearizes the discrete fixed-point equation along `base` and solves for the
/// derivative with boundary value `I` on the unstable block at `t = 0`.
pub fn lp_variational(solver: &LpSolver, base: &LpSolution) -> Result<LpVariational> {
    let (plus, rest) = solver.exponential_factors().ok_or_else(|| {
        Error::InvalidInput("variational solve supports the semilinear operator only".into())
    })?;
    let cfg = solver.config();
    if base.coords.len() != solver.times().len() {
        return Err(Error::DimensionMismatch {
            expected: solver.times().len(),
            got: base.coords.len(),
        });
    }
    if base.diagnostics.fixed_point_residual > 10.0 * cfg.tol {
        return Err(Error::NotATrajectory {
            residual: base.diagnostics.fixed_point_residual,
            tol: 10.0 * cfg.tol,
        });
    }
    let field = solver.field();
    let (k, m) = (field.dim_plus(), field.dim_rest());
    let n = k + m;
    let times = solver.times();
    let nodes = times.len();
    let h = solver.step();
    let lambda = solver.lambda();
    let jac: Vec<DMatrix<f64>> = base
        .coords
        .iter()
        .map(|z| field.remainder_jacobian_coords(z))
        .collect();

    let mut y = vec![DMatrix::<f64>::zeros(n, k); nodes];
    let mut growing = 0;
    let mut last = f64::INFINITY;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let g: Vec<DMatrix<f64>> = jac.iter().zip(&y).map(|(j, yj)| j * yj).collect();
        let mut next = vec![DMatrix::<f64>::zeros(n, k); nodes];
        let mut p = DMatrix::<f64>::identity(k, k);
        next[nodes - 1].rows_mut(0, k).copy_from(&p);
        for j in (0..nodes - 1).rev() {
            let g1 = g[j + 1].rows(0, k).into_owned();
            let g0 = g[j].rows(0, k).into_owned();
            p = &plus.exp * &p - (&plus.phi1 * &g1 + &plus.phi2 * (g0 - &g1)) * h;
            next[j].rows_mut(0, k).copy_from(&p);
        }
        let mut q = DMatrix::<f64>::zeros(m, k);
        for j in 0..nodes - 1 {
            let g0 = g[j].rows(k, m).into_owned();
            let g1 = g[j + 1].rows(k, m).into_owned();
            q = &rest.exp * &q + (&rest.phi1 * &g0 + &rest.phi2 * (g1 - &g0)) * h;
            next[j + 1].rows_mut(k, m).copy_from(&q);
        }
        if next.iter().any(|mat| mat.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("variational iterate"));
        }
        let delta = next
            .iter()
            .zip(&y)
            .zip(times)
            .map(|((a, b), t)| (-lambda * t).exp() * (a - b).norm())
            .fold(0.0, f64::max);
        y = next;
        if delta <= cfg.tol {
            break;
        }
        if delta >= last {
            growing += 1;
            if growing >= 3 {
                return Err(Error::LpNoContraction {
                    ratio: delta / last,
                });
            }
        } else {
            growing = 0;
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NotConverged {
                iterations,
                increment: delta,
                tol: cfg.tol,
            });
        }
        last = delta;
    }
    let dq = y[nodes - 1].rows(k, m).into_owned();
    let matrices = y.iter().map(|yj| &field.t * yj).collect();
    Ok(LpVariational {
        times: times.to_vec(),
        matrices,
        dq,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_analysis::eigen_split;
    use crate::lyapunov_perron::{split_field, LpConfig};
    use crate::models::{saddle_toy, SharedModel};
    use nalgebra::DVector;
    use std::sync::Arc;

    fn saddle1() -> LpSolver {
        let m: SharedModel = Arc::new(saddle_toy("saddle1").unwrap());
        let s = eigen_split(&m.jacobian(&m.equilibrium()), 0.5).unwrap();
        LpSolver::new(
            Arc::new(split_field(m, s).unwrap()),
            LpConfig {
                dt: 0.01,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_base_has_zero_derivative() {
        let s = saddle1();
        let sol = s.solve(&DVector::zeros(1)).unwrap();
        let v = lp_variational(&s, &sol).unwrap();
        assert_eq!(v.dq[(0, 0)], 0.0);
    }

    #[test]
    fn saddle1_derivative_of_parabola() {
        let s = saddle1();
        let x0 = 0.07;
        let sol = s.solve(&DVector::from_element(1, x0)).unwrap();
        let v = lp_variational(&s, &sol).unwrap();
        assert!((v.dq[(0, 0)] - 2.0 * x0 / 3.0).abs() < 1e-5);
    }
}
