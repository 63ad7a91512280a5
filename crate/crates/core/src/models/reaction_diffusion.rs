//! Cosine-Galerkin truncation of `u_t = u_xx + lambda u - u^3` on the circle.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::ModelSystem;
use crate::error::{Error, Result};
use crate::graded_space::NormLadder;

/// State: coefficients `a_k` of `u(x) = sum_k a_k cos(k x)`, `k = 0..n_modes`.
pub struct ReactionDiffusion {
    lambda: f64,
    n: usize,
    /// `cos(k x_m)` on the quadrature nodes, one row per mode.
    cos_table: DMatrix<f64>,
    /// Projection weights `w_k^-1 * 2 pi / M`.
    proj: Vec<f64>,
}

pub fn reaction_diffusion(lambda: f64, n_modes: usize) -> Result<ReactionDiffusion> {
    if n_modes < 2 {
        return Err(Error::InvalidInput(
            "reaction-diffusion needs at least 2 modes".into(),
        ));
    }
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    let m = 4 * n_modes;
    let cos_table = DMatrix::from_fn(n_modes, m, |k, j| {
        (k as f64 * 2.0 * PI * j as f64 / m as f64).cos()
    });
    let proj = (0..n_modes)
        .map(|k| {
            if k == 0 {
                1.0 / m as f64
            } else {
                2.0 / m as f64
            }
        })
        .collect();
    Ok(ReactionDiffusion {
        lambda,
        n: n_modes,
        cos_table,
        proj,
    })
}

impl ReactionDiffusion {
    fn nodal(&self, a: &DVector<f64>) -> DVector<f64> {
        self.cos_table.tr_mul(a)
    }

    /// Mass weights `integral cos^2(kx)`.
    fn mass(&self, k: usize) -> f64 {
        if k == 0 {
            2.0 * PI
        } else {
            PI
        }
    }
}

impl ModelSystem for ReactionDiffusion {
    fn name(&self) -> &str {
        "rd"
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn vector_field(&self, a: &DVector<f64>) -> DVector<f64> {
        let u = self.nodal(a);
        let cube = u.map(|x| x * x * x);
        let p = &self.cos_table * cube;
        DVector::from_fn(self.n, |k, _| {
            let kk = (k * k) as f64;
            (self.lambda - kk) * a[k] - self.proj[k] * p[k]
        })
    }

    fn jacobian(&self, a: &DVector<f64>) -> DMatrix<f64> {
        let u = self.nodal(a);
        let w = u.map(|x| 3.0 * x * x);
        let mut scaled = self.cos_table.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= w[j];
        }
        let mut jac = -(&scaled * self.cos_table.transpose());
        for k in 0..self.n {
            for j in 0..self.n {
                jac[(k, j)] *= self.proj[k];
            }
            jac[(k, k)] += self.lambda - (k * k) as f64;
        }
        jac
    }

    fn equilibrium(&self) -> DVector<f64> {
        DVector::zeros(self.n)
    }

    fn ladder(&self) -> NormLadder {
        NormLadder::Sobolev {
            symbols: (0..self.n).map(|k| (k * k) as f64).collect(),
            order_per_level: 2.0,
        }
    }

    /// Hessian of `integral (u_x^2/2 - lambda u^2/2 + u^4/4)` in the coefficient variables.
    fn hessian_form(&self, a: &DVector<f64>) -> Option<DMatrix<f64>> {
        let j = self.jacobian(a);
        Some(DMatrix::from_fn(self.n, self.n, |k, l| {
            -self.mass(k) * j[(k, l)]
        }))
    }
}
