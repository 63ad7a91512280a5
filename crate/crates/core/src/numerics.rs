//! Small dense numerical kernels shared by the solvers: RK4 stepping,
//! matrix exponentials with the first two phi-functions, interpolation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One classical RK4 step of `y' = field(t, y)`.
pub fn rk4_step<F>(field: &F, t: f64, y: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = field(t, y);
    let k2 = field(t + 0.5 * h, &(y + &k1 * (0.5 * h)));
    let k3 = field(t + 0.5 * h, &(y + &k2 * (0.5 * h)));
    let k4 = field(t + h, &(y + &k3 * h));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Number of equal substeps needed to cover `span` with steps no larger than `max_step`.
pub fn substeps(span: f64, max_step: f64) -> usize {
    ((span.abs() / max_step).ceil() as usize).max(1)
}

/// Integrates `y' = field(t, y)` from `t0` to `t1` (either direction) with RK4.
pub fn rk4_integrate<F>(
    field: &F,
    y0: &DVector<f64>,
    t0: f64,
    t1: f64,
    max_step: f64,
) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let n = substeps(t1 - t0, max_step);
    let h = (t1 - t0) / n as f64;
    let mut y = y0.clone();
    for i in 0..n {
        y = rk4_step(field, t0 + i as f64 * h, &y, h);
    }
    y
}

/// Integrates and records the state at every step; returns `(times, states)`.
pub fn rk4_trajectory<F>(
    field: &F,
    y0: &DVector<f64>,
    t0: f64,
    t1: f64,
    max_step: f64,
) -> (Vec<f64>, Vec<DVector<f64>>)
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let n = substeps(t1 - t0, max_step);
    let h = (t1 - t0) / n as f64;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut y = y0.clone();
    times.push(t0);
    states.push(y.clone());
    for i in 0..n {
        y = rk4_step(field, t0 + i as f64 * h, &y, h);
        times.push(t0 + (i + 1) as f64 * h);
        states.push(y.clone());
    }
    (times, states)
}

/// `exp(h A)` together with `phi1(h A)` and `phi2(h A)`, where
/// `phi1(z) = (e^z - 1)/z` and `phi2(z) = (e^z - 1 - z)/z^2`.
///
/// Computed from the exponential of the augmented block matrix
/// `[[hA, I, 0], [0, 0, I], [0, 0, 0]]`.
pub struct PhiFactors {
    pub exp: DMatrix<f64>,
    pub phi1: DMatrix<f64>,
    pub phi2: DMatrix<f64>,
}

pub fn phi_factors(a: &DMatrix<f64>, h: f64) -> PhiFactors {
    let n = a.nrows();
    if n == 0 {
        return PhiFactors {
            exp: DMatrix::zeros(0, 0),
            phi1: DMatrix::zeros(0, 0),
            phi2: DMatrix::zeros(0, 0),
        };
    }
    let mut aug = DMatrix::<f64>::zeros(3 * n, 3 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * h));
    for i in 0..n {
        aug[(i, n + i)] = 1.0;
        aug[(n + i, 2 * n + i)] = 1.0;
    }
    let e = aug.exp();
    PhiFactors {
        exp: e.view((0, 0), (n, n)).into_owned(),
        phi1: e.view((0, n), (n, n)).into_owned(),
        phi2: e.view((0, 2 * n), (n, n)).into_owned(),
    }
}

/// Four-point Lagrange interpolation on a sorted node set, clamped at the ends.
pub fn lagrange4(times: &[f64], values: &[DVector<f64>], t: f64) -> DVector<f64> {
    let n = times.len();
    if n == 1 {
        return values[0].clone();
    }
    let idx = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => return values[i].clone(),
        Err(i) => i.clamp(1, n - 1) - 1,
    };
    if n < 4 {
        let (t0, t1) = (times[idx], times[idx + 1]);
        let s = (t - t0) / (t1 - t0);
        return &values[idx] * (1.0 - s) + &values[idx + 1] * s;
    }
    let start = idx.saturating_sub(1).min(n - 4);
    let mut out = DVector::zeros(values[0].len());
    for j in start..start + 4 {
        let mut w = 1.0;
        for m in start..start + 4 {
            if m != j {
                w *= (t - times[m]) / (times[j] - times[m]);
            }
        }
        out.axpy(w, &values[j], 1.0);
    }
    out
}

/// Largest and smallest eigenvalue of the symmetric pencil `(S, L)` with `L`
/// positive definite.
pub fn generalized_sym_extremes(s: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<(f64, f64)> {
    let chol = l
        .clone()
        .cholesky()
        .ok_or(Error::Singular("metric is not positive definite"))?;
    let g = chol.l();
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or(Error::Singular("Cholesky factor"))?;
    let m = &g_inv * s * g_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((max, min))
}

/// Spectral (2-)norm of a dense matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}
