//! Lyapunov quadratic forms, dissipativity margins and metric variation.

use nalgebra::{DMatrix, DVector};

use super::spectral::eigenvalues;
use crate::error::{Error, Result};
use crate::numerics::{generalized_sym_extremes, spectral_norm};

pub const MAX_LYAPUNOV_DIM: usize = 64;

/// Symmetric positive-definite `L` with `A^T L + L A - 2 omega L = -I`.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovForm {
    pub l: DMatrix<f64>,
    pub omega: f64,
}

impl LyapunovForm {
    /// `|A^T L + L A - 2 omega L + I|_F`.
    pub fn residual(&self, a: &DMatrix<f64>) -> f64 {
        let n = a.nrows();
        let r = a.transpose() * &self.l + &self.l * a - &self.l * (2.0 * self.omega)
            + DMatrix::identity(n, n);
        r.norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.l
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Solves `A^T L + L A - 2 omega L = -I` by a Kronecker-product linear solve.
pub fn lyapunov_form(a: &DMatrix<f64>, omega: f64) -> Result<LyapunovForm> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput(
            "Lyapunov form needs a square matrix".into(),
        ));
    }
    if n > MAX_LYAPUNOV_DIM {
        return Err(Error::InvalidInput(format!(
            "Lyapunov solve supports dimension <= {MAX_LYAPUNOV_DIM}, got {n}"
        )));
    }
    let abscissa = spectral_abscissa(a)?;
    if !(omega > abscissa) {
        return Err(Error::SpectralAbscissa { omega, abscissa });
    }
    let shifted = a - DMatrix::identity(n, n) * omega;
    let at = shifted.transpose();
    // column-major vec: vec(M^T L) = (I kron M^T) vec L, vec(L M) = (M^T kron I) vec L
    let mut k = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for p in 0..n {
                k[(row, p + j * n)] += at[(i, p)];
                k[(row, i + p * n)] += shifted[(p, j)];
            }
        }
    }
    let rhs = -DVector::from_fn(n * n, |idx, _| if idx % n == idx / n { 1.0 } else { 0.0 });
    let lu = k.clone().lu();
    let mut x = lu.solve(&rhs).ok_or(Error::Singular("Lyapunov operator"))?;
    let corr = lu
        .solve(&(&rhs - &k * &x))
        .ok_or(Error::Singular("Lyapunov operator"))?;
    x += corr;
    let l = DMatrix::from_column_slice(n, n, x.as_slice());
    let l = (&l + l.transpose()) * 0.5;
    Ok(LyapunovForm { l, omega })
}

/// Largest eigenvalue of `sym(L A)` relative to `L`, minus `omega`.
///
/// A nonpositive value certifies `<L w, A w> <= omega <L w, w>` for every `w`.
pub fn dissipativity_check(form: &LyapunovForm, a: &DMatrix<f64>, omega: f64) -> Result<f64> {
    let la = &form.l * a;
    let sym = (&la + la.transpose()) * 0.5;
    let (max, _) = generalized_sym_extremes(&sym, &form.l)?;
    Ok(max - omega)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricVariation {
    /// Discrete `l(t0, t1)`: maximal product of norm ratios over node chains.
    pub direct: f64,
    /// `exp(C_L^2 / 2 * sum |L_{j+1} - L_j|)`.
    pub bound: f64,
    pub c_l: f64,
}

/// Metric-variation functional of a sampled path of forms, together with its
/// derivative-based upper bound.
pub fn metric_variation_bound(path: &[LyapunovForm]) -> Result<MetricVariation> {
    if path.len() < 2 {
        return Err(Error::InvalidInput(
            "metric variation needs at least two samples".into(),
        ));
    }
    let n = path[0].l.nrows();
    if path.iter().any(|f| f.l.nrows() != n || f.l.ncols() != n) {
        return Err(Error::InvalidInput(
            "metric samples have differing sizes".into(),
        ));
    }
    let mut c_l = 1.0f64;
    for f in path {
        let ev = f.l.symmetric_eigenvalues();
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(lo > 0.0) {
            return Err(Error::Singular("metric is not positive definite"));
        }
        c_l = c_l.max(hi.sqrt()).max(1.0 / lo.sqrt());
    }
    let m = path.len();
    // ratio[i][j] = sup_v |v|_{L_j} / |v|_{L_i}
    let mut ratio = vec![vec![1.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let (hi, _) = generalized_sym_extremes(&path[j].l, &path[i].l)?;
            ratio[i][j] = hi.sqrt();
        }
    }
    let mut best = vec![0.0f64; m];
    best[0] = 1.0;
    for j in 1..m {
        best[j] = (0..j).map(|i| best[i] * ratio[i][j]).fold(0.0, f64::max);
    }
    let variation: f64 = path
        .windows(2)
        .map(|w| spectral_norm(&(&w[1].l - &w[0].l)))
        .sum();
    let direct = best[m - 1];
    let bound = (0.5 * c_l * c_l * variation).exp();
    Ok(MetricVariation { direct, bound, c_l })
}
