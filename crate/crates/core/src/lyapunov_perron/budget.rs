//! Contraction constants: the `L1` budget, the feasible base-point radius and
//! sampled estimates of the growth and nonlinearity constants.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::split::SplitField;
use crate::error::{Error, Result};
use crate::numerics::spectral_norm;

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionBudget {
    pub c0: f64,
    pub cf: f64,
    pub k: u32,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub lambda: f64,
    pub l1: f64,
    /// `2 C0^{2(k+1)} / (1 - L1)`, when `L1 < 1`.
    pub m0: Option<f64>,
    /// Contraction factor `(1 + L1) / 2` promised for feasible radii.
    pub l: Option<f64>,
    /// Largest radius meeting all feasibility conditions.
    pub feasible_eps: Option<f64>,
}

/// `L1(lambda)` and, when it is below 1, the largest feasible radius found by bisection.
pub fn contraction_budget(
    c0: f64,
    cf: f64,
    k: u32,
    lambda_minus: f64,
    lambda_plus: f64,
    lambda: f64,
) -> Result<ContractionBudget> {
    if !(lambda > lambda_minus && lambda < lambda_plus) {
        return Err(Error::InvalidInput(format!(
            "lambda = {lambda} must lie strictly inside ({lambda_minus}, {lambda_plus})"
        )));
    }
    if !(c0 >= 1.0) || !(cf >= 0.0) || !c0.is_finite() || !cf.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need C0 >= 1 and Cf >= 0, got C0 = {c0}, Cf = {cf}"
        )));
    }
    let big = c0.powi(2 * (k as i32 + 1));
    let small = c0.powi(2 * k as i32);
    let d_lo = lambda - lambda_minus;
    let d_hi = lambda_plus - lambda;
    let l1 = big * cf / d_lo + big * cf / d_hi;
    let mut out = ContractionBudget {
        c0,
        cf,
        k,
        lambda_minus,
        lambda_plus,
        lambda,
        l1,
        m0: None,
        l: None,
        feasible_eps: None,
    };
    if l1 >= 1.0 {
        return Ok(out);
    }
    let m0 = 2.0 * big / (1.0 - l1);
    let m1 = (c0 + cf) * m0;
    let l = 0.5 * (1.0 + l1);
    let kk = k as f64;
    let feasible = |eps: f64| {
        let s1 = 2.0 * (kk + 1.0) * big * m1 * eps;
        if !(s1 < d_lo.min(d_hi)) {
            return false;
        }
        let first = big * cf / (d_lo - s1) + big * cf / (d_hi - s1);
        let s2 = 2.0 * kk * small * m1 * eps;
        let num = small * (c0 * m0 * eps + cf);
        let second = num / (d_lo - s2) + num / (d_hi - s2);
        first <= l && second <= l && d_lo > s2 && d_hi > s2
    };
    let mut hi = d_lo.min(d_hi) / (2.0 * (kk + 1.0) * big * m1);
    let mut lo = 0.0;
    if feasible(hi) {
        lo = hi;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    out.m0 = Some(m0);
    out.l = Some(l);
    out.feasible_eps = if lo > 0.0 { Some(lo) } else { None };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledConstants {
    pub c0: f64,
    pub cf: f64,
}

/// Estimates `C0` from the block semigroups over `[0, horizon]` and `Cf` as the
/// largest `|Dg(z)|` over seeded samples in the coordinate ball of `radius`.
pub fn sample_constants(
    field: &SplitField,
    radius: f64,
    samples: usize,
    horizon: f64,
    seed: u64,
) -> Result<SampledConstants> {
    if !(radius > 0.0) || !(horizon > 0.0) || samples == 0 {
        return Err(Error::InvalidInput(
            "sampling needs positive radius, horizon and count".into(),
        ));
    }
    let s = &field.splitting;
    let mut worst = 1.0f64;
    let steps = 200;
    let ds = horizon / steps as f64;
    let track = |a: &DMatrix<f64>, sign: f64, rate: f64, worst: &mut f64| {
        if a.is_empty() {
            return;
        }
        let step = (a * (sign * ds)).exp();
        let mut m = DMatrix::<f64>::identity(a.nrows(), a.nrows());
        for i in 1..=steps {
            m = &step * m;
            let t = sign * ds * i as f64;
            *worst = worst.max(spectral_norm(&m) * (-rate * t).exp());
        }
    };
    track(&field.a_plus, -1.0, s.lambda_plus, &mut worst);
    track(&field.a_rest, 1.0, s.lambda_minus, &mut worst);
    let c0 = worst.sqrt();

    let n = field.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cf = spectral_norm(&field.remainder_jacobian_coords(&DVector::zeros(n)));
    for _ in 0..samples {
        let dir = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        let scale = radius * rng.gen::<f64>().powf(1.0 / n as f64) / norm;
        cf = cf.max(spectral_norm(
            &field.remainder_jacobian_coords(&(dir * scale)),
        ));
    }
    Ok(SampledConstants { c0, cf })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_example() {
        let b = contraction_budget(1.0, 0.1, 1, -1.0, 1.0, 0.0).unwrap();
        assert!((b.l1 - 0.2).abs() < 1e-15);
        assert!(b.feasible_eps.is_some());
    }

    #[test]
    fn zero_nonlinearity() {
        let b = contraction_budget(1.0, 0.0, 1, -1.0, 1.0, 0.0).unwrap();
        assert_eq!(b.l1, 0.0);
        let eps = b.feasible_eps.unwrap();
        assert!((eps - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_budget() {
        let b = contraction_budget(1.0, 1.0, 1, -1.0, 1.0, 0.0).unwrap();
        assert_eq!(b.l1, 2.0);
        assert!(b.feasible_eps.is_none() && b.m0.is_none());
    }

    #[test]
    fn lambda_outside_gap() {
        assert!(contraction_budget(1.0, 0.1, 1, -1.0, 1.0, 1.0).is_err());
    }
}
