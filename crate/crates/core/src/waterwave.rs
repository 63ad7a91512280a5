//! Linear water-wave and two-fluid interface symbols at the flat state.
//!
//! Only the flat surface `h = 0` is handled; the shape derivative away from it
//! would need the full Dirichlet-Neumann operator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// `tau / tanh(depth * tau)`, with the limit `1 / depth` at `tau = 0` and `tau` for infinite depth.
fn tau_coth(tau: f64, depth: f64) -> f64 {
    if depth.is_infinite() {
        return tau;
    }
    let x = depth * tau;
    if x < 1e-6 {
        return (1.0 + x * x / 3.0) / depth;
    }
    tau / x.tanh()
}

/// `k tanh(h0 k)`, or `k` for infinite depth.
pub fn dn_flat_symbol(k: f64, h0: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    if h0.is_infinite() {
        k
    } else {
        k * (h0 * k).tanh()
    }
}

fn fft_multiply(samples: &[f64], symbol: impl Fn(f64) -> Complex64, length: f64) -> Vec<f64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (m, c) in buf.iter_mut().enumerate() {
        let signed = if m <= n / 2 {
            m as f64
        } else {
            m as f64 - n as f64
        };
        let kappa = 2.0 * PI * signed / length;
        *c *= if n % 2 == 0 && m == n / 2 {
            symbol(kappa).re.into()
        } else {
            symbol(kappa)
        };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// First shape derivative of the flat Dirichlet-Neumann form,
/// `int eta (Phi1' Phi2' - G(0)Phi1 G(0)Phi2) dx` on a periodic grid of the given length.
pub fn dn_shape_derivative_flat(
    eta: &[f64],
    phi1: &[f64],
    phi2: &[f64],
    h0: f64,
    length: f64,
) -> Result<f64> {
    let n = eta.len();
    if phi1.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phi1.len(),
        });
    }
    if phi2.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phi2.len(),
        });
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "grid length must be a power of two, got {n}"
        )));
    }
    if !(length > 0.0) || !(h0 > 0.0) {
        return Err(Error::InvalidInput(
            "period and depth must be positive".into(),
        ));
    }
    let g0 = |kappa: f64| Complex64::new(dn_flat_symbol(kappa.abs(), h0), 0.0);
    let dx = |kappa: f64| Complex64::new(0.0, kappa);
    let d1 = fft_multiply(phi1, dx, length);
    let d2 = fft_multiply(phi2, dx, length);
    let g1 = fft_multiply(phi1, g0, length);
    let g2 = fft_multiply(phi2, g0, length);
    let sum: f64 = (0..n)
        .map(|i| eta[i] * (d1[i] * d2[i] - g1[i] * g2[i]))
        .sum();
    Ok(sum * length / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneFluidConfig {
    pub g: f64,
    pub sigma: f64,
    /// Depth; `f64::INFINITY` for infinite depth.
    pub h0: f64,
    pub c: Vec<f64>,
}

impl OneFluidConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !(self.g >= 0.0) || !(self.h0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need sigma > 0, g >= 0, depth > 0; got sigma = {}, g = {}, depth = {}",
                self.sigma, self.g, self.h0
            )));
        }
        if self.c.is_empty() || self.c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "background velocity must be a finite nonempty vector".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoFluidConfig {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub nu_plus: Vec<f64>,
    pub nu_minus: Vec<f64>,
    pub h_plus: f64,
    pub h_minus: f64,
    pub g: f64,
    pub sigma: f64,
}

impl TwoFluidConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_plus > 0.0) || !(self.rho_minus > 0.0) {
            return Err(Error::InvalidInput("densities must be positive".into()));
        }
        if !(self.sigma > 0.0)
            || !(self.h_plus > 0.0)
            || !(self.h_minus > 0.0)
            || !self.g.is_finite()
        {
            return Err(Error::InvalidInput(
                "need sigma > 0, positive depths and finite g".into(),
            ));
        }
        if self.nu_plus.len() != self.nu_minus.len() {
            return Err(Error::DimensionMismatch {
                expected: self.nu_plus.len(),
                got: self.nu_minus.len(),
            });
        }
        Ok(())
    }

    /// `rho+ |nu+|^2 + rho- |nu-|^2`.
    pub fn shear(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        self.rho_plus * sq(&self.nu_plus) + self.rho_minus * sq(&self.nu_minus)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_xi(xi: &[f64], dim: usize) -> Result<f64> {
    if xi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: xi.len(),
        });
    }
    let norm = dot(xi, xi).sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidInput("symbol is singular at xi = 0".into()));
    }
    Ok(norm)
}

/// `-(c.xi)^2 / G0(|xi|) + g + sigma |xi|^2`.
pub fn capillary_multiplier(xi: &[f64], cfg: &OneFluidConfig) -> Result<f64> {
    cfg.validate()?;
    let k = check_xi(xi, cfg.c.len())?;
    let cx = dot(&cfg.c, xi);
    Ok(-cx * cx / dn_flat_symbol(k, cfg.h0) + cfg.g + cfg.sigma * k * k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FroudeBond {
    pub froude: f64,
    pub bond: f64,
    /// `F < 1` and `B <= 3 / F^2`.
    pub coercive: bool,
}

pub fn froude_bond(cfg: &OneFluidConfig) -> Result<FroudeBond> {
    cfg.validate()?;
    if cfg.h0.is_infinite() {
        return Err(Error::FroudeUndefined);
    }
    if !(cfg.g > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Froude number needs g > 0, got {}",
            cfg.g
        )));
    }
    let c = dot(&cfg.c, &cfg.c).sqrt();
    let froude = c / (cfg.g * cfg.h0).sqrt();
    let bond = cfg.g * cfg.h0 * cfg.h0 / cfg.sigma;
    let coercive = froude < 1.0 && bond * froude * froude <= 3.0;
    Ok(FroudeBond {
        froude,
        bond,
        coercive,
    })
}

/// Direction of the background velocity, or the first axis when it vanishes.
fn worst_direction(c: &[f64]) -> Vec<f64> {
    let n = dot(c, c).sqrt();
    if n == 0.0 {
        let mut e = vec![0.0; c.len()];
        e[0] = 1.0;
        e
    } else {
        c.iter().map(|x| x / n).collect()
    }
}

/// `(k, m(k c_hat))` on a logarithmic grid, along the direction where the multiplier is smallest.
pub fn capillary_log_scan(
    cfg: &OneFluidConfig,
    k_min: f64,
    k_max: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    if !(k_min > 0.0) || !(k_max > k_min) || points < 2 {
        return Err(Error::InvalidInput(
            "scan needs 0 < k_min < k_max and at least two points".into(),
        ));
    }
    let dir = worst_direction(&cfg.c);
    let (a, b) = (k_min.ln(), k_max.ln());
    (0..points)
        .map(|i| {
            let k = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
            let xi: Vec<f64> = dir.iter().map(|d| d * k).collect();
            capillary_multiplier(&xi, cfg).map(|m| (k, m))
        })
        .collect()
}

/// Number of nonzero lattice modes `2 pi n / period`, `|n_i| <= cutoff`, with negative multiplier.
pub fn morse_index_count(cfg: &OneFluidConfig, period: f64, cutoff: usize) -> Result<usize> {
    cfg.validate()?;
    let d = cfg.c.len();
    if d > 3 {
        return Err(Error::InvalidInput(format!(
            "lattice scans support up to 3 dimensions, got {d}"
        )));
    }
    if !(period > 0.0) {
        return Err(Error::InvalidInput("period must be positive".into()));
    }
    let side = 2 * cutoff + 1;
    let mut count = 0;
    for mut idx in 0..side.pow(d as u32) {
        let xi: Vec<f64> = (0..d)
            .map(|_| {
                let n = (idx % side) as f64 - cutoff as f64;
                idx /= side;
                2.0 * PI * n / period
            })
            .collect();
        if xi.iter().all(|x| *x == 0.0) {
            continue;
        }
        if capillary_multiplier(&xi, cfg)? < 0.0 {
            count += 1;
        }
    }
    Ok(count)
}

/// `sigma |xi|^2 + g (rho- - rho+) - sum rho (nu.xi)^2 / (|xi| tanh(h |xi|))`.
pub fn kh_rt_multiplier(xi: &[f64], cfg: &TwoFluidConfig) -> Result<f64> {
    cfg.validate()?;
    let k = check_xi(xi, cfg.nu_plus.len())?;
    let term = |rho: f64, nu: &[f64], h: f64| {
        let p = dot(nu, xi);
        rho * p * p / dn_flat_symbol(k, h)
    };
    Ok(cfg.sigma * k * k + cfg.g * (cfg.rho_minus - cfg.rho_plus)
        - term(cfg.rho_plus, &cfg.nu_plus, cfg.h_plus)
        - term(cfg.rho_minus, &cfg.nu_minus, cfg.h_minus))
}

/// Lower bound `min_{tau >= 0} sigma tau^2 + g (rho- - rho+) - sum rho |nu|^2 tau / tanh(h tau)`.
pub fn kh_bound(cfg: &TwoFluidConfig) -> Result<f64> {
    cfg.validate()?;
    let base = cfg.g * (cfg.rho_minus - cfg.rho_plus);
    let b = cfg.shear();
    if cfg.h_plus.is_infinite() && cfg.h_minus.is_infinite() {
        return Ok(base - b * b / (4.0 * cfg.sigma));
    }
    let sq = |v: &[f64]| dot(v, v);
    let (wp, wm) = (
        cfg.rho_plus * sq(&cfg.nu_plus),
        cfg.rho_minus * sq(&cfg.nu_minus),
    );
    let phi = |tau: f64| {
        cfg.sigma * tau * tau + base
            - wp * tau_coth(tau, cfg.h_plus)
            - wm * tau_coth(tau, cfg.h_minus)
    };
    let tau_max = (b / cfg.sigma).max(1.0);
    let coarse = 400;
    let nodes: Vec<f64> = (0..=coarse)
        .map(|i| tau_max * i as f64 / coarse as f64)
        .collect();
    let (best_i, _) =
        nodes
            .iter()
            .map(|&t| phi(t))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    let mut lo = nodes[best_i.saturating_sub(1)];
    let mut hi = nodes[(best_i + 1).min(coarse)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * tau_max {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = phi(x2);
        }
    }
    Ok([phi(0.0), phi(lo), phi(hi), f1, f2]
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_fluid(nu_plus: [f64; 2], nu_minus: [f64; 2], depth: f64) -> TwoFluidConfig {
        TwoFluidConfig {
            rho_plus: 1.0,
            rho_minus: 2.0,
            nu_plus: nu_plus.to_vec(),
            nu_minus: nu_minus.to_vec(),
            h_plus: depth,
            h_minus: depth,
            g: 1.0,
            sigma: 1.0,
        }
    }

    #[test]
    fn symbol_values() {
        assert_eq!(dn_flat_symbol(0.0, 1.0), 0.0);
        assert_eq!(dn_flat_symbol(3.0, f64::INFINITY), 3.0);
        assert!((dn_flat_symbol(1.0, 1.0) - 0.761_594_155_955_764_9).abs() < 1e-15);
    }

    #[test]
    fn froude_example() {
        let cfg = OneFluidConfig {
            g: 1.0,
            sigma: 1.0,
            h0: 1.0,
            c: vec![0.5],
        };
        let fb = froude_bond(&cfg).unwrap();
        assert_eq!((fb.froude, fb.bond, fb.coercive), (0.5, 1.0, true));
        let deep = OneFluidConfig {
            h0: f64::INFINITY,
            ..cfg
        };
        assert_eq!(froude_bond(&deep), Err(Error::FroudeUndefined));
    }

    #[test]
    fn critical_froude_not_coercive() {
        let cfg = OneFluidConfig {
            g: 4.0,
            sigma: 1.0,
            h0: 1.0,
            c: vec![2.0],
        };
        let fb = froude_bond(&cfg).unwrap();
        assert_eq!(fb.froude, 1.0);
        assert!(!fb.coercive);
    }

    #[test]
    fn capillary_threshold() {
        let cfg = OneFluidConfig {
            g: 1.0,
            sigma: 1.0,
            h0: f64::INFINITY,
            c: vec![2.0, 0.0],
        };
        assert_eq!(capillary_multiplier(&[1.0, 0.0], &cfg).unwrap(), -2.0);
        assert!(capillary_multiplier(&[0.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn kh_closed_form_cases() {
        let inf = f64::INFINITY;
        assert_eq!(
            kh_bound(&two_fluid([1.0, 0.0], [0.5, 0.5], inf)).unwrap(),
            0.0
        );
        assert_eq!(
            kh_bound(&two_fluid([1.0, 1.0], [0.5, 0.5], inf)).unwrap(),
            -1.25
        );
        assert_eq!(
            kh_bound(&two_fluid([0.0, 0.0], [0.0, 0.0], 1.0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn kh_deep_finite_matches_closed_form() {
        let v = kh_bound(&two_fluid([1.0, 0.0], [0.5, 0.5], 1e3)).unwrap();
        assert!(v.abs() < 1e-6);
    }

    #[test]
    fn kh_substitution_example() {
        let cfg = TwoFluidConfig {
            rho_plus: 1.0,
            rho_minus: 1.0,
            nu_plus: vec![1.0, 0.0],
            nu_minus: vec![-1.0, 0.0],
            h_plus: f64::INFINITY,
            h_minus: f64::INFINITY,
            g: 0.0,
            sigma: 1.0,
        };
        for k in [0.5, 1.0, 1.9, 2.1, 3.0] {
            let m = kh_rt_multiplier(&[k, 0.0], &cfg).unwrap();
            assert!((m - (k * k - 2.0 * k)).abs() < 1e-14);
        }
    }

    #[test]
    fn shape_derivative_zero_cases() {
        let n = 64;
        let xs: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        let zero = vec![0.0; n];
        let one = vec![1.0; n];
        let c3: Vec<f64> = xs.iter().map(|x| (3.0 * x).cos()).collect();
        assert_eq!(
            dn_shape_derivative_flat(&zero, &c3, &c3, 1.0, 2.0 * PI).unwrap(),
            0.0
        );
        let v = dn_shape_derivative_flat(&one, &c3, &c3, f64::INFINITY, 2.0 * PI).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(dn_shape_derivative_flat(&one[..60], &c3[..60], &c3[..60], 1.0, 2.0 * PI).is_err());
    }
}
