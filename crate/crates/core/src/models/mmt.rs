//! MMT model `u_t = -i(|D|^{2a} u + s |D|^b(||D|^b u|^2 |D|^b u))` on the
//! one-dimensional torus, written in the frame rotating with a plane wave.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::ModelSystem;
use crate::error::{Error, Result};
use crate::graded_space::NormLadder;
use crate::linear_analysis::eigenvalues;

pub const MAX_MODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct MmtParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub a: f64,
    pub xi0: i64,
    pub mode_set: Vec<i64>,
    pub period: f64,
}

impl MmtParams {
    /// Modes `xi0 - half_width ..= xi0 + half_width` on the `2 pi` torus.
    pub fn new(alpha: f64, beta: f64, sigma: f64, a: f64, xi0: i64, half_width: usize) -> Self {
        let k = half_width as i64;
        MmtParams {
            alpha,
            beta,
            sigma,
            a,
            xi0,
            mode_set: (xi0 - k..=xi0 + k).collect(),
            period: 2.0 * PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.beta <= self.alpha) || self.beta < 0.0 {
            return Err(Error::InvalidInput(format!(
                "beta must lie in [0, alpha], got {}",
                self.beta
            )));
        }
        if self.sigma != 1.0 && self.sigma != -1.0 {
            return Err(Error::InvalidInput(format!(
                "sigma must be +1 or -1, got {}",
                self.sigma
            )));
        }
        if !self.a.is_finite() || self.a < 0.0 {
            return Err(Error::InvalidInput(format!(
                "amplitude must be finite and >= 0, got {}",
                self.a
            )));
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::InvalidInput("torus period must be positive".into()));
        }
        let mut sorted = self.mode_set.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.mode_set.len() {
            return Err(Error::InvalidInput("mode set contains duplicates".into()));
        }
        if !self.mode_set.contains(&self.xi0) {
            return Err(Error::InvalidInput(format!(
                "carrier mode {} not in mode set",
                self.xi0
            )));
        }
        Ok(())
    }

    fn wavenumber(&self, xi: i64) -> f64 {
        (2.0 * PI * xi as f64 / self.period).abs()
    }

    /// `|k|^(2 alpha)`.
    fn dispersion(&self, xi: i64) -> f64 {
        let k = self.wavenumber(xi);
        if k == 0.0 {
            0.0
        } else {
            k.powf(2.0 * self.alpha)
        }
    }

    /// `|k|^beta`, vanishing at the zero mode when `beta > 0`.
    fn filter(&self, xi: i64) -> f64 {
        let k = self.wavenumber(xi);
        if self.beta == 0.0 {
            1.0
        } else if k == 0.0 {
            0.0
        } else {
            k.powf(self.beta)
        }
    }
}

/// `omega = -|xi0|^(2 alpha) - sigma a^2 |xi0|^(4 beta)`.
pub fn mmt_plane_wave_frequency(p: &MmtParams) -> f64 {
    let f = p.filter(p.xi0);
    -p.dispersion(p.xi0) - p.sigma * p.a * p.a * f.powi(4)
}

/// Linearization about the plane wave restricted to the modes `xi` and `2 xi0 - xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModePairBlock {
    pub xi: i64,
    pub partner: i64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub c: f64,
    /// Real form in the coordinates `(Re b+, Im b+, Re b-, Im b-)`.
    pub block: DMatrix<f64>,
}

impl ModePairBlock {
    /// `c+^2 + c-^2 - 2 c^2`.
    pub fn discriminant(&self) -> f64 {
        self.c_plus * self.c_plus + self.c_minus * self.c_minus - 2.0 * self.c * self.c
    }
}

pub fn mmt_block(p: &MmtParams, xi: i64) -> Result<ModePairBlock> {
    if xi == p.xi0 {
        return Err(Error::DegeneratePair(xi));
    }
    let omega = mmt_plane_wave_frequency(p);
    let partner = 2 * p.xi0 - xi;
    let s = p.sigma * p.a * p.a * p.filter(p.xi0).powi(2);
    let c = s * p.filter(xi) * p.filter(partner);
    let c_plus = omega + p.dispersion(xi) + 2.0 * s * p.filter(xi).powi(2);
    let c_minus = omega + p.dispersion(partner) + 2.0 * s * p.filter(partner).powi(2);
    #[rustfmt::skip]
    let block = DMatrix::from_row_slice(4, 4, &[
        0.0, c_plus, 0.0, -c,
        -c_plus, 0.0, -c, 0.0,
        0.0, -c, 0.0, c_minus,
        -c, 0.0, -c_minus, 0.0,
    ]);
    Ok(ModePairBlock {
        xi,
        partner,
        c_plus,
        c_minus,
        c,
        block,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub xi: i64,
    pub partner: i64,
    pub discriminant: f64,
    pub flagged: bool,
    /// Largest real part among the block eigenvalues.
    pub max_real_part: f64,
    pub confirmed: bool,
}

/// Discriminant per mode pair, with every pair cross-checked by a dense eigensolve.
pub fn mmt_unstable_scan(
    p: &MmtParams,
    xi_range: impl IntoIterator<Item = i64>,
) -> Result<Vec<ScanEntry>> {
    let mut out = Vec::new();
    for xi in xi_range {
        if xi == p.xi0 {
            continue;
        }
        let b = mmt_block(p, xi)?;
        let disc = b.discriminant();
        let max_re = eigenvalues(&b.block)?
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(ScanEntry {
            xi,
            partner: b.partner,
            discriminant: disc,
            flagged: disc < 0.0,
            max_real_part: max_re,
            confirmed: max_re > 1e-8,
        });
    }
    Ok(out)
}

/// Real Galerkin system over interleaved `(Re v_xi, Im v_xi)` coefficients.
pub struct MmtGalerkin {
    params: MmtParams,
    omega: f64,
    modes: Vec<i64>,
    min_mode: i64,
    /// Index of each mode in `modes`, offset by `min_mode`; `usize::MAX` if absent.
    lookup: Vec<usize>,
    lin: Vec<f64>,
    filt: Vec<f64>,
}

pub fn mmt_galerkin(p: &MmtParams) -> Result<MmtGalerkin> {
    p.validate()?;
    if p.mode_set.len() > MAX_MODES {
        return Err(Error::InvalidInput(format!(
            "mode set has {} modes, at most {MAX_MODES} supported",
            p.mode_set.len()
        )));
    }
    let omega = mmt_plane_wave_frequency(p);
    let modes = p.mode_set.clone();
    let min_mode = *modes.iter().min().unwrap();
    let max_mode = *modes.iter().max().unwrap();
    let mut lookup = vec![usize::MAX; (max_mode - min_mode + 1) as usize];
    for (i, &m) in modes.iter().enumerate() {
        lookup[(m - min_mode) as usize] = i;
    }
    let lin = modes.iter().map(|&m| p.dispersion(m) + omega).collect();
    let filt = modes.iter().map(|&m| p.filter(m)).collect();
    Ok(MmtGalerkin {
        params: p.clone(),
        omega,
        modes,
        min_mode,
        lookup,
        lin,
        filt,
    })
}

impl MmtGalerkin {
    pub fn params(&self) -> &MmtParams {
        &self.params
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn index_of(&self, mode: i64) -> Option<usize> {
        let off = mode - self.min_mode;
        if off < 0 || off as usize >= self.lookup.len() {
            return None;
        }
        let i = self.lookup[off as usize];
        (i != usize::MAX).then_some(i)
    }

    fn complex(&self, u: &DVector<f64>) -> Vec<Complex64> {
        (0..self.modes.len())
            .map(|i| Complex64::new(u[2 * i], u[2 * i + 1]))
            .collect()
    }

    fn filtered(&self, u: &DVector<f64>) -> Vec<Complex64> {
        self.complex(u)
            .iter()
            .zip(&self.filt)
            .map(|(v, f)| v * f)
            .collect()
    }

    /// Galerkin projection of `|w|^2 w` by direct triple summation.
    fn cubic(&self, w: &[Complex64]) -> Vec<Complex64> {
        let n = self.modes.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i1, &m1) in self.modes.iter().enumerate() {
            if w[i1] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (i2, &m2) in self.modes.iter().enumerate() {
                let p12 = w[i1] * w[i2].conj();
                if p12 == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (i3, &m3) in self.modes.iter().enumerate() {
                    if let Some(k) = self.index_of(m1 - m2 + m3) {
                        out[k] += p12 * w[i3];
                    }
                }
            }
        }
        out
    }

    /// Discrete energy `sum (|k|^(2a) + omega)|v|^2/2 + (s/4) sum w1 conj(w2) w3 conj(w4)`.
    pub fn energy(&self, u: &DVector<f64>) -> f64 {
        let v = self.complex(u);
        let w = self.filtered(u);
        let quad: f64 = v
            .iter()
            .zip(&self.lin)
            .map(|(z, l)| 0.5 * l * z.norm_sqr())
            .sum();
        let cubic = self.cubic(&w);
        let quartic: f64 = w.iter().zip(&cubic).map(|(a, b)| (a.conj() * b).re).sum();
        quad + 0.25 * self.params.sigma * quartic
    }

    /// The plane wave `a e^{i xi0 x}`.
    pub fn plane_wave(&self) -> DVector<f64> {
        let mut u = DVector::zeros(2 * self.modes.len());
        let i = self
            .index_of(self.params.xi0)
            .expect("carrier mode is retained");
        u[2 * i] = self.params.a;
        u
    }
}

impl ModelSystem for MmtGalerkin {
    fn name(&self) -> &str {
        "mmt"
    }

    fn dimension(&self) -> usize {
        2 * self.modes.len()
    }

    fn vector_field(&self, u: &DVector<f64>) -> DVector<f64> {
        let v = self.complex(u);
        let w = self.filtered(u);
        let nl = self.cubic(&w);
        let mut out = DVector::zeros(self.dimension());
        for i in 0..self.modes.len() {
            let inner = v[i] * self.lin[i] + nl[i] * (self.params.sigma * self.filt[i]);
            let z = Complex64::new(0.0, -1.0) * inner;
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        out
    }

    fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let n = self.modes.len();
        let w = self.filtered(u);
        let zero = Complex64::new(0.0, 0.0);
        let span = self.lookup.len() as i64 - 1;
        // corr[d] = sum_{m1 - m2 = d} w1 conj(w2), conv[s] = sum_{m1 + m3 = s} w1 w3
        let mut corr = vec![zero; (2 * span + 1) as usize];
        let mut conv = vec![zero; (2 * span + 1) as usize];
        for (i1, &m1) in self.modes.iter().enumerate() {
            for (i2, &m2) in self.modes.iter().enumerate() {
                corr[(m1 - m2 + span) as usize] += w[i1] * w[i2].conj();
                conv[(m1 + m2 - 2 * self.min_mode) as usize] += w[i1] * w[i2];
            }
        }
        let minus_i = Complex64::new(0.0, -1.0);
        let mut jac = DMatrix::zeros(2 * n, 2 * n);
        for (k, &mk) in self.modes.iter().enumerate() {
            let outer = self.params.sigma * self.filt[k];
            for (j, &mj) in self.modes.iter().enumerate() {
                let mut g = corr[(mk - mj + span) as usize] * (2.0 * outer * self.filt[j]);
                if k == j {
                    g += self.lin[k];
                }
                let s = mk + mj - 2 * self.min_mode;
                let h = if s >= 0 && (s as usize) < conv.len() {
                    conv[s as usize] * (outer * self.filt[j])
                } else {
                    zero
                };
                let g = minus_i * g;
                let h = minus_i * h;
                jac[(2 * k, 2 * j)] = g.re + h.re;
                jac[(2 * k, 2 * j + 1)] = -g.im + h.im;
                jac[(2 * k + 1, 2 * j)] = g.im + h.im;
                jac[(2 * k + 1, 2 * j + 1)] = g.re - h.re;
            }
        }
        jac
    }

    fn equilibrium(&self) -> DVector<f64> {
        self.plane_wave()
    }

    /// Level `r` is the `H^(2 alpha r)` norm of the coefficients.
    fn ladder(&self) -> NormLadder {
        let symbols = self
            .modes
            .iter()
            .flat_map(|&m| {
                let k = self.params.wavenumber(m);
                [k * k, k * k]
            })
            .collect();
        NormLadder::Sobolev {
            symbols,
            order_per_level: 2.0 * self.params.alpha,
        }
    }

    /// Hessian of [`MmtGalerkin::energy`].
    fn hessian_form(&self, u: &DVector<f64>) -> Option<DMatrix<f64>> {
        let j = self.jacobian(u);
        let n = self.modes.len();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            for c in 0..2 * n {
                // F = Jsym grad E with Jsym = [[0, 1], [-1, 0]] per mode
                h[(2 * k, c)] = -j[(2 * k + 1, c)];
                h[(2 * k + 1, c)] = j[(2 * k, c)];
            }
        }
        Some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> MmtParams {
        MmtParams::new(1.0, 1.0, 1.0, 1.0, 2, 3)
    }

    #[test]
    fn plane_wave_frequency_examples() {
        let mut p = base();
        assert_eq!(mmt_plane_wave_frequency(&p), -20.0);
        p.xi0 = 1;
        assert_eq!(mmt_plane_wave_frequency(&p), -2.0);
        p.a = 0.0;
        assert_eq!(mmt_plane_wave_frequency(&p), -1.0);
    }

    #[test]
    fn block_constants() {
        let b = mmt_block(&base(), 1).unwrap();
        assert_eq!(b.partner, 3);
        assert!((b.c - 12.0).abs() < 1e-12);
        assert!((b.c_plus + 11.0).abs() < 1e-12);
        assert!((b.c_minus - 61.0).abs() < 1e-12);
        assert!((b.discriminant() - 3554.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_pair_rejected() {
        assert_eq!(mmt_block(&base(), 2), Err(Error::DegeneratePair(2)));
    }

    #[test]
    fn plane_wave_is_equilibrium() {
        let m = mmt_galerkin(&base()).unwrap();
        assert!(m.vector_field(&m.equilibrium()).amax() < 1e-12);
    }

    #[test]
    fn linear_case_decouples() {
        let mut p = base();
        p.a = 0.0;
        let b = mmt_block(&p, 1).unwrap();
        assert_eq!(b.c, 0.0);
        let scan = mmt_unstable_scan(&p, -3..=7).unwrap();
        assert!(scan.iter().all(|e| !e.flagged && !e.confirmed));
    }

    #[test]
    fn too_many_modes() {
        let p = MmtParams::new(1.0, 1.0, 1.0, 1.0, 0, 40);
        assert!(mmt_galerkin(&p).is_err());
    }

    #[test]
    fn hessian_symmetric() {
        let m = mmt_galerkin(&base()).unwrap();
        let mut u = m.equilibrium();
        for i in 0..u.len() {
            u[i] += 0.01 * ((i * 7 % 5) as f64 - 2.0);
        }
        let h = m.hessian_form(&u).unwrap();
        assert!((&h - h.transpose()).amax() < 1e-10);
    }
}
