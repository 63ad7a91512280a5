//! Discretized Lyapunov-Perron operator on a backward grid `[-T_max, 0]` and
//! its fixed-point iteration.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::quasilinear::Quasilinear;
use super::split::SplitField;
use crate::error::{Error, Result};
use crate::graded_space::{graded_norm, NormLadder, OrbitGrid};
use crate::linear_analysis::trajectory_residual;
use crate::numerics::{phi_factors, spectral_norm, PhiFactors};

#[derive(Debug, Clone, PartialEq)]
pub struct LpConfig {
    /// Weight rate; defaults to the midpoint of `(max(lambda_minus, 0), lambda_plus)`.
    pub lambda: Option<f64>,
    pub t_max: f64,
    pub dt: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Working norm level; increments are measured at level `max(r - 1, 0)`.
    pub r: f64,
    /// Estimate the quadrature error by re-solving on a grid with twice the step.
    pub richardson: bool,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            lambda: None,
            t_max: 20.0,
            dt: 0.005,
            eps: 0.1,
            max_iter: 200,
            tol: 1e-11,
            r: 1.0,
            richardson: false,
        }
    }
}

impl LpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_max > self.dt) || !self.t_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "need 0 < dt < T_max, got dt = {}, T_max = {}",
                self.dt, self.t_max
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidInput(
                "tolerance and iteration cap must be positive".into(),
            ));
        }
        if !(self.r >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "norm level must be >= 0, got {}",
                self.r
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpDiagnostics {
    pub iterations: usize,
    pub increments: Vec<f64>,
    /// Ratios of successive increments.
    pub contraction_factors: Vec<f64>,
    /// Weighted distance between the returned orbit and its image under the operator.
    pub fixed_point_residual: f64,
    /// `max_j |w'(t_j) - F(u_eq + w(t_j))|` by second-order differences.
    pub trajectory_residual: f64,
    /// Bound on the neglected part of the integral over `(-inf, -T_max)`.
    pub tail_bound: f64,
    pub quadrature_error: Option<f64>,
    /// `tol + tail_bound + quadrature_error`.
    pub error_budget: f64,
}

impl LpDiagnostics {
    pub fn contraction_factor(&self) -> f64 {
        self.contraction_factors.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub base: DVector<f64>,
    /// Deviations `u(t_j) - u_eq` in the original coordinates.
    pub orbit: OrbitGrid,
    /// Adapted coordinates of the working variable at each node.
    pub coords: Vec<DVector<f64>>,
    /// Graph value: complement coordinates of the deviation at `t = 0`.
    pub h: DVector<f64>,
    /// Full state `u(0)`.
    pub state0: DVector<f64>,
    pub diagnostics: LpDiagnostics,
}

enum Quadrature {
    /// Exact block exponentials with linear interpolation of the remainder.
    Exponential { plus: PhiFactors, rest: PhiFactors },
    /// Per-step RK4 propagators of the frozen blocks, trapezoidal rule.
    Quasilinear(Arc<Quasilinear>),
}

/// The discretized operator for one model, splitting and configuration.
pub struct LpSolver {
    field: Arc<SplitField>,
    quadrature: Quadrature,
    cfg: LpConfig,
    lambda: f64,
    times: Vec<f64>,
    h: f64,
    ladder: NormLadder,
    tail_const: f64,
    tail_rate: f64,
}

fn resolve_lambda(field: &SplitField, cfg: &LpConfig) -> Result<f64> {
    let s = &field.splitting;
    if s.dim_plus == 0 {
        return Err(Error::InvalidInput(
            "splitting has no unstable directions".into(),
        ));
    }
    let lo = s.lambda_minus;
    let hi = s.lambda_plus;
    let lambda = cfg.lambda.unwrap_or_else(|| 0.5 * (lo.max(0.0) + hi));
    if !(lambda > lo && lambda < hi) {
        return Err(Error::InvalidInput(format!(
            "lambda = {lambda} must lie strictly inside ({lo}, {hi})"
        )));
    }
    Ok(lambda)
}

impl LpSolver {
    pub fn new(field: Arc<SplitField>, cfg: LpConfig) -> Result<Self> {
        Self::build(field, None, cfg)
    }

    pub fn quasilinear(quasi: Arc<Quasilinear>, cfg: LpConfig) -> Result<Self> {
        Self::build(quasi.field.clone(), Some(quasi), cfg)
    }

    fn build(
        field: Arc<SplitField>,
        quasi: Option<Arc<Quasilinear>>,
        cfg: LpConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let lambda = resolve_lambda(&field, &cfg)?;
        let grid = OrbitGrid::uniform_backward(cfg.t_max, cfg.dt, 0)?;
        let times = grid.times;
        let h = times[1] - times[0];
        let quadrature = match quasi {
            None => Quadrature::Exponential {
                plus: phi_factors(&field.a_plus, -h),
                rest: phi_factors(&field.a_rest, h),
            },
            Some(q) => Quadrature::Quasilinear(q),
        };
        let tail_rate = if field.dim_rest() == 0 {
            lambda - 1.0
        } else {
            0.5 * (field.splitting.lambda_minus + lambda)
        };
        let tail_const = rest_growth_constant(&field.a_rest, tail_rate, cfg.t_max);
        let ladder = field.model.ladder();
        Ok(LpSolver {
            field,
            quadrature,
            cfg,
            lambda,
            times,
            h,
            ladder,
            tail_const,
            tail_rate,
        })
    }

    pub fn field(&self) -> &Arc<SplitField> {
        &self.field
    }

    pub fn config(&self) -> &LpConfig {
        &self.cfg
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub(crate) fn exponential_factors(&self) -> Option<(&PhiFactors, &PhiFactors)> {
        match &self.quadrature {
            Quadrature::Exponential { plus, rest } => Some((plus, rest)),
            Quadrature::Quasilinear(_) => None,
        }
    }

    pub fn is_quasilinear(&self) -> bool {
        matches!(self.quadrature, Quadrature::Quasilinear(_))
    }

    /// Variables the base point lives in for a deviation `w = u - u_eq`: `B(w)` in quasilinear mode, `w` otherwise.
    pub fn to_working(&self, w: &DVector<f64>) -> DVector<f64> {
        match &self.quadrature {
            Quadrature::Quasilinear(q) => q.b(w),
            Quadrature::Exponential { .. } => w.clone(),
        }
    }

    /// A solver with the same model and settings but a different configuration.
    pub fn with_config(&self, cfg: LpConfig) -> Result<Self> {
        let quasi = match &self.quadrature {
            Quadrature::Quasilinear(q) => Some(q.clone()),
            Quadrature::Exponential { .. } => None,
        };
        Self::build(self.field.clone(), quasi, cfg)
    }

    /// Norm of a base point in the working norm.
    pub fn base_norm(&self, p0: &DVector<f64>) -> f64 {
        let v = &self.field.splitting.projection.basis_plus * p0;
        self.ladder.norm_unchecked(&v, self.cfg.r)
    }

    fn stop_level(&self) -> f64 {
        (self.cfg.r - 1.0).max(0.0)
    }

    /// `max_j e^{-lambda t_j} |T (a_j - b_j)|_{r-1}`.
    fn weighted_distance(&self, a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
        let level = self.stop_level();
        a.iter()
            .zip(b)
            .zip(&self.times)
            .map(|((x, y), t)| {
                (-self.lambda * t).exp()
                    * self
                        .ladder
                        .norm_unchecked(&self.field.from_coords(&(x - y)), level)
            })
            .fold(0.0, f64::max)
    }

    fn check_base(&self, p0: &DVector<f64>) -> Result<()> {
        let k = self.field.dim_plus();
        if p0.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: p0.len(),
            });
        }
        if p0.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("base point"));
        }
        let n = self.base_norm(p0);
        if n > self.cfg.eps * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "base point norm {n} exceeds eps = {}",
                self.cfg.eps
            )));
        }
        Ok(())
    }

    /// One application of the operator in adapted coordinates.
    pub(crate) fn apply_coords(
        &self,
        p0: &DVector<f64>,
        z: &[DVector<f64>],
    ) -> Result<Vec<DVector<f64>>> {
        let k = self.field.dim_plus();
        let m = self.field.dim_rest();
        let n_nodes = self.times.len();
        let h = self.h;
        let mut out = vec![DVector::zeros(k + m); n_nodes];
        match &self.quadrature {
            Quadrature::Exponential { plus, rest } => {
                let g: Vec<DVector<f64>> =
                    z.iter().map(|zj| self.field.remainder_coords(zj)).collect();
                let gp = |j: usize| g[j].rows(0, k).into_owned();
                let gr = |j: usize| g[j].rows(k, m).into_owned();
                let mut p = p0.clone();
                out[n_nodes - 1].rows_mut(0, k).copy_from(&p);
                for j in (0..n_nodes - 1).rev() {
                    let (g1, g0) = (gp(j + 1), gp(j));
                    p = &plus.exp * &p - (&plus.phi1 * &g1 + &plus.phi2 * (g0 - &g1)) * h;
                    out[j].rows_mut(0, k).copy_from(&p);
                }
                let mut q = DVector::zeros(m);
                for j in 0..n_nodes - 1 {
                    let (g0, g1) = (gr(j), gr(j + 1));
                    q = &rest.exp * &q + (&rest.phi1 * &g0 + &rest.phi2 * (g1 - &g0)) * h;
                    out[j + 1].rows_mut(k, m).copy_from(&q);
                }
            }
            Quadrature::Quasilinear(quasi) => {
                let pieces = z
                    .iter()
                    .map(|zj| quasi.pieces(zj))
                    .collect::<Result<Vec<_>>>()?;
                let mut p = p0.clone();
                out[n_nodes - 1].rows_mut(0, k).copy_from(&p);
                for j in (0..n_nodes - 1).rev() {
                    let u = step_propagator(&pieces[j + 1].a_plus, &pieces[j].a_plus, -h);
                    let g1 = pieces[j + 1].remainder.rows(0, k).into_owned();
                    let g0 = pieces[j].remainder.rows(0, k).into_owned();
                    p = &u * (&p + &g1 * (-0.5 * h)) - g0 * (0.5 * h);
                    out[j].rows_mut(0, k).copy_from(&p);
                }
                let mut q = DVector::zeros(m);
                for j in 0..n_nodes - 1 {
                    let u = step_propagator(&pieces[j].a_rest, &pieces[j + 1].a_rest, h);
                    let g0 = pieces[j].remainder.rows(k, m).into_owned();
                    let g1 = pieces[j + 1].remainder.rows(k, m).into_owned();
                    q = &u * (&q + &g0 * (0.5 * h)) + g1 * (0.5 * h);
                    out[j + 1].rows_mut(k, m).copy_from(&q);
                }
            }
        }
        if out.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("Lyapunov-Perron iterate"));
        }
        Ok(out)
    }

    /// `T(v0+, v)` for an orbit of working variables given in the original basis.
    pub fn apply(&self, p0: &DVector<f64>, orbit: &OrbitGrid) -> Result<OrbitGrid> {
        if orbit.len() != self.times.len() {
            return Err(Error::DimensionMismatch {
                expected: self.times.len(),
                got: orbit.len(),
            });
        }
        let z: Vec<_> = orbit
            .states
            .iter()
            .map(|w| self.field.to_coords(w))
            .collect();
        let out = self.apply_coords(p0, &z)?;
        OrbitGrid::new(
            self.times.clone(),
            out.iter().map(|zj| self.field.from_coords(zj)).collect(),
        )
    }

    /// Iterates from the zero orbit to the fixed point.
    pub fn solve(&self, p0: &DVector<f64>) -> Result<LpSolution> {
        self.check_base(p0)?;
        let mut sol = self.solve_unchecked(p0)?;
        if self.cfg.richardson {
            let mut coarse_cfg = self.cfg.clone();
            coarse_cfg.dt = 2.0 * self.h;
            coarse_cfg.richardson = false;
            let coarse = self.with_config(coarse_cfg)?.solve_unchecked(p0)?;
            let err = (&sol.h - &coarse.h).norm() / 3.0;
            sol.diagnostics.quadrature_error = Some(err);
            sol.diagnostics.error_budget += err;
        }
        Ok(sol)
    }

    pub(crate) fn solve_unchecked(&self, p0: &DVector<f64>) -> Result<LpSolution> {
        let n = self.field.dim();
        let mut z = vec![DVector::zeros(n); self.times.len()];
        let mut increments = Vec::new();
        let mut factors = Vec::new();
        let mut growing = 0;
        let mut converged = false;
        for _ in 0..self.cfg.max_iter {
            let next = self.apply_coords(p0, &z)?;
            let delta = self.weighted_distance(&next, &z);
            z = next;
            if let Some(&last) = increments.last() {
                let ratio = if last > 0.0 { delta / last } else { 0.0 };
                factors.push(ratio);
                if ratio >= 1.0 && delta > self.cfg.tol {
                    growing += 1;
                    if growing >= 3 {
                        return Err(Error::LpNoContraction { ratio });
                    }
                } else {
                    growing = 0;
                }
            }
            increments.push(delta);
            if delta <= self.cfg.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged {
                iterations: self.cfg.max_iter,
                increment: *increments.last().unwrap(),
                tol: self.cfg.tol,
            });
        }
        let check = self.apply_coords(p0, &z)?;
        let fixed_point_residual = self.weighted_distance(&check, &z);
        self.finish(p0, z, increments, factors, fixed_point_residual)
    }

    fn finish(
        &self,
        p0: &DVector<f64>,
        z: Vec<DVector<f64>>,
        increments: Vec<f64>,
        factors: Vec<f64>,
        fixed_point_residual: f64,
    ) -> Result<LpSolution> {
        let k = self.field.dim_plus();
        let m = self.field.dim_rest();
        let deviations: Vec<DVector<f64>> = match &self.quadrature {
            Quadrature::Exponential { .. } => {
                z.iter().map(|zj| self.field.from_coords(zj)).collect()
            }
            Quadrature::Quasilinear(q) => z
                .iter()
                .map(|zj| q.invert_b(&self.field.from_coords(zj)))
                .collect::<Result<_>>()?,
        };
        let remainders: Vec<DVector<f64>> = match &self.quadrature {
            Quadrature::Exponential { .. } => {
                z.iter().map(|zj| self.field.remainder_coords(zj)).collect()
            }
            Quadrature::Quasilinear(q) => z
                .iter()
                .map(|zj| q.pieces(zj).map(|p| p.remainder))
                .collect::<Result<_>>()?,
        };
        let sup_rest = remainders
            .iter()
            .zip(&self.times)
            .map(|(g, t)| (-self.lambda * t).exp() * g.rows(k, m).norm())
            .fold(0.0, f64::max);
        let gap = self.lambda - self.tail_rate;
        let tail_bound = self.tail_const * sup_rest * (-gap * self.cfg.t_max).exp() / gap;

        let eq = &self.field.equilibrium;
        let absolute = OrbitGrid::new(
            self.times.clone(),
            deviations.iter().map(|w| eq + w).collect(),
        )?;
        let traj = trajectory_residual(self.field.model.as_ref(), &absolute);
        let orbit = OrbitGrid::new(self.times.clone(), deviations)?;
        let w0 = orbit.last().clone();
        let h = &self.field.splitting.projection.coords_rest * &w0;
        let state0 = eq + &w0;
        let error_budget = self.cfg.tol + tail_bound;
        Ok(LpSolution {
            base: p0.clone(),
            orbit,
            coords: z,
            h,
            state0,
            diagnostics: LpDiagnostics {
                iterations: increments.len(),
                increments,
                contraction_factors: factors,
                fixed_point_residual,
                trajectory_residual: traj,
                tail_bound,
                quadrature_error: None,
                error_budget,
            },
        })
    }

    /// Working-norm of a deviation at level `r`.
    pub fn state_norm(&self, w: &DVector<f64>, r: f64) -> Result<f64> {
        graded_norm(w, &self.ladder, r)
    }
}

/// RK4 propagator over one step for `y' = A(t) y` with `A` linear between the endpoints.
fn step_propagator(a_start: &DMatrix<f64>, a_end: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let n = a_start.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a_mid = (a_start + a_end) * 0.5;
    let k1 = a_start * h;
    let k2 = &a_mid * (&id + &k1 * 0.5) * h;
    let k3 = &a_mid * (&id + &k2 * 0.5) * h;
    let k4 = a_end * (&id + &k3) * h;
    id + (k1 + k2 * 2.0 + k3 * 2.0 + k4) / 6.0
}

/// `sup_{0 <= s <= horizon} |e^{s A}| e^{-rate s}` sampled on 200 points.
fn rest_growth_constant(a: &DMatrix<f64>, rate: f64, horizon: f64) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let samples = 200;
    let ds = horizon / samples as f64;
    let step = (a * ds).exp();
    let mut m = DMatrix::<f64>::identity(a.nrows(), a.nrows());
    let mut best = 1.0f64;
    for i in 1..=samples {
        m = &step * m;
        best = best.max(spectral_norm(&m) * (-rate * ds * i as f64).exp());
    }
    best
}

pub fn lp_apply(solver: &LpSolver, p0: &DVector<f64>, orbit: &OrbitGrid) -> Result<OrbitGrid> {
    solver.apply(p0, orbit)
}

pub fn lp_solve(solver: &LpSolver, p0: &DVector<f64>) -> Result<LpSolution> {
    solver.solve(p0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_analysis::eigen_split;
    use crate::lyapunov_perron::split::split_field;
    use crate::models::{saddle_toy, AffineModel, SharedModel};

    fn solver(model: SharedModel, cfg: LpConfig) -> LpSolver {
        let s = eigen_split(&model.jacobian(&model.equilibrium()), 0.5).unwrap();
        LpSolver::new(Arc::new(split_field(model, s).unwrap()), cfg).unwrap()
    }

    #[test]
    fn linear_model_orbit_is_exponential() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let s = solver(
            Arc::new(AffineModel::linear(a)),
            LpConfig {
                t_max: 5.0,
                dt: 0.01,
                ..Default::default()
            },
        );
        let sol = s.solve(&DVector::from_element(1, 0.05)).unwrap();
        for (t, w) in sol.orbit.times.iter().zip(&sol.orbit.states) {
            assert!((w[0] - 0.05 * t.exp()).abs() < 1e-14);
            assert_eq!(w[1], 0.0);
        }
    }

    #[test]
    fn zero_base_gives_zero_orbit() {
        let s = solver(
            Arc::new(saddle_toy("saddle1").unwrap()),
            LpConfig::default(),
        );
        let sol = s.solve(&DVector::zeros(1)).unwrap();
        assert_eq!(sol.h[0], 0.0);
        assert!(sol.orbit.states.iter().all(|w| w.norm() == 0.0));
    }

    #[test]
    fn saddle1_first_iterates() {
        let s = solver(
            Arc::new(saddle_toy("saddle1").unwrap()),
            LpConfig {
                dt: 0.01,
                ..Default::default()
            },
        );
        let p0 = DVector::from_element(1, 0.1);
        let zero =
            OrbitGrid::new(s.times().to_vec(), vec![DVector::zeros(2); s.times().len()]).unwrap();
        let first = s.apply(&p0, &zero).unwrap();
        for (t, w) in first.times.iter().zip(&first.states) {
            assert!((w[0] - 0.1 * t.exp()).abs() < 1e-14);
            assert_eq!(w[1], 0.0);
        }
        let second = s.apply(&p0, &first).unwrap();
        let y0 = second.last()[1];
        assert!((y0 - 0.01 / 3.0).abs() < 1e-6, "{}", y0 - 0.01 / 3.0);
    }

    #[test]
    fn saddle1_graph_value() {
        let cfg = LpConfig {
            lambda: Some(0.9),
            t_max: 20.0,
            dt: 0.01,
            ..Default::default()
        };
        let s = solver(Arc::new(saddle_toy("saddle1").unwrap()), cfg);
        let sol = s.solve(&DVector::from_element(1, 0.1)).unwrap();
        assert!((sol.h[0] - 1.0 / 300.0).abs() < 1e-6);
        assert!(sol.diagnostics.fixed_point_residual <= 2.0 * s.config().tol);
    }

    #[test]
    fn base_outside_ball_rejected() {
        let s = solver(
            Arc::new(saddle_toy("saddle1").unwrap()),
            LpConfig {
                eps: 0.05,
                ..Default::default()
            },
        );
        assert!(s.solve(&DVector::from_element(1, 0.1)).is_err());
    }

    #[test]
    fn lambda_outside_gap_rejected() {
        let m: SharedModel = Arc::new(saddle_toy("saddle1").unwrap());
        let sp = eigen_split(&m.jacobian(&m.equilibrium()), 0.5).unwrap();
        let f = Arc::new(split_field(m, sp).unwrap());
        assert!(LpSolver::new(
            f,
            LpConfig {
                lambda: Some(1.5),
                ..Default::default()
            }
        )
        .is_err());
    }
}
