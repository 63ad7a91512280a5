//! Non-autonomous linear evolution `v' = A(t) v`, growth bounds, the Picard
//! integrator and the first variational equation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::spectral::SpectralSplitting;
use crate::error::{Error, Result};
use crate::graded_space::OrbitGrid;
use crate::models::{ModelSystem, SharedModel};
use crate::numerics::{rk4_step, spectral_norm, substeps};

type OperatorFn = dyn Fn(f64) -> DMatrix<f64> + Send + Sync;

/// A time-dependent operator `A(t)` on a bounded interval.
#[derive(Clone)]
pub struct Timeline {
    pub times: Vec<f64>,
    op: Arc<OperatorFn>,
    states: Option<Vec<DVector<f64>>>,
}

impl std::fmt::Debug for Timeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Timeline")
            .field("times", &self.times)
            .finish_non_exhaustive()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidInput(
            "timeline needs at least two times".into(),
        ));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "timeline times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Piecewise-linear interpolation of sampled states.
fn linear_interp(times: &[f64], states: &[DVector<f64>], t: f64) -> DVector<f64> {
    let i = times.partition_point(|x| *x <= t).clamp(1, times.len() - 1) - 1;
    let s = ((t - times[i]) / (times[i + 1] - times[i])).clamp(0.0, 1.0);
    &states[i] * (1.0 - s) + &states[i + 1] * s
}

impl Timeline {
    pub fn constant(a: DMatrix<f64>, t_start: f64, t_end: f64) -> Result<Self> {
        check_times(&[t_start, t_end])?;
        Ok(Timeline {
            times: vec![t_start, t_end],
            op: Arc::new(move |_| a.clone()),
            states: None,
        })
    }

    pub fn from_fn(
        times: Vec<f64>,
        op: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        check_times(&times)?;
        Ok(Timeline {
            times,
            op: Arc::new(op),
            states: None,
        })
    }

    /// `A(t) = DF(v(t))` with `v` linearly interpolated between the orbit nodes.
    pub fn along_trajectory(model: SharedModel, orbit: &OrbitGrid) -> Result<Self> {
        check_times(&orbit.times)?;
        let times = orbit.times.clone();
        let states = orbit.states.clone();
        let (t2, s2) = (times.clone(), states.clone());
        let op = move |t: f64| model.jacobian(&linear_interp(&t2, &s2, t));
        Ok(Timeline {
            times,
            op: Arc::new(op),
            states: Some(states),
        })
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn check_hull(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * (1.0 + self.end().abs().max(self.start().abs()));
        if t < self.start() - slack || t > self.end() + slack || !t.is_finite() {
            return Err(Error::OutsideTimeline {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        Ok(())
    }

    pub fn operator_at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.check_hull(t)?;
        Ok((self.op)(t))
    }

    /// `|integral_{t0}^{t1} |v'(s)| ds|` of the stored trajectory (0 without one).
    pub fn path_variation(&self, t0: f64, t1: f64) -> f64 {
        let Some(states) = &self.states else {
            return 0.0;
        };
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let mut total = 0.0;
        for i in 0..self.times.len() - 1 {
            let (a, b) = (self.times[i], self.times[i + 1]);
            let overlap = (b.min(hi) - a.max(lo)).max(0.0);
            if overlap > 0.0 {
                total += (&states[i + 1] - &states[i]).norm() * overlap / (b - a);
            }
        }
        total
    }
}

fn rk4_matrix_step(tl: &Timeline, t: f64, y: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let a0 = (tl.op)(t);
    let am = (tl.op)(t + 0.5 * h);
    let a1 = (tl.op)(t + h);
    let k1 = &a0 * y;
    let k2 = &am * (y + &k1 * (0.5 * h));
    let k3 = &am * (y + &k2 * (0.5 * h));
    let k4 = &a1 * (y + &k3 * h);
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// `U(t1, t0) v0` by fixed-step RK4 with steps no larger than `dt`, in either direction.
pub fn evolve(tl: &Timeline, v0: &DVector<f64>, t0: f64, t1: f64, dt: f64) -> Result<DVector<f64>> {
    let m = DMatrix::from_column_slice(v0.len(), 1, v0.as_slice());
    let out = evolve_matrix(tl, &m, t0, t1, dt)?;
    Ok(out.column(0).into_owned())
}

/// `U(t1, t0) Y0` for a matrix of initial data.
pub fn evolve_matrix(
    tl: &Timeline,
    y0: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<DMatrix<f64>> {
    tl.check_hull(t0)?;
    tl.check_hull(t1)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {dt}"
        )));
    }
    let n = (tl.op)(t0).nrows();
    if y0.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y0.nrows(),
        });
    }
    if t1 == t0 {
        return Ok(y0.clone());
    }
    let steps = substeps(t1 - t0, dt);
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.clone();
    for i in 0..steps {
        y = rk4_matrix_step(tl, t0 + i as f64 * h, &y, h);
    }
    if y.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("evolution"));
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSample {
    pub t: f64,
    pub t0: f64,
    pub plus_block: bool,
    pub norm: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub samples: Vec<GrowthSample>,
    pub worst_ratio: f64,
}

/// Compares `|P U(t, t0) P|` on each block with `C0^2 exp(lambda (t - t0) + C0^2 |int |v'||)`.
///
/// The unstable block is checked for `t <= t0` with rate `lambda_plus`, the
/// rest for `t >= t0` with rate `lambda_minus`.
pub fn growth_bound_check(
    tl: &Timeline,
    splitting: &SpectralSplitting,
    samples: &[(f64, f64)],
    c0: f64,
    dt: f64,
) -> Result<GrowthReport> {
    let p = &splitting.projection;
    let n = splitting.dimension();
    let mut out = Vec::new();
    for &(t, t0) in samples {
        let u = evolve_matrix(tl, &DMatrix::identity(n, n), t0, t, dt)?;
        let var = tl.path_variation(t0, t);
        let mut push = |plus: bool, proj: &DMatrix<f64>, rate: f64| {
            let norm = spectral_norm(&(proj * &u * proj));
            let bound = c0 * c0 * (rate * (t - t0) + c0 * c0 * var).exp();
            out.push(GrowthSample {
                t,
                t0,
                plus_block: plus,
                norm,
                bound,
                ratio: norm / bound,
            });
        };
        if t <= t0 && splitting.dim_plus > 0 {
            push(true, &p.projector_plus, splitting.lambda_plus);
        }
        if t >= t0 && splitting.dim_plus < n {
            push(false, &p.projector_rest, splitting.lambda_minus);
        }
    }
    let worst_ratio = out.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(GrowthReport {
        samples: out,
        worst_ratio,
    })
}

/// `max_j |v'(t_j) - F(v(t_j))|` with second-order finite differences.
pub fn trajectory_residual(model: &dyn ModelSystem, orbit: &OrbitGrid) -> f64 {
    let n = orbit.len();
    if n < 3 {
        return 0.0;
    }
    let (t, v) = (&orbit.times, &orbit.states);
    let mut worst = 0.0f64;
    for j in 0..n {
        let d = if j == 0 {
            let (h1, h2) = (t[1] - t[0], t[2] - t[0]);
            derivative_3pt(&v[0], &v[1], &v[2], 0.0, h1, h2)
        } else if j == n - 1 {
            let (h1, h2) = (t[j - 1] - t[j], t[j - 2] - t[j]);
            derivative_3pt(&v[j], &v[j - 1], &v[j - 2], 0.0, h1, h2)
        } else {
            let (h1, h2) = (t[j - 1] - t[j], t[j + 1] - t[j]);
            derivative_3pt(&v[j], &v[j - 1], &v[j + 1], 0.0, h1, h2)
        };
        worst = worst.max((d - model.vector_field(&v[j])).norm());
    }
    worst
}

/// Derivative at offset `s0 = 0` of the quadratic through `(0, a), (h1, b), (h2, c)`.
fn derivative_3pt(
    a: &DVector<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    _s0: f64,
    h1: f64,
    h2: f64,
) -> DVector<f64> {
    let wa = -(h1 + h2) / (h1 * h2);
    let wb = h2 / (h1 * (h2 - h1));
    let wc = -h1 / (h2 * (h2 - h1));
    a * wa + b * wb + c * wc
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    pub orbit: OrbitGrid,
    /// Successive increment ratios `delta_k / delta_{k-1}`.
    pub contraction_factors: Vec<f64>,
    pub increments: Vec<f64>,
    pub iterations: usize,
}

impl PicardResult {
    /// Largest measured increment ratio (0 if only one iteration was needed).
    pub fn contraction_factor(&self) -> f64 {
        self.contraction_factors.iter().cloned().fold(0.0, f64::max)
    }
}

/// Picard iteration `v <- U_v(t, 0) v0 + int_0^t U_v(t, s) f_v(s) ds` on `[0, T]`,
/// where `U_v` is generated by `DF(v(t))` and `f_v = F(v) - DF(v) v`.
pub fn picard_solve(
    model: &dyn ModelSystem,
    v0: &DVector<f64>,
    t_end: f64,
    dt: f64,
    max_iter: usize,
    tol: f64,
) -> Result<PicardResult> {
    if v0.len() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: v0.len(),
        });
    }
    if !(t_end > 0.0) || !(dt > 0.0) || dt > t_end {
        return Err(Error::InvalidInput(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {t_end}"
        )));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidInput(
            "tolerance and iteration count must be positive".into(),
        ));
    }
    let steps = substeps(t_end, dt);
    let h = t_end / steps as f64;
    let times: Vec<f64> = (0..=steps).map(|j| j as f64 * h).collect();
    let mut orbit = OrbitGrid::new(times.clone(), vec![v0.clone(); steps + 1])?;
    let mut factors = Vec::new();
    let mut increments: Vec<f64> = Vec::new();
    for iter in 1..=max_iter {
        let prev = &orbit;
        let frozen = |v: &DVector<f64>| {
            let a = model.jacobian(v);
            let f = model.vector_field(v) - &a * v;
            (a, f)
        };
        let nodes: Vec<_> = prev.states.iter().map(frozen).collect();
        let mut states = Vec::with_capacity(steps + 1);
        let mut y = v0.clone();
        states.push(y.clone());
        for j in 0..steps {
            let (a0, f0) = &nodes[j];
            let (am, fm) = frozen(&prev.sample(times[j] + 0.5 * h));
            let (a1, f1) = &nodes[j + 1];
            let k1 = a0 * &y + f0;
            let k2 = &am * (&y + &k1 * (0.5 * h)) + &fm;
            let k3 = &am * (&y + &k2 * (0.5 * h)) + &fm;
            let k4 = a1 * (&y + &k3 * h) + f1;
            y = &y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if y.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("Picard iterate"));
            }
            states.push(y.clone());
        }
        let next = OrbitGrid {
            times: times.clone(),
            states,
        };
        let delta = next.max_distance(&orbit);
        if let Some(&last) = increments.last() {
            let factor = if last > 0.0 { delta / last } else { 0.0 };
            factors.push(factor);
            if iter > 3 && factor >= 1.0 && delta > tol {
                return Err(Error::PicardNoContraction { factor });
            }
        }
        increments.push(delta);
        orbit = next;
        if delta <= tol {
            return Ok(PicardResult {
                orbit,
                contraction_factors: factors,
                increments,
                iterations: iter,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        increment: *increments.last().unwrap(),
        tol,
    })
}

/// Matrix solution of `U' = DF(u(t)) U`, `U(anchor) = I`, sampled at the orbit nodes.
#[derive(Debug, Clone)]
pub struct VariationalFlow {
    pub times: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
    pub trajectory_residual: f64,
}

impl VariationalFlow {
    pub fn at_node(&self, j: usize) -> &DMatrix<f64> {
        &self.matrices[j]
    }
}

pub fn variational_flow(
    model: SharedModel,
    orbit: &OrbitGrid,
    anchor: f64,
    dt: f64,
    traj_tol: f64,
) -> Result<VariationalFlow> {
    if orbit.dim() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: orbit.dim(),
        });
    }
    let residual = trajectory_residual(model.as_ref(), orbit);
    if !(residual <= traj_tol) {
        return Err(Error::NotATrajectory {
            residual,
            tol: traj_tol,
        });
    }
    let o = orbit.clone();
    let m = model.clone();
    let tl = Timeline::from_fn(orbit.times.clone(), move |t| m.jacobian(&o.sample(t)))?;
    let n = model.dimension();
    let id = DMatrix::identity(n, n);
    let mut matrices = Vec::with_capacity(orbit.len());
    for &t in &orbit.times {
        matrices.push(evolve_matrix(&tl, &id, anchor, t, dt)?);
    }
    Ok(VariationalFlow {
        times: orbit.times.clone(),
        matrices,
        trajectory_residual: residual,
    })
}

/// Integrates the full nonlinear field with RK4 and returns the orbit on a uniform grid.
pub fn integrate_orbit(
    model: &dyn ModelSystem,
    u0: &DVector<f64>,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<OrbitGrid> {
    let f = |_t: f64, y: &DVector<f64>| model.vector_field(y);
    let steps = substeps(t1 - t0, dt);
    let h = (t1 - t0) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut y = u0.clone();
    times.push(t0);
    states.push(y.clone());
    for i in 0..steps {
        y = rk4_step(&f, t0 + i as f64 * h, &y, h);
        times.push(t0 + (i + 1) as f64 * h);
        states.push(y.clone());
    }
    if h < 0.0 {
        times.reverse();
        states.reverse();
    }
    OrbitGrid::new(times, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::AffineModel;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn scalar_exponential() {
        let tl = Timeline::constant(DMatrix::from_element(1, 1, -1.5), -2.0, 2.0).unwrap();
        let v = evolve(&tl, &DVector::from_element(1, 1.0), 0.0, 1.2, 1e-3).unwrap();
        assert!((v[0] - (-1.8f64).exp()).abs() < 1e-8);
        let back = evolve(&tl, &DVector::from_element(1, 1.0), 0.0, -1.2, 1e-3).unwrap();
        assert!((back[0] - 1.8f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn rotation_quarter_turn() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let tl = Timeline::constant(a, 0.0, 2.0).unwrap();
        let v = evolve(
            &tl,
            &DVector::from_vec(vec![1.0, 0.0]),
            0.0,
            FRAC_PI_2,
            1e-3,
        )
        .unwrap();
        assert!(v[0].abs() < 1e-8 && (v[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn time_dependent_scalar() {
        let tl = Timeline::from_fn(vec![0.0, 1.0], |t| DMatrix::from_element(1, 1, t)).unwrap();
        let v = evolve(&tl, &DVector::from_element(1, 1.0), 0.0, 1.0, 1e-3).unwrap();
        assert!((v[0] - 0.5f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn outside_hull() {
        let tl = Timeline::constant(DMatrix::zeros(1, 1), 0.0, 1.0).unwrap();
        assert!(matches!(
            evolve(&tl, &DVector::zeros(1), 0.0, 1.5, 0.1),
            Err(Error::OutsideTimeline { .. })
        ));
    }

    #[test]
    fn picard_linear_and_affine() {
        let m = AffineModel::linear(DMatrix::from_element(1, 1, -1.0));
        let r = picard_solve(&m, &DVector::from_element(1, 1.0), 1.0, 1e-3, 20, 1e-12).unwrap();
        assert!((r.orbit.last()[0] - (-1.0f64).exp()).abs() < 1e-10);
        let m = AffineModel::new(
            DMatrix::from_element(1, 1, -1.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let r = picard_solve(&m, &DVector::zeros(1), 1.0, 1e-3, 20, 1e-12).unwrap();
        for (t, v) in r.orbit.times.iter().zip(&r.orbit.states) {
            assert!((v[0] - (1.0 - (-t).exp())).abs() < 1e-10);
        }
    }

    #[test]
    fn three_point_derivative_exact_on_quadratics() {
        let f = |s: f64| DVector::from_element(1, 2.0 + 3.0 * s - s * s);
        let d = derivative_3pt(&f(0.0), &f(-0.1), &f(0.2), 0.0, -0.1, 0.2);
        assert!((d[0] - 3.0).abs() < 1e-12);
    }
}
