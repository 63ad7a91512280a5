//! Manifold graphs over a ball of base points, decay-rate fits and the
//! invariance check.

use nalgebra::DVector;
use rayon::prelude::*;

use super::solver::{LpSolution, LpSolver};
use crate::error::{Error, Result};
use crate::graded_space::{NormLadder, OrbitGrid};
use crate::numerics::rk4_integrate;

/// How base points in the unstable coordinates are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseGrid {
    /// `per_axis` points per coordinate, filtered to the ball; used for up to 3 axes.
    Tensor {
        per_axis: usize,
    },
    /// Halton points in the bounding box, filtered to the ball.
    Halton {
        count: usize,
    },
    Points(Vec<DVector<f64>>),
}

impl BaseGrid {
    /// Tensor grid up to three unstable dimensions, Halton points above.
    pub fn auto(dim_plus: usize, per_axis: usize) -> Self {
        if dim_plus <= 3 {
            BaseGrid::Tensor { per_axis }
        } else {
            BaseGrid::Halton {
                count: per_axis.pow(2).max(16),
            }
        }
    }
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * inv;
        i /= b;
        inv /= base as f64;
    }
    out
}

/// Base points in the `eps`-ball of the working norm, in unstable coordinates.
pub fn base_points(solver: &LpSolver, grid: &BaseGrid) -> Result<Vec<DVector<f64>>> {
    let k = solver.field().dim_plus();
    let eps = solver.config().eps;
    let inside = |p: &DVector<f64>| solver.base_norm(p) <= eps * (1.0 + 1e-12);
    let half: Vec<f64> = (0..k)
        .map(|i| {
            let mut e = DVector::zeros(k);
            e[i] = 1.0;
            eps / solver.base_norm(&e)
        })
        .collect();
    let points = match grid {
        BaseGrid::Points(p) => {
            if let Some(bad) = p.iter().find(|v| v.len() != k) {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: bad.len(),
                });
            }
            p.clone()
        }
        BaseGrid::Tensor { per_axis } => {
            if k > 3 {
                return Err(Error::InvalidInput(format!(
                    "tensor grids support up to 3 axes, got {k}"
                )));
            }
            let n = *per_axis;
            if n == 0 {
                return Err(Error::Empty("base grid"));
            }
            let node = |i: usize, axis: usize| {
                if n == 1 {
                    0.0
                } else {
                    half[axis] * (-1.0 + 2.0 * i as f64 / (n - 1) as f64)
                }
            };
            let total = n.pow(k as u32);
            (0..total)
                .map(|mut idx| {
                    DVector::from_fn(k, |axis, _| {
                        let i = idx % n;
                        idx /= n;
                        node(i, axis)
                    })
                })
                .filter(|p| inside(p))
                .collect()
        }
        BaseGrid::Halton { count } => {
            if k > PRIMES.len() {
                return Err(Error::InvalidInput(format!(
                    "Halton sampling supports up to {} axes",
                    PRIMES.len()
                )));
            }
            let mut out = Vec::with_capacity(*count);
            let mut i = 1u64;
            while out.len() < *count && i < 1000 * (*count as u64 + 1) {
                let p = DVector::from_fn(k, |axis, _| {
                    half[axis] * (2.0 * radical_inverse(i, PRIMES[axis]) - 1.0)
                });
                if inside(&p) {
                    out.push(p);
                }
                i += 1;
            }
            out
        }
    };
    if points.is_empty() {
        return Err(Error::Empty("base grid"));
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `log |v(t)|_r` against `t` over nodes with norm above `1e-12`.
pub fn decay_rate_fit(orbit: &OrbitGrid, ladder: &NormLadder, r: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = orbit
        .times
        .iter()
        .zip(&orbit.states)
        .map(|(t, v)| (*t, ladder.norm_unchecked(v, r)))
        .collect();
    if pts.iter().all(|(_, n)| *n == 0.0) {
        return Err(Error::TrivialOrbit);
    }
    let used: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(_, n)| *n > 1e-12)
        .map(|(t, n)| (*t, n.ln()))
        .collect();
    if used.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "decay fit needs at least 10 nodes with norm above 1e-12, got {}",
            used.len()
        )));
    }
    let (slope, _, r2) = linear_fit(&used);
    Ok(DecayFit {
        rate: slope,
        r_squared: r2,
    })
}

/// Returns `(slope, intercept, r_squared)`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct ManifoldSample {
    pub base: DVector<f64>,
    pub status: SampleStatus,
    pub solution: Option<LpSolution>,
    pub decay_fit: Option<DecayFit>,
    /// Filled in by [`invariance_residual`].
    pub invariance: Option<InvarianceSample>,
}

impl ManifoldSample {
    pub fn value(&self) -> Option<&DVector<f64>> {
        self.solution.as_ref().map(|s| &s.h)
    }

    pub fn iterations(&self) -> Option<usize> {
        self.solution.as_ref().map(|s| s.diagnostics.iterations)
    }

    pub fn fixed_point_residual(&self) -> Option<f64> {
        self.solution
            .as_ref()
            .map(|s| s.diagnostics.fixed_point_residual)
    }
}

/// Least-squares line through `(|v|, |h(v)| / |v|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangencyFit {
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Debug, Clone)]
pub struct ManifoldGraph {
    pub samples: Vec<ManifoldSample>,
    pub lambda: f64,
    pub eps: f64,
    /// Value at the zero base point, when the grid contains it.
    pub value_at_zero: Option<f64>,
    pub tangency: Option<TangencyFit>,
    /// `max |h(v1) - h(v2)|_{r-1} / |v1 - v2|_{r-1}` over sample pairs.
    pub lipschitz: Option<f64>,
}

impl ManifoldGraph {
    pub fn base_points(&self) -> Vec<&DVector<f64>> {
        self.samples.iter().map(|s| &s.base).collect()
    }

    pub fn values(&self) -> Vec<Option<&DVector<f64>>> {
        self.samples.iter().map(|s| s.value()).collect()
    }

    pub fn failures(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.status != SampleStatus::Ok)
            .count()
    }
}

/// Solves for every base point of the grid, in parallel; failures are recorded per sample.
pub fn build_manifold_graph(solver: &LpSolver, grid: &BaseGrid) -> Result<ManifoldGraph> {
    let points = base_points(solver, grid)?;
    let ladder = solver.field().model.ladder();
    let r = solver.config().r;
    let samples: Vec<ManifoldSample> = points
        .into_par_iter()
        .map(|p| match solver.solve(&p) {
            Ok(sol) => {
                let fit = decay_rate_fit(&sol.orbit, &ladder, r).ok();
                ManifoldSample {
                    base: p,
                    status: SampleStatus::Ok,
                    solution: Some(sol),
                    decay_fit: fit,
                    invariance: None,
                }
            }
            Err(e) => ManifoldSample {
                base: p,
                status: SampleStatus::Failed(e.to_string()),
                solution: None,
                decay_fit: None,
                invariance: None,
            },
        })
        .collect();
    let mut graph = ManifoldGraph {
        samples,
        lambda: solver.lambda(),
        eps: solver.config().eps,
        value_at_zero: None,
        tangency: None,
        lipschitz: None,
    };
    summarize(solver, &mut graph);
    Ok(graph)
}

fn summarize(solver: &LpSolver, graph: &mut ManifoldGraph) {
    let proj = &solver.field().splitting.projection;
    let ladder = solver.field().model.ladder();
    let r = solver.config().r;
    let low = (r - 1.0).max(0.0);
    let ok: Vec<(DVector<f64>, DVector<f64>)> = graph
        .samples
        .iter()
        .filter_map(|s| {
            s.value()
                .map(|h| (&proj.basis_plus * &s.base, &proj.basis_rest * h))
        })
        .collect();
    graph.value_at_zero = ok
        .iter()
        .find(|(v, _)| v.norm() == 0.0)
        .map(|(_, h)| ladder.norm_unchecked(h, r));
    let ratios: Vec<(f64, f64)> = ok
        .iter()
        .filter(|(v, _)| v.norm() > 0.0)
        .map(|(v, h)| {
            let nv = ladder.norm_unchecked(v, r);
            (nv, ladder.norm_unchecked(h, r) / nv)
        })
        .collect();
    if ratios.len() >= 2 {
        let (slope, intercept, _) = linear_fit(&ratios);
        graph.tangency = Some(TangencyFit { intercept, slope });
    }
    let mut lip: Option<f64> = None;
    for i in 0..ok.len() {
        for j in i + 1..ok.len() {
            let dv = ladder.norm_unchecked(&(&ok[i].0 - &ok[j].0), low);
            if dv > 0.0 {
                let q = ladder.norm_unchecked(&(&ok[i].1 - &ok[j].1), low) / dv;
                lip = Some(lip.map_or(q, |m| m.max(q)));
            }
        }
    }
    graph.lipschitz = lip;
}

#[derive(Debug, Clone, PartialEq)]
pub enum InvarianceSample {
    Checked {
        residual: f64,
        /// `tol + both error budgets + time-integration estimate`.
        budget: f64,
    },
    /// The flowed base point left the `eps`-ball.
    Skipped {
        base_norm: f64,
    },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub max_residual: f64,
    pub max_ratio: f64,
    pub checked: usize,
    pub skipped: usize,
    pub failed: usize,
}

/// Flows each graph point forward by `delta_t`, re-solves at the new base point and
/// compares; results are stored on the samples.
///
/// Both graph values are recomputed with the step-doubling quadrature estimate so
/// that the budget covers the grid error of the operator.
pub fn invariance_residual(
    graph: &mut ManifoldGraph,
    solver: &LpSolver,
    delta_t: f64,
) -> Result<InvarianceReport> {
    if !(delta_t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "invariance step must be positive, got {delta_t}"
        )));
    }
    let mut cfg = solver.config().clone();
    cfg.richardson = true;
    let checked = solver.with_config(cfg)?;
    let field = solver.field();
    let model = &field.model;
    let eq = &field.equilibrium;
    let proj = &field.splitting.projection;
    let eps = solver.config().eps;
    let step = (solver.step() / 2.0).min(delta_t / 10.0);
    let rhs = |_t: f64, u: &DVector<f64>| model.vector_field(u);
    let results: Vec<InvarianceSample> = graph
        .samples
        .par_iter()
        .map(|s| {
            if s.solution.is_none() {
                return InvarianceSample::Failed("no graph value".into());
            }
            let sol = match checked.solve(&s.base) {
                Ok(sol) => sol,
                Err(e) => return InvarianceSample::Failed(e.to_string()),
            };
            let u0 = &sol.state0;
            let u1 = rk4_integrate(&rhs, u0, 0.0, delta_t, step);
            let u1_coarse = rk4_integrate(&rhs, u0, 0.0, delta_t, 2.0 * step);
            let integration = (&u1 - &u1_coarse).norm() / 15.0;
            let w1 = &u1 - eq;
            let p1 = &proj.coords_plus * solver.to_working(&w1);
            let q1 = &proj.coords_rest * &w1;
            let n1 = solver.base_norm(&p1);
            if n1 > eps {
                return InvarianceSample::Skipped { base_norm: n1 };
            }
            match checked.solve(&p1) {
                Ok(next) => InvarianceSample::Checked {
                    residual: (&next.h - &q1).norm(),
                    budget: solver.config().tol
                        + sol.diagnostics.error_budget
                        + next.diagnostics.error_budget
                        + integration,
                },
                Err(e) => InvarianceSample::Failed(e.to_string()),
            }
        })
        .collect();
    let mut report = InvarianceReport {
        max_residual: 0.0,
        max_ratio: 0.0,
        checked: 0,
        skipped: 0,
        failed: 0,
    };
    for (s, res) in graph.samples.iter_mut().zip(results) {
        match &res {
            InvarianceSample::Checked { residual, budget } => {
                report.checked += 1;
                report.max_residual = report.max_residual.max(*residual);
                report.max_ratio = report.max_ratio.max(residual / budget);
            }
            InvarianceSample::Skipped { .. } => report.skipped += 1,
            InvarianceSample::Failed(_) => report.failed += 1,
        }
        s.invariance = Some(res);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_analysis::eigen_split;
    use crate::lyapunov_perron::{split_field, LpConfig};
    use crate::models::{saddle_toy, SharedModel};
    use std::sync::Arc;

    fn saddle1(cfg: LpConfig) -> LpSolver {
        let m: SharedModel = Arc::new(saddle_toy("saddle1").unwrap());
        let s = eigen_split(&m.jacobian(&m.equilibrium()), 0.5).unwrap();
        LpSolver::new(Arc::new(split_field(m, s).unwrap()), cfg).unwrap()
    }

    #[test]
    fn exponential_decay_fit() {
        let times: Vec<f64> = (0..=100).map(|j| -5.0 + 0.05 * j as f64).collect();
        let states = times
            .iter()
            .map(|t| DVector::from_vec(vec![(2.0 * t).exp(), 0.0]))
            .collect();
        let orbit = OrbitGrid::new(times, states).unwrap();
        let fit = decay_rate_fit(&orbit, &NormLadder::uniform(2), 0.0).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_orbit_is_trivial() {
        let orbit = OrbitGrid::uniform_backward(1.0, 0.1, 2).unwrap();
        assert_eq!(
            decay_rate_fit(&orbit, &NormLadder::uniform(2), 0.0),
            Err(Error::TrivialOrbit)
        );
    }

    #[test]
    fn halton_first_points() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(2, 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn saddle1_graph_is_parabola() {
        let s = saddle1(LpConfig {
            dt: 0.01,
            ..Default::default()
        });
        let mut g = build_manifold_graph(&s, &BaseGrid::Tensor { per_axis: 21 }).unwrap();
        assert_eq!(g.samples.len(), 21);
        for smp in &g.samples {
            let x = smp.base[0];
            assert!((smp.value().unwrap()[0] - x * x / 3.0).abs() < 1e-6);
        }
        assert_eq!(g.value_at_zero, Some(0.0));
        let rep = invariance_residual(&mut g, &s, 0.1).unwrap();
        assert!(rep.checked > 10 && rep.failed == 0);
        assert!(rep.max_residual < 1e-6);
    }
}
