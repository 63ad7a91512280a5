//! Splitting of a linearization into unstable and remaining spectral blocks.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graded_space::ProjectionPair;

pub type LinearOperator = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralBlock {
    Plus,
    Center,
    Minus,
}

impl SpectralBlock {
    pub fn label(self) -> &'static str {
        match self {
            SpectralBlock::Plus => "plus",
            SpectralBlock::Center => "center",
            SpectralBlock::Minus => "minus",
        }
    }
}

/// Unstable block `X+` (Re > gap) against the rest (center and stable).
#[derive(Debug, Clone)]
pub struct SpectralSplitting {
    /// Sorted by decreasing real part, then increasing imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub blocks: Vec<SpectralBlock>,
    pub projection: ProjectionPair,
    pub dim_plus: usize,
    pub dim_center: usize,
    pub dim_minus: usize,
    pub gap: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// Smallest real part in `X+` (infinite if `X+` is trivial).
    pub lambda_plus: f64,
    /// Largest real part outside `X+` (negative infinity if the rest is trivial).
    pub lambda_minus: f64,
    /// `A` restricted to `X+` in the `basis_plus` coordinates.
    pub a_plus: DMatrix<f64>,
    /// `A` restricted to the rest in the `basis_rest` coordinates.
    pub a_rest: DMatrix<f64>,
    pub matrix: DMatrix<f64>,
}

impl SpectralSplitting {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max(|P+ A P_rest|, |P_rest A P+|)`: vanishes for an exact invariant splitting.
    pub fn coupling(&self) -> f64 {
        let p = &self.projection;
        let a = &self.matrix;
        let c1 = (&p.projector_plus * a * &p.projector_rest).norm();
        let c2 = (&p.projector_rest * a * &p.projector_plus).norm();
        c1.max(c2)
    }
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let n = a.nrows();
    // second attempt on a fixed orthogonal similarity
    let schur = Schur::try_new(a.clone(), 1e-15, 10_000)
        .or_else(|| {
            let q = DMatrix::<f64>::from_fn(n, n, |i, k| ((7 * i + 3 * k + 1) as f64).sin())
                .qr()
                .q();
            Schur::try_new(q.transpose() * a * &q, 1e-15, 10_000)
        })
        .ok_or(Error::NotConverged {
            iterations: 10_000,
            increment: f64::NAN,
            tol: 1e-15,
        })?;
    let mut ev: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    ev.sort_by(|x, y| {
        y.re.partial_cmp(&x.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    Ok(ev)
}

/// Half the smallest clearly positive real part, shrunk until no eigenvalue sits
/// within the ambiguity band of the gap.
pub fn auto_gap(a: &LinearOperator) -> Result<f64> {
    let ev = eigenvalues(a)?;
    let floor = 1e-6 * ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let smallest = ev
        .iter()
        .map(|z| z.re)
        .filter(|&re| re > floor)
        .fold(f64::INFINITY, f64::min);
    if !smallest.is_finite() {
        return Err(Error::InvalidInput(
            "spectrum has no eigenvalue with positive real part".into(),
        ));
    }
    let mut gap = 0.5 * smallest;
    for _ in 0..60 {
        if ev.iter().all(|z| (z.re.abs() - gap).abs() >= 0.2 * gap) {
            return Ok(gap);
        }
        gap *= 0.8;
    }
    Err(Error::InvalidInput("no unambiguous gap found".into()))
}

pub fn eigen_split(a: &LinearOperator, gap: f64) -> Result<SpectralSplitting> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput(
            "eigen_split needs a square matrix".into(),
        ));
    }
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::InvalidInput(format!(
            "gap must be positive, got {gap}"
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("linear operator"));
    }
    let ev = eigenvalues(a)?;
    for z in &ev {
        if (z.re.abs() - gap).abs() < 0.1 * gap {
            return Err(Error::AmbiguousSplit {
                re: z.re,
                im: z.im,
                gap,
            });
        }
    }
    let blocks: Vec<SpectralBlock> = ev
        .iter()
        .map(|z| {
            if z.re > gap {
                SpectralBlock::Plus
            } else if z.re < -gap {
                SpectralBlock::Minus
            } else {
                SpectralBlock::Center
            }
        })
        .collect();
    let dim_plus = blocks.iter().filter(|b| **b == SpectralBlock::Plus).count();
    let dim_center = blocks
        .iter()
        .filter(|b| **b == SpectralBlock::Center)
        .count();
    let dim_minus = n - dim_plus - dim_center;

    let id = DMatrix::<f64>::identity(n, n);
    let p_plus = if dim_plus == 0 {
        DMatrix::zeros(n, n)
    } else if dim_plus == n {
        id.clone()
    } else {
        let s = matrix_sign(&(a - &id * gap))?;
        (&id + s) * 0.5
    };
    let basis_plus = column_basis(&p_plus, dim_plus);
    let basis_rest = column_basis(&(&id - &p_plus), n - dim_plus);
    let projection = ProjectionPair::from_bases(basis_plus, basis_rest)?;

    let lambda_plus = ev
        .iter()
        .zip(&blocks)
        .filter(|(_, b)| **b == SpectralBlock::Plus)
        .map(|(z, _)| z.re)
        .fold(f64::INFINITY, f64::min);
    let lambda_minus = ev
        .iter()
        .zip(&blocks)
        .filter(|(_, b)| **b != SpectralBlock::Plus)
        .map(|(z, _)| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let a_plus = &projection.coords_plus * a * &projection.basis_plus;
    let a_rest = &projection.coords_rest * a * &projection.basis_rest;
    Ok(SpectralSplitting {
        eigenvalues: ev,
        blocks,
        projection,
        dim_plus,
        dim_center,
        dim_minus,
        gap,
        omega_plus: 0.5 * (lambda_plus + gap),
        omega_minus: 0.5 * (lambda_minus + gap),
        lambda_plus,
        lambda_minus,
        a_plus,
        a_rest,
        matrix: a.clone(),
    })
}

/// Matrix sign function by the scaled Newton iteration `X <- (c X + (c X)^-1) / 2`.
fn matrix_sign(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows() as f64;
    let mut x = m.clone();
    let mut scale = true;
    for _ in 0..100 {
        let lu = x.clone().lu();
        let inv = lu
            .try_inverse()
            .ok_or(Error::Singular("matrix sign iteration"))?;
        let c = if scale {
            let lu = x.clone().lu();
            let logdet: f64 = lu.u().diagonal().iter().map(|d| d.abs().ln()).sum();
            (-logdet / n).exp()
        } else {
            1.0
        };
        let next = (&x * c + inv / c) * 0.5;
        let delta = (&next - &x).norm();
        let size = next.norm();
        x = next;
        if delta <= 1e-2 * size {
            scale = false;
        }
        if delta <= 1e-14 * size {
            // one polishing step
            let inv = x
                .clone()
                .try_inverse()
                .ok_or(Error::Singular("matrix sign iteration"))?;
            return Ok((&x + inv) * 0.5);
        }
    }
    Err(Error::NotConverged {
        iterations: 100,
        increment: f64::NAN,
        tol: 1e-14,
    })
}

/// Orthonormal basis of the range of a rank-`k` matrix by column-pivoted Gram-Schmidt.
///
/// Each basis vector is oriented so its largest-magnitude entry is positive.
fn column_basis(p: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = p.nrows();
    let mut cols: Vec<_> = (0..p.ncols()).map(|j| p.column(j).into_owned()).collect();
    let mut basis = DMatrix::zeros(n, k);
    for b in 0..k {
        let (best, _) =
            cols.iter()
                .enumerate()
                .map(|(j, c)| (j, c.norm()))
                .fold((0, -1.0), |acc, (j, v)| {
                    if v > acc.1 + 1e-12 * v.max(1.0) {
                        (j, v)
                    } else {
                        acc
                    }
                });
        let mut q = cols[best].clone();
        for prev in 0..b {
            let e = basis.column(prev).into_owned();
            let d = e.dot(&q);
            q.axpy(-d, &e, 1.0);
        }
        q /= q.norm();
        let (imax, _) = q.iter().enumerate().fold((0, 0.0f64), |acc, (i, v)| {
            if v.abs() > acc.1 + 1e-12 {
                (i, v.abs())
            } else {
                acc
            }
        });
        if q[imax] < 0.0 {
            q = -q;
        }
        for c in cols.iter_mut() {
            let d = q.dot(c);
            c.axpy(-d, &q, 1.0);
        }
        basis.set_column(b, &q);
    }
    basis
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub worst_distance: f64,
    pub symmetric: bool,
}

/// Pairs each eigenvalue with the closest unused `-conj(lambda)` and reports the worst mismatch.
pub fn hamiltonian_symmetry_check(a: &LinearOperator, tol: f64) -> Result<SymmetryReport> {
    let ev = eigenvalues(a)?;
    let mut used = vec![false; ev.len()];
    let mut worst = 0.0f64;
    for i in 0..ev.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = -ev[i].conj();
        let self_dist = (ev[i] - target).norm();
        let best = (0..ev.len())
            .filter(|&j| !used[j])
            .map(|j| (j, (ev[j] - target).norm()))
            .fold(None, |acc: Option<(usize, f64)>, (j, d)| match acc {
                Some((_, bd)) if bd <= d => acc,
                _ => Some((j, d)),
            });
        match best {
            Some((j, d)) if d < self_dist => {
                used[j] = true;
                worst = worst.max(d);
            }
            _ => worst = worst.max(self_dist),
        }
    }
    Ok(SymmetryReport {
        worst_distance: worst,
        symmetric: worst <= tol,
    })
}
