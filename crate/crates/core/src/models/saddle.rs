//! Planar polynomial saddles with closed-form invariant manifolds.

use nalgebra::{DMatrix, DVector};

use super::FnModel;
use crate::error::{Error, Result};

/// `saddle1`: `x' = x, y' = -y + x^2`, unstable manifold `y = x^2/3`, stable manifold `x = 0`.
///
/// `saddle2`: `x' = 2x + y^2, y' = -y`, unstable manifold `y = 0`, stable manifold `x = -y^2/4`.
pub fn saddle_toy(name: &str) -> Result<FnModel> {
    let eq = DVector::zeros(2);
    match name {
        "saddle1" => Ok(FnModel::new(
            "saddle1",
            eq,
            |u| DVector::from_vec(vec![u[0], -u[1] + u[0] * u[0]]),
            |u| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0 * u[0], -1.0]),
        )),
        "saddle2" => Ok(FnModel::new(
            "saddle2",
            eq,
            |u| DVector::from_vec(vec![2.0 * u[0] + u[1] * u[1], -u[1]]),
            |u| DMatrix::from_row_slice(2, 2, &[2.0, 2.0 * u[1], 0.0, -1.0]),
        )),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// Exact unstable manifold of `saddle1`.
pub fn saddle1_unstable(x: f64) -> f64 {
    x * x / 3.0
}

/// Exact stable manifold of `saddle2`.
pub fn saddle2_stable(y: f64) -> f64 {
    -y * y / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSystem;

    #[test]
    fn jacobians_at_origin() {
        let z = DVector::zeros(2);
        let s1 = saddle_toy("saddle1").unwrap();
        let s2 = saddle_toy("saddle2").unwrap();
        assert_eq!(
            s1.jacobian(&z),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]))
        );
        assert_eq!(
            s2.jacobian(&z),
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0]))
        );
    }

    #[test]
    fn saddle1_parabola_is_invariant() {
        let s1 = saddle_toy("saddle1").unwrap();
        for &x in &[-0.7, -0.1, 0.0, 0.2, 1.3] {
            let f = s1.vector_field(&DVector::from_vec(vec![x, saddle1_unstable(x)]));
            assert!((f[1] - 2.0 * x / 3.0 * f[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn saddle2_stable_curve_is_invariant() {
        let s2 = saddle_toy("saddle2").unwrap();
        for &y in &[-0.5, 0.1, 0.4] {
            let f = s2.vector_field(&DVector::from_vec(vec![saddle2_stable(y), y]));
            assert!((f[0] - (-y / 2.0) * f[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(saddle_toy("saddle3"), Err(Error::UnknownModel(_))));
    }
}
