mod common;

use nalgebra::{DMatrix, DVector};

use lpmanifold::linear_analysis::eigenvalues;
use lpmanifold::lyapunov_perron::LpConfig;
use lpmanifold::lyapunov_perron::LpSolver;
use lpmanifold::models::{mmt_galerkin, ModePairBlock, ModelSystem};
use lpmanifold::oracles::{
    backward_shoot, finite_difference_jacobian, quartic_roots, ShootingOptions,
};

#[test]
fn shooting_agrees_with_lp_on_reaction_diffusion() {
    let c = common::rd(0.5);
    let s = LpSolver::new(
        c.field.clone(),
        LpConfig {
            richardson: true,
            ..c.cfg.clone()
        },
    )
    .unwrap();
    let p = DVector::from_element(1, 0.05 / s.base_norm(&DVector::from_element(1, 1.0)) * 0.99);
    let lp = s.solve(&p).unwrap();
    let shot = backward_shoot(
        c.field.model.as_ref(),
        &c.field.splitting,
        &p,
        ShootingOptions::default(),
    )
    .unwrap();
    assert!(shot.match_residual <= 1e-12);
    let err = (&lp.h - &shot.matched_value).norm();
    assert!(
        err <= 10.0 * (lp.diagnostics.error_budget + shot.error_budget),
        "err {err}"
    );
}

#[test]
fn shooting_rejects_large_unstable_blocks() {
    let c = common::mmt();
    let m = &c.field.model;
    let mut split = c.field.splitting.clone();
    assert!(backward_shoot(
        m.as_ref(),
        &split,
        &DVector::zeros(3),
        ShootingOptions::default()
    )
    .is_err());
    split.lambda_plus = 1.0;
    let target = DVector::from_element(2, 1e-3);
    assert!(backward_shoot(
        m.as_ref(),
        &split,
        &target,
        ShootingOptions {
            dt: -1.0,
            ..Default::default()
        }
    )
    .is_err());
}

#[test]
fn fd_jacobian_exact_for_linear_maps() {
    let a = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0, -1.0, 0.25, 2.0]);
    let j = finite_difference_jacobian(|u| &a * u, &DVector::from_vec(vec![0.3, -0.7, 1.1]), 1e-3)
        .unwrap();
    assert!((j - a).amax() < 1e-12);
    assert!(finite_difference_jacobian(|u| u.clone(), &DVector::zeros(2), 0.0).is_err());
}

#[test]
fn mmt_jacobian_matches_fd() {
    let g = mmt_galerkin(&common::mmt_params()).unwrap();
    let n = g.dimension();
    let u = g.plane_wave() + DVector::from_fn(n, |i, _| 0.1 * ((i as f64) * 1.3).sin());
    let fd = finite_difference_jacobian(|x| g.vector_field(x), &u, 1e-5).unwrap();
    let j = g.jacobian(&u);
    assert!((&j - &fd).norm() <= 1e-6 * j.norm());
}

#[test]
fn imaginary_quartic_example() {
    let (cp, cm, c) = (-11.0, 61.0, 12.0);
    let roots = quartic_roots(cp, cm, c);
    assert!(roots.iter().all(|z| z.re.abs() < 1e-12));
    #[rustfmt::skip]
    let block = DMatrix::from_row_slice(4, 4, &[
        0.0, cp, 0.0, -c,
        -cp, 0.0, -c, 0.0,
        0.0, -c, 0.0, cm,
        -c, 0.0, -cm, 0.0,
    ]);
    let blk = ModePairBlock {
        xi: 0,
        partner: 2,
        c_plus: cp,
        c_minus: cm,
        c,
        block,
    };
    assert!(blk.discriminant() > 0.0);
    let mut ims: Vec<f64> = eigenvalues(&blk.block)
        .unwrap()
        .iter()
        .map(|z| z.im)
        .collect();
    let mut want: Vec<f64> = roots.iter().map(|z| z.im).collect();
    ims.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    for (a, b) in ims.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10);
    }
}
