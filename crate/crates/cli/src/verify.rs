//! Named invariant checks behind `verify`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lpmanifold::linear_analysis::{
    dissipativity_check, eigen_split, eigenvalues, hamiltonian_symmetry_check, lyapunov_form,
    spectral_abscissa,
};
use lpmanifold::lyapunov_perron::{
    build_manifold_graph, lp_variational, prepare_field, BaseGrid, LpConfig, LpSolver, Side,
};
use lpmanifold::models::{
    build_model, mmt_block, mmt_galerkin, mmt_unstable_scan, MmtParams, ModelSpec, ModelSystem,
    SharedModel,
};
use lpmanifold::oracles::{
    backward_shoot, finite_difference_jacobian, quartic_roots, ShootingOptions,
};
use lpmanifold::waterwave::{
    capillary_log_scan, dn_shape_derivative_flat, froude_bond, kh_bound, OneFluidConfig,
    TwoFluidConfig,
};
use lpmanifold::Result;

use crate::error::CliError;

type Outcome = Result<(bool, String)>;

struct Check {
    suite: &'static str,
    name: &'static str,
    run: fn(u64) -> Outcome,
}

const SUITES: [&str; 6] = [
    "models",
    "spectral",
    "mmt",
    "manifold",
    "oracles",
    "waterwave",
];

const CHECKS: &[Check] = &[
    Check {
        suite: "models",
        name: "models/equilibrium-residual",
        run: equilibrium_residual,
    },
    Check {
        suite: "models",
        name: "models/jacobian-fd",
        run: jacobian_fd,
    },
    Check {
        suite: "spectral",
        name: "spectral/projector-identities",
        run: projector_identities,
    },
    Check {
        suite: "spectral",
        name: "spectral/lyapunov-form",
        run: lyapunov_forms,
    },
    Check {
        suite: "mmt",
        name: "mmt/quartic-vs-eigensolve",
        run: quartic_vs_eigensolve,
    },
    Check {
        suite: "mmt",
        name: "mmt/galerkin-block-diagonal",
        run: galerkin_block_diagonal,
    },
    Check {
        suite: "mmt",
        name: "mmt/hamiltonian-symmetry",
        run: hamiltonian_symmetry,
    },
    Check {
        suite: "mmt",
        name: "mmt/flagged-pairs-confirmed",
        run: flagged_confirmed,
    },
    Check {
        suite: "manifold",
        name: "manifold/saddle1-parabola",
        run: saddle1_parabola,
    },
    Check {
        suite: "manifold",
        name: "manifold/saddle2-stable-parabola",
        run: saddle2_parabola,
    },
    Check {
        suite: "manifold",
        name: "manifold/tangency-at-zero",
        run: tangency_at_zero,
    },
    Check {
        suite: "oracles",
        name: "oracles/shooting-vs-lp",
        run: shooting_vs_lp,
    },
    Check {
        suite: "waterwave",
        name: "waterwave/kh-threshold",
        run: kh_threshold,
    },
    Check {
        suite: "waterwave",
        name: "waterwave/froude-implies-coercive",
        run: froude_scan,
    },
    Check {
        suite: "waterwave",
        name: "waterwave/shape-derivative-symmetry",
        run: shape_symmetry,
    },
];

pub fn run(suite: &str, seed: u64) -> std::result::Result<(), CliError> {
    if suite != "all" && !SUITES.contains(&suite) {
        return Err(CliError::Validation(format!(
            "unknown suite '{suite}'; expected all or one of {}",
            SUITES.join(", ")
        )));
    }
    for c in CHECKS.iter().filter(|c| suite == "all" || c.suite == suite) {
        let (ok, detail) = match (c.run)(seed) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            println!("FAIL {}: {detail}", c.name);
            return Err(CliError::Numerical(format!("invariant {} failed", c.name)));
        }
        println!("ok   {}: {detail}", c.name);
    }
    Ok(())
}

fn models() -> Result<Vec<(&'static str, SharedModel)>> {
    Ok(vec![
        ("saddle1", build_model(&ModelSpec::Saddle1)?),
        ("saddle2", build_model(&ModelSpec::Saddle2)?),
        (
            "rd(0.5)",
            build_model(&ModelSpec::ReactionDiffusion {
                lambda: 0.5,
                modes: 4,
            })?,
        ),
        (
            "rd(2)",
            build_model(&ModelSpec::ReactionDiffusion {
                lambda: 2.0,
                modes: 5,
            })?,
        ),
        (
            "mmt",
            build_model(&ModelSpec::Mmt(MmtParams::new(1.0, 0.0, -1.0, 1.0, 1, 2)))?,
        ),
    ])
}

fn equilibrium_residual(_: u64) -> Outcome {
    let worst = models()?
        .iter()
        .map(|(_, m)| m.vector_field(&m.equilibrium()).norm())
        .fold(0.0, f64::max);
    Ok((worst <= 1e-12, format!("max |F(u_eq)| = {worst:.2e}")))
}

fn jacobian_fd(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for (_, m) in models()? {
        for _ in 0..5 {
            let n = m.dimension();
            let u = m.equilibrium() + DVector::from_fn(n, |_, _| rng.gen_range(-0.3..0.3));
            let j = m.jacobian(&u);
            let fd = finite_difference_jacobian(|x| m.vector_field(x), &u, 1e-5)?;
            worst = worst.max((&j - fd).norm() / j.norm().max(1.0));
        }
    }
    Ok((worst <= 1e-6, format!("max relative mismatch {worst:.2e}")))
}

fn projector_identities(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum_err, mut idem_err, mut n_split) = (0.0f64, 0.0f64, 0);
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let Ok(s) = eigen_split(&a, 0.2) else {
            continue;
        };
        n_split += 1;
        let p = &s.projection;
        let scale = p.projector_plus.norm().max(1.0);
        sum_err = sum_err
            .max((&p.projector_plus + &p.projector_rest - DMatrix::identity(n, n)).amax() / scale);
        idem_err = idem_err.max(
            (&p.projector_plus * &p.projector_plus - &p.projector_plus).amax() / (scale * scale),
        );
    }
    Ok((
        sum_err <= 1e-12 && idem_err <= 1e-10 && n_split > 0,
        format!(
            "{n_split} splittings: |P+ + P_rest - I| = {sum_err:.2e}, |P+^2 - P+| = {idem_err:.2e}"
        ),
    ))
}

fn lyapunov_forms(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut res, mut diss, mut min_eig) = (0.0f64, f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..50 {
        let n = rng.gen_range(1..=12);
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0) / (n as f64).sqrt());
        let a = &g - DMatrix::identity(n, n) * (spectral_abscissa(&g)? + rng.gen_range(0.1..1.0));
        let omega = spectral_abscissa(&a)? + rng.gen_range(0.05..1.0);
        let form = lyapunov_form(&a, omega)?;
        res = res.max(form.residual(&a));
        min_eig = min_eig.min(form.min_eigenvalue());
        diss = diss.max(dissipativity_check(&form, &a, omega)?);
    }
    Ok((
        res <= 1e-10 && min_eig > 0.0 && diss <= 1e-10,
        format!("residual {res:.2e}, min eig {min_eig:.2e}, dissipativity {diss:.2e}"),
    ))
}

fn random_mmt(rng: &mut ChaCha8Rng, half_width: usize) -> MmtParams {
    let alpha = rng.gen_range(0.5..1.5);
    let beta = rng.gen_range(0.0..alpha);
    let sigma = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    MmtParams::new(
        alpha,
        beta,
        sigma,
        rng.gen_range(0.1..2.0),
        rng.gen_range(-3..=3),
        half_width,
    )
}

fn quartic_vs_eigensolve(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_mmt(&mut rng, 6);
        let xi = p.xi0 + if rng.gen_bool(0.5) { 1 } else { -1 } * rng.gen_range(1..=6);
        let b = mmt_block(&p, xi)?;
        let closed = quartic_roots(b.c_plus, b.c_minus, b.c);
        let mut numeric = eigenvalues(&b.block)?;
        for z in &closed {
            let (i, d) = numeric
                .iter()
                .enumerate()
                .map(|(i, w)| (i, (z - w).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap_or((0, f64::INFINITY));
            worst = worst.max(d);
            if i < numeric.len() {
                numeric.remove(i);
            }
        }
    }
    Ok((
        worst <= 1e-10,
        format!("100 draws, max root distance {worst:.2e}"),
    ))
}

fn galerkin_block_diagonal(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = random_mmt(&mut rng, 4);
        let g = mmt_galerkin(&p)?;
        let j = g.jacobian(&g.plane_wave());
        for &xi in g.modes() {
            let Some(i) = g.index_of(xi) else { continue };
            let own: Vec<usize> = match g.index_of(2 * p.xi0 - xi) {
                Some(ip) => vec![2 * i, 2 * i + 1, 2 * ip, 2 * ip + 1],
                None => vec![2 * i, 2 * i + 1],
            };
            for &r in &own {
                for c in (0..j.ncols()).filter(|c| !own.contains(c)) {
                    worst = worst.max(j[(r, c)].abs());
                }
            }
        }
    }
    Ok((worst <= 1e-12, format!("max off-pair coupling {worst:.2e}")))
}

fn hamiltonian_symmetry(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for hw in [1, 2, 4, 8, 15] {
        let g = mmt_galerkin(&random_mmt(&mut rng, hw))?;
        worst = worst
            .max(hamiltonian_symmetry_check(&g.jacobian(&g.plane_wave()), 1e-8)?.worst_distance);
    }
    Ok((
        worst <= 1e-8,
        format!("mode sets up to 31, max pairing distance {worst:.2e}"),
    ))
}

fn flagged_confirmed(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut flagged, mut bad) = (0, 0);
    for _ in 0..20 {
        let p = random_mmt(&mut rng, 2);
        for e in mmt_unstable_scan(&p, p.xi0 - 8..=p.xi0 + 8)? {
            if e.flagged {
                flagged += 1;
                bad += usize::from(!e.confirmed);
            }
        }
    }
    Ok((
        bad == 0,
        format!("{flagged} flagged pairs, {bad} without a positive eigenvalue"),
    ))
}

fn graph_error(model: ModelSpec, side: Side, eps: f64, exact: fn(f64) -> f64) -> Result<f64> {
    let f = prepare_field(build_model(&model)?, side, None)?;
    let s = LpSolver::new(
        f,
        LpConfig {
            dt: 0.01,
            eps,
            ..Default::default()
        },
    )?;
    let g = build_manifold_graph(&s, &BaseGrid::Tensor { per_axis: 21 })?;
    let mut worst = 0.0f64;
    for smp in &g.samples {
        match smp.value() {
            Some(h) => worst = worst.max((h[0] - exact(smp.base[0])).abs()),
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(worst)
}

fn saddle1_parabola(_: u64) -> Outcome {
    let e = graph_error(ModelSpec::Saddle1, Side::Unstable, 0.1, |x| x * x / 3.0)?;
    Ok((e <= 1e-6, format!("max |h - x^2/3| = {e:.2e}")))
}

fn saddle2_parabola(_: u64) -> Outcome {
    let e = graph_error(ModelSpec::Saddle2, Side::Stable, 0.2, |y| -y * y / 4.0)?;
    Ok((e <= 1e-6, format!("max |h + y^2/4| = {e:.2e}")))
}

fn tangency_at_zero(_: u64) -> Outcome {
    let mut worst = 0.0f64;
    for (_, m) in models()? {
        let f = prepare_field(m, Side::Unstable, None)?;
        let k = f.dim_plus();
        let s = LpSolver::new(
            f,
            LpConfig {
                dt: 0.01,
                eps: 0.02,
                ..Default::default()
            },
        )?;
        let sol = s.solve(&DVector::zeros(k))?;
        worst = worst.max(lp_variational(&s, &sol)?.dq.norm());
    }
    Ok((worst <= 1e-6, format!("max |Dq(0)| = {worst:.2e}")))
}

fn shooting_vs_lp(_: u64) -> Outcome {
    let mut worst = 0.0f64;
    for (name, m) in models()? {
        if name == "mmt" {
            continue;
        }
        let f = prepare_field(Arc::clone(&m), Side::Unstable, None)?;
        let k = f.dim_plus();
        let s = LpSolver::new(
            f.clone(),
            LpConfig {
                dt: 0.01,
                eps: 0.05,
                richardson: true,
                ..Default::default()
            },
        )?;
        let mut p = DVector::from_element(k, 1.0);
        p *= 0.9 * s.config().eps / s.base_norm(&p);
        let lp = s.solve(&p)?;
        let shot = backward_shoot(m.as_ref(), &f.splitting, &p, ShootingOptions::default())?;
        let ratio = (&lp.h - &shot.matched_value).norm()
            / (lp.diagnostics.error_budget + shot.error_budget);
        worst = worst.max(ratio);
    }
    Ok((
        worst <= 10.0,
        format!("max |h_LP - h_shoot| / budget = {worst:.3}"),
    ))
}

fn kh_threshold(_: u64) -> Outcome {
    let cfg = TwoFluidConfig {
        rho_plus: 1.0,
        rho_minus: 2.0,
        nu_plus: vec![1.0, 0.0],
        nu_minus: vec![0.5, 0.5],
        h_plus: f64::INFINITY,
        h_minus: f64::INFINITY,
        g: 1.0,
        sigma: 1.0,
    };
    let closed = kh_bound(&cfg)?;
    let finite = kh_bound(&TwoFluidConfig {
        h_plus: 1e3,
        h_minus: 1e3,
        ..cfg
    })?;
    Ok((
        closed == 0.0 && finite.abs() <= 1e-6,
        format!("closed form {closed}, depth 1e3 gives {finite:.2e}"),
    ))
}

fn froude_scan(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut flagged, mut min) = (0, f64::INFINITY);
    for _ in 0..100 {
        let cfg = OneFluidConfig {
            g: rng.gen_range(0.5..20.0),
            sigma: rng.gen_range(0.01..2.0),
            h0: rng.gen_range(0.1..5.0),
            c: vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
        };
        if froude_bond(&cfg)?.coercive {
            flagged += 1;
            min = capillary_log_scan(&cfg, 1e-3, 1e3, 601)?
                .iter()
                .map(|p| p.1)
                .fold(min, f64::min);
        }
    }
    Ok((
        min >= 0.0,
        format!("{flagged} flagged configurations, min multiplier {min:.3e}"),
    ))
}

fn shape_symmetry(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 64;
    let xs: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let wave = |o: usize, x: f64| {
            c[o] * x.cos() + c[o + 1] * (2.0 * x).sin() + c[o + 2] * (4.0 * x).cos()
        };
        let eta: Vec<f64> = xs.iter().map(|&x| wave(0, x)).collect();
        let p1: Vec<f64> = xs.iter().map(|&x| wave(3, x)).collect();
        let p2: Vec<f64> = xs.iter().map(|&x| wave(6, x)).collect();
        let a = dn_shape_derivative_flat(&eta, &p1, &p2, 1.5, 2.0 * PI)?;
        let b = dn_shape_derivative_flat(&eta, &p2, &p1, 1.5, 2.0 * PI)?;
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    Ok((
        worst <= 1e-14,
        format!("max relative swap difference {worst:.2e}"),
    ))
}
