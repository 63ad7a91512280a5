use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lpmanifold::linear_analysis::{integrate_orbit, picard_solve};
use lpmanifold::lyapunov_perron::{
    build_manifold_graph, contraction_budget, invariance_residual, prepare_field, quasilinearize,
    sample_constants, BaseGrid, InvarianceSample, LpConfig, LpSolver, SampleStatus, Side,
    SplitField,
};
use lpmanifold::models::{
    build_model, mmt_block, mmt_unstable_scan, MmtParams, ModelSpec, SharedModel,
};
use lpmanifold::waterwave::{
    capillary_log_scan, dn_flat_symbol, froude_bond, kh_bound, morse_index_count, OneFluidConfig,
    TwoFluidConfig,
};
use lpmanifold::Error;

use crate::error::CliError;
use crate::output::{num, write_to, Sink, Table};
use crate::settings::Settings;
use crate::{FluidArgs, LpArgs, ModelArgs, OutArgs, WaveCommand};

struct Resolved {
    name: String,
    model: SharedModel,
    mmt: Option<MmtParams>,
    side: Side,
    gap: Option<f64>,
}

fn mmt_params(s: &Settings, m: &ModelArgs) -> Result<MmtParams, CliError> {
    let p = MmtParams::new(
        s.or(m.alpha, "alpha", 1.0)?,
        s.or(m.beta, "beta", 0.0)?,
        s.or(m.sigma, "sigma", -1.0)?,
        s.or(m.a, "a", 1.0)?,
        s.or(m.xi0, "xi0", 1)?,
        s.or(m.half_width, "half-width", 2)?,
    );
    p.validate()?;
    Ok(p)
}

fn resolve(s: &Settings, m: &ModelArgs) -> Result<Resolved, CliError> {
    let name = s.get(m.model.clone(), "model")?.ok_or_else(|| {
        CliError::Validation("--model is required (saddle1, saddle2, rd or mmt)".into())
    })?;
    let lambda = s.or(m.lambda_param, "lambda-param", 0.5)?;
    let modes = s.or(m.modes, "modes", 4)?;
    let mmt = mmt_params(s, m)?;
    let side = match s
        .or(m.side.clone(), "side", "unstable".to_string())?
        .as_str()
    {
        "unstable" => Side::Unstable,
        "stable" => Side::Stable,
        other => {
            return Err(CliError::Validation(format!(
                "--side must be unstable or stable, got '{other}'"
            )))
        }
    };
    let gap = s.get(m.gap, "gap")?;
    if let Some(g) = gap {
        if !(g > 0.0) {
            return Err(CliError::Validation(format!(
                "--gap must be positive, got {g}"
            )));
        }
    }
    let spec = match name.as_str() {
        "saddle1" => ModelSpec::Saddle1,
        "saddle2" => ModelSpec::Saddle2,
        "rd" => ModelSpec::ReactionDiffusion { lambda, modes },
        "mmt" => ModelSpec::Mmt(mmt.clone()),
        other => return Err(Error::UnknownModel(other.to_string()).into()),
    };
    let model = build_model(&spec)?;
    Ok(Resolved {
        mmt: (name == "mmt").then_some(mmt),
        name,
        model,
        side,
        gap,
    })
}

fn field(r: &Resolved) -> Result<Arc<SplitField>, CliError> {
    Ok(prepare_field(r.model.clone(), r.side, r.gap)?)
}

fn plot(out: &OutArgs, table: &Table, columns: &[usize]) -> Result<(), CliError> {
    match &out.plot {
        Some(p) => write_to(p, &table.plot(columns)),
        None => Ok(()),
    }
}

pub fn split(s: &Settings, m: &ModelArgs, out: &OutArgs) -> Result<(), CliError> {
    let r = resolve(s, m)?;
    s.finish()?;
    let f = field(&r)?;
    let sp = &f.splitting;
    let sink = Sink {
        csv_path: out.output.as_deref(),
    };
    sink.report(&format!(
        "model {} ({} dimensions), gap {}",
        r.name,
        sp.dimension(),
        sp.gap
    ));
    sink.report(&format!(
        "dims (plus, center, minus) = ({}, {}, {})",
        sp.dim_plus, sp.dim_center, sp.dim_minus
    ));
    sink.report(&format!(
        "omega_plus = {}, omega_minus = {}, lambda_plus = {}, lambda_minus = {}",
        sp.omega_plus, sp.omega_minus, sp.lambda_plus, sp.lambda_minus
    ));
    if let Some(p) = &r.mmt {
        for &xi in &p.mode_set {
            let partner = 2 * p.xi0 - xi;
            if xi < partner && p.mode_set.contains(&partner) {
                let b = mmt_block(p, xi)?;
                sink.report(&format!(
                    "pair ({xi}, {partner}): c+ = {}, c- = {}, c = {}, discriminant = {}",
                    b.c_plus,
                    b.c_minus,
                    b.c,
                    b.discriminant()
                ));
            }
        }
    }
    let mut t = Table::new(["re", "im", "block"]);
    for (z, b) in sp.eigenvalues.iter().zip(&sp.blocks) {
        t.push(vec![num(z.re), num(z.im), b.label().to_string()]);
    }
    plot(out, &t, &[0, 1])?;
    sink.emit(&t)
}

fn lp_config(s: &Settings, lp: &LpArgs) -> Result<LpConfig, CliError> {
    let d = LpConfig::default();
    Ok(LpConfig {
        lambda: s.get(lp.lambda, "lambda")?,
        t_max: s.or(lp.t_max, "t-max", d.t_max)?,
        dt: s.or(lp.dt, "dt", d.dt)?,
        eps: s.or(lp.eps, "eps", d.eps)?,
        max_iter: s.or(lp.max_iter, "max-iter", d.max_iter)?,
        tol: s.or(lp.tol, "tol", d.tol)?,
        r: s.or(lp.r, "r", d.r)?,
        richardson: s.flag(lp.richardson, "richardson")?,
    })
}

/// Warns when the sampled contraction budget does not cover the requested radius.
fn budget_warning(f: &SplitField, solver: &LpSolver, seed: u64) {
    let sp = &f.splitting;
    let eps = solver.config().eps;
    let k = solver.config().r.max(0.0).round() as u32;
    let mut radius = 4.0 * eps;
    let mut feasible = None;
    for _ in 0..5 {
        let Ok(c) = sample_constants(f, radius, 200, 10.0, seed) else {
            return;
        };
        let Ok(b) = contraction_budget(
            c.c0,
            c.cf,
            k,
            sp.lambda_minus.max(-1e6),
            sp.lambda_plus,
            solver.lambda(),
        ) else {
            return;
        };
        feasible = b.feasible_eps;
        match b.m0 {
            Some(m0) if m0 * eps > radius => radius = m0 * eps,
            _ => break,
        }
    }
    match feasible {
        Some(fe) if fe >= eps => {}
        Some(fe) => eprintln!(
            "warning: eps = {eps} exceeds the sampled budget radius {fe:.3e}; contraction is checked from the iterates"
        ),
        None => eprintln!("warning: the sampled contraction budget admits no radius; contraction is checked from the iterates"),
    }
}

pub fn manifold(s: &Settings, m: &ModelArgs, lp: &LpArgs, out: &OutArgs) -> Result<(), CliError> {
    let r = resolve(s, m)?;
    let cfg = lp_config(s, lp)?;
    let per_axis = s.get(lp.grid, "grid")?;
    let halton = s.get(lp.halton, "halton")?;
    let inv_dt = s.or(lp.invariance_dt, "invariance-dt", 0.1)?;
    let quasi = s.flag(lp.quasilinear, "quasilinear")?;
    let force = s.flag(lp.force, "force")?;
    let seed = s.or(lp.seed, "seed", 0)?;
    s.finish()?;
    if inv_dt < 0.0 {
        return Err(CliError::Validation(format!(
            "--invariance-dt must be >= 0, got {inv_dt}"
        )));
    }
    let f = field(&r)?;
    let solver = if quasi {
        LpSolver::quasilinear(Arc::new(quasilinearize(f.clone(), None, None)?), cfg)?
    } else {
        LpSolver::new(f.clone(), cfg)?
    };
    let k = f.dim_plus();
    let grid = match halton {
        Some(count) => BaseGrid::Halton { count },
        None => BaseGrid::auto(
            k,
            per_axis.unwrap_or(match k {
                1 => 21,
                2 => 7,
                _ => 5,
            }),
        ),
    };
    budget_warning(&f, &solver, seed);

    let mut edge = DVector::zeros(k);
    edge[0] = 1.0;
    let edge = &edge * (solver.config().eps / solver.base_norm(&edge));
    if let Err(e) = solver.solve(&edge) {
        let contraction = matches!(
            e,
            Error::LpNoContraction { .. } | Error::NotConverged { .. } | Error::NonFinite(_)
        );
        if contraction && !force {
            return Err(CliError::Numerical(format!(
                "contraction probe at the edge of the eps-ball failed: {e}; shrink --eps or pass --force"
            )));
        }
        if !contraction {
            return Err(e.into());
        }
    }

    let mut graph = build_manifold_graph(&solver, &grid)?;
    if graph.samples.is_empty() {
        return Err(CliError::Validation(
            "the grid has no base points inside the eps-ball".into(),
        ));
    }
    if graph.failures() == graph.samples.len() {
        let first = match &graph.samples[0].status {
            SampleStatus::Failed(msg) => msg.clone(),
            SampleStatus::Ok => String::new(),
        };
        return Err(CliError::Numerical(format!(
            "every sample failed; first: {first}"
        )));
    }
    let inv = if inv_dt > 0.0 {
        Some(invariance_residual(&mut graph, &solver, inv_dt)?)
    } else {
        None
    };

    let m_rest = f.dim_rest();
    let mut header: Vec<String> = (0..k).map(|i| format!("base_{i}")).collect();
    header.extend((0..m_rest).map(|i| format!("h_{i}")));
    header.extend(
        [
            "lambda_fit",
            "iterations",
            "fp_residual",
            "invariance_residual",
            "status",
        ]
        .map(String::from),
    );
    let mut t = Table::new(header);
    for smp in &graph.samples {
        let mut row: Vec<String> = smp.base.iter().map(|x| num(*x)).collect();
        match smp.value() {
            Some(h) => row.extend(h.iter().map(|x| num(*x))),
            None => row.extend(std::iter::repeat(String::new()).take(m_rest)),
        }
        row.push(
            smp.decay_fit
                .as_ref()
                .map(|d| num(d.rate))
                .unwrap_or_default(),
        );
        row.push(smp.iterations().map(|i| i.to_string()).unwrap_or_default());
        row.push(smp.fixed_point_residual().map(num).unwrap_or_default());
        row.push(match &smp.invariance {
            Some(InvarianceSample::Checked { residual, .. }) => num(*residual),
            _ => String::new(),
        });
        row.push(match (&smp.status, &smp.invariance) {
            (SampleStatus::Failed(msg), _) => format!("failed: {}", msg.replace(',', ";")),
            (SampleStatus::Ok, Some(InvarianceSample::Skipped { .. })) => {
                "ok (invariance skipped)".into()
            }
            (SampleStatus::Ok, Some(InvarianceSample::Failed(msg))) => {
                format!("ok (invariance failed: {})", msg.replace(',', ";"))
            }
            (SampleStatus::Ok, Some(InvarianceSample::Checked { residual, budget }))
                if residual > budget =>
            {
                "ok (invariance residual exceeds budget)".into()
            }
            (SampleStatus::Ok, _) => "ok".into(),
        });
        t.push(row);
    }

    let sink = Sink {
        csv_path: out.output.as_deref(),
    };
    let sp = &f.splitting;
    sink.report(&format!(
        "model {} ({} side): dims ({}, {}, {}), lambda = {}, eps = {}, {} samples, {} failed",
        r.name,
        if r.side == Side::Stable {
            "stable"
        } else {
            "unstable"
        },
        sp.dim_plus,
        sp.dim_center,
        sp.dim_minus,
        graph.lambda,
        graph.eps,
        graph.samples.len(),
        graph.failures()
    ));
    let fmt = |x: Option<f64>| {
        x.map(|v| format!("{v:.6e}"))
            .unwrap_or_else(|| "n/a".into())
    };
    sink.report(&format!(
        "h(0) = {}, tangency slope = {}, tangency intercept = {}, Lipschitz estimate = {}",
        fmt(graph.value_at_zero),
        fmt(graph.tangency.map(|t| t.slope)),
        fmt(graph.tangency.map(|t| t.intercept)),
        fmt(graph.lipschitz)
    ));
    if let Some(inv) = inv {
        sink.report(&format!(
            "invariance at dt = {inv_dt}: max residual {:.3e}, max residual/budget {:.3}, {} checked, {} skipped, {} failed",
            inv.max_residual, inv.max_ratio, inv.checked, inv.skipped, inv.failed
        ));
        if inv.max_ratio > 1.0 {
            eprintln!("warning: invariance residual exceeds its error budget; refine --dt or shrink --eps");
        }
    }
    plot(out, &t, &(0..k + m_rest).collect::<Vec<_>>())?;
    sink.emit(&t)
}

pub fn mmt_scan(
    s: &Settings,
    m: &ModelArgs,
    xi_min: Option<i64>,
    xi_max: Option<i64>,
    amplitudes: Vec<f64>,
    out: &OutArgs,
) -> Result<(), CliError> {
    if let Some(name) = s.get(m.model.clone(), "model")? {
        if name != "mmt" {
            return Err(CliError::Validation(format!(
                "mmt-scan needs the mmt model, got '{name}'"
            )));
        }
    }
    let base = mmt_params(s, m)?;
    let lo = s.or(xi_min, "xi-min", base.xi0 - 10)?;
    let hi = s.or(xi_max, "xi-max", base.xi0 + 10)?;
    let amps = s
        .list(amplitudes, "amplitudes")?
        .unwrap_or_else(|| vec![base.a]);
    s.finish()?;
    if lo > hi {
        return Err(CliError::Validation(format!(
            "empty mode range {lo}..={hi}"
        )));
    }
    let sink = Sink {
        csv_path: out.output.as_deref(),
    };
    let mut t = Table::new([
        "a",
        "xi",
        "partner",
        "discriminant",
        "flagged",
        "max_real_part",
        "confirmed",
    ]);
    for a in amps {
        let p = MmtParams { a, ..base.clone() };
        p.validate()?;
        let entries = mmt_unstable_scan(&p, lo..=hi)?;
        let flagged = entries.iter().filter(|e| e.flagged).count();
        let confirmed = entries.iter().filter(|e| e.confirmed).count();
        sink.report(&format!(
            "a = {a}: {} pairs, {flagged} flagged, {confirmed} with a positive eigenvalue",
            entries.len()
        ));
        for e in entries {
            t.push(vec![
                num(a),
                e.xi.to_string(),
                e.partner.to_string(),
                num(e.discriminant),
                e.flagged.to_string(),
                num(e.max_real_part),
                e.confirmed.to_string(),
            ]);
        }
    }
    plot(out, &t, &[1, 3])?;
    sink.emit(&t)
}

fn need<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("--{key} is required")))
}

fn fluid(s: &Settings, f: &FluidArgs, default_h0: Option<f64>) -> Result<OneFluidConfig, CliError> {
    let h0 = match default_h0 {
        Some(d) => s.or(f.h0, "h0", d)?,
        None => need(s.get(f.h0, "h0")?, "h0")?,
    };
    let cfg = OneFluidConfig {
        g: need(s.get(f.g, "g")?, "g")?,
        sigma: need(s.get(f.sigma, "sigma")?, "sigma")?,
        h0,
        c: need(s.list(f.c.clone(), "c")?, "c")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn waterwave(s: &Settings, cmd: WaveCommand) -> Result<(), CliError> {
    match cmd {
        WaveCommand::Symbol { k, h0, out } => {
            let ks = need(s.list(k, "k")?, "k")?;
            let h0 = s.or(h0, "h0", f64::INFINITY)?;
            s.finish()?;
            if let Some(bad) = ks.iter().find(|k| !(**k >= 0.0)) {
                return Err(CliError::Validation(format!(
                    "wavenumbers must be >= 0, got {bad}"
                )));
            }
            if !(h0 > 0.0) {
                return Err(CliError::Validation(format!(
                    "depth must be positive, got {h0}"
                )));
            }
            let mut t = Table::new(["k", "symbol"]);
            for k in ks {
                t.push(vec![num(k), num(dn_flat_symbol(k, h0))]);
            }
            plot(&out, &t, &[0, 1])?;
            Sink {
                csv_path: out.output.as_deref(),
            }
            .emit(&t)
        }
        WaveCommand::Froude { fluid: fa, out } => {
            let cfg = fluid(s, &fa, None)?;
            s.finish()?;
            let fb = froude_bond(&cfg)?;
            let sink = Sink {
                csv_path: out.output.as_deref(),
            };
            sink.report(&format!(
                "F = {}, B = {}, coercive = {}",
                fb.froude, fb.bond, fb.coercive
            ));
            let mut t = Table::new(["froude", "bond", "coercive"]);
            t.push(vec![num(fb.froude), num(fb.bond), fb.coercive.to_string()]);
            sink.emit(&t)
        }
        WaveCommand::Kh {
            rho_minus,
            rho_plus,
            g,
            sigma,
            b,
            nu_plus,
            nu_minus,
            depth,
            h_plus,
            h_minus,
            out,
        } => {
            let rho_minus = need(s.get(rho_minus, "rho-")?, "rho-")?;
            let rho_plus = need(s.get(rho_plus, "rho+")?, "rho+")?;
            let g = need(s.get(g, "g")?, "g")?;
            let sigma = need(s.get(sigma, "sigma")?, "sigma")?;
            let b = s.get(b, "b")?;
            let nu_p = s.list(nu_plus, "nu+")?;
            let nu_m = s.list(nu_minus, "nu-")?;
            let depth = s.or(depth, "depth", f64::INFINITY)?;
            let h_plus = s.or(h_plus, "h+", depth)?;
            let h_minus = s.or(h_minus, "h-", depth)?;
            s.finish()?;
            let (nu_plus, nu_minus) = match (b, nu_p, nu_m) {
                (Some(b), None, None) => {
                    if !(b >= 0.0) || !(rho_plus + rho_minus > 0.0) {
                        return Err(CliError::Validation(format!("--b must be >= 0, got {b}")));
                    }
                    let v = (b / (rho_plus + rho_minus)).sqrt();
                    (vec![v], vec![v])
                }
                (Some(_), _, _) => {
                    return Err(CliError::Validation(
                        "give either --b or --nu+/--nu-, not both".into(),
                    ))
                }
                (None, p, q) => {
                    let p = p.unwrap_or_default();
                    let q = q.unwrap_or_default();
                    let d = p.len().max(q.len()).max(1);
                    let pad = |mut v: Vec<f64>| {
                        v.resize(d, 0.0);
                        v
                    };
                    (pad(p), pad(q))
                }
            };
            let cfg = TwoFluidConfig {
                rho_plus,
                rho_minus,
                nu_plus,
                nu_minus,
                h_plus,
                h_minus,
                g,
                sigma,
            };
            cfg.validate()?;
            let bound = kh_bound(&cfg)?;
            let sink = Sink {
                csv_path: out.output.as_deref(),
            };
            sink.report(&format!("bound = {bound}"));
            let mut t = Table::new(["bound"]);
            t.push(vec![num(bound)]);
            sink.emit(&t)
        }
        WaveCommand::Scan {
            fluid: fa,
            k_min,
            k_max,
            points,
            period,
            cutoff,
            out,
        } => {
            let cfg = fluid(s, &fa, Some(f64::INFINITY))?;
            let k_min = s.or(k_min, "k-min", 1e-3)?;
            let k_max = s.or(k_max, "k-max", 1e3)?;
            let points = s.or(points, "points", 601)?;
            let period = s.get(period, "period")?;
            let cutoff = s.or(cutoff, "cutoff", 128)?;
            s.finish()?;
            let scan = capillary_log_scan(&cfg, k_min, k_max, points)?;
            let sink = Sink {
                csv_path: out.output.as_deref(),
            };
            let (kmin, mmin) =
                scan.iter().cloned().fold(
                    (f64::NAN, f64::INFINITY),
                    |a, b| if b.1 < a.1 { b } else { a },
                );
            sink.report(&format!("minimum multiplier {mmin} at k = {kmin}"));
            if let Ok(fb) = froude_bond(&cfg) {
                sink.report(&format!(
                    "F = {}, B = {}, coercive = {}",
                    fb.froude, fb.bond, fb.coercive
                ));
            }
            if let Some(p) = period {
                sink.report(&format!(
                    "negative lattice modes (cutoff {cutoff}): {}",
                    morse_index_count(&cfg, p, cutoff)?
                ));
            }
            let mut t = Table::new(["k", "multiplier"]);
            for (k, m) in scan {
                t.push(vec![num(k), num(m)]);
            }
            plot(&out, &t, &[0, 1])?;
            sink.emit(&t)
        }
    }
}

pub struct PicardArgs {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub amplitude: Option<f64>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

pub fn picard(s: &Settings, m: &ModelArgs, a: PicardArgs, out: &OutArgs) -> Result<(), CliError> {
    let r = resolve(s, m)?;
    let t_end = s.or(a.t_end, "t-end", 0.5)?;
    let dt = s.or(a.dt, "dt", 0.01)?;
    let amplitude = s.or(a.amplitude, "amplitude", 0.05)?;
    let seed = s.or(a.seed, "seed", 0)?;
    let max_iter = s.or(a.max_iter, "max-iter", 50)?;
    let tol = s.or(a.tol, "tol", 1e-12)?;
    s.finish()?;
    if !(amplitude >= 0.0) {
        return Err(CliError::Validation(format!(
            "--amplitude must be >= 0, got {amplitude}"
        )));
    }
    let model = r.model.as_ref();
    let n = model.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let u0 = model.equilibrium() + dir.normalize() * amplitude;
    let res = picard_solve(model, &u0, t_end, dt, max_iter, tol)?;
    let reference = integrate_orbit(model, &u0, 0.0, t_end, dt / 10.0)?;
    let err = res
        .orbit
        .times
        .iter()
        .zip(&res.orbit.states)
        .map(|(t, v)| (v - reference.sample(*t)).norm())
        .fold(0.0, f64::max);
    let sink = Sink {
        csv_path: out.output.as_deref(),
    };
    sink.report(&format!(
        "model {}: {} iterations, contraction factor {:.3e}, max |Picard - RK4| = {err:.3e}",
        r.name,
        res.iterations,
        res.contraction_factor()
    ));
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("u_{i}")));
    let mut t = Table::new(header);
    for (time, v) in res.orbit.times.iter().zip(&res.orbit.states) {
        let mut row = vec![num(*time)];
        row.extend(v.iter().map(|x| num(*x)));
        t.push(row);
    }
    plot(out, &t, &(0..=n).collect::<Vec<_>>())?;
    sink.emit(&t)
}
