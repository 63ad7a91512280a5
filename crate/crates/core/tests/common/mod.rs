#![allow(dead_code)]

use std::sync::Arc;

use lpmanifold::lyapunov_perron::{prepare_field, BaseGrid, LpConfig, LpSolver, Side, SplitField};
use lpmanifold::models::{mmt_galerkin, reaction_diffusion, saddle_toy, MmtParams, SharedModel};

/// Focusing cubic case with one unstable mode pair on five modes around the carrier.
pub fn mmt_params() -> MmtParams {
    MmtParams::new(1.0, 0.0, -1.0, 1.0, 1, 2)
}

pub struct Case {
    pub name: &'static str,
    pub model: SharedModel,
    pub field: Arc<SplitField>,
    pub cfg: LpConfig,
    pub grid: BaseGrid,
    /// Closed-form graph over a one-dimensional base, when known.
    pub exact: Option<fn(f64) -> f64>,
}

impl Case {
    pub fn solver(&self) -> LpSolver {
        LpSolver::new(self.field.clone(), self.cfg.clone()).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }
}

fn case(
    name: &'static str,
    model: SharedModel,
    side: Side,
    eps: f64,
    per_axis: usize,
    exact: Option<fn(f64) -> f64>,
) -> Case {
    let field = prepare_field(model.clone(), side, None).unwrap();
    let cfg = LpConfig {
        dt: 0.01,
        eps,
        ..Default::default()
    };
    Case {
        name,
        model,
        field,
        cfg,
        grid: BaseGrid::Tensor { per_axis },
        exact,
    }
}

pub fn saddle1() -> Case {
    case(
        "saddle1",
        Arc::new(saddle_toy("saddle1").unwrap()),
        Side::Unstable,
        0.1,
        21,
        Some(|x| x * x / 3.0),
    )
}

pub fn saddle2_stable() -> Case {
    case(
        "saddle2/stable",
        Arc::new(saddle_toy("saddle2").unwrap()),
        Side::Stable,
        0.2,
        21,
        Some(|y| -y * y / 4.0),
    )
}

pub fn rd(lambda: f64) -> Case {
    let name = if lambda < 1.0 { "rd(0.5)" } else { "rd(2)" };
    let per_axis = if lambda < 1.0 { 11 } else { 7 };
    case(
        name,
        Arc::new(reaction_diffusion(lambda, 4).unwrap()),
        Side::Unstable,
        0.05,
        per_axis,
        None,
    )
}

pub fn mmt() -> Case {
    case(
        "mmt",
        Arc::new(mmt_galerkin(&mmt_params()).unwrap()),
        Side::Unstable,
        0.02,
        5,
        None,
    )
}

pub fn all_cases() -> Vec<Case> {
    vec![saddle1(), saddle2_stable(), rd(0.5), rd(2.0), mmt()]
}
