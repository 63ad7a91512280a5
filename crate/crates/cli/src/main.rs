mod commands;
mod error;
mod output;
mod settings;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;
use settings::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "lpmanifold",
    version,
    about = "Local invariant manifolds of Galerkin-truncated evolution equations"
)]
struct Cli {
    /// Plain-text `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sample-parallel work.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral splitting of the linearization at the equilibrium.
    Split {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Graph of the local unstable (or stable) manifold over a grid of base points.
    Manifold {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        lp: LpArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Mode-pair instability scan of the MMT plane wave.
    MmtScan {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        xi_min: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        xi_max: Option<i64>,
        /// Comma-separated amplitudes; overrides --a.
        #[arg(long, value_delimiter = ',')]
        amplitudes: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Linear water-wave and interface criteria.
    Waterwave {
        #[command(subcommand)]
        command: WaveCommand,
    },
    /// Picard iteration of the frozen-coefficient linearization against RK4.
    Picard {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Size of the seeded perturbation of the equilibrium.
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Runs the invariant suite; exits nonzero on the first failure.
    Verify {
        /// all, models, spectral, mmt, manifold, oracles or waterwave.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum WaveCommand {
    /// Flat Dirichlet-Neumann symbol `k tanh(h0 k)`.
    Symbol {
        #[arg(long, value_delimiter = ',')]
        k: Vec<f64>,
        #[arg(long)]
        h0: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Froude and Bond numbers with the coercivity flag.
    Froude {
        #[command(flatten)]
        fluid: FluidArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Lower bound of the Kelvin-Helmholtz / Rayleigh-Taylor multiplier.
    Kh {
        #[arg(long = "rho-")]
        rho_minus: Option<f64>,
        #[arg(long = "rho+")]
        rho_plus: Option<f64>,
        #[arg(long)]
        g: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// `rho+ |nu+|^2 + rho- |nu-|^2`, realized by equal velocities in both layers.
        #[arg(long)]
        b: Option<f64>,
        #[arg(long = "nu+", value_delimiter = ',', allow_hyphen_values = true)]
        nu_plus: Vec<f64>,
        #[arg(long = "nu-", value_delimiter = ',', allow_hyphen_values = true)]
        nu_minus: Vec<f64>,
        /// Depth of both layers (`inf` for infinite depth).
        #[arg(long)]
        depth: Option<f64>,
        #[arg(long = "h+")]
        h_plus: Option<f64>,
        #[arg(long = "h-")]
        h_minus: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Capillary multiplier along the worst direction on a log grid.
    Scan {
        #[command(flatten)]
        fluid: FluidArgs,
        #[arg(long)]
        k_min: Option<f64>,
        #[arg(long)]
        k_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Also count negative lattice modes on this torus period.
        #[arg(long)]
        period: Option<f64>,
        #[arg(long)]
        cutoff: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// saddle1, saddle2, rd or mmt.
    #[arg(long)]
    model: Option<String>,
    /// Reaction-diffusion parameter.
    #[arg(long)]
    lambda_param: Option<f64>,
    /// Reaction-diffusion cosine modes.
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Focusing (-1) or defocusing (+1).
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    /// Plane-wave amplitude.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi0: Option<i64>,
    /// MMT modes kept on each side of the carrier.
    #[arg(long)]
    half_width: Option<usize>,
    /// Splitting gap; chosen from the spectrum when omitted.
    #[arg(long)]
    gap: Option<f64>,
    /// unstable or stable.
    #[arg(long)]
    side: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct LpArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Weight rate; the middle of the admissible window when omitted.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Norm level of the stopping rule.
    #[arg(long)]
    r: Option<f64>,
    /// Points per axis of the tensor grid.
    #[arg(long)]
    grid: Option<usize>,
    /// Use this many Halton points instead of a tensor grid.
    #[arg(long)]
    halton: Option<usize>,
    /// Flow time of the invariance check; 0 skips it.
    #[arg(long)]
    invariance_dt: Option<f64>,
    /// Estimate the quadrature error by step doubling.
    #[arg(long)]
    richardson: bool,
    /// Solve the quasilinearized system instead of the semilinear one.
    #[arg(long)]
    quasilinear: bool,
    /// Build the graph even if the contraction probe fails.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
struct FluidArgs {
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    h0: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Background velocity components.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    c: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Whitespace-delimited plot data.
    #[arg(long)]
    plot: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = Settings::load(cli.config.as_deref())?;
    let jobs = settings.get(cli.jobs, "jobs")?;
    let work = || -> Result<(), CliError> {
        match cli.command {
            Command::Split { model, out } => commands::split(&settings, &model, &out),
            Command::Manifold { model, lp, out } => {
                commands::manifold(&settings, &model, &lp, &out)
            }
            Command::MmtScan {
                model,
                xi_min,
                xi_max,
                amplitudes,
                out,
            } => commands::mmt_scan(&settings, &model, xi_min, xi_max, amplitudes, &out),
            Command::Waterwave { command } => commands::waterwave(&settings, command),
            Command::Picard {
                model,
                t_end,
                dt,
                amplitude,
                seed,
                max_iter,
                tol,
                out,
            } => commands::picard(
                &settings,
                &model,
                commands::PicardArgs {
                    t_end,
                    dt,
                    amplitude,
                    seed,
                    max_iter,
                    tol,
                },
                &out,
            ),
            Command::Verify { suite, seed } => {
                let suite = settings.or(suite, "suite", "all".to_string())?;
                let seed = settings.or(seed, "seed", 0)?;
                settings.finish()?;
                verify::run(&suite, seed)
            }
        }
    };
    match jobs {
        Some(0) => Err(CliError::Validation("--jobs must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("cannot start {n} workers: {e}")))?
            .install(work),
        None => work(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
