//! Command-line driver for the verification and experiment suites.
//!
//! Every subcommand resolves its parameters in three layers (built-in
//! defaults, then an optional key=value config file, then flags), prints
//! one PASS/FAIL line per named check plus a manifest line, and writes
//! `<out>/<command>.{csv,json}` when an output directory is given. Runs
//! are deterministic: the same resolved configuration produces
//! byte-identical files.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or the
//! experiment itself errors, 2 for configuration errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

/// Failure modes split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad parameters or config file: exit 2.
    Config(String),
    /// The experiment itself failed: exit 1.
    Run(String),
}

impl From<roughalg::Error> for CliError {
    fn from(e: roughalg::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "roughalg",
    version,
    about = "Verification suites and numerical experiments for tree-indexed rough integration"
)]
struct Cli {
    /// Key=value config file, overridden by flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for the CSV and JSON reports
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for every randomized ingredient
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Holder exponent of the lift
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Comma-separated grid sizes
    #[arg(long = "grid", alias = "grids", global = true, value_delimiter = ',')]
    grid: Option<Vec<usize>>,

    /// Driving path: identity, parabola, sine[:a], trig[:a,b], walk[:dim]
    #[arg(long = "path", alias = "driver", global = true)]
    path: Option<String>,

    /// Largest tree weight
    #[arg(long = "max-weight", global = true)]
    max_weight: Option<u32>,

    /// Spectral cutoff for KdV runs
    #[arg(long = "K", global = true)]
    k_max: Option<i64>,

    /// Final time
    #[arg(long = "T", global = true)]
    t_final: Option<f64>,

    /// Step size
    #[arg(long, global = true)]
    h: Option<f64>,

    /// Sobolev index (KdV) or branching exponent (tree report)
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Error budget where a command checks one
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Smoothing exponent of the majorant, in [0, 1)
    #[arg(long, global = true)]
    eps: Option<f64>,

    /// Majorant nonlinearity constant
    #[arg(long = "b", global = true)]
    b_const: Option<f64>,

    /// Majorant initial-data norm
    #[arg(long = "u0", global = true)]
    u0_norm: Option<f64>,

    /// Majorant frequency magnitude
    #[arg(long = "k-abs", global = true)]
    k_abs: Option<f64>,

    /// Number of majorant terms
    #[arg(long = "n-max", global = true)]
    n_max: Option<usize>,

    /// Largest weight in the tree classification report (<= 16)
    #[arg(long = "max-n", global = true)]
    max_n: Option<u32>,

    /// Half-width of the short-class band
    #[arg(long, global = true)]
    band: Option<f64>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Tree enumeration invariants: counts, planar recursion, factorial bounds
    VerifyTrees,
    /// Hopf-algebra laws, the binomial identity, and pinned coproducts
    VerifyHopf,
    /// Coboundary and reconstruction identities on sampled paths
    VerifyIncrements,
    /// Discrete sewing: coboundary inverse, exact-part split, linearity
    VerifySewing,
    /// Convergence of the second-order rough integral of x^2 dx
    RoughConverge,
    /// Convergence of the rough solver on dy = y dx
    RoughSolve,
    /// Order of the truncated series solver on y' = y^2
    Bseries,
    /// Integrate KdV with the tree scheme and track the quadratic energy
    KdvRun,
    /// Conservation laws, coboundary relations, and growth of the KdV levels
    KdvVerify,
    /// Term table of the smoothing majorant with a ratio test
    NsMajorant,
    /// Classify trees by branching and fit factorial envelopes
    TreeReport,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::VerifyTrees => "verify-trees",
            Cmd::VerifyHopf => "verify-hopf",
            Cmd::VerifyIncrements => "verify-increments",
            Cmd::VerifySewing => "verify-sewing",
            Cmd::RoughConverge => "rough-converge",
            Cmd::RoughSolve => "rough-solve",
            Cmd::Bseries => "bseries",
            Cmd::KdvRun => "kdv-run",
            Cmd::KdvVerify => "kdv-verify",
            Cmd::NsMajorant => "ns-majorant",
            Cmd::TreeReport => "tree-report",
        }
    }
}

/// Layer defaults, config file, and flags; flags win.
fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::defaults_for(cli.command.name());
    if let Some(path) = &cli.config {
        let body = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("read {}: {e}", path.display())))?;
        cfg.apply_file(&body).map_err(CliError::Config)?;
    }
    if let Some(v) = &cli.grid {
        if v.is_empty() {
            return Err(CliError::Config("empty grid list".into()));
        }
        cfg.grids = v.clone();
    }
    if let Some(v) = &cli.path {
        cfg.driver = v.clone();
    }
    if let Some(v) = &cli.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = cli.max_weight {
        cfg.max_weight = v;
    }
    if let Some(v) = cli.k_max {
        cfg.k_max = v;
    }
    if let Some(v) = cli.t_final {
        cfg.t_final = v;
    }
    if let Some(v) = cli.h {
        cfg.h = v;
    }
    if let Some(v) = cli.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = cli.tol {
        cfg.tol = Some(v);
    }
    if let Some(v) = cli.eps {
        cfg.eps = v;
    }
    if let Some(v) = cli.b_const {
        cfg.b_const = v;
    }
    if let Some(v) = cli.u0_norm {
        cfg.u0_norm = v;
    }
    if let Some(v) = cli.k_abs {
        cfg.k_abs = v;
    }
    if let Some(v) = cli.n_max {
        cfg.n_max = v;
    }
    if let Some(v) = cli.max_n {
        cfg.max_n = v;
    }
    if let Some(v) = cli.band {
        cfg.band = v;
    }
    Ok(cfg)
}

fn run() -> Result<bool, CliError> {
    let cli = Cli::parse();
    let cfg = resolve(&cli)?;
    let out = match cli.command {
        Cmd::VerifyTrees => commands::verify_trees(&cfg),
        Cmd::VerifyHopf => commands::verify_hopf(&cfg),
        Cmd::VerifyIncrements => commands::verify_increments(&cfg),
        Cmd::VerifySewing => commands::verify_sewing(&cfg),
        Cmd::RoughConverge => commands::rough_converge(&cfg),
        Cmd::RoughSolve => commands::rough_solve(&cfg),
        Cmd::Bseries => commands::bseries(&cfg),
        Cmd::KdvRun => commands::kdv_run(&cfg),
        Cmd::KdvVerify => commands::kdv_verify(&cfg),
        Cmd::NsMajorant => commands::ns_majorant_cmd(&cfg),
        Cmd::TreeReport => commands::tree_report(&cfg),
    }?;
    output::emit(&cfg, &out).map_err(CliError::Run)?;
    Ok(out.all_passed())
}

fn main() {
    let code = match run() {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    };
    std::process::exit(code);
}
