//! `fdswipt` — minimum-power design for a full-duplex MISO SWIPT system.
//!
//! Subcommands: `solve` one realization and print the joint design as JSON,
//! `sweep` a Monte Carlo campaign to CSV, `certify` a saved solution against
//! the dual-certificate checks, and `selftest` the analytic oracles.
//!
//! Exit codes: 0 on success, 2 when a sweep finishes but some point had no
//! feasible trial, 1 on any error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fdswipt_core::harness::{
    self, certify_saved, run_sweep, solve_joint, ExperimentConfig, JointSolution, Method,
};
use fdswipt_core::jbps;
use fdswipt_core::model::{compute_bounds, sample_channels, SystemParams};
use fdswipt_core::sdp::{self, SolveStatus};
use fdswipt_core::uplink;
use fdswipt_core::zf;

#[derive(Parser)]
#[command(name = "fdswipt", version, about = "Full-duplex MISO SWIPT power minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum MethodArg {
    Jbps,
    Zf,
    Both,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Jbps => vec![Method::Jbps],
            MethodArg::Zf => vec![Method::Zf],
            MethodArg::Both => vec![Method::Jbps, Method::Zf],
        }
    }
}

#[derive(Args)]
struct CommonOverrides {
    /// Experiment configuration file (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the config's methods.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Output path (CSV for sweep, JSON for solve).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel realization and print the joint design as JSON.
    Solve {
        #[command(flatten)]
        common: CommonOverrides,
        /// Trial index of the realization.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Run the configured Monte Carlo sweep and write plot-ready CSV.
    Sweep {
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Re-run the optimality certificate checks on a saved solution.
    Certify {
        /// Solution file written by `solve --out`.
        solution: PathBuf,
    },
    /// Run the built-in analytic and oracle checks.
    Selftest,
}

fn load_config(common: &CommonOverrides) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_json_file(
            path.to_str().context("config path is not valid UTF-8")?,
        )?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(trials) = common.trials {
        config.trials = trials;
    }
    if let Some(method) = common.method {
        config.methods = method.methods();
    }
    if let Some(out) = &common.out {
        config.output_path = out.to_string_lossy().into_owned();
    }
    config.validate()?;
    Ok(config)
}

fn cmd_solve(common: CommonOverrides, trial: u64) -> Result<ExitCode> {
    let config = load_config(&common)?;
    let params = config.params()?;
    let mut solutions: Vec<JointSolution> = Vec::new();
    for &method in &config.methods {
        let sol = solve_joint(&params, trial, config.seed, method)
            .with_context(|| format!("solving trial {trial} with {method}"))?;
        solutions.push(sol);
    }
    let rendered = if solutions.len() == 1 {
        serde_json::to_string_pretty(&solutions[0])?
    } else {
        serde_json::to_string_pretty(&solutions)?
    };
    println!("{rendered}");
    if let Some(out) = &common.out {
        std::fs::write(out, rendered).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(common: CommonOverrides) -> Result<ExitCode> {
    let config = load_config(&common)?;
    let result = run_sweep(&config)?;
    harness::write_csv(&result, &config.output_path)?;
    eprintln!("wrote {} rows to {}", result.rows.len(), config.output_path);
    if result.has_infeasible_only_point() {
        eprintln!("warning: at least one sweep point had no feasible trial");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(path: PathBuf) -> Result<ExitCode> {
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let saved: JointSolution = serde_json::from_str(&text)?;
    let certs = certify_saved(&saved)?;
    println!("{}", serde_json::to_string_pretty(&certs)?);
    let ok = certs.iter().all(|c| {
        c.rank_ratio <= 1e-5
            && c.cert_min_eig >= -1e-7 * (1.0 + c.cert_norm)
            && c.cert_compl_norm <= 1e-6 * c.trace_z
            && c.lambda > 1e-10
            && c.mu > 1e-10
    });
    if !ok {
        bail!("certificate checks failed");
    }
    eprintln!("certificates ok for {} users", certs.len());
    Ok(ExitCode::SUCCESS)
}

// ─── Selftest ───────────────────────────────────────────────────────────────

fn conic_analytic_suite() -> Result<()> {
    use fdswipt_core::linalg::ComplexMatrix;
    use sdp::{BlockCoeff, BlockKind, ConicProblem, Constraint, LinearExpr, Relation};

    // Hyperbolic boundary: min t with t * rho >= 1, rho pinned at 0.5.
    let sym = |e00: f64, e01: f64, e11: f64| BlockCoeff::Sym2x2 { e00, e01, e11 };
    let problem = ConicProblem {
        blocks: vec![BlockKind::Real2x2Psd],
        objective: LinearExpr::new().with(0, sym(1.0, 0.0, 0.0)),
        constraints: vec![
            Constraint {
                expr: LinearExpr::new().with(0, sym(0.0, 0.5, 0.0)),
                relation: Relation::Eq,
                rhs: 1.0,
                label: "offdiag".into(),
            },
            Constraint {
                expr: LinearExpr::new().with(0, sym(0.0, 0.0, 1.0)),
                relation: Relation::Eq,
                rhs: 0.5,
                label: "rho".into(),
            },
        ],
    };
    let sol = sdp::solve(&problem, 1e-9, 200)?;
    if sol.status != SolveStatus::Optimal || (sol.objective - 2.0).abs() > 1e-6 {
        bail!(
            "hyperbolic boundary: status {:?} objective {}",
            sol.status,
            sol.objective
        );
    }

    // Shifted-cone identity: tr(Y) with Y >= 0 bottoms out at zero.
    let ident = ConicProblem {
        blocks: vec![BlockKind::HermitianPsd(2)],
        objective: LinearExpr::new().with(0, BlockCoeff::Hermitian(ComplexMatrix::identity(2))),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(0, BlockCoeff::Hermitian(ComplexMatrix::identity(2))),
            relation: Relation::Ge,
            rhs: 0.0,
            label: "trace".into(),
        }],
    };
    let sol = sdp::solve(&ident, 1e-9, 200)?;
    if sol.status != SolveStatus::Optimal || sol.objective.abs() > 1e-7 {
        bail!("shifted cone: objective {}", sol.objective);
    }

    // Contradictory box {x >= 1, x <= 0}.
    let contradictory = ConicProblem {
        blocks: vec![BlockKind::FreeScalar],
        objective: LinearExpr::new().with(0, BlockCoeff::Scalar(1.0)),
        constraints: vec![
            Constraint {
                expr: LinearExpr::new().with(0, BlockCoeff::Scalar(1.0)),
                relation: Relation::Ge,
                rhs: 1.0,
                label: "lower".into(),
            },
            Constraint {
                expr: LinearExpr::new().with(0, BlockCoeff::Scalar(-1.0)),
                relation: Relation::Ge,
                rhs: 0.0,
                label: "upper".into(),
            },
        ],
    };
    let sol = sdp::solve(&contradictory, 1e-9, 200)?;
    if sol.status != SolveStatus::Infeasible {
        bail!("contradictory box: status {:?}", sol.status);
    }
    Ok(())
}

fn zero_forcing_tightness() -> Result<()> {
    let params = SystemParams::default_scenario();
    for trial in 0..20 {
        let ch = sample_channels(&params, trial, 1);
        let bounds = compute_bounds(&params, &ch);
        let sol = zf::zf_solve(&params, &ch, &bounds)?;
        for k in 0..params.k {
            let sinr = zf::downlink_sinr(&params, &ch, &bounds, &sol.v, &sol.rho, k);
            let q = zf::harvested_power(&params, &ch, &bounds, &sol.v, &sol.rho, k);
            if (sinr - params.gamma_dl).abs() > 1e-9 * params.gamma_dl {
                bail!("trial {trial} user {k}: SINR {sinr} off target");
            }
            if (q - params.q_bar).abs() > 1e-9 * params.q_bar {
                bail!("trial {trial} user {k}: harvest {q} off target");
            }
        }
    }
    Ok(())
}

fn uplink_closed_form() -> Result<()> {
    let mut params = SystemParams::default_scenario();
    params.k = 1;
    params.n_t = 1;
    for trial in 0..10 {
        let ch = sample_channels(&params, trial, 2);
        let bounds = compute_bounds(&params, &ch);
        let sol = uplink::uplink_solve(&params, &ch, &bounds)?;
        let h2: f64 = ch.h_ul[0].iter().map(|z| z.norm_sqr()).sum();
        let expect = params.gamma_ul * (bounds.e_bar + params.sigma2_bs) / h2;
        if (sol.p_up[0] - expect).abs() > 1e-8 * expect {
            bail!(
                "trial {trial}: uplink power {} vs closed form {expect}",
                sol.p_up[0]
            );
        }
    }
    Ok(())
}

fn single_user_equivalence() -> Result<()> {
    let mut params = SystemParams::default_scenario();
    params.k = 1;
    params.n_t = 2;
    for trial in 0..5 {
        let ch = sample_channels(&params, trial, 3);
        let bounds = compute_bounds(&params, &ch);
        let sdr = jbps::solve_downlink(&params, &ch, &bounds)?;
        let closed = zf::zf_solve(&params, &ch, &bounds)?;
        if (sdr.objective - closed.objective).abs() > 1e-5 * (1.0 + closed.objective) {
            bail!(
                "trial {trial}: relaxation {} vs closed form {}",
                sdr.objective,
                closed.objective
            );
        }
    }
    Ok(())
}

fn determinism() -> Result<()> {
    let params = SystemParams::default_scenario();
    let (a, _) = harness::run_point(&params, 0, 42, Method::Jbps)?;
    let (b, _) = harness::run_point(&params, 0, 42, Method::Jbps)?;
    if a.to_bits() != b.to_bits() {
        bail!("repeated trial produced {a} then {b}");
    }
    Ok(())
}

fn cmd_selftest() -> Result<ExitCode> {
    let checks: [(&str, fn() -> Result<()>); 5] = [
        ("conic analytic suite", conic_analytic_suite),
        ("zero-forcing tightness", zero_forcing_tightness),
        ("uplink closed form", uplink_closed_form),
        ("single-user equivalence", single_user_equivalence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in checks {
        match run() {
            Ok(()) => println!("ok   {name}"),
            Err(e) => {
                println!("FAIL {name}: {e}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        bail!("{failed} selftest check(s) failed");
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { common, trial } => cmd_solve(common, trial),
        Command::Sweep { common } => cmd_sweep(common),
        Command::Certify { solution } => cmd_certify(solution),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
