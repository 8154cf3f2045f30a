use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use riskscope::certify::{self, CertifyConfig};
use riskscope::curves::{Curve, CurveConfig, CurveEvaluator};
use riskscope::diagnostics::{
    compatibility_constant_with, lasso_constants_for, re_constant_with, rip_delta_with,
    vg_packing_with, ConeOptions, RipOptions, VgOptions,
};
use riskscope::experiments::run_all;
use riskscope::mc::{self, GridSpec, McConfig};
use riskscope::model::io::{load_instance, read_matrix, read_vector, to_json};
use riskscope::model::{DesignMatrix, ProblemInstance};
use riskscope::solver::{solve, Method, SolverConfig};
use riskscope::{Error, Result};

#[derive(Parser)]
#[command(name = "riskscope", version, about = "Prediction-error curves, bounds and checks for penalized least squares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// auto, fista, cd, pg or closed_form
    #[arg(long, default_value = "auto")]
    method: Method,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            method: self.method,
            record_trace: false,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CertKind {
    FixedPoint,
    T0gamma,
    AlmostFp,
    NormDual,
    Limit,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Rip,
    Compat,
    Re,
    Vg,
    Constants,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize ‖Xβ − y‖² + 2h(β); prints the result as JSON.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// Response vector; defaults to Xβ* + ε from the instance.
        #[arg(long)]
        y: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Evaluate F, G, H or M on a grid; prints CSV t,value,active,dual_mu.
    Curve {
        #[arg(long, value_parser = parse_curve)]
        which: Curve,
        /// start:stop:points or geom:start:stop:points
        #[arg(long)]
        grid: GridSpec,
        #[arg(long)]
        instance: PathBuf,
        /// Noise vector; defaults to the instance noise.
        #[arg(long)]
        eps: Option<PathBuf>,
        /// Risk used by G; solved for when absent.
        #[arg(long)]
        risk: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Emit an upper or lower bound on the prediction error as JSON.
    Certify {
        #[arg(long, value_enum)]
        kind: CertKind,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        eps: Option<PathBuf>,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sparse-design constants as JSON.
    Diagnose {
        #[arg(long, value_enum)]
        what: What,
        /// Design matrix CSV (rip, compat, re).
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        s: Option<usize>,
        /// Comma-separated 0-based indices (compat).
        #[arg(long, value_delimiter = ',')]
        support: Vec<usize>,
        #[arg(long)]
        c0: Option<f64>,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// Keep packing after the cardinality bound is met (vg).
        #[arg(long)]
        exhaust: bool,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Monte Carlo estimate of f = E F and the risk distribution; prints
    /// JSON and optionally writes the curve as CSV.
    Mc {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        grid: GridSpec,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
        /// Tail points x of the concentration check.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        x: Vec<f64>,
        /// Writes fcurve.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run an experiment suite; exits with 1 when any verdict is FAIL.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
}

fn parse_curve(s: &str) -> std::result::Result<Curve, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Argument(format!("--{flag} is required here")))
}

fn noise_for(inst: &ProblemInstance, eps: Option<&Path>) -> Result<Vec<f64>> {
    match eps {
        Some(path) => read_vector(path),
        None => inst.noise_vector(),
    }
}

fn design_from(path: Option<PathBuf>) -> Result<DesignMatrix> {
    DesignMatrix::new(read_matrix(&need(path, "design")?)?)
}

fn print(s: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    let res = out.write_all(s.as_bytes()).and_then(|_| {
        if s.ends_with('\n') {
            Ok(())
        } else {
            out.write_all(b"\n")
        }
    });
    match res {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { instance, y, solver } => {
            let inst = load_instance(&instance)?;
            let y = match y {
                Some(p) => read_vector(&p)?,
                None => inst.response()?,
            };
            print(&to_json(&solve(&inst, &y, &solver.config())?))?;
        }
        Command::Curve {
            which,
            grid,
            instance,
            eps,
            risk,
            solver,
        } => {
            let inst = load_instance(&instance)?;
            let eps = noise_for(&inst, eps.as_deref())?;
            let cfg = CurveConfig {
                solver: solver.config(),
                ..CurveConfig::default()
            };
            let risk = match (which, risk) {
                (Curve::G, None) => Some(solve(&inst, &inst.response_for(&eps)?, &cfg.solver)?.risk),
                (_, r) => r,
            };
            let mut points = grid.points()?;
            if which == Curve::H {
                points.retain(|&t| t > 0.0);
            }
            let ev = CurveEvaluator::new(&inst, &eps, &cfg)?;
            let mut body = String::from("t,value,active,dual_mu\n");
            for e in ev.sweep(which, &points, risk)? {
                body.push_str(&format!("{},{},{},{}\n", e.t, e.value, e.active, e.dual_mu));
            }
            print(&body)?;
        }
        Command::Certify {
            kind,
            instance,
            eps,
            t0,
            gamma,
            r,
            alpha,
            t_max,
            solver,
        } => {
            let inst = load_instance(&instance)?;
            let eps = noise_for(&inst, eps.as_deref())?;
            let cfg = CertifyConfig {
                curve: CurveConfig {
                    solver: solver.config(),
                    ..CurveConfig::default()
                },
                ..CertifyConfig::default()
            };
            let sol = || solve(&inst, &inst.response_for(&eps)?, &cfg.curve.solver);
            let cert = match kind {
                CertKind::FixedPoint => certify::fixed_point_upper(&inst, &eps, &cfg)?,
                CertKind::T0gamma => certify::t0_gamma_lower(
                    &inst,
                    &eps,
                    &sol()?,
                    need(t0, "t0")?,
                    need(gamma, "gamma")?,
                    &cfg,
                )?,
                CertKind::AlmostFp => {
                    certify::almost_fixed_point_lower(&inst, &eps, need(r, "r")?, need(alpha, "alpha")?, &cfg)?
                }
                CertKind::NormDual => certify::norm_dual_lower(&inst, &eps, &cfg)?,
                CertKind::Limit => certify::limit_lower(&inst, &eps, need(t_max, "t-max")?, Some(&sol()?), &cfg)?,
            };
            print(&to_json(&cert))?;
        }
        Command::Diagnose {
            what,
            design,
            s,
            support,
            c0,
            restarts,
            budget,
            seed,
            p,
            d,
            exhaust,
            gamma,
            sigma,
            lambda,
            kappa,
            delta,
        } => {
            let cone = ConeOptions {
                restarts,
                seed,
                ..ConeOptions::default()
            };
            let json = match what {
                What::Rip => {
                    let opts = RipOptions {
                        budget,
                        seed,
                        ..RipOptions::default()
                    };
                    to_json(&rip_delta_with(&design_from(design)?, need(s, "s")?, &opts)?)
                }
                What::Compat => {
                    let x = design_from(design)?;
                    to_json(&compatibility_constant_with(&x, &support, c0.unwrap_or(1.0), &cone)?)
                }
                What::Re => {
                    let x = design_from(design)?;
                    let cone = ConeOptions { max_iter: 2000, ..cone };
                    to_json(&re_constant_with(&x, need(s, "s")?, need(c0, "c0")?, &cone)?)
                }
                What::Vg => {
                    let opts = VgOptions {
                        seed,
                        exhaust,
                        ..VgOptions::default()
                    };
                    to_json(&vg_packing_with(need(p, "p")?, need(d, "d")?, &opts)?)
                }
                What::Constants => {
                    let p = match (p, design) {
                        (Some(p), _) => p,
                        (None, path) => design_from(path)?.p(),
                    };
                    to_json(&lasso_constants_for(
                        p,
                        need(s, "s")?,
                        need(gamma, "gamma")?,
                        need(sigma, "sigma")?,
                        need(lambda, "lambda")?,
                        need(kappa, "kappa")?,
                        need(delta, "delta")?,
                    )?)
                }
            };
            print(&json)?;
        }
        Command::Mc {
            instance,
            reps,
            seed,
            grid,
            confidence,
            x,
            out,
            solver,
        } => {
            let inst = load_instance(&instance)?;
            let sigma = inst
                .noise
                .sigma()
                .ok_or_else(|| Error::Config("Monte Carlo needs Gaussian noise in the instance".into()))?;
            let mut cfg = McConfig::new(reps, seed, grid);
            cfg.confidence = confidence;
            let curve = CurveConfig {
                solver: solver.config(),
                ..CurveConfig::default()
            };
            let fcurve = mc::estimate_f_curve(&inst, &cfg, &curve)?;
            let risks = mc::sample_risks(&inst, &cfg, &curve.solver)?;
            let concentration = mc::concentration_check(&risks, sigma, &x, confidence)?;
            let proximity = mc::tf_proximity_check(&fcurve, &risks, sigma, confidence)?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                let mut csv = String::from("t,f_hat,stderr\n");
                for k in 0..fcurve.grid.len() {
                    csv.push_str(&format!("{},{},{}\n", fcurve.grid[k], fcurve.f_hat[k], fcurve.stderr[k]));
                }
                fs::write(dir.join("fcurve.csv"), csv)?;
            }
            let report = serde_json::json!({
                "f_curve": fcurve,
                "risks": risks,
                "concentration": concentration,
                "proximity": proximity,
            });
            print(&to_json(&report))?;
        }
        Command::Experiment { config, out } => {
            let outcome = run_all(&config, &out)?;
            for r in &outcome.reports {
                for row in r.summary_rows() {
                    eprintln!("{:<40} {}", row.name, row.verdict);
                }
            }
            return Ok(ExitCode::from(outcome.exit_code() as u8));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
