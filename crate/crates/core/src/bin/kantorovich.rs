use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use kantorovich::harness::{
    builtin, certificate_to_text, corpus_specs, load_problem, run_sweep, write_slacks, LoadedProblem, SweepGrid,
    SweepOptions,
};
use kantorovich::majorant::{derive_certificate, validate_majorant, DEFAULT_GRID};
use kantorovich::solver::{inexact_newton_solve, SolveConfig, StepMode, ThetaSchedule};
use kantorovich::trace::IterationTrace;
use kantorovich::verifier::{check_trace, reference_solution, run_probes, DEFAULT_SEED};

/// Inexact Newton solver with majorant-based convergence certificates.
///
/// PROBLEM is a JSON problem file, or `builtin:<name>` for a corpus entry
/// (sqrt2, circle_line, exp_analytic, log_barrier, poly3).
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the certificate; exit 0 iff h1-h3 validate and rho < beta/2.
    Certify {
        problem: String,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        /// Also write the certificate to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the inexact Newton iteration; exit 0 iff it converged.
    Solve(SolveArgs),
    /// Check a trace and run all probes; exit 0 iff everything passes.
    Verify {
        problem: String,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Sample the operator-versus-majorant inequalities.
    Probe {
        problem: String,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Write every slack to this CSV file.
        #[arg(long)]
        slacks: Option<PathBuf>,
    },
    /// Solve over a theta x rho grid and write per-cell traces plus sweep.csv.
    Sweep {
        problem: String,
        /// `<thetas>x<rhos>`.
        #[arg(long, default_value = "9x5")]
        grid: SweepGrid,
        #[arg(long)]
        out: PathBuf,
        /// Use GMRES steps instead of worst-case perturbed steps.
        #[arg(long)]
        inner: bool,
    },
    /// Write the built-in problems as JSON files.
    Corpus {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    problem: String,
    /// Relative residual tolerance, or `max` for the certified maximum.
    #[arg(long, default_value = "0")]
    theta: String,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Comma-separated start point; defaults to x0.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    start: Option<Vec<f64>>,
    /// theta_k = min(theta_max, factor * r_k).
    #[arg(long)]
    adaptive: bool,
    #[arg(long, default_value_t = 1.0)]
    factor: f64,
    /// Perturb exact steps so each uses the whole tolerance.
    #[arg(long)]
    worst_case: bool,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-13)]
    stop_residual: f64,
    /// Skip the tolerance, envelope and containment checks.
    #[arg(long)]
    no_enforce: bool,
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn load(arg: &str) -> anyhow::Result<LoadedProblem> {
    match arg.strip_prefix("builtin:") {
        Some(name) => Ok(builtin(name)?),
        None => load_problem(arg).with_context(|| format!("loading {arg}")),
    }
}

fn certify(problem: &str, rho: f64, out: Option<PathBuf>) -> anyhow::Result<bool> {
    let loaded = load(problem)?;
    let report = validate_majorant(&loaded.majorant, DEFAULT_GRID);
    print!("{report}");
    let cert = match derive_certificate(&loaded.majorant, rho) {
        Ok(c) => c,
        Err(e) => {
            println!("certificate: {e}");
            return Ok(false);
        }
    };
    let text = certificate_to_text(&loaded.spec.name, &cert);
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, &text)?;
    }
    Ok(report.passed())
}

fn solve(args: SolveArgs) -> anyhow::Result<bool> {
    let loaded = load(&args.problem)?;
    let cert = derive_certificate(&loaded.majorant, args.rho)?;
    let theta = if args.theta == "max" {
        cert.theta_max
    } else {
        args.theta.parse().context("--theta must be a number or `max`")?
    };
    let cfg = SolveConfig {
        theta,
        rho: args.rho,
        start_point: args.start.map(DVector::from_vec),
        max_iterations: args.max_iter,
        stop_residual: args.stop_residual,
        schedule: if args.adaptive {
            ThetaSchedule::Adaptive { factor: args.factor }
        } else {
            ThetaSchedule::Fixed
        },
        step_mode: if args.worst_case {
            StepMode::worst_case()
        } else {
            StepMode::IterativeInner
        },
        enforce: !args.no_enforce,
    };
    let trace = inexact_newton_solve(&loaded.problem, &loaded.majorant, &cfg)?;
    println!("{:>4} {:>14} {:>14} {:>12} {:>10}", "k", "residual", "dist_to_start", "step_norm", "theta");
    for r in &trace.records {
        println!(
            "{:>4} {:>14.6e} {:>14.6e} {:>12} {:>10}",
            r.k,
            r.residual,
            r.dist_to_start,
            r.step_norm.map_or("-".into(), |s| format!("{s:.4e}")),
            r.theta.map_or("-".into(), |t| format!("{t:.4}")),
        );
    }
    let z = trace.final_iterate();
    println!("converged = {}", trace.converged);
    println!("solution = {:?}", z.as_slice());
    if let Some(path) = args.trace {
        trace.write_csv(path)?;
    }
    Ok(trace.converged)
}

fn verify(problem: &str, trace_path: PathBuf, samples: usize, seed: u64) -> anyhow::Result<bool> {
    let loaded = load(problem)?;
    let trace = IterationTrace::read_csv(&trace_path)?;
    if trace.problem != loaded.spec.name {
        bail!("trace is for `{}`, not `{}`", trace.problem, loaded.spec.name);
    }
    let cert = derive_certificate(&loaded.majorant, trace.rho)?;
    let x_star = reference_solution(&loaded.problem)?;
    let check = check_trace(&loaded.problem, &trace, &loaded.majorant, &cert, &x_star)?;
    let probes = run_probes(&loaded.problem, &loaded.majorant, samples, seed)?;
    for r in check.reports.iter().chain(&probes) {
        println!("{r}");
    }
    let ok = check.passed() && probes.iter().all(|r| r.passed);
    println!("verdict = {}", if ok { "pass" } else { "FAIL" });
    Ok(ok)
}

fn probe(problem: &str, samples: usize, seed: u64, slacks: Option<PathBuf>) -> anyhow::Result<bool> {
    let loaded = load(problem)?;
    let reports = run_probes(&loaded.problem, &loaded.majorant, samples, seed)?;
    for r in &reports {
        println!("{r}");
    }
    if let Some(path) = slacks {
        write_slacks(path, &reports)?;
    }
    Ok(reports.iter().all(|r| r.passed))
}

fn sweep(problem: &str, grid: SweepGrid, out: PathBuf, inner: bool) -> anyhow::Result<bool> {
    let loaded = load(problem)?;
    let opts = SweepOptions {
        grid,
        step_mode: if inner { StepMode::IterativeInner } else { StepMode::worst_case() },
        ..SweepOptions::default()
    };
    let cells = run_sweep(&loaded, &opts, Some(&out))?;
    println!(
        "{:>8} {:>8} {:>6} {:>10} {:>10} {:>6}",
        "rho", "theta", "steps", "env_ratio", "error", "check"
    );
    for c in &cells {
        println!(
            "{:>8.5} {:>8.5} {:>6} {:>10.4} {:>10.2e} {:>6}",
            c.rho,
            c.theta,
            c.steps,
            c.max_envelope_ratio,
            c.final_error,
            if c.check_passed { "pass" } else { "FAIL" }
        );
    }
    println!("wrote {}", out.join("sweep.csv").display());
    Ok(cells.iter().all(|c| c.check_passed && c.converged))
}

fn corpus(out: PathBuf) -> anyhow::Result<bool> {
    std::fs::create_dir_all(&out)?;
    for spec in corpus_specs() {
        let path = out.join(format!("{}.json", spec.name));
        std::fs::write(&path, spec.to_json()? + "\n")?;
        println!("{}", path.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Certify { problem, rho, out } => certify(&problem, rho, out),
        Command::Solve(args) => solve(args),
        Command::Verify {
            problem,
            trace,
            samples,
            seed,
        } => verify(&problem, trace, samples, seed),
        Command::Probe {
            problem,
            samples,
            seed,
            slacks,
        } => probe(&problem, samples, seed, slacks),
        Command::Sweep {
            problem,
            grid,
            out,
            inner,
        } => sweep(&problem, grid, out, inner),
        Command::Corpus { out } => corpus(out),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
