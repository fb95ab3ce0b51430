use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use heurist_core::diagonal::{autoreg_check, muckenhoupt_report, regime_classify, MuckVariant, RateProbe};
use heurist_core::rules::rule_curve;
use heurist_core::{build_grid, Fista, LinearOperator, OperatorKind, Regularizer, Rule, SolveOptions, SweepMode};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{choose_solver, fmt_float, noisy_problem, prepare, run_experiment, write_report};
use crate::io::{format_matrix, format_vector, read_matrix, read_vector, write_text};

#[derive(Debug, Parser)]
#[command(name = "heurist", version, about = "Heuristic parameter choice for Tikhonov regularization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One Tikhonov solve; prints the minimizer.
    Solve(SolveArgs),
    /// Rule functionals along an α grid for one data vector.
    Rules(RulesArgs),
    /// Full noise-level sweep from a TOML config.
    Experiment(ExperimentArgs),
    /// Noise-condition tables for the levels of a config.
    Conditions(ConditionsArgs),
    /// Noise-decay regime of a polynomially ill-posed diagonal problem.
    Classify(ClassifyArgs),
    /// Random matrix with geometrically decaying singular values.
    GenMatrix(GenMatrixArgs),
}

#[derive(Debug, Args)]
pub struct OperatorArgs {
    /// Dense matrix file, one row per line.
    #[arg(long, conflicts_with_all = ["diag_beta", "n"])]
    pub matrix: Option<PathBuf>,
    /// Diagonal operator with eigenvalues 1/i^beta.
    #[arg(long)]
    pub diag_beta: Option<f64>,
    /// Dimension of the diagonal operator.
    #[arg(long)]
    pub n: Option<usize>,
}

impl OperatorArgs {
    fn build(&self) -> Result<LinearOperator> {
        match (&self.matrix, self.diag_beta, self.n) {
            (Some(path), None, None) => Ok(LinearOperator::dense(read_matrix(path)?)?),
            (None, Some(beta), Some(n)) => {
                Ok(LinearOperator::diagonal(DVector::from_fn(n, |i, _| ((i + 1) as f64).powf(-beta)))?)
            }
            _ => Err(HarnessError::Config("give either --matrix or both --diag-beta and --n".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct RegArgs {
    /// Penalty (1/q)‖x‖_q^q.
    #[arg(long, conflicts_with_all = ["l1", "tv"])]
    pub q: Option<f64>,
    #[arg(long, conflicts_with = "tv")]
    pub l1: bool,
    /// One-dimensional total variation.
    #[arg(long)]
    pub tv: bool,
}

impl RegArgs {
    fn build(&self) -> Result<Regularizer> {
        match (self.q, self.l1, self.tv) {
            (Some(q), false, false) => Ok(Regularizer::power_lq(q)?),
            (None, true, false) => Ok(Regularizer::L1),
            (None, false, true) => Ok(Regularizer::Tv1d),
            _ => Err(HarnessError::Config("give exactly one of --q, --l1, --tv".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = SolveOptions::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = SolveOptions::default().tol)]
    pub tol: f64,
}

impl SolverArgs {
    fn fista(&self) -> Fista {
        Fista::new(SolveOptions { max_iters: self.max_iters, tol: self.tol, step: None })
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    #[command(flatten)]
    pub reg: RegArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub alpha: f64,
    /// Data vector file.
    #[arg(long)]
    pub y: PathBuf,
    /// Also print the second Bregman iterate as a second column.
    #[arg(long)]
    pub second: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RulesArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    #[command(flatten)]
    pub reg: RegArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub points_per_decade: usize,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Draws per noise level; rows then hold medians.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Treat noise levels as absolute norms instead of fractions of ‖y‖.
    #[arg(long)]
    pub absolute: bool,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConditionsArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Restrict to one noise level.
    #[arg(long)]
    pub level: Option<usize>,
    /// HD, HR, SQO or RQO; all when omitted.
    #[arg(long)]
    pub variant: Option<Rule>,
    #[arg(long = "c1", alias = "C1", default_value_t = heurist_core::diagonal::DEFAULT_C1)]
    pub c1: f64,
    #[arg(long = "c3", alias = "C3", default_value_t = heurist_core::diagonal::DEFAULT_C3)]
    pub c3: f64,
    /// Constant of the additive α term in the RQO condition.
    #[arg(long, default_value_t = 1.0)]
    pub rqo_const: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Spectral decay: λ_n ~ n^-beta.
    #[arg(long)]
    pub beta: f64,
    /// Decay of the exact data: |y_n| ~ n^-nu.
    #[arg(long)]
    pub nu: f64,
    /// Decay of the noise: |Δy_n| ~ n^-kappa.
    #[arg(long)]
    pub kappa: f64,
    #[arg(long)]
    pub q: f64,
}

#[derive(Debug, Args)]
pub struct GenMatrixArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// Ratio of largest to smallest singular value.
    #[arg(long)]
    pub cond: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let a = args.op.build()?;
    let reg = args.reg.build()?;
    let y = read_vector(&args.y)?;
    let solver = choose_solver(&a, &reg, args.solver.fista());
    let first = solver.solve(&a, &y, args.alpha, &reg, None)?;
    let mut converged = first.converged;
    let text = if args.second {
        let second = solver.second(&a, &y, args.alpha, &reg, &first)?;
        converged &= second.converged;
        first.x.iter().zip(second.x.iter()).map(|(u, v)| format!("{} {}\n", fmt_float(*u), fmt_float(*v))).collect()
    } else {
        format_vector(&first.x)
    };
    emit(&args.out, &text)?;
    if !converged {
        return Err(HarnessError::Numerical(format!("no convergence within {} iterations", args.solver.max_iters)));
    }
    Ok(())
}

fn cmd_rules(args: &RulesArgs) -> Result<()> {
    let a = args.op.build()?;
    let reg = args.reg.build()?;
    let y = read_vector(&args.y)?;
    let problem = heurist_core::Problem {
        x_dagger: DVector::zeros(a.input_dim()),
        y: DVector::zeros(y.len()),
        delta: f64::NAN,
        y_delta: y,
        reg,
        a,
    };
    let grid = build_grid(&problem.a, args.points_per_decade, args.alpha_min, args.alpha_max)?;
    let solver = choose_solver(&problem.a, &reg, args.solver.fista());
    let curve = rule_curve(&problem, &grid, &*solver, SweepMode::SequentialWarm)?;
    let mut text = String::from("alpha,psi_hd,psi_hr,psi_sqo,psi_rqo\n");
    for (i, &alpha) in grid.alphas.iter().enumerate() {
        let v: Vec<String> = Rule::ALL.iter().map(|&r| fmt_float(curve.psi(r)[i])).collect();
        let _ = writeln!(text, "{},{}", fmt_float(alpha), v.join(","));
    }
    emit(&args.out, &text)?;
    for rule in Rule::ALL {
        match curve.alpha_star(rule) {
            Ok((_, a)) => eprintln!("{rule}: alpha* = {}", fmt_float(a)),
            Err(e) => eprintln!("{rule}: {e}"),
        }
    }
    if curve.nonconverged() > 0 {
        return Err(HarnessError::Numerical(format!("{} solves did not converge", curve.nonconverged())));
    }
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(r) = args.repeats {
        cfg.noise.repeats = r;
    }
    if args.absolute {
        cfg.noise.relative = false;
    }
    if let Some(dir) = &args.out_dir {
        cfg.output.dir = dir.clone();
    }
    let report = run_experiment(&cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let (csv, json) = write_report(&report, &cfg.output.dir, &cfg.output.stem)?;
    println!("{}", csv.display());
    println!("{}", json.display());
    Ok(())
}

fn cmd_conditions(args: &ConditionsArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let setup = prepare(&cfg)?;
    if !setup.exact.reg.subgradient_available() {
        return Err(heurist_core::Error::RequiresPowerLq("conditions").into());
    }
    let diagonal = matches!(setup.exact.a.kind(), OperatorKind::Diagonal(_));
    let n_levels = cfg.noise.resolved_levels()?.len();
    let levels: Vec<usize> = match args.level {
        Some(l) => vec![l],
        None => (0..n_levels).collect(),
    };
    let rules: Vec<Rule> = match args.variant {
        Some(r) => vec![r],
        None => Rule::ALL.to_vec(),
    };
    let mut text = String::from("level_index,condition,alpha,lhs,rhs,ratio\n");
    for &l in &levels {
        let problem = noisy_problem(&cfg, &setup, l, 0)?;
        let curve = rule_curve(&problem, &setup.grid, &*setup.solver, SweepMode::SequentialWarm)?;
        let probe = RateProbe::from_curve(&curve);
        let mut reports = Vec::new();
        for &rule in &rules {
            reports.push(autoreg_check(&problem, &setup.grid, &*setup.solver, rule, args.rqo_const)?);
            let variant = match rule {
                Rule::Hd => Some(MuckVariant::Hd),
                Rule::Hr => Some(MuckVariant::Hr),
                Rule::Sqo => Some(MuckVariant::Sqo),
                Rule::Rqo => None,
            };
            if let (Some(v), true) = (variant, diagonal) {
                reports.push(muckenhoupt_report(&problem, &setup.grid, args.c1, v, Some(args.c3))?);
            }
            reports.extend(probe.report(rule));
        }
        for r in &reports {
            for e in &r.per_alpha {
                let _ = writeln!(
                    text,
                    "{l},{},{},{},{},{}",
                    r.condition.as_str(),
                    fmt_float(e.alpha),
                    fmt_float(e.lhs),
                    fmt_float(e.rhs),
                    fmt_float(e.ratio())
                );
            }
        }
    }
    emit(&args.out, &text)
}

#[derive(Serialize)]
struct ClassifyOutput {
    #[serde(flatten)]
    report: heurist_core::diagonal::RegimeReport,
    rules: Vec<(Rule, heurist_core::diagonal::Regime)>,
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    let report = regime_classify(args.beta, args.nu, args.kappa, args.q)?;
    let rules = Rule::ALL.iter().map(|&r| (r, report.for_rule(r))).collect();
    let out = ClassifyOutput { report, rules };
    let text = serde_json::to_string_pretty(&out).map_err(|e| HarnessError::Output(e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// `U diag(σ) Vᵀ` with Haar-like orthonormal factors and `σ_i` geometric
/// from 1 down to `1/cond`.
pub fn gen_matrix(rows: usize, cols: usize, cond: f64, seed: u64) -> Result<DMatrix<f64>> {
    if rows == 0 || cols == 0 {
        return Err(HarnessError::Config("matrix dimensions must be positive".into()));
    }
    if !(cond.is_finite() && cond >= 1.0) {
        return Err(HarnessError::Config("cond must be at least 1".into()));
    }
    let k = rows.min(cols);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = |r: usize, c: usize| DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    let u = gauss(rows, k).qr().q();
    let v = gauss(cols, k).qr().q();
    let sigma = DVector::from_fn(k, |i, _| if k == 1 { 1.0 } else { cond.powf(-(i as f64) / (k - 1) as f64) });
    Ok(u * DMatrix::from_diagonal(&sigma) * v.transpose())
}

fn cmd_gen_matrix(args: &GenMatrixArgs) -> Result<()> {
    let m = gen_matrix(args.rows, args.cols, args.cond, args.seed)?;
    write_text(&args.out, &format_matrix(&m))
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Rules(a) => cmd_rules(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Conditions(a) => cmd_conditions(a),
        Command::Classify(a) => cmd_classify(a),
        Command::GenMatrix(a) => cmd_gen_matrix(a),
    }
}

/// Parses and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_matrix_has_requested_conditioning() {
        let m = gen_matrix(12, 8, 1e3, 4).unwrap();
        let s = m.clone().svd(false, false).singular_values;
        let (max, min) = (s.max(), s.min());
        assert!((max - 1.0).abs() < 1e-10);
        assert!((max / min - 1e3).abs() < 1e-6);
        assert_eq!(gen_matrix(12, 8, 1e3, 4).unwrap(), m);
    }

    #[test]
    fn reg_flags_are_exclusive() {
        let r = RegArgs { q: Some(1.5), l1: false, tv: false };
        assert_eq!(r.build().unwrap(), Regularizer::PowerLq { q: 1.5 });
        assert!(RegArgs { q: None, l1: false, tv: false }.build().is_err());
    }
}
