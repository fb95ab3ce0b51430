use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use heurist_core::diagonal::{
    autoreg_check, muckenhoupt_report, regime_classify, MuckVariant, RateProbe, RegimeReport,
};
use heurist_core::rules::{rule_curve, AlphaGrid};
use heurist_core::{
    build_grid, normalize_problem, ClosedForm, DiagonalModel, Fista, LinearOperator, OperatorKind, Problem,
    Regularizer, Rule, RuleCurve, SweepMode, TikhonovSolver,
};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, NonConvergence, ProblemSpec};
use crate::error::{HarnessError, Result};
use crate::io::{read_matrix, read_vector, write_text};
use crate::metrics::{err_l1, err_lq_bregman, err_tv};
use crate::noise::{gen_noise, gen_noise_abs, level_seed};

pub const CSV_HEADER: &str = "level_index,delta,rule,alpha_star,error,alpha_opt,error_opt,efficiency";

/// Normalized exact problem, grid and solver shared by every noise level.
pub struct Setup {
    pub exact: Problem,
    pub grid: AlphaGrid,
    pub model: Option<DiagonalModel>,
    pub solver: Box<dyn TikhonovSolver + Send>,
    pub warnings: Vec<String>,
}

/// Closed form for diagonal operators with an ℓ^q penalty, FISTA otherwise.
pub fn choose_solver(a: &LinearOperator, reg: &Regularizer, fista: Fista) -> Box<dyn TikhonovSolver + Send> {
    match (a.kind(), reg) {
        (OperatorKind::Diagonal(_), Regularizer::PowerLq { .. }) => Box::new(ClosedForm),
        _ => Box::new(fista),
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Setup> {
    let reg = cfg.regularizer.build()?;
    let mut warnings = Vec::new();
    let (raw, model) = match &cfg.problem {
        ProblemSpec::Diagonal { n, beta, nu, sign_seed } => {
            // The model's noise decay and exponent only matter for diagnostics.
            let kappa = cfg.noise.kappa.filter(|k| *k > 0.0).unwrap_or(1.0);
            let q = reg.q().unwrap_or(2.0);
            let model = DiagonalModel::new(*n, *beta, *nu, kappa, q)?
                .with_random_signs(sign_seed.unwrap_or(cfg.noise.seed));
            let p = Problem::exact(model.operator()?, model.x_dagger(), reg)?;
            (p, Some(model))
        }
        ProblemSpec::Matrix { matrix, x_dagger } => {
            let a = LinearOperator::dense(read_matrix(matrix)?)?;
            let x = read_vector(x_dagger)?;
            if x.len() != a.input_dim() {
                return Err(HarnessError::file(
                    x_dagger,
                    format!("expected {} entries to match the matrix columns, found {}", a.input_dim(), x.len()),
                ));
            }
            (Problem::exact(a, x, reg)?, None)
        }
    };
    let exact = normalize_problem(&raw)?;
    let grid = build_grid(&exact.a, cfg.grid.points_per_decade, cfg.grid.alpha_min, cfg.grid.alpha_max)?;
    if grid.len() < 3 {
        return Err(HarnessError::Config("grid needs at least three points".into()));
    }
    let solver = choose_solver(&exact.a, &reg, Fista::new(cfg.solver.options()));
    if let (Some(m), Some(kappa)) = (&model, cfg.noise.kappa) {
        if kappa > 0.0 {
            warnings.extend(regime_classify(m.beta, m.data_decay(), kappa, m.q)?.warnings);
        }
    }
    Ok(Setup { exact, grid, model, solver, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub level_index: usize,
    pub delta: f64,
    pub rule: Rule,
    pub alpha_star: f64,
    pub error: f64,
    pub alpha_opt: f64,
    pub error_opt: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutoregSummary {
    pub rule: Rule,
    pub min_feasible_c: f64,
    pub sign_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuckenhouptSummary {
    pub variant: MuckVariant,
    pub c1: f64,
    pub min_feasible_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub rule: Rule,
    /// Infimum over the grid of `ψ(α)/α`.
    pub infimum: f64,
}

/// Condition tables reduced to their feasible constants, first draw only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub autoreg: Vec<AutoregSummary>,
    pub muckenhoupt: Vec<MuckenhouptSummary>,
    pub rate: Vec<RateSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelInfo {
    pub level_index: usize,
    /// Configured level (relative unless `relative = false`).
    pub delta: f64,
    /// `‖y^δ − y‖` of the normalized problem, first draw.
    pub delta_abs: f64,
    pub seeds: Vec<u64>,
    pub conditions: Option<ConditionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub points: usize,
    pub points_per_decade: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub regularizer: &'static str,
    /// `"single_draw"`, or `"median_of_repeats"` when several draws per level ran.
    pub aggregate: &'static str,
    pub repeats: usize,
    pub grid: GridInfo,
    pub levels: Vec<LevelInfo>,
    pub rows: Vec<ReportRow>,
    pub nonconverged_solves: usize,
    pub regime: Option<RegimeReport>,
    pub warnings: Vec<String>,
}

struct Draw {
    delta_abs: f64,
    rows: Vec<ReportRow>,
    nonconverged: usize,
    conditions: Option<ConditionSummary>,
}

fn error_curve(setup: &Setup, problem: &Problem, curve: &RuleCurve) -> Result<Vec<f64>> {
    let reg = &problem.reg;
    let xi_dagger = if reg.subgradient_available() { Some(reg.subgradient(&problem.x_dagger)?) } else { None };
    curve
        .grid
        .alphas
        .iter()
        .zip(&curve.solutions)
        .map(|(&alpha, pair)| {
            let x = &pair.first.x;
            match reg {
                Regularizer::PowerLq { .. } => {
                    err_lq_bregman(reg, x, &problem.x_dagger, xi_dagger.as_ref().expect("power penalty"))
                }
                Regularizer::L1 => Ok(err_l1(x, &problem.x_dagger)),
                Regularizer::Tv1d => err_tv(reg, x, &problem.x_dagger, &setup.exact.a, &problem.y_delta, alpha),
            }
        })
        .collect()
}

/// Grid minimizer including endpoints; ties go to the smaller `α`.
fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| v < values[b]) {
            best = Some(i);
        }
    }
    best
}

fn efficiency(err: f64, opt: f64) -> f64 {
    if opt == 0.0 {
        if err == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        err / opt
    }
}

fn conditions(cfg: &ExperimentConfig, setup: &Setup, problem: &Problem, curve: &RuleCurve) -> Result<ConditionSummary> {
    let mut autoreg = Vec::new();
    for rule in Rule::ALL {
        let r = autoreg_check(problem, &setup.grid, &*setup.solver, rule, cfg.conditions.rqo_const)?;
        autoreg.push(AutoregSummary { rule, min_feasible_c: r.min_feasible_c, sign_violations: r.sign_violations });
    }
    let mut muckenhoupt = Vec::new();
    for variant in [MuckVariant::Hd, MuckVariant::Hr, MuckVariant::Sqo] {
        for &c1 in &cfg.conditions.c1 {
            let r = muckenhoupt_report(problem, &setup.grid, c1, variant, Some(cfg.conditions.c3))?;
            muckenhoupt.push(MuckenhouptSummary { variant, c1, min_feasible_c: r.min_feasible_c });
        }
    }
    let probe = RateProbe::from_curve(curve);
    let rate = [Rule::Hd, Rule::Hr, Rule::Sqo]
        .into_iter()
        .map(|rule| RateSummary { rule, infimum: probe.infimum(rule).unwrap_or(f64::NAN) })
        .collect();
    Ok(ConditionSummary { autoreg, muckenhoupt, rate })
}

fn run_draw(cfg: &ExperimentConfig, setup: &Setup, level_index: usize, delta: f64, seed: u64, first: bool) -> Result<Draw> {
    let noise = if cfg.noise.relative {
        gen_noise(&setup.exact.y, delta, cfg.noise.kappa, seed)?
    } else {
        gen_noise_abs(setup.exact.y.len(), delta, cfg.noise.kappa, seed)?
    };
    let problem = setup.exact.with_noise(&noise)?;
    let curve = rule_curve(&problem, &setup.grid, &*setup.solver, SweepMode::SequentialWarm)?;
    let nonconverged = curve.nonconverged();
    if nonconverged > 0 && cfg.solver.on_nonconvergence == NonConvergence::Error {
        return Err(HarnessError::Numerical(format!(
            "{nonconverged} solves at noise level {level_index} did not converge within {} iterations",
            cfg.solver.max_iters
        )));
    }
    let errors = error_curve(setup, &problem, &curve)?;
    let opt = argmin(&errors).ok_or_else(|| HarnessError::Numerical("error curve has no finite value".into()))?;
    let (alpha_opt, error_opt) = (setup.grid.alphas[opt], errors[opt]);
    let rows = cfg
        .rules
        .select
        .iter()
        .map(|&rule| {
            let (alpha_star, error) = match curve.alpha_star(rule) {
                Ok((i, a)) => (a, errors[i]),
                Err(_) => (f64::NAN, f64::NAN),
            };
            ReportRow {
                level_index,
                delta,
                rule,
                alpha_star,
                error,
                alpha_opt,
                error_opt,
                efficiency: efficiency(error, error_opt),
            }
        })
        .collect();
    let diagnostics = first
        && cfg.conditions.enabled
        && problem.reg.subgradient_available()
        && matches!(problem.a.kind(), OperatorKind::Diagonal(_));
    let conditions = if diagnostics { Some(conditions(cfg, setup, &problem, &curve)?) } else { None };
    Ok(Draw { delta_abs: problem.delta, rows, nonconverged, conditions })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.retain(|x| !x.is_nan());
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn median_rows(draws: &[Draw]) -> Vec<ReportRow> {
    let first = &draws[0].rows;
    (0..first.len())
        .map(|k| {
            let col = |f: fn(&ReportRow) -> f64| median(draws.iter().map(|d| f(&d.rows[k])).collect());
            ReportRow {
                alpha_star: col(|r| r.alpha_star),
                error: col(|r| r.error),
                alpha_opt: col(|r| r.alpha_opt),
                error_opt: col(|r| r.error_opt),
                efficiency: col(|r| r.efficiency),
                ..first[k].clone()
            }
        })
        .collect()
}

/// Runs every noise level; levels and repeats run in parallel, and all
/// randomness derives from `(seed, level, repeat)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let setup = prepare(cfg)?;
    let levels = cfg.noise.resolved_levels()?;
    let repeats = cfg.noise.repeats;
    let jobs: Vec<(usize, usize)> = (0..levels.len()).flat_map(|l| (0..repeats).map(move |r| (l, r))).collect();
    let draws: Vec<Draw> = jobs
        .par_iter()
        .map(|&(l, r)| run_draw(cfg, &setup, l, levels[l], level_seed(cfg.noise.seed, l, r), r == 0))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut infos = Vec::new();
    let mut nonconverged = 0;
    for (l, chunk) in draws.chunks(repeats).enumerate() {
        nonconverged += chunk.iter().map(|d| d.nonconverged).sum::<usize>();
        if repeats == 1 {
            rows.extend(chunk[0].rows.iter().cloned());
        } else {
            rows.extend(median_rows(chunk));
        }
        infos.push(LevelInfo {
            level_index: l,
            delta: levels[l],
            delta_abs: chunk[0].delta_abs,
            seeds: (0..repeats).map(|r| level_seed(cfg.noise.seed, l, r)).collect(),
            conditions: chunk[0].conditions.clone(),
        });
    }
    let regime = match (&setup.model, cfg.noise.kappa) {
        (Some(m), Some(k)) if k > 0.0 && setup.exact.reg.subgradient_available() => {
            Some(regime_classify(m.beta, m.data_decay(), k, m.q)?)
        }
        _ => None,
    };
    Ok(ExperimentReport {
        regularizer: setup.exact.reg.name(),
        aggregate: if repeats == 1 { "single_draw" } else { "median_of_repeats" },
        repeats,
        grid: GridInfo {
            alpha_min: setup.grid.alpha_min,
            alpha_max: setup.grid.alpha_max,
            points: setup.grid.len(),
            points_per_decade: setup.grid.points_per_decade,
        },
        levels: infos,
        rows,
        nonconverged_solves: nonconverged,
        regime,
        warnings: setup.warnings,
    })
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn report_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.level_index,
            fmt_float(r.delta),
            r.rule,
            fmt_float(r.alpha_star),
            fmt_float(r.error),
            fmt_float(r.alpha_opt),
            fmt_float(r.error_opt),
            fmt_float(r.efficiency)
        );
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
pub fn write_report(report: &ExperimentReport, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    write_text(&csv, &report_csv(report))?;
    let text = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Output(e.to_string()))?;
    write_text(&json, &(text + "\n"))?;
    Ok((csv, json))
}

/// Per-draw noise for callers that need the noisy problem itself.
pub fn noisy_problem(cfg: &ExperimentConfig, setup: &Setup, level_index: usize, repeat: usize) -> Result<Problem> {
    let levels = cfg.noise.resolved_levels()?;
    let delta = *levels
        .get(level_index)
        .ok_or_else(|| HarnessError::Config(format!("no noise level with index {level_index}")))?;
    let seed = level_seed(cfg.noise.seed, level_index, repeat);
    let noise: DVector<f64> = if cfg.noise.relative {
        gen_noise(&setup.exact.y, delta, cfg.noise.kappa, seed)?
    } else {
        gen_noise_abs(setup.exact.y.len(), delta, cfg.noise.kappa, seed)?
    };
    Ok(setup.exact.with_noise(&noise)?)
}
