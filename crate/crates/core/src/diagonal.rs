//! Diagonal operators with an ℓ^q penalty.
//!
//! With `A = diag(λ)` the Tikhonov problem decouples into scalar problems
//! solved by `h_{q,γ}^{-1}` with `γ_i = α/λ_i²`. On top of the closed-form
//! solver this module evaluates the noise conditions that govern the
//! heuristic rules in the diagonal case.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::operator::{LinearOperator, OperatorKind};
use crate::problem::Problem;
use crate::prox::{h_q_invert, signed_pow};
use crate::regularizer::Regularizer;
use crate::rules::{bregman_distance, psi_hd, psi_hr, psi_rqo, psi_sqo, AlphaGrid, Rule, RuleCurve};
use crate::solve::{solve_pairs, Solution, SweepMode, TikhonovSolver};

/// Polynomially ill-posed diagonal model:
/// `λ_i = c_a/i^β`, `x†_i = c_x s_i/i^ν`, noise `δ s′_i/i^κ`.
///
/// `nu` is the decay of the solution; the exact data `y_i = λ_i x†_i`
/// decay like `i^{-(β+ν)}`, see [`DiagonalModel::data_decay`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalModel {
    pub n: usize,
    pub beta: f64,
    pub nu: f64,
    pub kappa: f64,
    pub c_a: f64,
    pub c_x: f64,
    pub signs: Vec<f64>,
    pub noise_signs: Vec<f64>,
    pub q: f64,
}

impl DiagonalModel {
    /// All signs `+1`, unit scales.
    pub fn new(n: usize, beta: f64, nu: f64, kappa: f64, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("model needs n >= 1".into()));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
        }
        if !nu.is_finite() {
            return Err(Error::NonFinite("nu"));
        }
        Regularizer::power_lq(q)?;
        Ok(Self {
            n,
            beta,
            nu,
            kappa,
            c_a: 1.0,
            c_x: 1.0,
            signs: vec![1.0; n],
            noise_signs: vec![1.0; n],
            q,
        })
    }

    pub fn with_scales(mut self, c_a: f64, c_x: f64) -> Result<Self> {
        if !(c_a.is_finite() && c_a > 0.0 && c_x.is_finite() && c_x > 0.0) {
            return Err(Error::InvalidInput("scales must be positive".into()));
        }
        self.c_a = c_a;
        self.c_x = c_x;
        Ok(self)
    }

    /// Draws both sign sequences uniformly from `{−1, 1}`.
    pub fn with_random_signs(mut self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |_| if rng.random::<bool>() { 1.0 } else { -1.0 };
        self.signs = (0..self.n).map(&mut draw).collect();
        self.noise_signs = (0..self.n).map(&mut draw).collect();
        self
    }

    pub fn data_decay(&self) -> f64 {
        self.beta + self.nu
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.c_a / ((i + 1) as f64).powf(self.beta))
    }

    pub fn operator(&self) -> Result<LinearOperator> {
        LinearOperator::diagonal(self.eigenvalues())
    }

    pub fn x_dagger(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.c_x * self.signs[i] / ((i + 1) as f64).powf(self.nu))
    }

    pub fn exact_data(&self) -> DVector<f64> {
        self.eigenvalues().component_mul(&self.x_dagger())
    }

    pub fn reg(&self) -> Regularizer {
        Regularizer::PowerLq { q: self.q }
    }

    /// `δ s′_i / i^κ`. Its norm exceeds `δ` unless `n = 1`; use
    /// [`DiagonalModel::problem`] for data with `‖y^δ − y‖` equal to a level.
    pub fn model_noise(&self, delta: f64) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| delta * self.noise_signs[i] / ((i + 1) as f64).powf(self.kappa))
    }

    /// Problem with noise along the model's decay profile, scaled to norm `delta`.
    pub fn problem(&self, delta: f64) -> Result<Problem> {
        let exact = Problem::exact(self.operator()?, self.x_dagger(), self.reg())?;
        let shape = self.model_noise(1.0);
        exact.with_noise(&(shape * (delta / self.model_noise(1.0).norm())))
    }

    /// Ways in which the model leaves the regime of the decay analysis.
    pub fn warnings(&self) -> Vec<String> {
        regime_warnings(self.beta, self.data_decay(), self.kappa)
    }
}

fn diagonal_of(a: &LinearOperator) -> Result<&DVector<f64>> {
    match a.kind() {
        OperatorKind::Diagonal(l) => Ok(l),
        OperatorKind::Dense(_) => Err(Error::InvalidInput("closed form needs a diagonal operator".into())),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha must be positive, got {alpha:e}")))
    }
}

fn check_spectrum(lambda: &DVector<f64>) -> Result<()> {
    if lambda.iter().all(|&l| l.is_finite() && l > 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidInput("eigenvalues must be positive".into()))
    }
}

/// Componentwise Tikhonov solution for `A = diag(λ)`.
///
/// The residual uses `y_i − λ_i x_i = (α/λ_i)|x_i|^{q−1} sgn(x_i)`, which
/// avoids cancellation when `x_i` nearly interpolates.
pub fn diag_solve(lambda: &DVector<f64>, y_delta: &DVector<f64>, q: f64, alpha: f64) -> Result<Solution> {
    check_dim(lambda.len(), y_delta.len())?;
    check_alpha(alpha)?;
    check_spectrum(lambda)?;
    check_finite("y_delta", y_delta.as_slice())?;
    let reg = Regularizer::power_lq(q)?;
    let n = lambda.len();
    let mut x = DVector::zeros(n);
    let mut p = DVector::zeros(n);
    let mut xi = DVector::zeros(n);
    for i in 0..n {
        let l = lambda[i];
        let xi_i = h_q_invert(q, alpha / (l * l), y_delta[i] / l);
        let s = signed_pow(xi_i, q - 1.0);
        x[i] = xi_i;
        p[i] = alpha / l * s;
        xi[i] = s;
    }
    let objective = 0.5 * p.norm_squared() + alpha * reg.value(&x);
    Ok(Solution { x, p, xi: Some(xi), alpha, objective, iters: 0, converged: true })
}

/// Second Bregman iterate for `A = diag(λ)` given the Tikhonov solution.
pub fn diag_second_from(lambda: &DVector<f64>, y_delta: &DVector<f64>, q: f64, first: &Solution) -> Result<Solution> {
    check_dim(y_delta.len(), first.p.len())?;
    let shifted = y_delta + &first.p;
    let s = diag_solve(lambda, &shifted, q, first.alpha)?;
    Ok(Solution {
        p: &s.p - &first.p,
        ..s
    })
}

/// `x^{II}_i = h_{q,γ_i}^{-1}((y_i + p_i)/λ_i)` and `p^{II} = y − λ x^{II}`.
pub fn diag_second(lambda: &DVector<f64>, y_delta: &DVector<f64>, q: f64, alpha: f64) -> Result<Solution> {
    let first = diag_solve(lambda, y_delta, q, alpha)?;
    diag_second_from(lambda, y_delta, q, &first)
}

/// `η = γ^{1/(2−q)}` for `γ = α/λ²`.
pub fn eta(q: f64, alpha: f64, lambda: f64) -> Result<f64> {
    if q == 2.0 {
        return Err(Error::InvalidInput("eta is undefined at q = 2; use the unscaled path".into()));
    }
    Ok((alpha / (lambda * lambda)).powf(1.0 / (2.0 - q)))
}

/// Residual through the dual exponent: `λη·h_{q*}^{-1}(y/(λη))` with unit weight.
pub fn diag_residual_scaled(lambda: f64, eta: f64, q_star: f64, y: f64) -> Result<f64> {
    if q_star == 2.0 {
        return Err(Error::InvalidInput("q = 2: use unscaled path".into()));
    }
    if !(q_star.is_finite() && q_star > 1.0) {
        return Err(Error::InvalidInput(format!("dual exponent must exceed 1, got {q_star}")));
    }
    let s = lambda * eta;
    Ok(s * h_q_invert(q_star, 1.0, y / s))
}

/// Closed-form solver; accepts only diagonal operators with `PowerLq`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForm;

impl TikhonovSolver for ClosedForm {
    fn solve(
        &self,
        a: &LinearOperator,
        y: &DVector<f64>,
        alpha: f64,
        reg: &Regularizer,
        _warm: Option<&DVector<f64>>,
    ) -> Result<Solution> {
        let q = reg.q().ok_or(Error::RequiresPowerLq("closed-form solver"))?;
        diag_solve(diagonal_of(a)?, y, q, alpha)
    }
}

/// Bounds on `k(z) = (1 − |z|^{r−1} sgn z)/(1 − z)` over `[−1, 1]`.
///
/// For `x₁ > |x₂|` and `z = h_r^{-1}` with unit weight,
/// `1/(1 + d_lo z₁^{r−2}) ≤ (z₁ − z₂)/(x₁ − x₂) ≤ 1/(1 + d_up z₁^{r−2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaConstants {
    pub q_star: f64,
    pub d_lo: f64,
    pub d_up: f64,
}

const LEMMA_GRID_STEP: f64 = 1e-5;

impl LemmaConstants {
    /// Constants of `k` for exponent `r` (stored as `q_star`).
    pub fn for_exponent(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 1.0) {
            return Err(Error::InvalidInput(format!("exponent must exceed 1, got {r}")));
        }
        if r == 2.0 {
            return Ok(Self { q_star: r, d_lo: 1.0, d_up: 1.0 });
        }
        let k = |z: f64| lemma_k(r, z);
        let steps = (2.0 / LEMMA_GRID_STEP).round() as usize;
        let z_at = |i: usize| -1.0 + 2.0 * i as f64 / steps as f64;
        let (mut i_min, mut i_max) = (0, 0);
        let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=steps {
            let v = k(z_at(i));
            if v < v_min {
                v_min = v;
                i_min = i;
            }
            if v > v_max {
                v_max = v;
                i_max = i;
            }
        }
        let bracket = |i: usize| (z_at(i.saturating_sub(1)), z_at((i + 1).min(steps)));
        let (a, b) = bracket(i_min);
        let d_up = golden_min(&k, a, b).min(v_min);
        let (a, b) = bracket(i_max);
        let d_lo = (-golden_min(&|z| -k(z), a, b)).max(v_max);
        Ok(Self { q_star: r, d_lo, d_up })
    }
}

/// Constants for the dual exponent `q* = q/(q−1)`, which governs the
/// residual map `h_{q*}^{-1}`.
pub fn lemma_constants(q: f64) -> Result<LemmaConstants> {
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::InvalidInput(format!("q must exceed 1, got {q}")));
    }
    LemmaConstants::for_exponent(q / (q - 1.0))
}

/// `k(z)` with the removable singularity at `z = 1` filled by `r − 1`.
pub fn lemma_k(r: f64, z: f64) -> f64 {
    let d = 1.0 - z;
    if d <= 1e-9 {
        // First-order expansion around 1.
        return (r - 1.0) * (1.0 - 0.5 * (r - 2.0) * d);
    }
    (1.0 - signed_pow(z, r - 1.0)) / d
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    f(a).min(f(b)).min(fc).min(fd)
}

/// Which inequality a [`ConditionReport`] tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Condition {
    AutoregHd,
    AutoregHr,
    AutoregSqo,
    AutoregRqo,
    MuckHd,
    MuckHr,
    MuckSqo,
    RateHd,
    RateHr,
    RateSqo,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AutoregHd => "AUTOREG_HD",
            Self::AutoregHr => "AUTOREG_HR",
            Self::AutoregSqo => "AUTOREG_SQO",
            Self::AutoregRqo => "AUTOREG_RQO",
            Self::MuckHd => "MUCK_HD",
            Self::MuckHr => "MUCK_HR",
            Self::MuckSqo => "MUCK_SQO",
            Self::RateHd => "RATE_HD",
            Self::RateHr => "RATE_HR",
            Self::RateSqo => "RATE_SQO",
        }
    }

    pub fn autoreg(rule: Rule) -> Self {
        match rule {
            Rule::Hd => Self::AutoregHd,
            Rule::Hr => Self::AutoregHr,
            Rule::Sqo => Self::AutoregSqo,
            Rule::Rqo => Self::AutoregRqo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionEntry {
    pub alpha: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl ConditionEntry {
    /// `lhs/rhs`, with `0/0 = 0` and `lhs > 0 = rhs` giving `∞`.
    pub fn ratio(&self) -> f64 {
        if self.lhs <= 0.0 {
            0.0
        } else if self.rhs <= 0.0 {
            f64::INFINITY
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Table of `(α, lhs, rhs)` for an inequality `lhs ≤ C·rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub per_alpha: Vec<ConditionEntry>,
    /// Smallest `C` making the inequality hold on every entry.
    pub min_feasible_c: f64,
    /// Entries with `lhs` or `rhs` below `−1e-10` although both should be
    /// nonnegative.
    pub sign_violations: usize,
}

const SIGN_SLACK: f64 = 1e-10;

impl ConditionReport {
    pub fn new(condition: Condition, per_alpha: Vec<ConditionEntry>) -> Self {
        let min_feasible_c = per_alpha.iter().map(ConditionEntry::ratio).fold(0.0, f64::max);
        let sign_violations = per_alpha
            .iter()
            .filter(|e| e.lhs < -SIGN_SLACK || e.rhs < -SIGN_SLACK)
            .count();
        Self { condition, per_alpha, min_feasible_c, sign_violations }
    }

    pub fn holds_with(&self, c: f64) -> bool {
        self.per_alpha.iter().all(|e| e.lhs <= c * e.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MuckVariant {
    Hd,
    Hr,
    Sqo,
}

impl MuckVariant {
    pub fn condition(self) -> Condition {
        match self {
            Self::Hd => Condition::MuckHd,
            Self::Hr => Condition::MuckHr,
            Self::Sqo => Condition::MuckSqo,
        }
    }
}

pub const DEFAULT_C1: f64 = 1.0;
pub const DEFAULT_C3: f64 = 10.0;

/// Both sides of the weighted noise comparison at one `α`.
///
/// Indices are split by the weight `W_n = λ_n^q max(|y_n|,|y^δ_n|)^{2−q}/α`
/// at `c1`. The left side is `Σ_{W ≥ c1} |Δy_n|²/W_n`; the right side is
/// `Σ_{W < c1} |Δy_n|²`. For `Sqo` the small set is further split by
/// `|Δp − Δy| ≤ c3|Δp − Δp^{II}|`: the complement moves to the left side
/// unweighted, and the right side gets the factor `W^{1/(q−1)}`.
#[allow(clippy::too_many_arguments)]
pub fn muckenhoupt_terms(
    lambda: &DVector<f64>,
    y: &DVector<f64>,
    y_delta: &DVector<f64>,
    q: f64,
    alpha: f64,
    c1: f64,
    variant: MuckVariant,
    c3: Option<f64>,
) -> Result<ConditionEntry> {
    check_dim(lambda.len(), y.len())?;
    check_dim(lambda.len(), y_delta.len())?;
    check_alpha(alpha)?;
    if !(c1.is_finite() && c1 > 0.0) {
        return Err(Error::InvalidInput("C1 must be positive".into()));
    }
    let in_i2: Vec<bool> = match variant {
        MuckVariant::Sqo => {
            let c3 = c3.ok_or_else(|| Error::InvalidInput("the SQO condition needs C3".into()))?;
            let exact = diag_solve(lambda, y, q, alpha)?;
            let exact_ii = diag_second_from(lambda, y, q, &exact)?;
            let noisy = diag_solve(lambda, y_delta, q, alpha)?;
            let noisy_ii = diag_second_from(lambda, y_delta, q, &noisy)?;
            (0..lambda.len())
                .map(|n| {
                    let dy = y[n] - y_delta[n];
                    let dp = exact.p[n] - noisy.p[n];
                    let dp_ii = exact_ii.p[n] - noisy_ii.p[n];
                    (dp - dy).abs() <= c3 * (dp - dp_ii).abs()
                })
                .collect()
        }
        _ => vec![true; lambda.len()],
    };
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for n in 0..lambda.len() {
        let dy2 = (y[n] - y_delta[n]).powi(2);
        if dy2 == 0.0 {
            continue;
        }
        let m = y[n].abs().max(y_delta[n].abs());
        let w = lambda[n].powf(q) * m.powf(2.0 - q) / alpha;
        if w >= c1 {
            lhs += dy2 / w;
        } else if variant != MuckVariant::Sqo {
            rhs += dy2;
        } else if in_i2[n] {
            rhs += w.powf(1.0 / (q - 1.0)) * dy2;
        } else {
            lhs += dy2;
        }
    }
    Ok(ConditionEntry { alpha, lhs, rhs })
}

/// [`muckenhoupt_terms`] for the model's own data, noise `δ s′_i/i^κ`.
pub fn muckenhoupt_check(
    model: &DiagonalModel,
    alpha: f64,
    delta: f64,
    c1: f64,
    variant: MuckVariant,
    c3: Option<f64>,
) -> Result<ConditionEntry> {
    let y = model.exact_data();
    let y_delta = &y + model.model_noise(delta);
    muckenhoupt_terms(&model.eigenvalues(), &y, &y_delta, model.q, alpha, c1, variant, c3)
}

/// The weighted comparison over a grid for a diagonal problem.
pub fn muckenhoupt_report(
    problem: &Problem,
    grid: &AlphaGrid,
    c1: f64,
    variant: MuckVariant,
    c3: Option<f64>,
) -> Result<ConditionReport> {
    let q = problem.reg.q().ok_or(Error::RequiresPowerLq("muckenhoupt_report"))?;
    let lambda = diagonal_of(&problem.a)?;
    let entries = grid
        .alphas
        .iter()
        .map(|&alpha| muckenhoupt_terms(lambda, &problem.y, &problem.y_delta, q, alpha, c1, variant, c3))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionReport::new(variant.condition(), entries))
}

/// Compares the data propagation error `D_{ξ_α}(x^δ_α, x_α)` with the
/// rule's noise functional at every grid point.
///
/// `Δ` denotes exact minus noisy. The right sides are
/// HD `‖Δp‖²/α`, HR `⟨Δp^{II}, Δp⟩/α`, SQO `⟨Δp − Δp^{II}, Δp^{II}⟩/α`
/// and RQO `ψ_RQO(α) + rqo_const·α`.
pub fn autoreg_check<S: TikhonovSolver + ?Sized>(
    noisy: &Problem,
    grid: &AlphaGrid,
    solver: &S,
    variant: Rule,
    rqo_const: f64,
) -> Result<ConditionReport> {
    if !noisy.reg.subgradient_available() {
        return Err(Error::RequiresPowerLq("autoreg_check"));
    }
    let mode = SweepMode::SequentialWarm;
    let exact = solve_pairs(solver, &noisy.a, &noisy.y, &grid.alphas, &noisy.reg, mode)?;
    let pert = solve_pairs(solver, &noisy.a, &noisy.y_delta, &grid.alphas, &noisy.reg, mode)?;
    let mut entries = Vec::with_capacity(grid.len());
    for ((&alpha, e), d) in grid.alphas.iter().zip(&exact).zip(&pert) {
        let xi = noisy.reg.subgradient(&e.first.x)?;
        let lhs = bregman_distance(&noisy.reg, &d.first.x, &e.first.x, &xi)?;
        let dp = &e.first.p - &d.first.p;
        let dp_ii = &e.second.p - &d.second.p;
        let rhs = match variant {
            Rule::Hd => dp.norm_squared() / alpha,
            Rule::Hr => dp_ii.dot(&dp) / alpha,
            Rule::Sqo => (&dp - &dp_ii).dot(&dp_ii) / alpha,
            Rule::Rqo => {
                psi_rqo(alpha, &noisy.reg, &d.first.x, &d.second.x, &d.first.p, &d.second.p) + rqo_const * alpha
            }
        };
        entries.push(ConditionEntry { alpha, lhs, rhs });
    }
    Ok(ConditionReport::new(Condition::autoreg(variant), entries))
}

/// `(1/α)⟨Δy − Δp, Δp⟩`, an upper bound for `D_{ξ_α}(x^δ_α, x_α)`.
pub fn propagation_bound(alpha: f64, dy: &DVector<f64>, dp: &DVector<f64>) -> Result<f64> {
    check_dim(dy.len(), dp.len())?;
    check_alpha(alpha)?;
    Ok((dy - dp).dot(dp) / alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonnegativityReport {
    pub q: f64,
    pub samples: usize,
    /// Minimum of `Δp^{II}·Δp`.
    pub min_hr: f64,
    /// Minimum of `(Δp − Δp^{II})·Δp^{II}`.
    pub min_sqo: f64,
    pub hr_violations: usize,
    pub sqo_violations: usize,
}

pub const NONNEGATIVITY_SLACK: f64 = 1e-12;

/// Scalar products `Δp^{II}Δp` and `(Δp − Δp^{II})Δp^{II}` for one tuple.
pub fn scalar_products(q: f64, lambda: f64, y: f64, y_delta: f64, alpha: f64) -> Result<(f64, f64)> {
    let l = DVector::from_element(1, lambda);
    let ex = diag_solve(&l, &DVector::from_element(1, y), q, alpha)?;
    let ex_ii = diag_second_from(&l, &DVector::from_element(1, y), q, &ex)?;
    let no = diag_solve(&l, &DVector::from_element(1, y_delta), q, alpha)?;
    let no_ii = diag_second_from(&l, &DVector::from_element(1, y_delta), q, &no)?;
    let dp = ex.p[0] - no.p[0];
    let dp_ii = ex_ii.p[0] - no_ii.p[0];
    Ok((dp_ii * dp, (dp - dp_ii) * dp_ii))
}

/// Samples `λ ∈ [10^{-2}, 1]`, `α ∈ [10^{-4}, 1]` log-uniformly and
/// `y, y^δ ∈ [−2, 2]` uniformly, and records the smallest products.
pub fn nonnegativity_probe(q: f64, samples: usize, seed: u64) -> Result<NonnegativityReport> {
    Regularizer::power_lq(q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = NonnegativityReport {
        q,
        samples,
        min_hr: f64::INFINITY,
        min_sqo: f64::INFINITY,
        hr_violations: 0,
        sqo_violations: 0,
    };
    for _ in 0..samples {
        let lambda = 10f64.powf(rng.random_range(-2.0..=0.0));
        let alpha = 10f64.powf(rng.random_range(-4.0..=0.0));
        let y = rng.random_range(-2.0..=2.0);
        let y_delta = rng.random_range(-2.0..=2.0);
        let (hr, sqo) = scalar_products(q, lambda, y, y_delta, alpha)?;
        report.min_hr = report.min_hr.min(hr);
        report.min_sqo = report.min_sqo.min(sqo);
        report.hr_violations += usize::from(hr < -NONNEGATIVITY_SLACK);
        report.sqo_violations += usize::from(sqo < -NONNEGATIVITY_SLACK);
    }
    Ok(report)
}

/// `ψ(α)/α` along a grid for HD, HR and SQO.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateProbe {
    pub alphas: Vec<f64>,
    pub hd: Vec<f64>,
    pub hr: Vec<f64>,
    pub sqo: Vec<f64>,
}

impl RateProbe {
    pub fn from_curve(curve: &RuleCurve) -> Self {
        let alphas = curve.grid.alphas.clone();
        let per = |r: Rule| -> Vec<f64> { curve.psi(r).iter().zip(&alphas).map(|(v, a)| v / a).collect() };
        Self { hd: per(Rule::Hd), hr: per(Rule::Hr), sqo: per(Rule::Sqo), alphas }
    }

    fn values(&self, rule: Rule) -> Option<&[f64]> {
        match rule {
            Rule::Hd => Some(&self.hd),
            Rule::Hr => Some(&self.hr),
            Rule::Sqo => Some(&self.sqo),
            Rule::Rqo => None,
        }
    }

    /// Infimum of `ψ(α)/α` over the grid; `None` for RQO.
    pub fn infimum(&self, rule: Rule) -> Option<f64> {
        self.values(rule).map(|v| v.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// The condition `α ≤ C ψ(α)` as a report (`lhs = α`, `rhs = ψ`).
    pub fn report(&self, rule: Rule) -> Option<ConditionReport> {
        let condition = match rule {
            Rule::Hd => Condition::RateHd,
            Rule::Hr => Condition::RateHr,
            Rule::Sqo => Condition::RateSqo,
            Rule::Rqo => return None,
        };
        let entries = self
            .alphas
            .iter()
            .zip(self.values(rule)?)
            .map(|(&alpha, &v)| ConditionEntry { alpha, lhs: alpha, rhs: v * alpha })
            .collect();
        Some(ConditionReport::new(condition, entries))
    }
}

pub fn rate_condition_probe<S: TikhonovSolver + ?Sized>(problem: &Problem, grid: &AlphaGrid, solver: &S) -> Result<RateProbe> {
    let curve = crate::rules::rule_curve(problem, grid, solver, SweepMode::SequentialWarm)?;
    Ok(RateProbe::from_curve(&curve))
}

/// The four rule functionals at one `α` for a diagonal `λ`.
pub fn diag_psi(lambda: &DVector<f64>, y_delta: &DVector<f64>, q: f64, alpha: f64) -> Result<[f64; 4]> {
    let first = diag_solve(lambda, y_delta, q, alpha)?;
    let second = diag_second_from(lambda, y_delta, q, &first)?;
    let reg = Regularizer::PowerLq { q };
    Ok([
        psi_hd(alpha, &first.p),
        psi_hr(alpha, &first.p, &second.p),
        psi_sqo(alpha, &first.p, &second.p),
        psi_rqo(alpha, &reg, &first.x, &second.x, &first.p, &second.p),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Satisfied,
    Violated,
    NotCovered,
}

/// Outcome of the decay-rate restriction on the noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Largest admissible `κ`.
    pub kappa_threshold: f64,
    /// `βq + κ(2 − q)`, which must be positive when `q > 2`.
    pub positivity: Option<f64>,
    pub warnings: Vec<String>,
    q: f64,
}

impl RegimeReport {
    /// HR and SQO rely on nonnegativity that needs `q ≥ 3/2`; RQO has no
    /// diagonal analysis.
    pub fn for_rule(&self, rule: Rule) -> Regime {
        match rule {
            Rule::Hd => self.regime,
            Rule::Hr | Rule::Sqo if self.q >= 1.5 => self.regime,
            _ => Regime::NotCovered,
        }
    }
}

fn regime_warnings(beta: f64, nu: f64, kappa: f64) -> Vec<String> {
    let mut w = Vec::new();
    if nu <= beta {
        w.push(format!("data decay nu = {nu} does not exceed beta = {beta}; case-study assumptions not met"));
    }
    if kappa >= nu {
        w.push(format!("noise decay kappa = {kappa} is not below data decay nu = {nu}"));
    }
    w
}

/// Classifies `(β, ν, κ)` for `λ_n ~ n^{-β}`, `|y_n| ~ n^{-ν}` and
/// `|Δy_n| ~ n^{-κ}`.
///
/// `q < 2`: `κ ≤ β + 1/q`. `q > 2`: `κ ≤ (q/2)β + ((2−q)/q)ν + 1/2` and
/// `βq + κ(2−q) > 0`. Both reduce to `κ ≤ β + 1/2` at `q = 2`.
pub fn regime_classify(beta: f64, nu: f64, kappa: f64, q: f64) -> Result<RegimeReport> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
    }
    if !nu.is_finite() {
        return Err(Error::NonFinite("nu"));
    }
    Regularizer::power_lq(q)?;
    let (kappa_threshold, positivity) = if q <= 2.0 {
        (beta + 1.0 / q, None)
    } else {
        (q / 2.0 * beta + (2.0 - q) / q * nu + 0.5, Some(beta * q + kappa * (2.0 - q)))
    };
    let ok = kappa <= kappa_threshold && positivity.is_none_or(|p| p > 0.0);
    Ok(RegimeReport {
        regime: if ok { Regime::Satisfied } else { Regime::Violated },
        kappa_threshold,
        positivity,
        warnings: regime_warnings(beta, nu, kappa),
        q,
    })
}
