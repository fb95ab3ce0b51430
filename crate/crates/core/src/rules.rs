//! The heuristic functionals and α selection.
//!
//! All four functionals are evaluated from stored residuals:
//!
//! * HD: `‖p‖²/α`
//! * HR: `⟨p^{II}, p⟩/α`
//! * SQO: `⟨p − p^{II}, p^{II}⟩/α`, the symmetric Bregman distance between
//!   the Tikhonov solution and the second Bregman iterate
//! * RQO: `R(x^{II}) − R(x) + ⟨p, p^{II} − p⟩/α`, the Bregman distance
//!   `D_{ξ}(x^{II}, x)` at the Tikhonov subgradient

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::operator::LinearOperator;
use crate::problem::Problem;
use crate::regularizer::Regularizer;
use crate::solve::{solve_pairs, SolvePair, SweepMode, TikhonovSolver};

const SUBGRADIENT_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Rule {
    Hd,
    Hr,
    Sqo,
    Rqo,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::Hd, Rule::Hr, Rule::Sqo, Rule::Rqo];

    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::Hd => "HD",
            Rule::Hr => "HR",
            Rule::Sqo => "SQO",
            Rule::Rqo => "RQO",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HD" => Ok(Rule::Hd),
            "HR" => Ok(Rule::Hr),
            "SQO" => Ok(Rule::Sqo),
            "RQO" => Ok(Rule::Rqo),
            other => Err(Error::InvalidInput(format!("unknown rule {other:?}"))),
        }
    }
}

pub fn psi_hd(alpha: f64, p: &DVector<f64>) -> f64 {
    p.norm_squared() / alpha
}

pub fn psi_hr(alpha: f64, p: &DVector<f64>, p_ii: &DVector<f64>) -> f64 {
    p_ii.dot(p) / alpha
}

pub fn psi_sqo(alpha: f64, p: &DVector<f64>, p_ii: &DVector<f64>) -> f64 {
    (p - p_ii).dot(p_ii) / alpha
}

pub fn psi_rqo(
    alpha: f64,
    reg: &Regularizer,
    x: &DVector<f64>,
    x_ii: &DVector<f64>,
    p: &DVector<f64>,
    p_ii: &DVector<f64>,
) -> f64 {
    reg.value(x_ii) - reg.value(x) + p.dot(&(p_ii - p)) / alpha
}

/// `D_{ξ₂}(x₁, x₂) = R(x₁) − R(x₂) − ⟨ξ₂, x₁ − x₂⟩`.
///
/// For `PowerLq` the subgradient is unique and `xi2` is checked against it.
pub fn bregman_distance(reg: &Regularizer, x1: &DVector<f64>, x2: &DVector<f64>, xi2: &DVector<f64>) -> Result<f64> {
    check_dim(x1.len(), x2.len())?;
    check_dim(x1.len(), xi2.len())?;
    if reg.subgradient_available() {
        let exact = reg.subgradient(x2)?;
        let scale = 1.0 + exact.amax();
        if (&exact - xi2).amax() > SUBGRADIENT_CHECK_TOL * scale {
            return Err(Error::InvalidInput("xi2 is not a subgradient of R at x2".into()));
        }
    }
    if let Regularizer::PowerLq { q } = reg {
        return Ok(power_bregman(*q, x1, x2, xi2));
    }
    Ok(reg.value(x1) - reg.value(x2) - xi2.dot(&(x1 - x2)))
}

/// Componentwise sum for `(1/q)|·|^q`; keeps each term's cancellation local.
fn power_bregman(q: f64, x1: &DVector<f64>, x2: &DVector<f64>, xi2: &DVector<f64>) -> f64 {
    x1.iter()
        .zip(x2.iter())
        .zip(xi2.iter())
        .map(|((&a, &b), &s)| {
            if q == 2.0 {
                // ξ₂ = x₂ exactly here, so this is ½(a − b)² without cancellation.
                0.5 * (a - b) * (a - b) + (b - s) * (a - b)
            } else {
                (a.abs().powf(q) - b.abs().powf(q)) / q - s * (a - b)
            }
        })
        .sum()
}

pub fn sym_bregman_distance(x1: &DVector<f64>, x2: &DVector<f64>, xi1: &DVector<f64>, xi2: &DVector<f64>) -> Result<f64> {
    check_dim(x1.len(), x2.len())?;
    check_dim(xi1.len(), xi2.len())?;
    check_dim(x1.len(), xi1.len())?;
    Ok((xi1 - xi2).dot(&(x1 - x2)))
}

/// Log-equispaced, strictly increasing grid of regularization parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaGrid {
    pub alphas: Vec<f64>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub points_per_decade: usize,
}

impl AlphaGrid {
    pub fn new(alpha_min: f64, alpha_max: f64, points_per_decade: usize) -> Result<Self> {
        if !(alpha_min.is_finite() && alpha_min > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha_min must be positive, got {alpha_min:e}; supply it explicitly"
            )));
        }
        if !alpha_max.is_finite() {
            return Err(Error::InvalidInput("alpha_max must be finite".into()));
        }
        if alpha_min >= alpha_max {
            return Err(Error::InvalidInput(format!(
                "alpha_min {alpha_min:e} must be below alpha_max {alpha_max:e}"
            )));
        }
        if points_per_decade == 0 {
            return Err(Error::InvalidInput("points_per_decade must be at least 1".into()));
        }
        let (lo, hi) = (alpha_min.log10(), alpha_max.log10());
        let decades = hi - lo;
        // Guard against log10 rounding turning an exact decade count into one
        // extra point.
        let steps = ((decades * points_per_decade as f64) - 1e-9).ceil().max(2.0) as usize;
        let mut alphas: Vec<f64> = (0..=steps)
            .map(|i| 10f64.powf(lo + decades * i as f64 / steps as f64))
            .collect();
        alphas[0] = alpha_min;
        alphas[steps] = alpha_max;
        Ok(Self { alphas, alpha_min, alpha_max, points_per_decade })
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// Grid index of `alpha`, if it is a grid point.
    pub fn index_of(&self, alpha: f64) -> Option<usize> {
        self.alphas.iter().position(|&a| a == alpha)
    }
}

/// Defaults: `α_max = ‖A‖²`, `α_min` = smallest eigenvalue of `A*A`.
pub fn build_grid(
    a: &LinearOperator,
    points_per_decade: usize,
    alpha_min_override: Option<f64>,
    alpha_max_override: Option<f64>,
) -> Result<AlphaGrid> {
    let alpha_max = match alpha_max_override {
        Some(v) => v,
        None => a.norm().powi(2),
    };
    let alpha_min = match alpha_min_override {
        Some(v) => v,
        None => a.sigma_min()?,
    };
    AlphaGrid::new(alpha_min, alpha_max, points_per_decade)
}

/// Interior global minimum: both endpoints are excluded, ties go to the
/// smaller `α`, and non-finite values are skipped. Returns `(index, α)`.
pub fn select_alpha(curve_psi: &[f64], grid: &AlphaGrid) -> Result<(usize, f64)> {
    check_dim(grid.len(), curve_psi.len())?;
    if curve_psi.len() < 3 {
        return Err(Error::InvalidInput("selection needs at least three grid points".into()));
    }
    let mut best: Option<usize> = None;
    for i in 1..curve_psi.len() - 1 {
        let v = curve_psi[i];
        if !v.is_finite() {
            continue;
        }
        match best {
            Some(b) if curve_psi[b] <= v => {}
            _ => best = Some(i),
        }
    }
    let i = best.ok_or(Error::NoInteriorMinimum)?;
    Ok((i, grid.alphas[i]))
}

/// ψ values of all four rules along a grid, with the selected parameters.
#[derive(Debug, Clone)]
pub struct RuleCurve {
    pub grid: AlphaGrid,
    psi: [Vec<f64>; 4],
    alpha_star: [Option<(usize, f64)>; 4],
    pub solutions: Vec<SolvePair>,
}

impl RuleCurve {
    /// Builds the curve from solved pairs, one per grid point.
    pub fn from_pairs(grid: AlphaGrid, reg: &Regularizer, solutions: Vec<SolvePair>) -> Result<Self> {
        check_dim(grid.len(), solutions.len())?;
        let mut psi: [Vec<f64>; 4] = Default::default();
        for (alpha, pair) in grid.alphas.iter().zip(&solutions) {
            let (p, p_ii) = (&pair.first.p, &pair.second.p);
            psi[Rule::Hd.index()].push(psi_hd(*alpha, p));
            psi[Rule::Hr.index()].push(psi_hr(*alpha, p, p_ii));
            psi[Rule::Sqo.index()].push(psi_sqo(*alpha, p, p_ii));
            psi[Rule::Rqo.index()].push(psi_rqo(*alpha, reg, &pair.first.x, &pair.second.x, p, p_ii));
        }
        let alpha_star = Rule::ALL.map(|r| select_alpha(&psi[r.index()], &grid).ok());
        Ok(Self { grid, psi, alpha_star, solutions })
    }

    pub fn psi(&self, rule: Rule) -> &[f64] {
        &self.psi[rule.index()]
    }

    /// `(grid index, α*)`, or an error if the rule has no interior minimum.
    pub fn alpha_star(&self, rule: Rule) -> Result<(usize, f64)> {
        self.alpha_star[rule.index()].ok_or(Error::NoInteriorMinimum)
    }

    pub fn nonconverged(&self) -> usize {
        self.solutions
            .iter()
            .map(|s| usize::from(!s.first.converged) + usize::from(!s.second.converged))
            .sum()
    }
}

/// Solves the Tikhonov problem and the second Bregman iterate at every grid
/// point for the problem's noisy data, then evaluates all four functionals.
pub fn rule_curve<S: TikhonovSolver + ?Sized>(
    problem: &Problem,
    grid: &AlphaGrid,
    solver: &S,
    mode: SweepMode,
) -> Result<RuleCurve> {
    let pairs = solve_pairs(solver, &problem.a, &problem.y_delta, &grid.alphas, &problem.reg, mode)?;
    RuleCurve::from_pairs(grid.clone(), &problem.reg, pairs)
}
