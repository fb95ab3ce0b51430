//! Tikhonov minimization and the second Bregman iterate.
//!
//! The second Bregman iterate minimizes
//! `½‖Ax − y^δ‖² + α D_{ξ^δ_α}(x, x^δ_α)`, which has the same minimizer as
//! the plain Tikhonov functional with shifted data `y^δ + p^δ_α`. Every
//! solver here realizes it that way, so no subgradient of `R` is needed.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::operator::LinearOperator;
use crate::regularizer::Regularizer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stop once `‖x_{k+1} − x_k‖ / (1 + ‖x_k‖) ≤ tol`.
    pub tol: f64,
    /// Gradient step; defaults to `1/‖A‖²`.
    pub step: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iters: 5000, tol: 1e-10, step: None }
    }
}

/// Minimizer `x`, residual `p = y_used − Ax` and the subgradient
/// `ξ = A*p/α` read off the optimality condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: DVector<f64>,
    pub p: DVector<f64>,
    pub xi: Option<DVector<f64>>,
    pub alpha: f64,
    pub objective: f64,
    pub iters: usize,
    pub converged: bool,
}

pub trait TikhonovSolver: Sync {
    /// Minimizes `½‖Ax − y‖² + α R(x)`, optionally starting from `warm`.
    fn solve(
        &self,
        a: &LinearOperator,
        y: &DVector<f64>,
        alpha: f64,
        reg: &Regularizer,
        warm: Option<&DVector<f64>>,
    ) -> Result<Solution>;

    /// Second Bregman iterate for the pair `(y_delta, first)`.
    ///
    /// The returned `p` is `y_delta − A x^{II}` and `xi` is
    /// `A*(y_delta + first.p − A x^{II})/α`.
    fn second(
        &self,
        a: &LinearOperator,
        y_delta: &DVector<f64>,
        alpha: f64,
        reg: &Regularizer,
        first: &Solution,
    ) -> Result<Solution> {
        check_dim(y_delta.len(), first.p.len())?;
        let shifted = y_delta + &first.p;
        let s = self.solve(a, &shifted, alpha, reg, Some(&first.x))?;
        Ok(Solution {
            p: &s.p - &first.p,
            ..s
        })
    }
}

pub fn objective(a: &LinearOperator, y: &DVector<f64>, alpha: f64, reg: &Regularizer, x: &DVector<f64>) -> Result<f64> {
    let r = a.apply(x)? - y;
    Ok(0.5 * r.norm_squared() + alpha * reg.value(x))
}

/// `A*p/α`.
pub fn subgradient_from_residual(a: &LinearOperator, p: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput("alpha must be positive".into()));
    }
    Ok(a.adjoint_apply(p)? / alpha)
}

/// FISTA with constant step and gradient-based momentum restart.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fista {
    pub opts: SolveOptions,
}

impl Fista {
    pub fn new(opts: SolveOptions) -> Self {
        Self { opts }
    }
}

impl TikhonovSolver for Fista {
    fn solve(
        &self,
        a: &LinearOperator,
        y: &DVector<f64>,
        alpha: f64,
        reg: &Regularizer,
        warm: Option<&DVector<f64>>,
    ) -> Result<Solution> {
        check_dim(a.output_dim(), y.len())?;
        check_finite("data", y.as_slice())?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidInput("alpha must be positive".into()));
        }
        let step = match self.opts.step {
            Some(s) if s > 0.0 && s.is_finite() => s,
            Some(_) => return Err(Error::InvalidInput("step must be positive".into())),
            None => {
                let norm = a.norm();
                if norm <= 0.0 {
                    return Err(Error::InvalidInput("zero operator".into()));
                }
                1.0 / (norm * norm)
            }
        };
        let mut x = match warm {
            Some(w) => {
                check_dim(a.input_dim(), w.len())?;
                check_finite("warm start", w.as_slice())?;
                w.clone()
            }
            None => DVector::zeros(a.input_dim()),
        };
        let mut z = x.clone();
        let mut t = 1.0_f64;
        let mut iters = 0;
        let mut converged = false;
        let threshold = alpha * step;

        while iters < self.opts.max_iters {
            iters += 1;
            let grad = a.adjoint_apply(&(a.apply(&z)? - y))?;
            let x_next = reg.prox(threshold, &(&z - grad * step));
            let change = (&x_next - &x).norm() / (1.0 + x.norm());

            // Restart the momentum when it points uphill.
            let restart = (&z - &x_next).dot(&(&x_next - &x)) > 0.0;
            let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
            let beta = if restart { 0.0 } else { (t - 1.0) / t_next };
            z = &x_next + (&x_next - &x) * beta;
            x = x_next;
            t = t_next;

            if !change.is_finite() {
                return Err(Error::NonFinite("FISTA iterate"));
            }
            if change <= self.opts.tol {
                converged = true;
                break;
            }
        }
        finish(a, y, alpha, reg, x, iters, converged)
    }
}

pub(crate) fn finish(
    a: &LinearOperator,
    y: &DVector<f64>,
    alpha: f64,
    reg: &Regularizer,
    x: DVector<f64>,
    iters: usize,
    converged: bool,
) -> Result<Solution> {
    let p = y - a.apply(&x)?;
    let xi = a.adjoint_apply(&p)? / alpha;
    let objective = 0.5 * p.norm_squared() + alpha * reg.value(&x);
    Ok(Solution { x, p, xi: Some(xi), alpha, objective, iters, converged })
}

/// Tikhonov solve with default FISTA options.
pub fn fista_tikhonov(
    a: &LinearOperator,
    y_used: &DVector<f64>,
    alpha: f64,
    reg: &Regularizer,
    opts: SolveOptions,
) -> Result<Solution> {
    Fista::new(opts).solve(a, y_used, alpha, reg, None)
}

pub fn bregman_second(
    a: &LinearOperator,
    y_delta: &DVector<f64>,
    alpha: f64,
    reg: &Regularizer,
    first: &Solution,
    opts: SolveOptions,
) -> Result<Solution> {
    Fista::new(opts).second(a, y_delta, alpha, reg, first)
}

/// Tikhonov solution and second Bregman iterate at one `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvePair {
    pub first: Solution,
    pub second: Solution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    /// Largest `α` first, each solve warm-started from its neighbour.
    #[default]
    SequentialWarm,
    /// Independent cold starts, evaluated in parallel.
    ParallelCold,
}

/// Solves the pair at every `α`; output is in the order of `alphas`.
pub fn solve_pairs<S: TikhonovSolver + ?Sized>(
    solver: &S,
    a: &LinearOperator,
    y_delta: &DVector<f64>,
    alphas: &[f64],
    reg: &Regularizer,
    mode: SweepMode,
) -> Result<Vec<SolvePair>> {
    let pair_at = |alpha: f64, warm: Option<&DVector<f64>>| -> Result<SolvePair> {
        let first = solver.solve(a, y_delta, alpha, reg, warm)?;
        let second = solver.second(a, y_delta, alpha, reg, &first)?;
        Ok(SolvePair { first, second })
    };
    match mode {
        SweepMode::ParallelCold => alphas.par_iter().map(|&alpha| pair_at(alpha, None)).collect(),
        SweepMode::SequentialWarm => {
            let mut order: Vec<usize> = (0..alphas.len()).collect();
            order.sort_by(|&i, &j| alphas[j].total_cmp(&alphas[i]));
            let mut out: Vec<Option<SolvePair>> = vec![None; alphas.len()];
            let mut warm: Option<DVector<f64>> = None;
            for i in order {
                let pair = pair_at(alphas[i], warm.as_ref())?;
                warm = Some(pair.first.x.clone());
                out[i] = Some(pair);
            }
            Ok(out.into_iter().map(|p| p.expect("every index visited")).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn zero_data_gives_zero_solution() {
        let a = LinearOperator::dense(dmatrix![1.0, 0.5; 0.2, 1.0]).unwrap();
        for reg in [Regularizer::PowerLq { q: 1.5 }, Regularizer::L1, Regularizer::Tv1d] {
            let s = fista_tikhonov(&a, &dvector![0.0, 0.0], 0.3, &reg, SolveOptions::default()).unwrap();
            assert_eq!(s.x, dvector![0.0, 0.0]);
            assert!(s.converged);
        }
    }

    #[test]
    fn scalar_linear_case() {
        let a = LinearOperator::diagonal(dvector![1.0]).unwrap();
        let reg = Regularizer::PowerLq { q: 2.0 };
        let s = fista_tikhonov(&a, &dvector![1.0], 1.0, &reg, SolveOptions::default()).unwrap();
        assert_relative_eq!(s.x[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(s.p[0], 0.5, epsilon = 1e-9);
        let ii = bregman_second(&a, &dvector![1.0], 1.0, &reg, &s, SolveOptions::default()).unwrap();
        assert_relative_eq!(ii.x[0], 0.75, epsilon = 1e-9);
        assert_relative_eq!(ii.p[0], 0.25, epsilon = 1e-9);
        // ξ^{II} = A*(y + p − A x^{II})/α = 1.5 − 0.75.
        assert_relative_eq!(ii.xi.unwrap()[0], 0.75, epsilon = 1e-9);
    }

    #[test]
    fn interpolating_fit_has_trivial_second_iterate() {
        let a = LinearOperator::diagonal(dvector![1.0]).unwrap();
        let reg = Regularizer::PowerLq { q: 2.0 };
        let first = Solution {
            x: dvector![1.0],
            p: dvector![0.0],
            xi: Some(dvector![0.0]),
            alpha: 1.0,
            objective: 0.0,
            iters: 0,
            converged: true,
        };
        let s = Fista::default();
        let ii = s.second(&a, &dvector![1.0], 1.0, &reg, &first).unwrap();
        // With a zero shift the Bregman step is an ordinary Tikhonov step.
        let plain = s.solve(&a, &dvector![1.0], 1.0, &reg, None).unwrap();
        assert!((ii.x - plain.x).amax() <= 1e-9);
    }

    #[test]
    fn subgradient_from_residual_examples() {
        let a = LinearOperator::diagonal(dvector![1.0]).unwrap();
        assert_eq!(subgradient_from_residual(&a, &dvector![0.0], 1.0).unwrap(), dvector![0.0]);
        assert_eq!(subgradient_from_residual(&a, &dvector![0.5], 1.0).unwrap(), dvector![0.5]);
        assert_eq!(subgradient_from_residual(&a, &dvector![1.0], 1.0).unwrap(), dvector![1.0]);
        assert!(subgradient_from_residual(&a, &dvector![1.0], 0.0).is_err());
    }

    #[test]
    fn solver_errors() {
        let a = LinearOperator::diagonal(dvector![1.0, 0.5]).unwrap();
        let reg = Regularizer::L1;
        let o = SolveOptions::default();
        assert!(fista_tikhonov(&a, &dvector![1.0], 1.0, &reg, o).is_err());
        assert!(fista_tikhonov(&a, &dvector![1.0, f64::NAN], 1.0, &reg, o).is_err());
        assert!(fista_tikhonov(&a, &dvector![1.0, 1.0], -1.0, &reg, o).is_err());
    }

    #[test]
    fn sweep_modes_agree() {
        let a = LinearOperator::dense(dmatrix![1.0, 0.3, 0.0; 0.2, 0.8, 0.1; 0.0, 0.1, 0.6]).unwrap();
        let y = dvector![0.7, -0.2, 0.4];
        let alphas = [1e-2, 3e-2, 0.1, 0.3, 1.0];
        let opts = SolveOptions { max_iters: 20_000, tol: 1e-12, step: None };
        let solver = Fista::new(opts);
        for reg in [Regularizer::PowerLq { q: 1.5 }, Regularizer::L1, Regularizer::Tv1d] {
            let warm = solve_pairs(&solver, &a, &y, &alphas, &reg, SweepMode::SequentialWarm).unwrap();
            let cold = solve_pairs(&solver, &a, &y, &alphas, &reg, SweepMode::ParallelCold).unwrap();
            for (w, c) in warm.iter().zip(&cold) {
                assert!((&w.first.x - &c.first.x).amax() <= 10.0 * opts.tol);
                assert!((&w.second.x - &c.second.x).amax() <= 10.0 * opts.tol);
            }
        }
    }
}
