use nalgebra::DVector;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::operator::{LinearOperator, OperatorKind};
use crate::regularizer::Regularizer;

const NOISE_SLACK: f64 = 1e-12;

/// An inverse-problem instance: operator, exact solution, exact and noisy
/// data, noise level and penalty.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: LinearOperator,
    pub x_dagger: DVector<f64>,
    pub y: DVector<f64>,
    pub y_delta: DVector<f64>,
    pub delta: f64,
    pub reg: Regularizer,
}

impl Problem {
    /// Builds a problem with `y = A x†`; requires `‖y_delta − y‖ ≤ delta`.
    pub fn new(
        a: LinearOperator,
        x_dagger: DVector<f64>,
        y_delta: DVector<f64>,
        delta: f64,
        reg: Regularizer,
    ) -> Result<Self> {
        check_finite("x_dagger", x_dagger.as_slice())?;
        check_finite("y_delta", y_delta.as_slice())?;
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidInput("noise level must be finite and nonnegative".into()));
        }
        let y = a.apply(&x_dagger)?;
        check_dim(a.output_dim(), y_delta.len())?;
        let err = (&y_delta - &y).norm();
        if err > delta * (1.0 + NOISE_SLACK) {
            return Err(Error::InvalidInput(format!(
                "noise norm {err:e} exceeds declared level {delta:e}"
            )));
        }
        Ok(Self { a, x_dagger, y, y_delta, delta, reg })
    }

    /// Exact-data problem: `y_delta = y`, `delta = 0`.
    pub fn exact(a: LinearOperator, x_dagger: DVector<f64>, reg: Regularizer) -> Result<Self> {
        let y = a.apply(&x_dagger)?;
        Self::new(a, x_dagger, y, 0.0, reg)
    }

    /// Same operator and solution with noisy data `y + noise`; the noise
    /// level is `‖noise‖`.
    pub fn with_noise(&self, noise: &DVector<f64>) -> Result<Self> {
        check_dim(self.y.len(), noise.len())?;
        let y_delta = &self.y + noise;
        Ok(Self {
            y_delta,
            delta: noise.norm(),
            ..self.clone()
        })
    }

    /// The exact-data twin of this problem.
    pub fn exact_twin(&self) -> Self {
        Self {
            y_delta: self.y.clone(),
            delta: 0.0,
            ..self.clone()
        }
    }

    pub fn noise(&self) -> DVector<f64> {
        &self.y_delta - &self.y
    }
}

/// Rescales so that `‖A‖ = 1` and `‖x†‖₂ = 1`. Data and noise level scale
/// by `1/(‖A‖·‖x†‖)`, preserving `y = A x†`.
pub fn normalize_problem(p: &Problem) -> Result<Problem> {
    let a_norm = p.a.norm();
    let x_norm = p.x_dagger.norm();
    if a_norm <= 0.0 {
        return Err(Error::InvalidInput("cannot normalize a zero operator".into()));
    }
    if x_norm <= 0.0 {
        return Err(Error::InvalidInput("cannot normalize a zero exact solution".into()));
    }
    let data_scale = 1.0 / (a_norm * x_norm);
    Ok(Problem {
        a: p.a.scaled(1.0 / a_norm)?,
        x_dagger: &p.x_dagger / x_norm,
        y: &p.y * data_scale,
        y_delta: &p.y_delta * data_scale,
        delta: p.delta * data_scale,
        reg: p.reg,
    })
}

/// Source element `w` with `A*w ∈ ∂R(x†)`.
#[derive(Debug, Clone)]
pub struct SourceInfo {
    pub w: DVector<f64>,
    pub w_norm: f64,
}

impl SourceInfo {
    /// Picks `w` first and builds the exact solution it certifies:
    /// `x† = (∂R)^{-1}(A*w)`. Returns the source info and `x†`.
    pub fn construct(a: &LinearOperator, reg: &Regularizer, w: DVector<f64>) -> Result<(Self, DVector<f64>)> {
        let xi = a.adjoint_apply(&w)?;
        let x_dagger = reg.subgradient_inverse(&xi)?;
        let w_norm = w.norm();
        Ok((Self { w, w_norm }, x_dagger))
    }

    /// Solves `A*w = ∂R(x†)` for a diagonal operator.
    pub fn for_diagonal(a: &LinearOperator, reg: &Regularizer, x_dagger: &DVector<f64>) -> Result<Self> {
        let xi = reg.subgradient(x_dagger)?;
        match a.kind() {
            OperatorKind::Diagonal(l) => {
                check_dim(l.len(), xi.len())?;
                let w = xi.component_div(l);
                let w_norm = w.norm();
                Ok(Self { w, w_norm })
            }
            OperatorKind::Dense(_) => Err(Error::InvalidInput("for_diagonal needs a diagonal operator".into())),
        }
    }

    /// `ξ = A*w`.
    pub fn xi(&self, a: &LinearOperator) -> Result<DVector<f64>> {
        a.adjoint_apply(&self.w)
    }
}
