use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prox::{lq_prox, signed_pow, soft_threshold, tv1d_prox};

/// Convex penalty `R` in the Tikhonov functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    /// `R(x) = (1/q)‖x‖_q^q`, `1 < q < ∞`.
    PowerLq { q: f64 },
    /// `R(x) = ‖x‖₁`.
    L1,
    /// `R(x) = Σ|x_{i+1} − x_i|`.
    Tv1d,
}

impl Regularizer {
    pub fn power_lq(q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::InvalidInput(format!("q must satisfy 1 < q < inf, got {q}")));
        }
        Ok(Self::PowerLq { q })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PowerLq { .. } => "power_lq",
            Self::L1 => "l1",
            Self::Tv1d => "tv1d",
        }
    }

    pub fn q(&self) -> Option<f64> {
        match self {
            Self::PowerLq { q } => Some(*q),
            _ => None,
        }
    }

    pub fn subgradient_available(&self) -> bool {
        matches!(self, Self::PowerLq { .. })
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Self::PowerLq { q } => {
                if *q == 2.0 {
                    0.5 * x.norm_squared()
                } else {
                    x.iter().map(|v| v.abs().powf(*q)).sum::<f64>() / q
                }
            }
            Self::L1 => x.lp_norm(1),
            Self::Tv1d => x.as_slice().windows(2).map(|w| (w[1] - w[0]).abs()).sum(),
        }
    }

    /// The unique subgradient `|x_i|^{q-1} sgn(x_i)`; only defined for
    /// `PowerLq`, where `∂R` is single-valued.
    pub fn subgradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Self::PowerLq { q } => Ok(x.map(|v| signed_pow(v, q - 1.0))),
            Self::L1 => Err(Error::SubgradientUndefined("l1")),
            Self::Tv1d => Err(Error::SubgradientUndefined("tv1d")),
        }
    }

    /// Inverse of the subgradient map, `ξ ↦ |ξ|^{1/(q-1)} sgn(ξ)`.
    pub fn subgradient_inverse(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Self::PowerLq { q } => Ok(xi.map(|v| signed_pow(v, 1.0 / (q - 1.0)))),
            _ => Err(Error::RequiresPowerLq("subgradient inverse")),
        }
    }

    /// Prox of `gamma·R`.
    pub fn prox(&self, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::PowerLq { q } => lq_prox(*q, gamma, v),
            Self::L1 => soft_threshold(gamma, v),
            Self::Tv1d => tv1d_prox(gamma, v),
        }
    }
}

pub fn reg_value(reg: &Regularizer, x: &DVector<f64>) -> f64 {
    reg.value(x)
}

pub fn reg_subgradient(reg: &Regularizer, x: &DVector<f64>) -> Result<DVector<f64>> {
    reg.subgradient(x)
}
