use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{HarnessError, Result};

/// Seeded Gaussian noise, optionally damped by `i^{-κ}`, rescaled so that
/// `‖e‖ = delta_rel·‖y‖`.
pub fn gen_noise(y: &DVector<f64>, delta_rel: f64, kappa: Option<f64>, seed: u64) -> Result<DVector<f64>> {
    let y_norm = y.norm();
    if y_norm == 0.0 {
        return Err(HarnessError::Config("relative noise needs nonzero data".into()));
    }
    gen_noise_abs(y.len(), delta_rel * y_norm, kappa, seed)
}

/// Same as [`gen_noise`] with `‖e‖ = delta` directly.
pub fn gen_noise_abs(dim: usize, delta: f64, kappa: Option<f64>, seed: u64) -> Result<DVector<f64>> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(HarnessError::Config(format!("noise level must be positive, got {delta:e}")));
    }
    if dim == 0 {
        return Err(HarnessError::Config("noise dimension is zero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = DVector::from_fn(dim, |i, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        match kappa {
            Some(k) => g / ((i + 1) as f64).powf(k),
            None => g,
        }
    });
    let n = e.norm();
    if n == 0.0 {
        return Err(HarnessError::Numerical("noise draw vanished".into()));
    }
    e *= delta / n;
    Ok(e)
}

/// Seed for draw `repeat` at noise level `level`.
pub fn level_seed(seed: u64, level: usize, repeat: usize) -> u64 {
    seed.wrapping_add((level as u64) << 32).wrapping_add(repeat as u64)
}
