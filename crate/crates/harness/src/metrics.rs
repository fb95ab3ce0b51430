use heurist_core::rules::bregman_distance;
use heurist_core::{Error, LinearOperator, Regularizer};
use nalgebra::DVector;

use crate::error::Result;

pub fn err_l1(x: &DVector<f64>, x_dagger: &DVector<f64>) -> f64 {
    (x - x_dagger).lp_norm(1)
}

/// `D_{ξ†}(x, x†)`.
pub fn err_lq_bregman(reg: &Regularizer, x: &DVector<f64>, x_dagger: &DVector<f64>, xi_dagger: &DVector<f64>) -> Result<f64> {
    if !reg.subgradient_available() {
        return Err(Error::RequiresPowerLq("err_lq_bregman").into());
    }
    Ok(bregman_distance(reg, x, x_dagger, xi_dagger)?)
}

/// `|R(x) − R(x†)| + ‖Ax − y^δ‖²/α`.
pub fn err_tv(
    reg: &Regularizer,
    x: &DVector<f64>,
    x_dagger: &DVector<f64>,
    a: &LinearOperator,
    y_delta: &DVector<f64>,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput("alpha must be positive".into()).into());
    }
    let r = a.apply(x)? - y_delta;
    Ok((reg.value(x) - reg.value(x_dagger)).abs() + r.norm_squared() / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn l1_examples() {
        assert_eq!(err_l1(&dvector![1.0, 2.0], &dvector![1.0, 2.0]), 0.0);
        assert_eq!(err_l1(&dvector![1.0, 0.0], &dvector![0.0, 0.0]), 1.0);
        assert_eq!(err_l1(&dvector![1.0, -1.0], &dvector![0.0, 1.0]), 3.0);
    }

    #[test]
    fn bregman_examples() {
        let q2 = Regularizer::PowerLq { q: 2.0 };
        let xd = dvector![0.5, -1.0];
        assert_eq!(err_lq_bregman(&q2, &xd, &xd, &xd).unwrap(), 0.0);
        let x = dvector![1.5, 0.0];
        let e = err_lq_bregman(&q2, &x, &xd, &xd).unwrap();
        assert!((e - 0.5 * (&x - &xd).norm_squared()).abs() < 1e-15);
        let q3 = Regularizer::PowerLq { q: 3.0 };
        let e = err_lq_bregman(&q3, &dvector![1.0], &dvector![2.0], &dvector![4.0]).unwrap();
        assert!((e - 5.0 / 3.0).abs() < 1e-14);
        assert!(err_lq_bregman(&Regularizer::L1, &xd, &xd, &xd).is_err());
    }

    #[test]
    fn tv_examples() {
        let a = LinearOperator::diagonal(dvector![1.0, 1.0, 1.0]).unwrap();
        let tv = Regularizer::Tv1d;
        let xd = dvector![0.0, 1.0, 1.0];
        assert_eq!(err_tv(&tv, &xd, &xd, &a, &xd, 0.1).unwrap(), 0.0);
        // R(x) = 2, R(x†) = 1, ‖Ax − y^δ‖ = 0.1, α = 0.01.
        let x = dvector![0.0, 1.0, 0.0];
        let y_delta = dvector![0.0, 1.0, 0.1];
        let e = err_tv(&tv, &x, &xd, &a, &y_delta, 0.01).unwrap();
        assert!((e - 2.0).abs() < 1e-12);
        let farther = err_tv(&tv, &x, &xd, &a, &dvector![0.0, 1.0, 0.2], 0.01).unwrap();
        assert!(farther > e);
    }
}
