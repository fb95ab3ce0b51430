//! Proximal operators.
//!
//! The scalar map `h_{q,γ}(x) = x + γ|x|^{q-1} sgn(x)` is an odd, strictly
//! increasing bijection of the reals; its inverse is the proximal operator of
//! `γ·(1/q)|·|^q`. Every ℓ^q prox in this crate goes through
//! [`h_q_invert`].

use nalgebra::DVector;

const MAX_ROOT_ITERS: usize = 200;

/// `sgn` with `sgn(0) = 0`.
#[inline]
pub(crate) fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `|x|^e · sgn(x)`, zero at the origin.
#[inline]
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e) * sgn(x)
    }
}

pub fn h_q_eval(q: f64, gamma: f64, x: f64) -> f64 {
    x + gamma * signed_pow(x, q - 1.0)
}

/// Unique `x` with `h_q_eval(q, gamma, x) == y`.
///
/// Solved on `|y|` and mirrored, so the result is exactly odd in `y`.
pub fn h_q_invert(q: f64, gamma: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if q == 2.0 {
        return y / (1.0 + gamma);
    }
    let root = invert_positive(q, gamma, y.abs());
    if y < 0.0 {
        -root
    } else {
        root
    }
}

/// Bracketed Newton for `x + γ x^{q-1} = t`, `t > 0`.
fn invert_positive(q: f64, gamma: f64, t: f64) -> f64 {
    let e = q - 1.0;
    let h = |x: f64| x + gamma * x.powf(e);
    // h(x) ≥ max(x, γx^{q-1}) bounds the root from above, and
    // h(x) ≤ 2·max(x, γx^{q-1}) from below.
    let mut hi = t.min((t / gamma).powf(1.0 / e));
    let mut lo = (0.5 * t).min((0.5 * t / gamma).powf(1.0 / e));
    if !(hi.is_finite() && hi > 0.0) {
        hi = t;
    }
    if !(lo.is_finite() && lo >= 0.0 && lo <= hi) {
        lo = 0.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ROOT_ITERS {
        let r = h(x) - t;
        if r == 0.0 {
            return x;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
        let slope = 1.0 + gamma * e * x.powf(e - 1.0);
        let newton = x - r / slope;
        let next = if newton > lo && newton < hi && slope.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= f64::EPSILON * x.abs() {
            x = next;
            break;
        }
        x = next;
    }
    // Return whichever bracket point fits best.
    [x, lo, hi]
        .into_iter()
        .filter(|v| *v > 0.0)
        .min_by(|a, b| (h(*a) - t).abs().total_cmp(&(h(*b) - t).abs()))
        .unwrap_or(x)
}

/// Componentwise prox of `γ·(1/q)‖·‖_q^q`: solves `x + γ|x|^{q-1}sgn(x) = v`.
pub fn lq_prox(q: f64, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
    if q == 2.0 {
        return v / (1.0 + gamma);
    }
    v.map(|vi| h_q_invert(q, gamma, vi))
}

/// Prox of `γ‖·‖₁`.
pub fn soft_threshold(gamma: f64, v: &DVector<f64>) -> DVector<f64> {
    v.map(|vi| sgn(vi) * (vi.abs() - gamma).max(0.0))
}

/// Prox of `γ Σ|x_{i+1} - x_i|`, computed exactly by the taut-string
/// method (Condat's direct formulation).
pub fn tv1d_prox(gamma: f64, v: &DVector<f64>) -> DVector<f64> {
    let input = v.as_slice();
    let n = input.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return DVector::from_vec(out);
    }
    if n == 1 || gamma <= 0.0 {
        return v.clone();
    }
    let lambda = gamma;
    let two_lambda = 2.0 * lambda;
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = input[0] - lambda;
    let mut vmax = input[0] + lambda;
    loop {
        while k == n - 1 {
            if umin < 0.0 {
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = input[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = input[k0];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                while k0 <= k {
                    out[k0] = vmin;
                    k0 += 1;
                }
                return DVector::from_vec(out);
            }
        }
        umin += input[k + 1] - vmin;
        if umin < -lambda {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = input[k0];
            vmax = vmin + two_lambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        umax += input[k + 1] - vmax;
        if umax > lambda {
            loop {
                out[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmax = input[k0];
            vmin = vmax - two_lambda;
            umin = lambda;
            umax = -lambda;
        } else {
            k += 1;
            if umin >= lambda {
                kminus = k;
                vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
                umin = lambda;
            }
            if umax <= -lambda {
                kplus = k;
                vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
                umax = -lambda;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn tv_objective(gamma: f64, v: &[f64], x: &[f64]) -> f64 {
        let fit: f64 = v.iter().zip(x).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
        let tv: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        fit + gamma * tv
    }

    #[test]
    fn h_q_examples() {
        assert_eq!(h_q_eval(2.0, 1.0, 3.0), 6.0);
        assert_eq!(h_q_eval(1.5, 1.0, 1.0), 2.0);
        assert_eq!(h_q_eval(3.0, 0.5, -2.0), -4.0);
    }

    #[test]
    fn h_q_invert_examples() {
        for q in [1.1, 1.5, 2.0, 3.0] {
            assert_eq!(h_q_invert(q, 0.7, 0.0), 0.0);
        }
        assert_relative_eq!(h_q_invert(1.5, 1.0, 2.0), 1.0, max_relative = 1e-14);
        assert_eq!(h_q_invert(2.0, 3.0, 8.0), 2.0);
    }

    #[test]
    fn extreme_weights_still_invert() {
        // Roots span many orders of magnitude here.
        for (q, gamma, y) in [(1.1, 1e4, 1e-3), (5.0, 1e4, 10.0), (1.1, 1e-4, 10.0), (5.0, 1e-4, 1e-9)] {
            let x = h_q_invert(q, gamma, y);
            assert!((h_q_eval(q, gamma, x) - y).abs() <= 1e-12 * (1.0 + y.abs()), "q={q} gamma={gamma} y={y}");
        }
    }

    #[test]
    fn lq_prox_examples() {
        assert_eq!(lq_prox(1.5, 1.0, &dvector![0.0, 0.0]), dvector![0.0, 0.0]);
        assert_eq!(lq_prox(2.0, 1.0, &dvector![2.0, -4.0]), dvector![1.0, -2.0]);
        assert_relative_eq!(lq_prox(1.5, 1.0, &dvector![2.0])[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(0.5, &dvector![2.0]), dvector![1.5]);
        assert_eq!(soft_threshold(1.0, &dvector![0.5, -0.5]), dvector![0.0, 0.0]);
        assert_eq!(soft_threshold(1.0, &dvector![-3.0]), dvector![-2.0]);
    }

    #[test]
    fn tv_trivial_inputs() {
        assert_eq!(tv1d_prox(3.0, &dvector![1.7]), dvector![1.7]);
        assert_eq!(tv1d_prox(0.3, &dvector![2.0, 2.0, 2.0, 2.0]), dvector![2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn tv_three_point_against_grid() {
        // Exact grid minimum on [-1, 2]^3 with spacing 1e-3, computed by
        // dynamic programming along the chain.
        let gamma = 0.4;
        let v = [0.0, 1.0, 0.0];
        let grid: Vec<f64> = (0..=3000).map(|i| -1.0 + i as f64 * 1e-3).collect();
        let end_cost = |vi: f64, x: f64| -> f64 {
            grid.iter().map(|&g| 0.5 * (g - vi) * (g - vi) + gamma * (x - g).abs()).fold(f64::INFINITY, f64::min)
        };
        let best = grid
            .iter()
            .map(|&x2| 0.5 * (x2 - v[1]).powi(2) + end_cost(v[0], x2) + end_cost(v[2], x2))
            .fold(f64::INFINITY, f64::min);
        let x = tv1d_prox(gamma, &DVector::from_row_slice(&v));
        assert!(tv_objective(gamma, &v, x.as_slice()) <= best + 1e-6);
        // γ = 0.4 exceeds the largest admissible dual value 1/3, so the
        // signal collapses to its mean.
        for xi in x.iter() {
            assert_relative_eq!(*xi, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    /// KKT conditions of the TV prox: with `r = v - x` and running sums
    /// `s_k = Σ_{i≤k} r_i`, we need `|s_k| ≤ γ`, `s_{n-1} = 0`, and
    /// `s_k = -γ sgn(x_{k+1} - x_k)` whenever the jump is nonzero.
    fn tv_kkt_violation(gamma: f64, v: &[f64], x: &[f64]) -> f64 {
        let n = v.len();
        let mut s = 0.0;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            s += v[k] - x[k];
            if k + 1 < n {
                worst = worst.max((s.abs() - gamma).max(0.0));
                let jump = x[k + 1] - x[k];
                if jump.abs() > 1e-9 {
                    worst = worst.max((s + gamma * jump.signum()).abs());
                }
            } else {
                worst = worst.max(s.abs());
            }
        }
        worst
    }

    proptest! {
        #[test]
        fn round_trip(q in prop::sample::select(vec![1.1, 1.5, 2.0, 3.0, 5.0]),
                      gamma in prop::sample::select(vec![1e-4, 1.0, 1e4]),
                      y in -10.0f64..10.0) {
            let x = h_q_invert(q, gamma, y);
            prop_assert!((h_q_eval(q, gamma, x) - y).abs() <= 1e-10 * (1.0 + y.abs()));
            prop_assert_eq!(h_q_invert(q, gamma, -y), -x);
        }

        #[test]
        fn scalar_prox_is_monotone(q in 1.05f64..6.0, gamma in 1e-3f64..1e3, a in -10.0f64..10.0, b in -10.0f64..10.0) {
            prop_assume!(a < b);
            prop_assert!(h_q_invert(q, gamma, a) <= h_q_invert(q, gamma, b));
        }

        #[test]
        fn q2_prox_is_linear(gamma in 1e-3f64..1e3, v in prop::collection::vec(-10.0f64..10.0, 1..8)) {
            let v = DVector::from_vec(v);
            let x = lq_prox(2.0, gamma, &v);
            let expected = &v / (1.0 + gamma);
            prop_assert!((x - expected).amax() <= 1e-12);
        }

        #[test]
        fn tv_prox_satisfies_kkt(gamma in 0.01f64..3.0, v in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            let x = tv1d_prox(gamma, &DVector::from_vec(v.clone()));
            prop_assert!(tv_kkt_violation(gamma, &v, x.as_slice()) <= 1e-9);
        }
    }
}
