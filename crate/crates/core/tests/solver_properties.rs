use heurist_core::prox::{lq_prox, soft_threshold, tv1d_prox};
use heurist_core::rules::{build_grid, rule_curve, Rule};
use heurist_core::solve::{Fista, SolveOptions, SweepMode};
use heurist_core::{LinearOperator, Problem, Regularizer};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vec_pair(n: usize) -> impl Strategy<Value = (DVector<f64>, DVector<f64>)> {
    let v = || prop::collection::vec(-5.0f64..5.0, n).prop_map(DVector::from_vec);
    (v(), v())
}

fn firmly_nonexpansive(f: impl Fn(&DVector<f64>) -> DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let (pa, pb) = (f(a), f(b));
    let d = &pa - &pb;
    d.dot(&(a - b)) + 1e-10 >= d.norm_squared()
}

proptest! {
    #[test]
    fn proxes_are_firmly_nonexpansive(
        (a, b) in (1usize..10).prop_flat_map(vec_pair),
        q in prop::sample::select(vec![1.1, 1.5, 2.0, 3.0, 5.0]),
        lg in -3.0f64..3.0,
    ) {
        let g = 10f64.powf(lg);
        prop_assert!(firmly_nonexpansive(|v| lq_prox(q, g, v), &a, &b));
        prop_assert!(firmly_nonexpansive(|v| soft_threshold(g, v), &a, &b));
        prop_assert!(firmly_nonexpansive(|v| tv1d_prox(g, v), &a, &b));
    }
}

/// Well-conditioned square matrix so FISTA converges to high accuracy.
fn conditioned_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 + 0.1 * i as f64
        } else {
            0.05 * (((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5)
        }
    })
}

#[test]
fn nonsmooth_rule_curves_are_ordered() {
    let n = 12;
    let a = LinearOperator::dense(conditioned_matrix(n)).unwrap();
    let x = DVector::from_fn(n, |i, _| if (3..7).contains(&i) { 1.0 } else { 0.0 });
    let noise = DVector::from_fn(n, |i, _| 0.02 * ((i as f64 * 1.7).sin()));
    let opts = SolveOptions { max_iters: 200_000, tol: 1e-13, step: None };
    for reg in [Regularizer::L1, Regularizer::Tv1d] {
        let p = Problem::exact(a.clone(), x.clone(), reg).unwrap().with_noise(&noise).unwrap();
        let grid = build_grid(&p.a, 5, Some(1e-3), None).unwrap();
        let curve = rule_curve(&p, &grid, &Fista::new(opts), SweepMode::ParallelCold).unwrap();
        assert_eq!(curve.nonconverged(), 0);
        for i in 0..grid.len() {
            let (hd, hr, sqo, rqo) =
                (curve.psi(Rule::Hd)[i], curve.psi(Rule::Hr)[i], curve.psi(Rule::Sqo)[i], curve.psi(Rule::Rqo)[i]);
            assert!(hr >= -1e-10, "{reg:?} i={i}");
            assert!(sqo <= hr + 1e-10);
            assert!(hr <= hd + 1e-10);
            assert!(rqo <= 2.0 * hd + 1e-8);
            let pair = &curve.solutions[i];
            assert!(pair.second.p.norm() <= pair.first.p.norm() + 1e-10);
            assert!(reg.value(&pair.first.x) <= reg.value(&pair.second.x) + 1e-10);
        }
    }
}
