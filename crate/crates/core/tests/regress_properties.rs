use proptest::prelude::*;

use transit_sls::frame::ModelFrame;
use transit_sls::regress::{
    adjusted_r_squared, fit_ols, mae, r_squared, rmse, solve_least_squares, t_test, CriticalValues,
    DesignMatrix,
};

/// Exact normal-equation solution for integer data with k <= 3, by Cramer's
/// rule in i128. Returns `None` when X'X is singular.
fn normal_equations_oracle(rows: &[Vec<i64>], y: &[i64]) -> Option<Vec<f64>> {
    let k = rows[0].len();
    let mut a = vec![vec![0i128; k]; k];
    let mut b = vec![0i128; k];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            b[i] += r[i] as i128 * yi as i128;
            for j in 0..k {
                a[i][j] += r[i] as i128 * r[j] as i128;
            }
        }
    }
    fn det(m: &[Vec<i128>]) -> i128 {
        match m.len() {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            3 => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
            _ => unreachable!(),
        }
    }
    let d = det(&a);
    if d == 0 {
        return None;
    }
    Some(
        (0..k)
            .map(|j| {
                let mut aj = a.clone();
                for i in 0..k {
                    aj[i][j] = b[i];
                }
                det(&aj) as f64 / d as f64
            })
            .collect(),
    )
}

fn integer_problem() -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<i64>)> {
    (1usize..=3).prop_flat_map(|k| {
        ((k + 1)..=12).prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(-9i64..=9, k), n),
                prop::collection::vec(-20i64..=20, n),
            )
        })
    })
}

fn float_problem() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=5).prop_flat_map(|k| {
        ((k + 2)..=40).prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(-100.0f64..100.0, k), n),
                prop::collection::vec(-100.0f64..100.0, n),
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn qr_matches_exact_normal_equations((rows, y) in integer_problem()) {
        let oracle = normal_equations_oracle(&rows, &y);
        prop_assume!(oracle.is_some());
        let oracle = oracle.unwrap();
        let design = DesignMatrix::from_rows(
            &rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect::<Vec<_>>(),
        ).unwrap();
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let ls = solve_least_squares(&design, &yf).unwrap();
        for (got, want) in ls.coefficients.iter().zip(&oracle) {
            prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_design((rows, y) in float_problem()) {
        let design = DesignMatrix::from_rows(&rows).unwrap();
        let Ok(ls) = solve_least_squares(&design, &y) else { return Ok(()); };
        let resid: Vec<f64> = rows.iter().zip(&y)
            .map(|(r, yi)| yi - r.iter().zip(&ls.coefficients).map(|(x, b)| x * b).sum::<f64>())
            .collect();
        let max_x = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_y = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = max_x * max_y.max(1.0) * y.len() as f64;
        for col in design.columns() {
            let dot: f64 = col.iter().zip(&resid).map(|(x, e)| x * e).sum();
            prop_assert!(dot.abs() <= 1e-8 * scale, "|X'e| = {dot}, scale {scale}");
        }
    }

    #[test]
    fn rmse_dominates_mae(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..60)
    ) {
        let (obs, fit): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = mae(&obs, &fit).unwrap();
        let r = rmse(&obs, &fit).unwrap();
        prop_assert!(r >= m * (1.0 - 1e-12));
        prop_assert!(m >= 0.0);
    }

    #[test]
    fn rmse_equals_mae_for_equal_magnitudes(
        obs in prop::collection::vec(-1e3f64..1e3, 1..40),
        c in 0.0f64..10.0,
        signs in prop::collection::vec(any::<bool>(), 40),
    ) {
        let fit: Vec<f64> = obs.iter().zip(&signs).map(|(y, s)| if *s { y - c } else { y + c }).collect();
        let m = mae(&obs, &fit).unwrap();
        let r = rmse(&obs, &fit).unwrap();
        prop_assert!((r - m).abs() <= 1e-9 * (1.0 + m));
    }

    #[test]
    fn adjusted_r2_ignores_affine_rescaling(
        pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 4..40),
        a in prop_oneof![-20.0f64..-0.1, 0.1f64..20.0],
        b in -100.0f64..100.0,
    ) {
        let (obs, fit): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = adjusted_r_squared(&obs, &fit, 2);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let o2: Vec<f64> = obs.iter().map(|v| a * v + b).collect();
        let f2: Vec<f64> = fit.iter().map(|v| a * v + b).collect();
        let scaled = adjusted_r_squared(&o2, &f2, 2).unwrap();
        prop_assert!((scaled - base).abs() <= 1e-9 * (1.0 + base.abs()));
    }

    #[test]
    fn nested_models_never_lose_r2(
        rows in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 6..50)
    ) {
        let x1: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let x2: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.2 + 0.5 * r.0).collect();
        let small = ModelFrame::from_columns("y", y.clone(), vec![("x1".into(), x1.clone())]).unwrap();
        let big = ModelFrame::from_columns("y", y, vec![("x1".into(), x1), ("x2".into(), x2)]).unwrap();
        let (Ok(s), Ok(b)) = (fit_ols(&small, &CriticalValues::default()), fit_ols(&big, &CriticalValues::default())) else {
            return Ok(());
        };
        prop_assert!(b.diagnostics.r_squared >= s.diagnostics.r_squared - 1e-12);
    }

    #[test]
    fn t_decision_is_scale_free(
        est in -100.0f64..100.0,
        se in 1e-3f64..50.0,
        crit in 0.5f64..4.0,
        c in 1e-3f64..1e3,
    ) {
        let a = t_test(est, se, crit).unwrap();
        let b = t_test(est * c, se * c, crit).unwrap();
        prop_assert_eq!(a.significant, b.significant);
    }

    #[test]
    fn perfect_r2_only_for_zero_residuals(
        obs in prop::collection::vec(-100.0f64..100.0, 4..30),
        perturb in prop::collection::vec(prop_oneof![Just(0.0), 1e-4f64..1.0, -1.0f64..-1e-4], 30),
    ) {
        let sst_nonzero = obs.iter().any(|v| (v - obs[0]).abs() > 1e-3);
        prop_assume!(sst_nonzero);
        let fit: Vec<f64> = obs.iter().zip(&perturb).map(|(y, p)| y + p).collect();
        let all_zero = perturb[..obs.len()].iter().all(|p| *p == 0.0);
        let r2 = adjusted_r_squared(&obs, &fit, 1).unwrap();
        prop_assert_eq!(r2 == 1.0, all_zero);
    }
}

#[test]
fn unadjusted_r2_is_bounded_for_ols() {
    let frame = ModelFrame::from_columns(
        "y",
        vec![1.0, 3.0, 2.0, 5.0, 4.0],
        vec![("x".into(), vec![1.0, 2.0, 3.0, 4.0, 5.0])],
    )
    .unwrap();
    let fit = fit_ols(&frame, &CriticalValues::default()).unwrap();
    let r2 = r_squared(frame.response(), &fit.fitted).unwrap();
    assert!((0.0..=1.0).contains(&r2));
    assert_eq!(r2, fit.diagnostics.r_squared);
    assert!(fit.diagnostics.adjusted_r_squared < r2);
}
