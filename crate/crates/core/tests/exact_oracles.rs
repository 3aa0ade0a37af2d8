use hjb_core::exact::{
    beta_residual, eta_residual, long_run_cost, pde_residual_quadratic, regime_coefficients, scalar_quadratic_solution,
    scalar_sensitivities, solve_regime_betas_from, stationary_variance_per_coordinate,
};
use hjb_core::model::{fenchel_conjugate_numeric, stationary_distribution, RegimeModel};
use proptest::prelude::*;

/// Positive root of `2x^2 + x - a` by bisection, independent of the closed form.
fn bisect_leading(a: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, a.max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 2.0 * mid * mid + mid - a > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn scalar_coefficients_satisfy_the_algebraic_relations() {
    let radii: Vec<f64> = (0..100).map(|i| 50.0 * i as f64 / 99.0).collect();
    for (a, b, n) in [(1.0, 0.0, 1), (1.0, 0.0, 2), (2.0, 1.0, 2)] {
        let c = scalar_quadratic_solution(a, b, n).unwrap();
        assert!((2.0 * c.leading * c.leading + c.leading - a).abs() <= 1e-12);
        assert!((c.offset - (b + c.leading * n as f64)).abs() <= 1e-12);
        assert!((c.leading - bisect_leading(a)).abs() <= 1e-12);
        assert!(pde_residual_quadratic(&c, a, b, n, &radii).unwrap() <= 1e-12);
    }
    let c = scalar_quadratic_solution(1.0, 0.0, 2).unwrap();
    assert_eq!((c.leading, c.offset), (0.5, 1.0));
}

#[test]
fn residual_detects_the_rejected_branch() {
    let a: f64 = 1.0;
    let wrong = hjb_core::exact::QuadraticCoefficients { leading: (-1.0 - (1.0 + 8.0 * a).sqrt()) / 4.0, offset: -1.0 };
    // The algebraic relations hold, so the residual vanishes: the branch is
    // excluded by growth, not by the equation.
    assert!(pde_residual_quadratic(&wrong, a, 0.0, 1, &[0.0, 3.0]).unwrap() < 1e-12);
    assert!(wrong.leading < 0.0);
}

#[test]
fn sensitivities_match_central_differences() {
    for (a, n) in [(0.3, 1usize), (1.0, 2), (7.5, 3)] {
        let s = scalar_sensitivities(a, n).unwrap();
        let h = 1e-6 * a;
        let plus = scalar_quadratic_solution(a + h, 0.5, n).unwrap();
        let minus = scalar_quadratic_solution(a - h, 0.5, n).unwrap();
        let dl = (plus.leading - minus.leading) / (2.0 * h);
        let db = (plus.offset - minus.offset) / (2.0 * h);
        assert!((dl - s.d_leading_da).abs() < 1e-7, "{dl} vs {}", s.d_leading_da);
        assert!((db - s.d_offset_da).abs() < 1e-7);
        let bp = scalar_quadratic_solution(a, 0.5 + 1e-3, n).unwrap().offset;
        let bm = scalar_quadratic_solution(a, 0.5 - 1e-3, n).unwrap().offset;
        assert!(((bp - bm) / 2e-3 - s.d_offset_db).abs() < 1e-9);
    }
}

#[test]
fn economic_formulas_agree_with_direct_evaluation() {
    let (a, b, n, sigma) = (1.0, 0.0, 1, 1.0);
    let c = scalar_quadratic_solution(a, b, n).unwrap();
    let var = stationary_variance_per_coordinate(a, sigma).unwrap();
    assert!((var - 0.5).abs() < 1e-15);
    // running cost of the optimal feedback at the stationary second moment
    let direct = (0.5 * (2.0 * c.leading).powi(2) + a) * var * n as f64 + b;
    assert!((long_run_cost(a, b, n, sigma).unwrap() - direct).abs() < 1e-14);
    assert!((direct - 0.75).abs() < 1e-14);
}

#[test]
fn fenchel_grid_search_converges_to_the_closed_form() {
    for (xi, p) in [(vec![0.7], 2.0), (vec![0.5, -0.4], 3.0), (vec![1.2, 0.3], 1.5)] {
        let mut gaps = Vec::new();
        for points in [41, 161, 641] {
            let check = fenchel_conjugate_numeric(&xi, p, 3.0, points).unwrap();
            let gap = check.numeric_inf - check.closed_form;
            assert!(gap >= -1e-12, "grid minimum below the infimum");
            assert!(gap <= check.error_bound, "gap {gap} above bound {}", check.error_bound);
            gaps.push(gap);
        }
        assert!(gaps[2] <= gaps[0]);
    }
}

#[test]
fn fenchel_argmin_is_the_optimal_feedback() {
    let check = fenchel_conjugate_numeric(&[0.6, -0.2], 2.0, 2.0, 801).unwrap();
    for (g, e) in check.grid_argmin.iter().zip(&check.exact_argmin) {
        assert!((g - e).abs() <= 4.0 / 800.0);
    }
}

/// Gauss–Seidel on `2β_j^2 + (δ_j + q_j) β_j = a_j + Σ_{l≠j} α_jl β_l`, each
/// scalar equation solved for its positive root.
fn beta_fixed_point(model: &RegimeModel) -> Vec<f64> {
    let k = model.regimes();
    let mut beta = vec![0.0; k];
    for _ in 0..10_000 {
        for j in 0..k {
            let lin = model.delta[j] + model.exit_rate(j);
            let rhs = model.a[j] + (0..k).filter(|&l| l != j).map(|l| model.generator[j][l] * beta[l]).sum::<f64>();
            beta[j] = (-lin + (lin * lin + 8.0 * rhs).sqrt()) / 4.0;
        }
    }
    beta
}

#[test]
fn regime_coefficients_match_independent_oracles() {
    let model = RegimeModel::two_regime_benchmark();
    let sol = regime_coefficients(&model, 1e-13, 50).unwrap();
    assert!(sol.residual_beta <= 1e-10 && sol.residual_eta <= 1e-10);
    let oracle = beta_fixed_point(&model);
    for (b, o) in sol.beta.iter().zip(&oracle) {
        assert!((b - o).abs() < 1e-10);
    }
    assert!((sol.beta[0] - 0.8566).abs() < 1e-4 && (sol.beta[1] - 0.4167).abs() < 1e-4);

    // Cramer's rule on M η = C.
    let m = model.coupling_matrix();
    let n = model.dimension as f64;
    let c: Vec<f64> = (0..2).map(|j| model.b[j] + model.sigma[j].powi(2) * sol.beta[j] * n).collect();
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let eta = [(c[0] * m[1][1] - m[0][1] * c[1]) / det, (m[0][0] * c[1] - c[0] * m[1][0]) / det];
    assert!((sol.eta[0] - eta[0]).abs() < 1e-12 && (sol.eta[1] - eta[1]).abs() < 1e-12);
    assert!((sol.eta[0] - 1.1900).abs() < 1e-4 && (sol.eta[1] - 1.2796).abs() < 1e-4);
    assert!(beta_residual(&model, &sol.beta).iter().all(|r| r.abs() <= 1e-10));
    assert!(eta_residual(&model, &sol.beta, &sol.eta).iter().all(|r| r.abs() <= 1e-10));
}

#[test]
fn positive_starts_reach_the_same_beta() {
    let model = RegimeModel::two_regime_benchmark();
    let reference = regime_coefficients(&model, 1e-13, 50).unwrap().beta;
    for start in [[0.01, 0.01], [5.0, 0.1], [0.1, 5.0], [20.0, 20.0], [1.0, 1.0]] {
        let beta = solve_regime_betas_from(&model, &start, 1e-13, 200).unwrap();
        assert!((beta[0] - reference[0]).abs() < 1e-10 && (beta[1] - reference[1]).abs() < 1e-10, "{start:?}");
    }
}

#[test]
fn decoupled_system_reduces_to_scalar_formulas() {
    let model = RegimeModel::from_rates(
        vec![1.0, 1.0],
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        vec![1.0, 1.0],
        vec![2.5, 0.5],
        vec![1.0, 0.5],
        2,
    );
    let sol = regime_coefficients(&model, 1e-13, 50).unwrap();
    for j in 0..2 {
        let c = scalar_quadratic_solution(model.a[j], model.b[j], 2).unwrap();
        assert!((sol.beta[j] - c.leading).abs() <= 1e-10);
        assert!((sol.eta[j] - c.offset).abs() <= 1e-10);
    }
}

#[test]
fn two_state_chain_stationary_law() {
    let model = RegimeModel::two_regime_benchmark();
    let pi = stationary_distribution(&model.generator).unwrap();
    let (q12, q21) = (model.generator[0][1], model.generator[1][0]);
    assert!((pi[0] - q21 / (q12 + q21)).abs() < 1e-14);
    assert!((pi[0] - 0.6).abs() < 1e-14 && (pi[1] - 0.4).abs() < 1e-14);
}

proptest! {
    #[test]
    fn quadratic_solution_solves_the_equation(a in 0.01f64..100.0, b in 0.0f64..10.0, n in 1usize..6) {
        let c = scalar_quadratic_solution(a, b, n).unwrap();
        prop_assert!(c.leading > 0.0);
        let radii: Vec<f64> = (0..20).map(|i| i as f64 * 2.5).collect();
        let res = pde_residual_quadratic(&c, a, b, n, &radii).unwrap();
        prop_assert!(res <= 1e-12 * (1.0 + a) * 2500.0);
        prop_assert!((c.leading - bisect_leading(a)).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn leading_coefficient_increases_with_a(a in 0.01f64..100.0, da in 0.001f64..10.0) {
        let lo = scalar_quadratic_solution(a, 0.0, 1).unwrap().leading;
        let hi = scalar_quadratic_solution(a + da, 0.0, 1).unwrap().leading;
        prop_assert!(hi > lo);
    }

    #[test]
    fn random_two_regime_models_have_positive_betas(
        d1 in 0.2f64..3.0, d2 in 0.2f64..3.0, q12 in 0.0f64..2.0, q21 in 0.0f64..2.0,
        a1 in 0.05f64..5.0, a2 in 0.05f64..5.0,
    ) {
        let model = RegimeModel::from_rates(
            vec![d1, d2], vec![vec![0.0, q12], vec![q21, 0.0]], vec![0.5, 1.0], vec![a1, a2], vec![0.1, 0.2], 2,
        );
        let sol = regime_coefficients(&model, 1e-12, 100).unwrap();
        prop_assert!(sol.beta.iter().all(|b| *b > 0.0));
        prop_assert!(sol.residual_beta <= 1e-10 && sol.residual_eta <= 1e-10);
        let oracle = beta_fixed_point(&model);
        prop_assert!((sol.beta[0] - oracle[0]).abs() < 1e-9 && (sol.beta[1] - oracle[1]).abs() < 1e-9);
    }
}
