use hjb_core::exact::scalar_quadratic_solution;
use hjb_core::model::{RadialTable, ScalarProblem, SourceSpec};
use hjb_core::radial::{
    barrier_c_limit, certify_subsolution_barrier, explosive_barrier_margin, gradient_bound_ratio, solve_radial_bvp,
    subsolution_barrier_excess, BoundaryCondition, InitialGuess, RadialOptions,
};

fn opts(nodes: usize) -> RadialOptions {
    RadialOptions { nodes, ..Default::default() }
}

#[test]
fn quadratic_source_reproduces_closed_form() {
    for n in 1..=3 {
        let problem = ScalarProblem::quadratic(n, 1.0, 0.0).unwrap();
        let exact = scalar_quadratic_solution(1.0, 0.0, n).unwrap();
        for bc in [BoundaryCondition::NeumannExactQuadratic, BoundaryCondition::DirichletExactQuadratic] {
            let sol = solve_radial_bvp(&problem, 10.0, &bc, &opts(600)).unwrap();
            let max_upp = sol.upp.iter().fold(0.0_f64, |m, v| m.max((v - 2.0 * exact.leading).abs()));
            assert!(sol.diagnostics.max_residual <= 1e-8, "N={n} {bc:?}: {}", sol.diagnostics.max_residual);
            assert!(max_upp <= 1e-6, "N={n} {bc:?}: {max_upp}");
            assert!(sol.diagnostics.is_convex && sol.diagnostics.gradient_monotone);
            for (r, u) in sol.grid.nodes().iter().zip(&sol.u) {
                assert!((u - exact.value(*r)).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn cold_start_converges_to_the_same_profile() {
    let problem = ScalarProblem::quadratic(2, 1.0, 0.0).unwrap();
    let exact = scalar_quadratic_solution(1.0, 0.0, 2).unwrap();
    let o = RadialOptions { initial_guess: InitialGuess::Source, ..opts(400) };
    let sol = solve_radial_bvp(&problem, 10.0, &BoundaryCondition::NeumannExactQuadratic, &o).unwrap();
    assert!(sol.diagnostics.iterations > 1);
    let err = sol.grid.nodes().iter().zip(&sol.u).fold(0.0_f64, |m, (r, u)| m.max((u - exact.value(*r)).abs()));
    assert!(err < 1e-7, "{err}");
}

/// `U*(r) = r^2/2 + N/2 + 0.2 cos r` with the source that makes it exact.
fn manufactured(n: usize, r: f64) -> (f64, f64) {
    let nf = n as f64;
    let u = 0.5 * r * r + 0.5 * nf + 0.2 * r.cos();
    let s = r - 0.2 * r.sin();
    let upp = 1.0 - 0.2 * r.cos();
    let lap = if r == 0.0 { nf * upp } else { upp + (nf - 1.0) / r * s };
    (u, -0.5 * lap + 0.5 * s * s + u)
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let radius = 10.0;
    for n in 1..=3 {
        let finest = 599 * 4 + 1;
        let table = RadialTable::sample(radius, finest, |r| manufactured(n, r).1).unwrap();
        let problem = ScalarProblem::new(n, 2.0, SourceSpec::Tabulated(table)).unwrap();
        let bc = BoundaryCondition::DirichletValue(manufactured(n, radius).0);
        let errors: Vec<f64> = [600, 1199, 2397]
            .iter()
            .map(|&m| {
                let sol = solve_radial_bvp(&problem, radius, &bc, &opts(m)).unwrap();
                sol.grid
                    .nodes()
                    .iter()
                    .zip(&sol.u)
                    .fold(0.0_f64, |acc, (r, u)| acc.max((u - manufactured(n, *r).0).abs()))
            })
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..=4.5).contains(&ratio), "N={n}: errors {errors:?}");
        }
    }
}

#[test]
fn certified_barrier_is_a_subsolution_on_a_long_interval() {
    let source = SourceSpec::Quadratic { a: 1.0, b: 0.0 };
    let radii: Vec<f64> = (0..=5000).map(|i| i as f64 * 0.01).collect();
    for n in 1..=3 {
        let c = 0.5 * barrier_c_limit(2.0).unwrap();
        let cert = certify_subsolution_barrier(c, 2.0, n, &source, &radii).unwrap();
        assert!(cert.max_excess <= 0.0);
        // Independent closed form of the excess for p = 2, f = r^2:
        // c(N-1) - C + (2c^2 - c - 1) r^2, maximised over r >= 0 at r = 0.
        let expected_c = (c * n as f64 - c).max(0.0);
        assert!((cert.big_c - expected_c).abs() <= 1e-9 * expected_c.max(1.0), "{} vs {expected_c}", cert.big_c);
    }
}

#[test]
fn upper_barrier_parameters_fail_the_check() {
    let source = SourceSpec::Quadratic { a: 1.0, b: 0.0 };
    let radii: Vec<f64> = (0..=500).map(|i| i as f64 * 0.1).collect();
    let check = subsolution_barrier_excess(0.5, 0.0, 2.0, 2, &source, &radii).unwrap();
    assert!(!check.admissible);
    assert!(check.max_excess > 0.0);
}

#[test]
fn explosive_barrier_sign_depends_on_the_exponent() {
    let radii: Vec<f64> = (0..=490).map(|i| 4.5 + i as f64 * 0.001).collect();
    for n in 1..=3 {
        assert!(explosive_barrier_margin(5.0, 10.0, 2.0, n, &radii).unwrap() >= 0.0);
        assert!(explosive_barrier_margin(5.0, 0.1, 2.0, n, &radii).unwrap() < 0.0);
    }
}

#[test]
fn explosive_margin_matches_finite_differences() {
    // Oracle: evaluate the operator on φ by central differences.
    let (outer, alpha, n) = (5.0_f64, 3.0_f64, 2usize);
    let phi = |r: f64| (outer - r).powf(-alpha);
    let r = 3.0;
    let h = 1e-4;
    let d1 = (phi(r + h) - phi(r - h)) / (2.0 * h);
    let d2 = (phi(r + h) - 2.0 * phi(r) + phi(r - h)) / (h * h);
    let oracle = -0.5 * (d2 + (n as f64 - 1.0) / r * d1) + 0.5 * d1 * d1 + phi(r);
    let margin = explosive_barrier_margin(outer, alpha, 2.0, n, &[r]).unwrap();
    assert!((margin - oracle).abs() < 1e-5 * oracle.abs(), "{margin} vs {oracle}");
}

#[test]
fn gradient_ratio_stays_bounded_as_the_source_grows() {
    let mut ratios = Vec::new();
    for a in [1.0, 100.0] {
        let problem = ScalarProblem::quadratic(1, a, 0.0).unwrap();
        let sol = solve_radial_bvp(&problem, 10.0, &BoundaryCondition::NeumannExactQuadratic, &opts(600)).unwrap();
        ratios.push(gradient_bound_ratio(&sol, 5.0, problem.source()).unwrap());
    }
    assert!(ratios.iter().all(|r| *r > 0.0 && *r < 1.0), "{ratios:?}");
    assert!((ratios[0] - 0.237).abs() < 0.01 && (ratios[1] - 0.286).abs() < 0.01, "{ratios:?}");
}
