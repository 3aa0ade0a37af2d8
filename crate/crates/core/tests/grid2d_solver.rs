use hjb_core::exact::scalar_quadratic_solution;
use hjb_core::grid2d::{
    compare_to_exact, radial_symmetry_deviation, solve_fd2d, Fd2dOptions, Field2D, GradientScheme, Grid2D,
};
use hjb_core::model::SourceSpec;

const BINS: usize = 40;

fn benchmark(n: usize, tol: f64) -> (Field2D, hjb_core::grid2d::Fd2dResult) {
    let coeffs = scalar_quadratic_solution(2.0, 1.0, 2).unwrap();
    let grid = Grid2D::new(2.0, n).unwrap();
    let start = Field2D::exact_quadratic(grid, &coeffs);
    let source = SourceSpec::Quadratic { a: 2.0, b: 1.0 };
    let res = solve_fd2d(&source, 2.0, &start, &Fd2dOptions { tol, ..Default::default() }).unwrap();
    (start, res)
}

#[test]
fn radial_benchmark_converges_at_second_order() {
    let coeffs = scalar_quadratic_solution(2.0, 1.0, 2).unwrap();
    let (start, coarse) = benchmark(60, 1e-9);
    let (_, fine) = benchmark(120, 1e-9);
    assert!(coarse.log.is_reliable() && fine.log.is_reliable());
    let e60 = compare_to_exact(&coarse.field, &coeffs).max_abs_err;
    let e120 = compare_to_exact(&fine.field, &coeffs).max_abs_err;
    assert!(e60 <= 0.05, "{e60}");
    let ratio = e60 / e120;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");

    let bound = start.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(coarse.log.max_abs.iter().all(|m| *m <= 10.0 * bound));
}

#[test]
fn default_tolerance_run_and_damping_behaviour() {
    let coeffs = scalar_quadratic_solution(2.0, 1.0, 2).unwrap();
    let (start, res) = benchmark(60, 1e-6);
    assert!(res.log.converged);
    assert!(compare_to_exact(&res.field, &coeffs).max_abs_err <= 0.05);
    let tail = &res.log.rel_updates[res.log.iterations / 2..];
    assert!(tail.windows(2).all(|w| w[1] <= w[0]), "relative updates not monotone in the second half");

    let exact_spread = radial_symmetry_deviation(&start, BINS).unwrap();
    let solved_spread = radial_symmetry_deviation(&res.field, BINS).unwrap();
    assert!(solved_spread.max_bin_spread <= 5.0 * exact_spread.max_bin_spread);
    // A radial field varies only across the annulus width.
    let gradient_bound = 2.0 * coeffs.leading * 2.0 * std::f64::consts::SQRT_2;
    assert!(exact_spread.max_bin_spread <= exact_spread.bin_width * gradient_bound);
    assert!(exact_spread.empty_bins.is_empty());
}

#[test]
fn anisotropic_source_breaks_symmetry() {
    let (start, radial) = benchmark(60, 1e-6);
    let baseline = radial_symmetry_deviation(&start, BINS).unwrap().max_bin_spread;
    assert!(radial.log.converged);

    let source = SourceSpec::AnisotropicQuadratic { cxx: 1.0, cyy: 3.0, cxy: 0.5, c0: 2.0 };
    let grid = Grid2D::new(3.0, 70).unwrap();
    let start = Field2D::source(grid, &source);
    let opts = Fd2dOptions { lambda: 25.0, scheme: GradientScheme::Upwind, ..Default::default() };
    let res = solve_fd2d(&source, 2.0, &start, &opts).unwrap();
    assert!(res.log.is_reliable());
    let spread = radial_symmetry_deviation(&res.field, BINS).unwrap().max_bin_spread;
    assert!(spread >= 10.0 * baseline, "{spread} vs {baseline}");

    // Away from the frame the field follows the whole-plane quadratic
    // solution x'Px + 2 + tr P with 2P^2 + P = Q, Q = [[1, 1/4], [1/4, 3]].
    let q = [[1.0, 0.25], [0.25, 3.0]];
    let p = riccati_2x2(q);
    let centre = res.field.get(34, 34);
    let (x, y) = (grid.coord(34), grid.coord(34));
    let expected = p[0][0] * x * x + 2.0 * p[0][1] * x * y + p[1][1] * y * y + 2.0 + p[0][0] + p[1][1];
    assert!((centre - expected).abs() < 0.15, "{centre} vs {expected}");
}

/// `P = (sqrt(I + 8Q) - I) / 4` via the closed-form square root of a 2x2 SPD
/// matrix: `sqrt(M) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M))`.
fn riccati_2x2(q: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let m = [[1.0 + 8.0 * q[0][0], 8.0 * q[0][1]], [8.0 * q[1][0], 1.0 + 8.0 * q[1][1]]];
    let s = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).sqrt();
    let t = (m[0][0] + m[1][1] + 2.0 * s).sqrt();
    let root = [[(m[0][0] + s) / t, m[0][1] / t], [m[1][0] / t, (m[1][1] + s) / t]];
    [[(root[0][0] - 1.0) / 4.0, root[0][1] / 4.0], [root[1][0] / 4.0, (root[1][1] - 1.0) / 4.0]]
}

#[test]
fn averaged_stencil_is_flagged_on_the_steep_layer() {
    let source = SourceSpec::AnisotropicQuadratic { cxx: 1.0, cyy: 3.0, cxy: 0.5, c0: 2.0 };
    let grid = Grid2D::new(3.0, 40).unwrap();
    let start = Field2D::source(grid, &source);
    let opts = Fd2dOptions { lambda: 25.0, scheme: GradientScheme::Averaged, ..Default::default() };
    // A non-finite iterate is an error, which is also an acceptable outcome.
    if let Ok(res) = solve_fd2d(&source, 2.0, &start, &opts) {
        assert!(!res.log.is_reliable());
    }
}
