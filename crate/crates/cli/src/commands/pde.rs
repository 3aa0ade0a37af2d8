use std::path::Path;

use hjb_core::exact::{scalar_quadratic_solution, QuadraticCoefficients};
use hjb_core::grid2d::{
    compare_to_exact, radial_symmetry_deviation, solve_fd2d, Fd2dOptions, Fd2dResult, Field2D, GradientScheme, Grid2D,
};
use hjb_core::model::{RadialTable, ScalarProblem, SourceSpec};
use hjb_core::monotone::{default_eps_schedule, fit_convergence_rate, run_expanding_balls, SchemeParams};
use hjb_core::radial::{
    barrier_c_limit, certify_subsolution_barrier, explosive_barrier_margin, solve_radial_bvp, BoundaryCondition,
    RadialOptions, RadialSolution,
};

use super::{linspace, sci, Outcome};
use crate::config::{BarrierConfig, Grid2dConfig, MonotoneConfig, RadialBoundary, RadialConfig, StencilChoice};
use crate::output::{format_value, header, write_csv};
use crate::summary::Report;

fn write_radial(out: &Path, file: &str, sol: &RadialSolution) -> Outcome {
    let rows = (0..sol.grid.len()).map(|i| {
        [sol.grid.nodes()[i], sol.u[i], sol.s[i], sol.upp[i], sol.residual[i]]
            .iter()
            .map(|v| format_value(*v))
            .collect()
    });
    write_csv(out, file, &header(&["r", "u", "s", "upp", "residual"]), rows)?;
    Ok(())
}

/// `U*(r) = r^2/2 + N/2 + 0.2 cos r` and the source that makes it exact.
fn manufactured(n: usize, r: f64) -> (f64, f64) {
    let nf = n as f64;
    let u = 0.5 * r * r + 0.5 * nf + 0.2 * r.cos();
    let s = r - 0.2 * r.sin();
    let upp = 1.0 - 0.2 * r.cos();
    let lap = if r == 0.0 { nf * upp } else { upp + (nf - 1.0) / r * s };
    (u, -0.5 * lap + 0.5 * s * s + u)
}

/// Max nodal errors against the manufactured solution on `m`, `2m - 1` and
/// `4m - 3` nodes (each refinement halves the spacing).
fn mesh_study(n: usize, cfg: &RadialConfig) -> Result<Vec<f64>, hjb_core::HjbError> {
    let meshes = [cfg.nodes, 2 * cfg.nodes - 1, 4 * cfg.nodes - 3];
    let table = RadialTable::sample(cfg.radius, meshes[2], |r| manufactured(n, r).1)?;
    let problem = ScalarProblem::new(n, 2.0, SourceSpec::Tabulated(table))?;
    let bc = BoundaryCondition::DirichletValue(manufactured(n, cfg.radius).0);
    meshes
        .iter()
        .map(|&m| {
            let opts = RadialOptions { nodes: m, newton_tol: cfg.newton_tol, ..Default::default() };
            let sol = solve_radial_bvp(&problem, cfg.radius, &bc, &opts)?;
            Ok(sol.grid.nodes().iter().zip(&sol.u).fold(0.0_f64, |e, (r, u)| e.max((u - manufactured(n, *r).0).abs())))
        })
        .collect()
}

pub(crate) fn radial(cfg: &RadialConfig, out: &Path, report: &mut Report) -> Outcome {
    let bc = match cfg.boundary {
        RadialBoundary::Neumann => BoundaryCondition::NeumannExactQuadratic,
        RadialBoundary::Dirichlet => BoundaryCondition::DirichletExactQuadratic,
    };
    for &n in &cfg.dimensions {
        let problem = ScalarProblem::quadratic(n, cfg.a, cfg.b)?;
        let exact = scalar_quadratic_solution(cfg.a, cfg.b, n)?;
        let opts = RadialOptions { nodes: cfg.nodes, newton_tol: cfg.newton_tol, ..Default::default() };
        let sol = solve_radial_bvp(&problem, cfg.radius, &bc, &opts)?;
        let file = format!("radial_N{n}.csv");
        write_radial(out, &file, &sol)?;
        report.artifact(file);

        let d = &sol.diagnostics;
        let curvature = sol.upp.iter().fold(0.0_f64, |m, v| m.max((v - 2.0 * exact.leading).abs()));
        let value_err =
            sol.grid.nodes().iter().zip(&sol.u).fold(0.0_f64, |m, (r, u)| m.max((u - exact.value(*r)).abs()));
        report.metric(format!("N{n}.max_residual"), d.max_residual);
        report.metric(format!("N{n}.max_curvature_error"), curvature);
        report.metric(format!("N{n}.max_value_error"), value_err);
        report.metric(format!("N{n}.newton_iterations"), d.iterations as f64);
        report.check(
            format!("N{n}.residual"),
            d.max_residual <= cfg.residual_tol,
            format!("max PDE residual {} (tolerance {})", sci(d.max_residual), sci(cfg.residual_tol)),
        );
        report.check(
            format!("N{n}.curvature"),
            curvature <= cfg.curvature_tol,
            format!("max |U'' - 2A| {} (tolerance {})", sci(curvature), sci(cfg.curvature_tol)),
        );
        report.check(
            format!("N{n}.shape"),
            d.is_convex && d.gradient_monotone,
            format!("convex: {}, gradient non-decreasing: {}", d.is_convex, d.gradient_monotone),
        );

        if cfg.mesh_study {
            let errors = mesh_study(n, cfg)?;
            let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
            for (i, r) in ratios.iter().enumerate() {
                report.metric(format!("N{n}.mesh_ratio{}", i + 1), *r);
            }
            let ok = ratios.iter().all(|r| (cfg.mesh_ratio_min..=cfg.mesh_ratio_max).contains(r));
            report.check(
                format!("N{n}.mesh_order"),
                ok,
                format!(
                    "manufactured-solution errors {:?}, ratios {:.3}, {:.3} (window [{}, {}])",
                    errors.iter().map(|e| sci(*e)).collect::<Vec<_>>(),
                    ratios[0],
                    ratios[1],
                    cfg.mesh_ratio_min,
                    cfg.mesh_ratio_max
                ),
            );
        }
        if cfg.barriers.enabled {
            barriers(&cfg.barriers, n, &SourceSpec::Quadratic { a: cfg.a, b: cfg.b }, report)?;
        }
    }
    Ok(())
}

fn barriers(cfg: &BarrierConfig, n: usize, source: &SourceSpec, report: &mut Report) -> Outcome {
    let c = cfg.c_fraction * barrier_c_limit(2.0)?;
    let radii = linspace(0.0, cfg.extent, cfg.samples);
    let cert = certify_subsolution_barrier(c, 2.0, n, source, &radii)?;
    report.metric(format!("N{n}.barrier_c"), cert.c);
    report.metric(format!("N{n}.barrier_C"), cert.big_c);
    report.metric(format!("N{n}.barrier_max_excess"), cert.max_excess);
    report.check(
        format!("N{n}.subsolution_barrier"),
        cert.max_excess <= 0.0,
        format!("c={} C={}: max excess {} on [0, {}]", cert.c, cert.big_c, sci(cert.max_excess), cfg.extent),
    );

    let r = cfg.outer_radius;
    let window = linspace((1.0 - cfg.window) * r, r * (1.0 - cfg.window / 50.0), 491);
    let large = explosive_barrier_margin(r, cfg.alpha_large, 2.0, n, &window)?;
    let small = explosive_barrier_margin(r, cfg.alpha_small, 2.0, n, &window)?;
    report.metric(format!("N{n}.explosive_margin_large_alpha"), large);
    report.metric(format!("N{n}.explosive_margin_small_alpha"), small);
    report.check(
        format!("N{n}.explosive_barrier"),
        large >= 0.0 && small < 0.0,
        format!("margin {} for alpha={}, {} for alpha={}", sci(large), cfg.alpha_large, sci(small), cfg.alpha_small),
    );
    Ok(())
}

pub(crate) fn monotone(cfg: &MonotoneConfig, out: &Path, report: &mut Report) -> Outcome {
    let eps = cfg.eps.clone().unwrap_or_else(|| default_eps_schedule(cfg.radii.len()));
    let params =
        SchemeParams { spacing: cfg.spacing, newton_tol: cfg.newton_tol, max_newton_iters: cfg.max_newton_iters };
    let run = run_expanding_balls(cfg.a, cfg.b, cfg.n, &cfg.radii, cfg.observation_radius, &eps, &params)?;

    let rows = run.error_curve.iter().enumerate().map(|(i, (r, e))| {
        let gap = if i == 0 { String::new() } else { format_value(run.monotonicity_report[i - 1]) };
        vec![format_value(*r), format_value(run.eps_schedule[i]), format_value(*e), gap]
    });
    write_csv(out, "convergence.csv", &header(&["R_n", "eps_n", "error", "min_monotone_gap"]), rows)?;
    report.artifact("convergence.csv");
    if let Some((_, err)) = run.failure {
        return Err(err.into());
    }

    let floor = run.noise_floor();
    let min_gap = run.monotonicity_report.iter().fold(f64::INFINITY, |m, g| m.min(*g));
    let max_upper = run.upper_excess.iter().fold(f64::NEG_INFINITY, |m, g| m.max(*g));
    let errors: Vec<f64> = run.error_curve.iter().map(|(_, e)| *e).collect();
    report.metric("noise_floor", floor);
    if min_gap.is_finite() {
        report.metric("min_monotone_gap", min_gap);
    }
    report.metric("max_upper_excess", max_upper);
    report.metric("final_error", *errors.last().unwrap_or(&f64::NAN));
    report.check(
        "ordering",
        min_gap >= -floor && max_upper <= floor,
        format!(
            "u_n <= u_n+1 <= U on [0, {}]: min gap {}, max excess over U {} (floor {})",
            cfg.observation_radius,
            sci(min_gap),
            sci(max_upper),
            sci(floor)
        ),
    );
    report.check(
        "decreasing_error",
        errors.windows(2).all(|w| w[1] < w[0]),
        format!("errors {:?}", errors.iter().map(|e| sci(*e)).collect::<Vec<_>>()),
    );
    match fit_convergence_rate(&run) {
        Ok(fit) => {
            report.metric("decay_rate", fit.decay_rate);
            report.metric("prefactor", fit.prefactor);
            report.metric("r_squared", fit.r_squared);
            report.check(
                "decay_fit",
                fit.decay_rate > 0.0 && fit.r_squared >= cfg.min_r_squared,
                format!(
                    "error ~ {:.3e} exp(-{:.4} (R - {})), r^2 = {:.4} (minimum {}), {} points excluded",
                    fit.prefactor,
                    fit.decay_rate,
                    cfg.observation_radius,
                    fit.r_squared,
                    cfg.min_r_squared,
                    fit.excluded.len()
                ),
            );
        }
        Err(e) => report.check("decay_fit", false, e.to_string()),
    }
    Ok(())
}

fn scheme(choice: StencilChoice) -> GradientScheme {
    match choice {
        StencilChoice::Averaged => GradientScheme::Averaged,
        StencilChoice::Upwind => GradientScheme::Upwind,
    }
}

fn write_field(out: &Path, file: &str, field: &Field2D, exact: Option<&QuadraticCoefficients>) -> Outcome {
    let grid = *field.grid();
    let n = grid.nodes_per_axis();
    let rows = (0..n).flat_map(|i| {
        (0..n).map(move |j| {
            let (x, y) = (grid.coord(i), grid.coord(j));
            let u = field.get(i, j);
            let e = exact.map(|c| c.value(x.hypot(y)));
            vec![
                format_value(x),
                format_value(y),
                format_value(u),
                e.map(format_value).unwrap_or_default(),
                e.map(|e| format_value((u - e).abs())).unwrap_or_default(),
            ]
        })
    });
    write_csv(out, file, &header(&["x", "y", "u", "exact", "abs_err"]), rows)?;
    Ok(())
}

fn record_convergence(report: &mut Report, label: &str, res: &Fd2dResult) {
    report.metric(format!("{label}.iterations"), res.log.iterations as f64);
    report.metric(format!("{label}.clipped_nodes"), res.log.clipped_nodes as f64);
    if !res.log.converged {
        report.not_converged(format!("{label}: no convergence in {} iterations", res.log.iterations));
    } else if res.log.clipped_nodes > 0 {
        report.not_converged(format!(
            "{label}: converged with {} nodes at the gradient clip, so the iterate does not solve the equation",
            res.log.clipped_nodes
        ));
    }
}

pub(crate) fn grid2d(cfg: &Grid2dConfig, out: &Path, report: &mut Report) -> Outcome {
    let coeffs = scalar_quadratic_solution(cfg.a, cfg.b, 2)?;
    let source = SourceSpec::Quadratic { a: cfg.a, b: cfg.b };
    let options = |tol: f64| Fd2dOptions {
        lambda: cfg.lambda,
        damping: cfg.damping,
        tol,
        max_iters: cfg.max_iters,
        gradient_clip: None,
        scheme: scheme(cfg.stencil),
    };
    let solve = |n: usize, tol: f64| -> Result<(Field2D, Fd2dResult), hjb_core::HjbError> {
        let start = Field2D::exact_quadratic(Grid2D::new(cfg.half_width, n)?, &coeffs);
        let res = solve_fd2d(&source, 2.0, &start, &options(tol))?;
        Ok((start, res))
    };

    let (exact_field, res) = solve(cfg.nodes, cfg.tol)?;
    write_field(out, "grid2d.csv", &res.field, Some(&coeffs))?;
    report.artifact("grid2d.csv");
    record_convergence(report, "benchmark", &res);
    let err = compare_to_exact(&res.field, &coeffs);
    report.metric("max_abs_err", err.max_abs_err);
    report.metric("rms_err", err.rms_err);
    report.check(
        "error",
        err.max_abs_err <= cfg.error_tol,
        format!("max |u - exact| {} on n={} (tolerance {})", sci(err.max_abs_err), cfg.nodes, cfg.error_tol),
    );

    let baseline = radial_symmetry_deviation(&exact_field, cfg.symmetry_bins)?.max_bin_spread;
    let spread = radial_symmetry_deviation(&res.field, cfg.symmetry_bins)?.max_bin_spread;
    report.metric("baseline_spread", baseline);
    report.metric("symmetry_spread", spread);
    report.check(
        "symmetry",
        spread <= cfg.symmetry_factor * baseline,
        format!(
            "bin spread {} vs exact-field baseline {} (factor {})",
            sci(spread),
            sci(baseline),
            cfg.symmetry_factor
        ),
    );

    if cfg.refinement {
        let (_, coarse) = solve(cfg.nodes, cfg.study_tol)?;
        let (_, fine) = solve(2 * cfg.nodes, cfg.study_tol)?;
        record_convergence(report, "study_coarse", &coarse);
        record_convergence(report, "study_fine", &fine);
        let e1 = compare_to_exact(&coarse.field, &coeffs).max_abs_err;
        let e2 = compare_to_exact(&fine.field, &coeffs).max_abs_err;
        let ratio = e1 / e2;
        report.metric("refinement_ratio", ratio);
        report.check(
            "refinement",
            (cfg.ratio_min..=cfg.ratio_max).contains(&ratio),
            format!(
                "errors {} (n={}) and {} (n={}), ratio {:.3} (window [{}, {}])",
                sci(e1),
                cfg.nodes,
                sci(e2),
                2 * cfg.nodes,
                ratio,
                cfg.ratio_min,
                cfg.ratio_max
            ),
        );
    }

    let nr = &cfg.nonradial;
    if nr.enabled {
        let source = nr.source();
        let start = Field2D::source(Grid2D::new(nr.half_width, nr.nodes)?, &source);
        let opts = Fd2dOptions {
            lambda: nr.lambda,
            damping: nr.damping,
            tol: nr.tol,
            max_iters: nr.max_iters,
            gradient_clip: None,
            scheme: scheme(nr.stencil),
        };
        let res = solve_fd2d(&source, 2.0, &start, &opts)?;
        write_field(out, "grid2d_nonradial.csv", &res.field, None)?;
        report.artifact("grid2d_nonradial.csv");
        record_convergence(report, "nonradial", &res);
        let spread = radial_symmetry_deviation(&res.field, cfg.symmetry_bins)?.max_bin_spread;
        report.metric("nonradial.symmetry_spread", spread);
        report.check(
            "nonradial_asymmetry",
            spread >= nr.spread_factor * baseline,
            format!("bin spread {} vs radial baseline {} (factor {})", sci(spread), sci(baseline), nr.spread_factor),
        );
    }
    Ok(())
}
