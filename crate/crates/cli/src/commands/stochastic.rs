use std::path::Path;

use hjb_core::exact::{long_run_cost, scalar_quadratic_solution, stationary_variance_per_coordinate};
use hjb_core::stochastic::{
    estimate_discounted_cost, estimate_stationary_moments, long_run_cost_estimate, simulate_ou, transversality_decay,
    verify_value_function, CostParams, RngSpec, SimConfig,
};

use super::{sci, Outcome};
use crate::config::{SimulateConfig, VerifyConfig};
use crate::output::{estimate_row, estimates_header, write_csv, write_paths};
use crate::summary::Report;

pub(crate) fn simulate(cfg: &SimulateConfig, seed: u64, out: &Path, report: &mut Report) -> Outcome {
    let n = cfg.x0.len();
    let nf = n as f64;
    let coeffs = scalar_quadratic_solution(cfg.a, cfg.b, n)?;
    let sim = SimConfig {
        horizon: cfg.horizon,
        dt: cfg.dt,
        n_paths: cfg.n_paths,
        record_stride: cfg.record_stride,
        rng: RngSpec::new(seed),
    };
    let paths = simulate_ou(coeffs.leading, cfg.sigma, &cfg.x0, &sim)?;
    if let Some(w) = &paths.metadata.stability_warning {
        report.warn(w.clone());
    }
    write_paths(out, "paths.csv", &paths, cfg.written_paths)?;
    report.artifact("paths.csv");

    // The Euler chain's stationary variance σ²dt / (1 - (1 - g dt)²) differs
    // from the continuous one by O(dt); that gap is the allowed bias.
    let gain = 2.0 * coeffs.leading;
    let sigma2 = cfg.sigma * cfg.sigma;
    let target = nf * stationary_variance_per_coordinate(cfg.a, cfg.sigma)?;
    let bias = (nf * sigma2 / (gain * (2.0 - gain * cfg.dt)) - target).abs();
    report.metric("stationary_target", target);
    report.metric("euler_bias", bias);

    let moment = estimate_stationary_moments(&paths, cfg.burn_in)?;
    report.metric("second_moment", moment.mean);
    report.metric("second_moment_se", moment.std_error);
    report.check(
        "stationary_moment",
        moment.agrees_with(target, 3.0, bias),
        format!(
            "E|X|^2 = {:.5} ± {:.5} vs N sigma^2/(4A) = {:.5} (allowance 3 SE + {})",
            moment.mean,
            moment.std_error,
            target,
            sci(bias)
        ),
    );

    let weight = 2.0 * coeffs.leading * coeffs.leading + cfg.a;
    let cost = long_run_cost_estimate(&paths, cfg.a, cfg.b, coeffs.leading, cfg.burn_in)?;
    let cost_target = long_run_cost(cfg.a, cfg.b, n, cfg.sigma)?;
    report.metric("long_run_cost", cost.mean);
    report.metric("long_run_cost_se", cost.std_error);
    report.metric("long_run_cost_target", cost_target);
    report.check(
        "long_run_cost",
        cost.agrees_with(cost_target, 3.0, weight * bias),
        format!(
            "average cost {:.5} ± {:.5} vs (A + 1/4) N sigma^2 + b = {:.5} (allowance 3 SE + {})",
            cost.mean,
            cost.std_error,
            cost_target,
            sci(weight * bias)
        ),
    );

    let mut rows = vec![estimate_row("second_moment", &moment), estimate_row("long_run_cost", &cost)];
    let x0_sq: f64 = cfg.x0.iter().map(|x| x * x).sum();
    let decay = transversality_decay(&paths, &coeffs, &cfg.checkpoints)?;
    let mut below = true;
    for (t, e) in cfg.checkpoints.iter().zip(&decay) {
        // E[A|X_t|^2 + B] <= A|x0|^2 + B + N sigma^2 / 2, with room for the Euler bias.
        let bound = (-t).exp() * (coeffs.leading * x0_sq + coeffs.offset + 0.5 * nf * sigma2);
        below &= e.mean <= bound;
        report.metric(format!("transversality.t={t}"), e.mean);
        report.metric(format!("transversality_bound.t={t}"), bound);
        rows.push(estimate_row(&format!("transversality_t={t}"), e));
    }
    let mut order: Vec<(f64, f64)> = cfg.checkpoints.iter().copied().zip(decay.iter().map(|e| e.mean)).collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0));
    let decreasing = order.windows(2).all(|w| w[1].1 < w[0].1);
    report.check(
        "transversality",
        below && decreasing,
        format!(
            "e^-t E[u(X_t)] at t={:?}: {:?}; decreasing: {decreasing}, below bound: {below}",
            cfg.checkpoints,
            decay.iter().map(|e| sci(e.mean)).collect::<Vec<_>>()
        ),
    );
    write_csv(out, "estimates.csv", &estimates_header(), rows)?;
    report.artifact("estimates.csv");
    Ok(())
}

pub(crate) fn verify(cfg: &VerifyConfig, seed: u64, out: &Path, report: &mut Report) -> Outcome {
    let sim =
        SimConfig { horizon: cfg.horizon, dt: cfg.dt, n_paths: cfg.n_paths, record_stride: 1, rng: RngSpec::new(seed) };
    let mut rows = Vec::new();
    let mut worst_z = 0.0_f64;
    for (i, x0) in cfg.x0.iter().enumerate() {
        let key = |m: &str| format!("case{i}.{m}");
        let v = verify_value_function(cfg.a, cfg.b, x0, cfg.truncation_budget, &sim)?;
        if v.z_score.abs() >= worst_z.abs() {
            worst_z = v.z_score;
        }
        report.metric(key("u_exact"), v.u_exact);
        report.metric(key("mean"), v.estimate.mean);
        report.metric(key("std_error"), v.estimate.std_error);
        report.metric(key("z_score"), v.z_score);
        report.metric(key("truncation_bias"), v.truncation_bias);
        report.metric(key("tolerance"), v.tolerance);
        report.check(
            key("value"),
            v.pass,
            format!(
                "x0={x0:?}: cost {:.5} ± {:.5} vs u = {:.5}, |diff| {:.5} <= {:.5} (z = {:.2})",
                v.estimate.mean,
                v.estimate.std_error,
                v.u_exact,
                (v.estimate.mean - v.u_exact).abs(),
                v.tolerance,
                v.z_score
            ),
        );
        rows.push(estimate_row(&format!("case{i}_optimal"), &v.estimate));

        // Same seed: the perturbed costs share the optimal run's noise.
        let optimal_gain = 2.0 * scalar_quadratic_solution(cfg.a, cfg.b, x0.len())?.leading;
        for factor in &cfg.gain_factors {
            let params = CostParams {
                a: cfg.a,
                b: cfg.b,
                sigma: 1.0,
                x0: x0.clone(),
                gain: factor * optimal_gain,
                truncation_budget: cfg.truncation_budget,
            };
            let cost = estimate_discounted_cost(&params, &sim)?.estimate;
            let floor = v.estimate.mean - 3.0 * v.estimate.std_error;
            report.metric(key(&format!("gain_factor={factor}.mean")), cost.mean);
            report.check(
                key(&format!("gain_factor={factor}")),
                cost.mean >= floor,
                format!(
                    "x0={x0:?}: feedback {factor} x optimal costs {:.5} >= optimal - 3 SE = {:.5}",
                    cost.mean, floor
                ),
            );
            rows.push(estimate_row(&format!("case{i}_gain_factor={factor}"), &cost));
        }
    }
    report.metric("z_score", worst_z);
    write_csv(out, "estimates.csv", &estimates_header(), rows)?;
    report.artifact("estimates.csv");
    Ok(())
}
