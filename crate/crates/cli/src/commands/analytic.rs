use std::path::Path;

use hjb_core::exact::{pde_residual_quadratic, regime_coefficients, scalar_quadratic_solution, scalar_sensitivities};
use hjb_core::model::{stationary_distribution, RegimeModel};
use hjb_core::stochastic::{
    regime_occupation, simulate_regime_switching, switch_rate, RngSpec, SimConfig, SwitchingScheme,
};

use super::{linspace, sci, Outcome};
use crate::config::{ExactConfig, RegimeConfig};
use crate::output::write_csv;
use crate::output::{estimate_row, estimates_header, write_paths};
use crate::summary::Report;

pub(crate) fn exact(cfg: &ExactConfig, report: &mut Report) -> Outcome {
    let radii = linspace(0.0, cfg.max_radius, cfg.samples);
    for (i, case) in cfg.cases.iter().enumerate() {
        let c = scalar_quadratic_solution(case.a, case.b, case.n)?;
        let algebraic = (2.0 * c.leading * c.leading + c.leading - case.a).abs();
        let offset = (c.offset - (case.b + c.leading * case.n as f64)).abs();
        let residual = pde_residual_quadratic(&c, case.a, case.b, case.n, &radii)?;
        let sens = scalar_sensitivities(case.a, case.n)?;
        let key = |m: &str| format!("case{i}.{m}");
        report.metric(key("a"), case.a);
        report.metric(key("b"), case.b);
        report.metric(key("N"), case.n as f64);
        report.metric(key("A"), c.leading);
        report.metric(key("B"), c.offset);
        report.metric(key("algebraic_residual"), algebraic.max(offset));
        report.metric(key("residual"), residual);
        report.metric(key("dA_da"), sens.d_leading_da);
        report.metric(key("dB_da"), sens.d_offset_da);
        let worst = algebraic.max(offset).max(residual);
        report.check(
            key("residual"),
            worst <= cfg.tolerance,
            format!(
                "a={} b={} N={}: A={} B={} max residual {} (tolerance {})",
                case.a,
                case.b,
                case.n,
                c.leading,
                c.offset,
                sci(worst),
                sci(cfg.tolerance)
            ),
        );
    }
    Ok(())
}

/// Per-regime scalar formulas for a chain without switching.
fn decoupled_coefficients(model: &RegimeModel) -> (Vec<f64>, Vec<f64>) {
    let n = model.dimension as f64;
    let beta: Vec<f64> = (0..model.regimes())
        .map(|j| {
            let d = model.delta[j];
            (-d + (d * d + 8.0 * model.a[j]).sqrt()) / 4.0
        })
        .collect();
    let eta =
        (0..model.regimes()).map(|j| (model.b[j] + model.sigma[j].powi(2) * beta[j] * n) / model.delta[j]).collect();
    (beta, eta)
}

pub(crate) fn regime(cfg: &RegimeConfig, seed: u64, out: &Path, report: &mut Report) -> Outcome {
    let model = cfg.model();
    let k = model.regimes();
    let coeffs = regime_coefficients(&model, cfg.newton_tol, 100)?;
    for j in 0..k {
        report.metric(format!("beta{}", j + 1), coeffs.beta[j]);
    }
    for j in 0..k {
        report.metric(format!("eta{}", j + 1), coeffs.eta[j]);
    }
    report.metric("residual_beta", coeffs.residual_beta);
    report.metric("residual_eta", coeffs.residual_eta);
    let worst = coeffs.residual_beta.max(coeffs.residual_eta);
    report.check(
        "residuals",
        worst <= cfg.residual_tol,
        format!(
            "beta={:?} eta={:?}, max residual {} (tolerance {})",
            coeffs.beta,
            coeffs.eta,
            sci(worst),
            sci(cfg.residual_tol)
        ),
    );

    let frozen = RegimeModel::from_rates(
        model.delta.clone(),
        vec![vec![0.0; k]; k],
        model.sigma.clone(),
        model.a.clone(),
        model.b.clone(),
        model.dimension,
    );
    let solved = regime_coefficients(&frozen, cfg.newton_tol, 100)?;
    let (beta, eta) = decoupled_coefficients(&frozen);
    let gap = solved
        .beta
        .iter()
        .zip(&beta)
        .chain(solved.eta.iter().zip(&eta))
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    report.metric("decoupled_error", gap);
    report.check(
        "decoupled",
        gap <= cfg.decoupled_tol,
        format!(
            "without switching the system matches the scalar formulas to {} (tolerance {})",
            sci(gap),
            sci(cfg.decoupled_tol)
        ),
    );

    let pi = stationary_distribution(&model.generator)?;
    let expected_rate: f64 = (0..k).map(|j| pi[j] * model.exit_rate(j)).sum();
    for (j, p) in pi.iter().enumerate() {
        report.metric(format!("pi{}", j + 1), *p);
    }
    report.metric("stationary_switch_rate", expected_rate);

    let sim = SimConfig {
        horizon: cfg.horizon,
        dt: cfg.dt,
        n_paths: cfg.n_paths,
        record_stride: cfg.record_stride,
        rng: RngSpec::new(seed),
    };
    let scheme: SwitchingScheme = cfg.scheme.into();
    let paths = simulate_regime_switching(&model, &coeffs.beta, &cfg.x0, cfg.initial_regime - 1, &sim, scheme)?;
    if let Some(w) = &paths.metadata.stability_warning {
        report.warn(w.clone());
    }
    write_paths(out, "paths.csv", &paths, cfg.written_paths)?;
    report.artifact("paths.csv");

    let occupation = regime_occupation(&paths, k, cfg.burn_in)?;
    let mut rows = Vec::new();
    for (j, (o, p)) in occupation.iter().zip(&pi).enumerate() {
        report.metric(format!("occupation{}", j + 1), o.mean);
        report.metric(format!("occupation{}_se", j + 1), o.std_error);
        report.check(
            format!("occupation{}", j + 1),
            o.agrees_with(*p, 3.0, 0.0),
            format!(
                "regime {} occupied {:.4} ± {:.4} of the time, stationary law {:.4}",
                j + 1,
                o.mean,
                o.std_error,
                p
            ),
        );
        rows.push(estimate_row(&format!("occupation_{}", j + 1), o));
    }

    if cfg.switch_rates.enabled {
        let sr = &cfg.switch_rates;
        let sim = SimConfig {
            horizon: sr.horizon,
            dt: sr.dt,
            n_paths: sr.n_paths,
            record_stride: 1,
            rng: RngSpec::new(seed),
        };
        // Only the jump counts are needed; record sparsely.
        let sim = SimConfig { record_stride: sim.steps()?.max(1), ..sim };
        let mut rates = Vec::new();
        for scheme in [SwitchingScheme::BernoulliEuler, SwitchingScheme::ExponentialClock] {
            let set = simulate_regime_switching(&model, &coeffs.beta, &cfg.x0, cfg.initial_regime - 1, &sim, scheme)?;
            let rate = switch_rate(&set)?;
            report.metric(format!("switch_rate.{}", scheme.name()), rate.mean);
            report.metric(format!("switch_rate.{}_se", scheme.name()), rate.std_error);
            rows.push(estimate_row(&format!("switch_rate_{}", scheme.name()), &rate));
            rates.push(rate);
        }
        let se = rates[0].std_error.hypot(rates[1].std_error);
        let diff = (rates[0].mean - rates[1].mean).abs();
        report.check(
            "switch_rates",
            diff <= 3.0 * se,
            format!(
                "jumps per unit time {:.4} (Bernoulli) vs {:.4} (exponential clock) at dt={}, |diff| {:.4} <= 3 SE {:.4}",
                rates[0].mean,
                rates[1].mean,
                sr.dt,
                diff,
                3.0 * se
            ),
        );
    }
    write_csv(out, "estimates.csv", &estimates_header(), rows)?;
    report.artifact("estimates.csv");
    Ok(())
}
