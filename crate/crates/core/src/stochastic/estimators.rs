use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::paths::{PathSet, SimConfig};
use crate::error::{HjbError, Result};
use crate::exact::{scalar_quadratic_solution, QuadraticCoefficients};

/// Compensated (Neumaier) sum; the result does not depend on how large and
/// small terms interleave, up to rounding of the final correction.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// `sample_std / sqrt(n_samples)`, with the `n - 1` normalisation.
    pub std_error: f64,
    pub n_samples: usize,
}

impl MonteCarloEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(HjbError::InsufficientData(format!("{n} samples; at least 2 are needed")));
        }
        let mean = compensated_sum(samples.iter().copied()) / n as f64;
        let var = compensated_sum(samples.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
        Ok(Self { mean, std_error: (var / n as f64).sqrt(), n_samples: n })
    }

    pub fn sample_std(&self) -> f64 {
        self.std_error * (self.n_samples as f64).sqrt()
    }

    /// `|mean - target| <= k * std_error + bias`.
    pub fn agrees_with(&self, target: f64, k: f64, bias: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + bias
    }
}

/// Parameters of the discounted-cost estimator for the linear feedback
/// `α(x) = -gain * x` and running cost `½|α|^2 + a|x|^2 + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub x0: Vec<f64>,
    pub gain: f64,
    /// Largest tolerated tail bound for truncating the horizon at `T`.
    pub truncation_budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub estimate: MonteCarloEstimate,
    /// Upper bound on the discounted cost after `T` that the sum omits.
    pub truncation_bias: f64,
}

/// Bound on `∫_T^∞ e^{-t} E[c(X_t)] dt` for the linear feedback.
///
/// For the optimal gain `2A` with `σ = 1` this is `e^{-T} E[u(X_T)]` bounded
/// through the closed-form second moment; otherwise the running cost is
/// bounded by its largest possible second moment after `T`.
pub fn truncation_bound(a: f64, b: f64, sigma: f64, x0: &[f64], gain: f64, horizon: f64) -> Result<f64> {
    let n = x0.len() as f64;
    let x0_sq: f64 = x0.iter().map(|x| x * x).sum();
    let tail = (-horizon).exp();
    let optimal = scalar_quadratic_solution(a, b, x0.len())?;
    if sigma == 1.0 && (gain - 2.0 * optimal.leading).abs() <= 1e-12 * gain.max(1.0) {
        let big_a = optimal.leading;
        let second = (-4.0 * big_a * horizon).exp() * x0_sq + n * sigma * sigma / (4.0 * big_a);
        return Ok(tail * (big_a * second + optimal.offset));
    }
    let weight = 0.5 * gain * gain + a;
    if gain > 0.0 {
        let second = (-2.0 * gain * horizon).exp() * x0_sq + n * sigma * sigma / (2.0 * gain);
        Ok(tail * (weight * second + b))
    } else {
        // Free Brownian motion: E|X_t|^2 = |x0|^2 + N σ^2 t.
        Ok(tail * (weight * (x0_sq + n * sigma * sigma * (horizon + 1.0)) + b))
    }
}

/// Monte Carlo estimate of the discounted cost, accumulated along each path
/// by the left Riemann sum `Σ e^{-t_i} c(X_i) dt` without storing paths.
pub fn estimate_discounted_cost(params: &CostParams, cfg: &SimConfig) -> Result<CostEstimate> {
    let steps = cfg.steps()?;
    if !(params.a > 0.0 && params.b >= 0.0 && params.sigma >= 0.0 && params.gain >= 0.0) {
        return Err(HjbError::Precondition("need a > 0, b >= 0, sigma >= 0, gain >= 0".into()));
    }
    if params.x0.is_empty() {
        return Err(HjbError::Precondition("initial state is empty".into()));
    }
    if cfg.n_paths < 2 {
        return Err(HjbError::Precondition("need at least two paths".into()));
    }
    let horizon = steps as f64 * cfg.dt;
    let bias = truncation_bound(params.a, params.b, params.sigma, &params.x0, params.gain, horizon)?;
    if bias > params.truncation_budget {
        return Err(HjbError::Truncation { bias, budget: params.truncation_budget });
    }
    let weight = 0.5 * params.gain * params.gain + params.a;
    let sqrt_dt = cfg.dt.sqrt();
    let samples: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|path| {
            let mut noise = cfg.rng.diffusion_stream(path);
            let mut x = params.x0.clone();
            let mut total = 0.0;
            for i in 0..steps {
                let t = i as f64 * cfg.dt;
                let sq: f64 = x.iter().map(|v| v * v).sum();
                total += (-t).exp() * (weight * sq + params.b) * cfg.dt;
                for xd in x.iter_mut() {
                    let xi: f64 = noise.sample(StandardNormal);
                    *xd += -params.gain * *xd * cfg.dt + params.sigma * sqrt_dt * xi;
                }
            }
            total
        })
        .collect();
    Ok(CostEstimate { estimate: MonteCarloEstimate::from_samples(&samples)?, truncation_bias: bias })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    pub u_exact: f64,
    pub estimate: MonteCarloEstimate,
    pub truncation_bias: f64,
    /// `(mean - u_exact) / std_error`.
    pub z_score: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the Monte Carlo cost of the optimal feedback `-2A x` (unit
/// volatility) with the closed-form value `A|x0|^2 + B`.
///
/// Passes when `|u - mean| <= max(3 SE + truncation bias, 0.02 u)`.
pub fn verify_value_function(
    a: f64,
    b: f64,
    x0: &[f64],
    truncation_budget: f64,
    cfg: &SimConfig,
) -> Result<VerificationReport> {
    let coeffs = scalar_quadratic_solution(a, b, x0.len())?;
    let r = x0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u_exact = coeffs.value(r);
    let params = CostParams { a, b, sigma: 1.0, x0: x0.to_vec(), gain: 2.0 * coeffs.leading, truncation_budget };
    let cost = estimate_discounted_cost(&params, cfg)?;
    let est = cost.estimate;
    let tolerance = (3.0 * est.std_error + cost.truncation_bias).max(0.02 * u_exact);
    let z_score = if est.std_error > 0.0 { (est.mean - u_exact) / est.std_error } else { 0.0 };
    Ok(VerificationReport {
        u_exact,
        estimate: est,
        truncation_bias: cost.truncation_bias,
        z_score,
        tolerance,
        pass: (u_exact - est.mean).abs() <= tolerance,
    })
}

fn check_burn_in(paths: &PathSet, burn_in_fraction: f64) -> Result<usize> {
    if !(0.2..=0.8).contains(&burn_in_fraction) {
        return Err(HjbError::Precondition(format!("burn-in fraction must lie in [0.2, 0.8], got {burn_in_fraction}")));
    }
    let min_gain = paths.metadata.gains.iter().fold(f64::INFINITY, |m, g| m.min(*g));
    if paths.horizon * min_gain < 5.0 {
        return Err(HjbError::Precondition(format!(
            "horizon {} covers fewer than five relaxation times (gain {min_gain})",
            paths.horizon
        )));
    }
    if paths.n_paths < 2 {
        return Err(HjbError::Precondition("need at least two paths".into()));
    }
    let start = paths.times.partition_point(|&t| t < burn_in_fraction * paths.horizon);
    if start >= paths.n_records() {
        return Err(HjbError::Precondition("no records after the burn-in".into()));
    }
    Ok(start)
}

/// Per-path time averages of `g(path, record)` over the records after the
/// burn-in, combined across paths.
fn post_burn_in_average(
    paths: &PathSet,
    burn_in_fraction: f64,
    g: impl Fn(usize, usize) -> f64 + Sync,
) -> Result<MonteCarloEstimate> {
    let start = check_burn_in(paths, burn_in_fraction)?;
    let count = (paths.n_records() - start) as f64;
    let samples: Vec<f64> = (0..paths.n_paths)
        .into_par_iter()
        .map(|p| compensated_sum((start..paths.n_records()).map(|k| g(p, k))) / count)
        .collect();
    MonteCarloEstimate::from_samples(&samples)
}

/// Time-and-path average of `|X|^2` after the burn-in.
pub fn estimate_stationary_moments(paths: &PathSet, burn_in_fraction: f64) -> Result<MonteCarloEstimate> {
    post_burn_in_average(paths, burn_in_fraction, |p, k| paths.squared_norm(p, k))
}

/// Time average of `½|-2A X|^2 + a|X|^2 + b` after the burn-in.
pub fn long_run_cost_estimate(
    paths: &PathSet,
    a: f64,
    b: f64,
    leading: f64,
    burn_in_fraction: f64,
) -> Result<MonteCarloEstimate> {
    let weight = 2.0 * leading * leading + a;
    post_burn_in_average(paths, burn_in_fraction, |p, k| weight * paths.squared_norm(p, k) + b)
}

/// `e^{-t} E[A|X_t|^2 + B]` at each checkpoint.
pub fn transversality_decay(
    paths: &PathSet,
    coeffs: &QuadraticCoefficients,
    checkpoints: &[f64],
) -> Result<Vec<MonteCarloEstimate>> {
    checkpoints
        .iter()
        .map(|&t| {
            let k = paths.record_at(t)?;
            let discount = (-paths.times[k]).exp();
            let samples: Vec<f64> = (0..paths.n_paths)
                .map(|p| discount * (coeffs.leading * paths.squared_norm(p, k) + coeffs.offset))
                .collect();
            MonteCarloEstimate::from_samples(&samples)
        })
        .collect()
}

/// Fraction of post-burn-in records spent in each regime, per path, combined
/// across paths.
pub fn regime_occupation(paths: &PathSet, regimes: usize, burn_in_fraction: f64) -> Result<Vec<MonteCarloEstimate>> {
    if !paths.has_regimes() {
        return Err(HjbError::InvalidArgument("path set carries no regime labels".into()));
    }
    (0..regimes)
        .map(|j| {
            post_burn_in_average(paths, burn_in_fraction, |p, k| if paths.regime(p, k) == Some(j) { 1.0 } else { 0.0 })
        })
        .collect()
}

/// Regime jumps per unit time, per path.
pub fn switch_rate(paths: &PathSet) -> Result<MonteCarloEstimate> {
    if !paths.has_regimes() {
        return Err(HjbError::InvalidArgument("path set carries no regime labels".into()));
    }
    let samples: Vec<f64> = paths.switch_counts.iter().map(|&c| c as f64 / paths.horizon).collect();
    MonteCarloEstimate::from_samples(&samples)
}
