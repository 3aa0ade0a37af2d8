//! Closed-form quadratic solutions.
//!
//! For `f = a|x|^2 + b` and `p = 2` the scalar equation has the unique
//! admissible solution `u = A|x|^2 + B` with `2A^2 + A - a = 0`, `A > 0` and
//! `B = b + A N`. The regime system with quadratic sources is solved by
//! `u_j = β_j |x|^2 + η_j`, where `β` solves a coupled quadratic system and
//! `η` a linear M-matrix system.

use crate::error::{HjbError, Result};
use crate::linalg;
use crate::model::{validate_regime_model, RegimeModel};

/// Coefficients of `u(x) = leading |x|^2 + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoefficients {
    pub leading: f64,
    pub offset: f64,
}

impl QuadraticCoefficients {
    pub fn value(&self, r: f64) -> f64 {
        self.leading * r * r + self.offset
    }

    /// Radial derivative `2 A r`.
    pub fn slope(&self, r: f64) -> f64 {
        2.0 * self.leading * r
    }
}

fn check_cost(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(HjbError::Domain(format!("quadratic cost needs a > 0, got {a}")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(HjbError::Domain(format!("constant cost needs b >= 0, got {b}")));
    }
    Ok(())
}

/// Positive root of `2A^2 + A - a = 0`.
fn admissible_root(a: f64) -> f64 {
    let disc = (1.0 + 8.0 * a).sqrt();
    // (-1 + √(1+8a))/4 written without cancellation for small a
    2.0 * a / (1.0 + disc)
}

/// The root `(-1 - √(1+8a))/4` excluded by the growth condition.
pub fn rejected_root(a: f64) -> f64 {
    (-1.0 - (1.0 + 8.0 * a).sqrt()) / 4.0
}

/// `u = A|x|^2 + B` for `f = a|x|^2 + b`, `p = 2`, in dimension `n`.
pub fn scalar_quadratic_solution(a: f64, b: f64, n: usize) -> Result<QuadraticCoefficients> {
    check_cost(a, b)?;
    if n == 0 {
        return Err(HjbError::Domain("dimension must be >= 1".into()));
    }
    let leading = admissible_root(a);
    Ok(QuadraticCoefficients { leading, offset: b + leading * n as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSensitivities {
    pub d_leading_da: f64,
    pub d_offset_da: f64,
    pub d_offset_db: f64,
}

pub fn scalar_sensitivities(a: f64, n: usize) -> Result<ScalarSensitivities> {
    check_cost(a, 0.0)?;
    let inv = 1.0 / (1.0 + 8.0 * a).sqrt();
    Ok(ScalarSensitivities { d_leading_da: inv, d_offset_da: n as f64 * inv, d_offset_db: 1.0 })
}

/// Largest absolute PDE residual of `u = A r^2 + B` at the given radii.
///
/// Substituting the ansatz leaves `(2A^2 + A - a) r^2 + (B - A N - b)`; the
/// residual is evaluated in that collected form.
pub fn pde_residual_quadratic(
    coeffs: &QuadraticCoefficients,
    a: f64,
    b: f64,
    n: usize,
    sample_radii: &[f64],
) -> Result<f64> {
    if sample_radii.is_empty() {
        return Err(HjbError::InvalidArgument("no sample radii".into()));
    }
    if sample_radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(HjbError::InvalidArgument("sample radii must be >= 0".into()));
    }
    let a_hat = coeffs.leading;
    let quad = (2.0 * a_hat * a_hat + a_hat) - a;
    let constant = (coeffs.offset - a_hat * n as f64) - b;
    Ok(sample_radii.iter().map(|r| (quad * r * r + constant).abs()).fold(0.0, f64::max))
}

/// `E|X_∞|^2 / N = σ^2 / (4A)` for the optimally controlled state.
pub fn stationary_variance_per_coordinate(a: f64, sigma: f64) -> Result<f64> {
    check_cost(a, 0.0)?;
    if !(sigma > 0.0) {
        return Err(HjbError::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(sigma * sigma / (4.0 * admissible_root(a)))
}

/// Long-run average cost `(A + 1/4) N σ^2 + b`.
pub fn long_run_cost(a: f64, b: f64, n: usize, sigma: f64) -> Result<f64> {
    let coeffs = scalar_quadratic_solution(a, b, n)?;
    if !(sigma > 0.0) {
        return Err(HjbError::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    Ok((coeffs.leading + 0.25) * n as f64 * sigma * sigma + b)
}

/// Exact solution of the regime system with its substitution residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCoefficients {
    pub beta: Vec<f64>,
    pub eta: Vec<f64>,
    pub residual_beta: f64,
    pub residual_eta: f64,
}

impl RegimeCoefficients {
    pub fn value(&self, regime: usize, r: f64) -> f64 {
        self.beta[regime] * r * r + self.eta[regime]
    }
}

/// `2β_j^2 + δ_j β_j - Σ_l α_{jl} β_l - a_j` for each regime.
pub fn beta_residual(model: &RegimeModel, beta: &[f64]) -> Vec<f64> {
    (0..model.regimes())
        .map(|j| {
            let coupling: f64 = model.generator[j].iter().zip(beta).map(|(g, b)| g * b).sum();
            2.0 * beta[j] * beta[j] + model.delta[j] * beta[j] - coupling - model.a[j]
        })
        .collect()
}

/// `δ_j η_j - Σ_l α_{jl} η_l - b_j - σ_j^2 β_j N` for each regime.
pub fn eta_residual(model: &RegimeModel, beta: &[f64], eta: &[f64]) -> Vec<f64> {
    let n = model.dimension as f64;
    (0..model.regimes())
        .map(|j| {
            let coupling: f64 = model.generator[j].iter().zip(eta).map(|(g, e)| g * e).sum();
            model.delta[j] * eta[j] - coupling - model.b[j] - model.sigma[j] * model.sigma[j] * beta[j] * n
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn ensure_valid(model: &RegimeModel) -> Result<()> {
    let violations = validate_regime_model(model);
    if violations.is_empty() {
        Ok(())
    } else {
        let joined: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        Err(HjbError::Precondition(joined.join("; ")))
    }
}

/// Solves the β system by damped Newton from `β_j = √(a_j / 2)`.
pub fn solve_regime_betas(model: &RegimeModel, newton_tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let start: Vec<f64> = model.a.iter().map(|a| (a / 2.0).sqrt()).collect();
    solve_regime_betas_from(model, &start, newton_tol, max_iters)
}

/// Damped Newton on the β system from an arbitrary starting point.
///
/// The Jacobian is `J_jl = (4β_j + δ_j) 1{j=l} - α_jl`; the step is halved
/// while the residual max-norm does not decrease.
pub fn solve_regime_betas_from(
    model: &RegimeModel,
    start: &[f64],
    newton_tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    ensure_valid(model)?;
    if !(newton_tol > 0.0) {
        return Err(HjbError::InvalidArgument("newton_tol must be positive".into()));
    }
    let k = model.regimes();
    if start.len() != k {
        return Err(HjbError::InvalidArgument(format!("start has {} entries, expected {k}", start.len())));
    }
    let mut beta = start.to_vec();
    let mut res = beta_residual(model, &beta);
    let mut norm = max_abs(&res);
    let mut trace = vec![norm];
    let mut iters = 0;
    while norm > newton_tol {
        if iters == max_iters {
            return Err(HjbError::NonConvergence { iterations: iters, residual: norm, trace });
        }
        let jac: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                (0..k)
                    .map(|l| {
                        let diag = if j == l { 4.0 * beta[j] + model.delta[j] } else { 0.0 };
                        diag - model.generator[j][l]
                    })
                    .collect()
            })
            .collect();
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let step = linalg::solve_dense(&jac, &rhs)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + lambda * s).collect();
            let trial_res = beta_residual(model, &trial);
            let trial_norm = max_abs(&trial_res);
            if trial_norm < norm || lambda < 1.0 / 1024.0 {
                beta = trial;
                res = trial_res;
                norm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
        trace.push(norm);
        iters += 1;
    }
    if let Some((j, b)) = beta.iter().enumerate().find(|(_, b)| !(**b > 0.0)) {
        return Err(HjbError::Branch(format!("beta[{j}] = {b} is not positive")));
    }
    Ok(beta)
}

/// `M η = C` with `M = diag(δ) - generator` and `C_j = b_j + σ_j^2 β_j N`.
///
/// For two regimes the elimination result is cross-checked against the
/// explicit 2x2 inverse.
pub fn solve_regime_etas(model: &RegimeModel, beta: &[f64]) -> Result<Vec<f64>> {
    ensure_valid(model)?;
    let k = model.regimes();
    if beta.len() != k {
        return Err(HjbError::InvalidArgument(format!("beta has {} entries, expected {k}", beta.len())));
    }
    let n = model.dimension as f64;
    let m = model.coupling_matrix();
    let rhs: Vec<f64> = (0..k).map(|j| model.b[j] + model.sigma[j] * model.sigma[j] * beta[j] * n).collect();
    let eta = linalg::solve_dense(&m, &rhs)?;
    if k == 2 {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 {
            return Err(HjbError::Singular("coupling matrix has zero determinant".into()));
        }
        let explicit = [(m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det, (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det];
        let scale = 1.0 + max_abs(&explicit);
        if (0..2).any(|j| (explicit[j] - eta[j]).abs() > 1e-12 * scale) {
            return Err(HjbError::Singular(format!(
                "elimination {eta:?} disagrees with the explicit inverse {explicit:?}"
            )));
        }
    }
    Ok(eta)
}

/// β then η, with substitution residuals.
pub fn regime_coefficients(model: &RegimeModel, newton_tol: f64, max_iters: usize) -> Result<RegimeCoefficients> {
    let beta = solve_regime_betas(model, newton_tol, max_iters)?;
    let eta = solve_regime_etas(model, &beta)?;
    let residual_beta = max_abs(&beta_residual(model, &beta));
    let residual_eta = max_abs(&eta_residual(model, &beta, &eta));
    Ok(RegimeCoefficients { beta, eta, residual_beta, residual_eta })
}
