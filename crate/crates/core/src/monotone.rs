//! Expanding-ball approximation of the whole-space solution.
//!
//! On each ball `B_{R_n}` the radial Dirichlet problem is solved with boundary
//! data taken from a certified global subsolution `-c(1+r^2)^{q/2} - C`. The
//! resulting solutions increase with `n` towards the whole-space solution;
//! the error against the closed form at a fixed observation radius decays
//! exponentially in `R_n`.

use rayon::prelude::*;

use crate::error::{HjbError, Result};
use crate::exact::scalar_quadratic_solution;
use crate::model::{conjugate_exponent, ScalarProblem, SourceSpec};
use crate::radial::{
    barrier_c_limit, certify_subsolution_barrier, solve_radial_bvp, BarrierCertificate, BoundaryCondition,
    InitialGuess, RadialOptions, RadialSolution,
};

/// Samples per unit radius used when certifying a barrier on `[0, R_n]`.
const CERTIFICATION_DENSITY: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    /// Target mesh spacing; every ball uses the same spacing so that nodes
    /// inside the observation disc coincide.
    pub spacing: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self { spacing: 0.01, newton_tol: 1e-12, max_newton_iters: 100 }
    }
}

/// `ε_n = 1/(n+1)` for `n = 1..=k`.
pub fn default_eps_schedule(k: usize) -> Vec<f64> {
    (1..=k).map(|n| 1.0 / (n as f64 + 1.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallSolution {
    pub radius: f64,
    pub eps: f64,
    pub barrier: BarrierCertificate,
    pub boundary_value: f64,
    pub solution: RadialSolution,
}

#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub radii: Vec<f64>,
    pub eps_schedule: Vec<f64>,
    pub observation_radius: f64,
    pub newton_tol: f64,
    /// Solved balls, in order; shorter than `radii` if a solve failed.
    pub balls: Vec<BallSolution>,
    /// `(R_n, max_{r <= R_obs} |U_exact - u_n|)`.
    pub error_curve: Vec<(f64, f64)>,
    /// `min_{r <= R_obs} (u_{n+1} - u_n)` for consecutive balls.
    pub monotonicity_report: Vec<f64>,
    /// `max_{r <= R_obs} (u_n - U_exact)` per ball.
    pub upper_excess: Vec<f64>,
    /// Index of the first ball whose solve failed, with the error.
    pub failure: Option<(usize, HjbError)>,
}

impl SchemeRun {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn noise_floor(&self) -> f64 {
        10.0 * self.newton_tol
    }
}

fn solve_ball(problem: &ScalarProblem, radius: f64, eps: f64, params: &SchemeParams) -> Result<BallSolution> {
    let p = problem.exponent();
    let q = conjugate_exponent(p)?;
    let c = 0.5 * barrier_c_limit(p)? * (1.0 - eps);
    let samples = ((radius * CERTIFICATION_DENSITY).ceil() as usize).max(2);
    let radii: Vec<f64> = (0..=samples).map(|i| radius * i as f64 / samples as f64).collect();
    let barrier = certify_subsolution_barrier(c, p, problem.dimension(), problem.source(), &radii)?;
    let boundary_value = barrier.value(radius, q);
    let nodes = (radius / params.spacing).round() as usize + 1;
    let options = RadialOptions {
        nodes,
        newton_tol: params.newton_tol,
        max_newton_iters: params.max_newton_iters,
        initial_guess: InitialGuess::Auto,
    };
    let solution = solve_radial_bvp(problem, radius, &BoundaryCondition::DirichletValue(boundary_value), &options)?;
    Ok(BallSolution { radius, eps, barrier, boundary_value, solution })
}

/// Solves the Dirichlet problems on the given balls (in parallel) and
/// compares them with the closed-form solution on `[0, R_obs]`.
///
/// Invalid inputs are errors; a failed ball solve yields a partial run with
/// `failure` set.
pub fn run_expanding_balls(
    a: f64,
    b: f64,
    n: usize,
    radii: &[f64],
    observation_radius: f64,
    eps_schedule: &[f64],
    params: &SchemeParams,
) -> Result<SchemeRun> {
    if radii.is_empty() {
        return Err(HjbError::InvalidArgument("no radii given".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HjbError::InvalidArgument("radii must be strictly increasing".into()));
    }
    if !(observation_radius > 0.0 && observation_radius < radii[0]) {
        return Err(HjbError::InvalidArgument(format!(
            "observation radius must lie in (0, {}), got {observation_radius}",
            radii[0]
        )));
    }
    if eps_schedule.len() != radii.len() {
        return Err(HjbError::InvalidArgument("eps schedule and radii differ in length".into()));
    }
    if eps_schedule.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HjbError::InvalidArgument("eps schedule must be decreasing inside (0, 1)".into()));
    }
    if !(params.spacing > 0.0 && params.spacing < observation_radius) {
        return Err(HjbError::InvalidArgument("spacing must be positive and below the observation radius".into()));
    }
    let problem = ScalarProblem::new(n, 2.0, SourceSpec::Quadratic { a, b })?;
    let exact = scalar_quadratic_solution(a, b, n)?;

    let outcomes: Vec<Result<BallSolution>> =
        radii.par_iter().zip(eps_schedule.par_iter()).map(|(&r, &eps)| solve_ball(&problem, r, eps, params)).collect();

    let mut balls = Vec::with_capacity(radii.len());
    let mut failure = None;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(ball) => balls.push(ball),
            Err(e) => {
                failure = Some((i, e));
                break;
            }
        }
    }

    let observation: Vec<f64> = match balls.first() {
        Some(first) => first
            .solution
            .grid
            .nodes()
            .iter()
            .copied()
            .take_while(|&r| r <= observation_radius * (1.0 + 1e-12))
            .collect(),
        None => Vec::new(),
    };
    let sampled: Vec<Vec<f64>> =
        balls.iter().map(|ball| observation.iter().map(|&r| ball.solution.value_at(r)).collect()).collect();
    let exact_vals: Vec<f64> = observation.iter().map(|&r| exact.value(r)).collect();

    let error_curve = balls
        .iter()
        .zip(&sampled)
        .map(|(ball, u)| {
            let err = u.iter().zip(&exact_vals).fold(0.0_f64, |m, (x, e)| m.max((x - e).abs()));
            (ball.radius, err)
        })
        .collect();
    let upper_excess =
        sampled.iter().map(|u| u.iter().zip(&exact_vals).fold(f64::NEG_INFINITY, |m, (x, e)| m.max(x - e))).collect();
    let monotonicity_report =
        sampled.windows(2).map(|w| w[1].iter().zip(&w[0]).fold(f64::INFINITY, |m, (hi, lo)| m.min(hi - lo))).collect();

    Ok(SchemeRun {
        radii: radii.to_vec(),
        eps_schedule: eps_schedule.to_vec(),
        observation_radius,
        newton_tol: params.newton_tol,
        balls,
        error_curve,
        monotonicity_report,
        upper_excess,
        failure,
    })
}

/// Least-squares fit `log ε = log C - c (R - R_obs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub prefactor: f64,
    pub decay_rate: f64,
    pub r_squared: f64,
    /// Radii of points that entered the fit.
    pub used: Vec<f64>,
    /// Radii of points dropped for lying at or below the noise floor.
    pub excluded: Vec<f64>,
}

/// Fits an exponential decay to `(R_n, ε_n)` pairs, skipping points with
/// `ε_n <= floor`.
pub fn fit_exponential_decay(curve: &[(f64, f64)], observation_radius: f64, floor: f64) -> Result<RateFit> {
    let (kept, dropped): (Vec<_>, Vec<_>) = curve.iter().partition(|(_, e)| *e > floor && *e > 0.0);
    if kept.len() < 3 {
        return Err(HjbError::InsufficientData(format!(
            "{} error values above the floor {floor:e}; at least 3 are needed",
            kept.len()
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|(r, _)| r - observation_radius).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, e)| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(HjbError::InsufficientData("all fitted points share one radius".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot <= f64::EPSILON * k * my.abs().max(1.0) { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit {
        prefactor: intercept.exp(),
        decay_rate: -slope,
        r_squared,
        used: kept.iter().map(|(r, _)| *r).collect(),
        excluded: dropped.iter().map(|(r, _)| *r).collect(),
    })
}

/// Fits the error curve of a run, excluding points within 10x the Newton
/// tolerance of zero.
pub fn fit_convergence_rate(run: &SchemeRun) -> Result<RateFit> {
    fit_exponential_decay(&run.error_curve, run.observation_radius, run.noise_floor())
}
