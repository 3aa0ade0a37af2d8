//! Radial reduction of the scalar equation.
//!
//! For radial data the solution depends on `r = |x|` only and satisfies
//!
//! ```text
//! -1/2 (U'' + (N-1)/r U') + (1/p)|U'|^p + U = f(r),   0 < r < R,
//! U'(0) = 0,
//! ```
//!
//! closed by a Dirichlet or Neumann condition at `r = R`. The solver uses
//! second-order centred differences on a uniform mesh and damped Newton on
//! the full nonlinear system; the Jacobian is tridiagonal. At the origin the
//! operator is replaced by its limit `-N/2 U''(0)`.
//!
//! This module also evaluates the explicit barriers used by the comparison
//! arguments: the global subsolution `-c(1+r^2)^{q/2} - C` and the blow-up
//! supersolution `(R-r)^{-α}`.

use crate::error::{HjbError, Result};
use crate::exact::scalar_quadratic_solution;
use crate::linalg::solve_tridiagonal;
use crate::model::{conjugate_exponent, ScalarProblem, SourceSpec};

/// Range of the diagonal shift used to globalise Newton.
const MIN_SHIFT: f64 = 1e-4;
const MAX_SHIFT: f64 = 1e12;

/// Tolerance below which the reconstructed `U''` still counts as convex.
pub const CONVEXITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub const MIN_NODES: usize = 16;

    /// `m` equally spaced nodes on `[0, R]`, the last one exactly `R`.
    pub fn uniform(radius: f64, m: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(HjbError::InvalidArgument(format!("outer radius must be > 0, got {radius}")));
        }
        if m < Self::MIN_NODES {
            return Err(HjbError::InvalidArgument(format!(
                "radial grid needs at least {} nodes, got {m}",
                Self::MIN_NODES
            )));
        }
        let h = radius / (m - 1) as f64;
        let nodes = (0..m).map(|i| if i + 1 == m { radius } else { i as f64 * h }).collect();
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        *self.nodes.last().expect("grid is non-empty")
    }

    pub fn spacing(&self) -> f64 {
        self.radius() / (self.len() - 1) as f64
    }
}

/// Outer boundary condition at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    DirichletValue(f64),
    NeumannSlope(f64),
    /// `U(R) = A R^2 + B` from the closed form (quadratic source, `p = 2`).
    DirichletExactQuadratic,
    /// `U'(R) = 2 A R` from the closed form (quadratic source, `p = 2`).
    NeumannExactQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outer {
    Dirichlet(f64),
    Neumann(f64),
}

impl BoundaryCondition {
    fn resolve(&self, problem: &ScalarProblem, radius: f64) -> Result<Outer> {
        let exact = || -> Result<_> {
            match problem.source() {
                SourceSpec::Quadratic { a, b } if problem.exponent() == 2.0 => {
                    scalar_quadratic_solution(*a, *b, problem.dimension())
                }
                _ => Err(HjbError::InvalidArgument(
                    "exact-quadratic boundary data needs a quadratic source with p = 2".into(),
                )),
            }
        };
        Ok(match *self {
            BoundaryCondition::DirichletValue(v) => Outer::Dirichlet(v),
            BoundaryCondition::NeumannSlope(s) => Outer::Neumann(s),
            BoundaryCondition::DirichletExactQuadratic => Outer::Dirichlet(exact()?.value(radius)),
            BoundaryCondition::NeumannExactQuadratic => Outer::Neumann(exact()?.slope(radius)),
        })
    }
}

/// Starting iterate for Newton.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialGuess {
    /// Closed-form quadratic profile for quadratic sources with `p = 2`,
    /// otherwise the source itself.
    #[default]
    Auto,
    /// `U = f`.
    Source,
    /// Caller-supplied node values.
    Profile(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialOptions {
    /// Mesh size `m` (number of nodes including both ends).
    pub nodes: usize,
    /// Bound on the Jacobian-diagonal-scaled residual `max |F_i / J_ii|`,
    /// i.e. a residual measured in units of `U`.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub initial_guess: InitialGuess,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { nodes: 600, newton_tol: 1e-10, max_newton_iters: 100, initial_guess: InitialGuess::Auto }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialDiagnostics {
    pub is_convex: bool,
    pub gradient_monotone: bool,
    /// `max |residual|` of the reconstructed PDE residual.
    pub max_residual: f64,
    pub iterations: usize,
    /// Final scaled residual of the discrete system.
    pub newton_residual: f64,
    pub newton_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub grid: RadialGrid,
    pub dimension: usize,
    pub exponent: f64,
    pub u: Vec<f64>,
    /// `U'` at the nodes; `s[0] = 0`.
    pub s: Vec<f64>,
    /// `U''` reconstructed from the ODE.
    pub upp: Vec<f64>,
    pub residual: Vec<f64>,
    pub diagnostics: RadialDiagnostics,
}

impl RadialSolution {
    /// Wraps given node values of `U` and `U'`, reconstructing `U''` and the
    /// residual from the ODE. `s[0]` is forced to 0.
    pub fn from_values(grid: RadialGrid, problem: &ScalarProblem, u: Vec<f64>, mut s: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() || s.len() != grid.len() {
            return Err(HjbError::InvalidArgument("profile length does not match the grid".into()));
        }
        check_radial(problem)?;
        s[0] = 0.0;
        let f: Vec<f64> = grid.nodes().iter().map(|&r| problem.source().eval_radial(r)).collect();
        let upp = reconstruct_upp(grid.nodes(), &u, &s, &f, problem.dimension(), problem.exponent());
        let mut sol = Self {
            grid,
            dimension: problem.dimension(),
            exponent: problem.exponent(),
            u,
            s,
            upp,
            residual: Vec::new(),
            diagnostics: RadialDiagnostics {
                is_convex: false,
                gradient_monotone: false,
                max_residual: 0.0,
                iterations: 0,
                newton_residual: 0.0,
                newton_trace: Vec::new(),
            },
        };
        sol.residual = radial_residual(&sol, problem)?;
        sol.refresh_diagnostics();
        Ok(sol)
    }

    fn refresh_diagnostics(&mut self) {
        let d = &mut self.diagnostics;
        d.max_residual = self.residual.iter().fold(0.0, |m, r| m.max(r.abs()));
        d.is_convex = self.upp.iter().all(|&v| v >= -CONVEXITY_TOL);
        d.gradient_monotone = self.s.windows(2).all(|w| w[1] - w[0] >= -1e-10);
    }

    /// Linear interpolation of `U` at radius `r` inside the grid.
    pub fn value_at(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let i = match nodes.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => return self.u[i],
            Err(i) => i.clamp(1, n - 1),
        };
        let t = (r - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
        self.u[i - 1] + t * (self.u[i] - self.u[i - 1])
    }
}

fn check_radial(problem: &ScalarProblem) -> Result<()> {
    if problem.source().is_radial() {
        Ok(())
    } else {
        Err(HjbError::InvalidArgument("the radial solver needs a radial source".into()))
    }
}

fn reconstruct_upp(r: &[f64], u: &[f64], s: &[f64], f: &[f64], n: usize, p: f64) -> Vec<f64> {
    let nf = n as f64;
    (0..r.len())
        .map(|i| {
            if i == 0 {
                2.0 * (u[0] - f[0]) / nf
            } else {
                2.0 * (s[i].abs().powf(p) / p + u[i] - f[i]) - (nf - 1.0) * s[i] / r[i]
            }
        })
        .collect()
}

/// Pointwise residual `-1/2(U'' + (N-1)/r U') + (1/p)|U'|^p + U - f` from the
/// stored `U`, `U'`, `U''`; the origin uses `-N/2 U''(0) + U(0) - f(0)`.
pub fn radial_residual(sol: &RadialSolution, problem: &ScalarProblem) -> Result<Vec<f64>> {
    if sol.dimension != problem.dimension() || sol.exponent != problem.exponent() {
        return Err(HjbError::InvalidArgument("solution was computed for a different problem".into()));
    }
    check_radial(problem)?;
    let nf = problem.dimension() as f64;
    let p = problem.exponent();
    Ok(sol
        .grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let f = problem.source().eval_radial(r);
            if i == 0 {
                -0.5 * nf * sol.upp[0] + sol.u[0] - f
            } else {
                -0.5 * (sol.upp[i] + (nf - 1.0) / r * sol.s[i]) + sol.s[i].abs().powf(p) / p + sol.u[i] - f
            }
        })
        .collect())
}

/// Discrete residual and tridiagonal Jacobian of the finite-difference system.
struct Discretisation<'a> {
    r: &'a [f64],
    f: Vec<f64>,
    h: f64,
    n: f64,
    p: f64,
    outer: Outer,
}

struct Assembly {
    residual: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Assembly {
    fn scaled_norm(&self) -> f64 {
        self.residual.iter().zip(&self.diag).fold(0.0, |m, (f, d)| m.max((f / d).abs()))
    }
}

impl Discretisation<'_> {
    /// `(1/p)|d|^p` and its derivative `|d|^{p-2} d` (taken as 0 at d = 0).
    fn hamiltonian(&self, d: f64, r: f64) -> Result<(f64, f64)> {
        let mag = d.abs();
        let value = mag.powf(self.p) / self.p;
        if !value.is_finite() || !mag.is_finite() {
            return Err(HjbError::Stiff { radius: r });
        }
        let slope = if mag == 0.0 { 0.0 } else { mag.powf(self.p - 1.0) * d.signum() };
        Ok((value, slope))
    }

    fn assemble(&self, u: &[f64]) -> Result<Assembly> {
        let m = u.len();
        let (h, h2, n) = (self.h, self.h * self.h, self.n);
        let mut a = Assembly { residual: vec![0.0; m], lower: vec![0.0; m], diag: vec![0.0; m], upper: vec![0.0; m] };

        a.residual[0] = -n * (u[1] - u[0]) / h2 + u[0] - self.f[0];
        a.diag[0] = n / h2 + 1.0;
        a.upper[0] = -n / h2;

        for i in 1..m - 1 {
            let r = self.r[i];
            let d = (u[i + 1] - u[i - 1]) / (2.0 * h);
            let (ham, dham) = self.hamiltonian(d, r)?;
            let second = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2;
            a.residual[i] = -0.5 * (second + (n - 1.0) / r * d) + ham + u[i] - self.f[i];
            a.diag[i] = 1.0 / h2 + 1.0;
            a.upper[i] = -0.5 * (1.0 / h2 + (n - 1.0) / (2.0 * h * r)) + dham / (2.0 * h);
            a.lower[i] = -0.5 * (1.0 / h2 - (n - 1.0) / (2.0 * h * r)) - dham / (2.0 * h);
        }

        let last = m - 1;
        match self.outer {
            Outer::Dirichlet(value) => {
                a.residual[last] = u[last] - value;
                a.diag[last] = 1.0;
            }
            Outer::Neumann(slope) => {
                // ghost node U_m = U_{m-2} + 2 h s_R
                let r = self.r[last];
                let (ham, _) = self.hamiltonian(slope, r)?;
                let second = (2.0 * u[last - 1] - 2.0 * u[last] + 2.0 * h * slope) / h2;
                a.residual[last] = -0.5 * (second + (n - 1.0) / r * slope) + ham + u[last] - self.f[last];
                a.diag[last] = 1.0 / h2 + 1.0;
                a.lower[last] = -1.0 / h2;
            }
        }
        Ok(a)
    }
}

/// Solves the radial boundary value problem on `[0, radius]`.
pub fn solve_radial_bvp(
    problem: &ScalarProblem,
    radius: f64,
    bc: &BoundaryCondition,
    options: &RadialOptions,
) -> Result<RadialSolution> {
    check_radial(problem)?;
    if !(options.newton_tol > 0.0) {
        return Err(HjbError::InvalidArgument("newton_tol must be positive".into()));
    }
    let grid = RadialGrid::uniform(radius, options.nodes)?;
    let outer = bc.resolve(problem, radius)?;
    let (nd, p) = (problem.dimension(), problem.exponent());
    let r = grid.nodes();
    let m = r.len();
    let f: Vec<f64> = r.iter().map(|&x| problem.source().eval_radial(x)).collect();

    let mut u: Vec<f64> = match &options.initial_guess {
        InitialGuess::Profile(v) => {
            if v.len() != m {
                return Err(HjbError::InvalidArgument(format!("initial profile has {} values, grid has {m}", v.len())));
            }
            v.clone()
        }
        InitialGuess::Source => f.clone(),
        InitialGuess::Auto => match problem.source() {
            SourceSpec::Quadratic { a, b } if p == 2.0 => {
                let c = scalar_quadratic_solution(*a, *b, nd)?;
                r.iter().map(|&x| c.value(x)).collect()
            }
            _ => f.clone(),
        },
    };
    if let Outer::Dirichlet(v) = outer {
        u[m - 1] = v;
    }

    let disc = Discretisation { r, f: f.clone(), h: grid.spacing(), n: nd as f64, p, outer };
    let mut asm = disc.assemble(&u)?;
    let mut norm = asm.scaled_norm();
    let mut trace = vec![norm];
    let mut iterations = 0;
    let mut shift = 0.0;
    while norm > options.newton_tol {
        if iterations == options.max_newton_iters {
            return Err(HjbError::NonConvergence { iterations, residual: norm, trace });
        }
        let rhs: Vec<f64> = asm.residual.iter().map(|v| -v).collect();
        // Newton step, regularised by a diagonal shift whenever the full step
        // fails to reduce the residual.
        loop {
            let diag: Vec<f64> = asm.diag.iter().map(|d| d * (1.0 + shift)).collect();
            let step = solve_tridiagonal(&asm.lower, &diag, &asm.upper, &rhs)?;
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, dx)| x + dx).collect();
            // A step that overflows the gradient term counts as a failure.
            if let Ok(candidate) = disc.assemble(&trial) {
                if candidate.scaled_norm() < norm {
                    asm = candidate;
                    u = trial;
                    norm = asm.scaled_norm();
                    shift = if shift < MIN_SHIFT { 0.0 } else { shift / 10.0 };
                    break;
                }
            }
            shift = if shift == 0.0 { MIN_SHIFT } else { shift * 10.0 };
            if shift > MAX_SHIFT {
                return Err(HjbError::NonConvergence { iterations, residual: norm, trace });
            }
        }
        iterations += 1;
        trace.push(norm);
    }

    let h = grid.spacing();
    let mut s = vec![0.0; m];
    for i in 1..m - 1 {
        s[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    s[m - 1] = match outer {
        Outer::Neumann(slope) => slope,
        Outer::Dirichlet(_) => (3.0 * u[m - 1] - 4.0 * u[m - 2] + u[m - 3]) / (2.0 * h),
    };

    let mut sol = RadialSolution::from_values(grid, problem, u, s)?;
    sol.diagnostics.iterations = iterations;
    sol.diagnostics.newton_residual = norm;
    sol.diagnostics.newton_trace = trace;
    Ok(sol)
}

/// Result of evaluating the global subsolution barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsolutionCheck {
    /// `max (L[u] - f)` over the samples; `<= 0` certifies the samples.
    pub max_excess: f64,
    pub argmax_radius: f64,
    /// `c` lies in the admissible range `(0, p^{1/(p-1)} q^{-q})`.
    pub admissible: bool,
}

/// Upper end of the admissible range of `c` for the subsolution barrier.
pub fn barrier_c_limit(p: f64) -> Result<f64> {
    let q = conjugate_exponent(p)?;
    Ok(p.powf(1.0 / (p - 1.0)) * q.powf(-q))
}

/// Evaluates `L[u] - f` for `u(r) = -c(1+r^2)^{q/2} - C`, with
/// `L[w] = -1/2 Δw + (1/p)|∇w|^p + w`, at each sample radius.
pub fn subsolution_barrier_excess(
    c: f64,
    big_c: f64,
    p: f64,
    n: usize,
    source: &SourceSpec,
    sample_radii: &[f64],
) -> Result<SubsolutionCheck> {
    let q = conjugate_exponent(p)?;
    if !source.is_radial() {
        return Err(HjbError::InvalidArgument("barrier check needs a radial source".into()));
    }
    if sample_radii.is_empty() || sample_radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(HjbError::InvalidArgument("sample radii must be non-empty and >= 0".into()));
    }
    let admissible = c > 0.0 && c < barrier_c_limit(p)? && big_c >= 0.0;
    let nf = n as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &r in sample_radii {
        let s = 1.0 + r * r;
        let laplacian_term =
            0.5 * c * q * nf * s.powf(q / 2.0 - 1.0) + 0.5 * c * q * (q - 2.0) * s.powf(q / 2.0 - 2.0) * r * r;
        let gradient_term = c.powf(p) * q.powf(p) / p * s.powf(p * (q / 2.0 - 1.0)) * r.powf(p);
        let value = laplacian_term + gradient_term - c * s.powf(q / 2.0) - big_c;
        let excess = value - source.eval_radial(r);
        if excess > best.0 {
            best = (excess, r);
        }
    }
    Ok(SubsolutionCheck { max_excess: best.0, argmax_radius: best.1, admissible })
}

/// Certified barrier parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierCertificate {
    pub c: f64,
    pub big_c: f64,
    pub max_excess: f64,
}

impl BarrierCertificate {
    pub fn value(&self, r: f64, q: f64) -> f64 {
        -self.c * (1.0 + r * r).powf(q / 2.0) - self.big_c
    }
}

/// Smallest `C >= 0` (to bisection accuracy) for which the barrier with the
/// given `c` has non-positive excess on the samples.
pub fn certify_subsolution_barrier(
    c: f64,
    p: f64,
    n: usize,
    source: &SourceSpec,
    sample_radii: &[f64],
) -> Result<BarrierCertificate> {
    let excess = |big_c: f64| subsolution_barrier_excess(c, big_c, p, n, source, sample_radii);
    let at_zero = excess(0.0)?;
    if at_zero.max_excess <= 0.0 {
        return Ok(BarrierCertificate { c, big_c: 0.0, max_excess: at_zero.max_excess });
    }
    let mut lo = 0.0;
    let mut hi = at_zero.max_excess.max(1.0);
    let mut doublings = 0;
    while excess(hi)?.max_excess > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(HjbError::NonConvergence { iterations: doublings, residual: hi, trace: Vec::new() });
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)?.max_excess > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let check = excess(hi)?;
    Ok(BarrierCertificate { c, big_c: hi, max_excess: check.max_excess })
}

/// Minimum over the samples of `-1/2 Δφ + (1/p)|φ'|^p + φ` for the blow-up
/// profile `φ(r) = (R - r)^{-α}`.
pub fn explosive_barrier_margin(outer_radius: f64, alpha: f64, p: f64, n: usize, radii: &[f64]) -> Result<f64> {
    conjugate_exponent(p)?;
    if !(alpha > 0.0) {
        return Err(HjbError::Domain(format!("alpha must be > 0, got {alpha}")));
    }
    if radii.is_empty() {
        return Err(HjbError::InvalidArgument("no sample radii".into()));
    }
    let nf = n as f64;
    let mut min_margin = f64::INFINITY;
    for &r in radii {
        if !(r < outer_radius) {
            return Err(HjbError::Domain(format!("radius {r} is not inside the ball of radius {outer_radius}")));
        }
        if !(r > 0.0) {
            return Err(HjbError::Domain("radii must be positive".into()));
        }
        let d = outer_radius - r;
        let laplacian = alpha * (alpha + 1.0) * d.powf(-alpha - 2.0) + (nf - 1.0) * alpha / r * d.powf(-alpha - 1.0);
        let gradient = alpha.powf(p) / p * d.powf(-p * (alpha + 1.0));
        let margin = -0.5 * laplacian + gradient + d.powf(-alpha);
        min_margin = min_margin.min(margin);
    }
    Ok(min_margin)
}

/// `sup_{r<=ρ}|U'| / (ρ^{-1} sup_{r<=2ρ}|U| + sup_{r<=2ρ}|f|^{1/p} + 1)`.
pub fn gradient_bound_ratio(sol: &RadialSolution, inner_radius: f64, source: &SourceSpec) -> Result<f64> {
    if !(inner_radius > 0.0) || inner_radius > 0.5 * sol.grid.radius() * (1.0 + 1e-12) {
        return Err(HjbError::InvalidArgument(format!(
            "inner radius {inner_radius} must lie in (0, R/2] with R = {}",
            sol.grid.radius()
        )));
    }
    let p = sol.exponent;
    let outer = 2.0 * inner_radius * (1.0 + 1e-12);
    let inner = inner_radius * (1.0 + 1e-12);
    let mut grad: f64 = 0.0;
    let mut sup_u: f64 = 0.0;
    let mut sup_f: f64 = 0.0;
    for (i, &r) in sol.grid.nodes().iter().enumerate() {
        if r <= inner {
            grad = grad.max(sol.s[i].abs());
        }
        if r <= outer {
            sup_u = sup_u.max(sol.u[i].abs());
            sup_f = sup_f.max(source.eval_radial(r).abs().powf(1.0 / p));
        }
    }
    Ok(grad / (sup_u / inner_radius + sup_f + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::QuadraticCoefficients;

    fn quad_problem(n: usize) -> ScalarProblem {
        ScalarProblem::quadratic(n, 1.0, 0.0).unwrap()
    }

    fn exact_solution(problem: &ScalarProblem, c: QuadraticCoefficients, radius: f64, m: usize) -> RadialSolution {
        let grid = RadialGrid::uniform(radius, m).unwrap();
        let u = grid.nodes().iter().map(|&r| c.value(r)).collect();
        let s = grid.nodes().iter().map(|&r| c.slope(r)).collect();
        RadialSolution::from_values(grid, problem, u, s).unwrap()
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = RadialGrid::uniform(10.0, 600).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.radius(), 10.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(RadialGrid::uniform(10.0, 15).is_err());
        assert!(RadialGrid::uniform(0.0, 100).is_err());
    }

    #[test]
    fn exact_quadratic_residual_vanishes() {
        let problem = ScalarProblem::quadratic(3, 2.0, 1.0).unwrap();
        let c = scalar_quadratic_solution(2.0, 1.0, 3).unwrap();
        let sol = exact_solution(&problem, c, 10.0, 200);
        assert!(sol.residual.iter().all(|r| r.abs() <= 1e-13), "{}", sol.diagnostics.max_residual);
    }

    #[test]
    fn constant_shift_moves_residual_by_epsilon() {
        let problem = quad_problem(2);
        let c = scalar_quadratic_solution(1.0, 0.0, 2).unwrap();
        let sol = exact_solution(&problem, c, 5.0, 64);
        let eps = 0.125;
        let mut shifted = sol.clone();
        shifted.u.iter_mut().for_each(|v| *v += eps);
        let base = radial_residual(&sol, &problem).unwrap();
        let moved = radial_residual(&shifted, &problem).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert!((b - a - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_source_gives_constant_solution() {
        for n in 1..=3 {
            let table = crate::model::RadialTable::sample(4.0, 50, |_| 1.5).unwrap();
            let problem = ScalarProblem::new(n, 2.0, SourceSpec::Tabulated(table)).unwrap();
            let sol = solve_radial_bvp(
                &problem,
                4.0,
                &BoundaryCondition::DirichletValue(1.5),
                &RadialOptions { nodes: 100, ..Default::default() },
            )
            .unwrap();
            assert!(sol.u.iter().all(|v| (v - 1.5).abs() < 1e-14));
            assert!(sol.s.iter().all(|v| v.abs() < 1e-12));
            assert!(sol.diagnostics.max_residual < 1e-12);
        }
    }

    #[test]
    fn exact_bc_needs_quadratic_source() {
        let table = crate::model::RadialTable::sample(4.0, 50, |r| r * r).unwrap();
        let problem = ScalarProblem::new(1, 2.0, SourceSpec::Tabulated(table)).unwrap();
        let res = solve_radial_bvp(&problem, 4.0, &BoundaryCondition::NeumannExactQuadratic, &RadialOptions::default());
        assert!(matches!(res, Err(HjbError::InvalidArgument(_))));
    }

    #[test]
    fn rejects_non_radial_source() {
        let f = SourceSpec::AnisotropicQuadratic { cxx: 1.0, cyy: 3.0, cxy: 0.5, c0: 2.0 };
        let problem = ScalarProblem::new(2, 2.0, f).unwrap();
        assert!(solve_radial_bvp(&problem, 4.0, &BoundaryCondition::DirichletValue(0.0), &RadialOptions::default())
            .is_err());
    }

    #[test]
    fn newton_failure_carries_trace() {
        let problem = quad_problem(2);
        let opts =
            RadialOptions { nodes: 200, newton_tol: 1e-12, max_newton_iters: 1, initial_guess: InitialGuess::Source };
        match solve_radial_bvp(&problem, 10.0, &BoundaryCondition::DirichletValue(-30.0), &opts) {
            Err(HjbError::NonConvergence { iterations, trace, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(trace.len(), 2);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn barrier_shift_is_exact() {
        let f = SourceSpec::Quadratic { a: 1.0, b: 0.0 };
        let radii: Vec<f64> = (0..=100).map(|i| i as f64 * 0.5).collect();
        let c = 0.5 * barrier_c_limit(2.0).unwrap();
        let e1 = subsolution_barrier_excess(c, 3.0, 2.0, 2, &f, &radii).unwrap();
        let e2 = subsolution_barrier_excess(c, 13.0, 2.0, 2, &f, &radii).unwrap();
        assert!((e1.max_excess - e2.max_excess - 10.0).abs() < 1e-12);
        assert!(e1.admissible);
    }

    #[test]
    fn barrier_limit_for_p2() {
        assert!((barrier_c_limit(2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn explosive_barrier_rejects_outside_radius() {
        assert!(matches!(explosive_barrier_margin(5.0, 10.0, 2.0, 2, &[5.0]), Err(HjbError::Domain(_))));
    }

    #[test]
    fn explosive_margin_blows_up_towards_the_boundary() {
        let near = explosive_barrier_margin(5.0, 10.0, 2.0, 2, &[4.999]).unwrap();
        let far = explosive_barrier_margin(5.0, 10.0, 2.0, 2, &[4.9]).unwrap();
        assert!(near > far && near > 1e60);
    }

    #[test]
    fn gradient_ratio_is_zero_for_constants() {
        let table = crate::model::RadialTable::sample(10.0, 50, |_| 2.0).unwrap();
        let source = SourceSpec::Tabulated(table);
        let problem = ScalarProblem::new(2, 2.0, source.clone()).unwrap();
        let grid = RadialGrid::uniform(10.0, 101).unwrap();
        let sol = RadialSolution::from_values(grid, &problem, vec![2.0; 101], vec![0.0; 101]).unwrap();
        assert_eq!(gradient_bound_ratio(&sol, 5.0, &source).unwrap(), 0.0);
        assert!(gradient_bound_ratio(&sol, 6.0, &source).is_err());
    }
}
