//! Damped fixed-point finite-difference solver on the square `[-L, L]^2`.
//!
//! Each sweep solves the linear problem
//!
//! ```text
//! (λ I - 1/2 Δ_h) u_new = λ u - ((1/p)|∇_h u|^p + u - f)
//! ```
//!
//! on the interior nodes with the frame pinned, then relaxes
//! `u <- d u + (1 - d) u_new`. The matrix does not change between sweeps and
//! is factored once.
//!
//! Two stencils for the squared gradient are available, both using nearest
//! neighbours only so that every interior node, including the first ring,
//! gets the same treatment (see [`GradientScheme`]).

use crate::error::{HjbError, Result};
use crate::exact::QuadraticCoefficients;
use crate::linalg::BandCholesky;
use crate::model::{conjugate_exponent, SourceSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    half_width: f64,
    n: usize,
}

impl Grid2D {
    pub const MIN_NODES: usize = 8;

    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(HjbError::InvalidArgument(format!("half-width must be > 0, got {half_width}")));
        }
        if n < Self::MIN_NODES {
            return Err(HjbError::InvalidArgument(format!(
                "need at least {} nodes per axis, got {n}",
                Self::MIN_NODES
            )));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.spacing()
        }
    }

    pub fn is_frame(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.n || j + 1 == self.n
    }
}

/// Node values stored with the x index outermost: `values[i * n + j]` is the
/// value at `(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        let n = grid.nodes_per_axis();
        if values.len() != n * n {
            return Err(HjbError::InvalidArgument(format!("expected {} values, got {}", n * n, values.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.nodes_per_axis();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(grid.coord(i), grid.coord(j)));
            }
        }
        Self { grid, values }
    }

    pub fn source(grid: Grid2D, source: &SourceSpec) -> Self {
        Self::from_fn(grid, |x, y| source.eval_xy(x, y))
    }

    pub fn exact_quadratic(grid: Grid2D, coeffs: &QuadraticCoefficients) -> Self {
        Self::from_fn(grid, |x, y| coeffs.value((x * x + y * y).sqrt()))
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nodes_per_axis() + j]
    }
}

/// Discretisation of `|∇u|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientScheme {
    /// `1/2 (D+x^2 + D-x^2 + D+y^2 + D-y^2)`: second order, but not monotone,
    /// so it needs moderate gradients (cell Péclet number below one).
    #[default]
    Averaged,
    /// `max(D-x, 0)^2 + min(D+x, 0)^2 + (same in y)`: first order and
    /// monotone; stays stable across steep boundary layers.
    Upwind,
}

impl GradientScheme {
    fn squared_gradient(&self, fx: f64, bx: f64, fy: f64, by: f64) -> f64 {
        match self {
            GradientScheme::Averaged => 0.5 * (fx * fx + bx * bx + fy * fy + by * by),
            GradientScheme::Upwind => {
                bx.max(0.0).powi(2) + fx.min(0.0).powi(2) + by.max(0.0).powi(2) + fy.min(0.0).powi(2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    /// `||u_new - u||_2 / (||u||_2 + 1e-10)` per sweep.
    pub rel_updates: Vec<f64>,
    /// `max |u|` after each sweep.
    pub max_abs: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Nodes where the gradient clip was active in the last sweep. A
    /// converged field with clipped nodes solves the clipped equation only.
    pub clipped_nodes: usize,
}

impl IterationLog {
    /// Converged without the gradient clip being active.
    pub fn is_reliable(&self) -> bool {
        self.converged && self.clipped_nodes == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fd2dOptions {
    pub lambda: f64,
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Ceiling on `|∇u|^2` before exponentiation; `None` picks 1e8 for
    /// `p = 2` and 1e12 otherwise.
    pub gradient_clip: Option<f64>,
    pub scheme: GradientScheme,
}

impl Default for Fd2dOptions {
    fn default() -> Self {
        Self {
            lambda: 20.0,
            damping: 0.5,
            tol: 1e-6,
            max_iters: 1000,
            gradient_clip: None,
            scheme: GradientScheme::Averaged,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fd2dResult {
    pub field: Field2D,
    pub log: IterationLog,
}

/// Runs the damped iteration. `start` supplies both the boundary data (its
/// frame nodes, held fixed) and the initial iterate (its interior nodes).
///
/// Running out of iterations is not an error: the last iterate is returned
/// with `log.converged == false`. An iterate that stops being finite is.
pub fn solve_fd2d(source: &SourceSpec, p: f64, start: &Field2D, options: &Fd2dOptions) -> Result<Fd2dResult> {
    conjugate_exponent(p)?;
    source.validate(p)?;
    if !(options.lambda > 0.0) {
        return Err(HjbError::InvalidArgument(format!("lambda must be > 0, got {}", options.lambda)));
    }
    if !(options.damping > 0.0 && options.damping < 1.0) {
        return Err(HjbError::InvalidArgument(format!("damping must lie in (0, 1), got {}", options.damping)));
    }
    if !(options.tol > 0.0) {
        return Err(HjbError::InvalidArgument("tolerance must be positive".into()));
    }
    if start.values.iter().any(|v| !v.is_finite()) {
        return Err(HjbError::InvalidArgument("starting field has non-finite values".into()));
    }
    let clip = options.gradient_clip.unwrap_or(if p == 2.0 { 1e8 } else { 1e12 });
    let grid = *start.grid();
    let n = grid.nodes_per_axis();
    let ni = n - 2;
    let h = grid.spacing();
    let h2 = h * h;
    let lambda = options.lambda;

    // Interior unknown (i, j), 1 <= i, j <= n-2, has index (i-1)*ni + (j-1).
    let diag = lambda + 2.0 / h2;
    let off = -0.5 / h2;
    let matrix = BandCholesky::factor(ni * ni, ni, |row, col| {
        if row == col {
            diag
        } else if row - col == ni || (row - col == 1 && row % ni != 0) {
            off
        } else {
            0.0
        }
    })?;

    let f: Vec<f64> = Field2D::source(grid, source).values;
    let mut u = start.values.clone();
    let idx = |i: usize, j: usize| i * n + j;
    let mut log = IterationLog {
        rel_updates: Vec::new(),
        max_abs: Vec::new(),
        converged: false,
        iterations: 0,
        clipped_nodes: 0,
    };
    let mut rhs = vec![0.0; ni * ni];

    for _ in 0..options.max_iters {
        let mut clipped = 0;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let c = u[idx(i, j)];
                let fx = (u[idx(i + 1, j)] - c) / h;
                let bx = (c - u[idx(i - 1, j)]) / h;
                let fy = (u[idx(i, j + 1)] - c) / h;
                let by = (c - u[idx(i, j - 1)]) / h;
                let mut g2 = options.scheme.squared_gradient(fx, bx, fy, by);
                if g2 > clip {
                    g2 = clip;
                    clipped += 1;
                }
                let ham = g2.powf(0.5 * p) / p;
                let mut value = lambda * c - (ham + c - f[idx(i, j)]);
                if i == 1 {
                    value += 0.5 * u[idx(0, j)] / h2;
                }
                if i == n - 2 {
                    value += 0.5 * u[idx(n - 1, j)] / h2;
                }
                if j == 1 {
                    value += 0.5 * u[idx(i, 0)] / h2;
                }
                if j == n - 2 {
                    value += 0.5 * u[idx(i, n - 1)] / h2;
                }
                rhs[(i - 1) * ni + (j - 1)] = value;
            }
        }
        let interior = matrix.solve(&rhs)?;

        let mut diff_sq = 0.0;
        let mut norm_sq = 0.0;
        for v in &u {
            norm_sq += v * v;
        }
        let d = options.damping;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let k = idx(i, j);
                let new = interior[(i - 1) * ni + (j - 1)];
                diff_sq += (new - u[k]).powi(2);
                u[k] = d * u[k] + (1.0 - d) * new;
            }
        }
        let rel = diff_sq.sqrt() / (norm_sq.sqrt() + 1e-10);
        let max_abs = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        log.iterations += 1;
        log.clipped_nodes = clipped;
        log.rel_updates.push(rel);
        log.max_abs.push(max_abs);
        if !max_abs.is_finite() || !rel.is_finite() {
            return Err(HjbError::NonConvergence { iterations: log.iterations, residual: rel, trace: log.rel_updates });
        }
        if rel <= options.tol {
            log.converged = true;
            break;
        }
    }

    Ok(Fd2dResult { field: Field2D { grid, values: u }, log })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub max_bin_spread: f64,
    /// Spread (max - min) per annulus; `None` for empty annuli.
    pub per_bin: Vec<Option<f64>>,
    pub empty_bins: Vec<usize>,
    pub bin_width: f64,
}

/// Buckets all nodes into `n_bins` annuli of equal width covering
/// `[0, L√2]` and reports the spread of the field inside each annulus.
pub fn radial_symmetry_deviation(field: &Field2D, n_bins: usize) -> Result<SymmetryReport> {
    if n_bins < 4 {
        return Err(HjbError::InvalidArgument(format!("need at least 4 bins, got {n_bins}")));
    }
    let grid = field.grid();
    let n = grid.nodes_per_axis();
    let outer = grid.half_width() * std::f64::consts::SQRT_2;
    let width = outer / n_bins as f64;
    let mut lo = vec![f64::INFINITY; n_bins];
    let mut hi = vec![f64::NEG_INFINITY; n_bins];
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (grid.coord(i), grid.coord(j));
            let r = (x * x + y * y).sqrt();
            let bin = ((r / width) as usize).min(n_bins - 1);
            let v = field.get(i, j);
            lo[bin] = lo[bin].min(v);
            hi[bin] = hi[bin].max(v);
        }
    }
    let per_bin: Vec<Option<f64>> =
        lo.iter().zip(&hi).map(|(l, h)| if l.is_finite() { Some(h - l) } else { None }).collect();
    let empty_bins = per_bin.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(k, _)| k).collect();
    let max_bin_spread = per_bin.iter().flatten().fold(0.0_f64, |m, s| m.max(*s));
    Ok(SymmetryReport { max_bin_spread, per_bin, empty_bins, bin_width: width })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub max_abs_err: f64,
    pub rms_err: f64,
}

/// Compares a field with `A(x^2+y^2) + B` on the interior nodes.
pub fn compare_to_exact(field: &Field2D, coeffs: &QuadraticCoefficients) -> ErrorReport {
    let grid = field.grid();
    let n = grid.nodes_per_axis();
    let mut max_abs_err: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let (x, y) = (grid.coord(i), grid.coord(j));
            let err = (field.get(i, j) - coeffs.value((x * x + y * y).sqrt())).abs();
            max_abs_err = max_abs_err.max(err);
            sum_sq += err * err;
            count += 1;
        }
    }
    ErrorReport { max_abs_err, rms_err: (sum_sq / count as f64).sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::scalar_quadratic_solution;

    #[test]
    fn grid_rejects_small_sizes() {
        assert!(Grid2D::new(1.0, 7).is_err());
        assert!(Grid2D::new(-1.0, 10).is_err());
        let g = Grid2D::new(2.0, 9).unwrap();
        assert_eq!(g.coord(0), -2.0);
        assert_eq!(g.coord(8), 2.0);
        assert!((g.spacing() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_source_is_a_fixed_point() {
        let grid = Grid2D::new(1.0, 12).unwrap();
        let table = crate::model::RadialTable::sample(2.0, 10, |_| 3.0).unwrap();
        let source = SourceSpec::Tabulated(table);
        let start = Field2D::from_fn(grid, |_, _| 3.0);
        let res = solve_fd2d(&source, 2.0, &start, &Fd2dOptions::default()).unwrap();
        assert!(res.log.converged);
        assert!(res.log.iterations <= 2);
        assert!(res.field.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn exact_field_has_zero_error() {
        let grid = Grid2D::new(2.0, 20).unwrap();
        let c = scalar_quadratic_solution(2.0, 1.0, 2).unwrap();
        let field = Field2D::exact_quadratic(grid, &c);
        let e = compare_to_exact(&field, &c);
        assert_eq!(e.max_abs_err, 0.0);
        assert_eq!(e.rms_err, 0.0);
    }

    #[test]
    fn boundary_is_excluded_from_comparison() {
        let grid = Grid2D::new(2.0, 10).unwrap();
        let c = scalar_quadratic_solution(1.0, 0.0, 2).unwrap();
        let mut field = Field2D::exact_quadratic(grid, &c);
        field.values[0] += 100.0;
        assert_eq!(compare_to_exact(&field, &c).max_abs_err, 0.0);
    }

    #[test]
    fn symmetry_needs_four_bins() {
        let grid = Grid2D::new(1.0, 10).unwrap();
        let field = Field2D::from_fn(grid, |_, _| 0.0);
        assert!(radial_symmetry_deviation(&field, 3).is_err());
        assert_eq!(radial_symmetry_deviation(&field, 4).unwrap().max_bin_spread, 0.0);
    }

    #[test]
    fn iteration_cap_returns_unconverged_field() {
        let grid = Grid2D::new(2.0, 16).unwrap();
        let source = SourceSpec::Quadratic { a: 2.0, b: 1.0 };
        let start = Field2D::source(grid, &source);
        let opts = Fd2dOptions { max_iters: 3, ..Default::default() };
        let res = solve_fd2d(&source, 2.0, &start, &opts).unwrap();
        assert!(!res.log.converged);
        assert_eq!(res.log.iterations, 3);
    }
}
