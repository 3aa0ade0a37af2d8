//! Problem definitions shared by every solver.
//!
//! A [`ScalarProblem`] describes one instance of
//! `-1/2 Δu + (1/p)|∇u|^p + u = f` on `R^N`; a [`RegimeModel`] describes the
//! weakly coupled system obtained when a Markov chain modulates the discount,
//! volatility and quadratic source.

use std::fmt;

use crate::error::{HjbError, Result};
use crate::linalg;

/// Tolerance for the generator row-sum check.
pub const GENERATOR_ROW_TOL: f64 = 1e-12;

/// `q = p / (p - 1)`, the exponent paired with `p` by Legendre duality.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(HjbError::Domain(format!("exponent p must be finite and > 1, got {p}")));
    }
    Ok(p / (p - 1.0))
}

/// Radial samples `(r_i, f(r_i))` of a source, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl RadialTable {
    /// The first radius must be 0 and radii must be strictly increasing.
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(HjbError::InvalidArgument(format!(
                "table has {} radii but {} values",
                radii.len(),
                values.len()
            )));
        }
        if radii.len() < 2 {
            return Err(HjbError::InvalidArgument("table needs at least two samples".into()));
        }
        if radii[0] != 0.0 {
            return Err(HjbError::InvalidArgument("table must start at r = 0".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HjbError::InvalidArgument("table radii must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HjbError::InvalidArgument("table values must be finite".into()));
        }
        Ok(Self { radii, values })
    }

    /// Samples `profile` at `count` equally spaced radii on `[0, max_radius]`.
    pub fn sample<F: Fn(f64) -> f64>(max_radius: f64, count: usize, profile: F) -> Result<Self> {
        if count < 2 || !(max_radius > 0.0) {
            return Err(HjbError::InvalidArgument("need count >= 2 and a positive radius".into()));
        }
        let step = max_radius / (count - 1) as f64;
        let radii: Vec<f64> = (0..count).map(|i| if i + 1 == count { max_radius } else { i as f64 * step }).collect();
        let values = radii.iter().map(|&r| profile(r)).collect();
        Self::new(radii, values)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().expect("table is non-empty")
    }

    /// Piecewise-linear interpolation; the end segments are extended linearly.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.radii.len();
        let idx = match self.radii.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(i) => return self.values[i],
            Err(i) => i.clamp(1, n - 1),
        };
        let (r0, r1) = (self.radii[idx - 1], self.radii[idx]);
        let (f0, f1) = (self.values[idx - 1], self.values[idx]);
        f0 + (f1 - f0) * (r - r0) / (r1 - r0)
    }
}

/// The running cost `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// `f(x) = a|x|^2 + b`.
    Quadratic { a: f64, b: f64 },
    /// `f(x, y) = cxx x^2 + cyy y^2 + cxy x y + c0` (two-dimensional only).
    AnisotropicQuadratic { cxx: f64, cyy: f64, cxy: f64, c0: f64 },
    /// Radial profile `f(x) = g(|x|)` given by samples.
    Tabulated(RadialTable),
}

impl SourceSpec {
    pub fn is_radial(&self) -> bool {
        !matches!(self, SourceSpec::AnisotropicQuadratic { .. })
    }

    /// Checks the coefficient constraints of each kind.
    ///
    /// Tabulated sources are checked against the power lower bound
    /// `f(r) r^{-q} >= 0` on the outer tenth of the table, the only part of the
    /// growth framework that a finite table can express.
    pub fn validate(&self, p: f64) -> Result<()> {
        match self {
            SourceSpec::Quadratic { a, b } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(HjbError::Domain(format!("quadratic source needs a > 0, got {a}")));
                }
                if !(b.is_finite() && *b >= 0.0) {
                    return Err(HjbError::Domain(format!("quadratic source needs b >= 0, got {b}")));
                }
            }
            SourceSpec::AnisotropicQuadratic { cxx, cyy, cxy, c0 } => {
                if ![cxx, cyy, cxy, c0].iter().all(|v| v.is_finite()) {
                    return Err(HjbError::Domain("anisotropic coefficients must be finite".into()));
                }
                // Hessian [[2cxx, cxy], [cxy, 2cyy]] must be positive semidefinite.
                let det = 4.0 * cxx * cyy - cxy * cxy;
                let scale = (cxx.abs() + cyy.abs() + cxy.abs()).max(1.0);
                if *cxx < 0.0 || *cyy < 0.0 || det < -1e-12 * scale * scale {
                    return Err(HjbError::Domain(
                        "anisotropic source is not convex (Hessian not positive semidefinite)".into(),
                    ));
                }
            }
            SourceSpec::Tabulated(table) => {
                let q = conjugate_exponent(p)?;
                let n = table.radii.len();
                let start = (n - n / 10).min(n - 1);
                for i in start..n {
                    let r = table.radii[i];
                    if r > 0.0 && table.values[i] * r.powf(-q) < -1e-12 {
                        return Err(HjbError::Domain(format!(
                            "tabulated source violates the power lower bound at r = {r}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Value at radius `r`. Only meaningful for radial kinds.
    pub fn eval_radial(&self, r: f64) -> f64 {
        match self {
            SourceSpec::Quadratic { a, b } => a * r * r + b,
            SourceSpec::Tabulated(table) => table.eval(r),
            SourceSpec::AnisotropicQuadratic { cxx, c0, .. } => cxx * r * r + c0,
        }
    }

    /// Value at a planar point.
    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        match self {
            SourceSpec::AnisotropicQuadratic { cxx, cyy, cxy, c0 } => cxx * x * x + cyy * y * y + cxy * x * y + c0,
            _ => self.eval_radial(x.hypot(y)),
        }
    }
}

/// One instance of the scalar equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarProblem {
    dimension: usize,
    exponent: f64,
    source: SourceSpec,
}

impl ScalarProblem {
    pub fn new(dimension: usize, exponent: f64, source: SourceSpec) -> Result<Self> {
        if dimension == 0 {
            return Err(HjbError::Domain("dimension N must be >= 1".into()));
        }
        conjugate_exponent(exponent)?;
        source.validate(exponent)?;
        Ok(Self { dimension, exponent, source })
    }

    /// `f = a|x|^2 + b` with `p = 2`.
    pub fn quadratic(dimension: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(dimension, 2.0, SourceSpec::Quadratic { a, b })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn conjugate(&self) -> f64 {
        self.exponent / (self.exponent - 1.0)
    }

    pub fn source(&self) -> &SourceSpec {
        &self.source
    }
}

/// Grid-search check of the Legendre pair `|v|^q/q <-> |xi|^p/p`.
#[derive(Debug, Clone, PartialEq)]
pub struct FenchelCheck {
    /// `min_v { v.xi + |v|^q / q }` over the search grid.
    pub numeric_inf: f64,
    /// `-|xi|^p / p`.
    pub closed_form: f64,
    /// Grid point achieving `numeric_inf`.
    pub grid_argmin: Vec<f64>,
    /// `-|xi|^{p-2} xi`.
    pub exact_argmin: Vec<f64>,
    /// Upper bound on `numeric_inf - closed_form` implied by the grid spacing.
    pub error_bound: f64,
}

/// Minimises `v.xi + |v|^q/q` over the cube `[-radius, radius]^d` by
/// exhaustive search on a tensor grid and compares with `-|xi|^p/p`.
pub fn fenchel_conjugate_numeric(
    xi: &[f64],
    p: f64,
    search_radius: f64,
    grid_points_per_axis: usize,
) -> Result<FenchelCheck> {
    let q = conjugate_exponent(p)?;
    let d = xi.len();
    if d == 0 || grid_points_per_axis < 3 {
        return Err(HjbError::InvalidArgument(
            "search grid is empty: need a non-empty xi and at least 3 points per axis".into(),
        ));
    }
    if !(search_radius.is_finite() && search_radius > 0.0) {
        return Err(HjbError::InvalidArgument("search radius must be positive".into()));
    }
    let total = (grid_points_per_axis as u64).checked_pow(d as u32).filter(|&t| t <= 1 << 28);
    let Some(total) = total else {
        return Err(HjbError::InvalidArgument("search grid too large".into()));
    };

    let step = 2.0 * search_radius / (grid_points_per_axis - 1) as f64;
    let coord = |k: usize| -search_radius + k as f64 * step;
    let mut best = f64::INFINITY;
    let mut best_v = vec![0.0; d];
    let mut v = vec![0.0; d];
    for flat in 0..total {
        let mut rest = flat;
        for slot in v.iter_mut() {
            *slot = coord((rest % grid_points_per_axis as u64) as usize);
            rest /= grid_points_per_axis as u64;
        }
        let dot: f64 = v.iter().zip(xi).map(|(a, b)| a * b).sum();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let value = dot + norm.powf(q) / q;
        if value < best {
            best = value;
            best_v.copy_from_slice(&v);
        }
    }

    let xi_norm = xi.iter().map(|a| a * a).sum::<f64>().sqrt();
    let closed_form = -xi_norm.powf(p) / p;
    let exact_argmin: Vec<f64> = if xi_norm == 0.0 {
        vec![0.0; d]
    } else {
        let scale = xi_norm.powf(p - 2.0);
        xi.iter().map(|x| -scale * x).collect()
    };
    // The minimiser lies within half a cell diagonal of a grid node, and the
    // gradient xi + |v|^{q-2} v is bounded by |xi| + |v|^{q-1} along the way.
    let delta = 0.5 * step * (d as f64).sqrt();
    let v_star = xi_norm.powf(p - 1.0);
    let error_bound = delta * (xi_norm + (v_star + delta).powf(q - 1.0));

    Ok(FenchelCheck { numeric_inf: best, closed_form, grid_argmin: best_v, exact_argmin, error_bound })
}

/// Regime-switching system with quadratic sources and `p_j = 2`:
///
/// `-(σ_j²/2) Δu_j + (1/2)|∇u_j|² + δ_j u_j - Σ_l α_{jl} u_l = a_j |x|² + b_j`.
///
/// `generator` is the probabilistic generator of the chain: non-negative
/// off-diagonal rates and rows summing to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeModel {
    pub delta: Vec<f64>,
    pub generator: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub dimension: usize,
}

impl RegimeModel {
    /// Builds a model from off-diagonal rates; the diagonal is filled so that
    /// rows sum to zero.
    pub fn from_rates(
        delta: Vec<f64>,
        rates: Vec<Vec<f64>>,
        sigma: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
        dimension: usize,
    ) -> Self {
        let mut generator = rates;
        for (j, row) in generator.iter_mut().enumerate() {
            if j < row.len() {
                row[j] = 0.0;
                let off: f64 = row.iter().sum();
                row[j] = -off;
            }
        }
        Self { delta, generator, sigma, a, b, dimension }
    }

    /// Two-regime expansion/recession production model used as the default
    /// benchmark: unit discounts, switching rates 0.4 and 0.6, `N = 2`.
    pub fn two_regime_benchmark() -> Self {
        Self::from_rates(
            vec![1.0, 1.0],
            vec![vec![0.0, 0.4], vec![0.6, 0.0]],
            vec![0.3, 1.0],
            vec![2.5, 0.5],
            vec![1.0, 0.5],
            2,
        )
    }

    pub fn regimes(&self) -> usize {
        self.delta.len()
    }

    /// `M = diag(δ) - generator`.
    pub fn coupling_matrix(&self) -> Vec<Vec<f64>> {
        let k = self.regimes();
        (0..k)
            .map(|j| (0..k).map(|l| if j == l { self.delta[j] } else { 0.0 } - self.generator[j][l]).collect())
            .collect()
    }

    /// Total jump intensity `-α_jj` out of regime `j`.
    pub fn exit_rate(&self, j: usize) -> f64 {
        -self.generator[j][j]
    }
}

/// One failed invariant of a [`RegimeModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Returns every violated invariant; an empty list means the model is valid.
pub fn validate_regime_model(model: &RegimeModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = model.delta.len();
    if k < 2 {
        out.push(Violation::new("delta", format!("need at least 2 regimes, got {k}")));
    }
    if model.dimension == 0 {
        out.push(Violation::new("dimension", "state dimension must be >= 1"));
    }
    for (name, len) in
        [("sigma", model.sigma.len()), ("a", model.a.len()), ("b", model.b.len()), ("generator", model.generator.len())]
    {
        if len != k {
            out.push(Violation::new(name, format!("expected {k} entries, got {len}")));
        }
    }
    for (j, row) in model.generator.iter().enumerate() {
        if row.len() != k {
            out.push(Violation::new(format!("generator[{j}]"), format!("expected {k} columns, got {}", row.len())));
        }
    }
    if !out.is_empty() {
        return out;
    }

    for j in 0..k {
        if !(model.delta[j] > 0.0 && model.delta[j].is_finite()) {
            out.push(Violation::new(format!("delta[{j}]"), "discount must be positive"));
        }
        if !(model.sigma[j] > 0.0 && model.sigma[j].is_finite()) {
            out.push(Violation::new(format!("sigma[{j}]"), "volatility must be positive"));
        }
        if !(model.a[j] > 0.0 && model.a[j].is_finite()) {
            out.push(Violation::new(format!("a[{j}]"), "quadratic cost coefficient must be positive"));
        }
        if !(model.b[j] >= 0.0 && model.b[j].is_finite()) {
            out.push(Violation::new(format!("b[{j}]"), "constant cost must be non-negative"));
        }
        let row = &model.generator[j];
        for (l, &rate) in row.iter().enumerate() {
            if l != j && !(rate >= 0.0 && rate.is_finite()) {
                out.push(Violation::new(format!("generator[{j}][{l}]"), "off-diagonal rate negative"));
            }
        }
        let sum: f64 = row.iter().sum();
        if !(sum.abs() <= GENERATOR_ROW_TOL) {
            out.push(Violation::new(format!("generator[{j}]"), format!("generator row sums to {sum:e}, not 0")));
        }
    }

    let m = model.coupling_matrix();
    for j in 0..k {
        if !(m[j][j] > 0.0) {
            out.push(Violation::new(format!("coupling[{j}][{j}]"), "coupling diagonal must be positive"));
        }
        for l in 0..k {
            if l != j && m[j][l] > 0.0 {
                out.push(Violation::new(format!("coupling[{j}][{l}]"), "coupling off-diagonal must be non-positive"));
            }
        }
    }
    out
}

/// Stationary law `π` of the chain (`π G = 0`, `Σ π = 1`).
pub fn stationary_distribution(generator: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = generator.len();
    if k == 0 || generator.iter().any(|r| r.len() != k) {
        return Err(HjbError::InvalidArgument("generator must be square and non-empty".into()));
    }
    // Replace the last balance equation with the normalisation.
    let mut system: Vec<Vec<f64>> = (0..k).map(|l| (0..k).map(|j| generator[j][l]).collect()).collect();
    system[k - 1] = vec![1.0; k];
    let mut rhs = vec![0.0; k];
    rhs[k - 1] = 1.0;
    linalg::solve_dense(&system, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_exponent_examples() {
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
        assert!((conjugate_exponent(3.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((conjugate_exponent(1.5).unwrap() - 3.0).abs() < 1e-14);
        for p in [1.1, 1.5, 2.0, 3.0, 10.0] {
            let q = conjugate_exponent(p).unwrap();
            assert!((1.0 / p + 1.0 / q - 1.0).abs() <= 1e-14);
            assert!((conjugate_exponent(q).unwrap() - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn conjugate_exponent_rejects_p_le_one() {
        for p in [1.0, 0.5, -2.0, f64::NAN] {
            assert!(matches!(conjugate_exponent(p), Err(HjbError::Domain(_))));
        }
    }

    #[test]
    fn fenchel_at_origin_is_zero() {
        let c = fenchel_conjugate_numeric(&[0.0, 0.0], 2.0, 1.0, 21).unwrap();
        assert_eq!(c.closed_form, 0.0);
        assert_eq!(c.numeric_inf, 0.0);
    }

    #[test]
    fn fenchel_rejects_empty_grid() {
        assert!(matches!(fenchel_conjugate_numeric(&[1.0], 2.0, 1.0, 2), Err(HjbError::InvalidArgument(_))));
        assert!(matches!(fenchel_conjugate_numeric(&[], 2.0, 1.0, 11), Err(HjbError::InvalidArgument(_))));
    }

    #[test]
    fn source_validation() {
        assert!(SourceSpec::Quadratic { a: 1.0, b: 0.0 }.validate(2.0).is_ok());
        assert!(SourceSpec::Quadratic { a: 0.0, b: 0.0 }.validate(2.0).is_err());
        assert!(SourceSpec::Quadratic { a: 1.0, b: -0.1 }.validate(2.0).is_err());
        let aniso = SourceSpec::AnisotropicQuadratic { cxx: 1.0, cyy: 3.0, cxy: 0.5, c0: 2.0 };
        assert!(aniso.validate(2.0).is_ok());
        let saddle = SourceSpec::AnisotropicQuadratic { cxx: 1.0, cyy: 1.0, cxy: 3.0, c0: 0.0 };
        assert!(saddle.validate(2.0).is_err());
        let neg = RadialTable::sample(10.0, 101, |r| -r * r).unwrap();
        assert!(SourceSpec::Tabulated(neg).validate(2.0).is_err());
        let pos = RadialTable::sample(10.0, 101, |r| r * r).unwrap();
        assert!(SourceSpec::Tabulated(pos).validate(2.0).is_ok());
    }

    #[test]
    fn table_interpolates_linearly() {
        let t = RadialTable::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 6.0]).unwrap();
        assert_eq!(t.eval(1.0), 2.0);
        assert!((t.eval(0.5) - 1.5).abs() < 1e-15);
        assert!((t.eval(2.0) - 4.0).abs() < 1e-15);
        assert!((t.eval(4.0) - 8.0).abs() < 1e-15);
        assert!(RadialTable::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(RadialTable::new(vec![0.5, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn anisotropic_source_evaluates() {
        let f = SourceSpec::AnisotropicQuadratic { cxx: 1.0, cyy: 3.0, cxy: 0.5, c0: 2.0 };
        assert!((f.eval_xy(1.0, 2.0) - (1.0 + 12.0 + 1.0 + 2.0)).abs() < 1e-15);
        assert!(!f.is_radial());
    }

    #[test]
    fn benchmark_model_is_valid() {
        let m = RegimeModel::two_regime_benchmark();
        assert!(validate_regime_model(&m).is_empty());
        assert_eq!(m.coupling_matrix(), vec![vec![1.4, -0.4], vec![-0.6, 1.6]]);
    }

    #[test]
    fn negative_rate_is_reported() {
        let mut m = RegimeModel::two_regime_benchmark();
        m.generator[0][1] = -0.1;
        m.generator[0][0] = 0.1;
        let v = validate_regime_model(&m);
        assert!(v.iter().any(|v| v.message == "off-diagonal rate negative"), "{v:?}");
    }

    #[test]
    fn zero_discount_is_reported() {
        let mut m = RegimeModel::two_regime_benchmark();
        m.delta[0] = 0.0;
        let v = validate_regime_model(&m);
        assert!(v.iter().any(|v| v.message == "discount must be positive" && v.field == "delta[0]"));
    }

    #[test]
    fn each_single_field_perturbation_is_rejected() {
        let base = RegimeModel::two_regime_benchmark();
        type Perturbation = Box<dyn Fn(&mut RegimeModel)>;
        let perturbations: Vec<Perturbation> = vec![
            Box::new(|m| m.delta[1] = -1.0),
            Box::new(|m| m.sigma[0] = 0.0),
            Box::new(|m| m.a[1] = 0.0),
            Box::new(|m| m.b[0] = -0.5),
            Box::new(|m| m.generator[1][1] = -0.5),
            Box::new(|m| m.generator[1][0] = -0.6),
            Box::new(|m| m.dimension = 0),
            Box::new(|m| m.sigma.push(1.0)),
            Box::new(|m| {
                m.delta.truncate(1);
            }),
        ];
        for (i, perturb) in perturbations.iter().enumerate() {
            let mut m = base.clone();
            perturb(&mut m);
            assert!(!validate_regime_model(&m).is_empty(), "perturbation {i} accepted");
        }
    }

    #[test]
    fn two_state_stationary_law() {
        let m = RegimeModel::two_regime_benchmark();
        let pi = stationary_distribution(&m.generator).unwrap();
        assert!((pi[0] - 0.6).abs() < 1e-14 && (pi[1] - 0.4).abs() < 1e-14);
    }
}
