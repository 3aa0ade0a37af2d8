//! Run configuration read from a TOML file.
//!
//! Every section has defaults, so an empty file (or no file) is a valid
//! configuration. Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use hjb_core::model::{validate_regime_model, RegimeModel, SourceSpec};
use hjb_core::stochastic::SwitchingScheme;
use serde::Deserialize;

use crate::CliError;

/// Subcommands, in the order `all` runs them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Exact,
    Radial,
    Monotone,
    Grid2d,
    Regime,
    Simulate,
    Verify,
    All,
}

impl Command {
    pub const SUITE: [Command; 7] = [
        Command::Exact,
        Command::Radial,
        Command::Monotone,
        Command::Grid2d,
        Command::Regime,
        Command::Simulate,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Radial => "radial",
            Command::Monotone => "monotone",
            Command::Grid2d => "grid2d",
            Command::Regime => "regime",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Used when no command is given on the command line.
    pub command: Option<Command>,
    pub seed: u64,
    /// Used when no `--output` flag is given.
    pub output: Option<PathBuf>,
    pub exact: ExactConfig,
    pub radial: RadialConfig,
    pub monotone: MonotoneConfig,
    pub grid2d: Grid2dConfig,
    pub regime: RegimeConfig,
    pub simulate: SimulateConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: 42,
            output: None,
            exact: ExactConfig::default(),
            radial: RadialConfig::default(),
            monotone: MonotoneConfig::default(),
            grid2d: Grid2dConfig::default(),
            regime: RegimeConfig::default(),
            simulate: SimulateConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Range-checks the sections that `command` reads.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        match command {
            Command::Exact => self.exact.validate(),
            Command::Radial => self.radial.validate(),
            Command::Monotone => self.monotone.validate(),
            Command::Grid2d => self.grid2d.validate(),
            Command::Regime => self.regime.validate(),
            Command::Simulate => self.simulate.validate(),
            Command::Verify => self.verify.validate(),
            Command::All => Command::SUITE.iter().try_for_each(|c| self.validate(*c)),
        }
    }
}

fn invalid(section: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("[{section}] {msg}"))
}

fn check(ok: bool, section: &str, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(section, msg))
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn quadratic_source(section: &str, a: f64, b: f64) -> Result<(), CliError> {
    SourceSpec::Quadratic { a, b }.validate(2.0).map_err(|e| invalid(section, e))
}

/// `(a, b, N)` of one closed-form case.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactCase {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExactConfig {
    pub cases: Vec<ExactCase>,
    /// Residual sample radii are spread uniformly over `[0, max_radius]`.
    pub max_radius: f64,
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            cases: vec![
                ExactCase { a: 1.0, b: 0.0, n: 1 },
                ExactCase { a: 1.0, b: 0.0, n: 2 },
                ExactCase { a: 2.0, b: 1.0, n: 2 },
            ],
            max_radius: 50.0,
            samples: 100,
            tolerance: 1e-12,
        }
    }
}

impl ExactConfig {
    fn validate(&self) -> Result<(), CliError> {
        const S: &str = "exact";
        check(!self.cases.is_empty(), S, "cases must not be empty")?;
        for c in &self.cases {
            quadratic_source(S, c.a, c.b)?;
            check(c.n >= 1, S, "n must be >= 1")?;
        }
        check(positive(self.max_radius), S, "max_radius must be positive")?;
        check(self.samples >= 2, S, "samples must be >= 2")?;
        check(positive(self.tolerance), S, "tolerance must be positive")
    }
}

/// Outer boundary data taken from the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialBoundary {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadialConfig {
    pub dimensions: Vec<usize>,
    pub a: f64,
    pub b: f64,
    pub radius: f64,
    pub nodes: usize,
    pub boundary: RadialBoundary,
    pub newton_tol: f64,
    pub residual_tol: f64,
    pub curvature_tol: f64,
    /// Manufactured-solution refinement study on `m`, `2m - 1`, `4m - 3` nodes.
    pub mesh_study: bool,
    pub mesh_ratio_min: f64,
    pub mesh_ratio_max: f64,
    pub barriers: BarrierConfig,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self {
            dimensions: vec![1, 2, 3],
            a: 1.0,
            b: 0.0,
            radius: 10.0,
            nodes: 600,
            boundary: RadialBoundary::Neumann,
            newton_tol: 1e-10,
            residual_tol: 1e-8,
            curvature_tol: 1e-6,
            mesh_study: true,
            mesh_ratio_min: 3.5,
            mesh_ratio_max: 4.5,
            barriers: BarrierConfig::default(),
        }
    }
}

impl RadialConfig {
    fn validate(&self) -> Result<(), CliError> {
        const S: &str = "radial";
        check(!self.dimensions.is_empty() && self.dimensions.iter().all(|n| *n >= 1), S, "dimensions must be >= 1")?;
        quadratic_source(S, self.a, self.b)?;
        check(positive(self.radius), S, "radius must be positive")?;
        check(self.nodes >= 16, S, "nodes must be >= 16")?;
        check(positive(self.newton_tol), S, "newton_tol must be positive")?;
        check(positive(self.residual_tol) && positive(self.curvature_tol), S, "tolerances must be positive")?;
        check(
            positive(self.mesh_ratio_min) && self.mesh_ratio_max > self.mesh_ratio_min,
            S,
            "mesh ratio window must be positive and non-empty",
        )?;
        self.barriers.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierConfig {
    pub enabled: bool,
    /// Subsolution barrier: `c` as a fraction of its admissible limit.
    pub c_fraction: f64,
    pub extent: f64,
    pub samples: usize,
    /// Explosive barrier `(R - r)^{-α}` checked on `[(1 - window) R, R)`.
    pub outer_radius: f64,
    pub window: f64,
    pub alpha_large: f64,
    pub alpha_small: f64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            c_fraction: 0.5,
            extent: 50.0,
            samples: 5001,
            outer_radius: 5.0,
            window: 0.1,
            alpha_large: 10.0,
            alpha_small: 0.1,
        }
    }
}

impl BarrierConfig {
    fn validate(&self) -> Result<(), CliError> {
        const S: &str = "radial.barriers";
        check(self.c_fraction > 0.0 && self.c_fraction < 1.0, S, "c_fraction must lie in (0, 1)")?;
        check(positive(self.extent) && self.samples >= 2, S, "extent must be positive and samples >= 2")?;
        check(positive(self.outer_radius), S, "outer_radius must be positive")?;
        check(self.window > 0.0 && self.window < 1.0, S, "window must lie in (0, 1)")?;
        check(positive(self.alpha_large) && positive(self.alpha_small), S, "exponents must be positive")
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonotoneConfig {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub radii: Vec<f64>,
    pub observation_radius: f64,
    /// Defaults to `1 / (k + 1)`.
    pub eps: Option<Vec<f64>>,
    pub spacing: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub min_r_squared: f64,
}

impl Default for MonotoneConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            n: 1,
            radii: vec![4.0, 6.0, 8.0, 10.0],
            observation_radius: 2.0,
            eps: None,
            spacing: 0.01,
            newton_tol: 1e-12,
            max_newton_iters: 100,
            min_r_squared: 0.9,
        }
    }
}

impl MonotoneConfig {
    fn validate(&self) -> Result<(), CliError> {
        const S: &str = "monotone";
        quadratic_source(S, self.a, self.b)?;
        check(self.n >= 1, S, "n must be >= 1")?;
        check(!self.radii.is_empty() && self.radii.windows(2).all(|w| w[1] > w[0]), S, "radii must increase")?;
        check(
            self.observation_radius > 0.0 && self.observation_radius < self.radii[0],
            S,
            "observation_radius must lie below the first radius",
        )?;
        if let Some(eps) = &self.eps {
            check(eps.len() == self.radii.len(), S, "eps and radii differ in length")?;
            check(
                eps.iter().all(|e| *e > 0.0 && *e < 1.0) && eps.windows(2).all(|w| w[1] < w[0]),
                S,
                "eps must decrease inside (0, 1)",
            )?;
        }
        check(positive(self.spacing) && self.spacing < self.observation_radius, S, "spacing out of range")?;
        check(positive(self.newton_tol) && self.max_newton_iters >= 1, S, "Newton controls out of range")?;
        check((0.0..=1.0).contains(&self.min_r_squared), S, "min_r_squared must lie in [0, 1]")
    }
}

/// Stencil for the gradient term of the two-dimensional solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilChoice {
    Averaged,
    Upwind,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid2dConfig {
    pub a: f64,
    pub b: f64,
    pub half_width: f64,
    pub nodes: usize,
    pub lambda: f64,
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub stencil: StencilChoice,
    pub error_tol: f64,
    pub symmetry_bins: usize,
    /// Allowed bin spread as a multiple of the exact field's spread.
    pub symmetry_factor: f64,
    /// Refinement study on `nodes` and `2 nodes` at `study_tol`.
    pub refinement: bool,
    pub study_tol: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub nonradial: NonradialConfig,
}

impl Default for Grid2dConfig {
    fn default() -> Self {
        Self {
            a: 2.0,
            b: 1.0,
            half_width: 2.0,
            nodes: 60,
            lambda: 20.0,
            damping: 0.5,
            tol: 1e-6,
            max_iters: 1000,
            stencil: StencilChoice::Averaged,
            error_tol: 0.05,
            symmetry_bins: 40,
            symmetry_factor: 5.0,
            refinement: true,
            study_tol: 1e-9,
            ratio_min: 3.5,
            ratio_max: 4.5,
            nonradial: NonradialConfig::default(),
        }
    }
}

fn iteration_controls(section: &str, lambda: f64, damping: f64, tol: f64, iters: usize) -> Result<(), CliError> {
    check(positive(lambda), section, "lambda must be positive")?;
    check(damping > 0.0 && damping <= 1.0, section, "damping must lie in (0, 1]")?;
    check(positive(tol), section, "tol must be positive")?;
    check(iters >= 1, section, "max_iters must be >= 1")
}

impl Grid2dConfig {
    fn validate(&self) -> Result<(), CliError> {
        const S: &str = "grid2d";
        quadratic_source(S, self.a, self.b)?;
        check(positive(self.half_width), S, "half_width must be positive")?;
        check(self.nodes >= 8, S, "nodes must be >= 8")?;
        iteration_controls(S, self.lambda, self.damping, self.tol, self.max_iters)?;
        check(positive(self.study_tol), S, "study_tol must be positive")?;
        check(positive(self.error_tol), S, "error_tol must be positive")?;
        check(self.symmetry_bins >= 4, S, "symmetry_bins must be >= 4")?;
        check(positive(self.symmetry_factor), S, "symmetry_factor must be positive")?;
        check(positive(self.ratio_min) && self.ratio_max > self.ratio_min, S, "ratio window out of range")?;
        self.nonradial.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonradialConfig {
    pub enabled: bool,
    /// `f(x, y) = cxx x^2 + cyy y^2 + cxy x y + c0`.
    pub cxx: f64,
    pub cyy: f64,
    pub cxy: f64,
    pub c0: f64,
    pub half_width: f64,
    pub nodes: usize,
    pub lambda: f64,
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub stencil: StencilChoice,
    /// Required bin spread as a multiple of the radial baseline.
    pub spread_factor: f64,
}

impl Default for NonradialConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            cxx: 1.0,
            cyy: 3.0,
            cxy: 0.5,
            c0: 2.0,
            half_width: 3.0,
            nodes: 60,
            lambda: 25.0,
            damping: 0.5,
            tol: 1e-6,
            max_iters: 1000,
            stencil: StencilChoice::Upwind,
            spread_factor: 10.0,
        }
    }
}

impl NonradialConfig {
    pub fn source(&self) -> SourceSpec {
        SourceSpec::AnisotropicQuadratic { cxx: self.cxx, cyy: self.cyy, cxy: self.cxy, c0: self.c0 }
    }

    fn validate(&self) -> Result<(), CliError> {
        const S: &str = "grid2d.nonradial";
        self.source().validate(2.0).map_err(|e| invalid(S, e))?;
        check(positive(self.half_width), S, "half_width must be positive")?;
        check(self.nodes >= 8, S, "nodes must be >= 8")?;
        iteration_controls(S, self.lambda, self.damping, self.tol, self.max_iters)?;
        check(positive(self.spread_factor), S, "spread_factor must be positive")
    }
}

fn simulation_grid(section: &str, horizon: f64, dt: f64, n_paths: usize, stride: usize) -> Result<(), CliError> {
    check(positive(dt), section, "dt must be positive")?;
    check(horizon.is_finite() && horizon >= dt, section, "horizon must be >= dt")?;
    check(n_paths >= 2, section, "n_paths must be >= 2")?;
    check(stride >= 1, section, "record_stride must be >= 1")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    /// Initial state; its length is the state dimension.
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub record_stride: usize,
    pub burn_in: f64,
    pub checkpoints: Vec<f64>,
    /// Paths written to `paths.csv`; all paths enter the estimates.
    pub written_paths: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            sigma: 1.0,
            x0: vec![5.0],
            horizon: 50.0,
            dt: 0.01,
            n_paths: 5000,
            record_stride: 10,
            burn_in: 0.5,
            checkpoints: vec![1.0, 5.0, 10.0, 15.0],
            written_paths: 20,
        }
    }
}

impl SimulateConfig {
    fn validate(&self) -> Result<(), CliError> {
        const S: &str = "simulate";
        quadratic_source(S, self.a, self.b)?;
        check(positive(self.sigma), S, "sigma must be positive")?;
        check(!self.x0.is_empty() && self.x0.iter().all(|x| x.is_finite()), S, "x0 must be a non-empty vector")?;
        simulation_grid(S, self.horizon, self.dt, self.n_paths, self.record_stride)?;
        check((0.2..=0.8).contains(&self.burn_in), S, "burn_in must lie in [0.2, 0.8]")?;
        check(
            self.checkpoints.iter().all(|t| *t >= 0.0 && *t <= self.horizon),
            S,
            "checkpoints must lie in [0, horizon]",
        )?;
        check(self.written_paths <= self.n_paths, S, "written_paths exceeds n_paths")
    }
}

/// Switching scheme as spelled in the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    BernoulliEuler,
    ExponentialClock,
}

impl From<SchemeChoice> for SwitchingScheme {
    fn from(c: SchemeChoice) -> Self {
        match c {
            SchemeChoice::BernoulliEuler => SwitchingScheme::BernoulliEuler,
            SchemeChoice::ExponentialClock => SwitchingScheme::ExponentialClock,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeConfig {
    pub delta: Vec<f64>,
    /// Off-diagonal switching rates; diagonal entries are ignored.
    pub rates: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Dimension entering the coefficient system.
    pub n: usize,
    pub newton_tol: f64,
    pub residual_tol: f64,
    pub decoupled_tol: f64,
    /// Simulated initial state (its length is the simulated dimension).
    pub x0: Vec<f64>,
    /// One-based starting regime.
    pub initial_regime: usize,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub record_stride: usize,
    pub burn_in: f64,
    pub scheme: SchemeChoice,
    pub written_paths: usize,
    pub switch_rates: SwitchRateConfig,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self {
            delta: vec![1.0, 1.0],
            rates: vec![vec![0.0, 0.4], vec![0.6, 0.0]],
            sigma: vec![0.3, 1.0],
            a: vec![2.5, 0.5],
            b: vec![1.0, 0.5],
            n: 2,
            newton_tol: 1e-13,
            residual_tol: 1e-10,
            decoupled_tol: 1e-10,
            x0: vec![5.0],
            initial_regime: 1,
            horizon: 30.0,
            dt: 0.01,
            n_paths: 2000,
            record_stride: 5,
            burn_in: 0.5,
            scheme: SchemeChoice::BernoulliEuler,
            written_paths: 5,
            switch_rates: SwitchRateConfig::default(),
        }
    }
}

impl RegimeConfig {
    pub fn model(&self) -> RegimeModel {
        RegimeModel::from_rates(
            self.delta.clone(),
            self.rates.clone(),
            self.sigma.clone(),
            self.a.clone(),
            self.b.clone(),
            self.n,
        )
    }

    fn validate(&self) -> Result<(), CliError> {
        const S: &str = "regime";
        let violations = validate_regime_model(&self.model());
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(invalid(S, list.join("; ")));
        }
        check(positive(self.newton_tol) && positive(self.residual_tol), S, "tolerances must be positive")?;
        check(positive(self.decoupled_tol), S, "decoupled_tol must be positive")?;
        check(!self.x0.is_empty() && self.x0.iter().all(|x| x.is_finite()), S, "x0 must be a non-empty vector")?;
        check((1..=self.delta.len()).contains(&self.initial_regime), S, "initial_regime out of range (one-based)")?;
        simulation_grid(S, self.horizon, self.dt, self.n_paths, self.record_stride)?;
        check((0.2..=0.8).contains(&self.burn_in), S, "burn_in must lie in [0.2, 0.8]")?;
        check(self.written_paths <= self.n_paths, S, "written_paths exceeds n_paths")?;
        self.switch_rates.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwitchRateConfig {
    pub enabled: bool,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
}

impl Default for SwitchRateConfig {
    fn default() -> Self {
        Self { enabled: true, horizon: 30.0, dt: 0.001, n_paths: 2000 }
    }
}

impl SwitchRateConfig {
    fn validate(&self) -> Result<(), CliError> {
        simulation_grid("regime.switch_rates", self.horizon, self.dt, self.n_paths, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub a: f64,
    pub b: f64,
    /// One verification per initial state.
    pub x0: Vec<Vec<f64>>,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub truncation_budget: f64,
    /// Perturbed feedback gains as multiples of the optimal gain `2A`.
    pub gain_factors: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            x0: vec![vec![0.0], vec![2.0]],
            horizon: 15.0,
            dt: 0.005,
            n_paths: 20_000,
            truncation_budget: 1e-4,
            gain_factors: vec![1.5, 0.5, 0.0],
        }
    }
}

impl VerifyConfig {
    fn validate(&self) -> Result<(), CliError> {
        const S: &str = "verify";
        quadratic_source(S, self.a, self.b)?;
        check(!self.x0.is_empty(), S, "x0 must list at least one initial state")?;
        check(
            self.x0.iter().all(|x| !x.is_empty() && x.iter().all(|v| v.is_finite())),
            S,
            "each initial state must be a non-empty vector",
        )?;
        simulation_grid(S, self.horizon, self.dt, self.n_paths, 1)?;
        check(positive(self.truncation_budget), S, "truncation_budget must be positive")?;
        check(self.gain_factors.iter().all(|g| g.is_finite() && *g >= 0.0), S, "gain factors must be >= 0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate(Command::All).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("sed = 3").is_err());
        assert!(RunConfig::from_toml_str("[radial]\nnodez = 3").is_err());
        assert!(RunConfig::from_toml_str("[grid2d.nonradial]\nfoo = 1.0").is_err());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = RunConfig::from_toml_str("seed = 7\n[radial]\nnodes = 200\n[regime]\nscheme = \"exponential-clock\"")
            .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.radial.nodes, 200);
        assert_eq!(cfg.radial.radius, 10.0);
        assert_eq!(cfg.regime.scheme, SchemeChoice::ExponentialClock);
    }

    #[test]
    fn ranges_are_checked_per_command() {
        let cfg = RunConfig::from_toml_str("[simulate]\nburn_in = 0.9").unwrap();
        assert!(cfg.validate(Command::Simulate).is_err());
        assert!(cfg.validate(Command::Exact).is_ok());
        assert!(cfg.validate(Command::All).is_err());
        let cfg = RunConfig::from_toml_str("[regime]\nrates = [[0.0, -0.4], [0.6, 0.0]]").unwrap();
        assert!(cfg.validate(Command::Regime).is_err());
        let cfg = RunConfig::from_toml_str("[grid2d.nonradial]\ncxx = -1.0").unwrap();
        assert!(cfg.validate(Command::Grid2d).is_err());
    }
}
