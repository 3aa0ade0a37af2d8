use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use super::rng::{RngSpec, NORMAL_SAMPLER};
use crate::error::{HjbError, Result};
use crate::model::{validate_regime_model, RegimeModel};

/// Largest `dt * (exit rate)` accepted by the Bernoulli switching scheme.
pub const BERNOULLI_MAX_JUMP_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchingScheme {
    /// Per step, jump `j -> l` with probability `α_{jl} dt`.
    #[default]
    BernoulliEuler,
    /// Exact exponential holding times; all jumps up to the end of a step
    /// are applied before the state update of that step.
    ExponentialClock,
}

impl SwitchingScheme {
    pub fn name(&self) -> &'static str {
        match self {
            SwitchingScheme::BernoulliEuler => "bernoulli-euler",
            SwitchingScheme::ExponentialClock => "exponential-clock",
        }
    }
}

/// Time discretisation and sampling controls shared by all simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    /// Keep every `record_stride`-th step (step 0 is always kept).
    pub record_stride: usize,
    pub rng: RngSpec,
}

impl SimConfig {
    /// Number of Euler steps, `round(T / dt)`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(HjbError::Precondition(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) {
            return Err(HjbError::Precondition(format!(
                "horizon {} must be at least one step {}",
                self.horizon, self.dt
            )));
        }
        if self.n_paths == 0 {
            return Err(HjbError::Precondition("need at least one path".into()));
        }
        if self.record_stride == 0 {
            return Err(HjbError::Precondition("record stride must be >= 1".into()));
        }
        Ok((self.horizon / self.dt).round() as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeMetadata {
    pub dt: f64,
    pub steps: usize,
    pub record_stride: usize,
    pub scheme: &'static str,
    pub switching: Option<SwitchingScheme>,
    pub normal_sampler: &'static str,
    /// Mean-reversion gain per regime (`2A` or `2β_j`).
    pub gains: Vec<f64>,
    pub stability_warning: Option<String>,
}

/// Recorded sample paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub dimension: usize,
    pub n_paths: usize,
    /// `states[(path * times.len() + k) * dimension + d]`.
    states: Vec<f64>,
    /// Zero-based regime labels, `regimes[path * times.len() + k]`.
    regimes: Option<Vec<usize>>,
    /// Number of regime jumps over the whole horizon, per path.
    pub switch_counts: Vec<usize>,
    pub horizon: f64,
    pub rng: RngSpec,
    pub metadata: SchemeMetadata,
}

impl PathSet {
    pub fn n_records(&self) -> usize {
        self.times.len()
    }

    pub fn state(&self, path: usize, record: usize) -> &[f64] {
        let start = (path * self.times.len() + record) * self.dimension;
        &self.states[start..start + self.dimension]
    }

    pub fn regime(&self, path: usize, record: usize) -> Option<usize> {
        self.regimes.as_ref().map(|r| r[path * self.times.len() + record])
    }

    pub fn has_regimes(&self) -> bool {
        self.regimes.is_some()
    }

    pub fn squared_norm(&self, path: usize, record: usize) -> f64 {
        self.state(path, record).iter().map(|x| x * x).sum()
    }

    /// Index of the record closest to time `t`.
    pub fn record_at(&self, t: f64) -> Result<usize> {
        let step = self.metadata.dt * self.metadata.record_stride as f64;
        if !(t >= 0.0 && t <= self.horizon + 0.5 * self.metadata.dt) {
            return Err(HjbError::InvalidArgument(format!("time {t} lies outside [0, {}]", self.horizon)));
        }
        let k = ((t / step).round() as usize).min(self.times.len() - 1);
        if (self.times[k] - t).abs() > 0.5 * self.metadata.dt + 1e-12 * t.max(1.0) {
            return Err(HjbError::InvalidArgument(format!("time {t} is not a recorded time")));
        }
        Ok(k)
    }
}

struct Dynamics<'a> {
    gains: Vec<f64>,
    sigmas: Vec<f64>,
    switching: Option<(&'a [Vec<f64>], SwitchingScheme)>,
}

struct PathRecord {
    states: Vec<f64>,
    regimes: Vec<usize>,
    switches: usize,
}

fn choose_target<R: Rng>(rng: &mut R, row: &[f64], from: usize, exit: f64) -> usize {
    let target = rng.random::<f64>() * exit;
    let mut cum = 0.0;
    let mut last = from;
    for (l, &rate) in row.iter().enumerate() {
        if l == from || rate <= 0.0 {
            continue;
        }
        cum += rate;
        last = l;
        if target < cum {
            return l;
        }
    }
    last
}

fn holding_time<R: Rng>(rng: &mut R, exit: f64) -> f64 {
    if exit > 0.0 {
        rng.sample::<f64, _>(Exp1) / exit
    } else {
        f64::INFINITY
    }
}

fn simulate_path(
    dynamics: &Dynamics<'_>,
    x0: &[f64],
    j0: usize,
    cfg: &SimConfig,
    steps: usize,
    path: usize,
) -> PathRecord {
    let dim = x0.len();
    let stride = cfg.record_stride;
    let n_records = steps / stride + 1;
    let mut noise = cfg.rng.diffusion_stream(path);
    let mut jumps = cfg.rng.switching_stream(path);
    let sqrt_dt = cfg.dt.sqrt();
    let mut x = x0.to_vec();
    let mut j = j0;
    let mut states = Vec::with_capacity(n_records * dim);
    let mut regimes = Vec::with_capacity(n_records);
    states.extend_from_slice(&x);
    regimes.push(j);
    let mut switches = 0;

    let mut next_jump = match dynamics.switching {
        Some((gen, SwitchingScheme::ExponentialClock)) => holding_time(&mut jumps, -gen[j][j]),
        _ => f64::INFINITY,
    };

    for i in 0..steps {
        match dynamics.switching {
            Some((gen, SwitchingScheme::BernoulliEuler)) => {
                let u: f64 = jumps.random();
                let mut cum = 0.0;
                for (l, &rate) in gen[j].iter().enumerate() {
                    if l == j {
                        continue;
                    }
                    cum += rate * cfg.dt;
                    if u < cum {
                        j = l;
                        switches += 1;
                        break;
                    }
                }
            }
            Some((gen, SwitchingScheme::ExponentialClock)) => {
                let t_end = (i + 1) as f64 * cfg.dt;
                while next_jump <= t_end {
                    let exit = -gen[j][j];
                    j = choose_target(&mut jumps, &gen[j], j, exit);
                    switches += 1;
                    next_jump += holding_time(&mut jumps, -gen[j][j]);
                }
            }
            None => {}
        }
        let (gain, sigma) = (dynamics.gains[j], dynamics.sigmas[j]);
        for xd in x.iter_mut() {
            let xi: f64 = noise.sample(StandardNormal);
            *xd += -gain * *xd * cfg.dt + sigma * sqrt_dt * xi;
        }
        if (i + 1) % stride == 0 {
            states.extend_from_slice(&x);
            regimes.push(j);
        }
    }
    PathRecord { states, regimes, switches }
}

fn run(dynamics: Dynamics<'_>, x0: &[f64], j0: usize, cfg: &SimConfig) -> Result<PathSet> {
    let steps = cfg.steps()?;
    if x0.is_empty() || x0.iter().any(|v| !v.is_finite()) {
        return Err(HjbError::Precondition("initial state must be a non-empty finite vector".into()));
    }
    let records: Vec<PathRecord> =
        (0..cfg.n_paths).into_par_iter().map(|path| simulate_path(&dynamics, x0, j0, cfg, steps, path)).collect();
    let n_records = steps / cfg.record_stride + 1;
    let times = (0..n_records).map(|k| (k * cfg.record_stride) as f64 * cfg.dt).collect();
    let mut states = Vec::with_capacity(cfg.n_paths * n_records * x0.len());
    let mut regimes = Vec::with_capacity(cfg.n_paths * n_records);
    let mut switch_counts = Vec::with_capacity(cfg.n_paths);
    for r in records {
        states.extend(r.states);
        regimes.extend(r.regimes);
        switch_counts.push(r.switches);
    }
    let max_gain = dynamics.gains.iter().fold(0.0_f64, |m, g| m.max(*g));
    let stability_warning = (max_gain * cfg.dt >= 1.0)
        .then(|| format!("gain * dt = {} >= 1: the explicit scheme overshoots", max_gain * cfg.dt));
    Ok(PathSet {
        times,
        dimension: x0.len(),
        n_paths: cfg.n_paths,
        states,
        regimes: dynamics.switching.map(|_| regimes),
        switch_counts,
        horizon: steps as f64 * cfg.dt,
        rng: cfg.rng,
        metadata: SchemeMetadata {
            dt: cfg.dt,
            steps,
            record_stride: cfg.record_stride,
            scheme: "euler-maruyama",
            switching: dynamics.switching.map(|(_, s)| s),
            normal_sampler: NORMAL_SAMPLER,
            gains: dynamics.gains.clone(),
            stability_warning,
        },
    })
}

/// Euler–Maruyama paths of `dX = -2A X dt + σ dW` in `R^N`, `N = x0.len()`.
pub fn simulate_ou(leading: f64, sigma: f64, x0: &[f64], cfg: &SimConfig) -> Result<PathSet> {
    if !(leading > 0.0) {
        return Err(HjbError::Precondition(format!("A must be > 0, got {leading}")));
    }
    if !(sigma >= 0.0) {
        return Err(HjbError::Precondition(format!("sigma must be >= 0, got {sigma}")));
    }
    run(Dynamics { gains: vec![2.0 * leading], sigmas: vec![sigma], switching: None }, x0, 0, cfg)
}

/// Paths of `dX = -2β_{e(t)} X dt + σ_{e(t)} dW` with `e` the Markov chain of
/// `model`; `j0` is the zero-based starting regime.
pub fn simulate_regime_switching(
    model: &RegimeModel,
    beta: &[f64],
    x0: &[f64],
    j0: usize,
    cfg: &SimConfig,
    switching: SwitchingScheme,
) -> Result<PathSet> {
    if let Some(v) = validate_regime_model(model).first() {
        return Err(HjbError::Precondition(v.to_string()));
    }
    let k = model.regimes();
    if beta.len() != k || beta.iter().any(|b| !(*b > 0.0)) {
        return Err(HjbError::Precondition(format!("need {k} positive gains beta")));
    }
    if j0 >= k {
        return Err(HjbError::Precondition(format!("initial regime {j0} out of range 0..{k}")));
    }
    if switching == SwitchingScheme::BernoulliEuler {
        let max_exit = (0..k).map(|j| model.exit_rate(j)).fold(0.0_f64, f64::max);
        if cfg.dt * max_exit >= BERNOULLI_MAX_JUMP_PROBABILITY {
            return Err(HjbError::Precondition(format!(
                "dt * max exit rate = {} must stay below {BERNOULLI_MAX_JUMP_PROBABILITY}",
                cfg.dt * max_exit
            )));
        }
    }
    let dynamics = Dynamics {
        gains: beta.iter().map(|b| 2.0 * b).collect(),
        sigmas: model.sigma.clone(),
        switching: Some((&model.generator, switching)),
    };
    run(dynamics, x0, j0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(paths: usize, stride: usize) -> SimConfig {
        SimConfig { horizon: 1.0, dt: 0.01, n_paths: paths, record_stride: stride, rng: RngSpec::new(11) }
    }

    #[test]
    fn noise_free_ou_is_the_euler_orbit() {
        let set = simulate_ou(0.5, 0.0, &[2.0], &cfg(2, 1)).unwrap();
        for (k, t) in set.times.iter().enumerate() {
            let expected = 2.0 * (1.0_f64 - 0.01).powi(k as i32);
            assert!((set.state(1, k)[0] - expected).abs() < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn stride_keeps_endpoints() {
        let set = simulate_ou(0.5, 1.0, &[1.0, -1.0], &cfg(3, 10)).unwrap();
        assert_eq!(set.n_records(), 11);
        assert_eq!(set.state(2, 0), &[1.0, -1.0]);
        assert!((set.times[10] - 1.0).abs() < 1e-12);
        assert_eq!(set.record_at(0.5).unwrap(), 5);
        assert!(set.record_at(0.55).is_err());
    }

    #[test]
    fn stability_warning_for_large_steps() {
        let c = SimConfig { dt: 0.6, horizon: 6.0, ..cfg(1, 1) };
        let set = simulate_ou(1.0, 1.0, &[0.0], &c).unwrap();
        assert!(set.metadata.stability_warning.is_some());
    }

    #[test]
    fn bernoulli_rejects_coarse_steps() {
        let model = RegimeModel::two_regime_benchmark();
        let c = SimConfig { dt: 1.0, horizon: 10.0, ..cfg(1, 1) };
        let res = simulate_regime_switching(&model, &[0.8, 0.4], &[5.0], 0, &c, SwitchingScheme::BernoulliEuler);
        assert!(matches!(res, Err(HjbError::Precondition(_))));
    }

    #[test]
    fn frozen_chain_matches_ou_bitwise() {
        let model = RegimeModel::from_rates(
            vec![1.0, 1.0],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![0.7, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            1,
        );
        for scheme in [SwitchingScheme::BernoulliEuler, SwitchingScheme::ExponentialClock] {
            let rs = simulate_regime_switching(&model, &[0.5, 0.9], &[3.0], 0, &cfg(4, 1), scheme).unwrap();
            let ou = simulate_ou(0.5, 0.7, &[3.0], &cfg(4, 1)).unwrap();
            for p in 0..4 {
                for k in 0..ou.n_records() {
                    assert_eq!(rs.state(p, k), ou.state(p, k));
                    assert_eq!(rs.regime(p, k), Some(0));
                }
            }
            assert!(rs.switch_counts.iter().all(|&c| c == 0));
        }
    }
}
