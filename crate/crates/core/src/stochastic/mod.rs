//! Simulation of the optimally controlled diffusion and Monte Carlo checks
//! of the value function, the stationary law and the long-run cost.
//!
//! Paths run in parallel; each draws from its own counter-based stream (see
//! [`RngSpec`]), and per-path results are reduced in path order, so output
//! is identical whatever the thread count.

mod estimators;
mod paths;
mod rng;

pub use estimators::{
    compensated_sum, estimate_discounted_cost, estimate_stationary_moments, long_run_cost_estimate, regime_occupation,
    switch_rate, transversality_decay, truncation_bound, verify_value_function, CostEstimate, CostParams,
    MonteCarloEstimate, VerificationReport,
};
pub use paths::{
    simulate_ou, simulate_regime_switching, PathSet, SchemeMetadata, SimConfig, SwitchingScheme,
    BERNOULLI_MAX_JUMP_PROBABILITY,
};
pub use rng::{RngSpec, NORMAL_SAMPLER};
