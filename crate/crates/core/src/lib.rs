//! Multi-round competitive treasure hunt: `k` players search `M` boxes for
//! `T` rounds, and whoever first opens the treasure box is rewarded
//! according to a congestion policy.
//!
//! Strategies are doubly-substochastic matrices ([`StrategyMatrix`]). The
//! crate builds optimal and approximate-equilibrium strategies, turns them
//! into executable randomized algorithms, simulates whole games and
//! certifies equilibrium claims with an exact best-response oracle.

pub mod decomp;
pub mod equilibrium;
pub mod error;
pub mod format;
pub mod game;
pub mod matching;
pub mod payoff;
pub mod sim;
pub mod strategies;

pub use decomp::{birkhoff_decompose, sample_execution, PartialPermutation, StrategyDecomposition};
pub use equilibrium::{
    best_response, certify, nash_dominates_symmetric_check, poa_bound, poa_metrics,
    pure_equilibrium_search, robustness_eval, robustness_eval_with, scalability_probe, value_field,
    EquilibriumCertificate, PlayerCertificate, PoAReport, ValueField,
};
pub use error::{GameError, Result};
pub use game::{
    BoxDistribution, CongestionPolicy, GameConfig, Opponents, PolicyKind, Profile, StrategyMatrix,
    NORMALIZATION_TOL, STRUCTURAL_TOL,
};
pub use payoff::{
    optimal_success, phi, player_utilities, psi, success_at_box, success_probability, utility,
    utility_at, value,
};
pub use sim::{simulate, Estimate, SimulationReport};
pub use strategies::{
    astar, eps_sgreedy, eps_sgreedy_with, pure_strategy, uniform_strategy, SgreedyParams,
};
