//! Monte Carlo simulation of whole games.
//!
//! Trials run in chunks of [`CHUNK`]. Chunk `c` draws the treasure from
//! ChaCha8 keyed by `seed` on stream `2^63 | c`, and player `i`'s executions
//! from ChaCha8 keyed by `seed ^ i` on stream `c`. Chunks are reduced in
//! order, so reports depend only on the seed and the trial count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::{birkhoff_decompose, StrategyDecomposition};
use crate::error::{GameError, Result};
use crate::game::{GameConfig, Profile};

/// Trials per independently seeded chunk.
pub const CHUNK: u64 = 8192;

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    fn from_sums(n: u64, sum: f64, sum_sq: f64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let std_error = if n > 1 {
            let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error }
    }

    /// Whether `value` lies within `sigmas` standard errors of the mean.
    pub fn covers(&self, value: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= sigmas * self.std_error + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub seed: u64,
    /// Fraction of trials in which someone found the treasure.
    pub success: Estimate,
    /// Mean reward of each player.
    pub utilities: Vec<Estimate>,
}

#[derive(Clone)]
struct Sums {
    found: f64,
    rewards: Vec<f64>,
    rewards_sq: Vec<f64>,
}

/// Plays `trials` independent games of `profile`.
///
/// Each trial hides the treasure according to `f`, runs one sampled
/// execution per player, and pays `C(l)` to each of the `l` players that
/// open the treasure box first, in the same round.
pub fn simulate(
    config: &GameConfig,
    profile: &Profile,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(GameError::InvalidParameter(
            "trials must be positive".into(),
        ));
    }
    config.check_profile(profile)?;
    let decompositions: Vec<StrategyDecomposition> = if profile.is_symmetric() {
        vec![birkhoff_decompose(profile.player(0))?; profile.len()]
    } else {
        profile
            .players()
            .iter()
            .map(birkhoff_decompose)
            .collect::<Result<_>>()?
    };
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Sums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(trials - c * CHUNK);
            run_chunk(config, &decompositions, seed, c, n)
        })
        .collect();

    let k = profile.len();
    let mut total = Sums {
        found: 0.0,
        rewards: vec![0.0; k],
        rewards_sq: vec![0.0; k],
    };
    for s in &partial {
        total.found += s.found;
        for i in 0..k {
            total.rewards[i] += s.rewards[i];
            total.rewards_sq[i] += s.rewards_sq[i];
        }
    }
    Ok(SimulationReport {
        trials,
        seed,
        success: Estimate::from_sums(trials, total.found, total.found),
        utilities: (0..k)
            .map(|i| Estimate::from_sums(trials, total.rewards[i], total.rewards_sq[i]))
            .collect(),
    })
}

fn run_chunk(
    config: &GameConfig,
    decompositions: &[StrategyDecomposition],
    seed: u64,
    chunk: u64,
    n: u64,
) -> Sums {
    let k = decompositions.len();
    let f = config.distribution().probs();
    let policy = config.policy();
    let mut treasure_rng = ChaCha8Rng::seed_from_u64(seed);
    treasure_rng.set_stream((1 << 63) | chunk);
    let mut player_rngs: Vec<ChaCha8Rng> = (0..k)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
            rng.set_stream(chunk);
            rng
        })
        .collect();
    let cumulative: Vec<f64> = f
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let mut sums = Sums {
        found: 0.0,
        rewards: vec![0.0; k],
        rewards_sq: vec![0.0; k],
    };
    let mut rounds = vec![None; k];
    for _ in 0..n {
        let u = treasure_rng.random::<f64>() * cumulative[f.len() - 1];
        let treasure = cumulative.partition_point(|&c| c <= u).min(f.len() - 1);
        for (i, d) in decompositions.iter().enumerate() {
            rounds[i] = d.sample(&mut player_rngs[i]).round_of(treasure);
        }
        let Some(first) = rounds.iter().flatten().min().copied() else {
            continue;
        };
        let finders = rounds.iter().filter(|&&r| r == Some(first)).count();
        let reward = policy.reward(finders);
        sums.found += 1.0;
        for i in 0..k {
            if rounds[i] == Some(first) {
                sums.rewards[i] += reward;
                sums.rewards_sq[i] += reward * reward;
            }
        }
    }
    sums
}
