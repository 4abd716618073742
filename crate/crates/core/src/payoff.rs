//! Closed-form game quantities: values, utilities and success probabilities.

use crate::error::{GameError, Result};
use crate::game::{
    BoxDistribution, CongestionPolicy, GameConfig, Opponents, Profile, StrategyMatrix,
};

/// Expected reward of one of `players` players when each of the other
/// `players - 1` independently shows up with probability `p`.
pub fn psi(policy: &CongestionPolicy, players: usize, p: f64) -> Result<f64> {
    check_players(policy, players)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(GameError::ProbabilityOutOfRange {
            value: p,
            range: "[0, 1]",
        });
    }
    Ok(binomial_reward(policy, players - 1, p, 1.0 - p))
}

/// `phi(p) = sum_i C(i+1) binom(k-1, i) p^i (q-p)^(k-1-i)`, which equals
/// `q^(k-1) psi(p / q)`.
pub fn phi(policy: &CongestionPolicy, players: usize, q: f64, p: f64) -> Result<f64> {
    check_players(policy, players)?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(GameError::ProbabilityOutOfRange {
            value: q,
            range: "(0, 1]",
        });
    }
    if !(0.0..=q).contains(&p) {
        return Err(GameError::ProbabilityOutOfRange {
            value: p,
            range: "[0, q]",
        });
    }
    Ok(binomial_reward(policy, players - 1, p, q - p))
}

fn check_players(policy: &CongestionPolicy, players: usize) -> Result<()> {
    if players == 0 || players > policy.players() {
        return Err(GameError::InvalidParameter(format!(
            "player count {players} outside 1..={} covered by the policy",
            policy.players()
        )));
    }
    Ok(())
}

/// `sum_{l=0}^{n} C(l+1) binom(n, l) hit^l miss^(n-l)`.
pub(crate) fn binomial_reward(policy: &CongestionPolicy, n: usize, hit: f64, miss: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if policy.is_exclusive() {
        return miss.powi(n as i32);
    }
    let mut total = 0.0;
    let mut binom = 1.0;
    for l in 0..=n {
        total += policy.reward(l + 1) * binom * hit.powi(l as i32) * miss.powi((n - l) as i32);
        binom = binom * (n - l) as f64 / (l + 1) as f64;
    }
    total
}

/// Value of opening box `x` in round `t` for a player facing `opponents`.
pub fn value(config: &GameConfig, opponents: &Opponents<'_>, x: usize, t: usize) -> Result<f64> {
    check_opponents(config, opponents)?;
    if x >= config.boxes() || t >= config.rounds() {
        return Err(GameError::OutOfRange(format!(
            "cell ({x}, {t}) in a {}x{} game",
            config.boxes(),
            config.rounds()
        )));
    }
    Ok(value_unchecked(config, opponents, x, t))
}

pub(crate) fn check_opponents(config: &GameConfig, opponents: &Opponents<'_>) -> Result<()> {
    if opponents.count() >= config.players() {
        return Err(GameError::DimensionMismatch(format!(
            "{} opponents but the policy only covers {} players",
            opponents.count(),
            config.players()
        )));
    }
    if let Some((boxes, rounds)) = opponents.shape() {
        if boxes != config.boxes() || rounds != config.rounds() {
            return Err(GameError::DimensionMismatch(format!(
                "opponents are {boxes}x{rounds}, game is {}x{}",
                config.boxes(),
                config.rounds()
            )));
        }
    }
    if let Opponents::Listed(list) = opponents {
        if list.iter().any(|m| !m.same_shape(list[0])) {
            return Err(GameError::DimensionMismatch(
                "opponents disagree on their shape".into(),
            ));
        }
    }
    Ok(())
}

pub(crate) fn value_unchecked(
    config: &GameConfig,
    opponents: &Opponents<'_>,
    x: usize,
    t: usize,
) -> f64 {
    let fx = config.distribution().prob(x);
    let policy = config.policy();
    match opponents {
        Opponents::Copies { strategy, count } => {
            fx * binomial_reward(
                policy,
                *count,
                strategy.get(x, t),
                strategy.remaining(x, t + 1),
            )
        }
        Opponents::Listed(list) if policy.is_exclusive() => {
            fx * list.iter().map(|b| b.remaining(x, t + 1)).product::<f64>()
        }
        Opponents::Listed(list) => {
            // dist[l]: nobody visited x before t and exactly l opponents visit it at t
            let mut dist = vec![0.0; list.len() + 1];
            dist[0] = 1.0;
            for (seen, b) in list.iter().enumerate() {
                let hit = b.get(x, t);
                let miss = b.remaining(x, t + 1);
                for l in (0..=seen + 1).rev() {
                    let carried = if l > 0 { dist[l - 1] * hit } else { 0.0 };
                    dist[l] = dist[l] * miss + carried;
                }
            }
            fx * dist
                .iter()
                .enumerate()
                .map(|(l, p)| policy.reward(l + 1) * p)
                .sum::<f64>()
        }
    }
}

/// Utility of `strategy` in round `t` against `opponents`.
pub fn utility_at(
    config: &GameConfig,
    opponents: &Opponents<'_>,
    strategy: &StrategyMatrix,
    t: usize,
) -> Result<f64> {
    check_opponents(config, opponents)?;
    config.check_matrix(strategy)?;
    if t >= config.rounds() {
        return Err(GameError::OutOfRange(format!(
            "round {t} of {}",
            config.rounds()
        )));
    }
    Ok((0..config.boxes())
        .filter(|&x| strategy.get(x, t) > 0.0)
        .map(|x| strategy.get(x, t) * value_unchecked(config, opponents, x, t))
        .sum())
}

/// Total utility `sum_t sum_x B(x,t) v(x,t)` of `strategy` against `opponents`.
pub fn utility(
    config: &GameConfig,
    opponents: &Opponents<'_>,
    strategy: &StrategyMatrix,
) -> Result<f64> {
    check_opponents(config, opponents)?;
    config.check_matrix(strategy)?;
    let mut total = 0.0;
    for t in 0..config.rounds() {
        for x in 0..config.boxes() {
            let b = strategy.get(x, t);
            if b > 0.0 {
                total += b * value_unchecked(config, opponents, x, t);
            }
        }
    }
    Ok(total)
}

/// Utility of every player of `profile` against the rest.
pub fn player_utilities(config: &GameConfig, profile: &Profile) -> Result<Vec<f64>> {
    config.check_profile(profile)?;
    if profile.is_symmetric() {
        let u = utility(config, &profile.others(0), profile.player(0))?;
        return Ok(vec![u; profile.len()]);
    }
    (0..profile.len())
        .map(|i| utility(config, &profile.others(i), profile.player(i)))
        .collect()
}

/// Probability that some player of `profile` opens box `x` within the game.
pub fn success_at_box(profile: &Profile, x: usize) -> f64 {
    let rounds = profile.rounds();
    1.0 - profile
        .players()
        .iter()
        .map(|a| a.remaining(x, rounds))
        .product::<f64>()
}

/// Probability that the treasure is found by at least one player.
pub fn success_probability(f: &BoxDistribution, profile: &Profile) -> Result<f64> {
    if profile.boxes() != f.len() {
        return Err(GameError::DimensionMismatch(format!(
            "profile has {} boxes, distribution has {}",
            profile.boxes(),
            f.len()
        )));
    }
    Ok((0..f.len())
        .map(|x| f.prob(x) * success_at_box(profile, x))
        .sum())
}

/// Success probability of the best coordinated profile: the `min(kT, M)`
/// most likely boxes.
pub fn optimal_success(f: &BoxDistribution, players: usize, rounds: usize) -> f64 {
    let covered = players.saturating_mul(rounds).min(f.len());
    f.probs()[..covered].iter().sum()
}
