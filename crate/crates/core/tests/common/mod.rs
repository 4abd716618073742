//! Random instance generators and brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use hunt_core::{
    astar, pure_strategy, uniform_strategy, BoxDistribution, CongestionPolicy, GameConfig,
    PartialPermutation, Profile, StrategyMatrix, ValueField,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive weights spread over an order of magnitude, normalized.
pub fn random_distribution(rng: &mut impl Rng, boxes: usize) -> BoxDistribution {
    let weights: Vec<f64> = (0..boxes).map(|_| rng.random_range(0.05..1.0)).collect();
    BoxDistribution::from_weights(&weights).unwrap()
}

/// Non-increasing table with `C(1) = 1` and `C(k) <= 0.95`.
pub fn random_table(rng: &mut impl Rng, players: usize) -> CongestionPolicy {
    let mut rewards = vec![1.0];
    for l in 1..players {
        let prev: f64 = rewards[l - 1];
        let next = if l + 1 == players {
            rng.random_range(0.0..=prev.min(0.95))
        } else {
            rng.random_range(0.0..=prev)
        };
        rewards.push(next);
    }
    CongestionPolicy::table(rewards).unwrap()
}

pub fn random_policy(rng: &mut impl Rng, players: usize) -> CongestionPolicy {
    match rng.random_range(0..3) {
        0 => CongestionPolicy::exclusive(players),
        1 => CongestionPolicy::sharing(players),
        _ => random_table(rng, players),
    }
}

/// A doubly-substochastic matrix: sparse non-negative noise scaled below
/// the largest line sum. A third of the draws are tight.
pub fn random_substochastic(rng: &mut impl Rng, boxes: usize, rounds: usize) -> StrategyMatrix {
    let sparsity = rng.random_range(0.0..0.6);
    let mut entries: Vec<f64> = (0..boxes * rounds)
        .map(|_| {
            if rng.random_bool(sparsity) {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            }
        })
        .collect();
    let row_max = (0..boxes)
        .map(|x| entries[x * rounds..(x + 1) * rounds].iter().sum::<f64>())
        .fold(0.0, f64::max);
    let col_max = (0..rounds)
        .map(|t| (0..boxes).map(|x| entries[x * rounds + t]).sum::<f64>())
        .fold(0.0, f64::max);
    let largest = row_max.max(col_max);
    if largest > 0.0 {
        let scale = if rng.random_bool(1.0 / 3.0) {
            1.0
        } else {
            rng.random_range(0.2..1.0)
        };
        for e in &mut entries {
            *e *= scale / largest;
        }
    }
    StrategyMatrix::new(boxes, rounds, entries).unwrap()
}

/// A random distinct visit sequence of length at most `rounds`.
pub fn random_pure(rng: &mut impl Rng, boxes: usize, rounds: usize) -> StrategyMatrix {
    let mut order: Vec<usize> = (0..boxes).collect();
    order.shuffle(rng);
    let len = rng.random_range(0..=rounds.min(boxes));
    pure_strategy(&order[..len], boxes, rounds).unwrap()
}

pub fn random_strategy(rng: &mut impl Rng, config: &GameConfig) -> StrategyMatrix {
    let (m, t) = (config.boxes(), config.rounds());
    match rng.random_range(0..4) {
        0 => astar(config.distribution(), config.players(), t).unwrap(),
        1 => uniform_strategy(rng.random_range(1..=m), m, t).unwrap(),
        2 => random_pure(rng, m, t),
        _ => random_substochastic(rng, m, t),
    }
}

/// A profile for `config`; symmetric half of the time.
pub fn random_profile(rng: &mut impl Rng, config: &GameConfig) -> Profile {
    let k = config.players();
    if rng.random_bool(0.5) {
        Profile::symmetric(random_strategy(rng, config), k).unwrap()
    } else {
        Profile::new((0..k).map(|_| random_strategy(rng, config)).collect()).unwrap()
    }
}

pub fn random_config(
    rng: &mut impl Rng,
    max_players: usize,
    max_boxes: usize,
    max_rounds: usize,
) -> GameConfig {
    let k = rng.random_range(1..=max_players);
    let m = rng.random_range(1..=max_boxes);
    let t = rng.random_range(1..=max_rounds);
    GameConfig::new(random_distribution(rng, m), random_policy(rng, k), t).unwrap()
}

fn binomial(n: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability that at least `i` of `n` independent Bernoulli(`p`) trials succeed.
pub fn binomial_tail(n: usize, i: usize, p: f64) -> f64 {
    (i..=n)
        .map(|j| binomial(n, j) * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32))
        .sum()
}

/// `phi(q, p)` evaluated straight from its defining sum.
pub fn phi_by_definition(policy: &CongestionPolicy, players: usize, q: f64, p: f64) -> f64 {
    (0..players)
        .map(|i| {
            policy.reward(i + 1)
                * binomial(players - 1, i)
                * p.powi(i as i32)
                * (q - p).powi((players - 1 - i) as i32)
        })
        .sum()
}

/// Every partial permutation of `boxes` into `rounds`.
pub fn all_partial_permutations(boxes: usize, rounds: usize) -> Vec<PartialPermutation> {
    fn go(
        t: usize,
        visits: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        out: &mut Vec<PartialPermutation>,
    ) {
        let rounds = visits.len();
        if t == rounds {
            out.push(PartialPermutation::new(visits.clone(), used.len()).unwrap());
            return;
        }
        visits[t] = None;
        go(t + 1, visits, used, out);
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                visits[t] = Some(x);
                go(t + 1, visits, used, out);
                used[x] = false;
            }
        }
        visits[t] = None;
    }
    let mut out = Vec::new();
    go(
        0,
        &mut vec![None; rounds],
        &mut vec![false; boxes],
        &mut out,
    );
    out
}

/// Best utility over all partial permutations, by exhaustion.
pub fn brute_force_best(field: &ValueField) -> f64 {
    all_partial_permutations(field.boxes(), field.rounds())
        .iter()
        .map(|p| {
            p.visits()
                .iter()
                .enumerate()
                .filter_map(|(t, x)| x.map(|x| field.get(x, t)))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Expected reward of player `me` in a deterministic profile, summing over
/// treasure locations and who opens the box first.
pub fn enumerated_utility(config: &GameConfig, profile: &[PartialPermutation], me: usize) -> f64 {
    let f = config.distribution();
    (0..config.boxes())
        .map(|x| {
            let Some(mine) = profile[me].round_of(x) else {
                return 0.0;
            };
            let rounds: Vec<Option<usize>> = profile.iter().map(|p| p.round_of(x)).collect();
            if rounds.iter().flatten().any(|&r| r < mine) {
                return 0.0;
            }
            let finders = rounds.iter().filter(|&&r| r == Some(mine)).count();
            f.prob(x) * config.policy().reward(finders)
        })
        .sum()
}
