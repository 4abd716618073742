//! Exact best responses, equilibrium certificates, price of anarchy,
//! robustness to extra players and brute-force checks on small games.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::decomp::PartialPermutation;
use crate::error::{GameError, Result};
use crate::game::{CongestionPolicy, GameConfig, Opponents, Profile, StrategyMatrix};
use crate::matching::max_weight_matching;
use crate::payoff::{
    check_opponents, optimal_success, player_utilities, success_probability, utility,
    value_unchecked,
};

/// Absolute slack when comparing utilities of pure profiles.
pub const PURE_TOL: f64 = 1e-9;
/// Largest `M^(kT)` accepted by [`pure_equilibrium_search`].
pub const PURE_SEARCH_LIMIT: u64 = 10_000_000;

/// The values `v(x, t)` one player faces against fixed opponents.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    boxes: usize,
    rounds: usize,
    values: Vec<f64>,
}

impl ValueField {
    /// Row-major values; all must be finite and non-negative.
    pub fn new(boxes: usize, rounds: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != boxes * rounds {
            return Err(GameError::DimensionMismatch(format!(
                "{} values for a {boxes}x{rounds} field",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(GameError::InvalidParameter(format!(
                "value ({}, {}) = {} is negative",
                i / rounds.max(1) + 1,
                i % rounds.max(1) + 1,
                values[i]
            )));
        }
        Ok(Self {
            boxes,
            rounds,
            values,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let boxes = rows.len();
        let rounds = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != rounds) {
            return Err(GameError::DimensionMismatch("ragged value rows".into()));
        }
        Self::new(boxes, rounds, rows.into_iter().flatten().collect())
    }

    pub fn boxes(&self) -> usize {
        self.boxes
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    #[inline]
    pub fn get(&self, x: usize, t: usize) -> f64 {
        self.values[x * self.rounds + t]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.rounds)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `sum B(x,t) v(x,t)`.
    pub fn utility(&self, b: &StrategyMatrix) -> Result<f64> {
        if b.boxes() != self.boxes || b.rounds() != self.rounds {
            return Err(GameError::DimensionMismatch(format!(
                "strategy is {}x{}, field is {}x{}",
                b.boxes(),
                b.rounds(),
                self.boxes,
                self.rounds
            )));
        }
        Ok(b.entries()
            .iter()
            .zip(&self.values)
            .map(|(b, v)| b * v)
            .sum())
    }
}

/// `v(x, t)` for every box and round against `others`.
pub fn value_field(config: &GameConfig, others: &Opponents<'_>) -> Result<ValueField> {
    check_opponents(config, others)?;
    let (m, t) = (config.boxes(), config.rounds());
    let mut values = Vec::with_capacity(m * t);
    for x in 0..m {
        for s in 0..t {
            values.push(value_unchecked(config, others, x, s));
        }
    }
    ValueField::new(m, t, values)
}

/// An optimal strategy against a fixed value field and its utility.
///
/// Utility is linear in the strategy and the doubly-substochastic polytope
/// has partial permutations as its vertices, so a maximum-weight matching
/// between boxes and rounds is an exact optimum.
pub fn best_response(v: &ValueField) -> Result<(StrategyMatrix, f64)> {
    let (matched, _) = max_weight_matching(v.values(), v.boxes(), v.rounds())?;
    let mut visits = vec![None; v.rounds()];
    for (x, t) in matched.into_iter().enumerate() {
        if let Some(t) = t {
            visits[t] = Some(x);
        }
    }
    let b = PartialPermutation::new(visits, v.boxes())?.to_matrix(v.boxes())?;
    let u = v.utility(&b)?;
    Ok((b, u))
}

fn serialize_ratio<S: Serializer>(ratio: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if ratio.is_finite() {
        s.serialize_f64(*ratio)
    } else {
        s.serialize_str("inf")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerCertificate {
    pub own_utility: f64,
    pub best_response_utility: f64,
    /// `best / own`; infinite when the player earns nothing but could.
    #[serde(serialize_with = "serialize_ratio")]
    pub ratio: f64,
}

impl PlayerCertificate {
    fn new(own: f64, best: f64) -> Self {
        let ratio = if own > 0.0 {
            best / own
        } else if best > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        Self {
            own_utility: own,
            best_response_utility: best,
            ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumCertificate {
    pub players: Vec<PlayerCertificate>,
    /// Largest ratio over the players.
    #[serde(serialize_with = "serialize_ratio")]
    pub ratio: f64,
    pub tolerance: f64,
    /// `ratio <= 1 + tolerance`.
    pub is_equilibrium: bool,
}

/// Measures how far `profile` is from an equilibrium: the largest factor by
/// which a player could improve its utility by deviating.
pub fn certify(
    config: &GameConfig,
    profile: &Profile,
    tolerance: f64,
) -> Result<EquilibriumCertificate> {
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(GameError::InvalidParameter(format!(
            "tolerance {tolerance} must be non-negative"
        )));
    }
    config.check_profile(profile)?;
    let check = |i: usize| -> Result<PlayerCertificate> {
        let others = profile.others(i);
        let field = value_field(config, &others)?;
        let own = field.utility(profile.player(i))?;
        let (_, best) = best_response(&field)?;
        Ok(PlayerCertificate::new(own, best))
    };
    let players = if profile.is_symmetric() {
        vec![check(0)?; profile.len()]
    } else {
        (0..profile.len())
            .into_par_iter()
            .map(check)
            .collect::<Result<Vec<_>>>()?
    };
    let ratio = players
        .iter()
        .map(|p| p.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(EquilibriumCertificate {
        players,
        ratio,
        tolerance,
        is_equilibrium: ratio <= 1.0 + tolerance,
    })
}

/// Worst-case price of anarchy, `(1 - (1 - 1/k)^k)^-1`, of the exclusive
/// policy with `k` players.
pub fn poa_bound(players: usize) -> f64 {
    let k = players as f64;
    1.0 / (1.0 - (1.0 - 1.0 / k).powi(players as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoAReport {
    pub optimal_success: f64,
    pub success: f64,
    /// `optimal_success / success`.
    pub ratio: f64,
    pub bound: f64,
    /// Equilibrium ratio of the evaluated profile.
    #[serde(serialize_with = "serialize_ratio")]
    pub certificate_ratio: f64,
}

/// Compares the success of `profile` with the coordinated optimum.
pub fn poa_metrics(config: &GameConfig, profile: &Profile) -> Result<PoAReport> {
    config.check_profile(profile)?;
    let success = success_probability(config.distribution(), profile)?;
    if success <= 0.0 {
        return Err(GameError::InvalidProfile(
            "profile never finds the treasure".into(),
        ));
    }
    let optimal = optimal_success(config.distribution(), config.players(), config.rounds());
    Ok(PoAReport {
        optimal_success: optimal,
        success,
        ratio: optimal / success,
        bound: poa_bound(config.players()),
        certificate_ratio: certify(config, profile, 0.0)?.ratio,
    })
}

/// Equilibrium ratio of `a`, built for the `k` players of `config`, when
/// `k + extra` players use it. The policy is extended by its kind's formula;
/// table policies need [`robustness_eval_with`].
pub fn robustness_eval(config: &GameConfig, a: &StrategyMatrix, extra: usize) -> Result<f64> {
    let extended = config
        .with_players(config.players() + extra)
        .map_err(|e| match e {
            GameError::Unsupported(msg) => GameError::Unsupported(format!(
                "{msg}; table policies need explicit rewards for {} players",
                config.players() + extra
            )),
            other => other,
        })?;
    eval_extended(&extended, a)
}

/// [`robustness_eval`] with an explicit policy for the enlarged game. Its
/// first `k` rewards must agree with the original policy.
pub fn robustness_eval_with(
    config: &GameConfig,
    a: &StrategyMatrix,
    extended: CongestionPolicy,
) -> Result<f64> {
    let k = config.players();
    if extended.players() < k {
        return Err(GameError::InvalidPolicy(format!(
            "extended policy covers {} players, fewer than k = {k}",
            extended.players()
        )));
    }
    let base = config.policy().rewards();
    if let Some(l) = (0..k).find(|&l| (extended.rewards()[l] - base[l]).abs() > 1e-12) {
        return Err(GameError::InvalidPolicy(format!(
            "extended C({}) = {} differs from C({}) = {}",
            l + 1,
            extended.rewards()[l],
            l + 1,
            base[l]
        )));
    }
    eval_extended(&config.with_policy(extended)?, a)
}

fn eval_extended(extended: &GameConfig, a: &StrategyMatrix) -> Result<f64> {
    extended.check_matrix(a)?;
    let profile = Profile::symmetric(a.clone(), extended.players())?;
    Ok(certify(extended, &profile, 0.0)?.ratio)
}

/// The distinct deterministic strategies: first-visit forms of all `M^T`
/// box sequences, in lexicographic order of the first sequence producing
/// each.
fn pure_strategies(boxes: usize, rounds: usize) -> Vec<PartialPermutation> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut sequence = vec![0usize; rounds];
    loop {
        let p = PartialPermutation::from_sequence(&sequence, boxes).expect("boxes in range");
        if seen.insert(p.clone()) {
            out.push(p);
        }
        // odometer increment, last round fastest
        let Some(pos) = (0..rounds).rev().find(|&i| sequence[i] + 1 < boxes) else {
            break;
        };
        sequence[pos] += 1;
        for s in &mut sequence[pos + 1..] {
            *s = 0;
        }
    }
    out
}

/// Whether no player of a deterministic profile gains more than
/// [`PURE_TOL`] by deviating to any strategy, mixed or pure.
pub fn is_pure_equilibrium(config: &GameConfig, strategies: &[PartialPermutation]) -> Result<bool> {
    let matrices: Vec<StrategyMatrix> = strategies
        .iter()
        .map(|p| p.to_matrix(config.boxes()))
        .collect::<Result<_>>()?;
    let index: Vec<usize> = (0..matrices.len()).collect();
    pure_profile_is_equilibrium(config, &matrices, &index)
}

fn pure_profile_is_equilibrium(
    config: &GameConfig,
    matrices: &[StrategyMatrix],
    chosen: &[usize],
) -> Result<bool> {
    if chosen.len() != config.players() {
        return Err(GameError::DimensionMismatch(format!(
            "{} strategies for k = {}",
            chosen.len(),
            config.players()
        )));
    }
    for i in 0..chosen.len() {
        if chosen[..i].contains(&chosen[i]) {
            continue;
        }
        let others = Opponents::Listed(
            chosen
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &s)| &matrices[s])
                .collect(),
        );
        let field = value_field(config, &others)?;
        let own = field.utility(&matrices[chosen[i]])?;
        let (_, best) = best_response(&field)?;
        if best > own + PURE_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every deterministic profile at equilibrium, one representative per
/// multiset of strategies (players are interchangeable), listed with the
/// strategies in enumeration order.
pub fn pure_equilibrium_search(config: &GameConfig) -> Result<Vec<Vec<PartialPermutation>>> {
    let (m, t, k) = (config.boxes(), config.rounds(), config.players());
    let size = u32::try_from(k * t)
        .ok()
        .and_then(|e| (m as u64).checked_pow(e))
        .filter(|&s| s <= PURE_SEARCH_LIMIT);
    if size.is_none() {
        return Err(GameError::TooLarge(format!(
            "M^(kT) = {m}^{} exceeds {PURE_SEARCH_LIMIT}",
            k * t
        )));
    }
    let strategies = pure_strategies(m, t);
    let matrices: Vec<StrategyMatrix> = strategies
        .iter()
        .map(|p| p.to_matrix(m))
        .collect::<Result<_>>()?;
    let s = strategies.len();

    // profiles are non-decreasing index tuples, split by the first index
    let found: Vec<Vec<Vec<usize>>> = (0..s)
        .into_par_iter()
        .map(|first| -> Result<Vec<Vec<usize>>> {
            let mut hits = Vec::new();
            let mut chosen = vec![first; k];
            loop {
                if pure_profile_is_equilibrium(config, &matrices, &chosen)? {
                    hits.push(chosen.clone());
                }
                let Some(pos) = (1..k).rev().find(|&i| chosen[i] + 1 < s) else {
                    break;
                };
                let next = chosen[pos] + 1;
                for c in &mut chosen[pos..] {
                    *c = next;
                }
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;
    Ok(found
        .into_iter()
        .flatten()
        .map(|chosen| chosen.into_iter().map(|i| strategies[i].clone()).collect())
        .collect())
}

/// Whether `nash` finds the treasure at least as often as `k` copies of `a`
/// (exclusive policy only).
pub fn nash_dominates_symmetric_check(
    config: &GameConfig,
    nash: &Profile,
    a: &StrategyMatrix,
) -> Result<bool> {
    if !config.policy().is_exclusive() {
        return Err(GameError::Unsupported(format!(
            "the dominance check covers the exclusive policy, not {}",
            config.policy().kind()
        )));
    }
    config.check_profile(nash)?;
    config.check_matrix(a)?;
    let f = config.distribution();
    let symmetric = Profile::symmetric(a.clone(), config.players())?;
    Ok(success_probability(f, nash)? + 1e-9 >= success_probability(f, &symmetric)?)
}

/// Adds `extra` players to `base` and reports whether the total utility did
/// not decrease and whether no original player's utility increased.
pub fn scalability_probe(
    config: &GameConfig,
    base: &Profile,
    extra: &[StrategyMatrix],
) -> Result<(bool, bool)> {
    let before = player_utilities(config, base)?;
    let larger = config.with_players(config.players() + extra.len())?;
    let grown = base.extended(extra)?;
    larger.check_profile(&grown)?;
    let after: Vec<f64> = (0..grown.len())
        .map(|i| utility(&larger, &grown.others(i), grown.player(i)))
        .collect::<Result<_>>()?;
    let total_ok = before.iter().sum::<f64>() <= after.iter().sum::<f64>() + 1e-9;
    let individual_ok = before.iter().zip(&after).all(|(b, a)| *a <= b + 1e-9);
    Ok((total_ok, individual_ok))
}
