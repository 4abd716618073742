//! Domain types of the search game: the prior over boxes, congestion
//! policies, strategy matrices, profiles and configurations.
//!
//! Boxes and rounds are zero-based throughout the library API. Box `0` is
//! always the most likely box: [`BoxDistribution`] sorts its input and keeps
//! the permutation so callers can translate back to their own labels.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};

/// Tolerance for structural checks (row/column sums, equality of matrices).
pub const STRUCTURAL_TOL: f64 = 1e-9;
/// Tolerance for the normalization of the prior.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Prior distribution of the treasure over `M` boxes, stored non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDistribution {
    probs: Vec<f64>,
    // labels[i] is the caller's index of the i-th most likely box
    labels: Vec<usize>,
}

impl BoxDistribution {
    /// Validates `probs` (strictly positive, summing to one) and sorts it
    /// non-increasing. The sort is stable, so already sorted input keeps its
    /// labels.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(GameError::InvalidDistribution("no boxes".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(GameError::InvalidDistribution(format!(
                    "f({}) = {p} is not strictly positive",
                    i + 1
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(GameError::InvalidDistribution(format!(
                "entries sum to {total}, expected 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        let mut labels: Vec<usize> = (0..probs.len()).collect();
        labels.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap_or(Ordering::Equal));
        let sorted = labels.iter().map(|&i| probs[i]).collect();
        Ok(Self {
            probs: sorted,
            labels,
        })
    }

    /// Normalizes arbitrary positive weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(GameError::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(boxes: usize) -> Result<Self> {
        Self::new(vec![1.0 / boxes as f64; boxes])
    }

    /// Number of boxes `M`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of the `x`-th most likely box.
    pub fn prob(&self, x: usize) -> f64 {
        self.probs[x]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `labels()[x]` is the caller's (input-order) index of sorted box `x`.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// The probabilities in the caller's original order.
    pub fn original_probs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (x, &label) in self.labels.iter().enumerate() {
            out[label] = self.probs[x];
        }
        out
    }

    /// Sorted index of the box the caller calls `label`.
    pub fn sorted_index(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Re-orders the rows of a matrix given in caller labels into sorted order.
    pub fn rows_to_sorted(&self, matrix: &StrategyMatrix) -> Result<StrategyMatrix> {
        self.check_boxes(matrix)?;
        let rows = self
            .labels
            .iter()
            .map(|&label| matrix.row(label).to_vec())
            .collect();
        StrategyMatrix::from_rows(matrix.rounds(), rows)
    }

    /// Inverse of [`BoxDistribution::rows_to_sorted`].
    pub fn rows_to_original(&self, matrix: &StrategyMatrix) -> Result<StrategyMatrix> {
        self.check_boxes(matrix)?;
        let mut rows = vec![Vec::new(); self.len()];
        for (x, &label) in self.labels.iter().enumerate() {
            rows[label] = matrix.row(x).to_vec();
        }
        StrategyMatrix::from_rows(matrix.rounds(), rows)
    }

    fn check_boxes(&self, matrix: &StrategyMatrix) -> Result<()> {
        if matrix.boxes() != self.len() {
            return Err(GameError::DimensionMismatch(format!(
                "matrix has {} boxes, distribution has {}",
                matrix.boxes(),
                self.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Exclusive,
    Sharing,
    Table,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PolicyKind::Exclusive => "exclusive",
            PolicyKind::Sharing => "sharing",
            PolicyKind::Table => "table",
        };
        f.write_str(name)
    }
}

/// Congestion policy `C(1..k)`: the reward of each of `l` players that find
/// the treasure simultaneously.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionPolicy {
    kind: PolicyKind,
    rewards: Vec<f64>,
}

impl CongestionPolicy {
    pub fn exclusive(players: usize) -> Self {
        let mut rewards = vec![0.0; players.max(1)];
        rewards[0] = 1.0;
        Self {
            kind: PolicyKind::Exclusive,
            rewards,
        }
    }

    pub fn sharing(players: usize) -> Self {
        Self {
            kind: PolicyKind::Sharing,
            rewards: (1..=players.max(1)).map(|l| 1.0 / l as f64).collect(),
        }
    }

    /// An explicit reward table. `C(1)` must be one, the table non-negative
    /// and non-increasing, and (for two or more players) not identically one.
    pub fn table(rewards: Vec<f64>) -> Result<Self> {
        if rewards.is_empty() {
            return Err(GameError::InvalidPolicy("empty reward table".into()));
        }
        if rewards.iter().any(|c| !c.is_finite()) {
            return Err(GameError::InvalidPolicy("non-finite reward".into()));
        }
        if (rewards[0] - 1.0).abs() > NORMALIZATION_TOL {
            return Err(GameError::InvalidPolicy(format!(
                "C(1) = {} but must be 1",
                rewards[0]
            )));
        }
        for (l, &c) in rewards.iter().enumerate() {
            if c < 0.0 {
                return Err(GameError::InvalidPolicy(format!(
                    "C({}) = {c} is negative",
                    l + 1
                )));
            }
        }
        for l in 1..rewards.len() {
            if rewards[l] > rewards[l - 1] + NORMALIZATION_TOL {
                return Err(GameError::InvalidPolicy(format!(
                    "C({}) = {} exceeds C({}) = {}; policy must be non-increasing",
                    l + 1,
                    rewards[l],
                    l,
                    rewards[l - 1]
                )));
            }
        }
        if rewards.len() > 1 && rewards.iter().all(|&c| c >= 1.0) {
            return Err(GameError::InvalidPolicy(
                "C is identically 1; at least one C(l) must be below 1".into(),
            ));
        }
        let mut rewards = rewards;
        rewards[0] = 1.0;
        Ok(Self {
            kind: PolicyKind::Table,
            rewards,
        })
    }

    /// Builds a policy of the given kind for `players` players. Tables take
    /// their rewards verbatim and must have exactly `players` entries.
    pub fn from_kind(kind: PolicyKind, players: usize, rewards: Option<Vec<f64>>) -> Result<Self> {
        let expanded = match kind {
            PolicyKind::Exclusive => Self::exclusive(players),
            PolicyKind::Sharing => Self::sharing(players),
            PolicyKind::Table => {
                let rewards = rewards.ok_or_else(|| {
                    GameError::InvalidPolicy("table policy needs explicit rewards".into())
                })?;
                if rewards.len() != players {
                    return Err(GameError::InvalidPolicy(format!(
                        "table has {} rewards but the game has k = {players} players",
                        rewards.len()
                    )));
                }
                return Self::table(rewards);
            }
        };
        if let Some(given) = rewards {
            let agrees = given.len() == expanded.rewards.len()
                && given
                    .iter()
                    .zip(&expanded.rewards)
                    .all(|(a, b)| (a - b).abs() <= NORMALIZATION_TOL);
            if !agrees {
                return Err(GameError::InvalidPolicy(format!(
                    "rewards {given:?} disagree with the {kind} policy for k = {players}"
                )));
            }
        }
        Ok(expanded)
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Number of players the policy is defined for.
    pub fn players(&self) -> usize {
        self.rewards.len()
    }

    /// `C(l)` for `1 <= l <= players()`.
    pub fn reward(&self, l: usize) -> f64 {
        self.rewards[l - 1]
    }

    /// `C(k)` for the full player count.
    pub fn last_reward(&self) -> f64 {
        *self.rewards.last().expect("policy is never empty")
    }

    pub fn is_exclusive(&self) -> bool {
        self.kind == PolicyKind::Exclusive
    }

    /// The same kind of policy for a different number of players. Closed-form
    /// kinds recompute their table; explicit tables can only be truncated.
    pub fn with_players(&self, players: usize) -> Result<Self> {
        match self.kind {
            PolicyKind::Exclusive => Ok(Self::exclusive(players)),
            PolicyKind::Sharing => Ok(Self::sharing(players)),
            PolicyKind::Table if players <= self.players() => {
                Self::table(self.rewards[..players.max(1)].to_vec())
            }
            PolicyKind::Table => Err(GameError::Unsupported(format!(
                "table policy defined for {} players cannot be extended to {players} without explicit rewards",
                self.players()
            ))),
        }
    }
}

/// Doubly-substochastic `M x T` matrix: entry `(x, t)` is the probability of
/// visiting box `x` for the first time in round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyMatrix {
    boxes: usize,
    rounds: usize,
    entries: Vec<f64>,
    // boxes x (rounds + 1): probability that x is still unvisited after the
    // first `t` rounds
    remaining: Vec<f64>,
}

impl StrategyMatrix {
    /// Builds a matrix from row-major entries. Entries within
    /// [`STRUCTURAL_TOL`] of `[0, 1]` are clamped into it.
    pub fn new(boxes: usize, rounds: usize, entries: Vec<f64>) -> Result<Self> {
        if boxes == 0 || rounds == 0 {
            return Err(GameError::InvalidMatrix(format!(
                "dimensions {boxes}x{rounds} must both be positive"
            )));
        }
        if entries.len() != boxes * rounds {
            return Err(GameError::InvalidMatrix(format!(
                "{} entries for a {boxes}x{rounds} matrix",
                entries.len()
            )));
        }
        let mut entries = entries;
        for (i, a) in entries.iter_mut().enumerate() {
            if !a.is_finite() || *a < -STRUCTURAL_TOL || *a > 1.0 + STRUCTURAL_TOL {
                return Err(GameError::InvalidMatrix(format!(
                    "entry ({}, {}) = {a} outside [0, 1]",
                    i / rounds + 1,
                    i % rounds + 1
                )));
            }
            *a = a.clamp(0.0, 1.0);
        }
        for x in 0..boxes {
            let sum: f64 = entries[x * rounds..(x + 1) * rounds].iter().sum();
            if sum > 1.0 + STRUCTURAL_TOL {
                return Err(GameError::InvalidMatrix(format!(
                    "row {} sums to {sum} > 1 (not doubly-substochastic)",
                    x + 1
                )));
            }
        }
        for t in 0..rounds {
            let sum: f64 = (0..boxes).map(|x| entries[x * rounds + t]).sum();
            if sum > 1.0 + STRUCTURAL_TOL {
                return Err(GameError::InvalidMatrix(format!(
                    "column {} sums to {sum} > 1 (not doubly-substochastic)",
                    t + 1
                )));
            }
        }
        let mut remaining = vec![0.0; boxes * (rounds + 1)];
        for x in 0..boxes {
            let base = x * (rounds + 1);
            remaining[base] = 1.0;
            for t in 0..rounds {
                remaining[base + t + 1] = (remaining[base + t] - entries[x * rounds + t]).max(0.0);
            }
        }
        Ok(Self {
            boxes,
            rounds,
            entries,
            remaining,
        })
    }

    pub fn from_rows(rounds: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let boxes = rows.len();
        if let Some((x, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != rounds) {
            return Err(GameError::InvalidMatrix(format!(
                "row {} has {} entries, expected {rounds}",
                x + 1,
                row.len()
            )));
        }
        Self::new(boxes, rounds, rows.into_iter().flatten().collect())
    }

    pub fn zeros(boxes: usize, rounds: usize) -> Result<Self> {
        Self::new(boxes, rounds, vec![0.0; boxes * rounds])
    }

    /// The unit matrix `δ_{x,t}`.
    pub fn unit(boxes: usize, rounds: usize, x: usize, t: usize) -> Result<Self> {
        if x >= boxes || t >= rounds {
            return Err(GameError::OutOfRange(format!(
                "({x}, {t}) in a {boxes}x{rounds} matrix"
            )));
        }
        let mut entries = vec![0.0; boxes * rounds];
        entries[x * rounds + t] = 1.0;
        Self::new(boxes, rounds, entries)
    }

    pub fn boxes(&self) -> usize {
        self.boxes
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Entry for box `x` in round `t` (both zero-based).
    #[inline]
    pub fn get(&self, x: usize, t: usize) -> f64 {
        self.entries[x * self.rounds + t]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.rounds..(x + 1) * self.rounds]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.boxes).map(|x| self.row(x).to_vec()).collect()
    }

    /// Probability that box `x` is still unvisited after `elapsed` rounds.
    /// `nbar(x, 0) == 1`.
    pub fn nbar(&self, x: usize, elapsed: usize) -> Result<f64> {
        if x >= self.boxes || elapsed > self.rounds {
            return Err(GameError::OutOfRange(format!(
                "nbar({x}, {elapsed}) for a {}x{} matrix",
                self.boxes, self.rounds
            )));
        }
        Ok(self.remaining(x, elapsed))
    }

    /// Unchecked [`StrategyMatrix::nbar`].
    #[inline]
    pub fn remaining(&self, x: usize, elapsed: usize) -> f64 {
        self.remaining[x * (self.rounds + 1) + elapsed]
    }

    pub fn row_sum(&self, x: usize) -> f64 {
        self.row(x).iter().sum()
    }

    pub fn column_sum(&self, t: usize) -> f64 {
        (0..self.boxes).map(|x| self.get(x, t)).sum()
    }

    /// Whether every column `t < min(T, M)` sums to one within `tol`.
    pub fn is_non_redundant(&self, tol: f64) -> bool {
        (0..self.rounds.min(self.boxes)).all(|t| (self.column_sum(t) - 1.0).abs() <= tol)
    }

    /// Whether every entry is 0 or 1.
    pub fn is_partial_permutation(&self) -> bool {
        self.entries.iter().all(|&a| a == 0.0 || a == 1.0)
    }

    pub fn max_abs_diff(&self, other: &StrategyMatrix) -> f64 {
        if self.boxes != other.boxes || self.rounds != other.rounds {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn same_shape(&self, other: &StrategyMatrix) -> bool {
        self.boxes == other.boxes && self.rounds == other.rounds
    }
}

/// An ordered collection of `k` strategies of identical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    players: Vec<StrategyMatrix>,
}

impl Profile {
    pub fn new(players: Vec<StrategyMatrix>) -> Result<Self> {
        let first = players.first().ok_or_else(|| {
            GameError::InvalidProfile("a profile needs at least one player".into())
        })?;
        if let Some(i) = players.iter().position(|p| !p.same_shape(first)) {
            return Err(GameError::DimensionMismatch(format!(
                "player {} is {}x{}, player 1 is {}x{}",
                i + 1,
                players[i].boxes(),
                players[i].rounds(),
                first.boxes(),
                first.rounds()
            )));
        }
        Ok(Self { players })
    }

    /// `k` players all playing `strategy`.
    pub fn symmetric(strategy: StrategyMatrix, players: usize) -> Result<Self> {
        if players == 0 {
            return Err(GameError::InvalidProfile(
                "a profile needs at least one player".into(),
            ));
        }
        Self::new(vec![strategy; players])
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }

    pub fn players(&self) -> &[StrategyMatrix] {
        &self.players
    }

    pub fn player(&self, i: usize) -> &StrategyMatrix {
        &self.players[i]
    }

    pub fn boxes(&self) -> usize {
        self.players[0].boxes()
    }

    pub fn rounds(&self) -> usize {
        self.players[0].rounds()
    }

    pub fn is_symmetric(&self) -> bool {
        self.players.windows(2).all(|w| w[0] == w[1])
    }

    /// Everyone except player `i`.
    pub fn others(&self, i: usize) -> Opponents<'_> {
        if self.is_symmetric() {
            Opponents::Copies {
                strategy: &self.players[0],
                count: self.len() - 1,
            }
        } else {
            Opponents::Listed(
                self.players
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, p)| p)
                    .collect(),
            )
        }
    }

    /// Everyone, viewed as opponents of an external player.
    pub fn as_opponents(&self) -> Opponents<'_> {
        Opponents::Listed(self.players.iter().collect())
    }

    /// This profile followed by `extra`.
    pub fn extended(&self, extra: &[StrategyMatrix]) -> Result<Self> {
        let mut players = self.players.clone();
        players.extend_from_slice(extra);
        Self::new(players)
    }
}

/// The players a value is computed against.
#[derive(Debug, Clone)]
pub enum Opponents<'a> {
    Listed(Vec<&'a StrategyMatrix>),
    /// `count` players all playing `strategy`; enables the binomial fast path.
    Copies {
        strategy: &'a StrategyMatrix,
        count: usize,
    },
}

impl<'a> Opponents<'a> {
    pub fn none() -> Self {
        Opponents::Listed(Vec::new())
    }

    pub fn count(&self) -> usize {
        match self {
            Opponents::Listed(list) => list.len(),
            Opponents::Copies { count, .. } => *count,
        }
    }

    /// `(boxes, rounds)` of the opponents, or `None` when there are none.
    pub fn shape(&self) -> Option<(usize, usize)> {
        match self {
            Opponents::Listed(list) => list.first().map(|m| (m.boxes(), m.rounds())),
            Opponents::Copies { strategy, count } if *count > 0 => {
                Some((strategy.boxes(), strategy.rounds()))
            }
            Opponents::Copies { .. } => None,
        }
    }
}

/// A configuration `(C, f, T)` for `k` players.
#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    f: BoxDistribution,
    policy: CongestionPolicy,
    rounds: usize,
}

impl GameConfig {
    /// The player count is the length of the policy.
    pub fn new(f: BoxDistribution, policy: CongestionPolicy, rounds: usize) -> Result<Self> {
        if rounds == 0 {
            return Err(GameError::InvalidConfig("T must be at least 1".into()));
        }
        Ok(Self { f, policy, rounds })
    }

    pub fn distribution(&self) -> &BoxDistribution {
        &self.f
    }

    pub fn policy(&self) -> &CongestionPolicy {
        &self.policy
    }

    /// Number of rounds `T`.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Number of players `k`.
    pub fn players(&self) -> usize {
        self.policy.players()
    }

    /// Number of boxes `M`.
    pub fn boxes(&self) -> usize {
        self.f.len()
    }

    /// The same game with a different number of players.
    pub fn with_players(&self, players: usize) -> Result<Self> {
        Self::new(
            self.f.clone(),
            self.policy.with_players(players)?,
            self.rounds,
        )
    }

    pub fn with_policy(&self, policy: CongestionPolicy) -> Result<Self> {
        Self::new(self.f.clone(), policy, self.rounds)
    }

    /// Checks that `matrix` is `M x T` for this game.
    pub fn check_matrix(&self, matrix: &StrategyMatrix) -> Result<()> {
        if matrix.boxes() != self.boxes() || matrix.rounds() != self.rounds {
            return Err(GameError::DimensionMismatch(format!(
                "strategy is {}x{}, game is {}x{}",
                matrix.boxes(),
                matrix.rounds(),
                self.boxes(),
                self.rounds
            )));
        }
        Ok(())
    }

    /// Checks shape and that the player count matches `k`.
    pub fn check_profile(&self, profile: &Profile) -> Result<()> {
        self.check_matrix(profile.player(0))?;
        if profile.len() != self.players() {
            return Err(GameError::DimensionMismatch(format!(
                "profile has {} players, game has k = {}",
                profile.len(),
                self.players()
            )));
        }
        Ok(())
    }
}
