//! Constructors for the named strategies.

use log::warn;

use crate::error::{GameError, Result};
use crate::game::{BoxDistribution, GameConfig, StrategyMatrix};
use crate::payoff::binomial_reward;

/// The optimal symmetric strategy `A*` for `players` players:
/// `nbar(x, t) = min(1, alpha(t) q(x))` with `q(x) = f(x)^(-1/(k-1))`.
///
/// For a single player this is the deterministic sweep over the most likely
/// boxes. Columns past `M` are zero.
pub fn astar(f: &BoxDistribution, players: usize, rounds: usize) -> Result<StrategyMatrix> {
    if players == 0 {
        return Err(GameError::InvalidParameter(
            "A* needs at least one player".into(),
        ));
    }
    if rounds == 0 {
        return Err(GameError::InvalidParameter("T must be at least 1".into()));
    }
    let boxes = f.len();
    if players == 1 {
        let visits: Vec<usize> = (0..rounds.min(boxes)).collect();
        return pure_strategy(&visits, boxes, rounds);
    }
    let exponent = -1.0 / (players - 1) as f64;
    let q: Vec<f64> = f.probs().iter().map(|p| p.powf(exponent)).collect();
    // prefix[w] = q(0) + ... + q(w-1)
    let prefix: Vec<f64> = std::iter::once(0.0)
        .chain(q.iter().scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        }))
        .collect();

    let mut entries = vec![0.0; boxes * rounds];
    let mut previous = vec![1.0; boxes];
    for t in 1..=rounds.min(boxes) {
        let current: Vec<f64> = if t == boxes {
            vec![0.0; boxes]
        } else {
            // cut: number of boxes with nbar < 1 after t rounds
            let cut = (1..=boxes)
                .rev()
                .find(|&w| (w as f64) - prefix[w] / q[w - 1] < t as f64)
                .expect("a cut of one box always qualifies");
            let alpha = (cut - t) as f64 / prefix[cut];
            q.iter().map(|&qx| (alpha * qx).min(1.0)).collect()
        };
        for x in 0..boxes {
            entries[x * rounds + t - 1] = (previous[x] - current[x]).max(0.0);
        }
        previous = current;
    }
    StrategyMatrix::new(boxes, rounds, entries)
}

/// Uniform over the first `support` boxes: each round picks a not yet
/// opened box among them uniformly at random.
pub fn uniform_strategy(support: usize, boxes: usize, rounds: usize) -> Result<StrategyMatrix> {
    if support == 0 || support > boxes {
        return Err(GameError::InvalidParameter(format!(
            "uniform support {support} must be within 1..={boxes}"
        )));
    }
    let mut entries = vec![0.0; boxes * rounds];
    let p = 1.0 / support as f64;
    for x in 0..support {
        for t in 0..rounds.min(support) {
            entries[x * rounds + t] = p;
        }
    }
    StrategyMatrix::new(boxes, rounds, entries)
}

/// Deterministic strategy opening `visits[t]` in round `t`; rounds past the
/// end of `visits` open nothing.
pub fn pure_strategy(visits: &[usize], boxes: usize, rounds: usize) -> Result<StrategyMatrix> {
    if visits.len() > rounds {
        return Err(GameError::InvalidParameter(format!(
            "{} visits for {rounds} rounds",
            visits.len()
        )));
    }
    let mut seen = vec![false; boxes];
    let mut entries = vec![0.0; boxes * rounds];
    for (t, &x) in visits.iter().enumerate() {
        if x >= boxes {
            return Err(GameError::OutOfRange(format!("box {} of {boxes}", x + 1)));
        }
        if std::mem::replace(&mut seen[x], true) {
            return Err(GameError::InvalidParameter(format!(
                "box {} visited twice",
                x + 1
            )));
        }
        entries[x * rounds + t] = 1.0;
    }
    StrategyMatrix::new(boxes, rounds, entries)
}

/// Value slack `epsilon` and column-mass slack `delta` of the approximate
/// sgreedy construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgreedyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl SgreedyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(GameError::InvalidParameter(format!(
                "epsilon = {epsilon} must be positive"
            )));
        }
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(GameError::InvalidParameter(format!(
                "delta = {delta} must lie in (0, 1/2]"
            )));
        }
        Ok(Self { epsilon, delta })
    }

    /// Slacks that make the result a `(1 + C(k))(1 + theta)`-equilibrium:
    /// `epsilon = theta / (2(T+1)) * f(2) / 2^(k+1)` and
    /// `delta = (theta/2) / (1 + theta/2)`, capped at 1/2.
    pub fn from_theta(config: &GameConfig, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(GameError::InvalidParameter(format!(
                "theta = {theta} must be positive"
            )));
        }
        if config.boxes() < 2 {
            return Err(GameError::InvalidParameter(
                "slacks are defined through f(2) and need at least two boxes".into(),
            ));
        }
        let k = config.players() as i32;
        let f2 = config.distribution().prob(1);
        let epsilon = theta / (2.0 * (config.rounds() + 1) as f64) * f2 / 2f64.powi(k + 1);
        let half = theta / 2.0;
        let delta = (half / (1.0 + half)).min(0.5);
        Self::new(epsilon, delta)
    }
}

/// Approximately sgreedy, approximately non-redundant symmetric strategy for
/// any policy; a symmetric `(1 + C(k))(1 + theta)`-equilibrium.
pub fn eps_sgreedy(config: &GameConfig, theta: f64) -> Result<StrategyMatrix> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(GameError::InvalidParameter(format!(
            "theta = {theta} must be positive"
        )));
    }
    let (boxes, rounds) = (config.boxes(), config.rounds());
    if boxes == 1 {
        return StrategyMatrix::unit(1, rounds, 0, 0);
    }
    if config.players() == 1 {
        let visits: Vec<usize> = (0..rounds.min(boxes)).collect();
        return pure_strategy(&visits, boxes, rounds);
    }
    eps_sgreedy_with(config, SgreedyParams::from_theta(config, theta)?)
}

/// The column-by-column nested bisection for explicit slacks.
///
/// Each column `t` bisects on the least support value `w` in `[0, f(1)]`;
/// for each `w` every box is either left empty, filled, or has its entry
/// inverted from `v(x, t) = w` by an inner bisection. A column is accepted
/// once its mass lies in `[1 - delta, 1]`.
pub fn eps_sgreedy_with(config: &GameConfig, params: SgreedyParams) -> Result<StrategyMatrix> {
    let (boxes, rounds, players) = (config.boxes(), config.rounds(), config.players());
    let policy = config.policy();
    if players > 1 && policy.last_reward() >= 1.0 {
        return Err(GameError::InvalidPolicy(format!(
            "C(k) = {} leaves no gap 1 - C(k) for the value inversion",
            policy.last_reward()
        )));
    }
    let smallest = config.distribution().prob(boxes - 1);
    if smallest < 1e-12 {
        warn!("f(M) = {smallest:e}: the bisection bounds hold but precision is not guaranteed");
    }
    let search = ColumnSearch {
        f: config.distribution().probs(),
        others: players - 1,
        policy,
        params,
        max_outer: 64 + players * (4.0 * boxes as f64 / params.delta).log2().ceil() as usize,
    };

    let mut entries = vec![0.0; boxes * rounds];
    let mut remaining = vec![1.0; boxes];
    for t in 0..rounds.min(boxes) {
        let column = search.column(&remaining).map_err(|e| match e {
            GameError::NoConvergence(msg) => {
                GameError::NoConvergence(format!("round {}: {msg}", t + 1))
            }
            other => other,
        })?;
        for x in 0..boxes {
            entries[x * rounds + t] = column[x];
            remaining[x] = (remaining[x] - column[x]).max(0.0);
        }
    }
    StrategyMatrix::new(boxes, rounds, entries)
}

struct ColumnSearch<'a> {
    f: &'a [f64],
    others: usize,
    policy: &'a crate::game::CongestionPolicy,
    params: SgreedyParams,
    max_outer: usize,
}

const MAX_INNER_STEPS: usize = 200;

impl ColumnSearch<'_> {
    /// Value of box `x` when it gets mass `a` out of the `left` still unvisited.
    fn value(&self, x: usize, left: f64, a: f64) -> f64 {
        self.f[x] * binomial_reward(self.policy, self.others, a, (left - a).max(0.0))
    }

    fn column(&self, remaining: &[f64]) -> Result<Vec<f64>> {
        let total: f64 = remaining.iter().sum();
        if total <= 1.0 {
            // filling everything is already within the window
            return Ok(remaining.to_vec());
        }
        let (mut low, mut high) = (0.0, self.f[0]);
        for _ in 0..self.max_outer {
            let w = 0.5 * (low + high);
            let column: Vec<f64> = (0..remaining.len())
                .map(|x| self.entry_for(x, remaining[x], w))
                .collect();
            let mass: f64 = column.iter().sum();
            if mass > 1.0 {
                low = w;
            } else if mass < 1.0 - self.params.delta {
                high = w;
            } else {
                return Ok(column);
            }
        }
        Err(GameError::NoConvergence(format!(
            "no column mass in [1 - {}, 1] after {} steps (w in [{low:e}, {high:e}])",
            self.params.delta, self.max_outer
        )))
    }

    /// Approximate inverse `A_w(x, t)` of the value as a function of the entry.
    fn entry_for(&self, x: usize, left: f64, w: f64) -> f64 {
        let empty = self.value(x, left, 0.0);
        if empty <= w {
            return 0.0;
        }
        let filled = self.value(x, left, left);
        if filled >= w {
            return left;
        }
        let mass_tol = self.params.delta / (4.0 * self.f.len() as f64);
        let value_tol = self.params.epsilon / 2.0;
        let (mut lo, mut hi) = (0.0, left);
        let (mut v_lo, mut v_hi) = (empty, filled);
        for _ in 0..MAX_INNER_STEPS {
            if hi - lo < mass_tol && v_lo - v_hi < value_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = self.value(x, left, mid);
            if v > w {
                lo = mid;
                v_lo = v;
            } else {
                hi = mid;
                v_hi = v;
            }
        }
        0.5 * (lo + hi)
    }
}
