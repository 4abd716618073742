//! Convex decomposition of strategy matrices into partial permutations, and
//! sampling of executions from a decomposition.

use rand::Rng;

use crate::error::{GameError, Result};
use crate::game::{StrategyMatrix, STRUCTURAL_TOL};
use crate::matching::perfect_matching;

/// A deterministic strategy: in round `t` open `visits()[t]`, or nothing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialPermutation {
    visits: Vec<Option<usize>>,
}

impl PartialPermutation {
    /// Fails when a box appears twice or is not below `boxes`.
    pub fn new(visits: Vec<Option<usize>>, boxes: usize) -> Result<Self> {
        let mut seen = vec![false; boxes];
        for (t, x) in visits.iter().enumerate() {
            if let Some(x) = *x {
                if x >= boxes {
                    return Err(GameError::OutOfRange(format!(
                        "round {} opens box {} of {boxes}",
                        t + 1,
                        x + 1
                    )));
                }
                if std::mem::replace(&mut seen[x], true) {
                    return Err(GameError::InvalidParameter(format!(
                        "box {} opened twice",
                        x + 1
                    )));
                }
            }
        }
        Ok(Self { visits })
    }

    /// The strategy that opens nothing for `rounds` rounds.
    pub fn empty(rounds: usize) -> Self {
        Self {
            visits: vec![None; rounds],
        }
    }

    /// First-visit form of an arbitrary box sequence: repeated boxes become
    /// idle rounds.
    pub fn from_sequence(sequence: &[usize], boxes: usize) -> Result<Self> {
        let mut seen = vec![false; boxes];
        let mut visits = Vec::with_capacity(sequence.len());
        for &x in sequence {
            if x >= boxes {
                return Err(GameError::OutOfRange(format!("box {} of {boxes}", x + 1)));
            }
            visits.push((!std::mem::replace(&mut seen[x], true)).then_some(x));
        }
        Ok(Self { visits })
    }

    pub fn rounds(&self) -> usize {
        self.visits.len()
    }

    pub fn visits(&self) -> &[Option<usize>] {
        &self.visits
    }

    /// Round in which box `x` is opened, if ever.
    pub fn round_of(&self, x: usize) -> Option<usize> {
        self.visits.iter().position(|&v| v == Some(x))
    }

    pub fn to_matrix(&self, boxes: usize) -> Result<StrategyMatrix> {
        let rounds = self.visits.len();
        let mut entries = vec![0.0; boxes * rounds];
        for (t, x) in self.visits.iter().enumerate() {
            if let Some(x) = *x {
                if x >= boxes {
                    return Err(GameError::OutOfRange(format!("box {} of {boxes}", x + 1)));
                }
                entries[x * rounds + t] = 1.0;
            }
        }
        StrategyMatrix::new(boxes, rounds, entries)
    }
}

/// Convex combination `sum_i w_i P_i` of partial permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyDecomposition {
    boxes: usize,
    rounds: usize,
    terms: Vec<(f64, PartialPermutation)>,
    cumulative: Vec<f64>,
}

impl StrategyDecomposition {
    /// Validates positive weights summing to one and matching shapes.
    pub fn new(boxes: usize, rounds: usize, terms: Vec<(f64, PartialPermutation)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(GameError::InvalidParameter(
                "decomposition has no terms".into(),
            ));
        }
        for (w, p) in &terms {
            if !(*w > 0.0 && *w <= 1.0 + STRUCTURAL_TOL) {
                return Err(GameError::InvalidParameter(format!(
                    "term weight {w} outside (0, 1]"
                )));
            }
            if p.rounds() != rounds {
                return Err(GameError::DimensionMismatch(format!(
                    "term has {} rounds, expected {rounds}",
                    p.rounds()
                )));
            }
            if p.visits.iter().flatten().any(|&x| x >= boxes) {
                return Err(GameError::OutOfRange(format!(
                    "term opens a box beyond {boxes}"
                )));
            }
        }
        let cumulative: Vec<f64> = terms
            .iter()
            .scan(0.0, |acc, (w, _)| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        let total = *cumulative.last().expect("non-empty");
        if (total - 1.0).abs() > STRUCTURAL_TOL {
            return Err(GameError::InvalidParameter(format!(
                "term weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            boxes,
            rounds,
            terms,
            cumulative,
        })
    }

    pub fn boxes(&self) -> usize {
        self.boxes
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn terms(&self) -> &[(f64, PartialPermutation)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `sum_i w_i P_i` as a matrix.
    pub fn reconstruct(&self) -> Result<StrategyMatrix> {
        let mut entries = vec![0.0; self.boxes * self.rounds];
        for (w, p) in &self.terms {
            for (t, x) in p.visits.iter().enumerate() {
                if let Some(x) = *x {
                    entries[x * self.rounds + t] += w;
                }
            }
        }
        StrategyMatrix::new(self.boxes, self.rounds, entries)
    }

    /// Draws a term with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &PartialPermutation {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        let i = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.terms.len() - 1);
        &self.terms[i].1
    }
}

/// One execution of the randomized strategy: its visit sequence.
pub fn sample_execution<'a, R: Rng + ?Sized>(
    d: &'a StrategyDecomposition,
    rng: &mut R,
) -> &'a PartialPermutation {
    d.sample(rng)
}

// residual entries at or below this are treated as exhausted
const RESIDUAL_FLOOR: f64 = 1e-13;
// a residual above this with no perfect matching signals corruption
const CORRUPTION_TOL: f64 = 1e-9;

/// Writes a doubly-substochastic matrix as a convex combination of partial
/// permutations.
///
/// The `M x T` matrix `A` is embedded in the `(M+T) x (M+T)` doubly-stochastic
/// matrix `[[A, diag(1 - rows)], [diag(1 - cols), A^T]]`. Bottleneck perfect
/// matchings are peeled off until the residual vanishes, and each one is
/// restricted back to the box-round block. Identical projections are merged.
pub fn birkhoff_decompose(a: &StrategyMatrix) -> Result<StrategyDecomposition> {
    let (m, t) = (a.boxes(), a.rounds());
    let n = m + t;
    let mut residual = vec![0.0; n * n];
    for x in 0..m {
        for s in 0..t {
            residual[x * n + s] = a.get(x, s);
            residual[(m + s) * n + t + x] = a.get(x, s);
        }
        residual[x * n + t + x] = (1.0 - a.row_sum(x)).max(0.0);
    }
    for s in 0..t {
        residual[(m + s) * n + s] = (1.0 - a.column_sum(s)).max(0.0);
    }
    for r in residual.iter_mut() {
        if *r <= RESIDUAL_FLOOR {
            *r = 0.0;
        }
    }

    let mut terms: Vec<(f64, PartialPermutation)> = Vec::new();
    loop {
        let largest = residual.iter().copied().fold(0.0, f64::max);
        if largest <= RESIDUAL_FLOOR {
            break;
        }
        let Some(rows) = bottleneck_matching(&residual, n) else {
            if largest > CORRUPTION_TOL {
                return Err(GameError::Numeric(format!(
                    "no perfect matching on a residual with entry {largest:e}"
                )));
            }
            break;
        };
        let weight = rows
            .iter()
            .enumerate()
            .map(|(i, &j)| residual[i * n + j])
            .fold(f64::INFINITY, f64::min);
        let mut visits = vec![None; t];
        for (i, &j) in rows.iter().enumerate() {
            let cell = &mut residual[i * n + j];
            *cell -= weight;
            if *cell <= RESIDUAL_FLOOR {
                *cell = 0.0;
            }
            if i < m && j < t {
                visits[j] = Some(i);
            }
        }
        terms.push((weight, PartialPermutation { visits }));
    }
    if terms.is_empty() {
        return Err(GameError::Numeric("decomposition produced no terms".into()));
    }

    terms.sort_by(|a, b| a.1.cmp(&b.1));
    let mut merged: Vec<(f64, PartialPermutation)> = Vec::with_capacity(terms.len());
    for (w, p) in terms {
        match merged.last_mut() {
            Some((mw, mp)) if *mp == p => *mw += w,
            _ => merged.push((w, p)),
        }
    }
    merged.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let total: f64 = merged.iter().map(|(w, _)| w).sum();
    for (w, _) in merged.iter_mut() {
        *w /= total;
    }
    StrategyDecomposition::new(m, t, merged)
}

/// Perfect matching on the positive entries maximizing its smallest entry.
fn bottleneck_matching(residual: &[f64], n: usize) -> Option<Vec<usize>> {
    let mut levels: Vec<f64> = residual.iter().copied().filter(|&r| r > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let at = |level: f64| perfect_matching(n, |i, j| residual[i * n + j] >= level);
    let mut best = at(*levels.first()?)?;
    // invariant: a matching exists at levels[lo]; none at levels[hi] when hi < len
    let (mut lo, mut hi) = (0, levels.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        match at(levels[mid]) {
            Some(rows) => {
                best = rows;
                lo = mid;
            }
            None => hi = mid,
        }
    }
    Some(best)
}
