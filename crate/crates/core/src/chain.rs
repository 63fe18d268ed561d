//! Finite-state generators, target distributions and π-duals.

use std::collections::HashSet;

use thiserror::Error;

use crate::linalg::{kahan_sum, solve_linear, DenseMatrix, LinalgError};

/// Row-sum tolerance for a valid generator.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Normalization tolerance for a distribution.
pub const MASS_TOL: f64 = 1e-12;
/// Default relative tolerance for reversibility and stationarity tests.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("state space needs at least two states, got {0}")]
    TooFewStates(usize),
    #[error("duplicate state label {0:?}")]
    DuplicateLabel(String),
    #[error("expected {expected} labels, got {actual}")]
    LabelCount { expected: usize, actual: usize },
    #[error("probability π({index}) = {value} is not strictly positive")]
    NonPositiveMass { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("negative off-diagonal rate {value} at ({row}, {col})")]
    NegativeRate { row: usize, col: usize, value: f64 },
    #[error("rate at ({row}, {col}) is not finite: {value}")]
    NonFiniteRate { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 0")]
    RowSum { row: usize, sum: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("generator is reducible")]
    Reducible,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T, E = ChainError> = std::result::Result<T, E>;

/// A finite state space of size n ≥ 2 with optional unique labels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    size: usize,
    labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(ChainError::TooFewStates(size));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(ChainError::TooFewStates(labels.len()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(ChainError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// The natural index order used for every `x ≺ y` sum: yields (x, y)
    /// with x < y.
    pub fn ordered_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        ordered_pairs(self.size)
    }
}

pub(crate) fn ordered_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |x| ((x + 1)..n).map(move |y| (x, y)))
}

/// A strictly positive probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, MASS_TOL)
    }

    pub fn with_tolerance(weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.len() < 2 {
            return Err(ChainError::TooFewStates(weights.len()));
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ChainError::NonPositiveMass { index, value });
            }
        }
        let sum = kahan_sum(weights.iter().copied());
        if (sum - 1.0).abs() > tol {
            return Err(ChainError::NotNormalized { sum });
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Normalizes positive weights to a probability vector.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        let sum = kahan_sum(weights.iter().copied());
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// π(h).
    pub fn expectation(&self, h: &[f64]) -> f64 {
        kahan_sum(self.weights.iter().zip(h).map(|(p, v)| p * v))
    }

    /// ⟨f, g⟩_π.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        kahan_sum(
            self.weights
                .iter()
                .zip(f.iter().zip(g))
                .map(|(p, (a, b))| p * a * b),
        )
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.weights[i]
    }
}

/// Markov infinitesimal generator: non-negative off-diagonal rates and zero
/// row sums. Diagonals are always recomputed from the off-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    state_space: StateSpace,
    rates: DenseMatrix,
}

impl Generator {
    /// Validates a full rate matrix, including the supplied diagonal.
    pub fn new(rates: DenseMatrix) -> Result<Self> {
        let g = Self::from_off_diagonal(rates.clone())?;
        for i in 0..rates.n_rows() {
            let row = rates.row(i);
            let sum = kahan_sum(row.iter().copied());
            let scale = row.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            if sum.abs() > ROW_SUM_TOL * scale {
                return Err(ChainError::RowSum { row: i, sum });
            }
        }
        Ok(g)
    }

    /// Takes the off-diagonal entries of `rates` and sets each diagonal to
    /// minus its row's off-diagonal total.
    pub fn from_off_diagonal(mut rates: DenseMatrix) -> Result<Self> {
        if !rates.is_square() {
            return Err(ChainError::ShapeMismatch(format!(
                "rate matrix is {}x{}",
                rates.n_rows(),
                rates.n_cols()
            )));
        }
        let n = rates.n_rows();
        let state_space = StateSpace::new(n)?;
        for i in 0..n {
            for j in 0..n {
                let value = rates[(i, j)];
                if i == j {
                    continue;
                }
                if value.is_nan() || value.is_infinite() {
                    return Err(ChainError::NonFiniteRate { row: i, col: j, value });
                }
                if value < 0.0 {
                    return Err(ChainError::NegativeRate { row: i, col: j, value });
                }
            }
        }
        restore_diagonal(&mut rates);
        Ok(Self { state_space, rates })
    }

    /// Builds from a closure giving the off-diagonal rate for (x, y).
    pub fn from_fn(n: usize, mut rate: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = DenseMatrix::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    m[(x, y)] = rate(x, y);
                }
            }
        }
        Self::from_off_diagonal(m)
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::from_off_diagonal(DenseMatrix::zeros(n, n))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(ChainError::LabelCount {
                expected: self.n(),
                actual: labels.len(),
            });
        }
        self.state_space = StateSpace::with_labels(labels)?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.state_space.size()
    }

    pub fn state_space(&self) -> &StateSpace {
        &self.state_space
    }

    pub fn rates(&self) -> &DenseMatrix {
        &self.rates
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.rates[(x, y)]
    }

    /// Total jump rate out of `x`, i.e. −L(x,x).
    pub fn exit_rate(&self, x: usize) -> f64 {
        -self.rates[(x, x)]
    }

    /// Entrywise (self + other)/2.
    pub fn midpoint(&self, other: &Generator) -> Result<Generator> {
        check_same_size(self, other)?;
        Generator::from_fn(self.n(), |x, y| 0.5 * (self.rate(x, y) + other.rate(x, y)))
    }

    /// Largest off-diagonal |self(x,y) − other(x,y)|.
    pub fn max_off_diagonal_diff(&self, other: &Generator) -> f64 {
        let n = self.n();
        let mut worst = 0.0_f64;
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    worst = worst.max((self.rate(x, y) - other.rate(x, y)).abs());
                }
            }
        }
        worst
    }
}

fn restore_diagonal(m: &mut DenseMatrix) {
    let n = m.n_rows();
    for i in 0..n {
        let off = kahan_sum((0..n).filter(|&j| j != i).map(|j| m[(i, j)]));
        m[(i, i)] = -off;
    }
}

pub(crate) fn check_same_size(a: &Generator, b: &Generator) -> Result<()> {
    if a.n() != b.n() {
        return Err(ChainError::ShapeMismatch(format!(
            "generators of size {} and {}",
            a.n(),
            b.n()
        )));
    }
    Ok(())
}

pub(crate) fn check_pi(l: &Generator, pi: &Distribution) -> Result<()> {
    if l.n() != pi.len() {
        return Err(ChainError::ShapeMismatch(format!(
            "generator of size {} with distribution of length {}",
            l.n(),
            pi.len()
        )));
    }
    Ok(())
}

/// π-dual: L_π(x,y) = π(y)·L(y,x)/π(x) off the diagonal.
pub fn pi_dual(l: &Generator, pi: &Distribution) -> Result<Generator> {
    check_pi(l, pi)?;
    Generator::from_fn(l.n(), |x, y| pi[y] * l.rate(y, x) / pi[x])
}

/// Outcome of a detailed-balance test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversibilityCheck {
    pub reversible: bool,
    /// max_{x≠y} |π(x)L(x,y) − π(y)L(y,x)|.
    pub max_violation: f64,
    /// Largest π(x)L(x,y); the violation is compared against `tol·scale`.
    pub scale: f64,
}

pub fn is_reversible(l: &Generator, pi: &Distribution, tol: f64) -> Result<ReversibilityCheck> {
    check_pi(l, pi)?;
    let n = l.n();
    let mut max_violation = 0.0_f64;
    let mut scale = 0.0_f64;
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let flow = pi[x] * l.rate(x, y);
            scale = scale.max(flow);
            if x < y {
                max_violation = max_violation.max((flow - pi[y] * l.rate(y, x)).abs());
            }
        }
    }
    Ok(ReversibilityCheck {
        reversible: max_violation <= tol * scale,
        max_violation,
        scale,
    })
}

/// πL as a row vector.
pub fn stationarity_residual(l: &Generator, pi: &Distribution) -> Result<Vec<f64>> {
    check_pi(l, pi)?;
    let n = l.n();
    Ok((0..n)
        .map(|y| kahan_sum((0..n).map(|x| pi[x] * l.rate(x, y))))
        .collect())
}

pub fn is_stationary(l: &Generator, pi: &Distribution, tol: f64) -> Result<bool> {
    let r = stationarity_residual(l, pi)?;
    Ok(r.iter().all(|v| v.abs() <= tol))
}

/// Strong connectivity of the directed graph of strictly positive rates.
pub fn is_irreducible(l: &Generator) -> bool {
    let n = l.n();
    let forward = reach(n, 0, |x, y| l.rate(x, y) > 0.0);
    let backward = reach(n, 0, |x, y| l.rate(y, x) > 0.0);
    forward.iter().all(|&b| b) && backward.iter().all(|&b| b)
}

pub(crate) fn reach(n: usize, start: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(x) = stack.pop() {
        for y in 0..n {
            if y != x && !seen[y] && edge(x, y) {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// Unique π with πL = 0 and Σπ = 1, from the normal equations of the
/// augmented system [Lᵀ; 1ᵀ]·π = (0; 1).
pub fn stationary_distribution(l: &Generator) -> Result<Distribution> {
    if !is_irreducible(l) {
        return Err(ChainError::Reducible);
    }
    let n = l.n();
    // A is (n+1)×n: rows 0..n are Lᵀ, row n is all ones.
    let a = |r: usize, c: usize| if r < n { l.rate(c, r) } else { 1.0 };
    let mut ata = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            ata[(i, j)] = kahan_sum((0..=n).map(|r| a(r, i) * a(r, j)));
        }
    }
    let atb: Vec<f64> = (0..n).map(|i| a(n, i)).collect();
    let mut p = solve_linear(&ata, &atb)?;
    // clip round-off, then renormalize
    for v in p.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum = kahan_sum(p.iter().copied());
    for v in p.iter_mut() {
        *v /= sum;
    }
    Distribution::with_tolerance(p, 1e-9)
}
