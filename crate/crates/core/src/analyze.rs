//! Spectral gap, relaxation and eigentime, hitting-time functionals,
//! asymptotic variance and Peskun comparisons for π-reversible generators.

use serde::Serialize;
use thiserror::Error;

use crate::chain::{check_pi, check_same_size, is_irreducible, is_reversible, ChainError, Distribution, Generator};
use crate::extended;
use crate::linalg::{kahan_sum, solve_linear, symmetric_eigen, DenseMatrix, LinalgError};
use crate::reversiblize::ReversiblizationKind;

/// Relative detailed-balance tolerance accepted by the spectral routines.
pub const REVERSIBILITY_TOL: f64 = 1e-8;
/// Tolerance on |π(h)| for a centered observable.
pub const CENTERING_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzeError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("generator is not π-reversible (violation {violation:.3e})")]
    NotReversible { violation: f64 },
    #[error("observable is not centered: π(h) = {0:e}")]
    NotCentered(f64),
    #[error("generator is reducible")]
    Reducible,
    #[error("state {state} cannot reach the target set almost surely")]
    Unreachable { state: usize },
    #[error("bad query: {0}")]
    BadQuery(String),
}

pub type Result<T, E = AnalyzeError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    #[serde(with = "extended")]
    pub lambda2: f64,
    #[serde(with = "extended")]
    pub t_rel: f64,
    #[serde(with = "extended")]
    pub t_av: f64,
    /// Ascending eigenvalues of −M in ℓ²(π).
    #[serde(with = "extended::vec")]
    pub spectrum: Vec<f64>,
    pub irreducible: bool,
}

/// Target set A and Laplace rate λ (0 for the plain expectation).
#[derive(Debug, Clone, PartialEq)]
pub struct HittingQuery {
    target: Vec<usize>,
    laplace_rate: f64,
}

impl HittingQuery {
    /// A must be a non-empty set of valid states; the whole space is
    /// accepted and gives τ_A = 0.
    pub fn new(target: impl IntoIterator<Item = usize>, n: usize, laplace_rate: f64) -> Result<Self> {
        let mut target: Vec<usize> = target.into_iter().collect();
        target.sort_unstable();
        target.dedup();
        if target.is_empty() {
            return Err(AnalyzeError::BadQuery("target set is empty".into()));
        }
        if let Some(&bad) = target.iter().find(|&&s| s >= n) {
            return Err(AnalyzeError::BadQuery(format!("state {bad} out of range for n = {n}")));
        }
        if !(laplace_rate >= 0.0) || !laplace_rate.is_finite() {
            return Err(AnalyzeError::BadQuery(format!("laplace rate must be ≥ 0, got {laplace_rate}")));
        }
        Ok(Self { target, laplace_rate })
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn laplace_rate(&self) -> f64 {
        self.laplace_rate
    }

    fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &s in &self.target {
            m[s] = true;
        }
        m
    }
}

fn check_reversible(m: &Generator, pi: &Distribution) -> Result<()> {
    let c = is_reversible(m, pi, REVERSIBILITY_TOL)?;
    if !c.reversible {
        return Err(AnalyzeError::NotReversible {
            violation: c.max_violation,
        });
    }
    Ok(())
}

/// S(x,y) = √(π(x)/π(y))·(−M(x,y)), symmetrized against round-off.
fn symmetric_conjugate(m: &Generator, pi: &Distribution) -> DenseMatrix {
    let n = m.n();
    let mut s = DenseMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            s[(x, y)] = -(pi[x] / pi[y]).sqrt() * m.rate(x, y);
        }
    }
    for x in 0..n {
        for y in (x + 1)..n {
            let v = 0.5 * (s[(x, y)] + s[(y, x)]);
            s[(x, y)] = v;
            s[(y, x)] = v;
        }
    }
    s
}

pub fn spectral_report(m: &Generator, pi: &Distribution) -> Result<AnalysisReport> {
    check_pi(m, pi)?;
    check_reversible(m, pi)?;
    let eig = symmetric_eigen(&symmetric_conjugate(m, pi))?;
    let spectrum = eig.eigenvalues;
    let irreducible = is_irreducible(m);
    let (lambda2, t_av) = if irreducible {
        (spectrum[1], kahan_sum(spectrum[1..].iter().map(|l| 1.0 / l)))
    } else {
        (0.0, f64::INFINITY)
    };
    let t_rel = if lambda2 > 0.0 { 1.0 / lambda2 } else { f64::INFINITY };
    Ok(AnalysisReport {
        lambda2,
        t_rel,
        t_av,
        spectrum,
        irreducible,
    })
}

/// States outside A from which A is hit with probability < 1.
fn bad_states(m: &Generator, in_a: &[bool]) -> Vec<bool> {
    let n = m.n();
    // backward search from A: states that can reach A
    let mut reach = in_a.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&x| in_a[x]).collect();
    while let Some(y) = stack.pop() {
        for x in 0..n {
            if !reach[x] && x != y && m.rate(x, y) > 0.0 {
                reach[x] = true;
                stack.push(x);
            }
        }
    }
    // states in Aᶜ that can wander (avoiding A) into a state that never reaches A
    let mut bad: Vec<bool> = reach.iter().map(|r| !r).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&x| bad[x]).collect();
    while let Some(y) = stack.pop() {
        for x in 0..n {
            if !bad[x] && !in_a[x] && x != y && m.rate(x, y) > 0.0 {
                bad[x] = true;
                stack.push(x);
            }
        }
    }
    bad
}

/// E_x τ_A for every state, +∞ where A is not hit almost surely.
pub fn hitting_times(m: &Generator, target: &[usize]) -> Result<Vec<f64>> {
    let n = m.n();
    let q = HittingQuery::new(target.iter().copied(), n, 0.0)?;
    let in_a = q.mask(n);
    let bad = bad_states(m, &in_a);
    let free: Vec<usize> = (0..n).filter(|&x| !in_a[x] && !bad[x]).collect();
    let mut h = vec![0.0; n];
    for x in 0..n {
        if bad[x] && !in_a[x] {
            h[x] = f64::INFINITY;
        }
    }
    if !free.is_empty() {
        let k = free.len();
        let mut a = DenseMatrix::zeros(k, k);
        for (i, &x) in free.iter().enumerate() {
            for (j, &y) in free.iter().enumerate() {
                a[(i, j)] = -m.rate(x, y);
            }
        }
        let sol = solve_linear(&a, &vec![1.0; k])?;
        for (i, &x) in free.iter().enumerate() {
            h[x] = sol[i];
        }
    }
    Ok(h)
}

/// E_π τ_A, +∞ if some state misses A with positive probability.
pub fn expected_hitting(m: &Generator, pi: &Distribution, q: &HittingQuery) -> Result<f64> {
    check_pi(m, pi)?;
    let h = hitting_times(m, q.target())?;
    if h.iter().any(|v| v.is_infinite()) {
        return Ok(f64::INFINITY);
    }
    Ok(pi.expectation(&h))
}

/// As [`expected_hitting`] but fails with `Unreachable` instead of
/// returning +∞.
pub fn expected_hitting_strict(m: &Generator, pi: &Distribution, q: &HittingQuery) -> Result<f64> {
    check_pi(m, pi)?;
    let h = hitting_times(m, q.target())?;
    if let Some(state) = h.iter().position(|v| v.is_infinite()) {
        return Err(AnalyzeError::Unreachable { state });
    }
    Ok(pi.expectation(&h))
}

/// u(x) = E_x e^{−λτ_A} for every state.
pub fn laplace_vector(m: &Generator, target: &[usize], rate: f64) -> Result<Vec<f64>> {
    let n = m.n();
    let q = HittingQuery::new(target.iter().copied(), n, rate)?;
    if !(rate > 0.0) {
        return Err(AnalyzeError::BadQuery("laplace rate must be positive".into()));
    }
    let in_a = q.mask(n);
    let free: Vec<usize> = (0..n).filter(|&x| !in_a[x]).collect();
    let mut u = vec![1.0; n];
    if !free.is_empty() {
        let k = free.len();
        let mut a = DenseMatrix::zeros(k, k);
        let mut b = vec![0.0; k];
        for (i, &x) in free.iter().enumerate() {
            for (j, &y) in free.iter().enumerate() {
                a[(i, j)] = if i == j { rate - m.rate(x, y) } else { -m.rate(x, y) };
            }
            b[i] = kahan_sum(q.target().iter().map(|&t| m.rate(x, t)));
        }
        let sol = solve_linear(&a, &b)?;
        for (i, &x) in free.iter().enumerate() {
            u[x] = sol[i];
        }
    }
    Ok(u)
}

/// E_π e^{−λτ_A} for λ > 0.
pub fn laplace_hitting(m: &Generator, pi: &Distribution, q: &HittingQuery) -> Result<f64> {
    check_pi(m, pi)?;
    let u = laplace_vector(m, q.target(), q.laplace_rate())?;
    Ok(pi.expectation(&u))
}

/// Σ_{x,y} π(x)π(y)·E_x τ_y via n hitting solves.
pub fn eigentime_by_hitting(m: &Generator, pi: &Distribution) -> Result<f64> {
    check_pi(m, pi)?;
    let n = m.n();
    let mut terms = Vec::with_capacity(n * n);
    for y in 0..n {
        let h = hitting_times(m, &[y])?;
        for x in 0..n {
            terms.push(pi[x] * pi[y] * h[x]);
        }
    }
    if terms.iter().any(|v| v.is_infinite()) {
        return Ok(f64::INFINITY);
    }
    Ok(kahan_sum(terms))
}

fn check_observable(m: &Generator, h: &[f64]) -> Result<()> {
    if h.len() != m.n() {
        return Err(ChainError::ShapeMismatch(format!(
            "observable of length {} for {} states",
            h.len(),
            m.n()
        ))
        .into());
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(AnalyzeError::BadQuery("observable has non-finite entries".into()));
    }
    Ok(())
}

/// −2⟨h, g⟩_π with Mg = h, π(g) = 0, on an irreducible block.
fn poisson_variance(m: &Generator, pi: &[f64], h: &[f64]) -> Result<f64> {
    let n = pi.len();
    let mut a = DenseMatrix::zeros(n + 1, n + 1);
    for x in 0..n {
        for y in 0..n {
            a[(x, y)] = m.rate(x, y);
        }
        a[(x, n)] = 1.0;
        a[(n, x)] = pi[x];
    }
    let mut b = h.to_vec();
    b.push(0.0);
    let sol = solve_linear(&a, &b)?;
    let inner = kahan_sum((0..n).map(|x| pi[x] * h[x] * sol[x]));
    Ok((-2.0 * inner).max(0.0))
}

/// σ²(h, M, π) for irreducible reversible M and centered h.
pub fn asymptotic_variance(m: &Generator, pi: &Distribution, h: &[f64]) -> Result<f64> {
    check_pi(m, pi)?;
    check_observable(m, h)?;
    check_reversible(m, pi)?;
    let mean = pi.expectation(h);
    if mean.abs() > CENTERING_TOL {
        return Err(AnalyzeError::NotCentered(mean));
    }
    if !is_irreducible(m) {
        return Err(AnalyzeError::Reducible);
    }
    poisson_variance(m, pi.weights(), h)
}

/// Connected components of the positive-rate graph (symmetric for
/// reversible generators).
fn components(m: &Generator) -> Vec<Vec<usize>> {
    let n = m.n();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = vec![s];
        label[s] = id;
        let mut i = 0;
        while i < comp.len() {
            let x = comp[i];
            for y in 0..n {
                if label[y] == usize::MAX && (m.rate(x, y) > 0.0 || m.rate(y, x) > 0.0) {
                    label[y] = id;
                    comp.push(y);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// σ² in the extended reals: reducible generators get the sum of the
/// per-class variances when h is centered on every closed class, and +∞
/// otherwise.
pub fn asymptotic_variance_extended(m: &Generator, pi: &Distribution, h: &[f64]) -> Result<f64> {
    check_pi(m, pi)?;
    check_observable(m, h)?;
    check_reversible(m, pi)?;
    let mean = pi.expectation(h);
    if mean.abs() > CENTERING_TOL {
        return Err(AnalyzeError::NotCentered(mean));
    }
    if is_irreducible(m) {
        return poisson_variance(m, pi.weights(), h);
    }
    let mut total = Vec::new();
    for comp in components(m) {
        let mass = kahan_sum(comp.iter().map(|&x| pi[x]));
        let local_mean = kahan_sum(comp.iter().map(|&x| pi[x] * h[x]));
        let scale = kahan_sum(comp.iter().map(|&x| pi[x] * h[x].abs())).max(1.0);
        if local_mean.abs() > CENTERING_TOL * scale {
            return Ok(f64::INFINITY);
        }
        if comp.len() == 1 {
            continue;
        }
        let sub = Generator::from_fn(comp.len(), |i, j| m.rate(comp[i], comp[j]))?;
        let w: Vec<f64> = comp.iter().map(|&x| pi[x] / mass).collect();
        let hc: Vec<f64> = comp.iter().map(|&x| h[x]).collect();
        total.push(mass * poisson_variance(&sub, &w, &hc)?);
    }
    Ok(kahan_sum(total))
}

/// σ² through the eigen-expansion 2·Σ_{i≥1} ⟨h, φ_i⟩²_π / λ_i.
pub fn asymptotic_variance_spectral(m: &Generator, pi: &Distribution, h: &[f64]) -> Result<f64> {
    check_pi(m, pi)?;
    check_observable(m, h)?;
    check_reversible(m, pi)?;
    if !is_irreducible(m) {
        return Err(AnalyzeError::Reducible);
    }
    let eig = symmetric_eigen(&symmetric_conjugate(m, pi))?;
    let n = m.n();
    let mut terms = Vec::with_capacity(n - 1);
    for i in 1..n {
        let v = eig.eigenvector(i);
        let c = kahan_sum((0..n).map(|x| pi[x].sqrt() * h[x] * v[x]));
        terms.push(c * c / eig.eigenvalues[i]);
    }
    Ok(2.0 * kahan_sum(terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeskunOutcome {
    pub dominates: bool,
    /// The first edge (x, y) with M1(x,y) < M2(x,y), in index order.
    pub witness: Option<(usize, usize)>,
}

/// M1 ⪰ M2 off-diagonally.
pub fn peskun_dominates(m1: &Generator, m2: &Generator) -> Result<PeskunOutcome> {
    check_same_size(m1, m2)?;
    let n = m1.n();
    for x in 0..n {
        for y in 0..n {
            if x != y && m1.rate(x, y) < m2.rate(x, y) {
                return Ok(PeskunOutcome {
                    dominates: false,
                    witness: Some((x, y)),
                });
            }
        }
    }
    Ok(PeskunOutcome {
        dominates: true,
        witness: None,
    })
}

/// Optional functionals evaluated per row of a comparison.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompareQuery {
    pub target: Option<Vec<usize>>,
    pub laplace_rates: Vec<f64>,
    pub observable: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub kind: String,
    #[serde(with = "extended::option")]
    pub min_rate: Option<f64>,
    #[serde(with = "extended::option")]
    pub mean_rate: Option<f64>,
    #[serde(with = "extended::option")]
    pub max_rate: Option<f64>,
    #[serde(with = "extended::option")]
    pub lambda2: Option<f64>,
    #[serde(with = "extended::option")]
    pub t_rel: Option<f64>,
    #[serde(with = "extended::option")]
    pub t_av: Option<f64>,
    pub irreducible: Option<bool>,
    #[serde(with = "extended::option")]
    pub hitting: Option<f64>,
    #[serde(with = "extended::vec")]
    pub laplace: Vec<f64>,
    #[serde(with = "extended::option")]
    pub sigma2: Option<f64>,
    pub error: Option<String>,
}

impl ComparisonRow {
    fn failed(kind: String, err: String) -> Self {
        Self {
            kind,
            min_rate: None,
            mean_rate: None,
            max_rate: None,
            lambda2: None,
            t_rel: None,
            t_av: None,
            irreducible: None,
            hitting: None,
            laplace: Vec::new(),
            sigma2: None,
            error: Some(err),
        }
    }

    /// Values of one functional; `None` if the row lacks it.
    pub fn functional(&self, f: Functional) -> Option<f64> {
        match f {
            Functional::Lambda2 => self.lambda2,
            Functional::TRel => self.t_rel,
            Functional::TAv => self.t_av,
            Functional::Hitting => self.hitting,
            Functional::Laplace(i) => self.laplace.get(i).copied(),
            Functional::Sigma2 => self.sigma2,
        }
    }
}

/// A performance functional and the direction it moves under Peskun
/// dominance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Lambda2,
    TRel,
    TAv,
    Hitting,
    /// Index into the query's Laplace rates.
    Laplace(usize),
    Sigma2,
}

impl Functional {
    /// True if the functional grows with the rates.
    pub fn increasing(self) -> bool {
        matches!(self, Self::Lambda2 | Self::Laplace(_))
    }

    pub fn name(self, query: &CompareQuery) -> String {
        match self {
            Self::Lambda2 => "lambda2".into(),
            Self::TRel => "t_rel".into(),
            Self::TAv => "t_av".into(),
            Self::Hitting => "hitting".into(),
            Self::Laplace(i) => format!("laplace[{}]", query.laplace_rates.get(i).copied().unwrap_or(f64::NAN)),
            Self::Sigma2 => "sigma2".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingCheck {
    /// Row kinds from the Peskun-smallest to the largest.
    pub chain: Vec<String>,
    pub functional: String,
    pub holds: bool,
    /// Largest amount by which a consecutive pair breaks the order.
    #[serde(with = "extended")]
    pub worst_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub orderings: Vec<OrderingCheck>,
}

/// Slack for ordering comparisons.
pub const ORDERING_SLACK: f64 = 1e-12;

fn analyze_row(m: &Generator, pi: &Distribution, kind: String, query: &CompareQuery) -> Result<ComparisonRow> {
    let n = m.n();
    let exits: Vec<f64> = (0..n).map(|x| m.exit_rate(x)).collect();
    let rep = spectral_report(m, pi)?;
    let hitting = match &query.target {
        Some(a) => Some(expected_hitting(m, pi, &HittingQuery::new(a.iter().copied(), n, 0.0)?)?),
        None => None,
    };
    let mut laplace = Vec::with_capacity(query.laplace_rates.len());
    if !query.laplace_rates.is_empty() {
        let a = query
            .target
            .as_ref()
            .ok_or_else(|| AnalyzeError::BadQuery("laplace rates need a target set".into()))?;
        for &r in &query.laplace_rates {
            laplace.push(laplace_hitting(m, pi, &HittingQuery::new(a.iter().copied(), n, r)?)?);
        }
    }
    let sigma2 = match &query.observable {
        Some(h) => Some(asymptotic_variance_extended(m, pi, h)?),
        None => None,
    };
    Ok(ComparisonRow {
        kind,
        min_rate: Some(exits.iter().copied().fold(f64::INFINITY, f64::min)),
        mean_rate: Some(kahan_sum(exits.iter().copied()) / n as f64),
        max_rate: Some(exits.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        lambda2: Some(rep.lambda2),
        t_rel: Some(rep.t_rel),
        t_av: Some(rep.t_av),
        irreducible: Some(rep.irreducible),
        hitting,
        laplace,
        sigma2,
        error: None,
    })
}

fn check_chain(rows: &[&ComparisonRow], f: Functional, query: &CompareQuery) -> Option<OrderingCheck> {
    let vals: Vec<f64> = rows.iter().map(|r| r.functional(f)).collect::<Option<Vec<_>>>()?;
    let mut holds = true;
    let mut worst = 0.0_f64;
    for w in vals.windows(2) {
        // lower ⪯ upper in Peskun order
        let (lo, hi) = if f.increasing() { (w[0], w[1]) } else { (w[1], w[0]) };
        if !extended::leq(lo, hi, ORDERING_SLACK) {
            holds = false;
            worst = worst.max(extended::residual(lo, hi));
        }
    }
    Some(OrderingCheck {
        chain: rows.iter().map(|r| r.kind.clone()).collect(),
        functional: f.name(query),
        holds,
        worst_violation: worst,
    })
}

fn functionals(query: &CompareQuery) -> Vec<Functional> {
    let mut fs = vec![Functional::Lambda2, Functional::TRel, Functional::TAv];
    if query.target.is_some() {
        fs.push(Functional::Hitting);
    }
    fs.extend((0..query.laplace_rates.len()).map(Functional::Laplace));
    if query.observable.is_some() {
        fs.push(Functional::Sigma2);
    }
    fs
}

/// Orderings implied by Peskun dominance between consecutive rows of a
/// chain, for every functional present in the query.
pub fn ordering_checks(rows: &[&ComparisonRow], query: &CompareQuery) -> Vec<OrderingCheck> {
    if rows.len() < 2 || rows.iter().any(|r| r.error.is_some()) {
        return Vec::new();
    }
    functionals(query)
        .into_iter()
        .filter_map(|f| check_chain(rows, f, query))
        .collect()
}

/// λ₂(P_∞) ≥ λ₂(P_{−∞}) + λ₂(TV).
pub fn tv_gap_check(p_inf: &ComparisonRow, p_neg_inf: &ComparisonRow, tv: &ComparisonRow) -> Option<OrderingCheck> {
    let (a, b, c) = (p_inf.lambda2?, p_neg_inf.lambda2?, tv.lambda2?);
    let rhs = a;
    let lhs = b + c;
    let holds = extended::leq(lhs, rhs, ORDERING_SLACK);
    Some(OrderingCheck {
        chain: vec![p_neg_inf.kind.clone(), tv.kind.clone(), p_inf.kind.clone()],
        functional: "lambda2(P_-inf)+lambda2(TV)<=lambda2(P_inf)".into(),
        holds,
        worst_violation: if holds { 0.0 } else { extended::residual(lhs, rhs) },
    })
}

/// Builds each reversiblization, evaluates the requested functionals and
/// checks the Peskun orderings among the rows present: the power means
/// sorted by exponent, the chain P₀ ⪯ C_{1,ln} ⪯ P_{1/3} ⪯ P₁, and the TV
/// spectral-gap inequality.
pub fn compare_reversiblizations(
    l: &Generator,
    pi: &Distribution,
    kinds: &[ReversiblizationKind],
    query: &CompareQuery,
) -> Result<Comparison> {
    check_pi(l, pi)?;
    if let Some(h) = &query.observable {
        check_observable(l, h)?;
        let mean = pi.expectation(h);
        if mean.abs() > CENTERING_TOL {
            return Err(AnalyzeError::NotCentered(mean));
        }
    }
    if let Some(a) = &query.target {
        HittingQuery::new(a.iter().copied(), l.n(), 0.0)?;
    }
    let mut rows = Vec::with_capacity(kinds.len());
    for k in kinds {
        let name = k.to_string();
        let row = match k.apply(l, pi) {
            Ok(m) => analyze_row(&m, pi, name.clone(), query).unwrap_or_else(|e| ComparisonRow::failed(name, e.to_string())),
            Err(e) => ComparisonRow::failed(name, e.to_string()),
        };
        rows.push(row);
    }

    let mut orderings = Vec::new();
    let mut powers: Vec<(f64, &ComparisonRow)> = kinds
        .iter()
        .zip(&rows)
        .filter_map(|(k, r)| match k {
            ReversiblizationKind::PowerMean(p) => Some((*p, r)),
            _ => None,
        })
        .collect();
    powers.sort_by(|a, b| a.0.total_cmp(&b.0));
    powers.dedup_by(|a, b| a.0 == b.0);
    let power_rows: Vec<&ComparisonRow> = powers.iter().map(|(_, r)| *r).collect();
    orderings.extend(ordering_checks(&power_rows, query));

    let find = |k: &ReversiblizationKind| kinds.iter().position(|x| x == k).map(|i| &rows[i]);
    let log_rows: Option<Vec<&ComparisonRow>> = ReversiblizationKind::log_chain().iter().map(|k| find(k)).collect();
    if let Some(lr) = log_rows {
        orderings.extend(ordering_checks(&lr, query));
    }
    if let (Some(a), Some(b), Some(c)) = (
        find(&ReversiblizationKind::PowerMean(f64::INFINITY)),
        find(&ReversiblizationKind::PowerMean(f64::NEG_INFINITY)),
        find(&ReversiblizationKind::Named(crate::reversiblize::Named::Tv)),
    ) {
        orderings.extend(tv_gap_check(a, b, c));
    }
    Ok(Comparison { rows, orderings })
}

/// The default comparison set: the power chain with P_{1/3}, C_{1,ln} and
/// the TV difference.
pub fn default_kinds() -> Vec<ReversiblizationKind> {
    use crate::reversiblize::Named;
    vec![
        ReversiblizationKind::PowerMean(f64::NEG_INFINITY),
        ReversiblizationKind::PowerMean(-1.0),
        ReversiblizationKind::PowerMean(0.0),
        ReversiblizationKind::CauchyLog { p: 1.0 },
        ReversiblizationKind::PowerMean(1.0 / 3.0),
        ReversiblizationKind::PowerMean(1.0),
        ReversiblizationKind::PowerMean(2.0),
        ReversiblizationKind::PowerMean(f64::INFINITY),
        ReversiblizationKind::Named(Named::Tv),
    ]
}
