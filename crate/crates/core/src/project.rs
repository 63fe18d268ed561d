//! Projections of generators onto the π-reversible set: closed-form α and
//! KL projections, projection centroids of several generators, and the
//! ℓ²-regularized projection.
//!
//! Everything is parameterized by edge weights a = π(x)M(x,y) on pairs
//! x ≺ y, so reversibility holds by construction. Minimizing D_f(L‖M) over
//! M is the same as minimizing D_{f*}(M‖L), so the second-argument problems
//! are solved as first-argument problems for the conjugate generator.

use thiserror::Error;

use crate::chain::{check_pi, is_reversible, ChainError, Distribution, Generator};
use crate::divergence::{f_divergence, DivergenceError, DivergenceSpec, Family};
use crate::linalg::{kahan_sum, DenseMatrix};
use crate::reversiblize::{power_mean, power_mean_of, ReversiblizeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Reversiblize(#[from] ReversiblizeError),
    #[error("alpha must avoid 0 and 1, got {0}")]
    BadAlpha(f64),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("{0} is not strictly convex")]
    NotStrictlyConvex(String),
    #[error("{name} has f'(1) = {value}, expected 0")]
    DerivativeAtOneNonzero { name: String, value: f64 },
}

pub type Result<T, E = ProjectError> = std::result::Result<T, E>;

/// Which argument of D_f the minimizer M occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// min_M D_f(M‖L).
    MIsFirstArg,
    /// min_M D_f(L‖M).
    MIsSecondArg,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Self::MIsFirstArg => Self::MIsSecondArg,
            Self::MIsSecondArg => Self::MIsFirstArg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    PerEdgeNumeric,
    CoordinateDescent,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ClosedForm => "closed_form",
            Self::PerEdgeNumeric => "per_edge_numeric",
            Self::CoordinateDescent => "coordinate_descent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub minimizer: Generator,
    pub objective: f64,
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    /// False only when coordinate descent hit its sweep cap.
    pub converged: bool,
}

/// Families with a closed-form projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFamily {
    Alpha(f64),
    Kl,
}

impl ClosedFamily {
    fn spec(self) -> Result<DivergenceSpec> {
        match self {
            Self::Alpha(a) => DivergenceSpec::alpha(a).map_err(|_| ProjectError::BadAlpha(a)),
            Self::Kl => Ok(DivergenceSpec::kl()),
        }
    }

    /// Power-mean exponent of the projection and of the centroid.
    fn exponent(self, dir: Direction) -> f64 {
        match (self, dir) {
            (Self::Alpha(a), Direction::MIsFirstArg) => 1.0 - a,
            (Self::Alpha(a), Direction::MIsSecondArg) => a,
            (Self::Kl, Direction::MIsFirstArg) => 0.0,
            (Self::Kl, Direction::MIsSecondArg) => 1.0,
        }
    }

    /// Maps a catalogue spec to a closed family with the same minimizers.
    /// The flag is set when the direction has to be swapped.
    pub fn of_spec(spec: &DivergenceSpec) -> Option<(Self, bool)> {
        Some(match spec.family() {
            Family::Alpha(a) => (Self::Alpha(a), false),
            Family::Chi2 => (Self::Alpha(2.0), false),
            Family::NeymanChi2 => (Self::Alpha(-1.0), false),
            Family::Hellinger => (Self::Alpha(0.5), false),
            Family::Kl => (Self::Kl, false),
            Family::ReverseKl => (Self::Kl, true),
            _ => return None,
        })
    }
}

/// Objective Σ_i D_f(M‖L_i) or Σ_i D_f(L_i‖M).
pub fn centroid_objective(
    m: &Generator,
    ls: &[Generator],
    pi: &Distribution,
    spec: &DivergenceSpec,
    dir: Direction,
) -> Result<f64> {
    let mut total = Vec::with_capacity(ls.len());
    for l in ls {
        total.push(match dir {
            Direction::MIsFirstArg => f_divergence(m, l, pi, spec)?,
            Direction::MIsSecondArg => f_divergence(l, m, pi, spec)?,
        });
    }
    if total.iter().any(|v| v.is_infinite()) {
        return Ok(f64::INFINITY);
    }
    Ok(kahan_sum(total))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
        return Err(ProjectError::BadAlpha(alpha));
    }
    Ok(())
}

fn check_inputs(ls: &[Generator], pi: &Distribution) -> Result<()> {
    if ls.is_empty() {
        return Err(ProjectError::BadParams("at least one input generator is required".into()));
    }
    for l in ls {
        check_pi(l, pi)?;
    }
    Ok(())
}

fn finish(
    minimizer: Generator,
    objective: f64,
    method: Method,
    iterations: usize,
    residual: f64,
    converged: bool,
    pi: &Distribution,
) -> ProjectionResult {
    debug_assert!(is_reversible(&minimizer, pi, 1e-10).map(|c| c.reversible).unwrap_or(false));
    ProjectionResult {
        minimizer,
        objective,
        method,
        iterations,
        residual,
        converged,
    }
}

/// Projection for the α-divergence: P_{1−α} for the first argument, P_α for
/// the second.
pub fn alpha_projection(
    l: &Generator,
    pi: &Distribution,
    alpha: f64,
    dir: Direction,
) -> Result<ProjectionResult> {
    check_alpha(alpha)?;
    centroid_closed_form(std::slice::from_ref(l), pi, ClosedFamily::Alpha(alpha), dir)
}

/// KL projection: P₀ for the first argument, P₁ for the second.
pub fn kl_projection(l: &Generator, pi: &Distribution, dir: Direction) -> Result<ProjectionResult> {
    centroid_closed_form(std::slice::from_ref(l), pi, ClosedFamily::Kl, dir)
}

/// Closed-form centroid: the edgewise power mean of the individual
/// projections, with exponent 1−α (first argument) or α (second), and
/// geometric / arithmetic for KL.
pub fn centroid_closed_form(
    ls: &[Generator],
    pi: &Distribution,
    family: ClosedFamily,
    dir: Direction,
) -> Result<ProjectionResult> {
    check_inputs(ls, pi)?;
    if let ClosedFamily::Alpha(a) = family {
        check_alpha(a)?;
    }
    let p = family.exponent(dir);
    let projections = ls
        .iter()
        .map(|l| power_mean(l, pi, p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let n = pi.len();
    let mut m = DenseMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(ls.len());
    for x in 0..n {
        for y in (x + 1)..n {
            vals.clear();
            vals.extend(projections.iter().map(|q| pi[x] * q.rate(x, y)));
            let a = power_mean_of(&vals, p);
            m[(x, y)] = a / pi[x];
            m[(y, x)] = a / pi[y];
        }
    }
    let minimizer = Generator::from_off_diagonal(m)?;
    let objective = centroid_objective(&minimizer, ls, pi, &family.spec()?, dir)?;
    Ok(finish(minimizer, objective, Method::ClosedForm, 0, 0.0, true, pi))
}

/// Rejects generators for which the per-edge problems need not have a
/// unique solution.
fn check_numeric_spec(spec: &DivergenceSpec) -> Result<()> {
    let grid: Vec<f64> = (-10..=10).map(|k| 2f64.powi(k)).collect();
    for i in 0..grid.len() {
        for j in (i + 1)..grid.len() {
            let (a, b) = (grid[i], grid[j]);
            if spec.f(0.5 * (a + b)) >= 0.5 * (spec.f(a) + spec.f(b)) {
                return Err(ProjectError::NotStrictlyConvex(spec.name()));
            }
        }
    }
    let d = spec.f_prime(1.0);
    if d.abs() > 1e-12 {
        return Err(ProjectError::DerivativeAtOneNonzero {
            name: spec.name(),
            value: d,
        });
    }
    Ok(())
}

/// Per-edge objective φ(a) = Σ_b b·f(a/b) for the first-argument problem,
/// with zero weights contributing a·f*(0).
struct EdgeObjective<'a> {
    spec: &'a DivergenceSpec,
    positive: Vec<f64>,
    zeros: usize,
    slope: f64,
}

impl<'a> EdgeObjective<'a> {
    fn new(spec: &'a DivergenceSpec, weights: &[f64]) -> Self {
        let positive: Vec<f64> = weights.iter().copied().filter(|&b| b > 0.0).collect();
        Self {
            spec,
            zeros: weights.len() - positive.len(),
            positive,
            slope: spec.slope_at_infinity(),
        }
    }

    /// Any a > 0 makes φ infinite.
    fn pinned_at_zero(&self) -> bool {
        (self.positive.is_empty() && self.zeros == 0) || (self.zeros > 0 && self.slope.is_infinite())
    }

    fn zero_part(&self) -> f64 {
        if self.zeros == 0 {
            0.0
        } else {
            self.zeros as f64 * self.slope
        }
    }

    /// φ'(0+).
    fn derivative_at_zero(&self) -> f64 {
        if self.positive.is_empty() {
            return self.zero_part();
        }
        self.zero_part() + self.positive.len() as f64 * self.spec.f_prime(0.0)
    }

    fn derivative(&self, a: f64) -> f64 {
        self.zero_part() + kahan_sum(self.positive.iter().map(|&b| self.spec.f_prime(a / b)))
    }

    fn second(&self, a: f64) -> f64 {
        kahan_sum(
            self.positive
                .iter()
                .map(|&b| self.spec.f_second(a / b).unwrap_or(0.0) / b),
        )
    }

    fn mean_weight(&self) -> f64 {
        if self.positive.is_empty() {
            0.0
        } else {
            kahan_sum(self.positive.iter().copied()) / self.positive.len() as f64
        }
    }
}

/// Root of a non-decreasing function on [0, ∞) given φ'(0+) < 0, by
/// doubling from `start` and then safeguarded Newton. Returns (a, |g(a)|,
/// evaluations).
fn monotone_root(start: f64, g: impl Fn(f64) -> (f64, f64)) -> (f64, f64, usize) {
    let mut evals = 0;
    let mut lo = 0.0;
    let mut hi = start.max(1e-30);
    loop {
        let (v, _) = g(hi);
        evals += 1;
        if v > 0.0 || !v.is_finite() || evals > 2100 {
            if v == 0.0 {
                return (hi, 0.0, evals);
            }
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    let mut best = (x, f64::INFINITY);
    for _ in 0..300 {
        let (v, d) = g(x);
        evals += 1;
        if v.abs() < best.1 {
            best = (x, v.abs());
        }
        if v == 0.0 {
            break;
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / d;
        let next = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() || hi - lo <= 2.0 * f64::EPSILON * hi {
            let (v, _) = g(next);
            evals += 1;
            if v.abs() < best.1 {
                best = (next, v.abs());
            }
            break;
        }
        x = next;
    }
    (best.0, best.1, evals)
}

/// Minimizer of φ over a ≥ 0 together with |φ'(a*)| (0 at the boundary).
fn minimize_edge(obj: &EdgeObjective<'_>) -> (f64, f64) {
    if obj.pinned_at_zero() {
        return (0.0, 0.0);
    }
    let d0 = obj.derivative_at_zero();
    if d0 >= 0.0 {
        return (0.0, 0.0);
    }
    let (a, r, _) = monotone_root(obj.mean_weight(), |a| (obj.derivative(a), obj.second(a)));
    (a, r)
}

/// Generic centroid by per-edge one-dimensional convex minimization.
pub fn centroid_numeric(
    ls: &[Generator],
    pi: &Distribution,
    spec: &DivergenceSpec,
    dir: Direction,
) -> Result<ProjectionResult> {
    check_inputs(ls, pi)?;
    check_numeric_spec(spec)?;
    let working = match dir {
        Direction::MIsFirstArg => *spec,
        Direction::MIsSecondArg => spec.conjugate(),
    };
    let n = pi.len();
    let mut m = DenseMatrix::zeros(n, n);
    let mut residual = 0.0_f64;
    let mut weights = Vec::with_capacity(2 * ls.len());
    for x in 0..n {
        for y in (x + 1)..n {
            weights.clear();
            for l in ls {
                weights.push(pi[x] * l.rate(x, y));
                weights.push(pi[y] * l.rate(y, x));
            }
            let obj = EdgeObjective::new(&working, &weights);
            let (a, r) = minimize_edge(&obj);
            residual = residual.max(r);
            m[(x, y)] = a / pi[x];
            m[(y, x)] = a / pi[y];
        }
    }
    let minimizer = Generator::from_off_diagonal(m)?;
    let objective = centroid_objective(&minimizer, ls, pi, spec, dir)?;
    Ok(finish(
        minimizer,
        objective,
        Method::PerEdgeNumeric,
        n * (n - 1) / 2,
        residual,
        true,
        pi,
    ))
}

/// Sweep cap and tolerance for the regularized solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedOptions {
    pub max_sweeps: usize,
    /// Stop when the largest coordinate move in a sweep is at most
    /// `tol · max π(x)L(x,y)`.
    pub tol: f64,
    /// Coordinate sweeps before switching to projected Newton steps on all
    /// edge variables at once, with a sweep whenever a Newton step stalls.
    /// Large λ makes plain sweeps crawl.
    pub newton_after: usize,
}

impl Default for RegularizedOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 100_000,
            tol: 1e-10,
            newton_after: 200,
        }
    }
}

/// The penalty λ·Σ_x (1 + M(x,x))².
pub fn rate_penalty(m: &Generator, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda * kahan_sum((0..m.n()).map(|x| (1.0 + m.rate(x, x)).powi(2)))
}

/// min over π-reversible M of D_f(M‖L) (or D_f(L‖M)) + λ·Σ_x (1 + M(x,x))².
pub fn regularized_projection(
    l: &Generator,
    pi: &Distribution,
    spec: &DivergenceSpec,
    dir: Direction,
    lambda: f64,
) -> Result<ProjectionResult> {
    regularized_projection_with(l, pi, spec, dir, lambda, RegularizedOptions::default())
}

pub fn regularized_projection_with(
    l: &Generator,
    pi: &Distribution,
    spec: &DivergenceSpec,
    dir: Direction,
    lambda: f64,
    opts: RegularizedOptions,
) -> Result<ProjectionResult> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(ProjectError::BadParams(format!("lambda must be ≥ 0, got {lambda}")));
    }
    check_pi(l, pi)?;
    check_numeric_spec(spec)?;
    let working = match dir {
        Direction::MIsFirstArg => *spec,
        Direction::MIsSecondArg => spec.conjugate(),
    };
    let n = pi.len();
    struct Edge<'a> {
        x: usize,
        y: usize,
        obj: EdgeObjective<'a>,
    }
    let mut edges = Vec::new();
    let mut scale = 0.0_f64;
    for x in 0..n {
        for y in (x + 1)..n {
            let (b, b2) = (pi[x] * l.rate(x, y), pi[y] * l.rate(y, x));
            scale = scale.max(b).max(b2);
            if b == 0.0 && b2 == 0.0 {
                continue;
            }
            edges.push(Edge {
                x,
                y,
                obj: EdgeObjective::new(&working, &[b, b2]),
            });
        }
    }
    // warm start at the unpenalized optimum
    let mut a: Vec<f64> = edges.iter().map(|e| minimize_edge(&e.obj).0).collect();
    let mut sweeps = 0;
    let mut last_move = 0.0_f64;
    let mut converged = lambda == 0.0 || edges.is_empty();
    if !converged {
        let tol = opts.tol * scale.max(f64::MIN_POSITIVE);
        let objs: Vec<&EdgeObjective> = edges.iter().map(|e| &e.obj).collect();
        let ends: Vec<(usize, usize)> = edges.iter().map(|e| (e.x, e.y)).collect();
        let problem = Penalized {
            objs: &objs,
            ends: &ends,
            pi: pi.weights(),
            lambda,
        };
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            let step = if sweeps > opts.newton_after {
                problem.newton_step(&mut a, tol)
            } else {
                None
            };
            let done = match step {
                Some((mv, done)) => {
                    last_move = mv;
                    done
                }
                None => {
                    last_move = problem.sweep(&mut a);
                    last_move <= tol
                }
            };
            if done {
                converged = true;
                break;
            }
        }
    }
    let mut m = DenseMatrix::zeros(n, n);
    for (e, &v) in edges.iter().zip(&a) {
        m[(e.x, e.y)] = v / pi[e.x];
        m[(e.y, e.x)] = v / pi[e.y];
    }
    let minimizer = Generator::from_off_diagonal(m)?;
    let div = centroid_objective(&minimizer, std::slice::from_ref(l), pi, spec, dir)?;
    let objective = div + rate_penalty(&minimizer, lambda);
    Ok(finish(
        minimizer,
        objective,
        Method::CoordinateDescent,
        sweeps,
        last_move,
        converged,
        pi,
    ))
}

const KINK_T: f64 = 1e-12;

/// Σ_e φ_e(a_e) + λ·Σ_x (1 − r_x)² with r_x = Σ_{e∋x} a_e / π(x), over a ≥ 0.
struct Penalized<'a, 'b> {
    objs: &'a [&'a EdgeObjective<'b>],
    ends: &'a [(usize, usize)],
    pi: &'a [f64],
    lambda: f64,
}

impl Penalized<'_, '_> {
    /// 2λ·((1 − r_x)/π(x) + (1 − r_y)/π(y)) for every edge.
    fn pull(&self, a: &[f64]) -> Vec<f64> {
        let mut row = vec![0.0; self.pi.len()];
        for (&(x, y), &v) in self.ends.iter().zip(a) {
            row[x] += v;
            row[y] += v;
        }
        let slack: Vec<f64> = row.iter().zip(self.pi).map(|(r, p)| (1.0 - r / p) / p).collect();
        self.ends
            .iter()
            .map(|&(x, y)| 2.0 * self.lambda * (slack[x] + slack[y]))
            .collect()
    }

    fn gradient(&self, a: &[f64]) -> Vec<f64> {
        let pull = self.pull(a);
        self.objs
            .iter()
            .zip(a)
            .zip(pull)
            .map(|((o, &v), p)| if v == 0.0 { o.derivative_at_zero() } else { o.derivative(v) } - p)
            .collect()
    }

    /// One cyclic pass of exact per-edge minimization. Returns the largest
    /// coordinate move.
    fn sweep(&self, a: &mut [f64]) -> f64 {
        let lambda = self.lambda;
        let mut row = vec![0.0; self.pi.len()];
        for (&(x, y), &v) in self.ends.iter().zip(a.iter()) {
            row[x] += v;
            row[y] += v;
        }
        let mut largest = 0.0_f64;
        for (k, (&(x, y), obj)) in self.ends.iter().zip(self.objs).enumerate() {
            let (px, py) = (self.pi[x], self.pi[y]);
            let sx = row[x] - a[k];
            let sy = row[y] - a[k];
            let curv = 2.0 * lambda * (1.0 / (px * px) + 1.0 / (py * py));
            let pen = |v: f64| -2.0 * lambda * ((1.0 - (sx + v) / px) / px + (1.0 - (sy + v) / py) / py);
            let next = if obj.pinned_at_zero() || obj.derivative_at_zero() + pen(0.0) >= 0.0 {
                0.0
            } else {
                let start = a[k].max(obj.mean_weight());
                monotone_root(start, |v| (obj.derivative(v) + pen(v), obj.second(v) + curv)).0
            };
            largest = largest.max((next - a[k]).abs());
            row[x] = sx + next;
            row[y] = sy + next;
            a[k] = next;
        }
        largest
    }

    /// One projected Newton step: edges at zero with a non-negative
    /// gradient stay fixed, the rest take the Newton direction, and the
    /// step length comes from the directional derivative along the path
    /// clipped at zero. Returns (full-step move, converged), or `None` when
    /// the step makes no progress.
    fn newton_step(&self, a: &mut [f64], tol: f64) -> Option<(f64, bool)> {
        let k = a.len();
        let g = self.gradient(a);
        let mut free: Vec<usize> = (0..k)
            .filter(|&e| !self.objs[e].pinned_at_zero() && (a[e] > 0.0 || g[e] < 0.0))
            .collect();
        // Edges at (or within a step of KINK_T from) zero that the coupled
        // direction would push negative are fixed as well, and the direction
        // is recomputed.
        let dir = loop {
            let m = free.len();
            if m == 0 {
                return Some((0.0, true));
            }
            let mut h = vec![0.0; m * m];
            for (i, &e) in free.iter().enumerate() {
                let (ex, ey) = self.ends[e];
                for (j, &f) in free.iter().enumerate() {
                    let (fx, fy) = self.ends[f];
                    let mut shared = 0.0;
                    for z in [ex, ey] {
                        if z == fx || z == fy {
                            shared += 1.0 / (self.pi[z] * self.pi[z]);
                        }
                    }
                    h[i * m + j] = 2.0 * self.lambda * shared;
                }
                let c = self.objs[e].second(a[e]);
                if !c.is_finite() {
                    return None;
                }
                h[i * m + i] += c;
            }
            let rhs: Vec<f64> = free.iter().map(|&e| -g[e]).collect();
            let d = damped_solve(&h, m, &rhs)?;
            let blocked: Vec<usize> = free
                .iter()
                .zip(&d)
                .filter(|(&e, &de)| de < 0.0 && a[e] <= -de * KINK_T)
                .map(|(&e, _)| e)
                .collect();
            if blocked.is_empty() {
                let mut dir = vec![0.0; k];
                for (i, &e) in free.iter().enumerate() {
                    dir[e] = d[i];
                }
                break dir;
            }
            free.retain(|e| !blocked.contains(e));
        };
        let path = |t: f64| -> Vec<f64> { a.iter().zip(&dir).map(|(v, s)| (v + t * s).max(0.0)).collect() };
        let full = path(1.0);
        let full_move = full.iter().zip(a.iter()).map(|(p, v)| (p - v).abs()).fold(0.0, f64::max);
        if full_move <= tol {
            a.copy_from_slice(&full);
            return Some((full_move, true));
        }
        let slope = |t: f64| -> f64 {
            let p = path(t);
            let g = self.gradient(&p);
            kahan_sum((0..k).filter(|&e| p[e] > 0.0 && dir[e] != 0.0).map(|e| g[e] * dir[e]))
        };
        if !(slope(0.0) < 0.0) {
            return None;
        }
        let t = if slope(1.0) <= 0.0 {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if t == 0.0 {
            return None;
        }
        let next = path(t);
        let moved = next.iter().zip(a.iter()).map(|(p, v)| (p - v).abs()).fold(0.0, f64::max);
        a.copy_from_slice(&next);
        Some((moved, false))
    }
}

/// Cholesky solve of (H + μI) x = b, raising μ from 0 through multiples of
/// the largest diagonal entry until the factorization succeeds.
fn damped_solve(h: &[f64], m: usize, b: &[f64]) -> Option<Vec<f64>> {
    let top = (0..m).map(|i| h[i * m + i]).fold(0.0, f64::max);
    let mut mu = 0.0;
    for _ in 0..12 {
        let mut work = h.to_vec();
        for i in 0..m {
            work[i * m + i] += mu;
        }
        if let Some(x) = cholesky_solve(&mut work, m, b.to_vec()) {
            return Some(x);
        }
        mu = if mu == 0.0 { 1e-14 * top } else { 10.0 * mu };
    }
    None
}

/// Solves H x = b for symmetric positive definite H (row-major, m×m),
/// overwriting H with its Cholesky factor.
fn cholesky_solve(h: &mut [f64], m: usize, mut b: Vec<f64>) -> Option<Vec<f64>> {
    for j in 0..m {
        let mut d = h[j * m + j];
        for k in 0..j {
            d -= h[j * m + k] * h[j * m + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        h[j * m + j] = d;
        for i in (j + 1)..m {
            let mut v = h[i * m + j];
            for k in 0..j {
                v -= h[i * m + k] * h[j * m + k];
            }
            h[i * m + j] = v / d;
        }
    }
    for i in 0..m {
        for k in 0..i {
            b[i] -= h[i * m + k] * b[k];
        }
        b[i] /= h[i * m + i];
    }
    for i in (0..m).rev() {
        for k in (i + 1)..m {
            b[i] -= h[k * m + i] * b[k];
        }
        b[i] /= h[i * m + i];
    }
    Some(b)
}

/// A complete projection request.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionProblem {
    pub direction: Direction,
    pub spec: DivergenceSpec,
    pub inputs: Vec<Generator>,
    pub pi: Distribution,
    pub lambda: f64,
}

impl ProjectionProblem {
    pub fn new(
        direction: Direction,
        spec: DivergenceSpec,
        inputs: Vec<Generator>,
        pi: Distribution,
        lambda: f64,
    ) -> Result<Self> {
        check_inputs(&inputs, &pi)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(ProjectError::BadParams(format!("lambda must be ≥ 0, got {lambda}")));
        }
        Ok(Self {
            direction,
            spec,
            inputs,
            pi,
            lambda,
        })
    }

    /// Closed form where one exists, per-edge numerics otherwise, and
    /// coordinate descent when λ > 0 (single input only).
    pub fn solve(&self) -> Result<ProjectionResult> {
        if self.lambda > 0.0 {
            if self.inputs.len() != 1 {
                return Err(ProjectError::BadParams(
                    "regularized projection takes exactly one input".into(),
                ));
            }
            return regularized_projection(&self.inputs[0], &self.pi, &self.spec, self.direction, self.lambda);
        }
        if let Some((family, flip)) = ClosedFamily::of_spec(&self.spec) {
            let dir = if flip { self.direction.flip() } else { self.direction };
            let mut r = centroid_closed_form(&self.inputs, &self.pi, family, dir)?;
            r.objective = centroid_objective(&r.minimizer, &self.inputs, &self.pi, &self.spec, self.direction)?;
            return Ok(r);
        }
        centroid_numeric(&self.inputs, &self.pi, &self.spec, self.direction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cycle() -> Generator {
        Generator::from_fn(3, |x, y| if y == (x + 1) % 3 { 1.0 } else { 0.0 }).unwrap()
    }

    fn sample() -> (Generator, Distribution) {
        let pi = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let l = Generator::from_fn(4, |x, y| ((x * 7 + y * 3) % 5) as f64 * 0.2 + 0.05 * y as f64)
            .unwrap();
        (l, pi)
    }

    #[test]
    fn alpha_projection_directions() {
        let (l, pi) = sample();
        let first = alpha_projection(&l, &pi, 2.0, Direction::MIsFirstArg).unwrap();
        assert!(first.minimizer.max_off_diagonal_diff(&power_mean(&l, &pi, -1.0).unwrap()) < 1e-14);
        let second = alpha_projection(&l, &pi, 2.0, Direction::MIsSecondArg).unwrap();
        assert!(second.minimizer.max_off_diagonal_diff(&power_mean(&l, &pi, 2.0).unwrap()) < 1e-14);
        let h1 = alpha_projection(&l, &pi, 0.5, Direction::MIsFirstArg).unwrap();
        let h2 = alpha_projection(&l, &pi, 0.5, Direction::MIsSecondArg).unwrap();
        assert!(h1.minimizer.max_off_diagonal_diff(&h2.minimizer) < 1e-15);
        assert!(matches!(
            alpha_projection(&l, &pi, 1.0, Direction::MIsFirstArg),
            Err(ProjectError::BadAlpha(_))
        ));
    }

    #[test]
    fn kl_projection_examples() {
        let pi = Distribution::uniform(3).unwrap();
        let s = kl_projection(&cycle(), &pi, Direction::MIsSecondArg).unwrap();
        assert_relative_eq!(s.minimizer.rate(0, 1), 0.5, max_relative = 1e-15);
        assert_relative_eq!(s.minimizer.rate(1, 0), 0.5, max_relative = 1e-15);
        let f = kl_projection(&cycle(), &pi, Direction::MIsFirstArg).unwrap();
        assert_eq!(f.minimizer.rates().max_abs(), 0.0);
        let rev = Generator::from_fn(3, |x, y| 0.2 + 0.1 * (x + y) as f64).unwrap();
        for d in [Direction::MIsFirstArg, Direction::MIsSecondArg] {
            let r = kl_projection(&rev, &pi, d).unwrap();
            assert!(r.minimizer.max_off_diagonal_diff(&rev) < 1e-15);
            assert_eq!(r.objective, 0.0);
        }
    }

    #[test]
    fn hellinger_centroid_of_two() {
        let (l1, pi) = sample();
        let l2 = Generator::from_fn(4, |x, y| 0.1 + 0.3 * ((x + 2 * y) % 3) as f64).unwrap();
        let c = centroid_closed_form(&[l1.clone(), l2.clone()], &pi, ClosedFamily::Alpha(0.5), Direction::MIsFirstArg)
            .unwrap();
        let p1 = power_mean(&l1, &pi, 0.5).unwrap();
        let p2 = power_mean(&l2, &pi, 0.5).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                if x != y {
                    let v = ((p1.rate(x, y).sqrt() + p2.rate(x, y).sqrt()) / 2.0).powi(2);
                    assert_relative_eq!(c.minimizer.rate(x, y), v, max_relative = 1e-13, epsilon = 1e-300);
                }
            }
        }
        let same = centroid_closed_form(&[l1.clone(), l1.clone()], &pi, ClosedFamily::Alpha(0.5), Direction::MIsSecondArg)
            .unwrap();
        assert!(same.minimizer.max_off_diagonal_diff(&p1) < 1e-14);
    }

    #[test]
    fn numeric_matches_closed_form() {
        let (l1, pi) = sample();
        let l2 = Generator::from_fn(4, |x, y| if (x + y) % 2 == 0 { 0.0 } else { 0.3 + 0.1 * x as f64 })
            .unwrap();
        let ls = vec![l1, l2];
        for (spec, fam) in [
            (DivergenceSpec::hellinger(), ClosedFamily::Alpha(0.5)),
            (DivergenceSpec::alpha(2.0).unwrap(), ClosedFamily::Alpha(2.0)),
            (DivergenceSpec::alpha(-0.5).unwrap(), ClosedFamily::Alpha(-0.5)),
            (DivergenceSpec::alpha(3.0).unwrap(), ClosedFamily::Alpha(3.0)),
            (DivergenceSpec::kl(), ClosedFamily::Kl),
        ] {
            for dir in [Direction::MIsFirstArg, Direction::MIsSecondArg] {
                let a = centroid_closed_form(&ls, &pi, fam, dir).unwrap();
                let b = centroid_numeric(&ls, &pi, &spec, dir).unwrap();
                for x in 0..4 {
                    for y in 0..4 {
                        let (u, v) = (a.minimizer.rate(x, y), b.minimizer.rate(x, y));
                        assert!((u - v).abs() <= 1e-8 * u.abs().max(1.0), "{spec} {dir:?} ({x},{y}) {u} {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn numeric_rejects_tv() {
        let (l, pi) = sample();
        assert!(matches!(
            centroid_numeric(&[l], &pi, &DivergenceSpec::tv(), Direction::MIsFirstArg),
            Err(ProjectError::NotStrictlyConvex(_))
        ));
    }

    #[test]
    fn numeric_fixed_point_for_reversible_inputs() {
        let pi = Distribution::new(vec![0.25, 0.25, 0.5]).unwrap();
        let rev = Generator::from_fn(3, |x, y| 0.2 * (1.0 + (x + y) as f64) / pi[x]).unwrap();
        for spec in [DivergenceSpec::js(), DivergenceSpec::lecam(), DivergenceSpec::jeffrey()] {
            let r = centroid_numeric(&[rev.clone(), rev.clone()], &pi, &spec, Direction::MIsFirstArg).unwrap();
            assert!(r.minimizer.max_off_diagonal_diff(&rev) < 1e-12, "{spec}");
        }
    }

    #[test]
    fn regularized_zero_lambda_is_closed_form() {
        let (l, pi) = sample();
        let r = regularized_projection(&l, &pi, &DivergenceSpec::chi2(), Direction::MIsSecondArg, 0.0).unwrap();
        let p2 = power_mean(&l, &pi, 2.0).unwrap();
        assert!(r.minimizer.max_off_diagonal_diff(&p2) < 1e-8);
        assert!(r.converged);
    }

    #[test]
    fn regularized_pulls_rates_to_one() {
        let pi = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let l = Generator::from_fn(3, |x, y| 0.2 + 0.1 * (2 * x + y) as f64).unwrap();
        let r = regularized_projection(&l, &pi, &DivergenceSpec::kl(), Direction::MIsFirstArg, 1e8).unwrap();
        assert!(r.converged);
        for x in 0..3 {
            assert!((r.minimizer.exit_rate(x) - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn problem_dispatch() {
        let (l, pi) = sample();
        let p = ProjectionProblem::new(Direction::MIsSecondArg, DivergenceSpec::alpha(2.0).unwrap(), vec![l.clone()], pi.clone(), 0.0)
            .unwrap();
        let r = p.solve().unwrap();
        assert_eq!(r.method, Method::ClosedForm);
        assert!(r.minimizer.max_off_diagonal_diff(&power_mean(&l, &pi, 2.0).unwrap()) < 1e-15);
        // kl* first-argument equals kl second-argument
        let q = ProjectionProblem::new(Direction::MIsFirstArg, DivergenceSpec::kl().conjugate(), vec![l.clone()], pi.clone(), 0.0)
            .unwrap();
        let r = q.solve().unwrap();
        assert!(r.minimizer.max_off_diagonal_diff(&power_mean(&l, &pi, 1.0).unwrap()) < 1e-15);
        let js = ProjectionProblem::new(Direction::MIsFirstArg, DivergenceSpec::js(), vec![l.clone()], pi.clone(), 0.0)
            .unwrap();
        assert_eq!(js.solve().unwrap().method, Method::PerEdgeNumeric);
        assert!(ProjectionProblem::new(Direction::MIsFirstArg, DivergenceSpec::js(), vec![], pi, 0.0).is_err());
    }
}
