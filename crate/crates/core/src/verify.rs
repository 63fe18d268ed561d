//! Executable checks of the divergence identities and inequalities, plus a
//! seeded random suite that aggregates residuals.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analyze::{compare_reversiblizations, AnalyzeError, CompareQuery, OrderingCheck, ORDERING_SLACK};
use crate::chain::{is_reversible, pi_dual, ChainError, Distribution, Generator};
use crate::divergence::{
    dbar_divergence, f_divergence, jensen_shannon, le_cam, renyi_divergence, taylor_remainder_bound, DivergenceError,
    DivergenceSpec,
};
use crate::extended;
use crate::reversiblize::{power_mean, ReversiblizationKind, ReversiblizeError};

/// Relative tolerance of equality checks.
pub const EQUALITY_TOL: f64 = 1e-10;
/// Relative slack of inequality checks.
pub const INEQUALITY_TOL: f64 = 1e-12;
/// Detailed-balance tolerance for arguments that must be reversible.
pub const REVERSIBLE_TOL: f64 = 1e-10;
/// Density of positive off-diagonal rates in random instances.
pub const RATE_DENSITY: f64 = 0.7;
/// Failures beyond this count are tallied but not recorded individually.
pub const MAX_RECORDED_FAILURES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Reversiblize(#[from] ReversiblizeError),
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
    #[error("argument is not π-reversible (violation {violation:.3e})")]
    NotReversible { violation: f64 },
    #[error("bad parameters: {0}")]
    BadParams(String),
}

pub type Result<T, E = VerifyError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_name: String,
    pub passed: bool,
    #[serde(with = "extended")]
    pub lhs: f64,
    #[serde(with = "extended")]
    pub rhs: f64,
    #[serde(with = "extended")]
    pub residual: f64,
    pub tolerance: f64,
    pub context: String,
}

impl CheckResult {
    pub fn equality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, context: String) -> Self {
        Self {
            check_name: name.into(),
            passed: extended::approx_eq(lhs, rhs, tolerance),
            lhs,
            rhs,
            residual: extended::residual(lhs, rhs),
            tolerance,
            context,
        }
    }

    /// `lhs ≤ rhs`; the residual is the excess of lhs over rhs, 0 if none.
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, context: String) -> Self {
        let residual = if lhs.is_nan() || rhs.is_nan() {
            f64::NAN
        } else if lhs <= rhs {
            0.0
        } else {
            extended::residual(lhs, rhs)
        };
        Self {
            check_name: name.into(),
            passed: extended::leq(lhs, rhs, tolerance),
            lhs,
            rhs,
            residual,
            tolerance,
            context,
        }
    }

    /// Residual divided by the scale used in the pass criterion.
    pub fn relative_residual(&self) -> f64 {
        let scale = if self.lhs.is_finite() && self.rhs.is_finite() {
            self.lhs.abs().max(self.rhs.abs()).max(1.0)
        } else {
            1.0
        };
        self.residual / scale
    }
}

/// SHA-256 of the little-endian bytes of the generators, π and a
/// parameter string, as lowercase hex.
pub fn fingerprint(gens: &[&Generator], pi: &Distribution, params: &str) -> String {
    let mut h = Sha256::new();
    for g in gens {
        h.update((g.n() as u64).to_le_bytes());
        for v in g.rates().as_slice() {
            h.update(v.to_le_bytes());
        }
    }
    for v in pi.weights() {
        h.update(v.to_le_bytes());
    }
    h.update(params.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn require_reversible(m: &Generator, pi: &Distribution) -> Result<()> {
    let c = is_reversible(m, pi, REVERSIBLE_TOL)?;
    if !c.reversible {
        return Err(VerifyError::NotReversible {
            violation: c.max_violation,
        });
    }
    Ok(())
}

fn alpha_spec(alpha: f64) -> Result<DivergenceSpec> {
    Ok(DivergenceSpec::alpha(alpha)?)
}

/// D_f(L‖M) = D_f(L_π‖M_π).
pub fn check_bisection_df(l: &Generator, m: &Generator, pi: &Distribution, spec: &DivergenceSpec) -> Result<CheckResult> {
    let lhs = f_divergence(l, m, pi, spec)?;
    let rhs = f_divergence(&pi_dual(l, pi)?, &pi_dual(m, pi)?, pi, spec)?;
    Ok(CheckResult::equality(
        format!("bisection_df:{}", spec.name()),
        lhs,
        rhs,
        EQUALITY_TOL,
        fingerprint(&[l, m], pi, &spec.name()),
    ))
}

/// D_f(L‖M̄) = D_f(L_π‖M̄) for π-reversible M̄.
pub fn check_bisection_df_reversible(
    l: &Generator,
    m_bar: &Generator,
    pi: &Distribution,
    spec: &DivergenceSpec,
) -> Result<CheckResult> {
    require_reversible(m_bar, pi)?;
    let lhs = f_divergence(l, m_bar, pi, spec)?;
    let rhs = f_divergence(&pi_dual(l, pi)?, m_bar, pi, spec)?;
    Ok(CheckResult::equality(
        format!("bisection_df_reversible:{}", spec.name()),
        lhs,
        rhs,
        EQUALITY_TOL,
        fingerprint(&[l, m_bar], pi, &spec.name()),
    ))
}

/// D̄_f(L‖M) = D̄_f(L_π‖M_π).
pub fn check_bisection_dbar(l: &Generator, m: &Generator, pi: &Distribution, spec: &DivergenceSpec) -> Result<CheckResult> {
    let lhs = dbar_divergence(l, m, pi, spec)?;
    let rhs = dbar_divergence(&pi_dual(l, pi)?, &pi_dual(m, pi)?, pi, spec)?;
    Ok(CheckResult::equality(
        format!("bisection_dbar:{}", spec.name()),
        lhs,
        rhs,
        EQUALITY_TOL,
        fingerprint(&[l, m], pi, &spec.name()),
    ))
}

/// D_α(L‖M̄) = D_α(L‖P_α) + D_α(P_α‖M̄) and
/// D_α(M̄‖L) = D_α(M̄‖P_{1−α}) + D_α(P_{1−α}‖L).
pub fn check_pythagorean(l: &Generator, m_bar: &Generator, pi: &Distribution, alpha: f64) -> Result<[CheckResult; 2]> {
    require_reversible(m_bar, pi)?;
    let spec = alpha_spec(alpha)?;
    let d = |a: &Generator, b: &Generator| f_divergence(a, b, pi, &spec);
    let pa = power_mean(l, pi, alpha)?;
    let ps = power_mean(l, pi, 1.0 - alpha)?;
    let ctx = fingerprint(&[l, m_bar], pi, &spec.name());
    Ok([
        CheckResult::equality(
            format!("pythagorean_first:{}", spec.name()),
            d(l, m_bar)?,
            d(l, &pa)? + d(&pa, m_bar)?,
            EQUALITY_TOL,
            ctx.clone(),
        ),
        CheckResult::equality(
            format!("pythagorean_second:{}", spec.name()),
            d(m_bar, l)?,
            d(m_bar, &ps)? + d(&ps, l)?,
            EQUALITY_TOL,
            ctx,
        ),
    ])
}

/// D_α(L‖M̄) + D_α(L_π‖M̄) = 2D_α(L‖P_α) + 2D_α(P_α‖M̄) and the mirrored
/// law through P_{1−α}.
pub fn check_parallelogram(l: &Generator, m_bar: &Generator, pi: &Distribution, alpha: f64) -> Result<[CheckResult; 2]> {
    require_reversible(m_bar, pi)?;
    let spec = alpha_spec(alpha)?;
    let d = |a: &Generator, b: &Generator| f_divergence(a, b, pi, &spec);
    let lp = pi_dual(l, pi)?;
    let pa = power_mean(l, pi, alpha)?;
    let ps = power_mean(l, pi, 1.0 - alpha)?;
    let ctx = fingerprint(&[l, m_bar], pi, &spec.name());
    Ok([
        CheckResult::equality(
            format!("parallelogram_first:{}", spec.name()),
            d(l, m_bar)? + d(&lp, m_bar)?,
            2.0 * d(l, &pa)? + 2.0 * d(&pa, m_bar)?,
            EQUALITY_TOL,
            ctx.clone(),
        ),
        CheckResult::equality(
            format!("parallelogram_second:{}", spec.name()),
            d(m_bar, l)? + d(m_bar, &lp)?,
            2.0 * d(m_bar, &ps)? + 2.0 * d(&ps, l)?,
            EQUALITY_TOL,
            ctx,
        ),
    ])
}

/// Rényi triangle, bisection and parallelogram relations for α > 1.
pub fn check_renyi(l: &Generator, m_bar: &Generator, pi: &Distribution, alpha: f64) -> Result<Vec<CheckResult>> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(VerifyError::Divergence(DivergenceError::BadAlpha(alpha)));
    }
    require_reversible(m_bar, pi)?;
    let r = |a: &Generator, b: &Generator| renyi_divergence(a, b, pi, alpha);
    let lp = pi_dual(l, pi)?;
    let pa = power_mean(l, pi, alpha)?;
    let ps = power_mean(l, pi, 1.0 - alpha)?;
    let ctx = fingerprint(&[l, m_bar], pi, &format!("renyi:{alpha}"));
    let name = |s: &str| format!("renyi_{s}:{alpha}");
    Ok(vec![
        CheckResult::inequality(
            name("triangle_first"),
            r(l, m_bar)?,
            r(l, &pa)? + r(&pa, m_bar)?,
            INEQUALITY_TOL,
            ctx.clone(),
        ),
        CheckResult::inequality(
            name("triangle_second"),
            r(m_bar, l)?,
            r(m_bar, &ps)? + r(&ps, l)?,
            INEQUALITY_TOL,
            ctx.clone(),
        ),
        CheckResult::equality(name("bisection_first"), r(l, &pa)?, r(&lp, &pa)?, EQUALITY_TOL, ctx.clone()),
        CheckResult::equality(name("bisection_second"), r(&ps, l)?, r(&ps, &lp)?, EQUALITY_TOL, ctx.clone()),
        CheckResult::inequality(
            name("parallelogram_first"),
            r(l, m_bar)? + r(&lp, m_bar)?,
            2.0 * r(l, &pa)? + 2.0 * r(&pa, m_bar)?,
            INEQUALITY_TOL,
            ctx.clone(),
        ),
        CheckResult::inequality(
            name("parallelogram_second"),
            r(m_bar, l)? + r(m_bar, &lp)?,
            2.0 * r(m_bar, &ps)? + 2.0 * r(&ps, l)?,
            INEQUALITY_TOL,
            ctx,
        ),
    ])
}

/// JS(L‖M) ≤ ½(KL(L‖M) + KL(M‖L)) and Δ(L‖M) ≤ χ²(L‖M); when M is
/// π-reversible also JS(L‖M) = JS(L_π‖M) and Δ(L‖M) = Δ(L_π‖M).
pub fn check_js_lecam_bounds(l: &Generator, m: &Generator, pi: &Distribution) -> Result<Vec<CheckResult>> {
    let kl = DivergenceSpec::kl();
    let ctx = fingerprint(&[l, m], pi, "js_lecam");
    let js = jensen_shannon(l, m, pi)?;
    let sym_kl = 0.5 * (f_divergence(l, m, pi, &kl)? + f_divergence(m, l, pi, &kl)?);
    let delta = le_cam(l, m, pi)?;
    let chi2 = f_divergence(l, m, pi, &DivergenceSpec::chi2())?;
    let mut out = vec![
        CheckResult::inequality("js_kl_bound", js, sym_kl, INEQUALITY_TOL, ctx.clone()),
        CheckResult::inequality("lecam_chi2_bound", delta, chi2, INEQUALITY_TOL, ctx.clone()),
    ];
    if is_reversible(m, pi, REVERSIBLE_TOL)?.reversible {
        let lp = pi_dual(l, pi)?;
        out.push(CheckResult::equality(
            "js_bisection",
            js,
            jensen_shannon(&lp, m, pi)?,
            EQUALITY_TOL,
            ctx.clone(),
        ));
        out.push(CheckResult::equality("lecam_bisection", delta, le_cam(&lp, m, pi)?, EQUALITY_TOL, ctx));
    }
    Ok(out)
}

/// Remainder term for (A, B); an empty set of comparable edges
/// contributes nothing.
fn remainder_term(a: &Generator, b: &Generator, spec: &DivergenceSpec) -> Result<f64> {
    match taylor_remainder_bound(a, b, spec) {
        Ok(v) => Ok(v),
        Err(DivergenceError::NoComparableEdges) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

/// The two approximate triangle inequalities through P₂ and P₋₁, each with
/// the sum of three Taylor remainder terms on the right.
pub fn check_approx_triangle(
    l: &Generator,
    m_bar: &Generator,
    pi: &Distribution,
    spec: &DivergenceSpec,
) -> Result<[CheckResult; 2]> {
    require_reversible(m_bar, pi)?;
    if !spec.strictly_convex() || spec.f_second_at_1().is_none() {
        return Err(DivergenceError::NotSmooth(spec.name()).into());
    }
    let d = |a: &Generator, b: &Generator| f_divergence(a, b, pi, spec);
    let p2 = power_mean(l, pi, 2.0)?;
    let pm1 = power_mean(l, pi, -1.0)?;
    let ctx = fingerprint(&[l, m_bar], pi, &spec.name());

    let lhs1 = abs_gap(d(l, m_bar)?, d(l, &p2)? + d(&p2, m_bar)?);
    let rhs1 = remainder_term(l, m_bar, spec)? + remainder_term(l, &p2, spec)? + remainder_term(&p2, m_bar, spec)?;
    let lhs2 = abs_gap(d(m_bar, l)?, d(&pm1, l)? + d(m_bar, &pm1)?);
    let rhs2 = remainder_term(m_bar, l, spec)? + remainder_term(&pm1, l, spec)? + remainder_term(m_bar, &pm1, spec)?;
    Ok([
        CheckResult::inequality(format!("approx_triangle_p2:{}", spec.name()), lhs1, rhs1, INEQUALITY_TOL, ctx.clone()),
        CheckResult::inequality(format!("approx_triangle_p_minus1:{}", spec.name()), lhs2, rhs2, INEQUALITY_TOL, ctx),
    ])
}

/// |a − b| with ∞ − ∞ read as an unbounded gap.
fn abs_gap(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        (a - b).abs()
    }
}

/// Off-diagonal rates that are U(0,1) with probability `density`, else 0.
pub fn random_generator<R: Rng>(rng: &mut R, n: usize, density: f64) -> Result<Generator> {
    let mut draws = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            if x == y {
                draws.push(0.0);
            } else if rng.gen_bool(density) {
                draws.push(rng.gen::<f64>());
            } else {
                draws.push(0.0);
            }
        }
    }
    Ok(Generator::from_fn(n, |x, y| draws[x * n + y])?)
}

/// Normalized U(0,1] weights.
pub fn random_distribution<R: Rng>(rng: &mut R, n: usize) -> Result<Distribution> {
    let w: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
    Ok(Distribution::from_unnormalized(w)?)
}

/// A π-reversible generator with every off-diagonal rate positive:
/// symmetric edge weights U(0.1, 1] divided by π(x).
pub fn random_reversible<R: Rng>(rng: &mut R, pi: &Distribution) -> Result<Generator> {
    let n = pi.len();
    let mut a = vec![0.0; n * n];
    for x in 0..n {
        for y in (x + 1)..n {
            let w = 0.1 + 0.9 * (1.0 - rng.gen::<f64>());
            a[x * n + y] = w;
            a[y * n + x] = w;
        }
    }
    Ok(Generator::from_fn(n, |x, y| a[x * n + y] / pi[x])?)
}

/// A non-empty target set; each state joins with probability 1/2.
pub fn random_target<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut a: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    if a.is_empty() {
        a.push(rng.gen_range(0..n));
    }
    a
}

/// U(−1,1) observable centered under π.
pub fn random_centered<R: Rng>(rng: &mut R, pi: &Distribution) -> Vec<f64> {
    let h: Vec<f64> = (0..pi.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = pi.expectation(&h);
    h.into_iter().map(|v| v - mean).collect()
}

/// The random objects of one suite trial.
#[derive(Debug, Clone)]
pub struct Trial {
    pub l: Generator,
    pub m: Generator,
    pub m_bar: Generator,
    pub pi: Distribution,
    pub target: Vec<usize>,
    pub observable: Vec<f64>,
}

/// Trial `index` of the suite for `seed`: ChaCha8 seeded with `seed`, on
/// stream `index`, so trials are independent of each other.
pub fn trial_instance(seed: u64, index: u64, n: usize) -> Result<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let l = random_generator(&mut rng, n, RATE_DENSITY)?;
    let pi = random_distribution(&mut rng, n)?;
    let m = random_generator(&mut rng, n, RATE_DENSITY)?;
    let m_bar = random_reversible(&mut rng, &pi)?;
    let target = random_target(&mut rng, n);
    let observable = random_centered(&mut rng, &pi);
    Ok(Trial {
        l,
        m,
        m_bar,
        pi,
        target,
        observable,
    })
}

pub const PYTHAGOREAN_ALPHAS: [f64; 4] = [-0.5, 0.5, 2.0, 3.0];
pub const RENYI_ALPHAS: [f64; 3] = [1.5, 2.0, 3.0];
pub const LAPLACE_RATES: [f64; 2] = [0.1, 1.0];

/// Comparison kinds used for the ordering checks: the power chain, the
/// logarithmic chain and the TV difference.
pub fn ordering_kinds() -> Vec<ReversiblizationKind> {
    let mut kinds = ReversiblizationKind::power_chain();
    for k in ReversiblizationKind::log_chain() {
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    kinds.push(ReversiblizationKind::Named(crate::reversiblize::Named::Tv));
    kinds
}

fn ordering_result(o: &OrderingCheck, ctx: &str) -> CheckResult {
    CheckResult {
        check_name: format!("ordering:{}:{}", o.chain.join(">"), o.functional),
        passed: o.holds,
        lhs: o.worst_violation,
        rhs: 0.0,
        residual: o.worst_violation,
        tolerance: ORDERING_SLACK,
        context: ctx.to_string(),
    }
}

/// Peskun orderings for one trial as check results.
pub fn check_orderings(t: &Trial) -> Result<Vec<CheckResult>> {
    let query = CompareQuery {
        target: Some(t.target.clone()),
        laplace_rates: LAPLACE_RATES.to_vec(),
        observable: Some(t.observable.clone()),
    };
    let cmp = compare_reversiblizations(&t.l, &t.pi, &ordering_kinds(), &query)?;
    let ctx = fingerprint(&[&t.l], &t.pi, "orderings");
    let mut out: Vec<CheckResult> = cmp.orderings.iter().map(|o| ordering_result(o, &ctx)).collect();
    for row in cmp.rows.iter().filter(|r| r.error.is_some()) {
        out.push(CheckResult {
            check_name: format!("ordering_row:{}", row.kind),
            passed: false,
            lhs: f64::NAN,
            rhs: f64::NAN,
            residual: f64::NAN,
            tolerance: ORDERING_SLACK,
            context: ctx.clone(),
        });
    }
    Ok(out)
}

/// Every check on one trial, in a fixed order.
pub fn run_trial(t: &Trial) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let catalogue = DivergenceSpec::catalogue();
    for spec in &catalogue {
        out.push(check_bisection_df(&t.l, &t.m, &t.pi, spec)?);
        out.push(check_bisection_df_reversible(&t.l, &t.m_bar, &t.pi, spec)?);
        out.push(check_bisection_dbar(&t.l, &t.m, &t.pi, spec)?);
    }
    for &a in &PYTHAGOREAN_ALPHAS {
        out.extend(check_pythagorean(&t.l, &t.m_bar, &t.pi, a)?);
        out.extend(check_parallelogram(&t.l, &t.m_bar, &t.pi, a)?);
    }
    for &a in &RENYI_ALPHAS {
        out.extend(check_renyi(&t.l, &t.m_bar, &t.pi, a)?);
    }
    out.extend(check_js_lecam_bounds(&t.l, &t.m, &t.pi)?);
    out.extend(check_js_lecam_bounds(&t.l, &t.m_bar, &t.pi)?);
    for spec in catalogue.iter().filter(|s| s.strictly_convex()) {
        out.extend(check_approx_triangle(&t.l, &t.m_bar, &t.pi, spec)?);
    }
    out.extend(check_orderings(t)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check_name: String,
    pub runs: usize,
    pub failures: usize,
    #[serde(with = "extended")]
    pub max_residual: f64,
    #[serde(with = "extended")]
    pub max_relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub trial: u64,
    pub n: usize,
    pub result: CheckResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: u64,
    pub sizes: Vec<usize>,
    pub passed: bool,
    pub total_checks: usize,
    pub failed_checks: usize,
    pub summaries: Vec<CheckSummary>,
    /// The first failures in trial order, at most [`MAX_RECORDED_FAILURES`].
    pub failures: Vec<FailureRecord>,
}

impl SuiteReport {
    /// Summaries whose name starts with `prefix`.
    pub fn group<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckSummary> + 'a {
        self.summaries.iter().filter(move |s| s.check_name.starts_with(prefix))
    }

    /// (runs, failures) over all summaries starting with `prefix`.
    pub fn group_totals(&self, prefix: &str) -> (usize, usize) {
        self.group(prefix).fold((0, 0), |(r, f), s| (r + s.runs, f + s.failures))
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Runs `trials` seeded trials; trial t uses size `sizes[t % sizes.len()]`.
pub fn run_suite(seed: u64, trials: u64, sizes: &[usize]) -> Result<SuiteReport> {
    if trials > 0 && sizes.is_empty() {
        return Err(VerifyError::BadParams("no sizes given".into()));
    }
    if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
        return Err(VerifyError::BadParams(format!("size {n} is below 2")));
    }
    let mut summaries: BTreeMap<String, CheckSummary> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut total = 0;
    let mut failed = 0;
    for t in 0..trials {
        let n = sizes[(t % sizes.len() as u64) as usize];
        let trial = trial_instance(seed, t, n)?;
        for r in run_trial(&trial)? {
            total += 1;
            let s = summaries.entry(r.check_name.clone()).or_insert_with(|| CheckSummary {
                check_name: r.check_name.clone(),
                runs: 0,
                failures: 0,
                max_residual: 0.0,
                max_relative_residual: 0.0,
            });
            s.runs += 1;
            s.max_residual = nan_max(s.max_residual, r.residual);
            s.max_relative_residual = nan_max(s.max_relative_residual, r.relative_residual());
            if !r.passed {
                s.failures += 1;
                failed += 1;
                if failures.len() < MAX_RECORDED_FAILURES {
                    failures.push(FailureRecord { trial: t, n, result: r });
                }
            }
        }
    }
    Ok(SuiteReport {
        seed,
        trials,
        sizes: sizes.to_vec(),
        passed: failed == 0,
        total_checks: total,
        failed_checks: failed,
        summaries: summaries.into_values().collect(),
        failures,
    })
}
