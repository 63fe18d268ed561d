//! Reversiblization families: power means, balancing-function frameworks,
//! Cauchy and logarithmic means, dual means and the difference-type
//! constructions.
//!
//! Every construction works on an unordered pair x ≺ y through the
//! π-weighted rates β = π(x)L(x,y) and β' = π(y)L(y,x), producing an edge
//! weight `a` and then M(x,y) = a/π(x), M(y,x) = a/π(y). Detailed balance
//! therefore holds by construction.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::chain::{check_pi, ChainError, Distribution, Generator};
use crate::divergence::DivergenceSpec;
use crate::linalg::DenseMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReversiblizeError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("mean {0} must be symmetric and homogeneous")]
    MeanNotAdmissible(String),
    #[error("edge ({x}, {y}) would get an unbounded rate")]
    UnboundedRate { x: usize, y: usize },
    #[error("cannot parse method {0:?}")]
    Parse(String),
}

pub type Result<T, E = ReversiblizeError> = std::result::Result<T, E>;

/// Guard width around t = 1 for the removable singularity of the Cauchy
/// and logarithmic balancing functions.
const TAYLOR_GUARD: f64 = 1e-8;

/// Power mean ((a^p + b^p)/2)^{1/p} of two non-negative numbers, with the
/// geometric mean at p = 0 and min/max at ∓∞.
pub fn power_mean_value(a: f64, b: f64, p: f64) -> f64 {
    if a == b {
        return a;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if p == f64::INFINITY {
        hi
    } else if p == f64::NEG_INFINITY {
        lo
    } else if p > 0.0 {
        hi * mean_scale(lo / hi, p)
    } else if lo == 0.0 {
        0.0
    } else if p == 0.0 {
        lo.sqrt() * hi.sqrt()
    } else {
        lo * mean_scale(hi / lo, p)
    }
}

/// Power mean (Σ v_i^p / k)^{1/p} of k non-negative values, with the
/// geometric mean at p = 0 and min/max at ∓∞. Empty input gives 0.
pub fn power_mean_of(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return lo;
    }
    let k = values.len() as f64;
    if p == f64::INFINITY {
        hi
    } else if p == f64::NEG_INFINITY {
        lo
    } else if p > 0.0 {
        let s = crate::linalg::kahan_sum(values.iter().map(|v| (v / hi).powf(p)));
        hi * (s / k).powf(1.0 / p)
    } else if lo == 0.0 {
        0.0
    } else if p == 0.0 {
        (crate::linalg::kahan_sum(values.iter().map(|v| v.ln())) / k).exp()
    } else {
        let s = crate::linalg::kahan_sum(values.iter().map(|v| (v / lo).powf(p)));
        lo * (s / k).powf(1.0 / p)
    }
}

/// ((1 + r^p)/2)^{1/p}, evaluated without cancellation for small |p|.
fn mean_scale(r: f64, p: f64) -> f64 {
    (((p * r.ln()).exp_m1() / 2.0).ln_1p() / p).exp()
}

/// Builds a generator from per-pair edge weights `a = edge(x, y, β, β')`.
pub(crate) fn build_pairwise(
    l: &Generator,
    pi: &Distribution,
    mut edge: impl FnMut(usize, usize, f64, f64) -> Result<f64>,
) -> Result<Generator> {
    check_pi(l, pi)?;
    let n = l.n();
    let mut m = DenseMatrix::zeros(n, n);
    for x in 0..n {
        for y in (x + 1)..n {
            let b = pi[x] * l.rate(x, y);
            let b2 = pi[y] * l.rate(y, x);
            let a = edge(x, y, b, b2)?;
            if !a.is_finite() {
                return Err(ReversiblizeError::UnboundedRate { x, y });
            }
            m[(x, y)] = a / pi[x];
            m[(y, x)] = a / pi[y];
        }
    }
    Ok(Generator::from_off_diagonal(m)?)
}

/// P_p(L, π): edgewise power mean of L and its π-dual.
pub fn power_mean(l: &Generator, pi: &Distribution, p: f64) -> Result<Generator> {
    if p.is_nan() {
        return Err(ReversiblizeError::BadParams("p is NaN".into()));
    }
    build_pairwise(l, pi, |_, _, b, b2| Ok(power_mean_value(b, b2, p)))
}

/// Which of the two balancing frameworks to apply on equal-rate edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Framework {
    /// Keep L(x,y) where L(x,y) = L_π(x,y).
    Fg,
    /// Put 0 where L(x,y) = L_π(x,y).
    CalFg,
}

#[derive(Clone)]
enum BalancingKind {
    Power(f64),
    Barker,
    Cauchy { p: f64, q: f64 },
    Log { p: f64 },
    Symmetrized(DivergenceSpec),
    Custom {
        g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        g0: f64,
    },
}

/// g: ℝ₊ → ℝ₊ with g(t) = t·g(1/t).
#[derive(Clone)]
pub struct BalancingFunction {
    name: String,
    kind: BalancingKind,
}

impl fmt::Debug for BalancingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BalancingFunction").field("name", &self.name).finish()
    }
}

impl PartialEq for BalancingFunction {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (BalancingKind::Custom { g: a, .. }, BalancingKind::Custom { g: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            _ => self.name == other.name,
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(ReversiblizeError::BadParams(format!("{name} must be a positive real, got {v}")));
    }
    Ok(())
}

impl BalancingFunction {
    /// ((t^p + 1)/2)^{1/p}; under F_g this reproduces P_p.
    pub fn power(p: f64) -> Result<Self> {
        if p.is_nan() {
            return Err(ReversiblizeError::BadParams("p is NaN".into()));
        }
        Ok(Self {
            name: format!("power(p={p})"),
            kind: BalancingKind::Power(p),
        })
    }

    /// 2t/(1 + t).
    pub fn barker() -> Self {
        Self {
            name: "barker".into(),
            kind: BalancingKind::Barker,
        }
    }

    /// min(1, t).
    pub fn metropolis() -> Self {
        Self {
            name: "metropolis".into(),
            kind: BalancingKind::Power(f64::NEG_INFINITY),
        }
    }

    /// (q(t^p − 1) / (p(t^q − 1)))^{1/(p−q)} for p, q > 0, p ≠ q.
    pub fn cauchy(p: f64, q: f64) -> Result<Self> {
        check_positive("p", p)?;
        check_positive("q", q)?;
        if p == q {
            return Err(ReversiblizeError::BadParams("p and q must differ".into()));
        }
        Ok(Self {
            name: format!("cauchy(p={p},q={q})"),
            kind: BalancingKind::Cauchy { p, q },
        })
    }

    /// ((t^p − 1)/(p ln t))^{1/p} for p > 0.
    pub fn log(p: f64) -> Result<Self> {
        check_positive("p", p)?;
        Ok(Self {
            name: format!("log(p={p})"),
            kind: BalancingKind::Log { p },
        })
    }

    /// (f + f*)/2 for a divergence generator f.
    pub fn symmetrized(spec: DivergenceSpec) -> Self {
        Self {
            name: format!("sym({})", spec.name()),
            kind: BalancingKind::Symmetrized(spec),
        }
    }

    /// A user-supplied g, validated against g(t) = t·g(1/t) on the grid
    /// t ∈ {2⁻¹⁰, …, 2¹⁰}.
    pub fn custom(
        name: impl Into<String>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_at_0: f64,
    ) -> Result<Self> {
        let name = name.into();
        for k in -10..=10 {
            let t = 2f64.powi(k);
            let (v, w) = (g(t), t * g(1.0 / t));
            if !(v >= 0.0) || (v - w).abs() > 1e-12 * v.abs().max(1.0) {
                return Err(ReversiblizeError::BadParams(format!(
                    "{name} is not a balancing function at t = {t}"
                )));
            }
        }
        if !(g_at_0 >= 0.0) {
            return Err(ReversiblizeError::BadParams(format!("{name}: g(0) must be ≥ 0")));
        }
        Ok(Self {
            name,
            kind: BalancingKind::Custom {
                g: Arc::new(g),
                g0: g_at_0,
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn g_at_0(&self) -> f64 {
        match &self.kind {
            BalancingKind::Power(p) => power_mean_value(0.0, 1.0, *p),
            BalancingKind::Barker => 0.0,
            BalancingKind::Cauchy { p, q } => (q / p).powf(1.0 / (p - q)),
            BalancingKind::Log { .. } => 0.0,
            BalancingKind::Symmetrized(s) => 0.5 * (s.f_at_0() + s.slope_at_infinity()),
            BalancingKind::Custom { g0, .. } => *g0,
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.g_at_0();
        }
        match &self.kind {
            BalancingKind::Power(p) => power_mean_value(t, 1.0, *p),
            BalancingKind::Barker => 2.0 * t / (1.0 + t),
            BalancingKind::Cauchy { p, q } => reflect(t, |s| cauchy_g(s, *p, *q)),
            BalancingKind::Log { p } => reflect(t, |s| log_g(s, *p)),
            BalancingKind::Symmetrized(s) => 0.5 * (s.f(t) + s.conjugate().f(t)),
            BalancingKind::Custom { g, .. } => g(t),
        }
    }
}

/// Evaluates g on (0, 1] and extends by g(t) = t·g(1/t).
fn reflect(t: f64, g: impl Fn(f64) -> f64) -> f64 {
    if t > 1.0 {
        t * g(1.0 / t)
    } else {
        g(t)
    }
}

fn cauchy_g(t: f64, p: f64, q: f64) -> f64 {
    let e = t - 1.0;
    if e.abs() < TAYLOR_GUARD {
        return 1.0 + e / 2.0 + (p + q - 3.0) / 24.0 * e * e;
    }
    let u = t.ln();
    let ratio = ((p * u).exp_m1() / p) / ((q * u).exp_m1() / q);
    (ratio.ln() / (p - q)).exp()
}

fn log_g(t: f64, p: f64) -> f64 {
    let e = t - 1.0;
    if e.abs() < TAYLOR_GUARD {
        return 1.0 + e / 2.0 + (p - 3.0) / 24.0 * e * e;
    }
    let u = t.ln();
    let ratio = (p * u).exp_m1() / (p * u);
    (ratio.ln() / p).exp()
}

/// Edge weight of the balancing construction for π-weighted rates (β, β').
fn balanced_edge(g: &BalancingFunction, framework: Framework, b: f64, b2: f64) -> f64 {
    if b == b2 {
        return match framework {
            Framework::Fg => b,
            Framework::CalFg => 0.0,
        };
    }
    if b == 0.0 {
        return g.g_at_0() * b2;
    }
    if b2 == 0.0 {
        return g.g_at_0() * b;
    }
    b * g.g(b2 / b)
}

/// F_g or 𝓕_g reversiblization.
pub fn balanced(
    l: &Generator,
    pi: &Distribution,
    g: &BalancingFunction,
    framework: Framework,
) -> Result<Generator> {
    build_pairwise(l, pi, |_, _, b, b2| Ok(balanced_edge(g, framework, b, b2)))
}

/// Cauchy mean C_{p,q} reversiblization.
pub fn cauchy_mean(l: &Generator, pi: &Distribution, p: f64, q: f64) -> Result<Generator> {
    balanced(l, pi, &BalancingFunction::cauchy(p, q)?, Framework::Fg)
}

/// Logarithmic mean C_{p,ln} reversiblization.
pub fn log_mean(l: &Generator, pi: &Distribution, p: f64) -> Result<Generator> {
    balanced(l, pi, &BalancingFunction::log(p)?, Framework::Fg)
}

#[derive(Clone)]
enum MeanKind {
    Arithmetic,
    Geometric,
    Harmonic,
    Power(f64),
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

/// A two-argument mean m(a, b).
#[derive(Clone)]
pub struct MeanFunction {
    name: String,
    kind: MeanKind,
    symmetric: bool,
    homogeneous: bool,
}

impl fmt::Debug for MeanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeanFunction")
            .field("name", &self.name)
            .field("symmetric", &self.symmetric)
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

impl PartialEq for MeanFunction {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (MeanKind::Custom(a), MeanKind::Custom(b)) => Arc::ptr_eq(a, b),
            _ => self.name == other.name,
        }
    }
}

impl MeanFunction {
    fn builtin(name: &str, kind: MeanKind) -> Self {
        Self {
            name: name.into(),
            kind,
            symmetric: true,
            homogeneous: true,
        }
    }

    pub fn arithmetic() -> Self {
        Self::builtin("arithmetic", MeanKind::Arithmetic)
    }

    pub fn geometric() -> Self {
        Self::builtin("geometric", MeanKind::Geometric)
    }

    pub fn harmonic() -> Self {
        Self::builtin("harmonic", MeanKind::Harmonic)
    }

    pub fn power(p: f64) -> Result<Self> {
        if p.is_nan() {
            return Err(ReversiblizeError::BadParams("p is NaN".into()));
        }
        Ok(Self::builtin(&format!("power(p={p})"), MeanKind::Power(p)))
    }

    /// A caller-defined mean; the flags are taken on trust and checked by
    /// [`dual_mean`].
    pub fn custom(
        name: impl Into<String>,
        m: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        symmetric: bool,
        homogeneous: bool,
    ) -> Self {
        Self {
            name: name.into(),
            kind: MeanKind::Custom(Arc::new(m)),
            symmetric,
            homogeneous,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        match &self.kind {
            MeanKind::Arithmetic => 0.5 * (a + b),
            MeanKind::Geometric => a.sqrt() * b.sqrt(),
            MeanKind::Harmonic => power_mean_value(a, b, -1.0),
            MeanKind::Power(p) => power_mean_value(a, b, *p),
            MeanKind::Custom(m) => m(a, b),
        }
    }
}

/// Dual-mean reversiblization: edge weight ββ'/m(β, β'), 0 if either rate
/// vanishes.
pub fn dual_mean(l: &Generator, pi: &Distribution, m: &MeanFunction) -> Result<Generator> {
    if !m.symmetric || !m.homogeneous {
        return Err(ReversiblizeError::MeanNotAdmissible(m.name.clone()));
    }
    build_pairwise(l, pi, |_, _, b, b2| {
        if b == 0.0 || b2 == 0.0 {
            return Ok(0.0);
        }
        if b == b2 {
            return Ok(b);
        }
        Ok(b * b2 / m.eval(b, b2))
    })
}

/// The difference-type reversiblizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Named {
    Tv,
    SqHellinger,
    Js,
    LeCam,
    Jeffrey,
}

impl Named {
    pub const ALL: [Named; 5] = [Named::Tv, Named::SqHellinger, Named::Js, Named::LeCam, Named::Jeffrey];

    pub fn spec(self) -> DivergenceSpec {
        match self {
            Named::Tv => DivergenceSpec::tv(),
            Named::SqHellinger => DivergenceSpec::hellinger(),
            Named::Js => DivergenceSpec::js(),
            Named::LeCam => DivergenceSpec::lecam(),
            Named::Jeffrey => DivergenceSpec::jeffrey(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Named::Tv => "tv",
            Named::SqHellinger => "sq_hellinger",
            Named::Js => "js",
            Named::LeCam => "lecam",
            Named::Jeffrey => "jeffrey",
        }
    }
}

impl FromStr for Named {
    type Err = ReversiblizeError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "tv" => Named::Tv,
            "sq_hellinger" | "hellinger" => Named::SqHellinger,
            "js" => Named::Js,
            "lecam" => Named::LeCam,
            "jeffrey" => Named::Jeffrey,
            _ => return Err(ReversiblizeError::Parse(s.to_string())),
        })
    }
}

/// 𝓕_g with g the self-conjugate catalogue generator of `which`. Jeffrey
/// with exactly one vanishing rate on an edge is rejected.
pub fn named_difference(l: &Generator, pi: &Distribution, which: Named) -> Result<Generator> {
    let g = BalancingFunction::symmetrized(which.spec());
    balanced(l, pi, &g, Framework::CalFg)
}

/// Tagged union of every construction.
#[derive(Debug, Clone, PartialEq)]
pub enum ReversiblizationKind {
    PowerMean(f64),
    Cauchy { p: f64, q: f64 },
    CauchyLog { p: f64 },
    DualMean(MeanFunction),
    Balanced(BalancingFunction, Framework),
    Named(Named),
}

impl ReversiblizationKind {
    pub fn apply(&self, l: &Generator, pi: &Distribution) -> Result<Generator> {
        match self {
            Self::PowerMean(p) => power_mean(l, pi, *p),
            Self::Cauchy { p, q } => cauchy_mean(l, pi, *p, *q),
            Self::CauchyLog { p } => log_mean(l, pi, *p),
            Self::DualMean(m) => dual_mean(l, pi, m),
            Self::Balanced(g, fw) => balanced(l, pi, g, *fw),
            Self::Named(w) => named_difference(l, pi, *w),
        }
    }

    /// The power-mean chain P_{−∞} ⪯ P_{−1} ⪯ P₀ ⪯ P₁ ⪯ P₂ ⪯ P_∞.
    pub fn power_chain() -> Vec<Self> {
        [f64::NEG_INFINITY, -1.0, 0.0, 1.0, 2.0, f64::INFINITY]
            .into_iter()
            .map(Self::PowerMean)
            .collect()
    }

    /// P₀ ⪯ C_{1,ln} ⪯ P_{1/3} ⪯ P₁.
    pub fn log_chain() -> Vec<Self> {
        vec![
            Self::PowerMean(0.0),
            Self::CauchyLog { p: 1.0 },
            Self::PowerMean(1.0 / 3.0),
            Self::PowerMean(1.0),
        ]
    }
}

fn fmt_real(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

impl fmt::Display for ReversiblizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerMean(p) => write!(f, "power:p={}", fmt_real(*p)),
            Self::Cauchy { p, q } => write!(f, "cauchy:p={},q={}", fmt_real(*p), fmt_real(*q)),
            Self::CauchyLog { p } => write!(f, "log:p={}", fmt_real(*p)),
            Self::DualMean(m) => match m.kind {
                MeanKind::Power(p) => write!(f, "dual:mean=power,p={}", fmt_real(p)),
                _ => write!(f, "dual:mean={}", m.name),
            },
            Self::Balanced(g, fw) => {
                let fw = match fw {
                    Framework::Fg => "fg",
                    Framework::CalFg => "calfg",
                };
                match &g.kind {
                    BalancingKind::Power(p) if *p == f64::NEG_INFINITY => {
                        write!(f, "balanced:g=metropolis,framework={fw}")
                    }
                    BalancingKind::Power(p) => {
                        write!(f, "balanced:g=power,p={},framework={fw}", fmt_real(*p))
                    }
                    BalancingKind::Cauchy { p, q } => write!(
                        f,
                        "balanced:g=cauchy,p={},q={},framework={fw}",
                        fmt_real(*p),
                        fmt_real(*q)
                    ),
                    BalancingKind::Log { p } => {
                        write!(f, "balanced:g=log,p={},framework={fw}", fmt_real(*p))
                    }
                    BalancingKind::Symmetrized(s) => {
                        write!(f, "balanced:g={},framework={fw}", s.name())
                    }
                    _ => write!(f, "balanced:g={},framework={fw}", g.name),
                }
            }
            Self::Named(w) => write!(f, "named:{}", w.as_str()),
        }
    }
}

fn parse_real(key: &str, v: Option<&str>, whole: &str) -> Result<f64> {
    let v = v.ok_or_else(|| ReversiblizeError::Parse(format!("{whole}: missing {key}")))?;
    match v.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        s => {
            if let Some((a, b)) = s.split_once('/') {
                let a: f64 = a.trim().parse().map_err(|_| ReversiblizeError::Parse(whole.into()))?;
                let b: f64 = b.trim().parse().map_err(|_| ReversiblizeError::Parse(whole.into()))?;
                return Ok(a / b);
            }
            s.parse()
                .map_err(|_| ReversiblizeError::Parse(format!("{whole}: bad {key} value {s:?}")))
        }
    }
}

impl FromStr for ReversiblizationKind {
    type Err = ReversiblizeError;

    /// Grammar: `family[:key=value,...]`, e.g. `power:p=2`, `power:p=-inf`,
    /// `cauchy:p=3,q=1`, `log:p=1`, `dual:mean=arithmetic`,
    /// `balanced:g=barker`, `named:tv`.
    fn from_str(s: &str) -> Result<Self> {
        let whole = s.trim();
        let (family, rest) = whole.split_once(':').unwrap_or((whole, ""));
        let mut params: Vec<(String, String)> = Vec::new();
        let mut bare: Option<String> = None;
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => params.push((k.trim().to_ascii_lowercase(), v.trim().to_ascii_lowercase())),
                None if bare.is_none() => bare = Some(part.to_ascii_lowercase()),
                None => return Err(ReversiblizeError::Parse(whole.into())),
            }
        }
        let get = |k: &str| params.iter().find(|(kk, _)| kk == k).map(|(_, v)| v.as_str());
        let bad = || ReversiblizeError::Parse(whole.into());
        match family.trim().to_ascii_lowercase().as_str() {
            "power" => {
                let p = parse_real("p", get("p").or(bare.as_deref()), whole)?;
                if p.is_nan() {
                    return Err(bad());
                }
                Ok(Self::PowerMean(p))
            }
            "cauchy" => {
                let p = parse_real("p", get("p"), whole)?;
                let q = parse_real("q", get("q"), whole)?;
                BalancingFunction::cauchy(p, q)?;
                Ok(Self::Cauchy { p, q })
            }
            "log" => {
                let p = parse_real("p", get("p").or(bare.as_deref()), whole)?;
                BalancingFunction::log(p)?;
                Ok(Self::CauchyLog { p })
            }
            "dual" => {
                let mean = get("mean").or(bare.as_deref()).ok_or_else(bad)?;
                let m = match mean {
                    "arithmetic" => MeanFunction::arithmetic(),
                    "geometric" => MeanFunction::geometric(),
                    "harmonic" => MeanFunction::harmonic(),
                    "power" => MeanFunction::power(parse_real("p", get("p"), whole)?)?,
                    _ => return Err(bad()),
                };
                Ok(Self::DualMean(m))
            }
            "balanced" => {
                let fw = match get("framework").unwrap_or("fg") {
                    "fg" => Framework::Fg,
                    "calfg" => Framework::CalFg,
                    _ => return Err(bad()),
                };
                let name = get("g").or(bare.as_deref()).ok_or_else(bad)?;
                let g = match name {
                    "barker" => BalancingFunction::barker(),
                    "metropolis" => BalancingFunction::metropolis(),
                    "power" => BalancingFunction::power(parse_real("p", get("p"), whole)?)?,
                    "cauchy" => BalancingFunction::cauchy(
                        parse_real("p", get("p"), whole)?,
                        parse_real("q", get("q"), whole)?,
                    )?,
                    "log" => BalancingFunction::log(parse_real("p", get("p"), whole)?)?,
                    other => match other.parse::<DivergenceSpec>() {
                        Ok(spec) => BalancingFunction::symmetrized(spec),
                        Err(_) => return Err(bad()),
                    },
                };
                Ok(Self::Balanced(g, fw))
            }
            "named" => {
                let w = get("which").or(bare.as_deref()).ok_or_else(bad)?;
                Ok(Self::Named(w.parse()?))
            }
            _ => Err(bad()),
        }
    }
}
