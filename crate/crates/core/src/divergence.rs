//! f-divergences between generators, their conjugates, the mid-point
//! variant D̄_f and the Rényi divergence.
//!
//! Terms on edges where a rate vanishes follow the Csiszár limits:
//! a weight-zero edge with positive first argument contributes
//! `v·f*(0)` (with `f*(0) = lim_{t→∞} f(t)/t`), and a zero first argument
//! over a positive weight contributes `w·f(0)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::chain::{check_pi, check_same_size, ChainError, Distribution, Generator};
use crate::linalg::kahan_sum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivergenceError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("term at edge ({x}, {y}) is infinite")]
    UndefinedTerm { x: usize, y: usize },
    #[error("Rényi order must exceed 1, got {0}")]
    BadAlpha(f64),
    #[error("alpha family needs α ∉ {{0, 1}}, got {0}")]
    BadFamilyParameter(f64),
    #[error("no edge has both rates positive")]
    NoComparableEdges,
    #[error("{0} is not three times differentiable")]
    NotSmooth(String),
    #[error("unknown divergence {0:?}")]
    Unknown(String),
}

pub type Result<T, E = DivergenceError> = std::result::Result<T, E>;

/// Built-in convex generators. `NeymanChi2` and `ReverseKl` are the
/// conjugates of `Chi2` and `Kl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Alpha(f64),
    Chi2,
    NeymanChi2,
    Hellinger,
    Kl,
    ReverseKl,
    Tv,
    Js,
    LeCam,
    Jeffrey,
}

/// A convex f with f(1) = 0 identifying D_f, together with its analytic
/// derivatives and limiting values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceSpec {
    family: Family,
}

impl DivergenceSpec {
    pub fn alpha(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
            return Err(DivergenceError::BadFamilyParameter(alpha));
        }
        Ok(Self {
            family: Family::Alpha(alpha),
        })
    }

    pub const fn chi2() -> Self {
        Self { family: Family::Chi2 }
    }

    pub const fn hellinger() -> Self {
        Self {
            family: Family::Hellinger,
        }
    }

    pub const fn kl() -> Self {
        Self { family: Family::Kl }
    }

    pub const fn tv() -> Self {
        Self { family: Family::Tv }
    }

    pub const fn js() -> Self {
        Self { family: Family::Js }
    }

    pub const fn lecam() -> Self {
        Self {
            family: Family::LeCam,
        }
    }

    pub const fn jeffrey() -> Self {
        Self {
            family: Family::Jeffrey,
        }
    }

    /// The whole fixed catalogue plus a few alpha orders.
    pub fn catalogue() -> Vec<Self> {
        let mut v = vec![
            Self::chi2(),
            Self::chi2().conjugate(),
            Self::hellinger(),
            Self::kl(),
            Self::kl().conjugate(),
            Self::tv(),
            Self::js(),
            Self::lecam(),
            Self::jeffrey(),
        ];
        for a in [-0.5, 0.5, 2.0, 3.0] {
            v.push(Self::alpha(a).expect("valid order"));
        }
        v
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::Alpha(a) => format!("alpha:{a}"),
            Family::Chi2 => "chi2".into(),
            Family::NeymanChi2 => "chi2*".into(),
            Family::Hellinger => "hellinger".into(),
            Family::Kl => "kl".into(),
            Family::ReverseKl => "kl*".into(),
            Family::Tv => "tv".into(),
            Family::Js => "js".into(),
            Family::LeCam => "lecam".into(),
            Family::Jeffrey => "jeffrey".into(),
        }
    }

    /// The spec of f*(t) = t·f(1/t).
    pub fn conjugate(&self) -> Self {
        let family = match self.family {
            Family::Alpha(a) => Family::Alpha(1.0 - a),
            Family::Chi2 => Family::NeymanChi2,
            Family::NeymanChi2 => Family::Chi2,
            Family::Kl => Family::ReverseKl,
            Family::ReverseKl => Family::Kl,
            f @ (Family::Hellinger | Family::Tv | Family::Js | Family::LeCam | Family::Jeffrey) => f,
        };
        Self { family }
    }

    pub fn self_conjugate(&self) -> bool {
        match self.family {
            Family::Alpha(a) => a == 0.5,
            Family::Hellinger | Family::Tv | Family::Js | Family::LeCam | Family::Jeffrey => true,
            _ => false,
        }
    }

    pub fn strictly_convex(&self) -> bool {
        !matches!(self.family, Family::Tv)
    }

    /// lim_{t→0+} f(t); may be +∞.
    pub fn f_at_0(&self) -> f64 {
        match self.family {
            Family::Alpha(a) => {
                if a > 0.0 {
                    1.0 / a
                } else {
                    f64::INFINITY
                }
            }
            Family::Chi2 | Family::Hellinger | Family::Kl | Family::Tv | Family::LeCam => 1.0,
            Family::Js => std::f64::consts::LN_2,
            Family::NeymanChi2 | Family::ReverseKl | Family::Jeffrey => f64::INFINITY,
        }
    }

    /// lim_{t→∞} f(t)/t, which equals f*(0); may be +∞.
    pub fn slope_at_infinity(&self) -> f64 {
        self.conjugate().f_at_0()
    }

    pub fn f(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.f_at_0();
        }
        match self.family {
            Family::Alpha(a) => (t.powf(a) - a * t - (1.0 - a)) / (a * (a - 1.0)),
            Family::Chi2 => (t - 1.0).powi(2),
            Family::NeymanChi2 => (t - 1.0).powi(2) / t,
            Family::Hellinger => (t.sqrt() - 1.0).powi(2),
            Family::Kl => t * t.ln() - t + 1.0,
            Family::ReverseKl => t - 1.0 - t.ln(),
            Family::Tv => (t - 1.0).abs(),
            Family::Js => t * t.ln() - (1.0 + t) * ((1.0 + t) / 2.0).ln(),
            Family::LeCam => (t - 1.0).powi(2) / (1.0 + t),
            Family::Jeffrey => (t - 1.0) * t.ln(),
        }
    }

    pub fn f_prime(&self, t: f64) -> f64 {
        match self.family {
            Family::Alpha(a) => (t.powf(a - 1.0) - 1.0) / (a - 1.0),
            Family::Chi2 => 2.0 * (t - 1.0),
            Family::NeymanChi2 => 1.0 - 1.0 / (t * t),
            Family::Hellinger => 1.0 - 1.0 / t.sqrt(),
            Family::Kl => t.ln(),
            Family::ReverseKl => 1.0 - 1.0 / t,
            Family::Tv => {
                if t > 1.0 {
                    1.0
                } else if t < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Family::Js => (2.0 * t / (1.0 + t)).ln(),
            Family::LeCam => 1.0 - 4.0 / (1.0 + t).powi(2),
            Family::Jeffrey => t.ln() + 1.0 - 1.0 / t,
        }
    }

    /// f″(t), or `None` where f is not twice differentiable.
    pub fn f_second(&self, t: f64) -> Option<f64> {
        Some(match self.family {
            Family::Alpha(a) => t.powf(a - 2.0),
            Family::Chi2 => 2.0,
            Family::NeymanChi2 => 2.0 / (t * t * t),
            Family::Hellinger => 0.5 / (t * t.sqrt()),
            Family::Kl => 1.0 / t,
            Family::ReverseKl => 1.0 / (t * t),
            Family::Tv => {
                if t == 1.0 {
                    return None;
                }
                0.0
            }
            Family::Js => 1.0 / (t * (1.0 + t)),
            Family::LeCam => 8.0 / (1.0 + t).powi(3),
            Family::Jeffrey => 1.0 / t + 1.0 / (t * t),
        })
    }

    pub fn f_second_at_1(&self) -> Option<f64> {
        self.f_second(1.0)
    }

    /// f‴(t), or `None` for generators that are not three times
    /// differentiable.
    pub fn f_third(&self, t: f64) -> Option<f64> {
        Some(match self.family {
            Family::Alpha(a) => (a - 2.0) * t.powf(a - 3.0),
            Family::Chi2 => 0.0,
            Family::NeymanChi2 => -6.0 / t.powi(4),
            Family::Hellinger => -0.75 / (t * t * t.sqrt()),
            Family::Kl => -1.0 / (t * t),
            Family::ReverseKl => -2.0 / (t * t * t),
            Family::Tv => return None,
            Family::Js => -(2.0 * t + 1.0) / (t * (1.0 + t)).powi(2),
            Family::LeCam => -24.0 / (1.0 + t).powi(4),
            Family::Jeffrey => -1.0 / (t * t) - 2.0 / (t * t * t),
        })
    }

    /// sup |f‴| over [lo, hi]. Every catalogue entry has |f‴| monotone on
    /// (0, ∞), so the supremum sits at an endpoint.
    pub fn f_third_sup(&self, lo: f64, hi: f64) -> Option<f64> {
        let a = self.f_third(lo)?.abs();
        let b = self.f_third(hi)?.abs();
        Some(a.max(b))
    }
}

impl fmt::Display for DivergenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for DivergenceSpec {
    type Err = DivergenceError;

    /// Accepts the catalogue names, `chi2*`/`kl*` for the conjugates, and
    /// `alpha:<α>` or `alpha=<α>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        if let Some(rest) = lower
            .strip_prefix("alpha:")
            .or_else(|| lower.strip_prefix("alpha="))
            .or_else(|| lower.strip_prefix("alpha:a="))
        {
            let a: f64 = rest
                .parse()
                .map_err(|_| DivergenceError::Unknown(s.to_string()))?;
            return Self::alpha(a);
        }
        Ok(match lower.as_str() {
            "chi2" => Self::chi2(),
            "chi2*" | "neyman_chi2" => Self::chi2().conjugate(),
            "hellinger" => Self::hellinger(),
            "kl" => Self::kl(),
            "kl*" | "reverse_kl" => Self::kl().conjugate(),
            "tv" => Self::tv(),
            "js" => Self::js(),
            "lecam" => Self::lecam(),
            "jeffrey" => Self::jeffrey(),
            _ => return Err(DivergenceError::Unknown(s.to_string())),
        })
    }
}

/// One edge term `w·f(v/w)` under the Csiszár conventions.
pub fn edge_term(spec: &DivergenceSpec, v: f64, w: f64) -> f64 {
    if w > 0.0 {
        if v > 0.0 {
            w * spec.f(v / w)
        } else {
            w * spec.f_at_0()
        }
    } else if v > 0.0 {
        v * spec.slope_at_infinity()
    } else {
        0.0
    }
}

/// D_f(M‖L) = Σ_x π(x) Σ_{y≠x} L(x,y)·f(M(x,y)/L(x,y)). Infinite terms
/// propagate as +∞.
pub fn f_divergence(
    m: &Generator,
    l: &Generator,
    pi: &Distribution,
    spec: &DivergenceSpec,
) -> Result<f64> {
    divergence_impl(m, l, pi, spec, false)
}

/// As [`f_divergence`] but fails with `UndefinedTerm` on the first
/// infinite edge term.
pub fn f_divergence_strict(
    m: &Generator,
    l: &Generator,
    pi: &Distribution,
    spec: &DivergenceSpec,
) -> Result<f64> {
    divergence_impl(m, l, pi, spec, true)
}

fn divergence_impl(
    m: &Generator,
    l: &Generator,
    pi: &Distribution,
    spec: &DivergenceSpec,
    strict: bool,
) -> Result<f64> {
    check_same_size(m, l)?;
    check_pi(l, pi)?;
    let n = l.n();
    let mut terms = Vec::with_capacity(n * (n - 1));
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let t = pi[x] * edge_term(spec, m.rate(x, y), l.rate(x, y));
            if t.is_infinite() {
                if strict {
                    return Err(DivergenceError::UndefinedTerm { x, y });
                }
                return Ok(f64::INFINITY);
            }
            terms.push(t);
        }
    }
    Ok(kahan_sum(terms).max(0.0))
}

/// D̄_f(L‖M) = D_f(L‖(L+M)/2).
pub fn dbar_divergence(
    l: &Generator,
    m: &Generator,
    pi: &Distribution,
    spec: &DivergenceSpec,
) -> Result<f64> {
    let mid = l.midpoint(m)?;
    f_divergence(l, &mid, pi, spec)
}

/// Jensen-Shannon divergence D̄_kl(L‖M) + D̄_kl(M‖L).
pub fn jensen_shannon(l: &Generator, m: &Generator, pi: &Distribution) -> Result<f64> {
    let kl = DivergenceSpec::kl();
    Ok(dbar_divergence(l, m, pi, &kl)? + dbar_divergence(m, l, pi, &kl)?)
}

/// Vincze-Le Cam divergence 2·D̄_χ²(L‖M).
pub fn le_cam(l: &Generator, m: &Generator, pi: &Distribution) -> Result<f64> {
    Ok(2.0 * dbar_divergence(l, m, pi, &DivergenceSpec::chi2())?)
}

/// Maps an alpha-divergence value to the Rényi scale.
pub fn renyi_from_alpha_divergence(d: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(DivergenceError::BadAlpha(alpha));
    }
    Ok((alpha * (alpha - 1.0) * d).ln_1p() / (alpha - 1.0))
}

/// R_α(M‖L) = ln(1 + α(α−1)·D_α(M‖L)) / (α−1), for α > 1.
pub fn renyi_divergence(m: &Generator, l: &Generator, pi: &Distribution, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(DivergenceError::BadAlpha(alpha));
    }
    let d = f_divergence(m, l, pi, &DivergenceSpec::alpha(alpha)?)?;
    renyi_from_alpha_divergence(d, alpha)
}

/// Both sides of the χ² approximation: `lhs = |D_f(L‖M) − f″(1)/2·D_χ²(L‖M)|`
/// and `bound = ‖f‴‖_{[m_lo, m_hi]}·(m_hi − m_lo)³ / 6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2Approximation {
    pub lhs: f64,
    pub bound: f64,
    pub m_lo: f64,
    pub m_hi: f64,
}

/// Extreme ratios L(x,y)/M(x,y) over edges where both rates are positive.
pub fn ratio_range(l: &Generator, m: &Generator) -> Result<(f64, f64)> {
    check_same_size(l, m)?;
    let n = l.n();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in 0..n {
        for y in 0..n {
            if x != y && l.rate(x, y) > 0.0 && m.rate(x, y) > 0.0 {
                let r = l.rate(x, y) / m.rate(x, y);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    if lo > hi {
        return Err(DivergenceError::NoComparableEdges);
    }
    Ok((lo, hi))
}

/// The third-order Taylor remainder term `‖f‴‖·(m̄ − m̲)³ / 6` for (L, M).
pub fn taylor_remainder_bound(l: &Generator, m: &Generator, spec: &DivergenceSpec) -> Result<f64> {
    let (lo, hi) = ratio_range(l, m)?;
    remainder(spec, lo, hi)
}

fn remainder(spec: &DivergenceSpec, lo: f64, hi: f64) -> Result<f64> {
    let sup = spec
        .f_third_sup(lo, hi)
        .ok_or_else(|| DivergenceError::NotSmooth(spec.name()))?;
    let width = hi - lo;
    if width == 0.0 {
        return Ok(0.0);
    }
    Ok(sup * width.powi(3) / 6.0)
}

pub fn chi2_approximation_bound(
    l: &Generator,
    m: &Generator,
    pi: &Distribution,
    spec: &DivergenceSpec,
) -> Result<Chi2Approximation> {
    let second = spec
        .f_second_at_1()
        .ok_or_else(|| DivergenceError::NotSmooth(spec.name()))?;
    let (m_lo, m_hi) = ratio_range(l, m)?;
    let bound = remainder(spec, m_lo, m_hi)?;
    let df = f_divergence(l, m, pi, spec)?;
    let dchi = f_divergence(l, m, pi, &DivergenceSpec::chi2())?;
    let lhs = extended_abs_diff(df, 0.5 * second * dchi);
    Ok(Chi2Approximation {
        lhs,
        bound,
        m_lo,
        m_hi,
    })
}

/// |a − b| where ∞ − ∞ counts as an unbounded discrepancy.
pub(crate) fn extended_abs_diff(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        if a == b && a.is_infinite() && !(a - b).is_nan() {
            return 0.0;
        }
        return f64::INFINITY;
    }
    (a - b).abs()
}
