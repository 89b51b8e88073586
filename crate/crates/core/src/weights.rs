//! Generalized-Poisson weights and certified series summation.
//!
//! Two weight families are supported, both evaluated in log space:
//!
//! * `NewFamily`: `p(k, a) = (1 - b) (a + b k)^k e^{-(a + b k)} / k!`
//! * `Jain`:      `w(k, a) = a (a + b k)^{k-1} e^{-(a + b k)} / k!`
//!
//! Each is a Poisson pmf at rate `a + b k` times a simple prefactor, which is
//! how they are computed (see [`crate::special`]). Both sum to one over
//! `k >= 0`, so the missing mass `1 - sum` of a partial sum is an exact
//! certificate for the truncated tail.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::ln_poisson_pmf;

/// Operator parameter `beta`, constrained to `0 <= beta < 1`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct BetaParam(f64);

impl BetaParam {
    pub const ZERO: BetaParam = BetaParam(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&value) {
            return domain(format!("beta must satisfy 0 ≤ β < 1, got {value}"));
        }
        Ok(BetaParam(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for BetaParam {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        BetaParam::new(value)
    }
}

impl From<BetaParam> for f64 {
    fn from(b: BetaParam) -> f64 {
        b.0
    }
}

/// Residual-mass tolerance and term cap for infinite sums.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    epsilon: f64,
    max_terms: u64,
}

impl TruncationPolicy {
    pub const DEFAULT_EPSILON: f64 = 1e-12;
    pub const DEFAULT_MAX_TERMS: u64 = 1_000_000;

    pub fn new(epsilon: f64, max_terms: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return domain(format!("epsilon must be positive, got {epsilon}"));
        }
        if max_terms == 0 {
            return domain("max_terms must be at least 1");
        }
        Ok(TruncationPolicy { epsilon, max_terms })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_terms(&self) -> u64 {
        self.max_terms
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            epsilon: Self::DEFAULT_EPSILON,
            max_terms: Self::DEFAULT_MAX_TERMS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightKind {
    NewFamily,
    Jain,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return domain(format!("alpha must be finite and ≥ 0, got {alpha}"));
    }
    Ok(())
}

/// Log weight with arguments already validated.
pub(crate) fn ln_weight_unchecked(k: u64, alpha: f64, beta: f64, kind: WeightKind) -> f64 {
    if beta == 0.0 {
        return ln_poisson_pmf(k, alpha);
    }
    let rate = alpha + beta * k as f64;
    match kind {
        WeightKind::NewFamily => (-beta).ln_1p() + ln_poisson_pmf(k, rate),
        WeightKind::Jain => {
            if k == 0 {
                -alpha
            } else if alpha == 0.0 {
                f64::NEG_INFINITY
            } else {
                alpha.ln() - rate.ln() + ln_poisson_pmf(k, rate)
            }
        }
    }
}

/// Natural log of the weight of index `k` at `alpha`; `-inf` for zero weights.
pub fn log_weight(k: u64, alpha: f64, beta: BetaParam, kind: WeightKind) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(ln_weight_unchecked(k, alpha, beta.value(), kind))
}

pub fn weight(k: u64, alpha: f64, beta: BetaParam, kind: WeightKind) -> Result<f64> {
    log_weight(k, alpha, beta, kind).map(f64::exp)
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Smallest `K` with `1 - sum_{k <= K} weight(k) < epsilon`.
pub fn truncation_index(alpha: f64, beta: BetaParam, kind: WeightKind, policy: &TruncationPolicy) -> Result<u64> {
    check_alpha(alpha)?;
    let mut mass = CompensatedSum::default();
    for k in 0..policy.max_terms {
        mass.add(ln_weight_unchecked(k, alpha, beta.value(), kind).exp());
        if 1.0 - mass.value() < policy.epsilon {
            return Ok(k);
        }
    }
    Err(Error::CapExhausted {
        max_terms: policy.max_terms,
        mass: mass.value(),
    })
}

/// Polynomial growth of a summand: `|g(k)| <= max(1, (scale * k)^degree)` in the tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Growth {
    pub degree: u32,
    pub scale: f64,
}

impl Growth {
    pub const BOUNDED: Growth = Growth { degree: 0, scale: 1.0 };

    pub fn poly(degree: u32, scale: f64) -> Self {
        Growth { degree, scale }
    }

    #[inline]
    fn envelope(&self, k: u64) -> f64 {
        if self.degree == 0 {
            1.0
        } else {
            (self.scale * k as f64).max(1.0).powi(self.degree as i32)
        }
    }
}

/// Result of a certified weighted series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    /// `1 - (summed weight mass)`, clamped at zero.
    pub residual_mass: f64,
    /// Inclusive index window that was summed.
    pub first: u64,
    pub last: u64,
}

impl SeriesSum {
    pub fn terms(&self) -> u64 {
        self.last - self.first + 1
    }
}

#[derive(Default)]
struct Accumulator {
    mass: CompensatedSum,
    value: CompensatedSum,
    magnitude: CompensatedSum,
}

fn mean_index(alpha: f64, beta: f64, kind: WeightKind) -> f64 {
    let q = 1.0 - beta;
    match kind {
        WeightKind::NewFamily => alpha / q + beta / (q * q),
        WeightKind::Jain => alpha / q,
    }
}

/// `sum_k weight(k) g(k)` over a window grown outward from the mean.
///
/// Terms are added from whichever frontier carries the larger weight until the
/// missing mass drops below `policy.epsilon`. For growing `g` the window is
/// further extended until a ratio-test estimate of the neglected
/// `weight * envelope` tail is below `epsilon` relative to `sum |weight g|`.
/// Starting at the mean keeps the cost proportional to the spread of the
/// weights rather than to `alpha`.
pub fn series_sum<G>(
    g: G,
    alpha: f64,
    beta: BetaParam,
    kind: WeightKind,
    growth: Growth,
    policy: &TruncationPolicy,
) -> Result<SeriesSum>
where
    G: Fn(u64) -> f64,
{
    check_alpha(alpha)?;
    let b = beta.value();
    let w = |k: u64| ln_weight_unchecked(k, alpha, b, kind).exp();
    let eps = policy.epsilon;

    let start = mean_index(alpha, b, kind).floor() as u64;
    let mut lo = start;
    let mut hi = start;
    let mut acc = Accumulator::default();
    let add = |acc: &mut Accumulator, k: u64, wk: f64| {
        acc.mass.add(wk);
        if wk > 0.0 {
            let t = wk * g(k);
            acc.value.add(t);
            acc.magnitude.add(t.abs());
        }
    };

    let w_start = w(start);
    add(&mut acc, start, w_start);
    let mut w_hi = w_start;
    let mut w_right = w(hi + 1);
    let mut w_left = if lo > 0 { w(lo - 1) } else { 0.0 };
    let mut terms = 1u64;

    loop {
        let residual = (1.0 - acc.mass.value()).max(0.0);
        let mass_ok = residual < eps;

        let (right_ok, left_ok) = if growth.degree == 0 {
            (true, true)
        } else {
            let tol = {
                let m = acc.magnitude.value();
                eps * if m > 0.0 { m } else { 1.0 }
            };
            let env_hi = growth.envelope(hi);
            let env_next = growth.envelope(hi + 1);
            let right_ok = if w_right == 0.0 {
                true
            } else if w_hi == 0.0 {
                false
            } else {
                let q = (w_right * env_next) / (w_hi * env_hi);
                q < 1.0 && w_right * env_next / (1.0 - q) < tol
            };
            let left_ok = lo == 0 || (lo as f64) * w_left * env_hi < tol;
            (right_ok, left_ok)
        };

        if mass_ok && right_ok && left_ok {
            return Ok(SeriesSum {
                value: acc.value.value(),
                residual_mass: residual,
                first: lo,
                last: hi,
            });
        }
        if terms >= policy.max_terms {
            return Err(Error::CapExhausted {
                max_terms: policy.max_terms,
                mass: acc.mass.value(),
            });
        }

        let go_left = if !mass_ok {
            lo > 0 && w_left >= w_right
        } else {
            right_ok && !left_ok
        };
        if go_left {
            lo -= 1;
            add(&mut acc, lo, w_left);
            w_left = if lo > 0 { w(lo - 1) } else { 0.0 };
        } else {
            hi += 1;
            add(&mut acc, hi, w_right);
            w_hi = w_right;
            w_right = w(hi + 1);
        }
        terms += 1;
    }
}
