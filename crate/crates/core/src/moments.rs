//! Closed-form moments of `P_n` and their series oracles.
//!
//! The building block is
//!
//! ```text
//! S(r, a, b) = sum_k (a + b k)^{k + r} e^{-(a + b k)} / k!
//! ```
//!
//! which satisfies `(1 - b) S(0, a, b) = 1` and
//! `S(r, a, b) = a S(r - 1, a, b) + b S(r, a + b, b)`. Closed forms exist for
//! `r <= 4`; raw moments `P_n(t^j, x)` and central moments `P_n((t - x)^s, x)`
//! are polynomials in `x` derived from them. Each closed form is paired with a
//! direct summation that does not use it.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::operators::{check_x, OperatorParams};
use crate::weights::{series_sum, BetaParam, Growth, TruncationPolicy, WeightKind};

/// Moment order with a closed form, `0..=4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MomentOrder(u32);

impl MomentOrder {
    pub const MAX: u32 = 4;

    pub fn new(r: u32) -> Result<Self> {
        if r > Self::MAX {
            return Err(Error::UnsupportedOrder(r));
        }
        Ok(MomentOrder(r))
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = MomentOrder> {
        (0..=Self::MAX).map(MomentOrder)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return domain(format!("alpha must be finite and ≥ 0, got {alpha}"));
    }
    Ok(())
}

/// Closed form of `S(r, alpha, beta)`.
pub fn s_closed(r: MomentOrder, alpha: f64, beta: BetaParam) -> Result<f64> {
    check_alpha(alpha)?;
    let a = alpha;
    let b = beta.value();
    let q = 1.0 - b;
    let (b2, b3, b4) = (b * b, b * b * b, b * b * b * b);
    Ok(match r.value() {
        0 => 1.0 / q,
        1 => a / q.powi(2) + b2 / q.powi(3),
        2 => a * a / q.powi(3) + 3.0 * a * b2 / q.powi(4) + b3 * (1.0 + 2.0 * b) / q.powi(5),
        3 => {
            a.powi(3) / q.powi(4)
                + 6.0 * a * a * b2 / q.powi(5)
                + a * b3 * (4.0 + 11.0 * b) / q.powi(6)
                + b4 * (1.0 + 8.0 * b + 6.0 * b2) / q.powi(7)
        }
        4 => {
            a.powi(4) / q.powi(5)
                + 10.0 * a.powi(3) * b2 / q.powi(6)
                + 5.0 * a * a * b3 * (2.0 + 7.0 * b) / q.powi(7)
                + 5.0 * a * b4 * (1.0 + 10.0 * b + 10.0 * b2) / q.powi(8)
                + b4 * b * (1.0 + 22.0 * b + 58.0 * b2 + 24.0 * b3) / q.powi(9)
        }
        _ => unreachable!("MomentOrder is bounded"),
    })
}

/// `S(r, alpha, beta)` by direct summation, for any `r`.
pub fn s_series(r: u32, alpha: f64, beta: BetaParam, policy: &TruncationPolicy) -> Result<f64> {
    let b = beta.value();
    // (a + b k)^{k+r} e^{-(a+bk)} / k! = p(k) (a + b k)^r / (1 - b)
    let sum = series_sum(
        |k| (alpha + b * k as f64).powi(r as i32),
        alpha,
        beta,
        WeightKind::NewFamily,
        Growth::poly(r, 1.0 + b),
        policy,
    )?;
    Ok(sum.value / (1.0 - b))
}

/// `P_n(t^j, x)` in closed form.
pub fn raw_moment(j: MomentOrder, params: OperatorParams, x: f64) -> Result<f64> {
    check_x(x)?;
    let n = params.nf();
    let b = params.beta().value();
    let q = 1.0 - b;
    let b2 = b * b;
    Ok(match j.value() {
        0 => 1.0,
        1 => x / q + b / (n * q * q),
        2 => x * x / q.powi(2) + x * (1.0 + 2.0 * b) / (n * q.powi(3)) + b * (1.0 + 2.0 * b) / (n * n * q.powi(4)),
        3 => {
            let c = 1.0 + 8.0 * b + 6.0 * b2;
            x.powi(3) / q.powi(3)
                + 3.0 * x * x * (1.0 + b) / (n * q.powi(4))
                + x * c / (n.powi(2) * q.powi(5))
                + b * c / (n.powi(3) * q.powi(6))
        }
        4 => {
            let c = 1.0 + 22.0 * b + 58.0 * b2 + 24.0 * b2 * b;
            x.powi(4) / q.powi(4)
                + 2.0 * x.powi(3) * (3.0 + 2.0 * b) / (n * q.powi(5))
                + x * x * (7.0 + 26.0 * b + 12.0 * b2) / (n.powi(2) * q.powi(6))
                + x * c / (n.powi(3) * q.powi(7))
                + b * c / (n.powi(4) * q.powi(8))
        }
        _ => unreachable!("MomentOrder is bounded"),
    })
}

/// `P_n((t - x)^s, x)` in closed form, `s` in `1..=4`.
pub fn central_moment(s: u32, params: OperatorParams, x: f64) -> Result<f64> {
    check_x(x)?;
    let n = params.nf();
    let b = params.beta().value();
    let q = 1.0 - b;
    let (b2, b3, b4) = (b * b, b * b * b, b * b * b * b);
    Ok(match s {
        1 => x * b / q + b / (n * q * q),
        2 => {
            x * x * b2 / q.powi(2) + x * (1.0 + 2.0 * b2) / (n * q.powi(3)) + b * (1.0 + 2.0 * b) / (n * n * q.powi(4))
        }
        3 => {
            x.powi(3) * b3 / q.powi(3)
                + 3.0 * x * x * b * (1.0 + b2) / (n * q.powi(4))
                + x * (1.0 + 5.0 * b + 3.0 * b2 + 6.0 * b3) / (n.powi(2) * q.powi(5))
                + b * (1.0 + 8.0 * b + 6.0 * b2) / (n.powi(3) * q.powi(6))
        }
        4 => {
            x.powi(4) * b4 / q.powi(4)
                + 2.0 * x.powi(3) * b2 * (3.0 + 2.0 * b2) / (n * q.powi(5))
                + x * x * (3.0 + 4.0 * b + 20.0 * b2 + 6.0 * b3 + 12.0 * b4) / (n.powi(2) * q.powi(6))
                + x * (1.0 + 18.0 * b + 30.0 * b2 + 32.0 * b3 + 24.0 * b4) / (n.powi(3) * q.powi(7))
                + b * (1.0 + 22.0 * b + 58.0 * b2 + 24.0 * b3) / (n.powi(4) * q.powi(8))
        }
        other => return Err(Error::UnsupportedOrder(other)),
    })
}

/// `sum_k p(k, n x) (t^j)` with `t = k / n`, by direct summation.
pub fn raw_moment_series(j: u32, params: OperatorParams, x: f64, policy: &TruncationPolicy) -> Result<f64> {
    check_x(x)?;
    let n = params.nf();
    series_sum(
        |k| (k as f64 / n).powi(j as i32),
        n * x,
        params.beta(),
        WeightKind::NewFamily,
        Growth::poly(j, 1.0 / n),
        policy,
    )
    .map(|s| s.value)
}

/// `sum_k p(k, n x) (k/n - x)^s` by direct summation, `s` in `1..=8`.
///
/// Each term is raised to the power as is; expanding `(k/n - x)^s` into raw
/// moments would reintroduce the cancellation the closed forms avoid.
pub fn central_moment_series(s: u32, params: OperatorParams, x: f64, policy: &TruncationPolicy) -> Result<f64> {
    if !(1..=8).contains(&s) {
        return Err(Error::UnsupportedOrder(s));
    }
    check_x(x)?;
    let n = params.nf();
    series_sum(
        |k| (k as f64 / n - x).powi(s as i32),
        n * x,
        params.beta(),
        WeightKind::NewFamily,
        Growth::poly(s, 1.0 / n),
        policy,
    )
    .map(|s| s.value)
}

/// `(1 + (2 + n) b^2) / (n (1 - b)^4)`, the factor shared by the second-moment
/// bound and every error bound built on it.
pub fn second_moment_factor(params: OperatorParams) -> f64 {
    let n = params.nf();
    let b = params.beta().value();
    (1.0 + (2.0 + n) * b * b) / (n * (1.0 - b).powi(4))
}

/// `delta^2(x) = x (1 + x) + 1/n`.
pub fn delta_sq(params: OperatorParams, x: f64) -> f64 {
    x * (1.0 + x) + 1.0 / params.nf()
}

/// Upper bound for `P_n((t - x)^2, x)`:
/// `(1 + (2 + n) b^2) / (n (1 - b)^4) * (x (1 + x) + 1/n)`.
pub fn second_central_bound(params: OperatorParams, x: f64) -> f64 {
    second_moment_factor(params) * delta_sq(params, x)
}

/// `267 (x + x^2 + x^3 + x^4) / (n^4 (1 - b)^8)`.
///
/// For fixed `b > 0` this does not dominate the fourth central moment once
/// `n` is large (the `x^4 b^4 / (1 - b)^4` term does not decay); use
/// [`fourth_bound_dominates`] to check a given point.
pub fn fourth_central_bound(params: OperatorParams, x: f64) -> f64 {
    let n = params.nf();
    let b = params.beta().value();
    267.0 * (x + x * x + x.powi(3) + x.powi(4)) / (n.powi(4) * (1.0 - b).powi(8))
}

pub fn fourth_bound_dominates(params: OperatorParams, x: f64) -> Result<bool> {
    Ok(central_moment(4, params, x)? <= fourth_central_bound(params, x))
}

/// Which closed form a [`MomentReport`] compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MomentKind {
    /// `S(r, n x, b)`.
    SumS,
    Raw,
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub params: OperatorParams,
    pub x: f64,
    pub kind: MomentKind,
    pub order: u32,
    pub closed: f64,
    pub series: f64,
    pub rel_err: f64,
}

pub fn rel_err(closed: f64, series: f64) -> f64 {
    (closed - series).abs() / closed.abs().max(1e-300)
}

/// Compare one closed form against its series oracle at `(params, x)`.
pub fn moment_report(
    kind: MomentKind,
    order: u32,
    params: OperatorParams,
    x: f64,
    policy: &TruncationPolicy,
) -> Result<MomentReport> {
    let (closed, series) = match kind {
        MomentKind::SumS => {
            let alpha = params.nf() * x;
            (
                s_closed(MomentOrder::new(order)?, alpha, params.beta())?,
                s_series(order, alpha, params.beta(), policy)?,
            )
        }
        MomentKind::Raw => (
            raw_moment(MomentOrder::new(order)?, params, x)?,
            raw_moment_series(order, params, x, policy)?,
        ),
        MomentKind::Central => (
            central_moment(order, params, x)?,
            central_moment_series(order, params, x, policy)?,
        ),
    };
    Ok(MomentReport {
        params,
        x,
        kind,
        order,
        closed,
        series,
        rel_err: rel_err(closed, series),
    })
}
