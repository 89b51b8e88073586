//! Moduli of continuity and smoothness, the weighted norm, and the error
//! bounds for `P_n`.
//!
//! Every supremum over a continuum is replaced by a grid search, so the
//! moduli returned here never exceed the true ones. A bound evaluated with an
//! under-approximated modulus that still dominates the measured error is
//! therefore a stronger check than the inequality itself.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::functions::ScalarFunction;
use crate::moments::{central_moment, delta_sq, second_moment_factor};
use crate::operators::{check_x, deviation, OperatorParams};
use crate::weights::{series_sum, Growth, TruncationPolicy, WeightKind};

/// Grids longer than this are coarsened.
const MAX_GRID: usize = 20_000_000;

/// Default `C` in `K_2(f, d) <= C w_2(f, sqrt d)`.
pub const DEFAULT_C: f64 = 4.0;

/// Default right end when `[0, inf)` is truncated for the weighted norm.
pub const DEFAULT_X_MAX: f64 = 100.0;

/// A closed interval `[a, b]` with a grid resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    a: f64,
    b: f64,
    step: f64,
}

impl Domain {
    pub fn new(a: f64, b: f64, step: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return domain(format!("domain start must be finite and ≥ 0, got {a}"));
        }
        if !(b > a && b.is_finite()) {
            return domain(format!("domain end must be finite and > {a}, got {b}"));
        }
        if !(step > 0.0 && step <= b - a) {
            return domain(format!("grid step must lie in (0, {}], got {step}", b - a));
        }
        Ok(Domain { a, b, step })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `a, a + step, ...` up to and including `b`. The last gap may be
    /// shorter than `step`.
    pub fn grid(&self) -> Vec<f64> {
        let span = self.b - self.a;
        let full = (span / self.step * (1.0 + 1e-12)).floor() as usize;
        let mut pts: Vec<f64> = (0..=full)
            .map(|i| self.a + i as f64 * self.step)
            .filter(|&t| t < self.b)
            .collect();
        pts.push(self.b);
        pts
    }
}

/// Uniform grid on `[0, a]` with spacing at most `step` that hits `a`.
fn uniform(a: f64, step: f64) -> (usize, f64) {
    let cells = ((a / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let cells = cells.min(MAX_GRID);
    (cells, a / cells as f64)
}

/// `sup { |f(t) - f(x)| : x, t in [0, a], |t - x| <= delta }` by grid search.
///
/// `step` defaults to `delta / 100`. A `delta` larger than `a` is clamped to
/// `a`.
pub fn modulus_continuity(f: &ScalarFunction, a: f64, delta: f64, step: Option<f64>) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return domain(format!("interval end must be finite and > 0, got {a}"));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return domain(format!("delta must be finite and ≥ 0, got {delta}"));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let delta = delta.min(a);
    let step = step.unwrap_or(delta / 100.0);
    if step.is_nan() || step <= 0.0 {
        return domain(format!("grid step must be > 0, got {step}"));
    }
    let (cells, h) = uniform(a, step);
    let width = ((delta / h) * (1.0 + 1e-9)).floor() as usize;
    let vals: Vec<f64> = (0..=cells).into_par_iter().map(|i| f.eval(i as f64 * h)).collect();
    Ok(window_spread(&vals, width))
}

/// Largest `max - min` over all windows of `width + 1` consecutive values.
fn window_spread(vals: &[f64], width: usize) -> f64 {
    let mut hi: VecDeque<usize> = VecDeque::new();
    let mut lo: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    for (i, &v) in vals.iter().enumerate() {
        while hi.back().is_some_and(|&j| vals[j] <= v) {
            hi.pop_back();
        }
        hi.push_back(i);
        while lo.back().is_some_and(|&j| vals[j] >= v) {
            lo.pop_back();
        }
        lo.push_back(i);
        let start = i.saturating_sub(width);
        while hi.front().is_some_and(|&j| j < start) {
            hi.pop_front();
        }
        while lo.front().is_some_and(|&j| j < start) {
            lo.pop_front();
        }
        best = best.max(vals[hi[0]] - vals[lo[0]]);
    }
    best
}

/// `sup { |f(x + 2h) - 2 f(x + h) + f(x)| : 0 < h <= delta, x, x + 2h in domain }`.
///
/// `x` runs over the domain grid; `h` over at most 100 equispaced values in
/// `(0, delta]` no coarser than the domain step.
pub fn second_modulus(f: &ScalarFunction, delta: f64, dom: &Domain) -> Result<f64> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return domain(format!("delta must be finite and ≥ 0, got {delta}"));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let delta = delta.min((dom.b - dom.a) / 2.0);
    let xs = dom.grid();
    let m = ((delta / dom.step).ceil() as usize).clamp(1, 100);
    let sup = (1..=m)
        .into_par_iter()
        .map(|j| {
            let h = delta * j as f64 / m as f64;
            xs.iter()
                .take_while(|&&x| x + 2.0 * h <= dom.b)
                .map(|&x| (f.eval(x + 2.0 * h) - 2.0 * f.eval(x + h) + f.eval(x)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// `sup |f(x)| / (1 + x^2)` over the grid on `[0, x_max]`.
pub fn weighted_norm(f: &ScalarFunction, x_max: f64, step: f64) -> Result<f64> {
    weighted_norm_of(|x| f.eval(x), x_max, step)
}

pub(crate) fn weighted_norm_of<F>(g: F, x_max: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(x_max > 0.0 && x_max.is_finite()) {
        return domain(format!("x_max must be finite and > 0, got {x_max}"));
    }
    let grid = Domain::new(0.0, x_max, step.min(x_max))?.grid();
    Ok(grid
        .par_iter()
        .map(|&x| g(x).abs() / (1.0 + x * x))
        .reduce(|| 0.0, f64::max))
}

/// Constants the error bounds consume but cannot derive from `f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Growth constant for the rate bound, Lipschitz constant for the
    /// Lipschitz bound.
    pub m_f: f64,
    /// Right end of `[0, a]` for the rate bound.
    pub a: f64,
    pub c: f64,
    pub alpha_exp: f64,
    /// Distance from `x` to the set where `f` is Lipschitz.
    pub dist_e: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        BoundInputs {
            m_f: 1.0,
            a: 1.0,
            c: DEFAULT_C,
            alpha_exp: 1.0,
            dist_e: 0.0,
        }
    }
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !finite_nonneg(self.m_f) {
            return domain(format!("M_f must be finite and ≥ 0, got {}", self.m_f));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return domain(format!("a must be finite and > 0, got {}", self.a));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return domain(format!("C must be finite and > 0, got {}", self.c));
        }
        if !(self.alpha_exp > 0.0 && self.alpha_exp <= 1.0) {
            return domain(format!("Lipschitz exponent must lie in (0, 1], got {}", self.alpha_exp));
        }
        if !finite_nonneg(self.dist_e) {
            return domain(format!("d(x, E) must be finite and ≥ 0, got {}", self.dist_e));
        }
        Ok(())
    }
}

/// Right end of the points `k / n` the truncated sum at `x` samples.
fn support_end(params: OperatorParams, x: f64, policy: &TruncationPolicy) -> Result<f64> {
    let n = params.n() as f64;
    let sum = series_sum(
        |_| 1.0,
        n * x,
        params.beta(),
        WeightKind::NewFamily,
        Growth::BOUNDED,
        policy,
    )?;
    Ok((sum.last as f64 / n).max(x))
}

/// Right-hand side of the local estimate
///
/// ```text
/// C w_2(f, 1/2 sqrt(A delta^2(x) + B^2)) + w(f, B)
/// A = (1 + (2 + n) b^2) / (n (1 - b)^4),  B = b (1 + n x (1 - b)) / (n (1 - b)^2)
/// ```
///
/// Both moduli are taken over `[0, R]` where `R` covers every node the
/// truncated sum at `x` touches plus the modulus arguments. `step` is the
/// grid resolution for both searches and defaults to a hundredth of each
/// modulus argument.
pub fn local_approx_bound(
    f: &ScalarFunction,
    params: OperatorParams,
    x: f64,
    inputs: &BoundInputs,
    step: Option<f64>,
    policy: &TruncationPolicy,
) -> Result<f64> {
    check_x(x)?;
    inputs.validate()?;
    let shift = central_moment(1, params, x)?;
    let h = 0.5 * (second_moment_factor(params) * delta_sq(params, x) + shift * shift).sqrt();
    let reach = support_end(params, x, policy)? + 2.0 * h.max(shift);

    let smooth = if h > 0.0 {
        let s = step.unwrap_or(h / 100.0).max(reach / MAX_GRID as f64);
        second_modulus(f, h, &Domain::new(0.0, reach, s.min(reach))?)?
    } else {
        0.0
    };
    let cont = modulus_continuity(f, reach, shift, step)?;
    Ok(inputs.c * smooth + cont)
}

/// `M_f ((A delta^2(x))^{alpha/2} + 2 d(x, E)^alpha)`.
pub fn lipschitz_bound(inputs: &BoundInputs, params: OperatorParams, x: f64) -> Result<f64> {
    check_x(x)?;
    inputs.validate()?;
    let q = second_moment_factor(params) * delta_sq(params, x);
    let al = inputs.alpha_exp;
    Ok(inputs.m_f * (q.powf(al / 2.0) + 2.0 * inputs.dist_e.powf(al)))
}

/// `K = 6 M_f (1 + a^2)(1 + a + a^2)`.
pub fn rate_constant(inputs: &BoundInputs) -> f64 {
    let a = inputs.a;
    6.0 * inputs.m_f * (1.0 + a * a) * (1.0 + a + a * a)
}

/// Uniform bound on `[0, a]`: `A K + 2 w_{a+1}(f, sqrt(A K))`.
pub fn rate_bound(f: &ScalarFunction, inputs: &BoundInputs, params: OperatorParams, step: Option<f64>) -> Result<f64> {
    inputs.validate()?;
    let q = second_moment_factor(params) * rate_constant(inputs);
    let w = modulus_continuity(f, inputs.a + 1.0, q.sqrt(), step)?;
    Ok(q + 2.0 * w)
}

/// `n (P_n(f, x) - f(x))`, to be compared with `x f''(x) / 2`.
pub fn voronovskaya_residual(
    f: &ScalarFunction,
    params: OperatorParams,
    x: f64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    if !f.has_d2() {
        return Err(Error::MissingDerivative(f.name().to_string()));
    }
    Ok(params.n() as f64 * deviation(f, params, x, policy)?.value)
}

/// `x f''(x) / 2`.
pub fn voronovskaya_limit(f: &ScalarFunction, x: f64) -> Result<f64> {
    f.d2(x)
        .map(|d| 0.5 * x * d)
        .ok_or_else(|| Error::MissingDerivative(f.name().to_string()))
}
