//! Evaluation of the operators on registered functions.
//!
//! All three operators sample `f` at `k / n` and differ only in the weights:
//! `P_n` uses [`WeightKind::NewFamily`], Jain uses [`WeightKind::Jain`], and
//! Szász–Mirakyan is `P_n` at `beta = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::functions::ScalarFunction;
use crate::weights::{series_sum, BetaParam, Growth, SeriesSum, TruncationPolicy, WeightKind};

/// Largest admissible evaluation point.
pub const X_MAX: f64 = 1e6;

/// `(n, beta)` for one operator instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    n: u64,
    beta: BetaParam,
}

impl OperatorParams {
    pub fn new(n: u64, beta: BetaParam) -> Result<Self> {
        if n == 0 {
            return domain("n must be a positive integer");
        }
        Ok(OperatorParams { n, beta })
    }

    /// Shorthand validating a raw `beta`.
    pub fn with_beta(n: u64, beta: f64) -> Result<Self> {
        Self::new(n, BetaParam::new(beta)?)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn beta(&self) -> BetaParam {
        self.beta
    }

    #[inline]
    pub(crate) fn nf(&self) -> f64 {
        self.n as f64
    }
}

pub(crate) fn check_x(x: f64) -> Result<()> {
    if !(0.0..=X_MAX).contains(&x) {
        return domain(format!("x must lie in [0, {X_MAX:e}], got {x}"));
    }
    Ok(())
}

fn growth_of(f: &ScalarFunction, n: f64) -> Growth {
    Growth::poly(f.growth().degree(), 1.0 / n)
}

/// `sum_k weight(k, n x) f(k / n)` with the full truncation record.
pub fn apply_sum(
    kind: WeightKind,
    f: &ScalarFunction,
    params: OperatorParams,
    x: f64,
    policy: &TruncationPolicy,
) -> Result<SeriesSum> {
    check_x(x)?;
    let n = params.nf();
    series_sum(
        |k| f.eval(k as f64 / n),
        n * x,
        params.beta(),
        kind,
        growth_of(f, n),
        policy,
    )
}

/// `P_n(f, x)`.
pub fn apply_p(f: &ScalarFunction, params: OperatorParams, x: f64, policy: &TruncationPolicy) -> Result<f64> {
    apply_sum(WeightKind::NewFamily, f, params, x, policy).map(|s| s.value)
}

/// Jain operator `J_n(f, x)`.
pub fn apply_jain(f: &ScalarFunction, params: OperatorParams, x: f64, policy: &TruncationPolicy) -> Result<f64> {
    apply_sum(WeightKind::Jain, f, params, x, policy).map(|s| s.value)
}

/// Szász–Mirakyan operator, i.e. [`apply_p`] with `beta = 0`.
pub fn apply_szasz(f: &ScalarFunction, n: u64, x: f64, policy: &TruncationPolicy) -> Result<f64> {
    apply_p(f, OperatorParams::new(n, BetaParam::ZERO)?, x, policy)
}

/// `P_n(f, x) - f(x)`, summed as `sum_k p(k) (f(k/n) - f(x))`.
///
/// Summing the differences keeps the rounding error proportional to the
/// deviation instead of to `|f(x)|`, which matters once the deviation is
/// multiplied by `n` (Voronovskaya residuals) or compared against `1e-12`.
pub fn deviation(f: &ScalarFunction, params: OperatorParams, x: f64, policy: &TruncationPolicy) -> Result<SeriesSum> {
    check_x(x)?;
    let n = params.nf();
    let fx = f.eval(x);
    series_sum(
        |k| f.eval(k as f64 / n) - fx,
        n * x,
        params.beta(),
        WeightKind::NewFamily,
        growth_of(f, n),
        policy,
    )
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn params(n: u64, b: f64) -> OperatorParams {
        OperatorParams::with_beta(n, b).unwrap()
    }

    /// Poisson(l) weights by recurrence from the mode outwards.
    fn poisson_weights(l: f64, k_max: usize) -> Vec<f64> {
        let mut w = vec![0.0; k_max + 1];
        w[0] = (-l).exp();
        for k in 1..=k_max {
            w[k] = w[k - 1] * l / k as f64;
        }
        w
    }

    #[test]
    fn rejects_bad_inputs() {
        let pol = TruncationPolicy::default();
        let t = ScalarFunction::monomial(1);
        assert!(OperatorParams::with_beta(0, 0.1).is_err());
        assert!(OperatorParams::with_beta(3, 1.0).is_err());
        assert!(apply_p(&t, params(3, 0.1), -0.5, &pol).is_err());
        assert!(apply_p(&t, params(3, 0.1), 2e6, &pol).is_err());
    }

    #[test]
    fn apply_p_examples() {
        let pol = TruncationPolicy::new(1e-14, 1_000_000).unwrap();
        let one = ScalarFunction::monomial(0);
        let t = ScalarFunction::monomial(1);
        for &(n, b, x) in &[(1, 0.0, 0.0), (5, 0.3, 1.0), (50, 0.9, 2.5), (7, 0.5, 0.0)] {
            let v = apply_p(&one, params(n, b), x, &pol).unwrap();
            assert!((v - 1.0).abs() < 1e-13);
        }
        assert!((apply_p(&t, params(10, 0.0), 2.0, &pol).unwrap() - 2.0).abs() < 1e-13);
        // 1/0.9 + 0.1 / (10 * 0.81)
        let v = apply_p(&t, params(10, 0.1), 1.0, &pol).unwrap();
        assert!((v - 1.1234567901234568).abs() < 1e-13, "{v}");
    }

    #[test]
    fn apply_jain_examples() {
        let pol = TruncationPolicy::new(1e-14, 1_000_000).unwrap();
        let one = ScalarFunction::monomial(0);
        let t = ScalarFunction::monomial(1);
        assert!((apply_jain(&one, params(5, 0.3), 1.0, &pol).unwrap() - 1.0).abs() < 1e-13);
        assert!((apply_jain(&t, params(10, 0.0), 2.0, &pol).unwrap() - 2.0).abs() < 1e-13);
        let v = apply_jain(&t, params(10, 0.1), 1.0, &pol).unwrap();
        assert!((v - 1.0 / 0.9).abs() < 1e-13, "{v}");
        for f in [ScalarFunction::exp_decay(), ScalarFunction::monomial(2)] {
            let a = apply_jain(&f, params(20, 0.0), 0.7, &pol).unwrap();
            let b = apply_p(&f, params(20, 0.0), 0.7, &pol).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn apply_szasz_examples() {
        let pol = TruncationPolicy::default();
        let t2 = ScalarFunction::monomial(2);
        assert!((apply_szasz(&t2, 10, 1.0, &pol).unwrap() - 1.1).abs() < 1e-12);
        assert!((apply_szasz(&ScalarFunction::monomial(0), 10, 3.0, &pol).unwrap() - 1.0).abs() < 1e-12);

        let f = ScalarFunction::exp_decay();
        let w = poisson_weights(50.0, 400);
        let oracle: f64 = w
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * (-(k as f64) / 50.0).exp())
            .sum();
        let v = apply_szasz(&f, 50, 1.0, &pol).unwrap();
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
        assert_eq!(v, apply_p(&f, params(50, 0.0), 1.0, &pol).unwrap());
    }

    #[test]
    fn first_moment_intercepts() {
        let pol = TruncationPolicy::default();
        let t = ScalarFunction::monomial(1);
        for &b in &[0.1, 0.5] {
            for &n in &[10u64, 100] {
                let p = apply_p(&t, params(n, b), 0.0, &pol).unwrap();
                let want = b / (n as f64 * (1.0 - b) * (1.0 - b));
                assert!((p - want).abs() < 1e-12);
                assert!(apply_jain(&t, params(n, b), 0.0, &pol).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deviation_matches_difference() {
        let pol = TruncationPolicy::default();
        let f = ScalarFunction::sin();
        let p = params(40, 0.05);
        let d = deviation(&f, p, 1.3, &pol).unwrap().value;
        let v = apply_p(&f, p, 1.3, &pol).unwrap() - f.eval(1.3);
        assert!((d - v).abs() < 1e-12);
        // t^2 at beta = 0: P f - f = x / n exactly
        let tight = TruncationPolicy::new(1e-14, 1_000_000).unwrap();
        let t2 = ScalarFunction::monomial(2);
        let d = deviation(&t2, params(1000, 0.0), 1.0, &tight).unwrap().value;
        assert!((1000.0 * d - 1.0).abs() < 1e-12, "{}", 1000.0 * d);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn registered() -> Vec<ScalarFunction> {
            ["poly:1,-2,0.5", "exp-decay", "sin", "abs:1", "runge"]
                .iter()
                .map(|s| ScalarFunction::from_registry(s).unwrap())
                .collect()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn linearity(a in -2.0f64..2.0, b in -2.0f64..2.0, i in 0usize..5, j in 0usize..5,
                         n in 1u64..200, beta in 0.0f64..0.9, x in 0.0f64..5.0) {
                let pol = TruncationPolicy::default();
                let fs = registered();
                let (f, g) = (fs[i].clone(), fs[j].clone());
                let (f2, g2) = (f.clone(), g.clone());
                let combo = ScalarFunction::new("combo", move |t| a * f2.eval(t) + b * g2.eval(t),
                    crate::functions::GrowthClass::Quadratic, 1.0);
                let p = params(n, beta);
                let lhs = apply_p(&combo, p, x, &pol).unwrap();
                let rhs = a * apply_p(&f, p, x, &pol).unwrap() + b * apply_p(&g, p, x, &pol).unwrap();
                // truncation is certified relative to sum_k w |f(k/n)|
                let abs_of = |h: &ScalarFunction| {
                    let h2 = h.clone();
                    let ah = ScalarFunction::new("abs", move |t| h2.eval(t).abs(), h.growth(), h.growth_constant());
                    apply_p(&ah, p, x, &pol).unwrap()
                };
                let scale = 1.0 + a.abs() * abs_of(&f) + b.abs() * abs_of(&g);
                prop_assert!((lhs - rhs).abs() < 1e-10 * scale, "{} vs {}", lhs, rhs);
            }

            #[test]
            fn positivity_and_monotonicity(i in 0usize..5, n in 1u64..200, beta in 0.0f64..0.9, x in 0.0f64..5.0) {
                let pol = TruncationPolicy::default();
                let f = registered()[i].clone();
                let f2 = f.clone();
                let p = params(n, beta);
                // |f| >= 0 and f <= |f| pointwise
                let abs_f = ScalarFunction::new("abs", move |t| f2.eval(t).abs(), f.growth(), f.growth_constant());
                let pa = apply_p(&abs_f, p, x, &pol).unwrap();
                prop_assert!(pa >= 0.0);
                prop_assert!(apply_p(&f, p, x, &pol).unwrap() <= pa + 1e-12);
            }

            #[test]
            fn preserves_constants(n in 1u64..10_000, beta in 0.0f64..0.95, x in 0.0f64..50.0) {
                let pol = TruncationPolicy::default();
                let v = apply_p(&ScalarFunction::monomial(0), params(n, beta), x, &pol).unwrap();
                prop_assert!((v - 1.0).abs() < pol.epsilon());
            }
        }
    }
}
