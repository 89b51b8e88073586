//! Registered test functions.
//!
//! Grammar accepted by [`ScalarFunction::from_registry`]:
//!
//! | name            | f(t)                    | class      |
//! |-----------------|-------------------------|------------|
//! | `poly:c0,c1,..` | `c0 + c1 t + c2 t^2 ..` | by degree  |
//! | `exp-decay`     | `e^{-t}`                | bounded    |
//! | `sin`           | `sin t`                 | bounded    |
//! | `abs:c`         | `abs(t - c)`            | linear     |
//! | `runge`         | `1 / (1 + 25 t^2)`      | bounded    |

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const REGISTRY: [&str; 5] = ["poly:c0,c1,...", "exp-decay", "sin", "abs:c", "runge"];

/// Growth class on `[0, inf)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthClass {
    Bounded,
    Linear,
    Quadratic,
    /// Polynomial growth of the given degree, beyond the quadratic class.
    Polynomial(u32),
}

impl GrowthClass {
    pub fn degree(self) -> u32 {
        match self {
            GrowthClass::Bounded => 0,
            GrowthClass::Linear => 1,
            GrowthClass::Quadratic => 2,
            GrowthClass::Polynomial(d) => d,
        }
    }

    pub fn from_degree(d: u32) -> Self {
        match d {
            0 => GrowthClass::Bounded,
            1 => GrowthClass::Linear,
            2 => GrowthClass::Quadratic,
            d => GrowthClass::Polynomial(d),
        }
    }

    /// Whether `|f(x)| <= M_f (1 + x^2)` holds for the class.
    pub fn is_quadratic_class(self) -> bool {
        self.degree() <= 2
    }
}

/// A real function on `[0, inf)` together with what the error bounds need to
/// know about it.
///
/// `growth_constant` is `M_f` in `|f(x)| <= M_f (1 + x^2)` for classes up to
/// quadratic and in `|f(x)| <= M_f (1 + x^d)` for [`GrowthClass::Polynomial`].
#[derive(Clone)]
pub struct ScalarFunction {
    name: String,
    eval: RealFn,
    d1: Option<RealFn>,
    d2: Option<RealFn>,
    growth: GrowthClass,
    growth_constant: f64,
    lipschitz: Option<f64>,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("name", &self.name)
            .field("growth", &self.growth)
            .field("growth_constant", &self.growth_constant)
            .field("lipschitz", &self.lipschitz)
            .field("has_d1", &self.d1.is_some())
            .field("has_d2", &self.d2.is_some())
            .finish()
    }
}

impl ScalarFunction {
    pub fn new<F>(name: impl Into<String>, eval: F, growth: GrowthClass, growth_constant: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ScalarFunction {
            name: name.into(),
            eval: Arc::new(eval),
            d1: None,
            d2: None,
            growth,
            growth_constant,
            lipschitz: None,
        }
    }

    pub fn with_d1<F>(mut self, d1: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.d1 = Some(Arc::new(d1));
        self
    }

    pub fn with_d2<F>(mut self, d2: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.d2 = Some(Arc::new(d2));
        self
    }

    /// Global Lipschitz constant (exponent 1), when one exists.
    pub fn with_lipschitz(mut self, constant: f64) -> Self {
        self.lipschitz = Some(constant);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn d1(&self, x: f64) -> Option<f64> {
        self.d1.as_ref().map(|d| d(x))
    }

    pub fn d2(&self, x: f64) -> Option<f64> {
        self.d2.as_ref().map(|d| d(x))
    }

    pub fn has_d2(&self) -> bool {
        self.d2.is_some()
    }

    pub fn growth(&self) -> GrowthClass {
        self.growth
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// `t -> c0 + c1 t + ...`; trailing zero coefficients do not count
    /// towards the degree.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let mut c: Vec<f64> = coeffs.to_vec();
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        let degree = (c.len() - 1) as u32;
        let growth = GrowthClass::from_degree(degree);
        let abs: Vec<f64> = c.iter().map(|v| v.abs()).collect();
        let growth_constant = match degree {
            0 => abs[0],
            // x <= (1 + x^2) / 2
            1 => abs[0] + abs[1] / 2.0,
            2 => abs[0] + abs[1] / 2.0 + abs[2],
            _ => abs.iter().sum(),
        };
        let name = format!(
            "poly:{}",
            coeffs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        );

        let d1c: Vec<f64> = c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect();
        let d2c: Vec<f64> = d1c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect();
        let lipschitz = match degree {
            0 => Some(0.0),
            1 => Some(abs[1]),
            _ => None,
        };

        let mut f = ScalarFunction::new(name, move |t| horner(&c, t), growth, growth_constant)
            .with_d1(move |t| horner(&d1c, t))
            .with_d2(move |t| horner(&d2c, t));
        f.lipschitz = lipschitz;
        f
    }

    /// `t -> t^j`.
    pub fn monomial(j: usize) -> Self {
        let mut c = vec![0.0; j + 1];
        c[j] = 1.0;
        Self::polynomial(&c)
    }

    pub fn exp_decay() -> Self {
        ScalarFunction::new("exp-decay", |t: f64| (-t).exp(), GrowthClass::Bounded, 1.0)
            .with_d1(|t: f64| -(-t).exp())
            .with_d2(|t: f64| (-t).exp())
            .with_lipschitz(1.0)
    }

    pub fn sin() -> Self {
        ScalarFunction::new("sin", f64::sin, GrowthClass::Bounded, 1.0)
            .with_d1(f64::cos)
            .with_d2(|t: f64| -t.sin())
            .with_lipschitz(1.0)
    }

    pub fn abs_shift(c: f64) -> Self {
        // |t - c| <= |c| (1 + t^2) + (1 + t^2) / 2
        ScalarFunction::new(
            format!("abs:{c}"),
            move |t: f64| (t - c).abs(),
            GrowthClass::Linear,
            c.abs() + 0.5,
        )
        .with_lipschitz(1.0)
    }

    pub fn runge() -> Self {
        // max |f'| at t = 1 / (5 sqrt 3)
        let lip = 15.0 * 3f64.sqrt() / 8.0;
        ScalarFunction::new("runge", |t: f64| 1.0 / (1.0 + 25.0 * t * t), GrowthClass::Bounded, 1.0)
            .with_d1(|t: f64| {
                let q = 1.0 + 25.0 * t * t;
                -50.0 * t / (q * q)
            })
            .with_d2(|t: f64| {
                let q = 1.0 + 25.0 * t * t;
                50.0 * (75.0 * t * t - 1.0) / (q * q * q)
            })
            .with_lipschitz(lip)
    }

    /// Look up a function by its registry spelling.
    pub fn from_registry(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let unknown = || domain(format!("unknown function `{spec}`; registry: {}", REGISTRY.join(", ")));
        if let Some(rest) = spec.strip_prefix("poly:") {
            let coeffs: std::result::Result<Vec<f64>, _> = rest.split(',').map(|s| s.trim().parse::<f64>()).collect();
            return match coeffs {
                Ok(c) if !c.is_empty() && c.iter().all(|v| v.is_finite()) => {
                    let mut f = Self::polynomial(&c);
                    f.name = spec.to_string();
                    Ok(f)
                }
                _ => domain(format!("bad polynomial coefficients in `{spec}`")),
            };
        }
        if let Some(rest) = spec.strip_prefix("abs:") {
            return match rest.trim().parse::<f64>() {
                Ok(c) if c.is_finite() => {
                    let mut f = Self::abs_shift(c);
                    f.name = spec.to_string();
                    Ok(f)
                }
                _ => domain(format!("bad shift in `{spec}`")),
            };
        }
        match spec {
            "exp-decay" => Ok(Self::exp_decay()),
            "sin" => Ok(Self::sin()),
            "runge" => Ok(Self::runge()),
            _ => unknown(),
        }
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * t + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_registered() -> Vec<ScalarFunction> {
        [
            "poly:1,-2,0.5",
            "poly:0,0,1",
            "poly:3",
            "poly:1,2,0,1",
            "exp-decay",
            "sin",
            "abs:1",
            "runge",
        ]
        .iter()
        .map(|s| ScalarFunction::from_registry(s).unwrap())
        .collect()
    }

    #[test]
    fn registry_parses() {
        let f = ScalarFunction::from_registry("poly:0,0,1").unwrap();
        assert_eq!(f.eval(3.0), 9.0);
        assert_eq!(f.growth(), GrowthClass::Quadratic);
        assert_eq!(f.growth_constant(), 1.0);
        assert_eq!(f.name(), "poly:0,0,1");
        let f = ScalarFunction::from_registry("poly:2,0,0").unwrap();
        assert_eq!(f.growth(), GrowthClass::Bounded);
        let f = ScalarFunction::from_registry("abs:1.5").unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        assert!(f.d2(1.0).is_none());
        assert_eq!(
            ScalarFunction::from_registry("poly:1,1,1,1").unwrap().growth(),
            GrowthClass::Polynomial(3)
        );
    }

    #[test]
    fn unknown_name_lists_registry() {
        let err = ScalarFunction::from_registry("cosh").unwrap_err().to_string();
        for name in REGISTRY {
            assert!(err.contains(name), "{err}");
        }
        assert!(ScalarFunction::from_registry("poly:").is_err());
        assert!(ScalarFunction::from_registry("poly:1,x").is_err());
        assert!(ScalarFunction::from_registry("abs:").is_err());
    }

    #[test]
    fn growth_constants_hold_on_grid() {
        for f in all_registered() {
            let d = f.growth().degree().max(2) as i32;
            for i in 0..=20_000 {
                let x = i as f64 * 0.01;
                let env = if f.growth().is_quadratic_class() {
                    1.0 + x * x
                } else {
                    1.0 + x.powi(d)
                };
                assert!(
                    f.eval(x).abs() <= f.growth_constant() * env + 1e-12,
                    "{} at {x}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn lipschitz_constants_hold_on_grid() {
        for f in all_registered() {
            let Some(lip) = f.lipschitz() else { continue };
            let h = 1e-3;
            for i in 0..10_000 {
                let x = i as f64 * h;
                let slope = (f.eval(x + h) - f.eval(x)).abs() / h;
                assert!(slope <= lip + 1e-9, "{} at {x}: {slope} > {lip}", f.name());
            }
        }
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        let h = 1e-4;
        for f in all_registered() {
            if !f.has_d2() {
                continue;
            }
            for i in 1..=100 {
                let x = i as f64 * 0.1;
                let fd = (f.eval(x + h) - 2.0 * f.eval(x) + f.eval(x - h)) / (h * h);
                let d2 = f.d2(x).unwrap();
                // 1e-4 relative, plus the stencil's own cancellation error
                let roundoff = 4.0 * f64::EPSILON * f.eval(x).abs().max(1.0) / (h * h);
                assert!(
                    (fd - d2).abs() <= 1e-4 * d2.abs() + roundoff,
                    "{} at {x}: fd {fd} vs {d2}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn first_derivatives_match_central_differences() {
        let h = 1e-6;
        for f in all_registered() {
            for i in 1..=100 {
                let x = i as f64 * 0.1;
                if let Some(d1) = f.d1(x) {
                    let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
                    assert!((fd - d1).abs() <= 1e-6 * d1.abs().max(1.0), "{} at {x}", f.name());
                }
            }
        }
    }
}
