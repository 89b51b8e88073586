//! Log-space Poisson probabilities.
//!
//! `ln k!` is split as `(k + 1/2) ln k - k + ln sqrt(2 pi) + stirlerr(k)` and
//! the deviance part `k ln(k/lambda) + lambda - k` is evaluated with a series
//! when `k` is close to `lambda`. Neither piece cancels catastrophically, so
//! the log-pmf keeps an absolute error of a few ulps even for `k` in the
//! millions, where the naive `k ln lambda - lambda - ln k!` loses about
//! `log10(k ln k)` digits.

use std::f64::consts::PI;

/// `ln k! - ((k + 1/2) ln k - k + ln sqrt(2 pi))` for k = 0..=15.
#[allow(clippy::excessive_precision)]
const STIRLERR_TABLE: [f64; 16] = [
    0.0,
    0.08106146679532725821967,
    0.04134069595540929409382,
    0.02767792568499833914879,
    0.02079067210376509311152,
    0.01664469118982119216319,
    0.01387612882307074799875,
    0.01189670994589177009506,
    0.01041126526197209649748,
    0.009255462182712732917729,
    0.008330563433362871256469,
    0.007573675487951840794972,
    0.006942840107209529865664,
    0.00640899418800420706844,
    0.005951370112758847735624,
    0.005554733551962801371039,
];

const S0: f64 = 1.0 / 12.0;
const S1: f64 = 1.0 / 360.0;
const S2: f64 = 1.0 / 1260.0;
const S3: f64 = 1.0 / 1680.0;
const S4: f64 = 1.0 / 1188.0;

/// Error of Stirling's formula for `ln k!`.
pub fn stirlerr(k: u64) -> f64 {
    if k < STIRLERR_TABLE.len() as u64 {
        return STIRLERR_TABLE[k as usize];
    }
    let n = k as f64;
    let nn = n * n;
    if k > 500 {
        (S0 - S1 / nn) / n
    } else if k > 80 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if k > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// `ln k!` through the Stirling decomposition.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        return 0.0;
    }
    let n = k as f64;
    (n + 0.5) * n.ln() - n + 0.5 * (2.0 * PI).ln() + stirlerr(k)
}

/// Deviance term `x ln(x/np) + np - x`, accurate when `x ~ np`.
pub fn bd0(x: f64, np: f64) -> f64 {
    let diff = x - np;
    if diff.abs() < 0.1 * (x + np) {
        let v = diff / (x + np);
        let v2 = v * v;
        let mut s = diff * v;
        let mut ej = 2.0 * x * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln(lambda^k e^-lambda / k!)`, with `0^0 = 1`.
pub fn ln_poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -lambda;
    }
    let x = k as f64;
    -stirlerr(k) - bd0(x, lambda) - 0.5 * (2.0 * PI * x).ln()
}
