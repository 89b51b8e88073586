//! Batch runners over `(n, beta_n, f, x)` grids.
//!
//! Rows are computed in parallel and sorted afterwards, so the thread
//! schedule never shows up in a report.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{rate_bound, voronovskaya_limit, voronovskaya_residual, BoundInputs, Domain};
use crate::error::{domain, Result};
use crate::functions::ScalarFunction;
use crate::moments::{
    central_moment, central_moment_series, fourth_central_bound, raw_moment, raw_moment_series, s_closed,
    second_central_bound, MomentOrder,
};
use crate::operators::{check_x, deviation, OperatorParams};
use crate::weights::{series_sum, BetaParam, Growth, TruncationPolicy, WeightKind};

pub const SCHEMA_VERSION: u32 = 1;

/// Half-decade sizes from 10 to 10^4.
pub const DEFAULT_N_LIST: [u64; 7] = [10, 32, 100, 316, 1000, 3162, 10000];

/// Largest `beta_n` a schedule hands out.
pub const BETA_CAP: f64 = 0.999;

/// `beta_n = min(c n^{-p}, 0.999)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    c: f64,
    p: f64,
}

impl BetaSchedule {
    pub fn new(c: f64, p: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return domain(format!("schedule constant c must be finite and ≥ 0, got {c}"));
        }
        if !(p > 0.0 && p.is_finite()) {
            return domain(format!("schedule exponent p must be finite and > 0, got {p}"));
        }
        Ok(BetaSchedule { c, p })
    }

    /// `beta_n = 0` for every `n`.
    pub fn zero() -> Self {
        BetaSchedule { c: 0.0, p: 1.0 }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn beta(&self, n: u64) -> BetaParam {
        let b = (self.c * (n as f64).powf(-self.p)).min(BETA_CAP);
        BetaParam::new(b).expect("capped below 1")
    }

    pub fn params(&self, n: u64) -> Result<OperatorParams> {
        OperatorParams::new(n, self.beta(n))
    }
}

/// Where a row was measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Location {
    Point(f64),
    /// A supremum over `[a, b]`.
    Interval(f64, f64),
}

impl Location {
    fn cmp_key(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Location::Point(a), Location::Point(b)) => a.total_cmp(b),
            (Location::Point(_), Location::Interval(..)) => Ordering::Less,
            (Location::Interval(..), Location::Point(_)) => Ordering::Greater,
            (Location::Interval(a0, b0), Location::Interval(a1, b1)) => a0.total_cmp(a1).then(b0.total_cmp(b1)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub n: u64,
    pub beta: f64,
    pub x: Location,
    pub measured: f64,
    pub reference: Option<f64>,
    pub bound: Option<f64>,
    /// Largest uncertified tail mass over the sums behind this row.
    pub residual_mass: f64,
}

impl ReportRow {
    fn sort_cmp(&self, other: &Self) -> Ordering {
        self.experiment
            .cmp(&other.experiment)
            .then(self.n.cmp(&other.n))
            .then(self.beta.total_cmp(&other.beta))
            .then(self.x.cmp_key(&other.x))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Sorts `rows` by `(experiment, n, beta, x)`.
    pub fn new(mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by(ReportRow::sort_cmp);
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            rows,
        }
    }

    pub fn rows_of<'a>(&'a self, experiment: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.experiment == experiment)
    }
}

fn check_n_list(n_list: &[u64]) -> Result<()> {
    if n_list.is_empty() {
        return domain("n list must not be empty");
    }
    if n_list.contains(&0) {
        return domain("n must be a positive integer");
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return domain("n list must be strictly ascending");
    }
    Ok(())
}

fn check_x_list(x_list: &[f64]) -> Result<()> {
    if x_list.is_empty() {
        return domain("x list must not be empty");
    }
    x_list.iter().try_for_each(|&x| check_x(x))
}

/// `ln(e_1 / e_2) / ln(n_2 / n_1)` for consecutive rows, the exponent `q` in
/// `error ~ n^{-q}`.
fn order_rows(name: &str, rows: &[ReportRow]) -> Vec<ReportRow> {
    rows.windows(2)
        .filter_map(|w| {
            let (r1, r2) = (&w[0], &w[1]);
            let q = (r1.measured / r2.measured).ln() / (r2.n as f64 / r1.n as f64).ln();
            q.is_finite().then(|| ReportRow {
                experiment: name.to_string(),
                n: r2.n,
                beta: r2.beta,
                x: r2.x,
                measured: q,
                reference: None,
                bound: None,
                residual_mass: r1.residual_mass.max(r2.residual_mass),
            })
        })
        .collect()
}

/// Per `n`: `sup_x |P_n(f, x) - f(x)|` over the domain grid under
/// `beta_n`, plus empirical orders between consecutive sizes.
///
/// For `f` of at most quadratic growth the `bound` column carries the
/// uniform rate bound on `[0, b]` with `M_f` from `f`.
pub fn run_convergence(
    f: &ScalarFunction,
    schedule: BetaSchedule,
    n_list: &[u64],
    dom: &Domain,
    policy: &TruncationPolicy,
) -> Result<ExperimentReport> {
    check_n_list(n_list)?;
    let grid = dom.grid();
    let inputs = BoundInputs {
        m_f: f.growth_constant(),
        a: dom.b(),
        ..BoundInputs::default()
    };
    let loc = Location::Interval(dom.a(), dom.b());
    let rows: Vec<ReportRow> = n_list
        .par_iter()
        .map(|&n| {
            let params = schedule.params(n)?;
            let sums: Vec<(f64, f64)> = grid
                .par_iter()
                .map(|&x| deviation(f, params, x, policy).map(|s| (s.value.abs(), s.residual_mass)))
                .collect::<Result<_>>()?;
            let sup = sums.iter().map(|s| s.0).fold(0.0, f64::max);
            let residual = sums.iter().map(|s| s.1).fold(0.0, f64::max);
            let bound = if f.growth().is_quadratic_class() {
                Some(rate_bound(f, &inputs, params, None)?)
            } else {
                None
            };
            Ok(ReportRow {
                experiment: "convergence".into(),
                n,
                beta: params.beta().value(),
                x: loc,
                measured: sup,
                reference: Some(0.0),
                bound,
                residual_mass: residual,
            })
        })
        .collect::<Result<_>>()?;
    let mut all = order_rows("convergence:order", &rows);
    all.extend(rows);
    Ok(ExperimentReport::new(all))
}

/// `n (P_n(f, x) - f(x))` against `x f''(x) / 2`.
pub fn run_voronovskaya(
    f: &ScalarFunction,
    schedule: BetaSchedule,
    n_list: &[u64],
    x_list: &[f64],
    policy: &TruncationPolicy,
) -> Result<ExperimentReport> {
    check_n_list(n_list)?;
    check_x_list(x_list)?;
    voronovskaya_limit(f, x_list[0])?;
    let rows = grid_rows(n_list, x_list, |n, x| {
        let params = schedule.params(n)?;
        let dev = deviation(f, params, x, policy)?;
        // same value voronovskaya_residual returns, kept with its residual mass
        let measured = n as f64 * dev.value;
        debug_assert_eq!(measured, voronovskaya_residual(f, params, x, policy)?);
        Ok(ReportRow {
            experiment: "voronovskaya".into(),
            n,
            beta: params.beta().value(),
            x: Location::Point(x),
            measured,
            reference: Some(voronovskaya_limit(f, x)?),
            bound: None,
            residual_mass: dev.residual_mass,
        })
    })?;
    Ok(ExperimentReport::new(rows))
}

/// `n^2 P_n((t - x)^4, x)` against `3 x^2`, from the closed form.
///
/// The `bound` column is `n^2` times the printed fourth-moment bound, so rows
/// where it falls below `measured` are the points where that bound fails.
pub fn run_fourth_moment_limit(schedule: BetaSchedule, n_list: &[u64], x_list: &[f64]) -> Result<ExperimentReport> {
    check_n_list(n_list)?;
    check_x_list(x_list)?;
    let rows = grid_rows(n_list, x_list, |n, x| {
        let params = schedule.params(n)?;
        let n2 = (n as f64).powi(2);
        Ok(ReportRow {
            experiment: "fourth-moment".into(),
            n,
            beta: params.beta().value(),
            x: Location::Point(x),
            measured: n2 * central_moment(4, params, x)?,
            reference: Some(3.0 * x * x),
            bound: Some(n2 * fourth_central_bound(params, x)),
            residual_mass: 0.0,
        })
    })?;
    Ok(ExperimentReport::new(rows))
}

/// Truncated weighted norm `sup_{[0, x_max]} |P_n f - f| / (1 + x^2)`.
pub fn run_weighted(
    f: &ScalarFunction,
    schedule: BetaSchedule,
    n_list: &[u64],
    x_max: f64,
    step: f64,
    policy: &TruncationPolicy,
) -> Result<ExperimentReport> {
    check_n_list(n_list)?;
    if !f.growth().is_quadratic_class() {
        return domain(format!(
            "`{}` grows faster than x^2; the weighted norm is infinite",
            f.name()
        ));
    }
    let grid = Domain::new(0.0, x_max, step)?.grid();
    let rows: Vec<ReportRow> = n_list
        .par_iter()
        .map(|&n| {
            let params = schedule.params(n)?;
            let sums: Vec<(f64, f64)> = grid
                .par_iter()
                .map(|&x| deviation(f, params, x, policy).map(|s| (s.value.abs() / (1.0 + x * x), s.residual_mass)))
                .collect::<Result<_>>()?;
            Ok(ReportRow {
                experiment: "weighted".into(),
                n,
                beta: params.beta().value(),
                x: Location::Interval(0.0, x_max),
                measured: sums.iter().map(|s| s.0).fold(0.0, f64::max),
                reference: Some(0.0),
                bound: None,
                residual_mass: sums.iter().map(|s| s.1).fold(0.0, f64::max),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentReport::new(rows))
}

/// One point of a moment-validation grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: OperatorParams,
    pub x: f64,
}

/// `n in {1, 5, 10, 50}`, `beta in {0, 0.1, 0.5, 0.9}`, `x in {0.1, 1, 5}`.
pub fn default_moment_grid() -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &n in &[1u64, 5, 10, 50] {
        for &b in &[0.0, 0.1, 0.5, 0.9] {
            for &x in &[0.1, 1.0, 5.0] {
                let params = OperatorParams::with_beta(n, b).expect("valid grid");
                out.push(GridPoint { params, x });
            }
        }
    }
    out
}

/// Closed forms against series oracles at every grid point.
///
/// Experiments `moments:S:r`, `moments:raw:j` and `moments:central:s` carry
/// the series value in `measured` and the closed form in `reference`.
/// `moments:second-bound` and `moments:fourth-bound` carry the central moment
/// in `measured` and the bound in `bound`; dominance holds where
/// `measured <= bound`.
pub fn run_moment_validation(grid: &[GridPoint], policy: &TruncationPolicy) -> Result<ExperimentReport> {
    if grid.is_empty() {
        return domain("moment grid must not be empty");
    }
    let per_point: Vec<Vec<ReportRow>> = grid
        .par_iter()
        .map(|pt| moment_rows(pt, policy))
        .collect::<Result<_>>()?;
    Ok(ExperimentReport::new(per_point.into_iter().flatten().collect()))
}

fn moment_rows(pt: &GridPoint, policy: &TruncationPolicy) -> Result<Vec<ReportRow>> {
    let GridPoint { params, x } = *pt;
    check_x(x)?;
    let n = params.n();
    let beta = params.beta();
    let row =
        |experiment: String, measured: f64, reference: Option<f64>, bound: Option<f64>, residual: f64| ReportRow {
            experiment,
            n,
            beta: beta.value(),
            x: Location::Point(x),
            measured,
            reference,
            bound,
            residual_mass: residual,
        };
    let nf = n as f64;
    let mut rows = Vec::new();

    for r in MomentOrder::all() {
        let alpha = nf * x;
        let sum = series_sum(
            |k| (alpha + beta.value() * k as f64).powi(r.value() as i32),
            alpha,
            beta,
            WeightKind::NewFamily,
            Growth::poly(r.value(), 1.0 + beta.value()),
            policy,
        )?;
        let series = sum.value / (1.0 - beta.value());
        rows.push(row(
            format!("moments:S:{}", r.value()),
            series,
            Some(s_closed(r, alpha, beta)?),
            None,
            sum.residual_mass,
        ));
    }
    for j in MomentOrder::all() {
        let series = raw_moment_series(j.value(), params, x, policy)?;
        rows.push(row(
            format!("moments:raw:{}", j.value()),
            series,
            Some(raw_moment(j, params, x)?),
            None,
            residual_of(params, x, policy)?,
        ));
    }
    for s in 1..=4 {
        let series = central_moment_series(s, params, x, policy)?;
        rows.push(row(
            format!("moments:central:{s}"),
            series,
            Some(central_moment(s, params, x)?),
            None,
            residual_of(params, x, policy)?,
        ));
    }
    rows.push(row(
        "moments:second-bound".into(),
        central_moment(2, params, x)?,
        None,
        Some(second_central_bound(params, x)),
        0.0,
    ));
    rows.push(row(
        "moments:fourth-bound".into(),
        central_moment(4, params, x)?,
        None,
        Some(fourth_central_bound(params, x)),
        0.0,
    ));
    Ok(rows)
}

/// Tail mass left by the weight sum at `(params, x)`; every moment series at
/// this point uses the same window rule, so this is what they leave out.
fn residual_of(params: OperatorParams, x: f64, policy: &TruncationPolicy) -> Result<f64> {
    let n = params.n() as f64;
    series_sum(
        |_| 1.0,
        n * x,
        params.beta(),
        WeightKind::NewFamily,
        Growth::BOUNDED,
        policy,
    )
    .map(|s| s.residual_mass)
}

fn grid_rows<F>(n_list: &[u64], x_list: &[f64], row: F) -> Result<Vec<ReportRow>>
where
    F: Fn(u64, f64) -> Result<ReportRow> + Sync,
{
    let pairs: Vec<(u64, f64)> = n_list
        .iter()
        .flat_map(|&n| x_list.iter().map(move |&x| (n, x)))
        .collect();
    pairs.par_iter().map(|&(n, x)| row(n, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> TruncationPolicy {
        TruncationPolicy::new(1e-14, 1_000_000).unwrap()
    }

    fn measured(report: &ExperimentReport, name: &str) -> Vec<f64> {
        report.rows_of(name).map(|r| r.measured).collect()
    }

    #[test]
    fn schedule_values() {
        let s = BetaSchedule::new(1.0, 1.0).unwrap();
        assert_eq!(s.beta(1).value(), BETA_CAP);
        assert_eq!(s.beta(10).value(), 0.1);
        assert_eq!(BetaSchedule::new(1.0, 2.0).unwrap().beta(1000).value(), 1e-6);
        assert_eq!(BetaSchedule::zero().beta(3).value(), 0.0);
        assert!(BetaSchedule::new(-1.0, 1.0).is_err());
        assert!(BetaSchedule::new(1.0, 0.0).is_err());
        let s = BetaSchedule::new(3.0, 0.5).unwrap();
        let betas: Vec<f64> = (1..200).map(|n| s.beta(n).value()).collect();
        assert!(betas.iter().all(|&b| (0.0..1.0).contains(&b)));
        assert!(betas.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_bad_lists() {
        let f = ScalarFunction::sin();
        let dom = Domain::new(0.0, 1.0, 0.1).unwrap();
        let pol = TruncationPolicy::default();
        assert!(run_convergence(&f, BetaSchedule::zero(), &[], &dom, &pol).is_err());
        assert!(run_convergence(&f, BetaSchedule::zero(), &[10, 5], &dom, &pol).is_err());
        assert!(run_voronovskaya(&f, BetaSchedule::zero(), &[10], &[], &pol).is_err());
        assert!(run_voronovskaya(
            &ScalarFunction::abs_shift(1.0),
            BetaSchedule::zero(),
            &[10],
            &[1.0],
            &pol
        )
        .is_err());
        assert!(run_weighted(
            &ScalarFunction::monomial(3),
            BetaSchedule::zero(),
            &[10],
            10.0,
            0.5,
            &pol
        )
        .is_err());
        assert!(run_moment_validation(&[], &pol).is_err());
    }

    #[test]
    fn convergence_examples() {
        let pol = TruncationPolicy::default();
        let dom = Domain::new(0.0, 2.0, 0.05).unwrap();
        let one = run_convergence(
            &ScalarFunction::monomial(0),
            BetaSchedule::new(1.0, 1.0).unwrap(),
            &[10, 100],
            &dom,
            &pol,
        )
        .unwrap();
        assert!(measured(&one, "convergence").iter().all(|&e| e < 1e-12));

        let t = run_convergence(
            &ScalarFunction::monomial(1),
            BetaSchedule::zero(),
            &[10, 100, 1000],
            &dom,
            &pol,
        )
        .unwrap();
        assert!(measured(&t, "convergence").iter().all(|&e| e < 1e-12));

        let ns = [10, 100, 1000, 10000];
        let e = run_convergence(
            &ScalarFunction::exp_decay(),
            BetaSchedule::new(1.0, 1.0).unwrap(),
            &ns,
            &dom,
            &pol,
        )
        .unwrap();
        let errs = measured(&e, "convergence");
        assert_eq!(errs.len(), 4);
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        let orders = measured(&e, "convergence:order");
        assert_eq!(orders.len(), 3);
        assert!(orders.iter().all(|&q| q > 0.9 && q < 1.1), "{orders:?}");
        for r in e.rows_of("convergence") {
            assert!(r.bound.unwrap() >= r.measured);
            assert!(r.residual_mass < pol.epsilon());
        }
    }

    #[test]
    fn voronovskaya_examples() {
        let pol = tight();
        let t2 = run_voronovskaya(
            &ScalarFunction::monomial(2),
            BetaSchedule::zero(),
            &[10, 1000],
            &[0.5, 2.0],
            &pol,
        )
        .unwrap();
        for r in &t2.rows {
            let x = match r.x {
                Location::Point(x) => x,
                _ => unreachable!(),
            };
            assert!((r.measured - x).abs() < 1e-12);
            assert_eq!(r.reference, Some(x));
        }

        let e = run_voronovskaya(
            &ScalarFunction::exp_decay(),
            BetaSchedule::new(1.0, 2.0).unwrap(),
            &[1000],
            &[1.0],
            &pol,
        )
        .unwrap();
        let r = &e.rows[0];
        assert!(((r.measured - 0.18394) / 0.18394).abs() < 5e-3);

        // n (P_n t^3 - x^3) = 3 x^2 + x / n at beta = 0
        let c = run_voronovskaya(
            &ScalarFunction::monomial(3),
            BetaSchedule::zero(),
            &[10, 1000],
            &[2.0],
            &pol,
        )
        .unwrap();
        assert!((c.rows[0].measured - 12.2).abs() < 1e-10);
        assert!((c.rows[1].measured - 12.002).abs() < 1e-9);
        assert_eq!(c.rows[1].reference, Some(12.0));
    }

    #[test]
    fn fourth_moment_examples() {
        let r = run_fourth_moment_limit(BetaSchedule::zero(), &[100], &[0.0, 1.0]).unwrap();
        assert_eq!(r.rows[0].measured, 0.0);
        assert_eq!(r.rows[0].reference, Some(0.0));
        assert!((r.rows[1].measured - 3.01).abs() < 1e-13);

        let r = run_fourth_moment_limit(BetaSchedule::new(1.0, 2.0).unwrap(), &[1000], &[2.0]).unwrap();
        assert!(((r.rows[0].measured - 12.0) / 12.0).abs() < 1e-2);
    }

    #[test]
    fn weighted_examples() {
        let pol = TruncationPolicy::default();
        let ns = [10, 100, 1000];
        let one = run_weighted(
            &ScalarFunction::monomial(0),
            BetaSchedule::new(1.0, 1.0).unwrap(),
            &ns,
            20.0,
            0.5,
            &pol,
        )
        .unwrap();
        assert!(measured(&one, "weighted").iter().all(|&e| e < 1e-12));
        let t = run_weighted(&ScalarFunction::monomial(1), BetaSchedule::zero(), &ns, 20.0, 0.5, &pol).unwrap();
        assert!(measured(&t, "weighted").iter().all(|&e| e < 1e-12));
        let t2 = run_weighted(
            &ScalarFunction::monomial(2),
            BetaSchedule::new(1.0, 1.0).unwrap(),
            &ns,
            20.0,
            0.5,
            &pol,
        )
        .unwrap();
        let e = measured(&t2, "weighted");
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
    }

    #[test]
    fn moment_validation_examples() {
        let pol = tight();
        let report = run_moment_validation(&default_moment_grid(), &pol).unwrap();
        assert_eq!(report.rows.len(), 48 * (5 + 5 + 4 + 2));
        for r in report.rows.iter().filter(|r| r.reference.is_some()) {
            let c = r.reference.unwrap();
            let err = (r.measured - c).abs() / c.abs().max(1e-300);
            // central moment 1 vanishes at beta = 0; compare absolutely there
            let ok = if c == 0.0 { r.measured.abs() < 1e-12 } else { err < 1e-9 };
            assert!(
                ok,
                "{} n={} beta={} {:?}: {} vs {}",
                r.experiment, r.n, r.beta, r.x, r.measured, c
            );
            if r.beta == 0.0 && c != 0.0 {
                assert!(err < 1e-11, "{} {:?}", r.experiment, r.x);
            }
        }
        for r in report.rows_of("moments:second-bound").filter(|r| r.beta > 0.0) {
            assert!(r.measured <= r.bound.unwrap());
        }
    }

    #[test]
    fn rows_sorted_and_deterministic() {
        let pol = TruncationPolicy::default();
        let s = BetaSchedule::new(1.0, 2.0).unwrap();
        let a = run_voronovskaya(&ScalarFunction::sin(), s, &[10, 32, 100], &[2.0, 0.5, 1.0], &pol).unwrap();
        let b = run_voronovskaya(&ScalarFunction::sin(), s, &[10, 32, 100], &[2.0, 0.5, 1.0], &pol).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.windows(2).all(|w| w[0].sort_cmp(&w[1]) != Ordering::Greater));
        assert_eq!(a.schema_version, SCHEMA_VERSION);
    }
}
