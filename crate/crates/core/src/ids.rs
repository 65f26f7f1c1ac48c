//! Moment tables, the one-dimensional density of states, and two-sided
//! tail bounds for `𝒩(-2d + ε)` with a Lifshitz exponent fit.

use std::f64::consts::PI;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::check_dim;
use crate::scalar::Scalar;
use crate::walk::{exact_return_count, mc_return_probability, DEFAULT_ENUMERATION_BUDGET};

pub const DEFAULT_GRID_POINTS: usize = 16;
pub const DEFAULT_GRID_MIN: f64 = 0.05;
pub const MIN_FIT_POINTS: usize = 4;

/// `𝒩_Z(λ) = (2/π) arcsin √((2 + λ)/4)`, clamped to `{0, 1}` outside `[-2, 2]`.
pub fn ids_one_dim(lambda: f64) -> f64 {
    if lambda <= -2.0 {
        0.0
    } else if lambda >= 2.0 {
        1.0
    } else {
        2.0 / PI * ((2.0 + lambda) / 4.0).sqrt().asin()
    }
}

/// `∫ λ^k d𝒩_Z` by integration by parts against the CDF, on the substitution `λ = -2 cos θ`.
pub fn ids_one_dim_moment(k: u32, intervals: usize) -> f64 {
    let intervals = intervals.max(2) & !1;
    let f = |theta: f64| {
        let lambda = -2.0 * theta.cos();
        lambda.powi(k as i32 - 1) * ids_one_dim(lambda) * 2.0 * theta.sin()
    };
    if k == 0 {
        return 1.0;
    }
    // composite Simpson on [0, π]
    let h = PI / intervals as f64;
    let mut sum = f(0.0) + f(PI);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    let integral = sum * h / 3.0;
    2f64.powi(k as i32) - k as f64 * integral
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentSource {
    Exact,
    Mc,
}

/// One value `m̄_{2n} = τ(H^{2n}(0,0)) / (2d)^{2n}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentEntry {
    pub two_n: usize,
    pub value: f64,
    pub exact: Option<BigRational>,
    pub source: MomentSource,
    /// 95% interval for Monte Carlo entries; equal to `value` for exact ones.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MomentEntry {
    pub fn exact(two_n: usize, value: BigRational) -> Self {
        let v = value.to_f64();
        MomentEntry {
            two_n,
            value: v,
            exact: Some(value),
            source: MomentSource::Exact,
            ci_low: v,
            ci_high: v,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentTable {
    pub d: usize,
    pub entries: Vec<MomentEntry>,
}

impl MomentTable {
    /// A table holding only `m̄_0 = 1`.
    pub fn new(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(MomentTable {
            d,
            entries: vec![MomentEntry::exact(0, BigRational::from_integer(1.into()))],
        })
    }

    /// Exact entries for `2n = 2, 4, ..., max_two_n`.
    pub fn exact(d: usize, max_two_n: usize, budget: u64, workers: usize) -> Result<Self> {
        let mut table = Self::new(d)?;
        for two_n in (2..=max_two_n).step_by(2) {
            let count = exact_return_count(d, two_n, budget, workers)?;
            let value = BigRational::new(count.identity_count.into(), count.total.into());
            table.entries.push(MomentEntry::exact(two_n, value));
        }
        Ok(table)
    }

    /// Exact entries as far as the budget allows, then Monte Carlo entries up to `max_two_n`.
    pub fn mixed(
        d: usize,
        max_two_n: usize,
        budget: u64,
        samples: u64,
        seed: u64,
        workers: usize,
    ) -> Result<Self> {
        let mut table = Self::new(d)?;
        for two_n in (2..=max_two_n).step_by(2) {
            match exact_return_count(d, two_n, budget, workers) {
                Ok(count) => {
                    let value = BigRational::new(count.identity_count.into(), count.total.into());
                    table.entries.push(MomentEntry::exact(two_n, value));
                }
                Err(e) if e.is_budget() => {
                    let est = mc_return_probability(d, two_n, samples, seed, workers)?;
                    table.entries.push(MomentEntry {
                        two_n,
                        value: est.p_hat,
                        exact: None,
                        source: MomentSource::Mc,
                        ci_low: est.ci_low,
                        ci_high: est.ci_high,
                    });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(table)
    }

    pub fn push(&mut self, entry: MomentEntry) {
        self.entries.push(entry);
        self.entries.sort_by_key(|e| e.two_n);
    }

    pub fn get(&self, two_n: usize) -> Option<&MomentEntry> {
        self.entries.iter().find(|e| e.two_n == two_n)
    }

    /// Certified lower values `(2n, p_{2n})` for [`lower_envelope`].
    pub fn lower_values(&self) -> Vec<(usize, f64)> {
        self.entries.iter().map(|e| (e.two_n, e.ci_low)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    /// The `2n` attaining the bound; `None` when the bound is trivial.
    pub best_two_n: Option<usize>,
}

/// `min_n m̄_{2n} / (1 - ε/2d)^{2n}`, capped at 1, using upper interval ends for Monte Carlo entries.
pub fn chebyshev_upper(eps: f64, table: &MomentTable) -> Result<Bound> {
    let two_d = 2.0 * table.d as f64;
    if !(eps > 0.0 && eps <= two_d) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {eps} outside (0, {two_d}]"
        )));
    }
    if table.entries.is_empty() {
        return Err(Error::InvalidArgument("empty moment table".into()));
    }
    let base = 1.0 - eps / two_d;
    let mut best = Bound {
        value: 1.0,
        best_two_n: None,
    };
    for entry in &table.entries {
        let denom = base.powi(entry.two_n as i32);
        if denom <= 0.0 {
            continue;
        }
        let value = entry.ci_high / denom;
        if value < best.value {
            best = Bound {
                value,
                best_two_n: Some(entry.two_n),
            };
        }
    }
    Ok(best)
}

/// `max_n (p_{2n}/2 - exp(-εn/d))`, floored at 0.
pub fn lower_envelope(eps: f64, d: usize, lower_values: &[(usize, f64)]) -> Bound {
    let mut best = Bound {
        value: 0.0,
        best_two_n: None,
    };
    for &(two_n, p) in lower_values {
        let n = (two_n / 2) as f64;
        let value = p / 2.0 - (-eps * n / d as f64).exp();
        if value > best.value {
            best = Bound {
                value,
                best_two_n: Some(two_n),
            };
        }
    }
    best
}

/// Geometric grid of `points` values from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid [{lo}, {hi}] with {points} points"
        )));
    }
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            if k + 1 == points {
                hi
            } else {
                lo * (ratio * k as f64).exp()
            }
        })
        .collect())
}

pub fn default_epsilon_grid(d: usize) -> Result<Vec<f64>> {
    check_dim(d)?;
    geometric_grid(DEFAULT_GRID_MIN, 2.0 * d as f64, DEFAULT_GRID_POINTS)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailBoundCurve {
    pub d: usize,
    pub epsilons: Vec<f64>,
    pub upper: Vec<Bound>,
    pub lower: Vec<Bound>,
}

impl TailBoundCurve {
    pub fn new(
        eps_grid: &[f64],
        table: &MomentTable,
        lower_values: &[(usize, f64)],
    ) -> Result<Self> {
        let upper = eps_grid
            .iter()
            .map(|&e| chebyshev_upper(e, table))
            .collect::<Result<Vec<_>>>()?;
        let lower = eps_grid
            .iter()
            .map(|&e| lower_envelope(e, table.d, lower_values))
            .collect();
        Ok(TailBoundCurve {
            d: table.d,
            epsilons: eps_grid.to_vec(),
            upper,
            lower,
        })
    }

    /// A curve with given upper values and trivial lower bounds.
    pub fn from_upper(d: usize, epsilons: Vec<f64>, upper: impl Fn(f64) -> f64) -> Self {
        let ups = epsilons
            .iter()
            .map(|&e| Bound {
                value: upper(e),
                best_two_n: None,
            })
            .collect();
        let lows = vec![
            Bound {
                value: 0.0,
                best_two_n: None
            };
            epsilons.len()
        ];
        TailBoundCurve {
            d,
            epsilons,
            upper: ups,
            lower: lows,
        }
    }

    /// True when `0 ≤ lower ≤ upper ≤ 1` at every grid point.
    pub fn is_consistent(&self) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .all(|(l, u)| 0.0 <= l.value && l.value <= u.value && u.value <= 1.0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,upper,lower,best_n_upper,best_n_lower\n");
        let fmt_n = |b: &Bound| b.best_two_n.map_or(String::new(), |n| (n / 2).to_string());
        for ((e, u), l) in self.epsilons.iter().zip(&self.upper).zip(&self.lower) {
            out.push_str(&format!(
                "{e:e},{:e},{:e},{},{}\n",
                u.value,
                l.value,
                fmt_n(u),
                fmt_n(l)
            ));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LifshitzFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual of the linear fit.
    pub residual: f64,
    pub points: usize,
    /// Exponent `d / 2` expected near the edge; not asserted.
    pub target: f64,
}

/// Least-squares slope of `log(-log upper)` against `log(1/ε)` over points with `0 < upper < 1`.
pub fn lifshitz_fit(curve: &TailBoundCurve) -> Result<LifshitzFit> {
    let points: Vec<(f64, f64)> = curve
        .epsilons
        .iter()
        .zip(&curve.upper)
        .filter(|(e, u)| **e > 0.0 && u.value > 0.0 && u.value < 1.0)
        .map(|(e, u)| ((1.0 / e).ln(), (-u.value.ln()).ln()))
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::Degenerate(format!(
            "{} informative grid points, need {MIN_FIT_POINTS}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-12 * n {
        return Err(Error::Degenerate("grid has no spread in log(1/eps)".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(LifshitzFit {
        slope,
        intercept,
        residual,
        points: points.len(),
        target: curve.d as f64 / 2.0,
    })
}

/// Exact table to `max_two_n` with the default enumeration budget.
pub fn exact_table(d: usize, max_two_n: usize, workers: usize) -> Result<MomentTable> {
    MomentTable::exact(d, max_two_n, DEFAULT_ENUMERATION_BUDGET, workers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::binomial;
    use approx::assert_abs_diff_eq;

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn arcsine_endpoints() {
        assert_eq!(ids_one_dim(-2.0), 0.0);
        assert_eq!(ids_one_dim(-3.0), 0.0);
        assert_eq!(ids_one_dim(2.0), 1.0);
        assert_eq!(ids_one_dim(7.0), 1.0);
        assert_abs_diff_eq!(ids_one_dim(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ids_one_dim(1.0) + ids_one_dim(-1.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn arcsine_moments_are_central_binomials() {
        for n in 0..=5u64 {
            let m = ids_one_dim_moment(2 * n as u32, 4000);
            let expected = num_traits::ToPrimitive::to_f64(&binomial(2 * n, n)).unwrap();
            assert_abs_diff_eq!(m, expected, epsilon = 1e-6);
            assert_abs_diff_eq!(
                ids_one_dim_moment(2 * n as u32 + 1, 4000),
                0.0,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn half_normalization_fails_moments() {
        // the CDF without the factor 2 reaches only 1/2 and gives half the second moment
        let half = |l: f64| ids_one_dim(l) / 2.0;
        assert_eq!(half(2.0), 0.5);
        assert!((ids_one_dim_moment(2, 4000) / 2.0 - 2.0).abs() > 0.5);
    }

    #[test]
    fn upper_bound_single_entry() {
        let mut table = MomentTable::new(2).unwrap();
        table.push(MomentEntry::exact(2, rational(1, 4)));
        for eps in [0.1, 0.5, 1.0] {
            let b = chebyshev_upper(eps, &table).unwrap();
            let expected = (0.25 / (1.0 - eps / 4.0).powi(2)).min(1.0);
            assert_abs_diff_eq!(b.value, expected, epsilon = 1e-15);
        }
        // at eps = 2d only the zeroth moment has a nonzero denominator
        assert_eq!(chebyshev_upper(4.0, &table).unwrap().value, 1.0);
        assert!(chebyshev_upper(0.0, &table).is_err());
        assert!(chebyshev_upper(4.5, &table).is_err());
    }

    #[test]
    fn richer_table_tightens() {
        let table = exact_table(2, 12, 1).unwrap();
        assert_eq!(table.get(2).unwrap().exact, Some(rational(1, 4)));
        assert_eq!(table.get(4).unwrap().exact, Some(rational(7, 64)));
        let mut small = MomentTable::new(2).unwrap();
        small.push(table.get(2).unwrap().clone());
        let rich = chebyshev_upper(1.0, &table).unwrap();
        assert!(rich.value < chebyshev_upper(1.0, &small).unwrap().value);
        assert!(rich.best_two_n.unwrap() > 2);
    }

    #[test]
    fn upper_is_monotone_and_dominates_truth() {
        let table = exact_table(1, 16, 1).unwrap();
        let grid = default_epsilon_grid(1).unwrap();
        let bounds: Vec<f64> = grid
            .iter()
            .map(|&e| chebyshev_upper(e, &table).unwrap().value)
            .collect();
        assert!(bounds.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        for (e, b) in grid.iter().zip(&bounds) {
            assert!(*b >= ids_one_dim(-2.0 + e), "eps={e}");
        }
    }

    #[test]
    fn monte_carlo_entries_use_upper_end() {
        let mut table = MomentTable::new(2).unwrap();
        table.push(MomentEntry {
            two_n: 2,
            value: 0.25,
            exact: None,
            source: MomentSource::Mc,
            ci_low: 0.24,
            ci_high: 0.26,
        });
        let b = chebyshev_upper(1.0, &table).unwrap();
        assert_abs_diff_eq!(b.value, 0.26 / 0.5625, epsilon = 1e-15);
        assert_eq!(table.lower_values()[1], (2, 0.24));
    }

    #[test]
    fn lower_envelope_values() {
        let lower = lower_envelope(3.0, 2, &[(4, 7.0 / 64.0)]);
        assert_abs_diff_eq!(lower.value, 7.0 / 128.0 - (-3f64).exp(), epsilon = 1e-15);
        assert!(lower.value > 0.0049 && lower.value < 0.0050);
        assert_eq!(lower.best_two_n, Some(4));
        let trivial = lower_envelope(0.1, 2, &[(2, 0.25), (4, 7.0 / 64.0)]);
        assert_eq!(
            trivial,
            Bound {
                value: 0.0,
                best_two_n: None
            }
        );
    }

    #[test]
    fn two_dim_curve_is_consistent() {
        let table = exact_table(2, 10, 1).unwrap();
        let grid = default_epsilon_grid(2).unwrap();
        assert_eq!(grid.len(), 16);
        assert_abs_diff_eq!(grid[0], 0.05);
        assert_eq!(grid[15], 4.0);
        let curve = TailBoundCurve::new(&grid, &table, &table.lower_values()).unwrap();
        assert!(curve.is_consistent());
        assert!(curve.lower.iter().any(|b| b.value > 0.0));
        let csv = curve.to_csv();
        assert_eq!(csv.lines().count(), 17);
    }

    #[test]
    fn fit_recovers_synthetic_exponent() {
        let grid = geometric_grid(0.05, 1.0, 16).unwrap();
        let fit = lifshitz_fit(&TailBoundCurve::from_upper(1, grid.clone(), |e| {
            (-1.0 / e).exp()
        }))
        .unwrap();
        assert_abs_diff_eq!(fit.slope, 1.0, epsilon = 1e-6);
        assert!(fit.residual < 1e-9);
        let fit2 = lifshitz_fit(&TailBoundCurve::from_upper(2, grid, |e| {
            (-e.powf(-1.0)).exp()
        }))
        .unwrap();
        assert_abs_diff_eq!(fit2.slope, 1.0, epsilon = 1e-6);
        assert_eq!(fit2.target, 1.0);
    }

    #[test]
    fn fit_refuses_degenerate_grids() {
        let few = TailBoundCurve::from_upper(2, vec![0.1, 0.2, 0.3], |e| (-1.0 / e).exp());
        assert!(matches!(lifshitz_fit(&few), Err(Error::Degenerate(_))));
        let flat = TailBoundCurve::from_upper(2, vec![0.5; 6], |e| (-1.0 / e).exp());
        assert!(matches!(lifshitz_fit(&flat), Err(Error::Degenerate(_))));
        let trivial = TailBoundCurve::from_upper(2, vec![0.1, 0.2, 0.3, 0.4, 0.5], |_| 1.0);
        assert!(lifshitz_fit(&trivial).is_err());
    }

    #[test]
    fn exact_table_for_d1_is_binomial() {
        let table = exact_table(1, 14, 1).unwrap();
        for e in &table.entries {
            let n = e.two_n as u64 / 2;
            let expected = BigRational::new(
                binomial(2 * n, n).into(),
                num_bigint::BigInt::from(4).pow(n as u32),
            );
            assert_eq!(e.exact.as_ref().unwrap(), &expected);
        }
    }
}
