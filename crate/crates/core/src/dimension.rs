//! Correlation sums and generalized fractal dimensions `D_k`.
//!
//! Two correlation sums estimate the same scaling law `C(r) ~ r^{(k-1) D_k}`:
//!
//! * the centered sum, an estimate of `∫ μ(B(x, r))^{k-1} dμ(x)`;
//! * the k-tuple sum, an estimate of the `μ^k` mass of k-tuples whose points
//!   are pairwise within `r`.
//!
//! Each comes in two forms. [`CorrelationForm::UStatistic`] uses distinct
//! indices only and is the unbiased default. [`CorrelationForm::Empirical`]
//! integrates against the empirical measure itself (self-pairs and repeated
//! indices included). For any measure, the empirical one included,
//! `centered(r/2) <= ktuple(r) <= centered(r)`; the U-statistic forms satisfy
//! only the upper inequality deterministically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::MetricSpec;
use crate::dynamics::{MapSpec, PointSet};
use crate::error::{Error, Result};
use crate::regression;

/// Geometric ladder `r_j = r0 * ratio^j`, `j = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiiLadder {
    pub r0: f64,
    pub count: usize,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
}

fn default_ratio() -> f64 {
    0.5
}

impl Default for RadiiLadder {
    fn default() -> Self {
        RadiiLadder {
            r0: 0.25,
            count: 8,
            ratio: 0.5,
        }
    }
}

impl RadiiLadder {
    pub fn new(r0: f64, count: usize, ratio: f64) -> Result<Self> {
        let ladder = RadiiLadder { r0, count, ratio };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0 < 1.0) {
            return Err(Error::InvalidLadder(format!("r0 = {} not in (0, 1)", self.r0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidLadder(format!(
                "ratio = {} not in (0, 1)",
                self.ratio
            )));
        }
        if self.count < 4 {
            return Err(Error::InvalidLadder(format!(
                "need at least 4 radii, got {}",
                self.count
            )));
        }
        Ok(())
    }

    /// Strictly decreasing radii.
    pub fn radii(&self) -> Vec<f64> {
        (0..self.count)
            .map(|j| self.r0 * self.ratio.powi(j as i32))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationForm {
    #[default]
    UStatistic,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    #[default]
    Centered,
    KTuple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionOptions {
    pub estimator: Estimator,
    pub form: CorrelationForm,
    /// Radii with fewer hits (pairs, or tuples for the k-tuple sum) are dropped.
    pub min_hits: u64,
    /// Tuples drawn per radius when exact k-tuple enumeration is too large.
    pub tuple_samples: usize,
    pub seed: u64,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        DimensionOptions {
            estimator: Estimator::Centered,
            form: CorrelationForm::UStatistic,
            min_hits: 25,
            tuple_samples: 1_000_000,
            seed: 0x5eed,
        }
    }
}

/// One rung of the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub r: f64,
    pub correlation: f64,
    pub hits: u64,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub k: usize,
    /// `slope / (k - 1)`.
    pub dimension: f64,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub ladder: Vec<CorrelationPoint>,
}

impl DimensionEstimate {
    pub fn radii_used(&self) -> Vec<f64> {
        self.ladder.iter().filter(|c| c.used).map(|c| c.r).collect()
    }
}

/// Above this many ordered tuples the k-tuple sum is estimated by sampling.
const EXACT_TUPLE_LIMIT: f64 = 1e7;

fn check(points: &PointSet, k: usize, metric: MetricSpec) -> Result<()> {
    if k < 2 {
        return Err(Error::KTooSmall(k));
    }
    if points.dim() != metric.dim() {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            found: points.dim(),
        });
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k,
            found: points.len(),
        });
    }
    Ok(())
}

/// For each point, the number of other points within each radius
/// (`radii` strictly decreasing). Row-major `M x J`.
fn neighbour_counts(points: &PointSet, radii: &[f64], metric: MetricSpec) -> Vec<u32> {
    let m = points.len();
    let j_count = radii.len();
    let rows: Vec<Vec<u32>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let p = points.get(i);
            let mut hist = vec![0u32; j_count + 1];
            for (l, q) in points.iter().enumerate() {
                if l == i {
                    continue;
                }
                let d = metric.distance(p, q);
                hist[radii.partition_point(|&r| r >= d)] += 1;
            }
            // counts[j] = #{d <= r_j} = sum of hist[t] for t > j.
            let mut counts = vec![0u32; j_count];
            let mut acc = 0;
            for j in (0..j_count).rev() {
                acc += hist[j + 1];
                counts[j] = acc;
            }
            counts
        })
        .collect();
    rows.concat()
}

fn centered_from_counts(
    counts: &[u32],
    m: usize,
    j: usize,
    j_count: usize,
    k: usize,
    form: CorrelationForm,
) -> f64 {
    let power = (k - 1) as i32;
    let sum: f64 = (0..m)
        .map(|i| {
            let c = f64::from(counts[i * j_count + j]);
            match form {
                // Distinct neighbours: c (c - 1) ... over (M - 1) (M - 2) ...
                CorrelationForm::UStatistic => (0..k - 1)
                    .map(|t| (c - t as f64).max(0.0) / (m - 1 - t) as f64)
                    .product::<f64>(),
                CorrelationForm::Empirical => ((c + 1.0) / m as f64).powi(power),
            }
        })
        .sum();
    sum / m as f64
}

/// `(1/M) Σ_i [ (1/(M-1)) #{j != i : d(x_i, x_j) <= r} ]^{k-1}`, with the
/// power taken over distinct neighbours in the U-statistic form (a falling
/// factorial, unbiased for the `k`-fold ball measure).
pub fn centered_correlation_sum(points: &PointSet, r: f64, k: usize, metric: MetricSpec) -> Result<f64> {
    centered_correlation_sum_with(points, r, k, metric, CorrelationForm::UStatistic)
}

pub fn centered_correlation_sum_with(
    points: &PointSet,
    r: f64,
    k: usize,
    metric: MetricSpec,
    form: CorrelationForm,
) -> Result<f64> {
    check(points, k, metric)?;
    let counts = neighbour_counts(points, &[r], metric);
    Ok(centered_from_counts(&counts, points.len(), 0, 1, k, form))
}

/// Fraction of ordered k-tuples of distinct indices that are pairwise within
/// `r`; exact for small inputs, otherwise sampled with a fixed seed.
pub fn ktuple_correlation_sum(points: &PointSet, r: f64, k: usize, metric: MetricSpec) -> Result<f64> {
    ktuple_correlation_sum_with(points, r, k, metric, CorrelationForm::UStatistic)
}

pub fn ktuple_correlation_sum_with(
    points: &PointSet,
    r: f64,
    k: usize,
    metric: MetricSpec,
    form: CorrelationForm,
) -> Result<f64> {
    check(points, k, metric)?;
    if (points.len() as f64).powi(k as i32) <= EXACT_TUPLE_LIMIT {
        ktuple_exact(points, r, k, metric, form).map(|(c, _)| c)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(DimensionOptions::default().seed);
        ktuple_sampled(
            points,
            r,
            k,
            metric,
            form,
            DimensionOptions::default().tuple_samples,
            &mut rng,
        )
        .map(|(c, _)| c)
    }
}

/// Exact k-tuple sum by enumeration; returns the value and the tuple count.
pub fn ktuple_exact(
    points: &PointSet,
    r: f64,
    k: usize,
    metric: MetricSpec,
    form: CorrelationForm,
) -> Result<(f64, u64)> {
    check(points, k, metric)?;
    let m = points.len();
    let distinct = form == CorrelationForm::UStatistic;
    let count: u64 = (0..m)
        .into_par_iter()
        .map(|i| {
            let p = points.get(i);
            let near: Vec<usize> = (0..m)
                .filter(|&l| (l != i || !distinct) && metric.distance(p, points.get(l)) <= r)
                .collect();
            let mut chosen = Vec::with_capacity(k);
            chosen.push(i);
            count_tuples(points, metric, r, k, distinct, &near, &mut chosen)
        })
        .sum();
    let total: f64 = if distinct {
        (0..k).map(|t| (m - t) as f64).product()
    } else {
        (m as f64).powi(k as i32)
    };
    Ok((count as f64 / total, count))
}

fn count_tuples(
    points: &PointSet,
    metric: MetricSpec,
    r: f64,
    k: usize,
    distinct: bool,
    near: &[usize],
    chosen: &mut Vec<usize>,
) -> u64 {
    if chosen.len() == k {
        return 1;
    }
    let mut total = 0;
    for &c in near {
        if distinct && chosen.contains(&c) {
            continue;
        }
        let q = points.get(c);
        // The anchor (chosen[0]) is already within r of every candidate.
        if chosen[1..]
            .iter()
            .all(|&o| metric.distance(points.get(o), q) <= r)
        {
            chosen.push(c);
            total += count_tuples(points, metric, r, k, distinct, near, chosen);
            chosen.pop();
        }
    }
    total
}

/// Monte Carlo k-tuple sum from `samples` random tuples.
pub fn ktuple_sampled<R: Rng + ?Sized>(
    points: &PointSet,
    r: f64,
    k: usize,
    metric: MetricSpec,
    form: CorrelationForm,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, u64)> {
    check(points, k, metric)?;
    let m = points.len();
    let mut idx = vec![0usize; k];
    let mut hits = 0u64;
    for _ in 0..samples {
        for t in 0..k {
            idx[t] = loop {
                let c = rng.gen_range(0..m);
                if form == CorrelationForm::Empirical || !idx[..t].contains(&c) {
                    break c;
                }
            };
        }
        let close =
            (0..k).all(|a| (a + 1..k).all(|b| metric.distance(points.get(idx[a]), points.get(idx[b])) <= r));
        if close {
            hits += 1;
        }
    }
    Ok((hits as f64 / samples as f64, hits))
}

/// `D_k` estimate with the default options (centered U-statistic).
pub fn estimate_dk(
    points: &PointSet,
    ladder: &RadiiLadder,
    k: usize,
    metric: MetricSpec,
) -> Result<DimensionEstimate> {
    estimate_dk_with(points, ladder, k, metric, &DimensionOptions::default())
}

/// Least-squares slope of `log C(r)` against `log r`, divided by `k - 1`.
pub fn estimate_dk_with(
    points: &PointSet,
    ladder: &RadiiLadder,
    k: usize,
    metric: MetricSpec,
    opts: &DimensionOptions,
) -> Result<DimensionEstimate> {
    check(points, k, metric)?;
    ladder.validate()?;
    let radii = ladder.radii();
    let m = points.len();
    let mut rungs: Vec<CorrelationPoint> = match opts.estimator {
        Estimator::Centered => {
            let counts = neighbour_counts(points, &radii, metric);
            (0..radii.len())
                .map(|j| {
                    let ordered: u64 = (0..m).map(|i| u64::from(counts[i * radii.len() + j])).sum();
                    CorrelationPoint {
                        r: radii[j],
                        correlation: centered_from_counts(&counts, m, j, radii.len(), k, opts.form),
                        hits: ordered / 2,
                        used: false,
                    }
                })
                .collect()
        }
        Estimator::KTuple => {
            let exact = (m as f64).powi(k as i32) <= EXACT_TUPLE_LIMIT;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            radii
                .iter()
                .map(|&r| {
                    let (correlation, hits) = if exact {
                        ktuple_exact(points, r, k, metric, opts.form)?
                    } else {
                        ktuple_sampled(points, r, k, metric, opts.form, opts.tuple_samples, &mut rng)?
                    };
                    Ok(CorrelationPoint {
                        r,
                        correlation,
                        hits,
                        used: false,
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    for c in &mut rungs {
        c.used = c.hits >= opts.min_hits && c.correlation > 0.0 && c.correlation < 1.0;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rungs
        .iter()
        .filter(|c| c.used)
        .map(|c| (c.r.ln(), c.correlation.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::NoUsableRadii(format!(
            "{} of {} radii above the noise floor, need 3",
            xs.len(),
            rungs.len()
        )));
    }
    let fit =
        regression::fit(&xs, &ys).ok_or_else(|| Error::NoUsableRadii("degenerate regression".into()))?;
    if fit.slope <= 0.0 {
        return Err(Error::NoUsableRadii("correlation does not decay with r".into()));
    }
    Ok(DimensionEstimate {
        k,
        dimension: fit.slope / (k - 1) as f64,
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        ladder: rungs,
    })
}

/// Known `D_k` of a map's invariant measure, when it is absolutely continuous
/// with bounded density: 1 for the interval maps, `N` on the `N`-torus, and
/// the fiber dimension for Lebesgue-preserving skew products.
pub fn theoretical_dk(map: &MapSpec, k: usize) -> Option<f64> {
    if k < 2 {
        return None;
    }
    match map {
        MapSpec::MTimesMod1 { .. } | MapSpec::Beta { .. } | MapSpec::Gauss | MapSpec::PiecewiseDoubling => {
            Some(1.0)
        }
        MapSpec::TorusExpanding { dim, .. } => Some(*dim as f64),
        MapSpec::SkewProduct(s) => map.preserves_lebesgue().then(|| s.dim() as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SkewProduct;

    fn line(v: &[f64]) -> PointSet {
        PointSet::from_scalars(v)
    }

    const E1: MetricSpec = MetricSpec::EuclideanBox(1);

    #[test]
    fn saturated_sums_are_one() {
        let same = line(&[0.3; 10]);
        assert_eq!(centered_correlation_sum(&same, 0.01, 3, E1).unwrap(), 1.0);
        let pts = line(&[0.1, 0.5, 0.9, 0.2]);
        assert_eq!(centered_correlation_sum(&pts, 0.8, 2, E1).unwrap(), 1.0);
        assert_eq!(ktuple_correlation_sum(&pts, 0.8, 3, E1).unwrap(), 1.0);
    }

    #[test]
    fn three_point_triple_example() {
        let pts = line(&[0.0, 0.1, 0.5]);
        assert_eq!(ktuple_correlation_sum(&pts, 0.2, 3, E1).unwrap(), 0.0);
    }

    #[test]
    fn sandwich_holds_in_both_forms() {
        // Two far-apart pairs: no distinct triple is close, and no point has
        // two distinct neighbours either.
        let pts = line(&[0.0, 0.0, 0.9, 0.9]);
        for form in [CorrelationForm::UStatistic, CorrelationForm::Empirical] {
            let lower = centered_correlation_sum_with(&pts, 0.05, 3, E1, form).unwrap();
            let mid = ktuple_correlation_sum_with(&pts, 0.1, 3, E1, form).unwrap();
            let upper = centered_correlation_sum_with(&pts, 0.1, 3, E1, form).unwrap();
            assert!(lower <= mid && mid <= upper);
        }
        assert_eq!(centered_correlation_sum(&pts, 0.05, 3, E1).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let pts = line(&[0.1, 0.2]);
        assert!(matches!(
            centered_correlation_sum(&pts, 0.1, 3, E1),
            Err(Error::TooFewPoints { needed: 3, found: 2 })
        ));
        let same = line(&[0.4; 50]);
        assert!(matches!(
            estimate_dk(&same, &RadiiLadder::default(), 2, E1),
            Err(Error::NoUsableRadii(_))
        ));
        assert!(RadiiLadder::new(0.5, 3, 0.5).is_err());
        assert!(RadiiLadder::new(1.5, 5, 0.5).is_err());
    }

    #[test]
    fn ladder_is_decreasing() {
        let r = RadiiLadder::default().radii();
        assert!(r.windows(2).all(|w| w[1] < w[0]));
        assert!(r.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn sampled_matches_exact_roughly() {
        let v: Vec<f64> = (0..150).map(|i| ((i * 37) % 150) as f64 / 150.0).collect();
        let pts = line(&v);
        let (exact, _) = ktuple_exact(&pts, 0.1, 3, E1, CorrelationForm::UStatistic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (approx, _) =
            ktuple_sampled(&pts, 0.1, 3, E1, CorrelationForm::UStatistic, 200_000, &mut rng).unwrap();
        assert!((exact - approx).abs() < 0.003, "{exact} vs {approx}");
    }

    #[test]
    fn theory_values() {
        assert_eq!(theoretical_dk(&MapSpec::MTimesMod1 { m: 3 }, 2), Some(1.0));
        assert_eq!(
            theoretical_dk(&MapSpec::TorusExpanding { dim: 2, factor: 3 }, 3),
            Some(2.0)
        );
        assert_eq!(
            theoretical_dk(&MapSpec::SkewProduct(SkewProduct::doubling_tripling()), 2),
            Some(1.0)
        );
        assert_eq!(theoretical_dk(&MapSpec::Gauss, 1), None);
    }
}
