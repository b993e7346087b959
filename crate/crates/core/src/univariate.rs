//! One-dimensional comparator statistics: Kolmogorov-Smirnov,
//! Cramer-von Mises, and chi-square with equal-probability bins.
//!
//! All three are rank-based, so they are exactly invariant under any
//! strictly increasing transform applied jointly to both samples. Their
//! null distributions come from the permutation engine, never from
//! asymptotics.

use crate::error::{Error, Result};
use crate::samples::Sample;

/// Two 1-D samples held sorted ascending.
#[derive(Debug, Clone)]
pub struct UnivariateSamplePair {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl UnivariateSamplePair {
    pub fn new(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidSample("empty sample".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite value".into()));
        }
        a.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
        Ok(UnivariateSamplePair { a, b })
    }

    pub fn from_samples(a: &Sample, b: &Sample) -> Result<Self> {
        if a.dim() != 1 || b.dim() != 1 {
            return Err(Error::DimensionMismatch {
                left: a.dim(),
                right: b.dim(),
            });
        }
        Self::new(
            a.rows().map(|r| r[0]).collect(),
            b.rows().map(|r| r[0]).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Merge into pooled sorted order, yielding the source of each value.
    /// Ties resolve to the A side first; the statistics below only ever
    /// evaluate CDFs after a whole tie group, so the order within a tie
    /// does not affect them.
    fn merged(&self) -> Vec<(f64, bool)> {
        let mut merged = Vec::with_capacity(self.a.len() + self.b.len());
        let (mut i, mut j) = (0, 0);
        while i < self.a.len() || j < self.b.len() {
            let take_a = j >= self.b.len() || (i < self.a.len() && self.a[i] <= self.b[j]);
            if take_a {
                merged.push((self.a[i], true));
                i += 1;
            } else {
                merged.push((self.b[j], false));
                j += 1;
            }
        }
        merged
    }
}

/// Walk the pooled sorted order, invoking `visit(value, f_n, g_m, count)`
/// once per distinct pooled value after all its ties are absorbed;
/// `count` is the value's pooled multiplicity.
fn walk_cdfs<F: FnMut(f64, f64, f64, usize)>(pair: &UnivariateSamplePair, mut visit: F) {
    let merged = pair.merged();
    let (n, m) = (pair.n() as f64, pair.m() as f64);
    let (mut ca, mut cb) = (0usize, 0usize);
    let mut idx = 0;
    while idx < merged.len() {
        let value = merged[idx].0;
        let mut count = 0;
        while idx < merged.len() && merged[idx].0 == value {
            if merged[idx].1 {
                ca += 1;
            } else {
                cb += 1;
            }
            count += 1;
            idx += 1;
        }
        visit(value, ca as f64 / n, cb as f64 / m, count);
    }
}

/// Kolmogorov-Smirnov: `D = sup |F_n - G_m|` over pooled points.
/// High values reject.
pub fn ks_statistic(pair: &UnivariateSamplePair) -> f64 {
    let mut d = 0.0f64;
    walk_cdfs(pair, |_, fa, fb, _| d = d.max((fa - fb).abs()));
    d
}

/// Cramer-von Mises: `T = (nm/N^2) * sum over the N pooled points of
/// (F_n - G_m)^2`, each point contributing once (tied values contribute
/// their multiplicity). High values reject.
pub fn cvm_statistic(pair: &UnivariateSamplePair) -> f64 {
    let (n, m) = (pair.n() as f64, pair.m() as f64);
    let nt = n + m;
    let mut sum = 0.0;
    walk_cdfs(pair, |_, fa, fb, count| {
        let diff = fa - fb;
        sum += diff * diff * count as f64;
    });
    n * m / (nt * nt) * sum
}

/// Equal-probability-bin edges from pooled quantiles: edge `i` is the
/// midpoint between the order statistics straddling rank `i*N/k`.
/// Returns `k - 1` strictly increasing edges.
pub fn equal_probability_edges(sorted_pool: &[f64], bins: usize) -> Result<Vec<f64>> {
    let nt = sorted_pool.len();
    if bins < 2 {
        return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
    }
    if nt < 2 * bins {
        return Err(Error::Domain(format!(
            "need a pooled sample of at least 2k={} for k={bins} bins, got {nt}",
            2 * bins
        )));
    }
    let mut edges = Vec::with_capacity(bins - 1);
    for i in 1..bins {
        let rank = i * nt / bins; // observations strictly below the edge
        let edge = 0.5 * (sorted_pool[rank - 1] + sorted_pool[rank]);
        if let Some(&prev) = edges.last() {
            if edge <= prev {
                return Err(Error::DegenerateBins { index: i, bins });
            }
        }
        edges.push(edge);
    }
    Ok(edges)
}

/// Bin index under the convention that values equal to an edge fall in
/// the lower bin.
#[inline]
pub fn bin_index(edges: &[f64], value: f64) -> usize {
    edges.iter().take_while(|&&e| e < value).count()
}

/// Chi-square over `k` equal-probability bins placed at pooled
/// quantiles, so expected counts are exactly `n/k` and `m/k` under the
/// null. High values reject.
pub fn chi2_equal_prob_statistic(pair: &UnivariateSamplePair, bins: usize) -> Result<f64> {
    let mut sorted_pool: Vec<f64> = pair.a.iter().chain(pair.b.iter()).copied().collect();
    sorted_pool.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    let edges = equal_probability_edges(&sorted_pool, bins)?;

    let mut count_a = vec![0usize; bins];
    let mut count_b = vec![0usize; bins];
    for &v in &pair.a {
        count_a[bin_index(&edges, v)] += 1;
    }
    for &v in &pair.b {
        count_b[bin_index(&edges, v)] += 1;
    }
    Ok(chi2_from_counts(&count_a, &count_b, pair.n(), pair.m()))
}

/// `sum_i (a_i - n/k)^2/(n/k) + (b_i - m/k)^2/(m/k)`.
pub fn chi2_from_counts(count_a: &[usize], count_b: &[usize], n: usize, m: usize) -> f64 {
    let k = count_a.len() as f64;
    let expect_a = n as f64 / k;
    let expect_b = m as f64 / k;
    let mut total = 0.0;
    for (&ai, &bi) in count_a.iter().zip(count_b) {
        let da = ai as f64 - expect_a;
        let db = bi as f64 - expect_b;
        total += da * da / expect_a + db * db / expect_b;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair(a: &[f64], b: &[f64]) -> UnivariateSamplePair {
        UnivariateSamplePair::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn ks_disjoint_supports_give_one() {
        assert_eq!(ks_statistic(&pair(&[1.0, 2.0], &[3.0, 4.0])), 1.0);
    }

    #[test]
    fn ks_interleaved_half() {
        assert_relative_eq!(
            ks_statistic(&pair(&[1.0, 3.0], &[2.0, 4.0])),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn ks_identical_samples_give_zero() {
        let v = [0.4, 1.0, 2.5, 2.5];
        assert_eq!(ks_statistic(&pair(&v, &v)), 0.0);
    }

    #[test]
    fn cvm_identical_samples_give_zero() {
        let v = [1.0, 2.0, 7.0];
        assert_eq!(cvm_statistic(&pair(&v, &v)), 0.0);
    }

    #[test]
    fn cvm_hand_computed_singletons() {
        // pooled {1,2}: diffs 1 at z=1, 0 at z=2 -> (1/4)(1+0)
        assert_relative_eq!(
            cvm_statistic(&pair(&[1.0], &[2.0])),
            0.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn cvm_hand_computed_disjoint() {
        // diffs at pooled points: .5, 1, .5, 0 -> (4/16)(.25+1+.25+0)
        assert_relative_eq!(
            cvm_statistic(&pair(&[1.0, 2.0], &[3.0, 4.0])),
            0.375,
            epsilon = 1e-15
        );
    }

    #[test]
    fn chi2_balanced_distinct_values_give_zero() {
        let a = [1.0, 3.0, 5.0, 7.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        let v = chi2_equal_prob_statistic(&pair(&a, &b), 2).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn chi2_separated_samples_hand_computed() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let v = chi2_equal_prob_statistic(&pair(&a, &b), 2).unwrap();
        assert_relative_eq!(v, 8.0, epsilon = 1e-15);
    }

    #[test]
    fn chi2_requires_two_k_pooled_observations() {
        assert!(chi2_equal_prob_statistic(&pair(&[1.0, 2.0], &[3.0]), 2).is_err());
    }

    #[test]
    fn chi2_detects_degenerate_edges() {
        let a = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let b = [1.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        match chi2_equal_prob_statistic(&pair(&a, &b), 3) {
            Err(Error::DegenerateBins { .. }) => {}
            other => panic!("expected degenerate bins, got {other:?}"),
        }
    }

    #[test]
    fn edge_midpoint_convention() {
        // pooled {1..8}, k=2: rank 4 -> midpoint of 4 and 5
        let sorted: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(equal_probability_edges(&sorted, 2).unwrap(), vec![4.5]);
        // value equal to an edge goes to the lower bin
        assert_eq!(bin_index(&[4.5], 4.5), 0);
        assert_eq!(bin_index(&[4.5], 4.6), 1);
    }

    #[test]
    fn statistics_are_rank_invariant() {
        let a = [0.3, -1.0, 2.0, 0.7, 5.0];
        let b = [1.5, -0.2, 0.9, 3.0];
        let grow = |v: f64| (v * 0.5).exp() + v.powi(3) * 0.01;
        let ta: Vec<f64> = a.iter().map(|&v| grow(v)).collect();
        let tb: Vec<f64> = b.iter().map(|&v| grow(v)).collect();
        assert_eq!(
            ks_statistic(&pair(&a, &b)),
            ks_statistic(&pair(&ta, &tb))
        );
        assert_eq!(
            cvm_statistic(&pair(&a, &b)),
            cvm_statistic(&pair(&ta, &tb))
        );
    }
}
