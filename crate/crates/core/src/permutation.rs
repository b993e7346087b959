//! Permutation-resampling nulls, p-values, critical values, and the
//! level-calibration study.
//!
//! The null distribution of any statistic is obtained by relabeling the
//! pooled sample into groups of the original sizes: every draw selects a
//! size-n subset uniformly from the C(N, n) possible partitions. When
//! C(N, n) is small enough the engine enumerates every partition exactly
//! instead. Distances are never recomputed; only labels change.
//!
//! Each draw's labeling derives from `stream.child(b)`, so nulls are
//! bit-identical for a given seed regardless of thread count.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::methods::{Method, PreparedStatistic, Tail};
use crate::rng::RngStream;
use crate::samples::{DistanceMatrix, Label, LabeledPool};

/// Enumerate exactly when the partition count is at most this.
pub const DEFAULT_EXHAUSTIVE_CAP: u64 = 100_000;

/// C(n, k), saturating at `u64::MAX` to keep cap comparisons safe.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) as u128 / (i + 1) as u128;
        if result > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    result as u64
}

/// The labeling with lexicographic rank `rank` among all C(nt, n)
/// size-n subsets of `0..nt`.
fn combination_labels(mut rank: u64, nt: usize, n: usize) -> Vec<Label> {
    let mut labels = vec![Label::B; nt];
    let mut remaining = n;
    for pos in 0..nt {
        if remaining == 0 {
            break;
        }
        let with_pos = binomial(nt - pos - 1, remaining - 1);
        if rank < with_pos {
            labels[pos] = Label::A;
            remaining -= 1;
        } else {
            rank -= with_pos;
        }
    }
    debug_assert_eq!(remaining, 0);
    labels
}

/// A uniformly random size-n subset of `0..nt` as a label vector.
fn random_labels<R: Rng>(rng: &mut R, nt: usize, n: usize) -> Vec<Label> {
    let mut indices: Vec<u32> = (0..nt as u32).collect();
    for i in 0..n {
        let j = rng.random_range(i..nt);
        indices.swap(i, j);
    }
    let mut labels = vec![Label::B; nt];
    for &idx in &indices[..n] {
        labels[idx as usize] = Label::A;
    }
    labels
}

/// A statistic's resampled (or enumerated) null distribution.
#[derive(Debug, Clone)]
pub struct NullDistribution {
    values: Vec<f64>,
    tail: Tail,
    stream: RngStream,
    exhaustive: bool,
}

/// Sample `permutations` relabelings (draw `b` keyed by
/// `stream.child(b)`), or enumerate all partitions when their count is
/// at most `exhaustive_cap`.
pub fn permutation_null_with_cap(
    prepared: &PreparedStatistic,
    permutations: usize,
    stream: RngStream,
    exhaustive_cap: u64,
) -> NullDistribution {
    let (n, nt) = (prepared.n(), prepared.n() + prepared.m());
    let total = binomial(nt, n);
    if total <= exhaustive_cap {
        let values = exec::map_indices(total as usize, |rank| {
            prepared.evaluate(&combination_labels(rank as u64, nt, n))
        });
        NullDistribution {
            values,
            tail: prepared.tail(),
            stream,
            exhaustive: true,
        }
    } else {
        let values = exec::map_indices(permutations, |b| {
            let mut rng = stream.child(b as u64).rng();
            prepared.evaluate(&random_labels(&mut rng, nt, n))
        });
        NullDistribution {
            values,
            tail: prepared.tail(),
            stream,
            exhaustive: false,
        }
    }
}

/// [`permutation_null_with_cap`] with the default exhaustive cap.
pub fn permutation_null(
    prepared: &PreparedStatistic,
    permutations: usize,
    stream: RngStream,
) -> NullDistribution {
    permutation_null_with_cap(prepared, permutations, stream, DEFAULT_EXHAUSTIVE_CAP)
}

impl NullDistribution {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn stream(&self) -> RngStream {
        self.stream
    }

    fn count_at_least_as_extreme(&self, observed: f64) -> usize {
        match self.tail {
            Tail::High => self.values.iter().filter(|&&v| v >= observed).count(),
            Tail::Low => self.values.iter().filter(|&&v| v <= observed).count(),
        }
    }

    /// Permutation p-value of an observed statistic.
    ///
    /// Sampled nulls use the add-the-observed-labeling correction
    /// `(1 + extreme) / (B + 1)`, which keeps the test valid at finite B;
    /// exhaustive nulls use the exact fraction over all partitions (the
    /// observed labeling is one of them, so p > 0 either way).
    pub fn p_value(&self, observed: f64) -> f64 {
        let extreme = self.count_at_least_as_extreme(observed);
        if self.exhaustive {
            extreme as f64 / self.values.len() as f64
        } else {
            (1 + extreme) as f64 / (self.values.len() + 1) as f64
        }
    }

    /// Critical value at level `alpha`: the rank-`floor(alpha*(B+1))`
    /// value from the rejection end (exhaustive nulls use
    /// `floor(alpha*B)`). Rejection means `observed >= value` for high
    /// tails and `observed <= value` for low tails.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let len = self.values.len();
        let rank = if self.exhaustive {
            (alpha * len as f64).floor() as usize
        } else {
            (alpha * (len + 1) as f64).floor() as usize
        };
        if rank < 1 {
            return Err(Error::InsufficientPermutations {
                permutations: len,
                alpha,
            });
        }
        let mut sorted = self.values.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(match self.tail {
            Tail::High => sorted[len - rank],
            Tail::Low => sorted[rank - 1],
        })
    }

    /// Would `observed` be rejected against this null at level `alpha`?
    pub fn rejects(&self, observed: f64, alpha: f64) -> bool {
        self.p_value(observed) <= alpha
    }
}

/// Outcome of one two-sample test.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    pub critical_value: f64,
    pub alpha: f64,
    /// Number of null values actually used (the partition count in
    /// exhaustive mode).
    pub permutations: usize,
    pub exhaustive: bool,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub d: usize,
}

/// Options for [`run_test`].
#[derive(Debug, Clone, Copy)]
pub struct TestOptions {
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions {
            permutations: 1000,
            alpha: 0.05,
            seed: 1,
        }
    }
}

/// Run one two-sample test end to end: prepare the statistic, evaluate
/// the observed labeling, build the permutation null, report.
pub fn run_test(
    pool: &LabeledPool,
    dm: &DistanceMatrix,
    method: &Method,
    options: &TestOptions,
) -> Result<TestOutcome> {
    let prepared = method.prepare(pool, dm)?;
    let observed = prepared.evaluate(pool.labels());
    let null = permutation_null(&prepared, options.permutations, RngStream::root(options.seed));
    Ok(TestOutcome {
        method: method.name().to_string(),
        statistic: observed,
        p_value: null.p_value(observed),
        critical_value: null.critical_value(options.alpha)?,
        alpha: options.alpha,
        permutations: null.len(),
        exhaustive: null.exhaustive(),
        seed: options.seed,
        n: pool.n(),
        m: pool.m(),
        d: pool.dim(),
    })
}

/// Options for the level-calibration study.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    pub n: usize,
    pub m: usize,
    /// Batch size B whose critical-value noise is being measured.
    pub permutations: usize,
    /// Number of repeated batch estimates (at least 30).
    pub repeats: usize,
    pub alpha: f64,
    /// Size of the high-precision reference null.
    pub reference_permutations: usize,
    pub seed: u64,
}

impl CalibrationOptions {
    pub fn new(n: usize, m: usize, permutations: usize, repeats: usize, seed: u64) -> Self {
        CalibrationOptions {
            n,
            m,
            permutations,
            repeats,
            alpha: 0.05,
            reference_permutations: 100_000,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    /// Central 95% interval of the achieved level over the repeats.
    pub interval_low: f64,
    pub interval_high: f64,
    /// One achieved-level estimate per repeat.
    pub achieved_levels: Vec<f64>,
    pub options: CalibrationOptions,
}

/// Linearly interpolated quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let position = q * (sorted.len() - 1) as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    let weight = position - lower as f64;
    sorted[lower] * (1.0 - weight) + sorted[upper] * weight
}

/// Measure how the achieved significance level fluctuates with the
/// permutation count B.
///
/// One pooled sample of n+m uniform observations is fixed. A reference
/// null of `reference_permutations` relabelings defines ground truth.
/// Each repeat estimates the critical value from a fresh batch of B
/// relabelings and maps it to its achieved level (the fraction of the
/// reference null at least as extreme); the central 95% interval of
/// those levels is reported.
pub fn calibrate_alpha(options: &CalibrationOptions) -> Result<CalibrationResult> {
    if options.repeats < 30 {
        return Err(Error::Domain(format!(
            "calibration needs at least 30 repeats, got {}",
            options.repeats
        )));
    }
    if options.n < 2 || options.m < 2 {
        return Err(Error::InsufficientSample {
            required: 2,
            n: options.n,
            m: options.m,
        });
    }
    let root = RngStream::root(options.seed);

    let mut rng = root.child(0).rng();
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, count: usize| {
        crate::samples::Sample::univariate(
            &(0..count).map(|_| rng.random::<f64>()).collect::<Vec<_>>(),
        )
        .expect("uniform draws are finite")
    };
    let a = draw(&mut rng, options.n);
    let b = draw(&mut rng, options.m);
    let pool = crate::samples::pool(&a, &b)?;
    let dm = crate::samples::distance_matrix(&pool);
    let prepared = Method::Energy(Default::default()).prepare(&pool, &dm)?;

    // Force sampling: the study measures batch-resampling noise, so it
    // must never fall back to enumeration.
    let reference =
        permutation_null_with_cap(&prepared, options.reference_permutations, root.child(1), 0);
    let ref_len = reference.len() as f64;

    let batches = root.child(2);
    let achieved: Result<Vec<f64>> = exec::map_indices(options.repeats, |k| {
        let batch =
            permutation_null_with_cap(&prepared, options.permutations, batches.child(k as u64), 0);
        let critical = batch.critical_value(options.alpha)?;
        Ok(reference
            .values()
            .iter()
            .filter(|&&v| v >= critical)
            .count() as f64
            / ref_len)
    })
    .into_iter()
    .collect();
    let achieved = achieved?;

    let mut sorted = achieved.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(CalibrationResult {
        interval_low: quantile_sorted(&sorted, 0.025),
        interval_high: quantile_sorted(&sorted, 0.975),
        achieved_levels: achieved,
        options: *options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::EnergyConfig;
    use crate::samples::{distance_matrix, pool, Sample};
    use approx::assert_relative_eq;

    fn energy_prepared(a: &[f64], b: &[f64]) -> (LabeledPool, PreparedStatistic) {
        let p = pool(
            &Sample::univariate(a).unwrap(),
            &Sample::univariate(b).unwrap(),
        )
        .unwrap();
        let dm = distance_matrix(&p);
        let prepared = Method::Energy(EnergyConfig::default())
            .prepare(&p, &dm)
            .unwrap();
        (p, prepared)
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(3, 2), 3);
        assert_eq!(binomial(10, 5), 252);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(4, 7), 0);
        assert_eq!(binomial(200, 100), u64::MAX); // saturates
    }

    #[test]
    fn combination_unranking_is_lexicographic_and_complete() {
        let expected = [
            [Label::A, Label::A, Label::B],
            [Label::A, Label::B, Label::A],
            [Label::B, Label::A, Label::A],
        ];
        for (rank, want) in expected.iter().enumerate() {
            assert_eq!(combination_labels(rank as u64, 3, 2), want);
        }

        // all C(6,2)=15 subsets distinct
        let mut seen = std::collections::HashSet::new();
        for rank in 0..binomial(6, 2) {
            let labels = combination_labels(rank, 6, 2);
            assert_eq!(labels.iter().filter(|&&l| l == Label::A).count(), 2);
            assert!(seen.insert(format!("{labels:?}")));
        }
        assert_eq!(seen.len(), 15);
    }

    #[test]
    fn small_pool_goes_exhaustive_with_hand_computed_values() {
        // A={0,2}, B={1}: the three partitions give
        //   {0,2 | 1}: -(ln 2)/4, {0,1 | 2}: +(ln 2)/2, {2,1 | 0}: +(ln 2)/2
        let (p, prepared) = energy_prepared(&[0.0, 2.0], &[1.0]);
        let null = permutation_null(&prepared, 1000, RngStream::root(9));
        assert!(null.exhaustive());
        assert_eq!(null.len(), 3);

        let observed = prepared.evaluate(p.labels());
        let ln2 = 2.0f64.ln();
        assert_relative_eq!(null.values()[0], -ln2 / 4.0, epsilon = 1e-12);
        assert_relative_eq!(null.values()[1], ln2 / 2.0, epsilon = 1e-12);
        assert_relative_eq!(null.values()[2], ln2 / 2.0, epsilon = 1e-12);
        // the observed labeling appears among the enumerated values
        assert!(null.values().iter().any(|&v| v == observed));
        // observed is the unique minimum; with a high tail every value
        // is at least as extreme
        assert_relative_eq!(null.p_value(observed), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exhaustive_p_value_of_the_maximum_is_one_over_count() {
        let (_, prepared) = energy_prepared(&[0.0, 2.0], &[1.0]);
        let null = permutation_null(&prepared, 1000, RngStream::root(9));
        let max = null.values().iter().cloned().fold(f64::MIN, f64::max);
        // two tied values at the maximum here, so extreme count is 2 of 3
        assert_relative_eq!(null.p_value(max), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sampled_null_is_deterministic_for_a_seed() {
        let (_, prepared) = energy_prepared(
            &[0.1, 0.9, 0.4, 0.7, 0.2, 0.55, 0.35, 0.85, 0.05, 0.65, 0.15],
            &[0.3, 0.8, 0.5, 0.25, 0.75, 0.45, 0.95, 0.6, 0.12, 0.88],
        );
        let null_a = permutation_null_with_cap(&prepared, 100, RngStream::root(5), 0);
        let null_b = permutation_null_with_cap(&prepared, 100, RngStream::root(5), 0);
        assert!(!null_a.exhaustive());
        assert_eq!(null_a.values(), null_b.values());

        let null_c = permutation_null_with_cap(&prepared, 100, RngStream::root(6), 0);
        assert_ne!(null_a.values(), null_c.values());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn sampled_null_is_independent_of_thread_count() {
        let (_, prepared) = energy_prepared(
            &[0.1, 0.9, 0.4, 0.7, 0.2, 0.55, 0.35, 0.85, 0.05, 0.65, 0.15],
            &[0.3, 0.8, 0.5, 0.25, 0.75, 0.45, 0.95, 0.6, 0.12, 0.88],
        );
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| permutation_null_with_cap(&prepared, 200, RngStream::root(11), 0))
        };
        assert_eq!(run(1).values(), run(4).values());
    }

    fn synthetic_null(values: Vec<f64>, tail: Tail, exhaustive: bool) -> NullDistribution {
        NullDistribution {
            values,
            tail,
            stream: RngStream::root(0),
            exhaustive,
        }
    }

    #[test]
    fn p_value_extreme_and_median_conventions() {
        let values: Vec<f64> = (1..=999).map(|i| i as f64).collect();
        let null = synthetic_null(values, Tail::High, false);
        assert_relative_eq!(null.p_value(1e6), 0.001, epsilon = 1e-15);
        // at the median of 999 values, extreme count is 500
        assert_relative_eq!(null.p_value(500.0), 0.501, epsilon = 1e-15);

        let low = synthetic_null((1..=999).map(|i| i as f64).collect(), Tail::Low, false);
        assert_relative_eq!(low.p_value(0.0), 0.001, epsilon = 1e-15);
    }

    #[test]
    fn p_value_is_monotone_nonincreasing_for_high_tail() {
        let values = vec![0.3, 0.1, 0.9, 0.5, 0.7, 0.2];
        let null = synthetic_null(values, Tail::High, false);
        let mut previous = f64::INFINITY;
        for step in 0..30 {
            let observed = step as f64 * 0.05 - 0.2;
            let p = null.p_value(observed);
            assert!(p <= previous);
            previous = p;
        }
    }

    #[test]
    fn critical_value_rank_arithmetic() {
        let values: Vec<f64> = (1..=999).map(|i| i as f64).collect();
        let null = synthetic_null(values, Tail::High, false);
        // floor(0.05 * 1000) = 50th largest of 1..=999
        assert_eq!(null.critical_value(0.05).unwrap(), 950.0);

        let tiny = synthetic_null((1..=19).map(|i| i as f64).collect(), Tail::High, false);
        assert_eq!(tiny.critical_value(0.05).unwrap(), 19.0); // the maximum

        let insufficient = synthetic_null((1..=10).map(|i| i as f64).collect(), Tail::High, false);
        assert!(matches!(
            insufficient.critical_value(0.05),
            Err(Error::InsufficientPermutations { .. })
        ));

        let low = synthetic_null((1..=999).map(|i| i as f64).collect(), Tail::Low, false);
        assert_eq!(low.critical_value(0.05).unwrap(), 50.0);
    }

    #[test]
    fn run_test_outcome_is_coherent() {
        let a: Vec<f64> = (0..12).map(|i| i as f64 * 0.37).collect();
        let b: Vec<f64> = (0..10).map(|i| 0.21 + i as f64 * 0.41).collect();
        let p = pool(
            &Sample::univariate(&a).unwrap(),
            &Sample::univariate(&b).unwrap(),
        )
        .unwrap();
        let dm = distance_matrix(&p);
        let options = TestOptions {
            permutations: 199,
            alpha: 0.05,
            seed: 42,
        };
        let outcome = run_test(&p, &dm, &Method::KolmogorovSmirnov, &options).unwrap();
        assert_eq!(outcome.method, "ks");
        assert_eq!(outcome.n, 12);
        assert_eq!(outcome.m, 10);
        assert_eq!(outcome.d, 1);
        assert!(outcome.p_value > 0.0 && outcome.p_value <= 1.0);

        let again = run_test(&p, &dm, &Method::KolmogorovSmirnov, &options).unwrap();
        assert_eq!(outcome.p_value, again.p_value);
        assert_eq!(outcome.statistic, again.statistic);
    }

    #[test]
    fn calibration_rejects_bad_repeat_counts() {
        let options = CalibrationOptions::new(10, 10, 100, 5, 1);
        assert!(calibrate_alpha(&options).is_err());
    }

    #[test]
    fn self_calibration_interval_collapses() {
        // B equal to the reference size: critical-value noise shrinks to
        // the reference's own resolution, so the interval tightens.
        let mut options = CalibrationOptions::new(20, 20, 20_000, 30, 7);
        options.reference_permutations = 20_000;
        let result = calibrate_alpha(&options).unwrap();
        assert!(result.interval_high - result.interval_low < 0.01);
        assert!((result.interval_low - 0.05).abs() < 0.02);
        assert!((result.interval_high - 0.05).abs() < 0.02);
    }

    #[test]
    fn quantiles_interpolate() {
        let sorted: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_relative_eq!(quantile_sorted(&sorted, 0.025), 2.5, epsilon = 1e-12);
        assert_relative_eq!(quantile_sorted(&sorted, 0.975), 97.5, epsilon = 1e-12);
    }
}
