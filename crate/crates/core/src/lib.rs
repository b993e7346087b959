//! Two-sample testing in arbitrary dimension.
//!
//! The central statistic is the energy statistic: a sum of within-sample
//! and cross-sample interaction terms of a decreasing kernel of Euclidean
//! distance. Large values indicate that the two samples were drawn from
//! different parents. Competitor statistics (Friedman-Rafsky minimum
//! spanning tree runs, nearest-neighbor coincidences, Kolmogorov-Smirnov,
//! Cramer-von Mises, equal-probability-bin chi-square) share the same
//! permutation-resampling engine, so every test uses the identical null
//! methodology.
//!
//! The `power` module drives Monte Carlo power studies over scenario files
//! describing distribution pairs; the `distributions` module generates
//! every population those scenarios need.
//!
//! Everything is deterministic given a seed: random streams are derived
//! by counter-based splitting, so results do not depend on thread count.

pub mod distributions;
pub mod error;
pub mod exec;
pub mod graph;
pub mod kernels;
pub mod methods;
pub mod permutation;
pub mod power;
pub mod rng;
pub mod samples;
pub mod univariate;

pub use error::{Error, Result};
pub use kernels::DistanceKernel;
pub use methods::{Method, PreparedStatistic, Tail};
pub use permutation::{NullDistribution, TestOutcome};
pub use rng::RngStream;
pub use samples::{DistanceMatrix, Label, LabeledPool, Sample};
