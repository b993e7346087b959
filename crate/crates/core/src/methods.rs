//! The statistic registry: every two-sample test, reduced to a function
//! of the label vector.
//!
//! A [`Method`] is prepared once per pool into a [`PreparedStatistic`]
//! holding all label-independent work (the kernel matrix for the energy
//! statistic, the spanning tree for Friedman-Rafsky, the neighbor table,
//! the pooled sort order, the bin assignment). Evaluating a permutation
//! then touches only the labels, which is what makes resampling nulls
//! cheap: geometry is never recomputed.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph;
use crate::kernels::DistanceKernel;
use crate::samples::{DistanceMatrix, Label, LabeledPool};
use crate::univariate;

/// Rejection direction of a statistic's permutation test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// Large observed values reject the null.
    High,
    /// Small observed values reject the null.
    Low,
}

/// Energy statistic configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConfig {
    pub kernel: DistanceKernel,
    /// Optional floor `eps`: distances are clamped to `max(r, eps)`
    /// before kernel evaluation. Off by default; coincident observations
    /// are an error under singular kernels.
    pub min_distance: Option<f64>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            kernel: DistanceKernel::Log,
            min_distance: None,
        }
    }
}

/// A two-sample test statistic selectable by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Energy(EnergyConfig),
    FriedmanRafsky,
    NearestNeighbor,
    KolmogorovSmirnov,
    CramerVonMises,
    ChiSquared { bins: usize },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Energy(_) => "energy",
            Method::FriedmanRafsky => "fr",
            Method::NearestNeighbor => "nn",
            Method::KolmogorovSmirnov => "ks",
            Method::CramerVonMises => "cvm",
            Method::ChiSquared { .. } => "chi2",
        }
    }

    pub fn tail(&self) -> Tail {
        match self {
            Method::FriedmanRafsky => Tail::Low,
            _ => Tail::High,
        }
    }

    /// Parse a comma-separated method list, e.g. `energy,fr,nn`.
    pub fn parse_list(text: &str) -> Result<Vec<Method>> {
        text.split(',')
            .map(|part| part.trim().parse())
            .collect()
    }

    /// Precompute everything label-independent for this pool.
    pub fn prepare(
        &self,
        pool: &LabeledPool,
        dm: &DistanceMatrix,
    ) -> Result<PreparedStatistic> {
        let kind = match *self {
            Method::Energy(config) => prepare_energy(pool, dm, config)?,
            Method::FriedmanRafsky => {
                let mst = graph::minimum_spanning_tree(dm)?;
                PreparedKind::FriedmanRafsky {
                    edges: mst
                        .edges()
                        .iter()
                        .map(|&(i, j, _)| (i as u32, j as u32))
                        .collect(),
                }
            }
            Method::NearestNeighbor => PreparedKind::NearestNeighbor {
                neighbor: graph::nearest_neighbor_indices(dm)?
                    .into_iter()
                    .map(|j| j as u32)
                    .collect(),
            },
            Method::KolmogorovSmirnov => prepare_ranked(pool, RankedStatistic::Ks)?,
            Method::CramerVonMises => prepare_ranked(pool, RankedStatistic::Cvm)?,
            Method::ChiSquared { bins } => prepare_chi2(pool, bins)?,
        };
        Ok(PreparedStatistic {
            name: self.name(),
            tail: self.tail(),
            n: pool.n(),
            m: pool.m(),
            kind,
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(Method::Energy(EnergyConfig::default())),
            "fr" => Ok(Method::FriedmanRafsky),
            "nn" => Ok(Method::NearestNeighbor),
            "ks" => Ok(Method::KolmogorovSmirnov),
            "cvm" => Ok(Method::CramerVonMises),
            "chi2" => Ok(Method::ChiSquared { bins: 5 }),
            _ => Err(Error::Domain(format!(
                "unknown method {s:?}; expected one of energy, fr, nn, ks, cvm, chi2"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum RankedStatistic {
    Ks,
    Cvm,
}

#[derive(Debug, Clone)]
enum PreparedKind {
    Energy {
        /// Full symmetric kernel values, row-major `i*size + j`.
        kernel_matrix: Vec<f64>,
        size: usize,
    },
    FriedmanRafsky {
        edges: Vec<(u32, u32)>,
    },
    NearestNeighbor {
        neighbor: Vec<u32>,
    },
    Ranked {
        which: RankedStatistic,
        /// Pool indices sorted by coordinate value.
        order: Vec<u32>,
        /// Lengths of successive tie groups along `order`.
        group_lens: Vec<u32>,
    },
    ChiSquared {
        /// Bin index of each pool observation.
        bin_of: Vec<u16>,
        bins: usize,
    },
}

/// A statistic with its label-independent context baked in; evaluating a
/// labeling is pure and cheap. Shareable across threads.
#[derive(Debug, Clone)]
pub struct PreparedStatistic {
    name: &'static str,
    tail: Tail,
    n: usize,
    m: usize,
    kind: PreparedKind,
}

impl PreparedStatistic {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Evaluate the statistic for an arbitrary labeling of the pool.
    /// `labels` must contain exactly `n` A entries.
    pub fn evaluate(&self, labels: &[Label]) -> f64 {
        let (n, m) = (self.n as f64, self.m as f64);
        match &self.kind {
            PreparedKind::Energy {
                kernel_matrix,
                size,
            } => {
                let nt = *size;
                // Term-by-term accumulation; unlike the standalone
                // operation the cross addends are not value-sorted (the
                // permutation loop cannot afford it), so values here may
                // differ from it in the final ulp.
                let (a_idx, b_idx) = crate::kernels::indices_by_label(labels);
                let mut sum_a = 0.0;
                for (p, &i) in a_idx.iter().enumerate() {
                    let row = &kernel_matrix[i as usize * nt..(i as usize + 1) * nt];
                    for &j in &a_idx[p + 1..] {
                        sum_a += row[j as usize];
                    }
                }
                let mut sum_b = 0.0;
                for (p, &i) in b_idx.iter().enumerate() {
                    let row = &kernel_matrix[i as usize * nt..(i as usize + 1) * nt];
                    for &j in &b_idx[p + 1..] {
                        sum_b += row[j as usize];
                    }
                }
                let mut sum_cross = 0.0;
                for &i in &a_idx {
                    let row = &kernel_matrix[i as usize * nt..(i as usize + 1) * nt];
                    for &j in &b_idx {
                        sum_cross += row[j as usize];
                    }
                }
                sum_a / (n * n) + sum_b / (m * m) - sum_cross / (n * m)
            }
            PreparedKind::FriedmanRafsky { edges } => edges
                .iter()
                .filter(|&&(i, j)| labels[i as usize] != labels[j as usize])
                .count() as f64,
            PreparedKind::NearestNeighbor { neighbor } => {
                neighbor
                    .iter()
                    .enumerate()
                    .filter(|&(i, &j)| labels[i] == labels[j as usize])
                    .count() as f64
            }
            PreparedKind::Ranked {
                which,
                order,
                group_lens,
            } => {
                let (mut ca, mut cb) = (0u32, 0u32);
                let mut cursor = 0usize;
                let mut ks = 0.0f64;
                let mut cvm = 0.0f64;
                for &len in group_lens {
                    for &idx in &order[cursor..cursor + len as usize] {
                        match labels[idx as usize] {
                            Label::A => ca += 1,
                            Label::B => cb += 1,
                        }
                    }
                    cursor += len as usize;
                    let diff = ca as f64 / n - cb as f64 / m;
                    match which {
                        RankedStatistic::Ks => ks = ks.max(diff.abs()),
                        RankedStatistic::Cvm => cvm += diff * diff * len as f64,
                    }
                }
                match which {
                    RankedStatistic::Ks => ks,
                    RankedStatistic::Cvm => {
                        let nt = n + m;
                        n * m / (nt * nt) * cvm
                    }
                }
            }
            PreparedKind::ChiSquared { bin_of, bins } => {
                let mut count_a = vec![0usize; *bins];
                let mut count_b = vec![0usize; *bins];
                for (i, &bin) in bin_of.iter().enumerate() {
                    match labels[i] {
                        Label::A => count_a[bin as usize] += 1,
                        Label::B => count_b[bin as usize] += 1,
                    }
                }
                univariate::chi2_from_counts(&count_a, &count_b, self.n, self.m)
            }
        }
    }
}

fn prepare_energy(
    pool: &LabeledPool,
    dm: &DistanceMatrix,
    config: EnergyConfig,
) -> Result<PreparedKind> {
    config.kernel.validate_for_dim(pool.dim())?;
    if let Some(eps) = config.min_distance {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!(
                "min-distance floor must be positive, got {eps}"
            )));
        }
    }
    if config.min_distance.is_none()
        && config.kernel.singular_at_zero()
        && dm.min_offdiag() == 0.0
    {
        let (i, j) = dm.first_coincident_pair().expect("zero min_offdiag");
        return Err(Error::SingularDistance { i, j });
    }
    let nt = dm.size();
    let mut kernel_matrix = vec![0.0; nt * nt];
    for i in 0..nt {
        for j in (i + 1)..nt {
            let mut r = dm.get(i, j);
            if let Some(eps) = config.min_distance {
                r = r.max(eps);
            }
            let value = config.kernel.evaluate(r)?;
            kernel_matrix[i * nt + j] = value;
            kernel_matrix[j * nt + i] = value;
        }
    }
    Ok(PreparedKind::Energy {
        kernel_matrix,
        size: nt,
    })
}

fn require_univariate(pool: &LabeledPool, name: &str) -> Result<()> {
    if pool.dim() != 1 {
        return Err(Error::Domain(format!(
            "method {name} requires 1-dimensional data, got d={}",
            pool.dim()
        )));
    }
    Ok(())
}

fn sorted_order(pool: &LabeledPool) -> (Vec<u32>, Vec<f64>) {
    let values: Vec<f64> = (0..pool.size()).map(|i| pool.point(i)[0]).collect();
    let mut order: Vec<u32> = (0..pool.size() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        values[a as usize]
            .partial_cmp(&values[b as usize])
            .unwrap()
    });
    (order, values)
}

fn prepare_ranked(pool: &LabeledPool, which: RankedStatistic) -> Result<PreparedKind> {
    require_univariate(
        pool,
        match which {
            RankedStatistic::Ks => "ks",
            RankedStatistic::Cvm => "cvm",
        },
    )?;
    let (order, values) = sorted_order(pool);
    let mut group_lens = Vec::new();
    let mut idx = 0;
    while idx < order.len() {
        let value = values[order[idx] as usize];
        let mut len = 0u32;
        while idx < order.len() && values[order[idx] as usize] == value {
            len += 1;
            idx += 1;
        }
        group_lens.push(len);
    }
    Ok(PreparedKind::Ranked {
        which,
        order,
        group_lens,
    })
}

fn prepare_chi2(pool: &LabeledPool, bins: usize) -> Result<PreparedKind> {
    require_univariate(pool, "chi2")?;
    let (order, values) = sorted_order(pool);
    let sorted: Vec<f64> = order.iter().map(|&i| values[i as usize]).collect();
    let edges = univariate::equal_probability_edges(&sorted, bins)?;
    let bin_of = values
        .iter()
        .map(|&v| univariate::bin_index(&edges, v) as u16)
        .collect();
    Ok(PreparedKind::ChiSquared { bin_of, bins })
}
