//! Graph-based multivariate statistics: the Friedman-Rafsky minimum
//! spanning tree run count and the nearest-neighbor coincidence count.
//!
//! Both depend on the pooled geometry only through the distance matrix.
//! The MST and the nearest-neighbor table never change under relabeling,
//! so they are computed once per pool and reused across every
//! permutation.

use crate::error::{Error, Result};
use crate::samples::{DistanceMatrix, Label};

/// Edges `(i, j, weight)` with `i < j`, sorted by `(i, j)`.
#[derive(Debug, Clone)]
pub struct EdgeList {
    edges: Vec<(usize, usize, f64)>,
}

impl EdgeList {
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|&(_, _, w)| w).sum()
    }
}

#[inline]
fn edge_key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Minimum spanning tree of the complete graph, dense Prim in O(N^2).
///
/// Ties (zero-probability for continuous data) are broken toward the
/// smallest `(i, j)` pair, both when selecting the next vertex and when
/// recording the best connector, so the result is deterministic.
pub fn minimum_spanning_tree(dm: &DistanceMatrix) -> Result<EdgeList> {
    let nt = dm.size();
    if nt < 2 {
        return Err(Error::InvalidSample(
            "spanning tree needs at least 2 observations".into(),
        ));
    }
    let mut in_tree = vec![false; nt];
    let mut best_dist = vec![f64::INFINITY; nt];
    let mut best_from = vec![0usize; nt];
    in_tree[0] = true;
    for v in 1..nt {
        best_dist[v] = dm.get(0, v);
    }

    let mut edges = Vec::with_capacity(nt - 1);
    for _ in 1..nt {
        let mut pick = usize::MAX;
        for v in 0..nt {
            if in_tree[v] {
                continue;
            }
            if pick == usize::MAX
                || best_dist[v] < best_dist[pick]
                || (best_dist[v] == best_dist[pick]
                    && edge_key(best_from[v], v) < edge_key(best_from[pick], pick))
            {
                pick = v;
            }
        }
        let (i, j) = edge_key(best_from[pick], pick);
        edges.push((i, j, best_dist[pick]));
        in_tree[pick] = true;
        for w in 0..nt {
            if in_tree[w] {
                continue;
            }
            let d = dm.get(pick, w);
            if d < best_dist[w]
                || (d == best_dist[w] && edge_key(pick, w) < edge_key(best_from[w], w))
            {
                best_dist[w] = d;
                best_from[w] = pick;
            }
        }
    }
    edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Ok(EdgeList { edges })
}

/// Friedman-Rafsky run statistic: the number of spanning tree edges whose
/// endpoints carry different labels. Low values reject.
pub fn friedman_rafsky_statistic(mst: &EdgeList, labels: &[Label]) -> usize {
    mst.edges
        .iter()
        .filter(|&&(i, j, _)| labels[i] != labels[j])
        .count()
}

/// For each observation, the index of its nearest neighbor under the
/// Euclidean norm; distance ties resolve to the smallest index.
pub fn nearest_neighbor_indices(dm: &DistanceMatrix) -> Result<Vec<usize>> {
    let nt = dm.size();
    if nt < 2 {
        return Err(Error::InvalidSample(
            "nearest neighbors need at least 2 observations".into(),
        ));
    }
    let mut nn = Vec::with_capacity(nt);
    for i in 0..nt {
        let row = dm.row(i);
        let mut best = usize::MAX;
        for (j, &d) in row.iter().enumerate() {
            if j != i && (best == usize::MAX || d < row[best]) {
                best = j;
            }
        }
        nn.push(best);
    }
    Ok(nn)
}

/// Nearest-neighbor coincidence statistic: the number of observations
/// whose nearest neighbor carries the same label. High values reject.
pub fn nearest_neighbor_statistic(dm: &DistanceMatrix, labels: &[Label]) -> Result<usize> {
    let nn = nearest_neighbor_indices(dm)?;
    Ok(coincidence_count(&nn, labels))
}

pub(crate) fn coincidence_count(nn: &[usize], labels: &[Label]) -> usize {
    nn.iter()
        .enumerate()
        .filter(|&(i, &j)| labels[i] == labels[j])
        .count()
}
