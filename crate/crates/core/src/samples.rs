//! Sample containers, pooling, standardization, and distance matrices.
//!
//! Everything downstream (kernels, graph statistics, the permutation
//! engine) reads the pooled geometry through [`DistanceMatrix`], which is
//! computed once per pool and then shared read-only across permutations.

use std::path::Path;

use crate::error::{Error, Result};

/// A sample of `n` observations in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Sample {
    /// Build from rows, validating shape and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidSample("no observations".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidSample("zero-dimensional observations".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * d);
        for (idx, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidSample(format!(
                    "row {idx} has {} coordinates, expected {d}",
                    row.len()
                )));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::InvalidSample(format!(
                        "row {idx} contains a non-finite value"
                    )));
                }
                data.push(v);
            }
        }
        Ok(Sample {
            data,
            n: rows.len(),
            d,
        })
    }

    /// Build from a flat row-major buffer. `data.len()` must equal `n * d`.
    pub fn from_flat(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 || data.len() != n * d {
            return Err(Error::InvalidSample(format!(
                "flat buffer of {} values does not match {n} x {d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "row {} contains a non-finite value",
                pos / d
            )));
        }
        Ok(Sample { data, n, d })
    }

    /// Convenience constructor for one-dimensional samples.
    pub fn univariate(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), values.len(), 1)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Apply `x -> theta + tau * x` to every coordinate.
    pub fn location_scale(&self, theta: f64, tau: f64) -> Result<Sample> {
        if !(tau > 0.0) || !theta.is_finite() || !tau.is_finite() {
            return Err(Error::Domain(format!(
                "location-scale transform needs finite theta and tau > 0, got theta={theta}, tau={tau}"
            )));
        }
        Ok(Sample {
            data: self.data.iter().map(|&x| theta + tau * x).collect(),
            n: self.n,
            d: self.d,
        })
    }
}

/// Membership label inside a pooled sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Label {
    A = 0,
    B = 1,
}

/// The merged two-sample pool: `n` A-rows followed by `m` B-rows.
#[derive(Debug, Clone)]
pub struct LabeledPool {
    points: Sample,
    labels: Vec<Label>,
    n: usize,
    m: usize,
}

/// Merge two samples, preserving row order: A-rows first, then B-rows.
pub fn pool(a: &Sample, b: &Sample) -> Result<LabeledPool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut data = Vec::with_capacity((a.len() + b.len()) * a.dim());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    let points = Sample {
        data,
        n: a.len() + b.len(),
        d: a.dim(),
    };
    let mut labels = vec![Label::A; a.len()];
    labels.extend(std::iter::repeat(Label::B).take(b.len()));
    Ok(LabeledPool {
        points,
        labels,
        n: a.len(),
        m: b.len(),
    })
}

impl LabeledPool {
    pub fn size(&self) -> usize {
        self.n + self.m
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn points(&self) -> &Sample {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    /// Split back into the two original samples by label.
    pub fn unpool(&self) -> (Sample, Sample) {
        let d = self.dim();
        let mut a = Vec::with_capacity(self.n * d);
        let mut b = Vec::with_capacity(self.m * d);
        for (i, &label) in self.labels.iter().enumerate() {
            match label {
                Label::A => a.extend_from_slice(self.points.row(i)),
                Label::B => b.extend_from_slice(self.points.row(i)),
            }
        }
        (
            Sample {
                data: a,
                n: self.n,
                d,
            },
            Sample {
                data: b,
                n: self.m,
                d,
            },
        )
    }

    /// Center and scale each coordinate by its pooled mean and pooled
    /// (population, divide-by-N) standard deviation. Labels unchanged.
    pub fn standardize(&self) -> Result<LabeledPool> {
        let nt = self.size();
        let d = self.dim();
        if nt < 2 {
            return Err(Error::InvalidSample(
                "standardization needs at least 2 pooled observations".into(),
            ));
        }
        let mut mean = vec![0.0; d];
        for row in self.points.rows() {
            for (k, &v) in row.iter().enumerate() {
                mean[k] += v;
            }
        }
        for mk in &mut mean {
            *mk /= nt as f64;
        }
        let mut var = vec![0.0; d];
        for row in self.points.rows() {
            for (k, &v) in row.iter().enumerate() {
                let c = v - mean[k];
                var[k] += c * c;
            }
        }
        let mut sd = vec![0.0; d];
        for (k, &vk) in var.iter().enumerate() {
            let s = (vk / nt as f64).sqrt();
            if s == 0.0 {
                return Err(Error::DegenerateCoordinate { coordinate: k });
            }
            sd[k] = s;
        }
        let data = self
            .points
            .data
            .iter()
            .enumerate()
            .map(|(idx, &v)| (v - mean[idx % d]) / sd[idx % d])
            .collect();
        Ok(LabeledPool {
            points: Sample {
                data,
                n: nt,
                d,
            },
            labels: self.labels.clone(),
            n: self.n,
            m: self.m,
        })
    }
}

/// Dense symmetric matrix of pairwise Euclidean distances over a pool.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    values: Vec<f64>,
    size: usize,
    min_offdiag: f64,
}

/// Compute all pairwise Euclidean distances. O(N^2 d) once per pool.
pub fn distance_matrix(pool: &LabeledPool) -> DistanceMatrix {
    let nt = pool.size();
    let mut values = vec![0.0; nt * nt];
    let mut min_offdiag = f64::INFINITY;
    for i in 0..nt {
        let xi = pool.point(i);
        for j in (i + 1)..nt {
            let xj = pool.point(j);
            let r = euclidean(xi, xj);
            values[i * nt + j] = r;
            values[j * nt + i] = r;
            if r < min_offdiag {
                min_offdiag = r;
            }
        }
    }
    DistanceMatrix {
        values,
        size: nt,
        min_offdiag,
    }
}

fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let c = a - b;
            c * c
        })
        .sum::<f64>()
        .sqrt()
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    /// Row `i` of the full matrix; entry `i` is zero.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    /// Smallest off-diagonal entry; zero means duplicate observations.
    pub fn min_offdiag(&self) -> f64 {
        self.min_offdiag
    }

    /// First pair of coincident rows, if any.
    pub fn first_coincident_pair(&self) -> Option<(usize, usize)> {
        if self.min_offdiag > 0.0 {
            return None;
        }
        for i in 0..self.size {
            for j in (i + 1)..self.size {
                if self.get(i, j) == 0.0 {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// Read a sample from CSV: one observation per line, comma-separated
/// decimal coordinates, no missing values. `has_header` skips one line.
pub fn read_csv_sample(path: &Path, has_header: bool) -> Result<Sample> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: display.clone(),
            line: 0,
            message: e.to_string(),
        })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Csv {
                path: display.clone(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(record.len());
        for field in record.iter() {
            let value: f64 = field.parse().map_err(|_| Error::Csv {
                path: display.clone(),
                line,
                message: format!("not a decimal number: {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    path: display.clone(),
                    line,
                    message: format!("non-finite value: {field:?}"),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    Sample::from_rows(&rows).map_err(|e| Error::Csv {
        path: display,
        line: 0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_1d(values: &[f64]) -> Sample {
        Sample::univariate(values).unwrap()
    }

    #[test]
    fn pool_concatenates_and_labels() {
        let a = sample_1d(&[0.0, 2.0]);
        let b = sample_1d(&[1.0]);
        let p = pool(&a, &b).unwrap();
        assert_eq!(p.size(), 3);
        assert_eq!(p.n(), 2);
        assert_eq!(p.m(), 1);
        assert_eq!(p.point(0), &[0.0]);
        assert_eq!(p.point(1), &[2.0]);
        assert_eq!(p.point(2), &[1.0]);
        assert_eq!(p.labels(), &[Label::A, Label::A, Label::B]);
    }

    #[test]
    fn pool_single_rows() {
        let a = Sample::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = Sample::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let p = pool(&a, &b).unwrap();
        assert_eq!(p.size(), 2);
        assert_eq!(p.dim(), 2);
    }

    #[test]
    fn pool_rejects_dimension_mismatch() {
        let a = Sample::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = Sample::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            pool(&a, &b),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn standardize_uses_population_moments() {
        // pooled {0, 2}: mean 1, population sd 1 -> {-1, +1}
        let p = pool(&sample_1d(&[0.0]), &sample_1d(&[2.0])).unwrap();
        let s = p.standardize().unwrap();
        assert_relative_eq!(s.point(0)[0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(s.point(1)[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn standardize_is_idempotent() {
        let a = Sample::from_rows(&[vec![0.3, 5.0], vec![-2.0, 7.5], vec![4.1, -0.2]]).unwrap();
        let b = Sample::from_rows(&[vec![1.0, 2.0], vec![0.5, 0.25]]).unwrap();
        let once = pool(&a, &b).unwrap().standardize().unwrap();
        let twice = once.standardize().unwrap();
        for i in 0..once.size() {
            for k in 0..once.dim() {
                assert_relative_eq!(once.point(i)[k], twice.point(i)[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn standardize_rejects_constant_coordinate() {
        let p = pool(&sample_1d(&[5.0, 5.0]), &sample_1d(&[5.0])).unwrap();
        assert!(matches!(
            p.standardize(),
            Err(Error::DegenerateCoordinate { coordinate: 0 })
        ));
    }

    #[test]
    fn distances_1d_are_absolute_differences() {
        let p = pool(&sample_1d(&[0.0, 2.0]), &sample_1d(&[1.0])).unwrap();
        let dm = distance_matrix(&p);
        assert_eq!(dm.get(0, 1), 2.0);
        assert_eq!(dm.get(0, 2), 1.0);
        assert_eq!(dm.get(1, 2), 1.0);
        assert_eq!(dm.get(2, 1), 1.0);
        assert_eq!(dm.get(1, 1), 0.0);
        assert_eq!(dm.min_offdiag(), 1.0);
    }

    #[test]
    fn distance_3_4_5_triangle() {
        let a = Sample::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let b = Sample::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let dm = distance_matrix(&pool(&a, &b).unwrap());
        assert_relative_eq!(dm.get(0, 1), 5.0, epsilon = 1e-15);
    }

    #[test]
    fn coincident_rows_give_zero_min_offdiag() {
        let a = Sample::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let b = Sample::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let dm = distance_matrix(&pool(&a, &b).unwrap());
        assert_eq!(dm.get(0, 1), 0.0);
        assert_eq!(dm.min_offdiag(), 0.0);
        assert_eq!(dm.first_coincident_pair(), Some((0, 1)));
    }

    #[test]
    fn unpool_recovers_inputs_exactly() {
        let a = Sample::from_rows(&[vec![0.25, -1.0], vec![3.5, 2.0]]).unwrap();
        let b = Sample::from_rows(&[vec![9.0, 0.125]]).unwrap();
        let p = pool(&a, &b).unwrap();
        let (ra, rb) = p.unpool();
        assert_eq!(ra, a);
        assert_eq!(rb, b);
    }

    #[test]
    fn sample_rejects_ragged_and_nonfinite_rows() {
        assert!(Sample::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Sample::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(Sample::from_rows(&[]).is_err());
    }

    #[test]
    fn location_scale_arithmetic() {
        let s = sample_1d(&[1.0, 2.0]);
        let t = s.location_scale(0.5, 0.5).unwrap();
        assert_eq!(t.row(0), &[1.0]);
        assert_eq!(t.row(1), &[1.5]);
        let id = s.location_scale(0.0, 1.0).unwrap();
        assert_eq!(id, s);
        assert!(s.location_scale(0.0, 0.0).is_err());
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();

        let ok = dir.path().join("ok.csv");
        writeln!(std::fs::File::create(&ok).unwrap(), "x,y\n1.0,2.0\n3,4.5").unwrap();
        let s = read_csv_sample(&ok, true).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(1), &[3.0, 4.5]);

        let bad = dir.path().join("bad.csv");
        writeln!(std::fs::File::create(&bad).unwrap(), "1.0,2.0\n1.0,oops").unwrap();
        match read_csv_sample(&bad, false) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected csv error, got {other:?}"),
        }
    }
}
