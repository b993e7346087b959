//! Distance kernels and the energy statistics built on them.
//!
//! The test statistic sums a monotone decreasing kernel `R(r)` of
//! Euclidean distance over within-sample pairs (positive weight) and
//! cross-sample pairs (negative weight). The default kernel is `-ln r`,
//! which makes the permutation test invariant under global rescaling of
//! the data. Summation order is fixed (row-major over `i < j` pooled
//! indices) so repeated runs are bit-identical.

use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::samples::{DistanceMatrix, Label};

/// Monotone decreasing kernel of Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceKernel {
    /// `R(r) = -ln r`. Scale shifts cancel in the permutation test.
    Log,
    /// `R(r) = r^-exponent`, valid for `0 < exponent < d`.
    PowerLaw { exponent: f64 },
    /// `R(r) = exp(-r^2 / (2 sigma^2))`. Bounded, never singular.
    Gaussian { sigma: f64 },
}

impl DistanceKernel {
    /// Evaluate at distance `r >= 0`.
    ///
    /// `Log` and `PowerLaw` are singular at zero; coincident observations
    /// are rejected unless callers clamp distances first (see
    /// [`crate::methods::EnergyConfig::min_distance`]).
    pub fn evaluate(self, r: f64) -> Result<f64> {
        match self {
            DistanceKernel::Log => {
                if r <= 0.0 {
                    Err(Error::Domain(
                        "log kernel requires a positive distance".into(),
                    ))
                } else {
                    Ok(-r.ln())
                }
            }
            DistanceKernel::PowerLaw { exponent } => {
                if exponent <= 0.0 {
                    Err(Error::Domain(format!(
                        "power-law exponent must be positive, got {exponent}"
                    )))
                } else if r <= 0.0 {
                    Err(Error::Domain(
                        "power-law kernel requires a positive distance".into(),
                    ))
                } else {
                    Ok(r.powf(-exponent))
                }
            }
            DistanceKernel::Gaussian { sigma } => {
                if sigma <= 0.0 {
                    Err(Error::Domain(format!(
                        "gaussian kernel width must be positive, got {sigma}"
                    )))
                } else {
                    Ok((-r * r / (2.0 * sigma * sigma)).exp())
                }
            }
        }
    }

    /// Whether `R(0)` diverges for this kernel.
    pub fn singular_at_zero(self) -> bool {
        !matches!(self, DistanceKernel::Gaussian { .. })
    }

    /// Check kernel parameters against the pool dimension.
    pub fn validate_for_dim(self, d: usize) -> Result<()> {
        match self {
            DistanceKernel::PowerLaw { exponent } => {
                if exponent <= 0.0 || exponent >= d as f64 {
                    Err(Error::Domain(format!(
                        "power-law exponent must lie in (0, d); got {exponent} with d={d}"
                    )))
                } else {
                    Ok(())
                }
            }
            DistanceKernel::Gaussian { sigma } if sigma <= 0.0 => Err(Error::Domain(
                format!("gaussian kernel width must be positive, got {sigma}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for DistanceKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKernel::Log => write!(f, "log"),
            DistanceKernel::PowerLaw { exponent } => write!(f, "power:{exponent}"),
            DistanceKernel::Gaussian { sigma } => write!(f, "gauss:{sigma}"),
        }
    }
}

impl FromStr for DistanceKernel {
    type Err = Error;

    /// Grammar: `log`, `power:<exponent>`, `gauss:<sigma>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "log" {
            return Ok(DistanceKernel::Log);
        }
        if let Some(arg) = s.strip_prefix("power:") {
            let exponent: f64 = arg
                .parse()
                .map_err(|_| Error::Domain(format!("bad power-law exponent: {arg:?}")))?;
            return Ok(DistanceKernel::PowerLaw { exponent });
        }
        if let Some(arg) = s.strip_prefix("gauss:") {
            let sigma: f64 = arg
                .parse()
                .map_err(|_| Error::Domain(format!("bad gaussian width: {arg:?}")))?;
            return Ok(DistanceKernel::Gaussian { sigma });
        }
        Err(Error::Domain(format!(
            "unknown kernel {s:?}; expected log, power:<exponent>, or gauss:<sigma>"
        )))
    }
}

/// The energy statistic and its three constituent terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyValue {
    /// `within_a + within_b + cross`.
    pub total: f64,
    /// Within-first-sample term, weight `1/n^2`.
    pub within_a: f64,
    /// Within-second-sample term, weight `1/m^2`.
    pub within_b: f64,
    /// Cross term, weight `-1/(nm)`.
    pub cross: f64,
}

fn check_labels(labels: &[Label], n: usize, m: usize, dm: &DistanceMatrix) -> Result<()> {
    if labels.len() != n + m || labels.len() != dm.size() {
        return Err(Error::InvalidSample(format!(
            "label vector of length {} does not match n+m={} and matrix size {}",
            labels.len(),
            n + m,
            dm.size()
        )));
    }
    let count_a = labels.iter().filter(|&&l| l == Label::A).count();
    if count_a != n {
        return Err(Error::InvalidSample(format!(
            "labels carry {count_a} A entries, expected {n}"
        )));
    }
    Ok(())
}

fn kernel_at(dm: &DistanceMatrix, kernel: DistanceKernel, i: usize, j: usize) -> Result<f64> {
    let r = dm.get(i, j);
    if r == 0.0 && kernel.singular_at_zero() {
        return Err(Error::SingularDistance { i, j });
    }
    kernel.evaluate(r)
}

/// Split pool indices by label, preserving pool order.
pub(crate) fn indices_by_label(labels: &[Label]) -> (Vec<u32>, Vec<u32>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        match label {
            Label::A => a.push(i as u32),
            Label::B => b.push(i as u32),
        }
    }
    (a, b)
}

/// The three raw kernel sums (within-A, within-B, cross).
///
/// Within-sample pairs accumulate row-major over that sample's rows, so
/// exchanging the samples exchanges the two within sums bit-exactly.
/// Cross addends are brought into value order before summing, which
/// makes the cross sum independent of which sample came first; together
/// these give exact sample-swap symmetry.
fn three_kernel_sums<F>(labels: &[Label], mut kernel_of: F) -> Result<(f64, f64, f64)>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    let (a_idx, b_idx) = indices_by_label(labels);
    let mut within_a = 0.0;
    for (p, &i) in a_idx.iter().enumerate() {
        for &j in &a_idx[p + 1..] {
            within_a += kernel_of(i as usize, j as usize)?;
        }
    }
    let mut within_b = 0.0;
    for (p, &i) in b_idx.iter().enumerate() {
        for &j in &b_idx[p + 1..] {
            within_b += kernel_of(i as usize, j as usize)?;
        }
    }
    let mut cross_values = Vec::with_capacity(a_idx.len() * b_idx.len());
    for &i in &a_idx {
        for &j in &b_idx {
            cross_values.push(kernel_of(i as usize, j as usize)?);
        }
    }
    cross_values.sort_unstable_by(f64::total_cmp);
    let cross = cross_values.iter().sum();
    Ok((within_a, within_b, cross))
}

/// The two-sample energy statistic over a precomputed distance matrix.
///
/// Reads distances only; never recomputes geometry. Rejection tail is
/// high: large values indicate different parent distributions.
pub fn energy_statistic(
    dm: &DistanceMatrix,
    labels: &[Label],
    n: usize,
    m: usize,
    kernel: DistanceKernel,
) -> Result<EnergyValue> {
    check_labels(labels, n, m, dm)?;
    let (sum_a, sum_b, sum_cross) =
        three_kernel_sums(labels, |i, j| kernel_at(dm, kernel, i, j))?;
    let within_a = sum_a / (n as f64 * n as f64);
    let within_b = sum_b / (m as f64 * m as f64);
    let cross = -sum_cross / (n as f64 * m as f64);
    Ok(EnergyValue {
        total: within_a + within_b + cross,
        within_a,
        within_b,
        cross,
    })
}

/// Unbiased two-sample divergence estimator: same sums as
/// [`energy_statistic`] with within-sample weights `1/(n(n-1))` and
/// `1/(m(m-1))`. Estimates the population energy functional up to the
/// kernel's additive constant; near zero when both parents coincide.
pub fn energy_divergence_unbiased(
    dm: &DistanceMatrix,
    labels: &[Label],
    n: usize,
    m: usize,
    kernel: DistanceKernel,
) -> Result<f64> {
    if n < 2 || m < 2 {
        return Err(Error::InsufficientSample { required: 2, n, m });
    }
    check_labels(labels, n, m, dm)?;
    let (sum_a, sum_b, sum_cross) =
        three_kernel_sums(labels, |i, j| kernel_at(dm, kernel, i, j))?;
    Ok(sum_a / (n as f64 * (n - 1) as f64) + sum_b / (m as f64 * (m - 1) as f64)
        - sum_cross / (n as f64 * m as f64))
}

/// Fourier transform of the power-law kernel `r^-kappa` in dimension `d`:
///
/// `F(k) = 2^(d-kappa) pi^(d/2) Gamma((d-kappa)/2) / Gamma(kappa/2) * k^(kappa-d)`
///
/// Strictly positive on its domain `k > 0`, `0 < kappa < d`, which is
/// what makes the energy functional a nonnegative measure of divergence.
pub fn power_kernel_fourier(k: f64, d: usize, kappa: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let df = d as f64;
    if !(kappa > 0.0 && kappa < df) {
        return Err(Error::Domain(format!(
            "fourier formula requires 0 < kappa < d; got kappa={kappa}, d={d}"
        )));
    }
    if !(k > 0.0) {
        return Err(Error::Domain(format!(
            "fourier formula requires k > 0; got {k}"
        )));
    }
    Ok(2.0f64.powf(df - kappa)
        * std::f64::consts::PI.powf(df / 2.0)
        * gamma((df - kappa) / 2.0)
        / gamma(kappa / 2.0)
        * k.powf(kappa - df))
}
