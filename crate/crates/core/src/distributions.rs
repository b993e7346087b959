//! Random generators for every population used by the power studies:
//! nine univariate families, the location-scale transform, and the
//! multivariate families (correlated normals, heavy-tailed laws, the
//! log-normal-like coordinate transform, Cook-Johnson copulas, and
//! two-component mixtures).
//!
//! Generators are value-semantic: each call consumes an [`RngStream`]
//! and is a pure function of it, so disjoint streams give independent
//! output and equal streams reproduce bit-identically.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, ChiSquared, Distribution, Exp1, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::samples::Sample;

/// The nine univariate test populations.
///
/// * `f1`: uniform on `(-sqrt 3, sqrt 3)` (mean 0, variance 1)
/// * `f2`: standard normal
/// * `f3`: Laplace, density `exp(-|x|)/2`
/// * `f4`: standard Cauchy
/// * `f5`: shifted exponential `exp(-(x+1))` on `x >= -1` (mean 0)
/// * `f6`: chi-square with 3 dof, standardized to mean 0 variance 1
/// * `f7`: equal mixture of `N(1.5, 1)` and `N(-1.5, 1)`
/// * `f8`: `0.8 N(0,1) + 0.2 N(0, 4^2)`
/// * `f9`: equal mixture of `N(1, 2^2)` and `N(-1, 1)`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnivariateFamily {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
}

impl UnivariateFamily {
    pub const ALL: [UnivariateFamily; 9] = [
        UnivariateFamily::F1,
        UnivariateFamily::F2,
        UnivariateFamily::F3,
        UnivariateFamily::F4,
        UnivariateFamily::F5,
        UnivariateFamily::F6,
        UnivariateFamily::F7,
        UnivariateFamily::F8,
        UnivariateFamily::F9,
    ];

    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            UnivariateFamily::F1 => {
                let u: f64 = rng.random();
                (u - 0.5) * (2.0 * 3.0f64.sqrt())
            }
            UnivariateFamily::F2 => StandardNormal.sample(rng),
            UnivariateFamily::F3 => {
                // difference of two unit exponentials is Laplace(0, 1)
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                e1 - e2
            }
            UnivariateFamily::F4 => Cauchy::new(0.0, 1.0).unwrap().sample(rng),
            UnivariateFamily::F5 => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            UnivariateFamily::F6 => {
                let x: f64 = ChiSquared::new(3.0).unwrap().sample(rng);
                (x - 3.0) / 6.0f64.sqrt()
            }
            UnivariateFamily::F7 => {
                let z: f64 = StandardNormal.sample(rng);
                if rng.random::<f64>() < 0.5 {
                    1.5 + z
                } else {
                    -1.5 + z
                }
            }
            UnivariateFamily::F8 => {
                let z: f64 = StandardNormal.sample(rng);
                if rng.random::<f64>() < 0.8 {
                    z
                } else {
                    4.0 * z
                }
            }
            UnivariateFamily::F9 => {
                let z: f64 = StandardNormal.sample(rng);
                if rng.random::<f64>() < 0.5 {
                    1.0 + 2.0 * z
                } else {
                    -1.0 + z
                }
            }
        }
    }

    /// Draw `count` independent observations.
    pub fn sample(self, count: usize, stream: RngStream) -> Sample {
        let mut rng = stream.rng();
        let values: Vec<f64> = (0..count).map(|_| self.draw(&mut rng)).collect();
        Sample::from_flat(values, count, 1).expect("univariate draws are finite")
    }
}

/// Multivariate test populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MultivariateFamily {
    /// `N(0, I_d)`.
    StdNormal { d: usize },
    /// Zero-mean normal with the given covariance matrix.
    CorrNormal { cov: Vec<Vec<f64>> },
    /// Standard Cauchy per coordinate; `spherical` switches to the
    /// elliptically-contoured multivariate law (t with 1 dof).
    Cauchy {
        d: usize,
        #[serde(default)]
        spherical: bool,
    },
    /// `ln|z|` applied per coordinate of a standard normal vector.
    NLog { d: usize },
    /// Student t per coordinate; `spherical` switches to the
    /// elliptically-contoured multivariate t.
    StudentT {
        d: usize,
        dof: f64,
        #[serde(default)]
        spherical: bool,
    },
    /// Uniform on the unit cube `[0, 1]^d`.
    UniformCube { d: usize },
    /// Cook-Johnson (Clayton-type) copula with uniform marginals;
    /// dependence grows as `a -> 0`.
    CookJohnson { d: usize, a: f64 },
    /// Isotropic normal with every mean coordinate equal to `mean`.
    IsoNormal { d: usize, mean: f64, sigma: f64 },
    /// Two-component mixture: component `a` with probability `weight`,
    /// else component `b`. One uniform draw decides per observation.
    Mixture {
        weight: f64,
        a: Box<MultivariateFamily>,
        b: Box<MultivariateFamily>,
    },
    /// Inner family with every coordinate multiplied by `scale`.
    ///
    /// Power-study transcriptions use this to draw shape families on a
    /// common scale: finite-variance families divided by their standard
    /// deviation, and the Cauchy at half-width 1/2 (unit full width at
    /// half maximum).
    Scaled { scale: f64, of: Box<Family> },
}

/// Lower-triangular Cholesky factor; errors unless symmetric positive
/// definite.
fn cholesky(cov: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = cov.len();
    if d == 0 || cov.iter().any(|row| row.len() != d) {
        return Err(Error::InvalidCovariance);
    }
    for i in 0..d {
        for j in 0..i {
            if (cov[i][j] - cov[j][i]).abs() > 1e-12 {
                return Err(Error::InvalidCovariance);
            }
        }
    }
    let mut factor = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = cov[i][j];
            for k in 0..j {
                sum -= factor[i][k] * factor[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::InvalidCovariance);
                }
                factor[i][j] = sum.sqrt();
            } else {
                factor[i][j] = sum / factor[j][j];
            }
        }
    }
    Ok(factor)
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

/// One Cook-Johnson observation: gamma-frailty construction
/// `U_k = (1 + E_k / G)^(-a)` with `G ~ Gamma(a, 1)`, `E_k ~ Exp(1)`.
fn cook_johnson_row(rng: &mut ChaCha8Rng, d: usize, a: f64) -> Vec<f64> {
    let gamma = Gamma::new(a, 1.0).expect("valid shape");
    let mut g: f64 = gamma.sample(rng);
    if g < f64::MIN_POSITIVE {
        g = f64::MIN_POSITIVE;
    }
    (0..d)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            let ratio = e / g;
            let log_u = if ratio.is_finite() {
                -a * ratio.ln_1p()
            } else {
                -a * (e.ln() - g.ln())
            };
            log_u.exp()
        })
        .collect()
}

impl MultivariateFamily {
    /// Output dimension, validating parameters along the way.
    pub fn dim(&self) -> Result<usize> {
        match self {
            MultivariateFamily::StdNormal { d }
            | MultivariateFamily::NLog { d }
            | MultivariateFamily::UniformCube { d } => check_dim(*d),
            MultivariateFamily::Cauchy { d, .. } => check_dim(*d),
            MultivariateFamily::CorrNormal { cov } => {
                cholesky(cov)?;
                Ok(cov.len())
            }
            MultivariateFamily::StudentT { d, dof, .. } => {
                if !(*dof > 0.0) {
                    return Err(Error::Domain(format!(
                        "student t needs dof > 0, got {dof}"
                    )));
                }
                check_dim(*d)
            }
            MultivariateFamily::CookJohnson { d, a } => {
                if !(*a > 0.0) {
                    return Err(Error::Domain(format!(
                        "cook-johnson needs correlation parameter a > 0, got {a}"
                    )));
                }
                check_dim(*d)
            }
            MultivariateFamily::IsoNormal { d, sigma, .. } => {
                if !(*sigma > 0.0) {
                    return Err(Error::Domain(format!(
                        "iso normal needs sigma > 0, got {sigma}"
                    )));
                }
                check_dim(*d)
            }
            MultivariateFamily::Mixture { weight, a, b } => {
                if !(0.0..=1.0).contains(weight) {
                    return Err(Error::Domain(format!(
                        "mixture weight must lie in [0, 1], got {weight}"
                    )));
                }
                let da = a.dim()?;
                let db = b.dim()?;
                if da != db {
                    return Err(Error::DimensionMismatch { left: da, right: db });
                }
                Ok(da)
            }
            MultivariateFamily::Scaled { scale, of } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::Domain(format!(
                        "scale must be a positive finite number, got {scale}"
                    )));
                }
                of.dim()
            }
        }
    }

    fn draw_row(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        match self {
            MultivariateFamily::StdNormal { d } => {
                out.extend(standard_normal_vec(rng, *d));
            }
            MultivariateFamily::CorrNormal { cov } => {
                // refactorizing per row is fine at these dimensions
                let factor = cholesky(cov).expect("validated covariance");
                let z = standard_normal_vec(rng, cov.len());
                for row in &factor {
                    out.push(row.iter().zip(&z).map(|(l, zk)| l * zk).sum());
                }
            }
            MultivariateFamily::Cauchy { d, spherical } => {
                if *spherical {
                    let scale = chi_scale(rng, 1.0);
                    for z in standard_normal_vec(rng, *d) {
                        out.push(z / scale);
                    }
                } else {
                    let cauchy = Cauchy::new(0.0, 1.0).unwrap();
                    out.extend((0..*d).map(|_| cauchy.sample(rng)));
                }
            }
            MultivariateFamily::NLog { d } => {
                for _ in 0..*d {
                    let mut z: f64 = StandardNormal.sample(rng);
                    while z == 0.0 {
                        z = StandardNormal.sample(rng);
                    }
                    out.push(z.abs().ln());
                }
            }
            MultivariateFamily::StudentT { d, dof, spherical } => {
                if *spherical {
                    let scale = chi_scale(rng, *dof);
                    for z in standard_normal_vec(rng, *d) {
                        out.push(z / scale);
                    }
                } else {
                    let t = StudentT::new(*dof).expect("validated dof");
                    out.extend((0..*d).map(|_| t.sample(rng)));
                }
            }
            MultivariateFamily::UniformCube { d } => {
                out.extend((0..*d).map(|_| rng.random::<f64>()));
            }
            MultivariateFamily::CookJohnson { d, a } => {
                out.extend(cook_johnson_row(rng, *d, *a));
            }
            MultivariateFamily::IsoNormal { d, mean, sigma } => {
                for z in standard_normal_vec(rng, *d) {
                    out.push(mean + sigma * z);
                }
            }
            MultivariateFamily::Mixture { weight, a, b } => {
                if rng.random::<f64>() < *weight {
                    a.draw_row(rng, out);
                } else {
                    b.draw_row(rng, out);
                }
            }
            MultivariateFamily::Scaled { scale, of } => {
                let start = out.len();
                of.draw_row(rng, out);
                for v in &mut out[start..] {
                    *v *= scale;
                }
            }
        }
    }

    /// Draw `count` independent d-vectors.
    pub fn sample(&self, count: usize, stream: RngStream) -> Result<Sample> {
        let d = self.dim()?;
        if let MultivariateFamily::CorrNormal { cov } = self {
            cholesky(cov)?; // surface InvalidCovariance before drawing
        }
        let mut rng = stream.rng();
        let mut data = Vec::with_capacity(count * d);
        for _ in 0..count {
            self.draw_row(&mut rng, &mut data);
        }
        Sample::from_flat(data, count, d)
            .map_err(|_| Error::InvalidSample("generator produced non-finite values".into()))
    }
}

/// `sqrt(W / dof)` with `W ~ chi-square(dof)`, used to scale a normal
/// vector into a spherically-contoured t.
fn chi_scale(rng: &mut ChaCha8Rng, dof: f64) -> f64 {
    let chi = ChiSquared::new(dof).expect("valid dof");
    let mut w: f64 = chi.sample(rng);
    while w <= 0.0 {
        w = chi.sample(rng);
    }
    (w / dof).sqrt()
}

fn check_dim(d: usize) -> Result<usize> {
    if d == 0 {
        Err(Error::Domain("dimension must be at least 1".into()))
    } else {
        Ok(d)
    }
}

/// A population of either kind; scenario files use strings (`"f3"`) for
/// univariate families and tagged objects for multivariate ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Family {
    Univariate(UnivariateFamily),
    Multivariate(MultivariateFamily),
}

impl Family {
    pub fn dim(&self) -> Result<usize> {
        match self {
            Family::Univariate(_) => Ok(1),
            Family::Multivariate(f) => f.dim(),
        }
    }

    fn draw_row(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        match self {
            Family::Univariate(f) => out.push(f.draw(rng)),
            Family::Multivariate(f) => f.draw_row(rng, out),
        }
    }

    pub fn sample(&self, count: usize, stream: RngStream) -> Result<Sample> {
        match self {
            Family::Univariate(f) => Ok(f.sample(count, stream)),
            Family::Multivariate(f) => f.sample(count, stream),
        }
    }
}

/// One power-study cell: a distribution pair, the location-scale
/// transform applied to the second sample, and the sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub case_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(rename = "pX")]
    pub p_x: Family,
    #[serde(rename = "pY")]
    pub p_y: Family,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    pub n: usize,
    pub m: usize,
}

fn default_tau() -> f64 {
    1.0
}

impl ScenarioEntry {
    pub fn validate(&self) -> Result<usize> {
        let dx = self.p_x.dim()?;
        let dy = self.p_y.dim()?;
        if dx != dy {
            return Err(Error::Scenario(format!(
                "case {}: sample dimensions differ ({dx} vs {dy})",
                self.case_id
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Scenario(format!(
                "case {}: tau must be positive, got {}",
                self.case_id, self.tau
            )));
        }
        if self.n == 0 || self.m == 0 {
            return Err(Error::Scenario(format!(
                "case {}: sample sizes must be positive",
                self.case_id
            )));
        }
        Ok(dx)
    }
}

/// Load a scenario file: a JSON array of [`ScenarioEntry`] objects.
pub fn load_scenarios(path: &Path) -> Result<Vec<ScenarioEntry>> {
    let text = std::fs::read_to_string(path)?;
    let entries: Vec<ScenarioEntry> = serde_json::from_str(&text)
        .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    if entries.is_empty() {
        return Err(Error::Scenario(format!(
            "{}: no scenarios in file",
            path.display()
        )));
    }
    for entry in &entries {
        entry.validate()?;
    }
    Ok(entries)
}
