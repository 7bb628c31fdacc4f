//! Kernel matrices and row-stochastic diffusion operators.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{euclidean, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    Box,
    Gaussian,
    Laplace,
    AlphaDecay,
    DensityNormalized,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Box => "box",
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
            KernelFamily::AlphaDecay => "alpha-decay",
            KernelFamily::DensityNormalized => "density-normalized",
        }
    }

    /// Box, Gaussian, Laplace and alpha-decay all satisfy k(x, x) = 1.
    pub fn has_unit_diagonal(self) -> bool {
        self != KernelFamily::DensityNormalized
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "box" => KernelFamily::Box,
            "gaussian" => KernelFamily::Gaussian,
            "laplace" => KernelFamily::Laplace,
            "alpha-decay" | "alpha" => KernelFamily::AlphaDecay,
            "density-normalized" | "anisotropic" => KernelFamily::DensityNormalized,
            other => {
                return Err(Error::InvalidKernel(format!(
                    "unknown kernel family '{other}'"
                )))
            }
        })
    }
}

/// Flat kernel description. `alpha` is read by alpha-decay kernels (and by
/// density-normalized kernels over an alpha-decay base); `beta` and `base`
/// only by density-normalized kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub epsilon: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<KernelFamily>,
}

fn default_alpha() -> f64 {
    2.0
}

impl KernelSpec {
    pub fn new(family: KernelFamily, epsilon: f64) -> Self {
        Self {
            family,
            epsilon,
            alpha: default_alpha(),
            beta: 0.0,
            base: None,
        }
    }

    pub fn box_kernel(epsilon: f64) -> Self {
        Self::new(KernelFamily::Box, epsilon)
    }

    pub fn gaussian(epsilon: f64) -> Self {
        Self::new(KernelFamily::Gaussian, epsilon)
    }

    pub fn laplace(epsilon: f64) -> Self {
        Self::new(KernelFamily::Laplace, epsilon)
    }

    pub fn alpha_decay(epsilon: f64, alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::new(KernelFamily::AlphaDecay, epsilon)
        }
    }

    pub fn density_normalized(base: KernelSpec, beta: f64) -> Self {
        Self {
            family: KernelFamily::DensityNormalized,
            epsilon: base.epsilon,
            alpha: base.alpha,
            beta,
            base: Some(base.family),
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    /// The rotation-invariant kernel underneath; `self` for base families.
    pub fn base_spec(&self) -> KernelSpec {
        match (self.family, self.base) {
            (KernelFamily::DensityNormalized, Some(b)) => KernelSpec {
                family: b,
                base: None,
                beta: 0.0,
                ..*self
            },
            _ => *self,
        }
    }

    /// The family whose formula produces the unnormalized entries.
    pub fn base_family(&self) -> KernelFamily {
        self.base_spec().family
    }

    /// Decay exponent of the base family viewed as an alpha-decay kernel.
    /// `None` for the box kernel.
    pub fn decay_exponent(&self) -> Option<f64> {
        match self.base_family() {
            KernelFamily::Gaussian => Some(2.0),
            KernelFamily::Laplace => Some(1.0),
            KernelFamily::AlphaDecay => Some(self.alpha),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::NonPositiveBandwidth(self.epsilon));
        }
        if self.base_family() == KernelFamily::AlphaDecay
            && !(self.alpha >= 1.0 && self.alpha.is_finite())
        {
            return Err(Error::InvalidKernel(format!(
                "alpha must be >= 1, got {}",
                self.alpha
            )));
        }
        if self.family == KernelFamily::DensityNormalized {
            match self.base {
                None => {
                    return Err(Error::InvalidKernel(
                        "density-normalized kernel needs a base family".into(),
                    ))
                }
                Some(KernelFamily::DensityNormalized) => {
                    return Err(Error::InvalidKernel(
                        "base kernel cannot itself be density-normalized".into(),
                    ))
                }
                Some(_) => {}
            }
            if !(0.0..=1.0).contains(&self.beta) {
                return Err(Error::InvalidKernel(format!(
                    "beta must lie in [0, 1], got {}",
                    self.beta
                )));
            }
        }
        Ok(())
    }

    /// Base-family kernel value at distance `r`.
    pub fn evaluate(&self, r: f64) -> f64 {
        let eps = self.epsilon;
        match self.base_family() {
            KernelFamily::Box => {
                if r <= eps {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian => (-(r * r) / eps).exp(),
            KernelFamily::Laplace => (-r / eps).exp(),
            KernelFamily::AlphaDecay => (-(r.powf(self.alpha) / eps.powf(self.alpha))).exp(),
            KernelFamily::DensityNormalized => {
                unreachable!("base family is never density-normalized")
            }
        }
    }
}

fn base_matrix(x: &PointCloud, spec: &KernelSpec) -> DMatrix<f64> {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = spec.evaluate(0.0);
        for j in (i + 1)..n {
            let v = spec.evaluate(euclidean(x.row(i), x.row(j)));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn row_weights(x: &PointCloud, by_multiplicity: bool) -> Vec<f64> {
    if by_multiplicity {
        x.multiplicity().iter().map(|&m| m as f64).collect()
    } else {
        vec![1.0; x.len()]
    }
}

/// Kernel matrix with every row counted once.
pub fn kernel_matrix(x: &PointCloud, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    kernel_matrix_weighted(x, spec, false)
}

/// Kernel matrix; with `by_multiplicity`, the density estimate of a
/// density-normalized kernel counts each row times its multiplicity.
pub fn kernel_matrix_weighted(
    x: &PointCloud,
    spec: &KernelSpec,
    by_multiplicity: bool,
) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let base = spec.base_spec();
    let mut k = base_matrix(x, &base);
    if spec.family == KernelFamily::DensityNormalized {
        let w = row_weights(x, by_multiplicity);
        let q: Vec<f64> = density_from_matrix(&k, &w)
            .iter()
            .map(|qi| qi.powf(spec.beta))
            .collect();
        let n = x.len();
        for i in 0..n {
            for j in i..n {
                let v = k[(i, j)] / (q[i] * q[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
    }
    Ok(k)
}

fn density_from_matrix(k: &DMatrix<f64>, weights: &[f64]) -> Vec<f64> {
    (0..k.nrows())
        .map(|i| (0..k.ncols()).map(|j| weights[j] * k[(i, j)]).sum())
        .collect()
}

/// Empirical density q(i) = sum_j k_base(x(i), x(j)).
pub fn density_weights(x: &PointCloud, base: &KernelSpec) -> Result<Vec<f64>> {
    density_weights_weighted(x, base, false)
}

pub fn density_weights_weighted(
    x: &PointCloud,
    base: &KernelSpec,
    by_multiplicity: bool,
) -> Result<Vec<f64>> {
    let base = base.base_spec();
    base.validate()?;
    Ok(density_from_matrix(
        &base_matrix(x, &base),
        &row_weights(x, by_multiplicity),
    ))
}

/// `P = D^{-1} K W` together with its degree vector and stationary
/// distribution. `mass` is `W`, the per-row weights (all ones unless rows
/// stand for several coincident points).
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperator {
    kernel: DMatrix<f64>,
    degrees: Vec<f64>,
    transition: DMatrix<f64>,
    stationary: Vec<f64>,
    mass: Vec<f64>,
}

impl DiffusionOperator {
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// The measure the chain is reversible against: `mass * degree`.
    pub fn reversing_measure(&self) -> Vec<f64> {
        self.mass
            .iter()
            .zip(&self.degrees)
            .map(|(m, d)| m * d)
            .collect()
    }

    /// `P^tau` by repeated multiplication.
    pub fn transition_power(&self, tau: usize) -> DMatrix<f64> {
        let n = self.len();
        let mut acc = DMatrix::identity(n, n);
        for _ in 0..tau {
            acc = &acc * &self.transition;
        }
        acc
    }

    pub fn min_kernel_entry(&self) -> f64 {
        self.kernel.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }

    /// `P f` for a function on the rows.
    pub fn apply_function(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.transition[(i, j)] * f[j]).sum())
            .collect()
    }
}

pub fn diffusion_operator(k: &DMatrix<f64>) -> Result<DiffusionOperator> {
    diffusion_operator_with_mass(k, &vec![1.0; k.nrows()])
}

/// Builds the operator from a symmetric kernel with per-row masses.
pub fn diffusion_operator_with_mass(k: &DMatrix<f64>, mass: &[f64]) -> Result<DiffusionOperator> {
    let n = k.nrows();
    if k.ncols() != n || mass.len() != n {
        return Err(Error::ShapeMismatch {
            operator: n,
            rows: mass.len(),
        });
    }
    let degrees = density_from_matrix(k, mass);
    if let Some(i) = degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::ZeroDegreeRow(i));
    }
    let mut transition = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            transition[(i, j)] = mass[j] * k[(i, j)] / degrees[i];
        }
    }
    let total: f64 = degrees.iter().zip(mass).map(|(d, m)| d * m).sum();
    let stationary = degrees
        .iter()
        .zip(mass)
        .map(|(d, m)| d * m / total)
        .collect();
    Ok(DiffusionOperator {
        kernel: k.clone(),
        degrees,
        transition,
        stationary,
        mass: mass.to_vec(),
    })
}

/// Operator for a cloud, optionally weighting rows by multiplicity.
pub fn operator_for(
    x: &PointCloud,
    spec: &KernelSpec,
    by_multiplicity: bool,
) -> Result<DiffusionOperator> {
    let k = kernel_matrix_weighted(x, spec, by_multiplicity)?;
    diffusion_operator_with_mass(&k, &row_weights(x, by_multiplicity))
}

/// `P^tau X`, applied as `tau` successive multiplications.
pub fn apply_operator(p: &DiffusionOperator, x: &PointCloud, tau: usize) -> Result<PointCloud> {
    if p.len() != x.len() {
        return Err(Error::ShapeMismatch {
            operator: p.len(),
            rows: x.len(),
        });
    }
    let mut coords = x.coords().to_vec();
    for _ in 0..tau {
        coords = multiply(p.transition(), &coords, x.dim());
    }
    x.with_coords(coords)
}

pub(crate) fn multiply(p: &DMatrix<f64>, coords: &[f64], dim: usize) -> Vec<f64> {
    let n = p.nrows();
    let mut out = vec![0.0; n * dim];
    for i in 0..n {
        let row = &mut out[i * dim..(i + 1) * dim];
        for j in 0..n {
            let w = p[(i, j)];
            if w == 0.0 {
                continue;
            }
            for (o, c) in row.iter_mut().zip(&coords[j * dim..(j + 1) * dim]) {
                *o += w * c;
            }
        }
    }
    out
}
