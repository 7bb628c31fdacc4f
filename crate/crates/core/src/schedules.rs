//! Bandwidth update policies.
//!
//! The guarantee formulas return the boundary value: at the returned
//! bandwidth the smallest kernel entry over the cloud equals the requested
//! floor exactly (up to rounding). Callers that want slack multiply by a
//! factor of at least one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{min_positive_distance_with_tol, PointCloud};
use crate::kernels::{KernelFamily, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulePolicy {
    Fixed,
    Doubling,
    MinDistance,
    GeometricGuarantee,
    SpectralGuarantee,
}

impl SchedulePolicy {
    pub fn name(self) -> &'static str {
        match self {
            SchedulePolicy::Fixed => "fixed",
            SchedulePolicy::Doubling => "doubling",
            SchedulePolicy::MinDistance => "min-distance",
            SchedulePolicy::GeometricGuarantee => "geometric-guarantee",
            SchedulePolicy::SpectralGuarantee => "spectral-guarantee",
        }
    }
}

impl fmt::Display for SchedulePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fixed" => SchedulePolicy::Fixed,
            "doubling" => SchedulePolicy::Doubling,
            "min-distance" => SchedulePolicy::MinDistance,
            "geometric-guarantee" | "geometric" => SchedulePolicy::GeometricGuarantee,
            "spectral-guarantee" | "spectral" => SchedulePolicy::SpectralGuarantee,
            other => return Err(Error::InvalidSchedule(format!("unknown policy '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub policy: SchedulePolicy,
    /// Contraction floor for the guarantee policies.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Doubling fires when the largest displacement of the last step falls below this.
    #[serde(default = "default_stall")]
    pub stall_threshold: f64,
    /// Pairs closer than this count as one position for `MinDistance`.
    #[serde(default)]
    pub coincidence_tol: f64,
}

fn default_delta() -> f64 {
    0.1
}

fn default_stall() -> f64 {
    1e-4
}

impl ScheduleSpec {
    pub fn new(policy: SchedulePolicy) -> Self {
        Self {
            policy,
            delta: default_delta(),
            stall_threshold: default_stall(),
            coincidence_tol: 0.0,
        }
    }

    pub fn fixed() -> Self {
        Self::new(SchedulePolicy::Fixed)
    }

    pub fn doubling(stall_threshold: f64) -> Self {
        Self {
            stall_threshold,
            ..Self::new(SchedulePolicy::Doubling)
        }
    }

    pub fn min_distance() -> Self {
        Self::new(SchedulePolicy::MinDistance)
    }

    pub fn geometric(delta: f64) -> Self {
        Self {
            delta,
            ..Self::new(SchedulePolicy::GeometricGuarantee)
        }
    }

    pub fn spectral(delta: f64) -> Self {
        Self {
            delta,
            ..Self::new(SchedulePolicy::SpectralGuarantee)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.policy {
            SchedulePolicy::GeometricGuarantee | SchedulePolicy::SpectralGuarantee => {
                check_delta(self.delta)
            }
            SchedulePolicy::Doubling if !(self.stall_threshold > 0.0) => {
                Err(Error::InvalidSchedule(format!(
                    "stall threshold must be positive, got {}",
                    self.stall_threshold
                )))
            }
            _ if !(self.coincidence_tol >= 0.0) => Err(Error::InvalidSchedule(
                "coincidence tolerance must be nonnegative".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Whether the policy replaces the configured initial bandwidth on step 0.
    pub fn sets_initial_epsilon(&self) -> bool {
        matches!(
            self.policy,
            SchedulePolicy::MinDistance
                | SchedulePolicy::GeometricGuarantee
                | SchedulePolicy::SpectralGuarantee
        )
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidSchedule(format!(
            "delta must lie in (0, 1), got {delta}"
        )))
    }
}

fn check_diameter(diam: f64) -> Result<()> {
    if diam > 0.0 && diam.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateDiameter)
    }
}

/// Smallest alpha-decay bandwidth with `min K >= delta` on a cloud of the
/// given diameter: `(-diam^alpha / ln delta)^(1/alpha)`.
pub fn epsilon_geometric(diam: f64, alpha: f64, delta: f64) -> Result<f64> {
    check_diameter(diam)?;
    check_delta(delta)?;
    Ok(diam * (-1.0 / delta.ln()).powf(1.0 / alpha))
}

/// As [`epsilon_geometric`] for a density-normalized alpha-decay kernel, where
/// `n_or_qmax` bounds the density estimate.
pub fn epsilon_geometric_density(
    diam: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
    n_or_qmax: f64,
) -> Result<f64> {
    check_diameter(diam)?;
    check_delta(delta)?;
    let floor = n_or_qmax.powf(2.0 * beta) * delta;
    if floor >= 1.0 {
        return Err(Error::DeltaTooLarge(format!(
            "N^(2 beta) * delta = {floor} >= 1"
        )));
    }
    Ok(diam * (-1.0 / floor.ln()).powf(1.0 / alpha))
}

/// Bandwidth for which the Diaconis-Stroock bound gives `lambda_2 <= 1 - delta`.
pub fn epsilon_spectral(diam: f64, alpha: f64, delta: f64, d_max: f64) -> Result<f64> {
    check_diameter(diam)?;
    check_delta(delta)?;
    let floor = delta * d_max;
    if floor >= 1.0 {
        return Err(Error::DeltaTooLarge(format!(
            "delta * d_max = {floor} >= 1"
        )));
    }
    Ok(diam * (1.0 / -floor.ln()).powf(1.0 / alpha))
}

/// Steps after which a `(1 - delta)`-contraction brings the diameter below `zeta`.
pub fn predicted_steps(diam0: f64, zeta: f64, delta: f64) -> Result<usize> {
    check_delta(delta)?;
    if !(zeta > 0.0 && zeta < diam0) {
        return Err(Error::ZetaNotBelowDiameter {
            zeta,
            diameter: diam0,
        });
    }
    let t = (zeta.ln() - diam0.ln()) / (1.0 - delta).ln();
    Ok(t.ceil().max(1.0) as usize)
}

/// Everything a policy may look at when choosing the next bandwidth.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleState<'a> {
    pub epsilon: f64,
    pub cloud: &'a PointCloud,
    pub diameter: f64,
    pub max_movement: f64,
    pub kernel: &'a KernelSpec,
    /// Largest degree of the previous operator; `None` on the first step.
    pub d_max: Option<f64>,
    /// Upper bound on degrees and densities (number of rows, or total mass).
    pub n_bound: f64,
}

/// Converts a decay bandwidth into the kernel's own parameterization.
fn to_kernel_epsilon(kernel: &KernelSpec, decay_eps: f64) -> f64 {
    match kernel.base_family() {
        KernelFamily::Gaussian => decay_eps * decay_eps,
        _ => decay_eps,
    }
}

fn guarantee_epsilon(spec: &ScheduleSpec, state: &ScheduleState<'_>) -> Result<f64> {
    let kernel = state.kernel;
    let diam = state.diameter;
    let density = kernel.family == KernelFamily::DensityNormalized;
    let beta = if density { kernel.beta } else { 0.0 };
    let Some(alpha) = kernel.decay_exponent() else {
        // box kernel: min K >= delta > 0 forces every pair inside the bandwidth
        check_diameter(diam)?;
        return Ok(diam);
    };
    let decay = match spec.policy {
        SchedulePolicy::GeometricGuarantee => {
            if density {
                epsilon_geometric_density(diam, alpha, beta, spec.delta, state.n_bound)?
            } else {
                epsilon_geometric(diam, alpha, spec.delta)?
            }
        }
        SchedulePolicy::SpectralGuarantee => {
            let d_max = state.d_max.unwrap_or(state.n_bound);
            let scale = if density {
                state.n_bound.powf(2.0 * beta)
            } else {
                1.0
            };
            epsilon_spectral(diam, alpha, spec.delta, d_max * scale)?
        }
        _ => unreachable!(),
    };
    Ok(to_kernel_epsilon(kernel, decay))
}

pub fn next_epsilon(spec: &ScheduleSpec, state: &ScheduleState<'_>) -> Result<f64> {
    match spec.policy {
        SchedulePolicy::Fixed => Ok(state.epsilon),
        SchedulePolicy::Doubling => Ok(if state.max_movement < spec.stall_threshold {
            2.0 * state.epsilon
        } else {
            state.epsilon
        }),
        SchedulePolicy::MinDistance => {
            min_positive_distance_with_tol(state.cloud, spec.coincidence_tol)
        }
        SchedulePolicy::GeometricGuarantee | SchedulePolicy::SpectralGuarantee => {
            guarantee_epsilon(spec, state)
        }
    }
}
