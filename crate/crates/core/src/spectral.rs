//! Spectra of diffusion operators and the audits built on them.
//!
//! A diffusion operator is reversible with respect to `mu = mass * degree`,
//! so `S = M^{1/2} P M^{-1/2}` (with `M = diag(mu)`) is symmetric and shares
//! the spectrum of `P`. For unit masses this is `D^{-1/2} K D^{-1/2}`.
//!
//! The nonconstant part of a function is computed as `f - L(f)`, the exact
//! complement of the rank-one projection onto constants, so no eigenvectors
//! are needed for it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::engine::{CondensationConfig, CondensationTrace};
use crate::error::{Error, Result};
use crate::kernels::DiffusionOperator;

/// Spectrum of one operator plus its Diaconis-Stroock bound when the kernel
/// is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub lambda2: f64,
    pub kappa: Option<f64>,
    pub lambda2_upper_bound: Option<f64>,
}

impl SpectralReport {
    /// Largest modulus among the nontrivial eigenvalues.
    pub fn second_modulus(&self) -> f64 {
        self.eigenvalues
            .iter()
            .skip(1)
            .map(|l| l.abs())
            .fold(0.0, f64::max)
    }
}

fn symmetric_conjugate(op: &DiffusionOperator) -> DMatrix<f64> {
    let n = op.len();
    let k = op.kernel();
    let m = op.mass();
    let d = op.degrees();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (m[i] * m[j]).sqrt() * k[(i, j)] / (d[i] * d[j]).sqrt();
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

fn sorted_decomposition(op: &DiffusionOperator) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetric_conjugate(op));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Eigenvalues of the transition matrix, descending.
pub fn eigenvalues(op: &DiffusionOperator) -> Vec<f64> {
    sorted_decomposition(op).0
}

/// Eigenvalues with right eigenvectors of `P` as columns, normalized to be
/// orthonormal in the inner product weighted by the reversing measure.
pub fn eigenpairs(op: &DiffusionOperator) -> (Vec<f64>, DMatrix<f64>) {
    let (values, mut vectors) = sorted_decomposition(op);
    let mu = op.reversing_measure();
    for (i, mut row) in vectors.row_iter_mut().enumerate() {
        row /= mu[i].sqrt();
    }
    (values, vectors)
}

/// `kappa = max degree / min kernel entry` and the bound `1 - 1/kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda2Bound {
    pub kappa: f64,
    pub bound: f64,
}

pub fn lambda2_bound(op: &DiffusionOperator) -> Result<Lambda2Bound> {
    let min_k = op.min_kernel_entry();
    if !(min_k > 0.0) {
        return Err(Error::ZeroKernelEntry);
    }
    let kappa = op.max_degree() / min_k;
    Ok(Lambda2Bound {
        kappa,
        bound: 1.0 - 1.0 / kappa,
    })
}

pub fn spectral_report(op: &DiffusionOperator) -> SpectralReport {
    let eigenvalues = eigenvalues(op);
    let lambda2 = eigenvalues.get(1).copied().unwrap_or(0.0);
    let bound = lambda2_bound(op).ok();
    SpectralReport {
        eigenvalues,
        lambda2,
        kappa: bound.map(|b| b.kappa),
        lambda2_upper_bound: bound.map(|b| b.bound),
    }
}

/// `L(f)`: the constant function at the stationary mean of `f`.
pub fn constant_part(f: &[f64], op: &DiffusionOperator) -> Vec<f64> {
    let mean: f64 = f.iter().zip(op.stationary()).map(|(x, p)| x * p).sum();
    vec![mean; f.len()]
}

/// `H(f) = f - L(f)`.
pub fn nonconstant_part(f: &[f64], op: &DiffusionOperator) -> Vec<f64> {
    let c = constant_part(f, op);
    f.iter().zip(c).map(|(x, m)| x - m).collect()
}

pub fn weighted_norm(f: &[f64], weights: &[f64]) -> f64 {
    f.iter()
        .zip(weights)
        .map(|(x, w)| w * x * x)
        .sum::<f64>()
        .sqrt()
}

pub fn euclidean_norm(f: &[f64]) -> f64 {
    f.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Checks `||H(Pf)||_d <= lambda_2 ||H(f)||_d + tol`.
pub fn nonconstant_contraction_holds(
    op: &DiffusionOperator,
    lambda2: f64,
    f: &[f64],
    tol: f64,
) -> bool {
    let mu = op.reversing_measure();
    let pf = op.apply_function(f);
    weighted_norm(&nonconstant_part(&pf, op), &mu)
        <= lambda2 * weighted_norm(&nonconstant_part(f, op), &mu) + tol
}

/// Checks the change of measure `||f||_{d_t}^2 <= (||d_t - d_s||_2 + 1) ||f||_{d_s}^2 + tol`.
pub fn change_of_measure_holds(d_t: &[f64], d_s: &[f64], f: &[f64], tol: f64) -> bool {
    let diff: Vec<f64> = d_t.iter().zip(d_s).map(|(a, b)| a - b).collect();
    weighted_norm(f, d_t).powi(2)
        <= (euclidean_norm(&diff) + 1.0) * weighted_norm(f, d_s).powi(2) + tol
}

/// One row of the nonconstant-term audit.
#[derive(Debug, Clone, PartialEq)]
pub struct NonconstantBoundRow {
    pub step: usize,
    /// `||H_t(X_t[:, k])||_2`.
    pub observed: f64,
    /// `||d_0||_inf^{1/2} prod_{i<t} lambda_i prod_{i<t} (1 + N^{1/2} ||d_i - d_{i+1}||_2)^2 ||f||_2`.
    pub bound: f64,
}

/// Per-step spectral data shared by the audits.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAuditRow {
    pub step: usize,
    pub lambda2: f64,
    /// Contraction factor used in the product: the largest nontrivial
    /// eigenvalue modulus (equal to `lambda2` for positive semidefinite kernels).
    pub contraction: f64,
    pub smallest_eigenvalue: f64,
    pub lambda2_bound: Option<f64>,
    /// Observed nonconstant norm, one per coordinate.
    pub observed: Vec<f64>,
    /// Right-hand side of the product bound, one per coordinate.
    pub bound: Vec<f64>,
    /// `||d_t - d_{t+1}||_2`, absent for the last audited step.
    pub degree_delta: Option<f64>,
}

/// Last snapshot index reachable without merges, i.e. the prefix over which
/// `X_t = P_{t-1} ... P_0 X_0` holds row by row.
fn merge_free_prefix(trace: &CondensationTrace) -> usize {
    trace
        .merges
        .iter()
        .map(|m| m.step - 1)
        .min()
        .unwrap_or(trace.steps())
        .min(trace.steps())
}

/// Spectral audit over every snapshot of the merge-free prefix of a trace.
pub fn spectral_audit(
    trace: &CondensationTrace,
    config: &CondensationConfig,
) -> Result<Vec<SpectralAuditRow>> {
    let last = merge_free_prefix(trace);
    let x0 = trace.initial();
    let dim = x0.dim();
    let n = x0.len() as f64;
    let ops = (0..=last)
        .map(|t| trace.operator_at(t, config))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<SpectralReport> = ops.iter().map(spectral_report).collect();
    let f_norms: Vec<f64> = (0..dim)
        .map(|k| euclidean_norm(&x0.coordinate(k)))
        .collect();
    let d0_max = ops[0].max_degree();
    let deltas: Vec<f64> = ops
        .windows(2)
        .map(|w| {
            let diff: Vec<f64> = w[0]
                .degrees()
                .iter()
                .zip(w[1].degrees())
                .map(|(a, b)| a - b)
                .collect();
            euclidean_norm(&diff)
        })
        .collect();

    let mut rows = Vec::with_capacity(ops.len());
    let mut product = d0_max.sqrt();
    for t in 0..=last {
        if t > 0 {
            let growth = 1.0 + n.sqrt() * deltas[t - 1];
            product *= reports[t - 1].second_modulus() * growth * growth;
        }
        let observed = (0..dim)
            .map(|k| {
                euclidean_norm(&nonconstant_part(
                    &trace.snapshots[t].coordinate(k),
                    &ops[t],
                ))
            })
            .collect();
        rows.push(SpectralAuditRow {
            step: t,
            lambda2: reports[t].lambda2,
            contraction: reports[t].second_modulus(),
            smallest_eigenvalue: reports[t].eigenvalues.last().copied().unwrap_or(1.0),
            lambda2_bound: reports[t].lambda2_upper_bound,
            observed,
            bound: f_norms.iter().map(|f| product * f).collect(),
            degree_delta: deltas.get(t).copied(),
        });
    }
    Ok(rows)
}

/// Observed nonconstant norm against the product bound for one coordinate.
pub fn nonconstant_bound_audit(
    trace: &CondensationTrace,
    config: &CondensationConfig,
    coordinate: usize,
) -> Result<Vec<NonconstantBoundRow>> {
    if coordinate >= trace.initial().dim() {
        return Err(Error::DimensionMismatch {
            left: coordinate,
            right: trace.initial().dim(),
        });
    }
    Ok(spectral_audit(trace, config)?
        .into_iter()
        .map(|r| NonconstantBoundRow {
            step: r.step,
            observed: r.observed[coordinate],
            bound: r.bound[coordinate],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeVariation {
    pub total: f64,
    /// First step from which every later degree vector dominates the previous one.
    pub monotone_after: Option<usize>,
}

/// Summed degree changes over consecutive steps, over the longest prefix of
/// equal-length degree vectors.
pub fn degree_variation(degrees: &[Vec<f64>]) -> DegreeVariation {
    let len = degrees
        .windows(2)
        .position(|w| w[0].len() != w[1].len())
        .map_or(degrees.len(), |p| p + 1);
    let degrees = &degrees[..len];
    let mut total = 0.0;
    let mut monotone_after = None;
    for (k, w) in degrees.windows(2).enumerate() {
        let diff: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
        total += euclidean_norm(&diff);
        let increasing = w[0]
            .iter()
            .zip(&w[1])
            .all(|(a, b)| *b >= a - 1e-12 * a.abs().max(1.0));
        match (increasing, monotone_after) {
            (true, None) => monotone_after = Some(k),
            (false, _) => monotone_after = None,
            _ => {}
        }
    }
    DegreeVariation {
        total,
        monotone_after,
    }
}

/// Residual `||S v - lambda v||` of the symmetric eigenproblem, for diagnostics.
pub fn max_residual(op: &DiffusionOperator) -> f64 {
    let s = symmetric_conjugate(op);
    let (values, vectors) = sorted_decomposition(op);
    values
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let v: DVector<f64> = vectors.column(i).into_owned();
            (&s * &v - &v * l).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointCloud;
    use crate::kernels::{diffusion_operator, operator_for, KernelSpec};
    use crate::{condense, ScheduleSpec};

    #[test]
    fn uniform_two_by_two_spectrum() {
        let op = diffusion_operator(&DMatrix::from_element(2, 2, 1.0)).unwrap();
        let ev = eigenvalues(&op);
        assert!((ev[0] - 1.0).abs() < 1e-14 && ev[1].abs() < 1e-14);
    }

    #[test]
    fn identity_spectrum() {
        let op = diffusion_operator(&DMatrix::identity(4, 4)).unwrap();
        assert!(eigenvalues(&op).iter().all(|l| (l - 1.0).abs() < 1e-14));
    }

    #[test]
    fn box_three_point_spectrum() {
        // characteristic polynomial of [[1/2,1/2,0],[1/3,1/3,1/3],[0,1/2,1/2]]:
        // trace 4/3 and determinant -1/12 give (l - 1)(l - 1/2)(l + 1/6)
        let k = DMatrix::from_row_slice(3, 3, &[1., 1., 0., 1., 1., 1., 0., 1., 1.]);
        let ev = eigenvalues(&diffusion_operator(&k).unwrap());
        let expected = [1.0, 0.5, -1.0 / 6.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn lambda2_bound_examples() {
        let op = diffusion_operator(&DMatrix::from_element(2, 2, 1.0)).unwrap();
        let b = lambda2_bound(&op).unwrap();
        assert_eq!((b.kappa, b.bound), (2.0, 0.5));

        let single = diffusion_operator(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        let b = lambda2_bound(&single).unwrap();
        assert_eq!((b.kappa, b.bound), (1.0, 0.0));

        let x = PointCloud::from_scalars(&[0.0, 1.0]).unwrap();
        let op = operator_for(&x, &KernelSpec::gaussian(1.0), false).unwrap();
        let e = std::f64::consts::E;
        let kappa = (1.0 + 1.0 / e) * e;
        let b = lambda2_bound(&op).unwrap();
        assert!((b.kappa - kappa).abs() < 1e-12);
        assert!((b.bound - (1.0 - 1.0 / kappa)).abs() < 1e-12);

        let k = DMatrix::from_row_slice(3, 3, &[1., 1., 0., 1., 1., 1., 0., 1., 1.]);
        assert_eq!(
            lambda2_bound(&diffusion_operator(&k).unwrap()),
            Err(Error::ZeroKernelEntry)
        );
    }

    #[test]
    fn constant_and_nonconstant_parts() {
        let k = DMatrix::from_row_slice(3, 3, &[1., 1., 0., 1., 1., 1., 0., 1., 1.]);
        let op = diffusion_operator(&k).unwrap();
        let c = constant_part(&[1.0, 1.0, 1.0], &op);
        assert!(c.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let c = constant_part(&[0.0, 1.0, 2.0], &op);
        assert!(c.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(nonconstant_part(&[3.0, 3.0, 3.0], &op)
            .iter()
            .all(|v| v.abs() < 1e-15));

        let uniform = diffusion_operator(&DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert_eq!(constant_part(&[0.0, 1.0], &uniform), vec![0.5, 0.5]);
        assert_eq!(nonconstant_part(&[0.0, 1.0], &uniform), vec![-0.5, 0.5]);
    }

    #[test]
    fn weighted_norm_examples() {
        assert!((weighted_norm(&[1.0, 1.0, 1.0], &[2.0, 3.0, 2.0]) - 7f64.sqrt()).abs() < 1e-15);
        assert_eq!(weighted_norm(&[0.0, 0.0], &[1.0, 5.0]), 0.0);
        assert_eq!(weighted_norm(&[3.0, 4.0], &[1.0, 1.0]), 5.0);
    }

    #[test]
    fn eigenvectors_are_measure_orthonormal() {
        let x = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.5], [0.2, 1.3], [2.0, 1.0]]).unwrap();
        let op = operator_for(&x, &KernelSpec::gaussian(0.8), false).unwrap();
        let (values, vectors) = eigenpairs(&op);
        let mu = op.reversing_measure();
        for a in 0..4 {
            let pa = op.apply_function(&vectors.column(a).iter().copied().collect::<Vec<_>>());
            for i in 0..4 {
                assert!((pa[i] - values[a] * vectors[(i, a)]).abs() < 1e-10);
            }
            for b in 0..4 {
                let ip: f64 = (0..4)
                    .map(|i| vectors[(i, a)] * vectors[(i, b)] * mu[i])
                    .sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-10);
            }
        }
        assert!(max_residual(&op) < 1e-12);
    }

    #[test]
    fn audit_at_step_zero_is_trivial() {
        let x = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.5], [0.2, 1.3]]).unwrap();
        let config = CondensationConfig::new(KernelSpec::gaussian(0.8), ScheduleSpec::fixed())
            .with_max_steps(0);
        let trace = condense(&x, &config).unwrap();
        let rows = nonconstant_bound_audit(&trace, &config, 0).unwrap();
        assert_eq!(rows.len(), 1);
        let op = trace.operator_at(0, &config).unwrap();
        let f = x.coordinate(0);
        assert!((rows[0].bound - op.max_degree().sqrt() * euclidean_norm(&f)).abs() < 1e-15);
        assert!(rows[0].observed <= rows[0].bound);
    }

    #[test]
    fn audit_of_uniform_pair_is_tight() {
        let x = PointCloud::from_scalars(&[0.0, 1.0]).unwrap();
        let config = CondensationConfig::new(KernelSpec::box_kernel(5.0), ScheduleSpec::fixed());
        let trace = condense(&x, &config).unwrap();
        assert_eq!(trace.steps(), 1);
        let rows = nonconstant_bound_audit(&trace, &config, 0).unwrap();
        assert_eq!(rows[1].observed, 0.0);
        assert!(rows[1].bound.abs() < 1e-15);
    }

    #[test]
    fn degree_variation_examples() {
        let v = degree_variation(&[vec![2.0, 3.0, 2.0], vec![3.0, 3.0, 3.0]]);
        assert!((v.total - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(v.monotone_after, Some(0));

        let constant = degree_variation(&[vec![2.0, 2.0], vec![2.0, 2.0], vec![2.0, 2.0]]);
        assert_eq!(constant.total, 0.0);

        let late = degree_variation(&[
            vec![2.0, 2.0],
            vec![1.0, 3.0],
            vec![2.0, 3.0],
            vec![2.5, 3.0],
        ]);
        assert_eq!(late.monotone_after, Some(1));
        let never = degree_variation(&[vec![2.0, 2.0], vec![2.5, 2.5], vec![1.0, 3.0]]);
        assert_eq!(never.monotone_after, None);
    }
}
