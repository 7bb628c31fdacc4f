//! The condensation loop: build the operator, diffuse, update the bandwidth,
//! merge close points, record everything.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{diameter, euclidean, PointCloud};
use crate::kernels::{multiply, operator_for, DiffusionOperator, KernelSpec};
use crate::schedules::{next_epsilon, ScheduleSpec, ScheduleState};
use crate::union_find::UnionFind;

pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-8;
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_STEPS: usize = 1000;
/// Tolerance used when re-executing a trace.
pub const REPLAY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondensationConfig {
    pub kernel: KernelSpec,
    pub schedule: ScheduleSpec,
    #[serde(default = "default_tau")]
    pub tau: usize,
    /// Merge radius; rows closer than this are identified.
    #[serde(default)]
    pub zeta: f64,
    /// When set, the merge radius of step t is this fraction of the bandwidth
    /// used at step t, overriding `zeta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_epsilon_fraction: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
    #[serde(default = "default_fixed_point_tol")]
    pub fixed_point_tol: f64,
    /// Count a merged row once per original point in kernel and degree sums.
    #[serde(default)]
    pub weight_by_multiplicity: bool,
}

fn default_tau() -> usize {
    1
}
fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}
fn default_convergence_tol() -> f64 {
    DEFAULT_CONVERGENCE_TOL
}
fn default_fixed_point_tol() -> f64 {
    DEFAULT_FIXED_POINT_TOL
}

impl CondensationConfig {
    pub fn new(kernel: KernelSpec, schedule: ScheduleSpec) -> Self {
        Self {
            kernel,
            schedule,
            tau: 1,
            zeta: 0.0,
            zeta_epsilon_fraction: None,
            max_steps: DEFAULT_MAX_STEPS,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            fixed_point_tol: DEFAULT_FIXED_POINT_TOL,
            weight_by_multiplicity: false,
        }
    }

    pub fn with_zeta(self, zeta: f64) -> Self {
        Self { zeta, ..self }
    }

    pub fn with_tau(self, tau: usize) -> Self {
        Self { tau, ..self }
    }

    pub fn with_max_steps(self, max_steps: usize) -> Self {
        Self { max_steps, ..self }
    }

    pub fn with_convergence_tol(self, convergence_tol: f64) -> Self {
        Self {
            convergence_tol,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.schedule.validate()?;
        if self.tau == 0 {
            return Err(Error::InvalidConfig("tau must be at least 1".into()));
        }
        if !(self.zeta >= 0.0) || !self.zeta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "zeta must be finite and >= 0, got {}",
                self.zeta
            )));
        }
        if let Some(f) = self.zeta_epsilon_fraction {
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "zeta fraction must be >= 0, got {f}"
                )));
            }
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "convergence tolerance must be positive".into(),
            ));
        }
        if !(self.fixed_point_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "fixed-point tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Merge radius in effect when the bandwidth is `epsilon`.
    pub fn zeta_for(&self, epsilon: f64) -> f64 {
        match self.zeta_epsilon_fraction {
            Some(f) => f * epsilon,
            None => self.zeta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    /// Index of the first snapshot in which the two rows are one.
    pub step: usize,
    pub survivor: usize,
    pub absorbed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    FixedPoint,
    MaxSteps,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::FixedPoint => "fixed-point",
            Termination::MaxSteps => "max-steps",
        })
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(Termination::Converged),
            "fixed-point" => Ok(Termination::FixedPoint),
            "max-steps" => Ok(Termination::MaxSteps),
            other => Err(Error::Parse(format!("unknown termination '{other}'"))),
        }
    }
}

/// Full record of a run. `snapshots[0]` is the input; `epsilons[t]` is the
/// bandwidth used to build the operator on `snapshots[t]`; `zetas[t]`,
/// `degrees[t]` and `movements[t]` describe the step from `t` to `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensationTrace {
    pub snapshots: Vec<PointCloud>,
    pub epsilons: Vec<f64>,
    pub zetas: Vec<f64>,
    pub degrees: Vec<Vec<f64>>,
    pub movements: Vec<f64>,
    pub merges: Vec<MergeEvent>,
    pub diameters: Vec<f64>,
    pub termination: Termination,
}

impl CondensationTrace {
    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn initial(&self) -> &PointCloud {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &PointCloud {
        self.snapshots
            .last()
            .expect("trace always holds the input snapshot")
    }

    /// Number of original points.
    pub fn original_size(&self) -> usize {
        self.snapshots[0].total_multiplicity()
    }

    /// For every original id, the row of snapshot `t` that represents it.
    pub fn representative_rows(&self, t: usize) -> Vec<usize> {
        let x0 = &self.snapshots[0];
        let snap = &self.snapshots[t];
        let max_id = x0.ids().iter().copied().max().unwrap_or(0);
        let mut row_of_id = vec![usize::MAX; max_id + 1];
        for (row, &id) in snap.ids().iter().enumerate() {
            row_of_id[id] = row;
        }
        let mut uf = UnionFind::new(max_id + 1);
        for m in self.merges.iter().filter(|m| m.step <= t) {
            uf.union(m.survivor, m.absorbed);
        }
        x0.ids().iter().map(|&id| row_of_id[uf.find(id)]).collect()
    }

    /// Coordinates of every original point at snapshot `t`.
    pub fn expanded(&self, t: usize) -> PointCloud {
        let snap = &self.snapshots[t];
        let rows = self.representative_rows(t);
        let mut coords = Vec::with_capacity(rows.len() * snap.dim());
        for r in rows {
            coords.extend_from_slice(snap.row(r));
        }
        let x0 = &self.snapshots[0];
        PointCloud::with_identity(coords, snap.dim(), x0.ids().to_vec(), vec![1; x0.len()])
            .expect("expansion of a valid snapshot is valid")
    }

    /// Rebuilds the operator used at step `t` (or the one the final snapshot
    /// would use).
    pub fn operator_at(&self, t: usize, config: &CondensationConfig) -> Result<DiffusionOperator> {
        operator_for(
            &self.snapshots[t],
            &config.kernel.with_epsilon(self.epsilons[t]),
            config.weight_by_multiplicity,
        )
        .map_err(|e| e.at_step(t))
    }
}

/// Output of a single diffusion step, before merging.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub next: PointCloud,
    pub operator: DiffusionOperator,
    /// Largest displacement under one application of the operator.
    pub movement: f64,
}

pub fn step(x: &PointCloud, epsilon: f64, config: &CondensationConfig) -> Result<StepOutput> {
    let operator = operator_for(
        x,
        &config.kernel.with_epsilon(epsilon),
        config.weight_by_multiplicity,
    )?;
    let dim = x.dim();
    let mut coords = multiply(operator.transition(), x.coords(), dim);
    let movement = coords
        .chunks_exact(dim)
        .zip(x.rows())
        .map(|(a, b)| euclidean(a, b))
        .fold(0.0, f64::max);
    for _ in 1..config.tau {
        coords = multiply(operator.transition(), &coords, dim);
    }
    Ok(StepOutput {
        next: x.with_coords(coords)?,
        operator,
        movement,
    })
}

/// Groups rows closer than `zeta` (transitively), collapsing each group onto
/// the unweighted mean of its rows under the smallest id.
pub fn detect_merges(x: &PointCloud, zeta: f64, step: usize) -> (PointCloud, Vec<MergeEvent>) {
    let n = x.len();
    if !(zeta > 0.0) || n < 2 {
        return (x.clone(), Vec::new());
    }
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if euclidean(x.row(i), x.row(j)) < zeta {
                uf.union(i, j);
            }
        }
    }
    if uf.components() == n {
        return (x.clone(), Vec::new());
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root = vec![usize::MAX; n];
    for i in 0..n {
        let r = uf.find(i);
        if group_of_root[r] == usize::MAX {
            group_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[group_of_root[r]].push(i);
    }
    let dim = x.dim();
    let mut coords = Vec::with_capacity(groups.len() * dim);
    let mut ids = Vec::with_capacity(groups.len());
    let mut mult = Vec::with_capacity(groups.len());
    let mut events = Vec::new();
    for g in &groups {
        let survivor = g
            .iter()
            .map(|&r| x.ids()[r])
            .min()
            .expect("groups are nonempty");
        let mut mean = vec![0.0; dim];
        for &r in g {
            for (m, c) in mean.iter_mut().zip(x.row(r)) {
                *m += c;
            }
        }
        let k = g.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        coords.extend(mean);
        ids.push(survivor);
        mult.push(g.iter().map(|&r| x.multiplicity()[r]).sum());
        for &r in g {
            let id = x.ids()[r];
            if id != survivor {
                events.push(MergeEvent {
                    step,
                    survivor,
                    absorbed: id,
                });
            }
        }
    }
    let merged = PointCloud::with_identity(coords, dim, ids, mult).expect("merged cloud is valid");
    (merged, events)
}

/// Runs diffusion condensation from `x0`.
pub fn condense(x0: &PointCloud, config: &CondensationConfig) -> Result<CondensationTrace> {
    config.validate()?;
    let n_bound = |x: &PointCloud| {
        if config.weight_by_multiplicity {
            x.total_multiplicity() as f64
        } else {
            x.len() as f64
        }
    };
    let diam0 = diameter(x0);
    let epsilon0 = if config.schedule.sets_initial_epsilon() && diam0 >= config.convergence_tol {
        next_epsilon(
            &config.schedule,
            &ScheduleState {
                epsilon: config.kernel.epsilon,
                cloud: x0,
                diameter: diam0,
                max_movement: f64::INFINITY,
                kernel: &config.kernel,
                d_max: None,
                n_bound: n_bound(x0),
            },
        )
        .map_err(|e| e.at_step(0))?
    } else {
        config.kernel.epsilon
    };

    let mut trace = CondensationTrace {
        snapshots: vec![x0.clone()],
        epsilons: vec![epsilon0],
        zetas: Vec::new(),
        degrees: Vec::new(),
        movements: Vec::new(),
        merges: Vec::new(),
        diameters: vec![diam0],
        termination: Termination::MaxSteps,
    };

    for t in 0..config.max_steps {
        let current = &trace.snapshots[t];
        if trace.diameters[t] < config.convergence_tol {
            trace.termination = Termination::Converged;
            return Ok(trace);
        }
        let epsilon = trace.epsilons[t];
        let out = step(current, epsilon, config).map_err(|e| e.at_step(t))?;
        if out.movement < config.fixed_point_tol {
            trace.termination = Termination::FixedPoint;
            return Ok(trace);
        }
        let zeta = config.zeta_for(epsilon);
        let (next, events) = detect_merges(&out.next, zeta, t + 1);
        let diam = diameter(&next);
        let next_eps = if diam < config.convergence_tol {
            epsilon
        } else {
            next_epsilon(
                &config.schedule,
                &ScheduleState {
                    epsilon,
                    cloud: &next,
                    diameter: diam,
                    max_movement: out.movement,
                    kernel: &config.kernel,
                    d_max: Some(out.operator.max_degree()),
                    n_bound: n_bound(&next),
                },
            )
            .map_err(|e| e.at_step(t + 1))?
        };
        trace.zetas.push(zeta);
        trace.degrees.push(out.operator.degrees().to_vec());
        trace.movements.push(out.movement);
        trace.merges.extend(events);
        trace.snapshots.push(next);
        trace.diameters.push(diam);
        trace.epsilons.push(next_eps);
    }
    trace.termination = if trace.diameters.last().copied().unwrap_or(0.0) < config.convergence_tol {
        Termination::Converged
    } else {
        Termination::MaxSteps
    };
    Ok(trace)
}

/// Reassembles a trace from stored snapshots, bandwidths, merge radii and
/// merge events, recomputing degrees, movements and diameters.
pub fn rebuild_trace(
    snapshots: Vec<PointCloud>,
    epsilons: Vec<f64>,
    zetas: Vec<f64>,
    merges: Vec<MergeEvent>,
    termination: Termination,
    config: &CondensationConfig,
) -> Result<CondensationTrace> {
    if snapshots.is_empty()
        || epsilons.len() != snapshots.len()
        || zetas.len() + 1 != snapshots.len()
    {
        return Err(Error::InvalidConfig(format!(
            "inconsistent trace: {} snapshots, {} bandwidths, {} merge radii",
            snapshots.len(),
            epsilons.len(),
            zetas.len()
        )));
    }
    let mut degrees = Vec::with_capacity(zetas.len());
    let mut movements = Vec::with_capacity(zetas.len());
    for t in 0..zetas.len() {
        let out = step(&snapshots[t], epsilons[t], config).map_err(|e| e.at_step(t))?;
        degrees.push(out.operator.degrees().to_vec());
        movements.push(out.movement);
    }
    let diameters = snapshots.iter().map(diameter).collect();
    Ok(CondensationTrace {
        snapshots,
        epsilons,
        zetas,
        degrees,
        movements,
        merges,
        diameters,
        termination,
    })
}

/// Re-executes every step of `trace` and checks it lands on the recorded
/// snapshots within [`REPLAY_TOL`].
pub fn replay_check(trace: &CondensationTrace, config: &CondensationConfig) -> bool {
    if trace.epsilons.len() != trace.snapshots.len()
        || trace.zetas.len() + 1 != trace.snapshots.len()
    {
        return false;
    }
    (0..trace.steps()).all(|t| {
        let Ok(out) = step(&trace.snapshots[t], trace.epsilons[t], config) else {
            return false;
        };
        let (next, _) = detect_merges(&out.next, trace.zetas[t], t + 1);
        let recorded = &trace.snapshots[t + 1];
        next.ids() == recorded.ids()
            && next.multiplicity() == recorded.multiplicity()
            && next
                .coords()
                .iter()
                .zip(recorded.coords())
                .all(|(a, b)| (a - b).abs() <= REPLAY_TOL)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{convexity_certificate, CERTIFICATE_TOL};

    fn line(values: &[f64]) -> PointCloud {
        PointCloud::from_scalars(values).unwrap()
    }

    #[test]
    fn one_box_step_on_three_points() {
        let config = CondensationConfig::new(KernelSpec::box_kernel(1.2), ScheduleSpec::fixed())
            .with_zeta(1e-9)
            .with_max_steps(1);
        let trace = condense(&line(&[0.0, 1.0, 2.0]), &config).unwrap();
        let x1 = trace.snapshots[1].coords();
        for (a, b) in x1.iter().zip([0.5, 1.0, 1.5]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(trace.diameters, vec![2.0, 1.0]);
        assert_eq!(trace.termination, Termination::MaxSteps);
    }

    #[test]
    fn wide_box_converges_to_the_mean_in_one_step() {
        let x = PointCloud::from_rows(&[[0.0, 0.0], [2.0, 0.0], [1.0, 3.0], [5.0, 1.0]]).unwrap();
        let config = CondensationConfig::new(KernelSpec::box_kernel(100.0), ScheduleSpec::fixed());
        let trace = condense(&x, &config).unwrap();
        assert_eq!(trace.termination, Termination::Converged);
        assert_eq!(trace.steps(), 1);
        let c = x.centroid();
        for r in trace.last().rows() {
            assert!((r[0] - c[0]).abs() < 1e-14 && (r[1] - c[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn step_examples() {
        let config = CondensationConfig::new(KernelSpec::box_kernel(1.0), ScheduleSpec::fixed());
        let x = line(&[0.0, 2.0, 5.0]);
        let out = step(&x, 0.5, &config).unwrap();
        assert_eq!(out.next, x);
        assert_eq!(out.movement, 0.0);
        let pair = line(&[1.0, 3.0]);
        let out = step(&pair, 10.0, &config).unwrap();
        assert_eq!(out.next.coords(), &[2.0, 2.0]);
    }

    #[test]
    fn narrow_box_is_a_fixed_point() {
        let config = CondensationConfig::new(KernelSpec::box_kernel(0.5), ScheduleSpec::fixed());
        let trace = condense(&line(&[0.0, 1.0, 3.0]), &config).unwrap();
        assert_eq!(trace.termination, Termination::FixedPoint);
        assert_eq!(trace.steps(), 0);
    }

    #[test]
    fn merge_examples() {
        let (m, ev) = detect_merges(&line(&[0.0, 1.0]), 0.5, 1);
        assert_eq!(m.len(), 2);
        assert!(ev.is_empty());

        let (m, ev) = detect_merges(&line(&[0.0, 0.1, 5.0]), 0.2, 3);
        assert_eq!(m.len(), 2);
        assert!((m.coords()[0] - 0.05).abs() < 1e-15);
        assert_eq!(m.coords()[1], 5.0);
        assert_eq!(m.ids(), &[0, 2]);
        assert_eq!(m.multiplicity(), &[2, 1]);
        assert_eq!(
            ev,
            vec![MergeEvent {
                step: 3,
                survivor: 0,
                absorbed: 1
            }]
        );

        let (m, ev) = detect_merges(&line(&[0.0, 0.1, 0.18, 5.0]), 0.12, 1);
        assert_eq!(m.len(), 2);
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().all(|e| e.survivor == 0));
        assert_eq!(m.multiplicity(), &[3, 1]);
    }

    #[test]
    fn zero_zeta_keeps_duplicates() {
        let x = line(&[1.0, 1.0, 2.0]);
        let (m, ev) = detect_merges(&x, 0.0, 1);
        assert_eq!(m, x);
        assert!(ev.is_empty());
    }

    #[test]
    fn replay_checks() {
        let x =
            PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.2], [0.3, 1.1], [2.0, 2.0], [1.7, 0.4]])
                .unwrap();
        let config = CondensationConfig::new(KernelSpec::gaussian(0.5), ScheduleSpec::fixed())
            .with_zeta(1e-3)
            .with_max_steps(40);
        let trace = condense(&x, &config).unwrap();
        assert!(replay_check(&trace, &config));

        let mut broken = trace.clone();
        let mut coords = broken.snapshots[3].coords().to_vec();
        coords[0] += 1e-6;
        broken.snapshots[3] = broken.snapshots[3].with_coords(coords).unwrap();
        assert!(!replay_check(&broken, &config));

        let empty = condense(&x, &config.with_max_steps(0)).unwrap();
        assert_eq!(empty.steps(), 0);
        assert!(replay_check(&empty, &config));
    }

    #[test]
    fn tau_is_repeated_application_of_one_operator() {
        let x = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.2], [0.3, 1.1], [2.0, 2.0]]).unwrap();
        let base = CondensationConfig::new(KernelSpec::gaussian(0.7), ScheduleSpec::fixed());
        let three = step(&x, 0.7, &base.with_tau(3)).unwrap();
        let p3 = three.operator.transition_power(3);
        let direct = multiply(&p3, x.coords(), 2);
        for (a, b) in three.next.coords().iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        // three separate condensation steps rebuild the operator, which differs
        let separate = condense(&x, &base.with_max_steps(3)).unwrap();
        let diff = separate.snapshots[3]
            .coords()
            .iter()
            .zip(three.next.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff > 1e-6);
    }

    #[test]
    fn errors_carry_the_step() {
        let x = line(&[0.0, 1.0, 2.5]);
        let config =
            CondensationConfig::new(KernelSpec::gaussian(1.0), ScheduleSpec::spectral(0.5));
        let err = condense(&x, &config).unwrap_err();
        assert!(matches!(err, Error::AtStep { step: 0, .. }));
        assert!(matches!(err.root(), Error::DeltaTooLarge(_)));
        assert!(condense(&x, &config.with_tau(0)).is_err());
    }

    #[test]
    fn operators_are_convex_combinations() {
        let x = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.2], [0.3, 1.1], [2.0, 2.0]]).unwrap();
        let config = CondensationConfig::new(KernelSpec::laplace(0.4), ScheduleSpec::fixed())
            .with_max_steps(20);
        let trace = condense(&x, &config).unwrap();
        for t in 0..trace.steps() {
            let op = trace.operator_at(t, &config).unwrap();
            assert!(convexity_certificate(op.transition(), CERTIFICATE_TOL));
            assert!(trace.diameters[t + 1] <= trace.diameters[t]);
        }
    }

    #[test]
    fn expanded_snapshots_follow_merges() {
        let x = line(&[0.0, 0.1, 5.0, 5.05]);
        let config = CondensationConfig::new(KernelSpec::box_kernel(0.2), ScheduleSpec::fixed())
            .with_zeta(1e-3);
        let trace = condense(&x, &config).unwrap();
        assert_eq!(trace.termination, Termination::FixedPoint);
        let last = trace.expanded(trace.steps());
        assert_eq!(last.len(), 4);
        assert!((last.coords()[0] - 0.05).abs() < 1e-12);
        assert_eq!(last.coords()[0], last.coords()[1]);
        assert_eq!(last.coords()[2], last.coords()[3]);
    }
}
