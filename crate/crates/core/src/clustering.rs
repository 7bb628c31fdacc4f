//! Centroid (UPGMC) and median (WPGMC) agglomerative clustering, and the
//! condensation runs whose merge trees coincide with them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{condense, CondensationConfig, CondensationTrace};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::kernels::KernelSpec;
use crate::schedules::ScheduleSpec;
use crate::topology::{
    condensation_homology, dendrogram_from_pairing, Dendrogram, DendrogramMerge,
};

/// Relative gap below which two candidate merge distances count as tied.
pub const TIE_TOL: f64 = 1e-12;
/// Distance under which two condensed rows are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linkage {
    /// Centroid of all members.
    Upgmc,
    /// Midpoint of the two parent centroids.
    Wpgmc,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Upgmc => "upgmc",
            Linkage::Wpgmc => "wpgmc",
        })
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upgmc" | "centroid" => Ok(Linkage::Upgmc),
            "wpgmc" | "median" => Ok(Linkage::Wpgmc),
            other => Err(Error::Parse(format!(
                "unknown linkage '{other}' (expected upgmc or wpgmc)"
            ))),
        }
    }
}

/// Active clusters during agglomeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    /// Original point indices of each cluster.
    pub clusters: Vec<Vec<usize>>,
    pub centroids: Vec<Vec<f64>>,
    /// Linkage-table ref of each cluster.
    pub refs: Vec<usize>,
}

impl ClusterState {
    pub fn singletons(x: &PointCloud) -> Self {
        Self {
            clusters: (0..x.len()).map(|i| vec![i]).collect(),
            centroids: x.rows().map(<[f64]>::to_vec).collect(),
            refs: (0..x.len()).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Result of an agglomeration with the achieved squared centroid distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Agglomeration {
    /// Heights are merge indices starting at 1.
    pub dendrogram: Dendrogram,
    pub distances: Vec<f64>,
    /// Cluster state after every merge, when requested.
    pub states: Vec<ClusterState>,
}

/// Agglomerates `x` merging the unique closest pair of centroids at every
/// level. Fails with [`Error::TieDetected`] when the closest pair is not unique.
pub fn agglomerate(x: &PointCloud, linkage: Linkage) -> Result<Dendrogram> {
    Ok(agglomerate_detailed(x, linkage, false)?.dendrogram)
}

pub fn agglomerate_detailed(
    x: &PointCloud,
    linkage: Linkage,
    keep_states: bool,
) -> Result<Agglomeration> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidCloud(
            "clustering needs at least two points".into(),
        ));
    }
    let mut state = ClusterState::singletons(x);
    let mut merges = Vec::with_capacity(n - 1);
    let mut distances = Vec::with_capacity(n - 1);
    let mut states = Vec::new();
    for level in 0..n - 1 {
        let c = &state.centroids;
        let mut best = (f64::INFINITY, 0, 0);
        let mut runner_up = f64::INFINITY;
        for a in 0..c.len() {
            for b in (a + 1)..c.len() {
                let d = squared_distance(&c[a], &c[b]);
                if d < best.0 {
                    runner_up = best.0;
                    best = (d, a, b);
                } else if d < runner_up {
                    runner_up = d;
                }
            }
        }
        let (d, a, b) = best;
        if runner_up - d <= TIE_TOL * d.max(f64::MIN_POSITIVE) {
            return Err(Error::TieDetected { level });
        }
        let (na, nb) = (
            state.clusters[a].len() as f64,
            state.clusters[b].len() as f64,
        );
        let centroid: Vec<f64> = match linkage {
            Linkage::Upgmc => c[a]
                .iter()
                .zip(&c[b])
                .map(|(p, q)| (na * p + nb * q) / (na + nb))
                .collect(),
            Linkage::Wpgmc => c[a].iter().zip(&c[b]).map(|(p, q)| (p + q) / 2.0).collect(),
        };
        let mut members = state.clusters[a].clone();
        members.extend(state.clusters[b].iter().copied());
        let (left, right) = if state.clusters[a].iter().min() < state.clusters[b].iter().min() {
            (state.refs[a], state.refs[b])
        } else {
            (state.refs[b], state.refs[a])
        };
        merges.push(DendrogramMerge {
            height: (level + 1) as f64,
            left,
            right,
            size: members.len(),
        });
        distances.push(d);
        // b > a, so removing b first keeps a's index valid
        state.clusters.remove(b);
        state.centroids.remove(b);
        state.refs.remove(b);
        state.clusters[a] = members;
        state.centroids[a] = centroid;
        state.refs[a] = n + level;
        if keep_states {
            states.push(state.clone());
        }
    }
    Ok(Agglomeration {
        dendrogram: Dendrogram { leaves: n, merges },
        distances,
        states,
    })
}

/// Which agglomerative linkage a condensation run should reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceMode {
    /// Merge radius 0: coincident rows are kept, so clusters weigh by size.
    Upgmc,
    /// Merge radius half the bandwidth: coincident rows collapse to one.
    Wpgmc,
}

impl From<Linkage> for EquivalenceMode {
    fn from(l: Linkage) -> Self {
        match l {
            Linkage::Upgmc => EquivalenceMode::Upgmc,
            Linkage::Wpgmc => EquivalenceMode::Wpgmc,
        }
    }
}

/// Box-kernel condensation with the bandwidth reset to the smallest positive
/// distance before every step and a single diffusion step per iteration.
pub fn equivalence_config(mode: EquivalenceMode, n: usize) -> CondensationConfig {
    let mut schedule = ScheduleSpec::min_distance();
    schedule.coincidence_tol = COINCIDENCE_TOL;
    let mut config = CondensationConfig::new(KernelSpec::box_kernel(1.0), schedule)
        .with_tau(1)
        .with_max_steps(4 * n + 16)
        .with_convergence_tol(COINCIDENCE_TOL);
    if mode == EquivalenceMode::Wpgmc {
        config.zeta_epsilon_fraction = Some(0.5);
    }
    config
}

/// A condensation run together with the merge tree read off it.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensationClustering {
    pub trace: CondensationTrace,
    pub config: CondensationConfig,
    pub dendrogram: Dendrogram,
}

pub fn condensation_as_clustering(x: &PointCloud, mode: EquivalenceMode) -> Result<Dendrogram> {
    Ok(condensation_clustering_detailed(x, mode)?.dendrogram)
}

/// Runs the equivalence configuration and checks that every step coalesces
/// exactly one pair of clusters.
pub fn condensation_clustering_detailed(
    x: &PointCloud,
    mode: EquivalenceMode,
) -> Result<CondensationClustering> {
    if x.len() < 2 {
        return Err(Error::InvalidCloud(
            "clustering needs at least two points".into(),
        ));
    }
    let config = equivalence_config(mode, x.len());
    let trace = condense(x, &config)?;
    let homology = condensation_homology(&trace, COINCIDENCE_TOL);
    let mut per_step = vec![0usize; trace.steps() + 1];
    for p in &homology.pairing.pairs {
        per_step[p.step] += 1;
    }
    if let Some(level) = per_step.iter().position(|&k| k > 1) {
        return Err(Error::TieDetected { level });
    }
    if homology.pairing.pairs.len() != x.len() - 1 {
        return Err(Error::InvalidConfig(format!(
            "condensation ended with {} of {} merges ({})",
            homology.pairing.pairs.len(),
            x.len() - 1,
            trace.termination
        )));
    }
    let dendrogram = dendrogram_from_pairing(&homology.pairing, x.len())?;
    Ok(CondensationClustering {
        trace,
        config,
        dendrogram,
    })
}

/// True when both trees merge the same unordered pairs of clusters in the
/// same order. Heights are ignored.
pub fn same_merge_tree(a: &Dendrogram, b: &Dendrogram) -> Result<bool> {
    if a.leaves != b.leaves {
        return Err(Error::LeafMismatch {
            left: a.leaves,
            right: b.leaves,
        });
    }
    let normalize = |d: &Dendrogram| -> Vec<(Vec<usize>, Vec<usize>)> {
        d.merge_sets()
            .into_iter()
            .map(|(l, r)| if l <= r { (l, r) } else { (r, l) })
            .collect()
    };
    Ok(normalize(a) == normalize(b))
}
