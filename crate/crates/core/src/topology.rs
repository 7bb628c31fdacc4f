//! Persistence summaries of condensation runs.
//!
//! Two filtrations are supported: the condensation filtration, indexed by
//! condensation step and computed by union-find over original point ids, and
//! the Vietoris-Rips filtration of a single snapshot, with simplex weight the
//! largest pairwise distance among its vertices.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::engine::CondensationTrace;
use crate::error::{Error, Result};
use crate::geometry::{diameter, euclidean, hausdorff, PointCloud};
use crate::union_find::UnionFind;

/// Largest cloud accepted for Rips persistence in dimension 1 or higher.
pub const VR_MAX_POINTS: usize = 512;
/// Largest number of simplices built for Rips persistence.
pub const VR_MAX_SIMPLICES: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePoint {
    pub birth: f64,
    /// `f64::INFINITY` for Rips classes that never die; the final step for
    /// essential condensation classes.
    pub death: f64,
    pub dim: usize,
    pub essential: bool,
}

impl PersistencePoint {
    pub fn finite(birth: f64, death: f64, dim: usize) -> Self {
        Self {
            birth,
            death,
            dim,
            essential: false,
        }
    }

    pub fn essential(birth: f64, death: f64, dim: usize) -> Self {
        Self {
            birth,
            death,
            dim,
            essential: true,
        }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub points: Vec<PersistencePoint>,
}

impl PersistenceDiagram {
    pub fn new(points: Vec<PersistencePoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Non-essential points of dimension `dim`.
    pub fn finite_points(&self, dim: usize) -> impl Iterator<Item = &PersistencePoint> {
        self.points
            .iter()
            .filter(move |p| p.dim == dim && !p.essential)
    }

    pub fn essential_points(&self, dim: usize) -> impl Iterator<Item = &PersistencePoint> {
        self.points
            .iter()
            .filter(move |p| p.dim == dim && p.essential)
    }

    /// Sum of persistence over non-essential points.
    pub fn total_persistence(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| !p.essential)
            .map(PersistencePoint::persistence)
            .sum()
    }
}

/// A vertex `survivor` paired with the edge `{survivor, absorbed}` that kills
/// the class of `absorbed` at condensation step `step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub survivor: usize,
    pub absorbed: usize,
    pub step: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistencePairing {
    pub pairs: Vec<Pair>,
}

/// One row of a linkage table. Refs below the leaf count are leaves; a ref
/// `leaves + k` is the cluster created by merge `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DendrogramMerge {
    pub height: f64,
    pub left: usize,
    pub right: usize,
    pub size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<DendrogramMerge>,
}

impl Dendrogram {
    /// Leaf sets of the two children of every merge, in merge order.
    pub fn merge_sets(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut members: Vec<Vec<usize>> = (0..self.leaves).map(|l| vec![l]).collect();
        let mut out = Vec::with_capacity(self.merges.len());
        for m in &self.merges {
            let mut left = members[m.left].clone();
            let mut right = members[m.right].clone();
            left.sort_unstable();
            right.sort_unstable();
            let mut union = left.clone();
            union.extend(&right);
            members.push(union);
            out.push((left, right));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondensationHomology {
    pub diagram: PersistenceDiagram,
    pub pairing: PersistencePairing,
}

/// Degree-0 persistence of the condensation filtration: an edge between two
/// original points enters at the first step where their positions are within
/// `zeta` and is never removed.
pub fn condensation_homology(trace: &CondensationTrace, zeta: f64) -> CondensationHomology {
    let x0 = trace.initial();
    let n = x0.len();
    let ids = x0.ids();
    let mut uf = UnionFind::new(n);
    let mut points = Vec::with_capacity(n);
    let mut pairs = Vec::with_capacity(n.saturating_sub(1));
    let last = trace.steps();

    for t in 0..=last {
        let snap = &trace.snapshots[t];
        let rows = trace.representative_rows(t);
        let mut first_of_row = vec![usize::MAX; snap.len()];
        let mut candidates = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            if first_of_row[r] == usize::MAX {
                first_of_row[r] = i;
            } else {
                candidates.push((first_of_row[r], i));
            }
        }
        for a in 0..snap.len() {
            for b in (a + 1)..snap.len() {
                if first_of_row[a] != usize::MAX
                    && first_of_row[b] != usize::MAX
                    && euclidean(snap.row(a), snap.row(b)) <= zeta
                {
                    let (i, j) = (first_of_row[a], first_of_row[b]);
                    candidates.push((i.min(j), i.max(j)));
                }
            }
        }
        candidates.sort_unstable();
        for (i, j) in candidates {
            if let Some((survivor, absorbed)) = uf.union(i, j) {
                points.push(PersistencePoint::finite(0.0, t as f64, 0));
                pairs.push(Pair {
                    survivor: ids[survivor],
                    absorbed: ids[absorbed],
                    step: t,
                });
            }
        }
    }
    for i in 0..n {
        if uf.find(i) == i {
            points.push(PersistencePoint::essential(0.0, last as f64, 0));
        }
    }
    CondensationHomology {
        diagram: PersistenceDiagram::new(points),
        pairing: PersistencePairing { pairs },
    }
}

/// Merge tree of a condensation pairing over leaves `0..leaves`.
pub fn dendrogram_from_pairing(pairing: &PersistencePairing, leaves: usize) -> Result<Dendrogram> {
    let mut uf = UnionFind::new(leaves);
    let mut cluster_of_root: Vec<usize> = (0..leaves).collect();
    let mut size_of_root = vec![1usize; leaves];
    let mut absorbed = vec![false; leaves];
    let mut merges = Vec::with_capacity(pairing.pairs.len());
    for p in &pairing.pairs {
        if p.survivor >= leaves {
            return Err(Error::InconsistentPairing(p.survivor));
        }
        if p.absorbed >= leaves || absorbed[p.absorbed] {
            return Err(Error::InconsistentPairing(p.absorbed));
        }
        absorbed[p.absorbed] = true;
        let (rs, ra) = (uf.find(p.survivor), uf.find(p.absorbed));
        if rs == ra {
            return Err(Error::InconsistentPairing(p.absorbed));
        }
        let (left, right) = (cluster_of_root[rs], cluster_of_root[ra]);
        let size = size_of_root[rs] + size_of_root[ra];
        let (root, _) = uf.union(rs, ra).expect("roots are distinct");
        cluster_of_root[root] = leaves + merges.len();
        size_of_root[root] = size;
        merges.push(DendrogramMerge {
            height: p.step as f64,
            left,
            right,
            size,
        });
    }
    Ok(Dendrogram { leaves, merges })
}

/// Cumulative persistence of finite bars dying at or before each step
/// `0..=T`, where `T` is the largest death in the diagram.
pub fn topological_activity(diagram: &PersistenceDiagram) -> Vec<(usize, f64)> {
    let horizon = diagram
        .points
        .iter()
        .filter(|p| p.death.is_finite())
        .map(|p| p.death.ceil() as usize)
        .max()
        .unwrap_or(0);
    let mut by_step = vec![0.0; horizon + 1];
    for p in diagram
        .points
        .iter()
        .filter(|p| !p.essential && p.death.is_finite())
    {
        by_step[p.death.ceil() as usize] += p.persistence();
    }
    let mut total = 0.0;
    by_step
        .into_iter()
        .enumerate()
        .map(|(t, v)| {
            total += v;
            (t, total)
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Simplex {
    weight: f64,
    verts: Vec<u32>,
}

fn filtration_order(a: &Simplex, b: &Simplex) -> std::cmp::Ordering {
    a.weight
        .total_cmp(&b.weight)
        .then(a.verts.len().cmp(&b.verts.len()))
        .then_with(|| a.verts.cmp(&b.verts))
}

fn rips_simplices(x: &PointCloud, top_dim: usize, max_scale: f64) -> Result<Vec<Simplex>> {
    let n = x.len();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| euclidean(x.row(i), x.row(j))).collect())
        .collect();
    let mut simplices: Vec<Simplex> = (0..n as u32)
        .map(|v| Simplex {
            weight: 0.0,
            verts: vec![v],
        })
        .collect();
    let mut frontier: Vec<Simplex> = simplices.clone();
    for _ in 1..=top_dim {
        let mut next = Vec::new();
        for s in &frontier {
            let last = *s.verts.last().expect("simplices are nonempty") as usize;
            #[allow(clippy::needless_range_loop)]
            for v in (last + 1)..n {
                let w = s
                    .verts
                    .iter()
                    .map(|&u| dist[u as usize][v])
                    .fold(s.weight, f64::max);
                if w <= max_scale {
                    let mut verts = s.verts.clone();
                    verts.push(v as u32);
                    next.push(Simplex { weight: w, verts });
                }
            }
            if simplices.len() + next.len() > VR_MAX_SIMPLICES {
                return Err(Error::TooLarge(format!(
                    "more than {VR_MAX_SIMPLICES} simplices"
                )));
            }
        }
        simplices.extend(next.iter().cloned());
        frontier = next;
    }
    simplices.sort_by(filtration_order);
    Ok(simplices)
}

/// Z2 column reduction; returns `low[j]` for each column (None when the
/// column reduces to zero).
fn reduce(boundaries: Vec<Vec<usize>>) -> Vec<Option<usize>> {
    let mut columns = boundaries;
    let mut owner: HashMap<usize, usize> = HashMap::new();
    let mut low = vec![None; columns.len()];
    for j in 0..columns.len() {
        let mut col = std::mem::take(&mut columns[j]);
        while let Some(&pivot) = col.last() {
            match owner.get(&pivot) {
                Some(&k) => col = symmetric_difference(&col, &columns[k]),
                None => break,
            }
        }
        if let Some(&pivot) = col.last() {
            owner.insert(pivot, j);
            low[j] = Some(pivot);
        }
        columns[j] = col;
    }
    low
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn rips_dim0(x: &PointCloud, max_scale: f64) -> Vec<PersistencePoint> {
    let n = x.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = euclidean(x.row(i), x.row(j));
            if w <= max_scale {
                edges.push((w, i, j));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut uf = UnionFind::new(n);
    let mut points = Vec::with_capacity(n);
    for (w, i, j) in edges {
        if uf.union(i, j).is_some() {
            points.push(PersistencePoint::finite(0.0, w, 0));
        }
    }
    for _ in 0..uf.components() {
        points.push(PersistencePoint::essential(0.0, f64::INFINITY, 0));
    }
    points
}

/// Rips persistence of `x` in dimensions `0..=max_dim`. Edges longer than
/// `max_scale` are left out; classes alive at that scale are essential.
/// Zero-persistence points are dropped in dimensions 1 and up.
pub fn vr_persistence(
    x: &PointCloud,
    max_dim: usize,
    max_scale: f64,
) -> Result<PersistenceDiagram> {
    if max_dim > 2 {
        return Err(Error::TooLarge(format!("dimension {max_dim} exceeds 2")));
    }
    if max_dim >= 1 && x.len() > VR_MAX_POINTS {
        return Err(Error::TooLarge(format!(
            "{} points exceed the cap of {VR_MAX_POINTS}",
            x.len()
        )));
    }
    let max_scale = max_scale.min(diameter(x));
    let mut points = rips_dim0(x, max_scale);
    if max_dim == 0 {
        return Ok(PersistenceDiagram::new(points));
    }

    let simplices = rips_simplices(x, max_dim + 1, max_scale)?;
    let index: HashMap<&[u32], usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.verts.as_slice(), i))
        .collect();
    let boundaries: Vec<Vec<usize>> = simplices
        .iter()
        .map(|s| {
            if s.verts.len() == 1 {
                return Vec::new();
            }
            let mut faces: Vec<usize> = (0..s.verts.len())
                .map(|skip| {
                    let face: Vec<u32> = s
                        .verts
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    index[face.as_slice()]
                })
                .collect();
            faces.sort_unstable();
            faces
        })
        .collect();
    let low = reduce(boundaries);
    let mut killed = vec![false; simplices.len()];
    for (j, l) in low.iter().enumerate() {
        if let Some(i) = *l {
            killed[i] = true;
            let dim = simplices[i].verts.len() - 1;
            if dim >= 1 && simplices[j].weight > simplices[i].weight {
                points.push(PersistencePoint::finite(
                    simplices[i].weight,
                    simplices[j].weight,
                    dim,
                ));
            }
        }
    }
    for (i, s) in simplices.iter().enumerate() {
        let dim = s.verts.len() - 1;
        if (1..=max_dim).contains(&dim) && low[i].is_none() && !killed[i] {
            points.push(PersistencePoint::essential(s.weight, f64::INFINITY, dim));
        }
    }
    Ok(PersistenceDiagram::new(points))
}

fn linf(a: &PersistencePoint, b: &PersistencePoint) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

fn diagonal_cost(p: &PersistencePoint) -> f64 {
    (p.death - p.birth) / 2.0
}

/// Kuhn's augmenting-path test for a perfect matching in a square bipartite
/// graph given by adjacency lists.
fn has_perfect_matching(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    let mut match_right = vec![usize::MAX; n];
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], match_right: &mut [usize]) -> bool {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                if match_right[v] == usize::MAX || augment(match_right[v], adj, seen, match_right) {
                    match_right[v] = u;
                    return true;
                }
            }
        }
        false
    }
    let mut seen = vec![false; n];
    for u in 0..n {
        seen.iter_mut().for_each(|s| *s = false);
        if !augment(u, adj, &mut seen, &mut match_right) {
            return false;
        }
    }
    true
}

/// Exact bottleneck distance between the finite points of two point sets,
/// each point allowed to match the diagonal.
fn bottleneck_finite(a: &[PersistencePoint], b: &[PersistencePoint]) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n + m == 0 {
        return 0.0;
    }
    // Rows: a then diagonal copies for b. Columns: b then diagonal copies for a.
    let size = n + m;
    let cost = |i: usize, j: usize| -> f64 {
        match (i < n, j < m) {
            (true, true) => linf(&a[i], &b[j]),
            (true, false) => {
                if j - m == i {
                    diagonal_cost(&a[i])
                } else {
                    f64::INFINITY
                }
            }
            (false, true) => {
                if i - n == j {
                    diagonal_cost(&b[j])
                } else {
                    f64::INFINITY
                }
            }
            (false, false) => 0.0,
        }
    };
    let mut candidates: Vec<f64> = (0..size)
        .flat_map(|i| (0..size).map(move |j| (i, j)))
        .map(|(i, j)| cost(i, j))
        .filter(|c| c.is_finite())
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let feasible = |c: f64| {
        let adj: Vec<Vec<usize>> = (0..size)
            .map(|i| (0..size).filter(|&j| cost(i, j) <= c).collect())
            .collect();
        has_perfect_matching(&adj)
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Exact bottleneck distance restricted to dimension `dim`. Essential points
/// are ignored unless `include_essential` is set, in which case both diagrams
/// must have the same number of them and they are matched among themselves.
pub fn bottleneck(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    dim: usize,
    include_essential: bool,
) -> Result<f64> {
    let a: Vec<PersistencePoint> = d1.finite_points(dim).copied().collect();
    let b: Vec<PersistencePoint> = d2.finite_points(dim).copied().collect();
    let mut distance = bottleneck_finite(&a, &b);
    if include_essential {
        let mut ea: Vec<PersistencePoint> = d1.essential_points(dim).copied().collect();
        let mut eb: Vec<PersistencePoint> = d2.essential_points(dim).copied().collect();
        if ea.len() != eb.len() {
            return Err(Error::EssentialMismatch {
                left: ea.len(),
                right: eb.len(),
            });
        }
        // Sorted pairing is optimal for the bottleneck cost on a line; deaths
        // are either both infinite or compared directly.
        let key = |p: &PersistencePoint, q: &PersistencePoint| {
            p.birth
                .total_cmp(&q.birth)
                .then(p.death.total_cmp(&q.death))
        };
        ea.sort_by(key);
        eb.sort_by(key);
        for (p, q) in ea.iter().zip(&eb) {
            let death_gap = if p.death == q.death {
                0.0
            } else {
                (p.death - q.death).abs()
            };
            distance = distance.max((p.birth - q.birth).abs().max(death_gap));
        }
    }
    Ok(distance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundAuditRow {
    pub from: usize,
    pub to: usize,
    pub bottleneck: f64,
    /// `2 d_H(X_from, X_to)`.
    pub hausdorff_bound: f64,
    /// `diam(X_from)`.
    pub diam_bound: f64,
    pub ok: bool,
}

/// Steps forming a greedy subsequence with non-increasing diameter.
pub fn non_increasing_diameter_steps(trace: &CondensationTrace) -> Vec<usize> {
    let mut steps = vec![0];
    let mut current = trace.diameters[0];
    for (t, &d) in trace.diameters.iter().enumerate().skip(1) {
        if d <= current {
            steps.push(t);
            current = d;
        }
    }
    steps
}

/// Compares Rips diagrams of consecutive snapshots along the non-increasing
/// diameter subsequence with twice their Hausdorff distance and the earlier
/// diameter.
pub fn persistence_bound_audit(
    trace: &CondensationTrace,
    dim: usize,
) -> Result<Vec<BoundAuditRow>> {
    let steps = non_increasing_diameter_steps(trace);
    let diagrams = steps
        .iter()
        .map(|&t| vr_persistence(&trace.snapshots[t], dim, f64::INFINITY))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(steps.len().saturating_sub(1));
    for k in 1..steps.len() {
        let (from, to) = (steps[k - 1], steps[k]);
        let bottleneck = bottleneck(&diagrams[k - 1], &diagrams[k], dim, false)?;
        let hausdorff_bound = 2.0 * hausdorff(&trace.snapshots[from], &trace.snapshots[to])?;
        let diam_bound = trace.diameters[from];
        let ok = bottleneck <= hausdorff_bound + 1e-9 && hausdorff_bound <= diam_bound + 1e-9;
        rows.push(BoundAuditRow {
            from,
            to,
            bottleneck,
            hausdorff_bound,
            diam_bound,
            ok,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{condense, CondensationConfig, MergeEvent, Termination};
    use crate::kernels::KernelSpec;
    use crate::schedules::ScheduleSpec;

    fn finite_deaths(d: &PersistenceDiagram, dim: usize) -> Vec<f64> {
        let mut v: Vec<f64> = d.finite_points(dim).map(|p| p.death).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    fn trace_from(snapshots: Vec<PointCloud>, merges: Vec<MergeEvent>) -> CondensationTrace {
        let steps = snapshots.len() - 1;
        let diameters = snapshots.iter().map(diameter).collect();
        CondensationTrace {
            epsilons: vec![1.0; steps + 1],
            zetas: vec![0.0; steps],
            degrees: vec![Vec::new(); steps],
            movements: vec![0.0; steps],
            merges,
            diameters,
            termination: Termination::Converged,
            snapshots,
        }
    }

    #[test]
    fn two_points_merging_at_step_three() {
        let snaps = [[0.0, 4.0], [1.0, 3.0], [1.5, 2.5], [2.0, 2.0]]
            .iter()
            .map(|r| PointCloud::from_scalars(r).unwrap())
            .collect();
        let trace = trace_from(snaps, Vec::new());
        let h = condensation_homology(&trace, 1e-3);
        assert_eq!(
            h.diagram.points,
            vec![
                PersistencePoint::finite(0.0, 3.0, 0),
                PersistencePoint::essential(0.0, 3.0, 0)
            ]
        );
        assert_eq!(
            h.pairing.pairs,
            vec![Pair {
                survivor: 0,
                absorbed: 1,
                step: 3
            }]
        );
    }

    #[test]
    fn star_collapse_gives_n_minus_one_bars() {
        let x = PointCloud::from_scalars(&[0.0, 1.0, 2.5, 4.0]).unwrap();
        let config = CondensationConfig::new(KernelSpec::box_kernel(100.0), ScheduleSpec::fixed())
            .with_zeta(1e-6);
        let trace = condense(&x, &config).unwrap();
        let h = condensation_homology(&trace, 1e-6);
        assert_eq!(finite_deaths(&h.diagram, 0), vec![1.0; 3]);
        assert_eq!(h.diagram.essential_points(0).count(), 1);
    }

    #[test]
    fn clusters_merging_at_different_steps() {
        // two pairs: {0,1} meet at t=2, {2,3} at t=3, the clusters at t=7
        let pos = |t: usize| -> Vec<[f64; 2]> {
            let gap = if t >= 2 { 0.0 } else { 0.5 };
            let shift = if t >= 7 { 0.0 } else { 10.0 };
            let gap2 = if t >= 3 { 0.0 } else { 0.5 };
            vec![
                [0.0, 0.0],
                [0.0, gap],
                [shift, shift],
                [shift, shift + gap2],
            ]
        };
        let snaps = (0..=8)
            .map(|t| PointCloud::from_rows(&pos(t)).unwrap())
            .collect();
        let h = condensation_homology(&trace_from(snaps, Vec::new()), 1e-3);
        assert_eq!(finite_deaths(&h.diagram, 0), vec![2.0, 3.0, 7.0]);
        let d = dendrogram_from_pairing(&h.pairing, 4).unwrap();
        assert_eq!(d.merges.len(), 3);
        assert_eq!(
            (d.merges[2].left, d.merges[2].right, d.merges[2].size),
            (4, 5, 4)
        );
    }

    #[test]
    fn homology_follows_merged_rows() {
        let x = PointCloud::from_scalars(&[0.0, 0.1, 5.0]).unwrap();
        let config = CondensationConfig::new(KernelSpec::box_kernel(0.5), ScheduleSpec::fixed())
            .with_zeta(0.01);
        let trace = condense(&x, &config).unwrap();
        assert_eq!(trace.termination, Termination::FixedPoint);
        let h = condensation_homology(&trace, 0.01);
        assert_eq!(finite_deaths(&h.diagram, 0), vec![1.0]);
        assert_eq!(h.diagram.essential_points(0).count(), 2);
    }

    #[test]
    fn dendrogram_examples() {
        let single = PersistencePairing {
            pairs: vec![Pair {
                survivor: 0,
                absorbed: 1,
                step: 4,
            }],
        };
        let d = dendrogram_from_pairing(&single, 2).unwrap();
        assert_eq!(
            d.merges,
            vec![DendrogramMerge {
                height: 4.0,
                left: 0,
                right: 1,
                size: 2
            }]
        );

        let chain = PersistencePairing {
            pairs: vec![
                Pair {
                    survivor: 0,
                    absorbed: 1,
                    step: 1,
                },
                Pair {
                    survivor: 0,
                    absorbed: 2,
                    step: 2,
                },
            ],
        };
        let d = dendrogram_from_pairing(&chain, 3).unwrap();
        assert_eq!(
            d.merges,
            vec![
                DendrogramMerge {
                    height: 1.0,
                    left: 0,
                    right: 1,
                    size: 2
                },
                DendrogramMerge {
                    height: 2.0,
                    left: 3,
                    right: 2,
                    size: 3
                }
            ]
        );

        assert!(dendrogram_from_pairing(&PersistencePairing::default(), 3)
            .unwrap()
            .merges
            .is_empty());

        let twice = PersistencePairing {
            pairs: vec![
                Pair {
                    survivor: 0,
                    absorbed: 2,
                    step: 1,
                },
                Pair {
                    survivor: 1,
                    absorbed: 2,
                    step: 2,
                },
            ],
        };
        assert_eq!(
            dendrogram_from_pairing(&twice, 3),
            Err(Error::InconsistentPairing(2))
        );
    }

    #[test]
    fn rips_examples() {
        let x = PointCloud::from_scalars(&[0.0, 1.0, 3.0]).unwrap();
        let d = vr_persistence(&x, 0, f64::INFINITY).unwrap();
        assert_eq!(finite_deaths(&d, 0), vec![1.0, 2.0]);
        assert_eq!(d.essential_points(0).count(), 1);

        let square =
            PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let d = vr_persistence(&square, 1, 2.0).unwrap();
        let ones: Vec<_> = d.points.iter().filter(|p| p.dim == 1).collect();
        assert_eq!(ones.len(), 1);
        assert_eq!(ones[0].birth, 1.0);
        assert!((ones[0].death - 2f64.sqrt()).abs() < 1e-15);

        let single = PointCloud::from_scalars(&[7.0]).unwrap();
        let d = vr_persistence(&single, 1, f64::INFINITY).unwrap();
        assert_eq!(
            d.points,
            vec![PersistencePoint::essential(0.0, f64::INFINITY, 0)]
        );
    }

    #[test]
    fn rips_caps() {
        let x = PointCloud::from_scalars(&(0..600).map(f64::from).collect::<Vec<_>>()).unwrap();
        assert!(matches!(
            vr_persistence(&x, 1, f64::INFINITY),
            Err(Error::TooLarge(_))
        ));
        assert!(vr_persistence(&x, 0, f64::INFINITY).is_ok());
    }

    #[test]
    fn circle_has_one_long_loop() {
        let n = 12;
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let d = vr_persistence(&PointCloud::from_rows(&rows).unwrap(), 1, f64::INFINITY).unwrap();
        let ones: Vec<_> = d.points.iter().filter(|p| p.dim == 1).collect();
        assert_eq!(ones.len(), 1);
        assert!(ones[0].persistence() > 1.0);
    }

    #[test]
    fn bottleneck_examples() {
        let a = PersistenceDiagram::new(vec![PersistencePoint::finite(0.0, 2.0, 0)]);
        assert_eq!(bottleneck(&a, &a, 0, false).unwrap(), 0.0);
        assert_eq!(
            bottleneck(&a, &PersistenceDiagram::default(), 0, false).unwrap(),
            1.0
        );
        let b = PersistenceDiagram::new(vec![PersistencePoint::finite(0.0, 1.0, 0)]);
        let c = PersistenceDiagram::new(vec![PersistencePoint::finite(0.0, 1.5, 0)]);
        assert_eq!(bottleneck(&b, &c, 0, false).unwrap(), 0.5);
        assert_eq!(bottleneck(&a, &b, 0, false).unwrap(), 1.0);
    }

    #[test]
    fn bottleneck_essentials() {
        let a = PersistenceDiagram::new(vec![PersistencePoint::essential(0.0, 5.0, 0)]);
        let b = PersistenceDiagram::new(vec![PersistencePoint::essential(0.0, 8.0, 0)]);
        assert_eq!(bottleneck(&a, &b, 0, false).unwrap(), 0.0);
        assert_eq!(bottleneck(&a, &b, 0, true).unwrap(), 3.0);
        let none = PersistenceDiagram::default();
        assert_eq!(
            bottleneck(&a, &none, 0, true),
            Err(Error::EssentialMismatch { left: 1, right: 0 })
        );
    }

    #[test]
    fn activity_examples() {
        let d = PersistenceDiagram::new(vec![
            PersistencePoint::finite(0.0, 1.0, 0),
            PersistencePoint::finite(0.0, 1.0, 0),
            PersistencePoint::finite(0.0, 3.0, 0),
            PersistencePoint::essential(0.0, 3.0, 0),
        ]);
        assert_eq!(
            topological_activity(&d),
            vec![(0, 0.0), (1, 2.0), (2, 2.0), (3, 5.0)]
        );

        let only_essential =
            PersistenceDiagram::new(vec![PersistencePoint::essential(0.0, 4.0, 0)]);
        assert!(topological_activity(&only_essential)
            .iter()
            .all(|&(_, v)| v == 0.0));

        let single = PersistenceDiagram::new(vec![PersistencePoint::finite(0.0, 5.0, 0)]);
        let curve = topological_activity(&single);
        assert_eq!(curve[4], (4, 0.0));
        assert_eq!(curve[5], (5, 5.0));
    }

    #[test]
    fn bound_audit_two_points() {
        let snaps = vec![
            PointCloud::from_scalars(&[0.0, 2.0]).unwrap(),
            PointCloud::from_scalars(&[0.5, 1.5]).unwrap(),
        ];
        let rows = persistence_bound_audit(&trace_from(snaps, Vec::new()), 0).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].bottleneck, 1.0);
        assert_eq!(rows[0].hausdorff_bound, 1.0);
        assert_eq!(rows[0].diam_bound, 2.0);
        assert!(rows[0].ok);

        let same = vec![PointCloud::from_scalars(&[0.0, 2.0]).unwrap(); 2];
        let rows = persistence_bound_audit(&trace_from(same, Vec::new()), 0).unwrap();
        assert_eq!(rows[0].bottleneck, 0.0);
    }
}
