//! Metric primitives on finite point clouds.
//!
//! Everything here is a pure function of its inputs. Distances are always
//! evaluated through [`euclidean`] so that two routines comparing the same
//! pair see bit-identical values.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default tolerance for algebraic certificates (row sums, signs).
pub const CERTIFICATE_TOL: f64 = 1e-12;
/// Default tolerance for geometric equalities.
pub const GEOMETRIC_TOL: f64 = 1e-9;

/// A finite point cloud: `n` rows in `dim` dimensions, each row carrying a
/// stable identifier and the number of original points it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    ids: Vec<usize>,
    multiplicity: Vec<usize>,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates; ids are `0..n`, multiplicities 1.
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCloud("dimension must be at least 1".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidCloud(format!(
                "{} coordinates do not divide into rows of length {dim}",
                coords.len()
            )));
        }
        let n = coords.len() / dim;
        Self::with_identity(coords, dim, (0..n).collect(), vec![1; n])
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::InvalidCloud("cloud must have at least one point".into()))?;
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::InvalidCloud(format!(
                    "row {i} has {} columns, expected {dim}",
                    r.len()
                )));
            }
            coords.extend_from_slice(r);
        }
        Self::new(coords, dim)
    }

    /// 1D convenience constructor.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn with_identity(
        coords: Vec<f64>,
        dim: usize,
        ids: Vec<usize>,
        multiplicity: Vec<usize>,
    ) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidCloud(
                "coordinate buffer does not match dimension".into(),
            ));
        }
        let n = coords.len() / dim;
        if n == 0 {
            return Err(Error::InvalidCloud(
                "cloud must have at least one point".into(),
            ));
        }
        if ids.len() != n || multiplicity.len() != n {
            return Err(Error::InvalidCloud(format!(
                "{n} rows but {} ids and {} multiplicities",
                ids.len(),
                multiplicity.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "non-finite coordinate in row {}",
                i / dim
            )));
        }
        if multiplicity.contains(&0) {
            return Err(Error::InvalidCloud(
                "multiplicities must be positive".into(),
            ));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCloud("point ids must be unique".into()));
        }
        Ok(Self {
            coords,
            dim,
            ids,
            multiplicity,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn multiplicity(&self) -> &[usize] {
        &self.multiplicity
    }

    pub fn total_multiplicity(&self) -> usize {
        self.multiplicity.iter().sum()
    }

    /// Column `k` as a function on the rows.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.rows().map(|r| r[k]).collect()
    }

    /// Same identities, new coordinates.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        Self::with_identity(
            coords,
            self.dim,
            self.ids.clone(),
            self.multiplicity.clone(),
        )
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for r in self.rows() {
            for (ck, x) in c.iter_mut().zip(r) {
                *ck += x;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|ck| *ck /= n);
        c
    }

    /// Number of distinct positions, treating rows within `tol` as one.
    pub fn distinct_positions(&self, tol: f64) -> usize {
        let mut reps: Vec<&[f64]> = Vec::new();
        for r in self.rows() {
            if !reps.iter().any(|q| euclidean(q, r) <= tol) {
                reps.push(r);
            }
        }
        reps.len()
    }
}

/// Euclidean distance with a fixed summation order.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Symmetric matrix of pairwise Euclidean distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(DMatrix<f64>);

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub fn pairwise_distances(x: &PointCloud) -> DistanceMatrix {
    let n = x.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(x.row(i), x.row(j));
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    DistanceMatrix(m)
}

pub fn diameter(x: &PointCloud) -> f64 {
    let n = x.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            best = best.max(euclidean(x.row(i), x.row(j)));
        }
    }
    best
}

fn directed_hausdorff(from: &PointCloud, to: &PointCloud) -> f64 {
    from.rows()
        .map(|a| {
            to.rows()
                .map(|b| euclidean(a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn hausdorff(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(directed_hausdorff(x, y).max(directed_hausdorff(y, x)))
}

/// Smallest pairwise distance strictly greater than `coincidence_tol`.
///
/// Pairs at distance `<= coincidence_tol` count as the same position.
pub fn min_positive_distance_with_tol(x: &PointCloud, coincidence_tol: f64) -> Result<f64> {
    let n = x.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(x.row(i), x.row(j));
            if d > coincidence_tol && d < best {
                best = d;
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::AllCoincident)
    }
}

pub fn min_positive_distance(x: &PointCloud) -> Result<f64> {
    min_positive_distance_with_tol(x, 0.0)
}

/// Entrywise nonnegative with unit row sums, i.e. every output row is a
/// convex combination of input rows.
pub fn convexity_certificate(p: &DMatrix<f64>, tol: f64) -> bool {
    if p.nrows() != p.ncols() {
        return false;
    }
    (0..p.nrows()).all(|i| {
        let mut sum = 0.0;
        for j in 0..p.ncols() {
            let v = p[(i, j)];
            if !(v >= -tol) {
                return false;
            }
            sum += v;
        }
        (sum - 1.0).abs() <= tol
    })
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull vertices in counter-clockwise order (Andrew's monotone chain).
/// Collinear points are dropped; a degenerate hull comes back as one or two
/// vertices.
pub fn convex_hull_2d(x: &PointCloud) -> Result<Vec<[f64; 2]>> {
    if x.dim() != 2 {
        return Err(Error::DimensionUnsupported(x.dim()));
    }
    let mut pts: Vec<[f64; 2]> = x.rows().map(|r| [r[0], r[1]]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return Ok(pts);
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    Ok(lower)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn inside_hull(p: [f64; 2], hull: &[[f64; 2]], tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => ((p[0] - hull[0][0]).powi(2) + (p[1] - hull[0][1]).powi(2)).sqrt() <= tol,
        2 => point_segment_distance(p, hull[0], hull[1]) <= tol,
        k => (0..k).all(|e| {
            let a = hull[e];
            let b = hull[(e + 1) % k];
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            cross(a, b, p) / len >= -tol
        }),
    }
}

/// Whether conv(inner) lies inside conv(outer), within [`GEOMETRIC_TOL`].
///
/// Only the hull vertices of `inner` need checking, since the extremal points
/// of a hull belong to the cloud.
pub fn hull_containment_2d(inner: &PointCloud, outer: &PointCloud) -> Result<bool> {
    hull_containment_2d_with_tol(inner, outer, GEOMETRIC_TOL)
}

pub fn hull_containment_2d_with_tol(
    inner: &PointCloud,
    outer: &PointCloud,
    tol: f64,
) -> Result<bool> {
    let inner_hull = convex_hull_2d(inner)?;
    let outer_hull = convex_hull_2d(outer)?;
    Ok(inner_hull.iter().all(|&v| inside_hull(v, &outer_hull, tol)))
}
