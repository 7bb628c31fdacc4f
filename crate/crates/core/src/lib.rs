//! Diffusion condensation: a time-inhomogeneous diffusion that repeatedly
//! rebuilds a Markov operator on a point cloud and moves every point to its
//! expected position under one or more random-walk steps.
//!
//! The crate is organized bottom-up:
//!
//! | module | contents |
//! |--------|----------|
//! | [`geometry`] | point clouds, distances, diameter, Hausdorff distance, hull checks |
//! | [`kernels`] | kernel matrices and row-stochastic diffusion operators |
//! | [`schedules`] | bandwidth update policies, including the contraction-guaranteeing ones |
//! | [`engine`] | the condensation loop, merging and trace replay |
//! | [`spectral`] | eigenvalues, the constant/nonconstant decomposition, bound audits |
//! | [`topology`] | condensation homology, Vietoris-Rips persistence, bottleneck distance |
//! | [`clustering`] | centroid and median agglomerative clustering and the equivalence check |
//! | [`datasets`] | deterministic synthetic point clouds |
//! | [`io`] | text formats for clouds, traces and diagrams |

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod datasets;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod schedules;
pub mod spectral;
pub mod topology;
pub mod union_find;

pub use engine::{
    condense, replay_check, CondensationConfig, CondensationTrace, MergeEvent, Termination,
};
pub use error::{Error, Result};
pub use geometry::PointCloud;
pub use kernels::{DiffusionOperator, KernelFamily, KernelSpec};
pub use schedules::{SchedulePolicy, ScheduleSpec};
