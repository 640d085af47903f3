//! Lightweight LiDAR place recognition for restricted fields of view.
//!
//! Scans are organized into range × elevation and azimuth × elevation
//! counters, reweighted by normalized per-elevation point totals, and reduced
//! to two short vectors: a yaw-invariant range descriptor used to retrieve
//! revisited places, and an azimuth descriptor whose circular alignment gives
//! the initial heading between two matched scans.
//!
//! Core math is generic over the scalar type; the aliases below fix `f64`,
//! the precision used by the database format and the CLI.

// `!(a < b)` is the NaN-rejecting form used for validation throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod descriptor;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod retrieval;
pub mod scalar;
pub mod selftest;
pub mod synthetic;

pub use descriptor::{describe, BinningConfig, GridSpec, SolidDescriptor, Variant};
pub use ingest::{FovMask, PointCloud, Pose};
pub use retrieval::{Backend, CandidatePool, DescriptorDatabase, Match, SearchOutcome};
pub use scalar::{Field, Scalar};

/// Exact rational scalar for checking counter arithmetic without rounding.
pub type Rational = num_rational::Ratio<i64>;

pub type PointCloud64 = PointCloud<f64>;
pub type PointCloud32 = PointCloud<f32>;
pub type Pose64 = Pose<f64>;
pub type BinningConfig64 = BinningConfig<f64>;
pub type GridSpec64 = GridSpec<f64>;
pub type Descriptor64 = SolidDescriptor<f64>;
pub type Descriptor32 = SolidDescriptor<f32>;
pub type Database64 = DescriptorDatabase<f64>;
pub type Match64 = Match<f64>;
