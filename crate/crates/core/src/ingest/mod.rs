//! Point cloud and pose ingestion plus the preprocessing applied before
//! description: field-of-view clipping, voxel downsampling and
//! distance-based frame sampling.

mod fov;
mod kitti;
mod sampling;
mod voxel;

pub use fov::{clip_fov, FovMask};
pub use kitti::{
    camera_to_lidar_axes, frame_id_from_path, load_kitti_poses, load_kitti_scan, parse_kitti_poses,
    read_kitti_quads, write_kitti_quads,
};
pub use sampling::sample_by_distance;
pub use voxel::voxel_downsample;

use crate::scalar::Scalar;

/// A single scan in the sensor frame, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    pub frame_id: u64,
    pub points: Vec<[T; 3]>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(frame_id: u64, points: Vec<[T; 3]>) -> Self {
        debug_assert!(points.iter().flatten().all(|c| c.is_finite()));
        Self { frame_id, points }
    }

    pub fn empty(frame_id: u64) -> Self {
        Self {
            frame_id,
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rotates every point about the sensor z axis by `yaw_deg`.
    pub fn rotated_yaw(&self, yaw_deg: T) -> Self {
        let (s, c) = yaw_deg.to_radians().sin_cos();
        let points = self
            .points
            .iter()
            .map(|&[x, y, z]| [c * x - s * y, s * x + c * y, z])
            .collect();
        Self {
            frame_id: self.frame_id,
            points,
        }
    }
}

/// Rigid pose `[R | t]` of a frame in the world (trajectory) frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T> {
    pub frame_id: u64,
    pub rotation: [[T; 3]; 3],
    pub translation: [T; 3],
}

impl<T: Scalar> Pose<T> {
    pub fn identity(frame_id: u64) -> Self {
        Self {
            frame_id,
            rotation: identity3(),
            translation: [T::zero(); 3],
        }
    }

    pub fn from_translation(frame_id: u64, translation: [T; 3]) -> Self {
        Self {
            frame_id,
            rotation: identity3(),
            translation,
        }
    }

    pub fn distance_to(&self, other: &Pose<T>) -> T {
        distance3(&self.translation, &other.translation)
    }
}

pub(crate) fn identity3<T: Scalar>() -> [[T; 3]; 3] {
    let (o, l) = (T::zero(), T::one());
    [[l, o, o], [o, l, o], [o, o, l]]
}

pub(crate) fn distance3<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Largest violation of `RᵀR = I` and `det R = 1`.
pub fn orthonormality_error<T: Scalar>(r: &[[T; 3]; 3]) -> T {
    let mut worst = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            let dot = (0..3).fold(T::zero(), |acc, k| acc + r[k][i] * r[k][j]);
            let expected = if i == j { T::one() } else { T::zero() };
            worst = worst.max((dot - expected).abs());
        }
    }
    let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
        - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
    worst.max((det - T::one()).abs())
}
