//! Spatially organized descriptors.
//!
//! Points are binned in spherical coordinates into range × elevation and
//! azimuth × elevation counters. The per-elevation point totals are min-max
//! normalized into a weight vector, and multiplying each counter matrix by
//! that vector yields the range descriptor (used for retrieval, invariant to
//! yaw) and the azimuth descriptor (used for heading estimation, shifts
//! circularly under yaw).

mod binning;
mod counters;

pub use binning::{bin_indices, to_spherical, BinIndex, SphericalPoint};
pub use counters::{build_counters, build_solid, min_max_weights, CounterSet};

use std::fmt;
use std::str::FromStr;

use crate::ingest::{voxel_downsample, PointCloud};
use crate::scalar::{Field, Scalar};

/// How the per-elevation weights are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// Min-max normalized elevation counts.
    #[default]
    Standard,
    /// All weights fixed at one; descriptors reduce to plain counter sums.
    ConstantIev,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Variant::Standard),
            "constant-iev" => Ok(Variant::ConstantIev),
            other => Err(format!(
                "unknown variant {other:?}, expected standard or constant-iev"
            )),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Standard => "standard",
            Variant::ConstantIev => "constant-iev",
        })
    }
}

/// Spherical binning grid. This is everything a stored descriptor depends on
/// besides preprocessing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub n_r: usize,
    pub n_a: usize,
    pub n_e: usize,
    /// Maximum observable range in meters.
    pub l_max: T,
    /// Upper vertical field of view in degrees.
    pub f_up: T,
    /// Lower vertical field of view in degrees.
    pub f_down: T,
}

impl<T: Scalar> GridSpec<T> {
    /// Velodyne HDL-64E (KITTI): 64 rings spanning -24.8° to +2.0°, 80 m.
    pub fn hdl64() -> Self {
        Self {
            n_r: 40,
            n_a: 60,
            n_e: 64,
            l_max: T::lit(80.0),
            f_up: T::lit(2.0),
            f_down: T::lit(-24.8),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_r == 0 || self.n_a == 0 || self.n_e == 0 {
            return Err(format!(
                "bin counts must be at least 1 (n_r={}, n_a={}, n_e={})",
                self.n_r, self.n_a, self.n_e
            ));
        }
        if !(self.l_max > T::zero() && self.l_max.is_finite()) {
            return Err(format!("l_max must be positive, got {}", self.l_max));
        }
        if !(self.f_up > self.f_down) || !self.f_up.is_finite() || !self.f_down.is_finite() {
            return Err(format!(
                "f_up ({}) must exceed f_down ({})",
                self.f_up, self.f_down
            ));
        }
        Ok(())
    }

    /// Size of one azimuth bin in degrees.
    pub fn azimuth_step_deg(&self) -> T {
        T::lit(360.0) / T::from_usize(self.n_a).unwrap()
    }

    /// Bytes of the range descriptor when stored as f64, the part exchanged
    /// for place retrieval.
    pub fn payload_bytes(&self) -> usize {
        self.n_r * std::mem::size_of::<f64>()
    }
}

impl<T: Scalar> Default for GridSpec<T> {
    fn default() -> Self {
        Self::hdl64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningConfig<T> {
    pub grid: GridSpec<T>,
    /// Voxel edge in meters used to downsample before counting.
    pub voxel: T,
    pub variant: Variant,
}

impl<T: Scalar> Default for BinningConfig<T> {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            voxel: T::lit(0.5),
            variant: Variant::Standard,
        }
    }
}

impl<T: Scalar> BinningConfig<T> {
    pub fn validate(&self) -> Result<(), String> {
        self.grid.validate()?;
        if !(self.voxel > T::zero() && self.voxel.is_finite()) {
            return Err(format!("voxel must be positive, got {}", self.voxel));
        }
        Ok(())
    }
}

/// Range descriptor (length `n_r`) and azimuth descriptor (length `n_a`) of
/// one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SolidDescriptor<F> {
    pub frame_id: u64,
    pub r_solid: Vec<F>,
    pub a_solid: Vec<F>,
}

impl<F: Field> SolidDescriptor<F> {
    pub fn zeros(frame_id: u64, n_r: usize, n_a: usize) -> Self {
        Self {
            frame_id,
            r_solid: vec![F::zero(); n_r],
            a_solid: vec![F::zero(); n_a],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.r_solid.iter().all(|v| *v == F::zero())
    }
}

/// Full pipeline for one raw cloud: voxel downsampling, counting, reweighting.
pub fn describe<T: Scalar>(cloud: &PointCloud<T>, cfg: &BinningConfig<T>) -> SolidDescriptor<T> {
    describe_with_counters(cloud, cfg).0
}

/// Like [`describe`], also returning the counters for diagnostics.
pub fn describe_with_counters<T: Scalar>(
    cloud: &PointCloud<T>,
    cfg: &BinningConfig<T>,
) -> (SolidDescriptor<T>, CounterSet<T>) {
    let down = voxel_downsample(cloud, cfg.voxel);
    let counters = build_counters(&down, cfg);
    (build_solid(&counters, cloud.frame_id), counters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(seed: u64, n: usize) -> PointCloud<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| {
                [
                    rng.gen_range(-60.0..60.0),
                    rng.gen_range(-60.0..60.0),
                    rng.gen_range(-3.0..3.0),
                ]
            })
            .collect();
        PointCloud::new(4, pts)
    }

    #[test]
    fn describe_is_deterministic() {
        let cloud = random_cloud(1, 5000);
        let cfg = BinningConfig::default();
        assert_eq!(describe(&cloud, &cfg), describe(&cloud, &cfg));
    }

    #[test]
    fn describe_ignores_point_order() {
        let cloud = random_cloud(2, 5000);
        let mut shuffled = cloud.clone();
        shuffled.points.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
        let cfg = BinningConfig::default();
        assert_eq!(describe(&cloud, &cfg), describe(&shuffled, &cfg));
    }

    #[test]
    fn describe_shapes_follow_grid() {
        let cfg = BinningConfig::default();
        let d = describe(&random_cloud(3, 1000), &cfg);
        assert_eq!(d.r_solid.len(), 40);
        assert_eq!(d.a_solid.len(), 60);
        assert_eq!(d.frame_id, 4);
        assert_eq!(cfg.grid.payload_bytes(), 320);
    }

    #[test]
    fn empty_cloud_gives_zero_descriptor() {
        let d = describe(&PointCloud::<f64>::empty(0), &BinningConfig::default());
        assert!(d.is_zero());
        assert!(d.a_solid.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec::<f64>::hdl64();
        assert!(g.validate().is_ok());
        g.n_e = 0;
        assert!(g.validate().is_err());
        let mut g = GridSpec::<f64>::hdl64();
        g.f_up = g.f_down;
        assert!(g.validate().is_err());
        let mut g = GridSpec::<f64>::hdl64();
        g.l_max = 0.0;
        assert!(g.validate().is_err());
    }
}
