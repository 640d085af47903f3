//! Run configuration stored as flat `key=value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Optional paths are
//! written with an empty value when unset. Floats use the shortest
//! representation that parses back to the same value, so a written config
//! reproduces the run exactly.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::descriptor::{BinningConfig, GridSpec, Variant};
use crate::error::ConfigError;
use crate::ingest::FovMask;
use crate::retrieval::Backend;

/// Axis convention of the poses file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoseAxes {
    /// KITTI odometry ground truth: x right, y down, z forward.
    #[default]
    Camera,
    /// x forward, y left, z up.
    Lidar,
}

impl std::str::FromStr for PoseAxes {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "camera" => Ok(PoseAxes::Camera),
            "lidar" => Ok(PoseAxes::Lidar),
            other => Err(format!(
                "unknown pose axes {other:?}, expected camera or lidar"
            )),
        }
    }
}

impl std::fmt::Display for PoseAxes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PoseAxes::Camera => "camera",
            PoseAxes::Lidar => "lidar",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scans: Option<PathBuf>,
    pub poses: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub target_poses: Option<PathBuf>,
    pub pose_axes: PoseAxes,
    pub n_r: usize,
    pub n_a: usize,
    pub n_e: usize,
    pub l_max: f64,
    pub f_up: f64,
    pub f_down: f64,
    pub voxel: f64,
    pub variant: Variant,
    pub fov: FovMask,
    pub exclude_recent: u64,
    pub gt_dist: f64,
    /// Keyframe spacing in meters; 0 keeps every frame.
    pub sample_spacing: f64,
    pub backend: Backend,
    pub out: PathBuf,
    pub jobs: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = BinningConfig::<f64>::default();
        Self {
            scans: None,
            poses: None,
            db: None,
            target: None,
            target_poses: None,
            pose_axes: PoseAxes::Camera,
            n_r: b.grid.n_r,
            n_a: b.grid.n_a,
            n_e: b.grid.n_e,
            l_max: b.grid.l_max,
            f_up: b.grid.f_up,
            f_down: b.grid.f_down,
            voxel: b.voxel,
            variant: b.variant,
            fov: FovMask::full(),
            exclude_recent: 100,
            gt_dist: 10.0,
            sample_spacing: 0.0,
            backend: Backend::BruteForce,
            out: PathBuf::from("out"),
            jobs: 1,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn binning(&self) -> BinningConfig<f64> {
        BinningConfig {
            grid: GridSpec {
                n_r: self.n_r,
                n_a: self.n_a,
                n_e: self.n_e,
                l_max: self.l_max,
                f_up: self.f_up,
                f_down: self.f_down,
            },
            voxel: self.voxel,
            variant: self.variant,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.binning().validate().map_err(ConfigError::Invalid)?;
        if !(self.gt_dist > 0.0 && self.gt_dist.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "gt_dist must be positive, got {}",
                self.gt_dist
            )));
        }
        if !(self.sample_spacing >= 0.0 && self.sample_spacing.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "sample_spacing must be non-negative, got {}",
                self.sample_spacing
            )));
        }
        if self.jobs == 0 {
            return Err(ConfigError::Invalid("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k}={v}").unwrap();
        put("scans", path(&self.scans));
        put("poses", path(&self.poses));
        put("db", path(&self.db));
        put("target", path(&self.target));
        put("target_poses", path(&self.target_poses));
        put("pose_axes", self.pose_axes.to_string());
        put("nr", self.n_r.to_string());
        put("na", self.n_a.to_string());
        put("ne", self.n_e.to_string());
        put("lmax", self.l_max.to_string());
        put("fup", self.f_up.to_string());
        put("fdown", self.f_down.to_string());
        put("voxel", self.voxel.to_string());
        put("variant", self.variant.to_string());
        put("fov", self.fov.to_string());
        put("exclude_recent", self.exclude_recent.to_string());
        put("gt_dist", self.gt_dist.to_string());
        put("sample_spacing", self.sample_spacing.to_string());
        put("backend", self.backend.to_string());
        put("out", self.out.display().to_string());
        put("jobs", self.jobs.to_string());
        put("seed", self.seed.to_string());
        s
    }

    /// Parses config text on top of the defaults. Keys may appear in any
    /// order; a repeated key is an error.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: n + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Invalid(format!("duplicate key {key:?}")));
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V, ConfigError> {
            value.parse().map_err(|_| ConfigError::Value {
                key: key.into(),
                value: value.into(),
            })
        }
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "scans" => self.scans = opt_path(value),
            "poses" => self.poses = opt_path(value),
            "db" => self.db = opt_path(value),
            "target" => self.target = opt_path(value),
            "target_poses" => self.target_poses = opt_path(value),
            "pose_axes" => self.pose_axes = parse(key, value)?,
            "nr" => self.n_r = parse(key, value)?,
            "na" => self.n_a = parse(key, value)?,
            "ne" => self.n_e = parse(key, value)?,
            "lmax" => self.l_max = parse(key, value)?,
            "fup" => self.f_up = parse(key, value)?,
            "fdown" => self.f_down = parse(key, value)?,
            "voxel" => self.voxel = parse(key, value)?,
            "variant" => self.variant = parse(key, value)?,
            "fov" => self.fov = parse(key, value)?,
            "exclude_recent" => self.exclude_recent = parse(key, value)?,
            "gt_dist" => self.gt_dist = parse(key, value)?,
            "sample_spacing" => self.sample_spacing = parse(key, value)?,
            "backend" => self.backend = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "jobs" => self.jobs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn parses_comments_and_any_order() {
        let cfg = RunConfig::from_text("# run\n\nbackend=kd\nfov = 300-360,0-60\nnr=20\n").unwrap();
        assert_eq!(cfg.backend, Backend::KdTree);
        assert_eq!(cfg.n_r, 20);
        assert_eq!(cfg.fov.intervals(), &[(0.0, 60.0), (300.0, 360.0)]);
        assert_eq!(cfg.n_a, 60);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            RunConfig::from_text("nr 40"),
            Err(ConfigError::Syntax { line: 1 })
        ));
        assert!(matches!(
            RunConfig::from_text("colour=red"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            RunConfig::from_text("nr=forty"),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            RunConfig::from_text("backend=ann"),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            RunConfig::from_text("nr=1\nnr=2"),
            Err(ConfigError::Invalid(_))
        ));
        let bad = RunConfig {
            gt_dist: 0.0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            n_a: 0,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_values_round_trip(
            n_r in 1usize..200, n_a in 1usize..720, voxel in 1e-3f64..5.0,
            l_max in 1.0f64..300.0, f_down in -60.0f64..-1.0, f_up in 0.0f64..30.0,
            gt_dist in 0.1f64..50.0, spacing in 0.0f64..10.0, seed: u64,
            start in 0u32..359, width in 1u32..359, kd: bool, constant: bool,
        ) {
            let fov_text = if start + width <= 360 {
                format!("{start}-{}", start + width)
            } else {
                format!("{start}-360,0-{}", start + width - 360)
            };
            let cfg = RunConfig {
                scans: Some("/data/seq 00/velodyne".into()),
                n_r, n_a, voxel, l_max, f_down, f_up, gt_dist, seed,
                sample_spacing: spacing,
                fov: fov_text.parse().unwrap(),
                backend: if kd { Backend::KdTree } else { Backend::BruteForce },
                variant: if constant { Variant::ConstantIev } else { Variant::Standard },
                ..RunConfig::default()
            };
            let back = RunConfig::from_text(&cfg.to_text()).unwrap();
            prop_assert_eq!(back.to_text(), cfg.to_text());
            prop_assert_eq!(back, cfg);
        }
    }
}
