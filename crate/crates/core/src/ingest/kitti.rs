//! KITTI odometry readers: velodyne `.bin` scans and `poses/XX.txt`.

use std::fs;
use std::path::Path;

use log::warn;

use super::{orthonormality_error, PointCloud, Pose};
use crate::error::IngestError;
use crate::scalar::Scalar;

const QUAD_BYTES: usize = 16;
const POSE_WARN: f64 = 1e-3;
const POSE_REJECT: f64 = 1e-1;

/// Raw `(x, y, z, intensity)` quadruples in file order.
pub fn read_kitti_quads(path: impl AsRef<Path>) -> Result<Vec<[f32; 4]>, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.into(),
        source,
    })?;
    if bytes.len() % QUAD_BYTES != 0 {
        return Err(IngestError::ScanLength {
            path: path.into(),
            bytes: bytes.len() as u64,
        });
    }
    Ok(bytes
        .chunks_exact(QUAD_BYTES)
        .map(|chunk| {
            let mut quad = [0f32; 4];
            for (value, raw) in quad.iter_mut().zip(chunk.chunks_exact(4)) {
                *value = f32::from_le_bytes(raw.try_into().unwrap());
            }
            quad
        })
        .collect())
}

pub fn write_kitti_quads(path: impl AsRef<Path>, quads: &[[f32; 4]]) -> Result<(), IngestError> {
    let path = path.as_ref();
    let bytes: Vec<u8> = quads
        .iter()
        .flatten()
        .flat_map(|v| v.to_le_bytes())
        .collect();
    fs::write(path, bytes).map_err(|source| IngestError::Io {
        path: path.into(),
        source,
    })
}

/// Loads a velodyne scan, discarding intensity. Non-finite points are rejected.
pub fn load_kitti_scan<T: Scalar>(
    path: impl AsRef<Path>,
    frame_id: u64,
) -> Result<PointCloud<T>, IngestError> {
    let path = path.as_ref();
    let quads = read_kitti_quads(path)?;
    let mut points = Vec::with_capacity(quads.len());
    for (index, [x, y, z, _]) in quads.into_iter().enumerate() {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(IngestError::NonFinitePoint {
                path: path.into(),
                index,
            });
        }
        points.push([T::lit(x as f64), T::lit(y as f64), T::lit(z as f64)]);
    }
    Ok(PointCloud { frame_id, points })
}

/// Numeric file stem (`000123.bin` → 123), if there is one.
pub fn frame_id_from_path(path: &Path) -> Option<u64> {
    path.file_stem()?.to_str()?.parse().ok()
}

pub fn load_kitti_poses<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<Pose<T>>, IngestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.into(),
        source,
    })?;
    parse_kitti_poses(&text)
}

/// Parses row-major 3×4 `[R | t]` lines. Blank lines are skipped; frame ids
/// count the pose lines from zero.
pub fn parse_kitti_poses<T: Scalar>(text: &str) -> Result<Vec<Pose<T>>, IngestError> {
    let mut poses = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let line = line_no + 1;
        if tokens.len() != 12 {
            return Err(IngestError::PoseTokenCount {
                line,
                found: tokens.len(),
            });
        }
        let mut values = [0f64; 12];
        for (v, tok) in values.iter_mut().zip(&tokens) {
            *v = tok.parse().map_err(|_| IngestError::PoseNumber {
                line,
                token: tok.to_string(),
            })?;
        }
        let at = |i: usize| T::lit(values[i]);
        let rotation = [
            [at(0), at(1), at(2)],
            [at(4), at(5), at(6)],
            [at(8), at(9), at(10)],
        ];
        let translation = [at(3), at(7), at(11)];
        let deviation = orthonormality_error(&rotation)
            .to_f64()
            .unwrap_or(f64::INFINITY);
        if !(deviation <= POSE_REJECT) {
            return Err(IngestError::NotOrthonormal { line, deviation });
        }
        if deviation > POSE_WARN {
            warn!("poses line {line}: rotation deviates from orthonormal by {deviation:.3e}");
        }
        poses.push(Pose {
            frame_id: poses.len() as u64,
            rotation,
            translation,
        });
    }
    Ok(poses)
}

/// Re-expresses a KITTI camera-axis pose (x right, y down, z forward) in
/// LiDAR axes (x forward, y left, z up), for both the body and the world
/// frame. The small camera-LiDAR mounting offset is ignored.
pub fn camera_to_lidar_axes<T: Scalar>(pose: &Pose<T>) -> Pose<T> {
    // cam = P · lidar
    let (o, l) = (T::zero(), T::one());
    let p = [[o, -l, o], [o, o, -l], [l, o, o]];
    let mut rotation = [[o; 3]; 3];
    for (i, row) in rotation.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            // (Pᵀ R P)[i][j]
            *v = (0..3)
                .flat_map(|a| (0..3).map(move |b| (a, b)))
                .fold(o, |acc, (a, b)| {
                    acc + p[a][i] * pose.rotation[a][b] * p[b][j]
                });
        }
    }
    let t = &pose.translation;
    let translation = [0, 1, 2].map(|i| (0..3).fold(o, |acc, a| acc + p[a][i] * t[a]));
    Pose {
        frame_id: pose.frame_id,
        rotation,
        translation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn camera_axes_convert_to_lidar_axes() {
        // camera turned left by 30° about its up axis (-y)
        let (s, c) = 30f64.to_radians().sin_cos();
        let cam = Pose {
            frame_id: 3,
            rotation: [[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]],
            translation: [-1.0, -2.0, 5.0],
        };
        let lidar = camera_to_lidar_axes(&cam);
        assert_eq!(lidar.translation, [5.0, 1.0, 2.0]);
        let expected = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        for (row, want) in lidar.rotation.iter().zip(expected) {
            for (v, w) in row.iter().zip(want) {
                assert!((v - w).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_quad_decodes_and_drops_intensity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("000007.bin");
        write_kitti_quads(&path, &[[1.0, 2.0, 3.0, 0.5]]).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 16);
        let cloud: PointCloud<f64> = load_kitti_scan(&path, 7).unwrap();
        assert_eq!(cloud.points, vec![[1.0, 2.0, 3.0]]);
        assert_eq!(frame_id_from_path(&path), Some(7));
    }

    #[test]
    fn empty_file_is_empty_cloud() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.bin");
        fs::write(&path, []).unwrap();
        let cloud: PointCloud<f32> = load_kitti_scan(&path, 0).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn seventeen_bytes_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        fs::write(&path, [0u8; 17]).unwrap();
        let err = load_kitti_scan::<f64>(&path, 0).unwrap_err();
        assert!(matches!(err, IngestError::ScanLength { bytes: 17, .. }));
        assert!(err.to_string().contains("17 bytes"));
    }

    #[test]
    fn nan_point_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.bin");
        write_kitti_quads(&path, &[[0.0, 0.0, 0.0, 0.0], [f32::NAN, 0.0, 0.0, 0.0]]).unwrap();
        let err = load_kitti_scan::<f64>(&path, 0).unwrap_err();
        assert!(matches!(err, IngestError::NonFinitePoint { index: 1, .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_kitti_scan::<f64>("/nonexistent/scan.bin", 0).unwrap_err();
        assert!(matches!(err, IngestError::Io { .. }));
    }

    #[test]
    fn identity_pose_line() {
        let poses: Vec<Pose<f64>> = parse_kitti_poses("1 0 0 0 0 1 0 0 0 0 1 0\n").unwrap();
        assert_eq!(poses, vec![Pose::identity(0)]);
    }

    #[test]
    fn frame_ids_follow_line_order_and_translation_is_last_column() {
        let text = "1 0 0 1 0 1 0 2 0 0 1 3\n\n1 0 0 4 0 1 0 5 0 0 1 6\n";
        let poses: Vec<Pose<f64>> = parse_kitti_poses(text).unwrap();
        assert_eq!(poses.len(), 2);
        assert_eq!(poses[1].frame_id, 1);
        assert_eq!(poses[0].translation, [1.0, 2.0, 3.0]);
        assert_eq!(poses[1].translation, [4.0, 5.0, 6.0]);
    }

    #[test]
    fn eleven_tokens_rejected() {
        let err = parse_kitti_poses::<f64>("1 0 0 0 0 1 0 0 0 0 1\n").unwrap_err();
        assert!(matches!(
            err,
            IngestError::PoseTokenCount { line: 1, found: 11 }
        ));
    }

    #[test]
    fn bad_number_rejected() {
        let err = parse_kitti_poses::<f64>("1 0 0 0 0 1 0 x 0 0 1 0\n").unwrap_err();
        assert!(matches!(err, IngestError::PoseNumber { .. }));
    }

    #[test]
    fn orthonormality_thresholds() {
        // 1e-2 off: warned but accepted
        assert!(parse_kitti_poses::<f64>("1.01 0 0 0 0 1 0 0 0 0 1 0").is_ok());
        let err = parse_kitti_poses::<f64>("2 0 0 0 0 1 0 0 0 0 1 0").unwrap_err();
        assert!(matches!(err, IngestError::NotOrthonormal { line: 1, .. }));
    }
}
