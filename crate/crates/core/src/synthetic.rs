//! Seeded synthetic data: ray-cast scans of a procedural street scene,
//! looping trajectories and grid-aligned clouds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::descriptor::{GridSpec, SolidDescriptor};
use crate::evaluation::yaw_rotation;
use crate::ingest::{PointCloud, Pose};
use crate::retrieval::DescriptorDatabase;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Spinning multi-beam sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarModel {
    pub beams: usize,
    pub azimuth_steps: usize,
    pub f_up: f64,
    pub f_down: f64,
    pub max_range: f64,
    /// Sensor height above the ground plane.
    pub height: f64,
}

impl LidarModel {
    /// 64 beams over -24.8°..+2° at 0.4° azimuth steps, mounted at 1.73 m.
    pub fn hdl64() -> Self {
        Self {
            beams: 64,
            azimuth_steps: 900,
            f_up: 2.0,
            f_down: -24.8,
            max_range: 80.0,
            height: 1.73,
        }
    }

    /// Same geometry with fewer azimuth steps, for fast tests.
    pub fn coarse() -> Self {
        Self {
            azimuth_steps: 360,
            ..Self::hdl64()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Block {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
struct Pole {
    center: [f64; 2],
    radius: f64,
    height: f64,
}

/// Ground plane at z = 0 with buildings and poles.
#[derive(Debug, Clone)]
pub struct World {
    blocks: Vec<Block>,
    poles: Vec<Pole>,
}

impl World {
    /// Scatters structures over the bounding box of `keep_clear` (plus a
    /// margin), leaving `clearance` meters free around every listed point.
    pub fn generate(seed: u64, keep_clear: &[[f64; 2]], clearance: f64) -> Self {
        let mut rng = rng(seed);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in keep_clear {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        if keep_clear.is_empty() {
            (lo, hi) = ([0.0; 2], [0.0; 2]);
        }
        let margin = 60.0;
        let area = (hi[0] - lo[0] + 2.0 * margin) * (hi[1] - lo[1] + 2.0 * margin);
        let clear_of = |x: f64, y: f64, r: f64| {
            keep_clear
                .iter()
                .all(|p| (p[0] - x).hypot(p[1] - y) > clearance + r)
        };
        let mut blocks = Vec::new();
        for _ in 0..(area / 900.0) as usize {
            let (sx, sy): (f64, f64) = (rng.gen_range(4.0..18.0), rng.gen_range(4.0..18.0));
            let x = rng.gen_range(lo[0] - margin..hi[0] + margin);
            let y = rng.gen_range(lo[1] - margin..hi[1] + margin);
            if clear_of(x, y, 0.5 * sx.hypot(sy)) {
                let h = rng.gen_range(3.0..16.0);
                blocks.push(Block {
                    min: [x - sx / 2.0, y - sy / 2.0, 0.0],
                    max: [x + sx / 2.0, y + sy / 2.0, h],
                });
            }
        }
        let mut poles = Vec::new();
        for _ in 0..(area / 150.0) as usize {
            let x = rng.gen_range(lo[0] - margin..hi[0] + margin);
            let y = rng.gen_range(lo[1] - margin..hi[1] + margin);
            let radius = rng.gen_range(0.15..0.8);
            if clear_of(x, y, radius) {
                poles.push(Pole {
                    center: [x, y],
                    radius,
                    height: rng.gen_range(2.5..9.0),
                });
            }
        }
        Self { blocks, poles }
    }

    /// Ray-casts a scan from `position` (x, y on the ground) with the sensor
    /// x axis at `yaw_deg`. Points are returned in the sensor frame.
    pub fn scan(
        &self,
        frame_id: u64,
        position: [f64; 2],
        yaw_deg: f64,
        lidar: &LidarModel,
    ) -> PointCloud<f64> {
        let origin = [position[0], position[1], lidar.height];
        let reach = lidar.max_range;
        let near = |cx: f64, cy: f64, r: f64| (cx - origin[0]).hypot(cy - origin[1]) < reach + r;
        let blocks: Vec<&Block> = self
            .blocks
            .iter()
            .filter(|b| {
                let c = [(b.min[0] + b.max[0]) / 2.0, (b.min[1] + b.max[1]) / 2.0];
                near(c[0], c[1], (b.max[0] - b.min[0]).hypot(b.max[1] - b.min[1]))
            })
            .collect();
        let poles: Vec<&Pole> = self
            .poles
            .iter()
            .filter(|p| near(p.center[0], p.center[1], p.radius))
            .collect();

        let rot = yaw_rotation(yaw_deg);
        let mut points = Vec::with_capacity(lidar.beams * lidar.azimuth_steps);
        for b in 0..lidar.beams {
            let frac = (b as f64 + 0.5) / lidar.beams as f64;
            let elev = (lidar.f_down + frac * (lidar.f_up - lidar.f_down)).to_radians();
            for a in 0..lidar.azimuth_steps {
                let az = ((a as f64 + 0.25) * 360.0 / lidar.azimuth_steps as f64).to_radians();
                let local = [elev.cos() * az.cos(), elev.cos() * az.sin(), elev.sin()];
                let dir = [
                    rot[0][0] * local[0] + rot[0][1] * local[1],
                    rot[1][0] * local[0] + rot[1][1] * local[1],
                    local[2],
                ];
                let mut t_hit = reach;
                if dir[2] < 0.0 {
                    t_hit = t_hit.min(-origin[2] / dir[2]);
                }
                for blk in &blocks {
                    if let Some(t) = ray_box(&origin, &dir, blk) {
                        t_hit = t_hit.min(t);
                    }
                }
                for pole in &poles {
                    if let Some(t) = ray_pole(&origin, &dir, pole) {
                        t_hit = t_hit.min(t);
                    }
                }
                if t_hit < reach {
                    points.push(local.map(|c| c * t_hit));
                }
            }
        }
        PointCloud::new(frame_id, points)
    }

    /// Scans at every pose of a trajectory, using the pose yaw.
    pub fn scans_along(&self, poses: &[Pose<f64>], lidar: &LidarModel) -> Vec<PointCloud<f64>> {
        poses
            .iter()
            .map(|p| {
                let yaw = p.rotation[1][0].atan2(p.rotation[0][0]).to_degrees();
                self.scan(p.frame_id, [p.translation[0], p.translation[1]], yaw, lidar)
            })
            .collect()
    }
}

fn ray_box(o: &[f64; 3], d: &[f64; 3], b: &Block) -> Option<f64> {
    let (mut t0, mut t1) = (1e-6f64, f64::INFINITY);
    for a in 0..3 {
        if d[a].abs() < 1e-12 {
            if o[a] < b.min[a] || o[a] > b.max[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[a];
        let (mut near, mut far) = ((b.min[a] - o[a]) * inv, (b.max[a] - o[a]) * inv);
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return None;
        }
    }
    Some(t0)
}

fn ray_pole(o: &[f64; 3], d: &[f64; 3], p: &Pole) -> Option<f64> {
    let (ox, oy) = (o[0] - p.center[0], o[1] - p.center[1]);
    let a = d[0] * d[0] + d[1] * d[1];
    if a < 1e-12 {
        return None;
    }
    let b = ox * d[0] + oy * d[1];
    let c = ox * ox + oy * oy - p.radius * p.radius;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / a;
    let z = o[2] + t * d[2];
    (t > 1e-6 && (0.0..=p.height).contains(&z)).then_some(t)
}

/// Figure-eight (lemniscate of Gerono) of half-width `scale` meters, sampled
/// at `per_lap` poses and driven `laps` times over identical poses. Yaw
/// follows the direction of travel.
pub fn figure_eight(per_lap: usize, laps: usize, scale: f64) -> Vec<Pose<f64>> {
    let lap: Vec<Pose<f64>> = (0..per_lap)
        .map(|i| {
            let t = i as f64 / per_lap as f64 * std::f64::consts::TAU;
            let (x, y) = (scale * t.sin(), scale * t.sin() * t.cos());
            let (dx, dy) = (t.cos(), (2.0 * t).cos());
            let mut pose = Pose::from_translation(i as u64, [x, y, 0.0]);
            pose.rotation = yaw_rotation(dy.atan2(dx).to_degrees());
            pose
        })
        .collect();
    (0..laps)
        .flat_map(|l| {
            lap.iter().map(move |p| Pose {
                frame_id: (l * per_lap) as u64 + p.frame_id,
                ..*p
            })
        })
        .collect()
}

/// Straight drive along +x with `step` meters between poses.
pub fn straight_line(n: usize, step: f64) -> Vec<Pose<f64>> {
    (0..n)
        .map(|i| Pose::from_translation(i as u64, [i as f64 * step, 0.0, 0.0]))
        .collect()
}

/// Uniform random points in a box around the sensor.
pub fn random_cloud(frame_id: u64, n: usize, seed: u64) -> PointCloud<f64> {
    let mut r = rng(seed);
    let points = (0..n)
        .map(|_| {
            [
                r.gen_range(-70.0..70.0),
                r.gen_range(-70.0..70.0),
                r.gen_range(-6.0..1.5),
            ]
        })
        .collect();
    PointCloud::new(frame_id, points)
}

/// A quick single scan of a random scene around the origin.
pub fn scene_scan(frame_id: u64, azimuth_steps: usize, seed: u64) -> PointCloud<f64> {
    let world = World::generate(seed, &[[0.0, 0.0]], 3.0);
    let lidar = LidarModel {
        azimuth_steps,
        beams: 32,
        ..LidarModel::hdl64()
    };
    world.scan(frame_id, [0.0, 0.0], 0.0, &lidar)
}

/// `n` random points placed exactly on bin centers of `grid` (range and
/// elevation bins 2.. so no point sits on the origin or a discard edge).
pub fn bin_center_cloud(
    frame_id: u64,
    n: usize,
    grid: &GridSpec<f64>,
    seed: u64,
) -> PointCloud<f64> {
    let mut r = rng(seed);
    let points = (0..n)
        .map(|_| {
            let i = r.gen_range(2..=grid.n_r);
            let j = r.gen_range(1..=grid.n_a);
            let k = r.gen_range(2..=grid.n_e);
            bin_center_point(grid, i, j, k)
        })
        .collect();
    PointCloud::new(frame_id, points)
}

/// Sensor-frame point at the center of one-based bin `(i, j, k)`.
pub fn bin_center_point(grid: &GridSpec<f64>, i: usize, j: usize, k: usize) -> [f64; 3] {
    let r = (i - 1) as f64 * grid.l_max / grid.n_r as f64;
    let theta = ((j - 1) as f64 * 360.0 / grid.n_a as f64).to_radians();
    let phi =
        (grid.f_down + (k - 1) as f64 * (grid.f_up - grid.f_down) / grid.n_e as f64).to_radians();
    [r * theta.cos(), r * theta.sin(), r * phi.tan()]
}

/// A database of `size` records whose descriptors walk the polyline through
/// `anchors` with small multiplicative noise, mimicking a long drive past the
/// anchor places. Frame ids are `0..size`.
pub fn interpolated_database(
    anchors: &[SolidDescriptor<f64>],
    grid: GridSpec<f64>,
    size: usize,
    seed: u64,
) -> DescriptorDatabase<f64> {
    assert!(anchors.len() >= 2, "need at least two anchors");
    let mut r = rng(seed);
    let mut db = DescriptorDatabase::new(grid);
    let segments = (anchors.len() - 1) as f64;
    for id in 0..size {
        let s = id as f64 / size.max(2).saturating_sub(1) as f64 * segments;
        let k = (s.floor() as usize).min(anchors.len() - 2);
        let t = s - k as f64;
        let (a, b) = (&anchors[k], &anchors[k + 1]);
        let mut mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter()
                .zip(y)
                .map(|(p, q)| ((1.0 - t) * p + t * q) * r.gen_range(0.97..1.03))
                .collect()
        };
        let r_solid = mix(&a.r_solid, &b.r_solid);
        let a_solid = mix(&a.a_solid, &b.a_solid);
        db.push(
            SolidDescriptor {
                frame_id: id as u64,
                r_solid,
                a_solid,
            },
            None,
        )
        .expect("anchors share the grid");
    }
    db
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{bin_indices, to_spherical, BinIndex};

    #[test]
    fn bin_center_points_land_in_their_bins() {
        let g = GridSpec::<f64>::hdl64();
        for (i, j, k) in [(2, 1, 2), (40, 60, 64), (21, 31, 33), (2, 60, 2)] {
            let sp = to_spherical(bin_center_point(&g, i, j, k));
            assert_eq!(bin_indices(&sp, &g), Some(BinIndex { i, j, k }));
        }
    }

    #[test]
    fn scan_hits_ground_and_structures() {
        let scan = scene_scan(0, 180, 1);
        assert!(scan.len() > 32 * 180 / 2);
        // ground returns sit about one sensor height below the origin
        assert!(scan.points.iter().any(|p| (p[2] + 1.73).abs() < 1e-6));
        assert!(scan.points.iter().any(|p| p[2] > -1.0));
        assert!(scan.points.iter().all(|p| p[0].hypot(p[1]) < 80.0));
    }

    #[test]
    fn same_pose_gives_identical_scan() {
        let poses = figure_eight(40, 2, 60.0);
        assert_eq!(poses.len(), 80);
        assert_eq!(poses[45].translation, poses[5].translation);
        let xy: Vec<[f64; 2]> = poses
            .iter()
            .map(|p| [p.translation[0], p.translation[1]])
            .collect();
        let world = World::generate(3, &xy, 4.0);
        let lidar = LidarModel {
            azimuth_steps: 90,
            ..LidarModel::coarse()
        };
        let scans = world.scans_along(&[poses[5], poses[45]], &lidar);
        assert_eq!(scans[0].points, scans[1].points);
    }

    #[test]
    fn interpolated_database_has_requested_size() {
        let grid = GridSpec::<f64>::hdl64();
        let anchors: Vec<SolidDescriptor<f64>> = (0..3)
            .map(|i| SolidDescriptor {
                frame_id: i,
                r_solid: vec![i as f64 + 1.0; 40],
                a_solid: vec![1.0; 60],
            })
            .collect();
        let db = interpolated_database(&anchors, grid, 101, 0);
        assert_eq!(db.len(), 101);
        let last = &db.records()[100].descriptor.r_solid;
        assert!(last.iter().all(|v| (v - 3.0).abs() <= 0.09 + 1e-12));
    }
}
