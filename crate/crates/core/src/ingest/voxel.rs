use std::collections::BTreeMap;

use super::PointCloud;
use crate::scalar::Scalar;

/// Replaces the points of every occupied voxel by their centroid.
///
/// The grid is anchored at the origin with cell index `floor(coord / voxel)`;
/// output is ordered by ascending `(ix, iy, iz)`. Points inside a cell are
/// summed in sorted order so the result does not depend on input order.
pub fn voxel_downsample<T: Scalar>(cloud: &PointCloud<T>, voxel: T) -> PointCloud<T> {
    assert!(voxel > T::zero(), "voxel size must be positive");
    let mut cells: BTreeMap<[i64; 3], Vec<[T; 3]>> = BTreeMap::new();
    for p in &cloud.points {
        cells.entry(cell_index(p, voxel)).or_default().push(*p);
    }
    let points = cells
        .into_values()
        .map(|mut members| {
            if members.len() == 1 {
                return members[0];
            }
            members.sort_by(|a, b| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.partial_cmp(y).unwrap())
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let n = T::from_count(members.len() as u32);
            let sum = members.iter().fold([T::zero(); 3], |acc, p| {
                [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2]]
            });
            [sum[0] / n, sum[1] / n, sum[2] / n]
        })
        .collect();
    PointCloud {
        frame_id: cloud.frame_id,
        points,
    }
}

pub(crate) fn cell_index<T: Scalar>(p: &[T; 3], voxel: T) -> [i64; 3] {
    p.map(|c| {
        (c / voxel)
            .floor()
            .to_i64()
            .expect("coordinate within voxel index range")
    })
}
