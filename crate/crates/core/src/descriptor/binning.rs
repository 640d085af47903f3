use super::GridSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint<T> {
    /// Horizontal range in meters.
    pub r: T,
    /// Azimuth in degrees on `[0, 360)`.
    pub theta: T,
    /// Elevation in degrees.
    pub phi: T,
}

/// Horizontal range, azimuth and elevation of a sensor-frame point.
///
/// Elevation uses `atan2(z, r)`, which agrees with `atan(z / r)` for `r > 0`
/// and stays defined straight up or down.
pub fn to_spherical<T: Scalar>([x, y, z]: [T; 3]) -> SphericalPoint<T> {
    let r = x.hypot(y);
    SphericalPoint {
        r,
        theta: T::azimuth_deg(x, y),
        phi: z.atan2(r).to_degrees(),
    }
}

/// One-based `(range, azimuth, elevation)` bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

/// Rounded bin indices, or `None` when the point is out of range or outside
/// the vertical field of view.
///
/// Rounding is half away from zero. Range and elevation indices that round
/// past the last bin are clamped; the azimuth index that rounds to `n_a + 1`
/// wraps to 1.
pub fn bin_indices<T: Scalar>(sp: &SphericalPoint<T>, grid: &GridSpec<T>) -> Option<BinIndex> {
    if !(sp.r < grid.l_max) || sp.phi < grid.f_down || !(sp.phi < grid.f_up) {
        return None;
    }
    let one = T::one();
    let n_r = T::from_usize(grid.n_r).unwrap();
    let n_a = T::from_usize(grid.n_a).unwrap();
    let n_e = T::from_usize(grid.n_e).unwrap();

    let i = to_index((n_r * sp.r / grid.l_max + one).round()).clamp(1, grid.n_r);
    let mut j = to_index((n_a * sp.theta / T::lit(360.0) + one).round());
    if j > grid.n_a {
        j = 1;
    }
    let k = to_index((n_e * (sp.phi - grid.f_down) / (grid.f_up - grid.f_down) + one).round())
        .clamp(1, grid.n_e);
    Some(BinIndex { i, j, k })
}

fn to_index<T: Scalar>(v: T) -> usize {
    v.to_usize().unwrap_or(1).max(1)
}
