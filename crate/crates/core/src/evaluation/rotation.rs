use crate::error::EvalError;
use crate::ingest::{orthonormality_error, Pose};
use crate::scalar::Scalar;

const ORTHONORMAL_TOL: f64 = 1e-3;

pub type Rotation<T> = [[T; 3]; 3];

/// Rotation about +z by `deg`.
pub fn yaw_rotation<T: Scalar>(deg: T) -> Rotation<T> {
    let (s, c) = deg.to_radians().sin_cos();
    let (o, l) = (T::zero(), T::one());
    [[c, -s, o], [s, c, o], [o, o, l]]
}

/// Geodesic angle in degrees between an estimated and a ground-truth rotation,
/// `arccos((tr(R̂ᵀR) − 1) / 2)`.
///
/// Evaluated as `atan2` of the skew and trace parts of `R̂ᵀR`, which is the
/// same angle but keeps full precision near 0° and 180°.
pub fn rotation_error<T: Scalar>(r_est: &Rotation<T>, r_gt: &Rotation<T>) -> Result<T, EvalError> {
    for r in [r_est, r_gt] {
        let deviation = orthonormality_error(r).to_f64().unwrap_or(f64::INFINITY);
        if !(deviation <= ORTHONORMAL_TOL) {
            return Err(EvalError::NotOrthonormal { deviation });
        }
    }
    // m = r_estᵀ · r_gt
    let mut m = [[T::zero(); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).fold(T::zero(), |acc, k| acc + r_est[k][i] * r_gt[k][j]);
        }
    }
    let two = T::lit(2.0);
    let cos = ((m[0][0] + m[1][1] + m[2][2] - T::one()) / two)
        .max(-T::one())
        .min(T::one());
    let sx = m[2][1] - m[1][2];
    let sy = m[0][2] - m[2][0];
    let sz = m[1][0] - m[0][1];
    let sin = ((sx * sx + sy * sy + sz * sz).sqrt() / two).min(T::one());
    Ok(sin.atan2(cos).to_degrees())
}

/// Rotation of the query frame expressed in the candidate frame, `R_cᵀ R_q`.
/// This is what a heading estimate approximates.
pub fn relative_rotation<T: Scalar>(candidate: &Pose<T>, query: &Pose<T>) -> Rotation<T> {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).fold(T::zero(), |acc, k| {
                acc + candidate.rotation[k][i] * query.rotation[k][j]
            });
        }
    }
    out
}

/// Time to ship `payload_bytes` over a link of `bandwidth` bytes per second.
pub fn communication_time(payload_bytes: u64, bandwidth: f64) -> Result<f64, EvalError> {
    if !(bandwidth > 0.0) {
        return Err(EvalError::NonPositiveBandwidth);
    }
    Ok(payload_bytes as f64 / bandwidth)
}
