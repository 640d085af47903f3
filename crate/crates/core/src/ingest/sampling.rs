use super::Pose;
use crate::scalar::Scalar;

/// Greedy distance sampling: keeps the first frame, then every frame at least
/// `spacing` meters from the last kept one.
pub fn sample_by_distance<T: Scalar>(poses: &[Pose<T>], spacing: T) -> Vec<u64> {
    assert!(spacing > T::zero(), "spacing must be positive");
    let Some(first) = poses.first() else {
        return Vec::new();
    };
    let mut kept = vec![first.frame_id];
    let mut anchor = first;
    for pose in &poses[1..] {
        if pose.distance_to(anchor) >= spacing {
            kept.push(pose.frame_id);
            anchor = pose;
        }
    }
    kept
}
