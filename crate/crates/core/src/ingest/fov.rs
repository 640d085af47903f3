//! Azimuth keep-masks used to simulate a restricted or occluded field of view.

use std::fmt;
use std::str::FromStr;

use super::PointCloud;
use crate::error::IngestError;
use crate::scalar::Scalar;

const FULL_CIRCLE: f64 = 360.0;

/// Sorted, disjoint half-open azimuth intervals `[start, end)` in degrees on
/// `[0, 360)`. Azimuth is `atan2(y, x)` mapped onto `[0, 360)`, matching the
/// descriptor's convention.
#[derive(Debug, Clone, PartialEq)]
pub struct FovMask {
    intervals: Vec<(f64, f64)>,
}

impl FovMask {
    /// Builds a mask from arbitrary intervals; touching intervals are merged.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self, IngestError> {
        let text = format_intervals(&intervals);
        let invalid = |reason: String| IngestError::FovMask {
            text: text.clone(),
            reason,
        };
        for &(start, end) in &intervals {
            if !(start.is_finite() && end.is_finite()) {
                return Err(invalid("non-finite bound".into()));
            }
            if !(0.0..FULL_CIRCLE).contains(&start) || end > FULL_CIRCLE || end <= start {
                return Err(invalid(format!(
                    "interval {start}-{end} must satisfy 0 <= start < end <= 360"
                )));
            }
        }
        if intervals.is_empty() {
            return Err(invalid("mask keeps nothing".into()));
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (start, end) in intervals {
            match merged.last_mut() {
                Some(last) if start < last.1 => {
                    return Err(IngestError::FovMask {
                        text: format!("{last:?} and ({start}, {end})"),
                        reason: "intervals overlap".into(),
                    })
                }
                Some(last) if start == last.1 => last.1 = end,
                _ => merged.push((start, end)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn full() -> Self {
        Self {
            intervals: vec![(0.0, FULL_CIRCLE)],
        }
    }

    /// Forward-facing wedge of `width_deg` centered on azimuth 0.
    pub fn forward(width_deg: f64) -> Result<Self, IngestError> {
        if !(width_deg > 0.0 && width_deg <= FULL_CIRCLE) {
            return Err(IngestError::FovMask {
                text: format!("forward {width_deg}"),
                reason: "width must be in (0, 360]".into(),
            });
        }
        if width_deg == FULL_CIRCLE {
            return Ok(Self::full());
        }
        let half = width_deg / 2.0;
        Self::new(vec![(FULL_CIRCLE - half, FULL_CIRCLE), (0.0, half)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn kept_degrees(&self) -> f64 {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    pub fn contains(&self, azimuth_deg: f64) -> bool {
        self.intervals
            .iter()
            .any(|&(s, e)| azimuth_deg >= s && azimuth_deg < e)
    }

    /// The dropped region, or `None` when the mask keeps the full circle.
    pub fn complement(&self) -> Option<Self> {
        let mut out = Vec::new();
        let mut cursor = 0.0;
        for &(s, e) in &self.intervals {
            if s > cursor {
                out.push((cursor, s));
            }
            cursor = e;
        }
        if cursor < FULL_CIRCLE {
            out.push((cursor, FULL_CIRCLE));
        }
        if out.is_empty() {
            None
        } else {
            Some(Self { intervals: out })
        }
    }
}

fn format_intervals(v: &[(f64, f64)]) -> String {
    v.iter()
        .map(|(s, e)| format!("{s}-{e}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for FovMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_intervals(&self.intervals))
    }
}

impl FromStr for FovMask {
    type Err = IngestError;

    /// Parses `"300-360,0-60"`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| IngestError::FovMask {
            text: text.into(),
            reason: reason.into(),
        };
        let mut intervals = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            let (a, b) = part.split_once('-').ok_or_else(|| bad("expected A-B"))?;
            let start: f64 = a.trim().parse().map_err(|_| bad("bad start angle"))?;
            let end: f64 = b.trim().parse().map_err(|_| bad("bad end angle"))?;
            intervals.push((start, end));
        }
        Self::new(intervals).map_err(|e| match e {
            IngestError::FovMask { reason, .. } => IngestError::FovMask {
                text: text.into(),
                reason,
            },
            other => other,
        })
    }
}

/// Keeps the points whose azimuth falls inside the mask, preserving order.
pub fn clip_fov<T: Scalar>(cloud: &PointCloud<T>, mask: &FovMask) -> PointCloud<T> {
    let points = cloud
        .points
        .iter()
        .copied()
        .filter(|&[x, y, _]| mask.contains(T::azimuth_deg(x, y).to_f64().expect("finite azimuth")))
        .collect();
    PointCloud {
        frame_id: cloud.frame_id,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at_azimuth(deg: f64) -> [f64; 3] {
        let rad = deg.to_radians();
        [10.0 * rad.cos(), 10.0 * rad.sin(), 0.5]
    }

    #[test]
    fn parse_and_display() {
        let mask: FovMask = "300-360, 0-60".parse().unwrap();
        assert_eq!(mask.intervals(), &[(0.0, 60.0), (300.0, 360.0)]);
        assert_eq!(mask.to_string(), "0-60,300-360");
        assert_eq!(mask.kept_degrees(), 120.0);
        assert_eq!(mask.to_string().parse::<FovMask>().unwrap(), mask);
    }

    #[test]
    fn touching_intervals_merge() {
        let mask: FovMask = "0-30,30-60".parse().unwrap();
        assert_eq!(mask.intervals(), &[(0.0, 60.0)]);
    }

    #[test]
    fn invalid_masks() {
        for text in [
            "",
            "10",
            "50-40",
            "0-361",
            "-5-10",
            "0-60,30-90",
            "a-b",
            "10-10",
        ] {
            assert!(text.parse::<FovMask>().is_err(), "{text:?} accepted");
        }
    }

    #[test]
    fn full_mask_is_identity() {
        let cloud = PointCloud::new(3, (0..36).map(|i| at_azimuth(i as f64 * 10.0)).collect());
        assert_eq!(clip_fov(&cloud, &FovMask::full()), cloud);
    }

    #[test]
    fn only_ten_degree_point_survives() {
        let cloud = PointCloud::new(
            0,
            vec![at_azimuth(10.0), at_azimuth(100.0), at_azimuth(200.0)],
        );
        let mask: FovMask = "0-60".parse().unwrap();
        let kept = clip_fov(&cloud, &mask);
        assert_eq!(kept.points, vec![at_azimuth(10.0)]);
    }

    #[test]
    fn forward_wedge_straddling_zero() {
        // ring of 36 points at 10 degree spacing, offset by 5 degrees so no
        // point sits on a wedge boundary
        let azimuths: Vec<f64> = (0..36).map(|i| 5.0 + 10.0 * i as f64).collect();
        let cloud = PointCloud::new(0, azimuths.iter().map(|&a| at_azimuth(a)).collect());
        let mask: FovMask = "330-360,0-30".parse().unwrap();
        assert_eq!(mask, FovMask::forward(60.0).unwrap());
        let kept = clip_fov(&cloud, &mask);
        let oracle: Vec<[f64; 3]> = azimuths
            .iter()
            .filter(|&&a| !(30.0..330.0).contains(&a))
            .map(|&a| at_azimuth(a))
            .collect();
        assert_eq!(oracle.len(), 6);
        assert_eq!(kept.points, oracle);
    }

    #[test]
    fn boundary_points_follow_half_open_rule() {
        let cloud = PointCloud::new(0, vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]);
        let kept = clip_fov(&cloud, &"0-90".parse().unwrap());
        assert_eq!(kept.points, vec![[1.0, 0.0, 0.0]]);
    }

    #[test]
    fn complement_of_full_is_none() {
        assert!(FovMask::full().complement().is_none());
        let mask: FovMask = "10-20,50-60".parse().unwrap();
        assert_eq!(mask.complement().unwrap().to_string(), "0-10,20-50,60-360");
    }

    fn mask_strategy() -> impl Strategy<Value = FovMask> {
        prop::collection::btree_set(1u32..359, 1..6).prop_filter_map("need pairs", |cuts| {
            let cuts: Vec<f64> = cuts.into_iter().map(f64::from).collect();
            let pairs: Vec<(f64, f64)> = cuts.chunks_exact(2).map(|c| (c[0], c[1])).collect();
            FovMask::new(pairs).ok()
        })
    }

    proptest! {
        #[test]
        fn clipping_is_idempotent_and_complement_partitions(
            mask in mask_strategy(),
            pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -3.0f64..3.0), 0..200),
        ) {
            let cloud = PointCloud::new(0, pts.into_iter().map(|(x, y, z)| [x, y, z]).collect());
            let once = clip_fov(&cloud, &mask);
            prop_assert_eq!(clip_fov(&once, &mask), once.clone());
            let dropped = clip_fov(&cloud, &mask.complement().unwrap());
            prop_assert_eq!(once.len() + dropped.len(), cloud.len());
        }
    }
}
