//! Descriptor storage, nearest-place search and heading estimation.

mod database;
mod heading;
mod kdtree;
mod persist;

pub use database::{DescriptorDatabase, Record};
pub use heading::{estimate_heading, shift};
pub use kdtree::KdTree;
pub use persist::{load_db, read_db, save_db, write_db, DB_MAGIC, DB_VERSION};

use std::fmt;
use std::str::FromStr;

use crate::error::RetrievalError;
use crate::scalar::Scalar;

/// Cosine distance with a flag set when either vector has zero norm (the
/// distance is then reported as exactly 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineDistance<T> {
    pub value: T,
    pub zero_norm: bool,
}

/// `1 - a·b / (‖a‖‖b‖)`, clamped to `[0, 2]`.
pub fn cosine_distance<T: Scalar>(a: &[T], b: &[T]) -> Result<CosineDistance<T>, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(cosine_from_parts(dot(a, b), dot(a, a), dot(b, b)))
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Shared by the public function and the database scan so both report
/// bit-identical distances. `sqrt(n·n) == n` exactly, so `d(a, a) == 0`.
pub(crate) fn cosine_from_parts<T: Scalar>(ab: T, aa: T, bb: T) -> CosineDistance<T> {
    if aa == T::zero() || bb == T::zero() {
        return CosineDistance {
            value: T::one(),
            zero_norm: true,
        };
    }
    let cos = ab / (aa * bb).sqrt();
    let value = (T::one() - cos).max(T::zero()).min(T::lit(2.0));
    CosineDistance {
        value,
        zero_norm: false,
    }
}

/// Which database records a query may match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidatePool {
    /// Single session: records with `frame_id <= query_id - exclude_recent`.
    Preceding { exclude_recent: u64 },
    /// Multi session: every record of the target database.
    All,
}

impl CandidatePool {
    /// Largest admissible frame id, or `None` when nothing is admissible.
    pub fn max_frame_id(&self, query_id: u64) -> Option<u64> {
        match *self {
            CandidatePool::Preceding { exclude_recent } => query_id.checked_sub(exclude_recent),
            CandidatePool::All => Some(u64::MAX),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    BruteForce,
    KdTree,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bf" => Ok(Backend::BruteForce),
            "kd" => Ok(Backend::KdTree),
            other => Err(format!("unknown backend {other:?}, expected bf or kd")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::BruteForce => "bf",
            Backend::KdTree => "kd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match<T> {
    pub query_id: u64,
    pub candidate_id: u64,
    /// Cosine distance between the raw range descriptors.
    pub distance: T,
    /// Set when the distance comes from a zero-norm descriptor.
    pub zero_norm: bool,
    /// Azimuth shift `n*` in `[0, n_a)`.
    pub heading_shift: usize,
    /// `n* · 360 / n_a`: yaw of the query frame relative to the candidate frame.
    pub heading_deg: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoCandidate {
    /// The exclusion window leaves nothing to search.
    EmptyPool,
    /// The kd-tree cannot rank a query whose range descriptor is all zero.
    ZeroNormQuery,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchOutcome<T> {
    Found(Match<T>),
    NoCandidate(NoCandidate),
}

impl<T> SearchOutcome<T> {
    pub fn matched(&self) -> Option<&Match<T>> {
        match self {
            SearchOutcome::Found(m) => Some(m),
            SearchOutcome::NoCandidate(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(a: &[f64], b: &[f64]) -> CosineDistance<f64> {
        cosine_distance(a, b).unwrap()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(d(&[2.0, 4.0], &[2.0, 4.0]).value, 0.0);
        assert_eq!(d(&[1.0, 0.0], &[0.0, 1.0]).value, 1.0);
        // 1 - 10/14 from a hand dot product
        assert!((d(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).value - 2.0 / 7.0).abs() < 1e-15);
        assert_eq!(d(&[1.0, 0.0], &[-1.0, 0.0]).value, 2.0);
    }

    #[test]
    fn zero_norm_is_flagged() {
        let z = d(&[0.0, 0.0], &[1.0, 2.0]);
        assert_eq!(
            z,
            CosineDistance {
                value: 1.0,
                zero_norm: true
            }
        );
        assert!(!d(&[1.0, 0.0], &[1.0, 2.0]).zero_norm);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            cosine_distance(&[1.0f64], &[1.0, 2.0]),
            Err(RetrievalError::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn pool_bounds() {
        let p = CandidatePool::Preceding {
            exclude_recent: 100,
        };
        assert_eq!(p.max_frame_id(50), None);
        assert_eq!(p.max_frame_id(150), Some(50));
        assert_eq!(CandidatePool::All.max_frame_id(0), Some(u64::MAX));
        assert_eq!("kd".parse::<Backend>().unwrap(), Backend::KdTree);
        assert!("x".parse::<Backend>().is_err());
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..50).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..100.0, n),
                prop::collection::vec(0.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn scale_invariant_symmetric_bounded(
            (a, b) in vec_pair(),
            lambda in 1e-3f64..1e3,
            mu in 1e-3f64..1e3,
        ) {
            let base = d(&a, &b);
            prop_assume!(!base.zero_norm);
            let la: Vec<f64> = a.iter().map(|v| v * lambda).collect();
            let mb: Vec<f64> = b.iter().map(|v| v * mu).collect();
            prop_assert!((d(&la, &mb).value - base.value).abs() < 1e-12);
            prop_assert_eq!(d(&b, &a).value, base.value);
            prop_assert!((0.0..=2.0).contains(&base.value));
            prop_assert_eq!(d(&a, &a).value, 0.0);
        }
    }
}
