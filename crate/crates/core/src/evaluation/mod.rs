//! Ground truth, retrieval scoring, rotation error, communication time and
//! throughput measurement.

mod bench;
mod gt;
mod metrics;
mod output;
mod rotation;

pub use bench::{bench_pipeline, Throughput};
pub use gt::{build_gt, GtLoopTable, Located, SessionMode};
pub use metrics::{score_queries, Confusion, QueryResult, Scores, SweepPoint};
pub use output::{provenance, write_matches_csv, write_pr_csv, write_roc_csv, EvalReport};
pub use rotation::{communication_time, relative_rotation, rotation_error, yaw_rotation, Rotation};

use rayon::prelude::*;

use crate::error::RetrievalError;
use crate::ingest::Pose;
use crate::retrieval::{Backend, CandidatePool, DescriptorDatabase, NoCandidate, SearchOutcome};
use crate::scalar::Scalar;

/// Top-1 results of a retrieval pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval<T> {
    /// One entry per scored query, in database order.
    pub results: Vec<QueryResult<T>>,
    /// Queries left out because nothing was admissible for them (inside the
    /// exclusion window). They cannot have a ground-truth loop either.
    pub unscored: usize,
}

/// Searches `target` with every record of `queries`, in parallel on the
/// current rayon pool. Results do not depend on the thread count.
pub fn retrieve_all<T: Scalar>(
    queries: &DescriptorDatabase<T>,
    target: &DescriptorDatabase<T>,
    backend: Backend,
    pool: CandidatePool,
) -> Result<Retrieval<T>, RetrievalError> {
    let outcomes: Vec<(u64, SearchOutcome<T>)> = queries
        .records()
        .par_iter()
        .map(|r| Ok((r.frame_id(), target.search(backend, &r.descriptor, pool)?)))
        .collect::<Result<_, RetrievalError>>()?;
    let results: Vec<QueryResult<T>> = outcomes
        .iter()
        .filter(|(_, o)| !matches!(o, SearchOutcome::NoCandidate(NoCandidate::EmptyPool)))
        .map(|(id, o)| QueryResult {
            query_id: *id,
            matched: o.matched().copied(),
        })
        .collect();
    Ok(Retrieval {
        unscored: outcomes.len() - results.len(),
        results,
    })
}

/// Rotation error in degrees of each true-positive match, comparing the pure
/// yaw heading estimate with the relative ground-truth rotation. Poses must
/// use z-up sensor axes and be sorted by frame id; matches whose poses are
/// missing are skipped.
pub fn heading_errors<T: Scalar>(
    results: &[QueryResult<T>],
    gt: &GtLoopTable,
    query_poses: &[Pose<T>],
    candidate_poses: &[Pose<T>],
) -> Vec<T> {
    let find = |poses: &'_ [Pose<T>], id: u64| {
        poses
            .binary_search_by_key(&id, |p| p.frame_id)
            .ok()
            .map(|i| poses[i])
    };
    results
        .iter()
        .filter_map(|r| r.matched.as_ref())
        .filter(|m| gt.is_loop(m.query_id, m.candidate_id).unwrap_or(false))
        .filter_map(|m| {
            let rel = relative_rotation(
                &find(candidate_poses, m.candidate_id)?,
                &find(query_poses, m.query_id)?,
            );
            rotation_error(&yaw_rotation(m.heading_deg), &rel).ok()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{GridSpec, SolidDescriptor};
    use crate::retrieval::Match;

    #[test]
    fn retrieve_all_drops_queries_with_empty_pool() {
        let grid = GridSpec {
            n_r: 2,
            n_a: 3,
            n_e: 1,
            l_max: 10.0,
            f_up: 2.0,
            f_down: -2.0,
        };
        let mut db = DescriptorDatabase::new(grid);
        for (id, r) in [
            (0u64, [1.0, 0.0]),
            (1, [0.0, 1.0]),
            (2, [1.0, 0.1]),
            (3, [0.1, 1.0]),
        ] {
            let d = SolidDescriptor {
                frame_id: id,
                r_solid: r.to_vec(),
                a_solid: vec![1.0, 2.0, 3.0],
            };
            db.push(d, None).unwrap();
        }
        db.build_index();
        let pool = CandidatePool::Preceding { exclude_recent: 2 };
        let bf = retrieve_all(&db, &db, Backend::BruteForce, pool).unwrap();
        assert_eq!(bf.unscored, 2);
        let pairs: Vec<(u64, u64)> = bf
            .results
            .iter()
            .map(|r| (r.query_id, r.matched.unwrap().candidate_id))
            .collect();
        assert_eq!(pairs, vec![(2, 0), (3, 1)]);
        assert_eq!(retrieve_all(&db, &db, Backend::KdTree, pool).unwrap(), bf);
    }

    #[test]
    fn heading_errors_cover_true_positives_only() {
        let pose = |id, yaw: f64| Pose {
            rotation: yaw_rotation(yaw),
            ..Pose::identity(id)
        };
        let poses = vec![pose(0, 10.0), pose(1, 0.0), pose(5, 40.0), pose(6, 0.0)];
        let m = |q, c, h| QueryResult {
            query_id: q,
            matched: Some(Match {
                query_id: q,
                candidate_id: c,
                distance: 0.1,
                zero_norm: false,
                heading_shift: 0,
                heading_deg: h,
            }),
        };
        let gt = GtLoopTable::from_entries(vec![(5, vec![0]), (6, vec![0])]);
        // query 5 is yawed 30° from candidate 0; estimate 36° is 6° off.
        // query 6 matched a non-loop and is skipped
        let errs = heading_errors(&[m(5, 0, 36.0), m(6, 1, 0.0)], &gt, &poses, &poses);
        assert_eq!(errs.len(), 1);
        assert!((errs[0] - 6.0).abs() < 1e-9);
    }
}
