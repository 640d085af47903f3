use std::collections::HashMap;

use crate::error::EvalError;
use crate::scalar::Scalar;

/// A frame id with its position in meters.
pub type Located<T> = (u64, [T; 3]);

#[derive(Debug, Clone, Copy)]
pub enum SessionMode<'a, T> {
    /// Queries and candidates come from one trajectory; the most recent
    /// `exclude_recent` frames before each query are not admissible.
    Single { exclude_recent: u64 },
    /// Queries are matched against a separate target trajectory.
    Multi { targets: &'a [Located<T>] },
}

/// Ground-truth revisits for every query.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GtLoopTable {
    entries: Vec<(u64, Vec<u64>)>,
}

impl GtLoopTable {
    /// Builds a table from `(query_id, loop ids)` pairs; ids are sorted.
    pub fn from_entries(mut entries: Vec<(u64, Vec<u64>)>) -> Self {
        entries.sort_by_key(|e| e.0);
        for (_, ids) in &mut entries {
            ids.sort_unstable();
            ids.dedup();
        }
        Self { entries }
    }

    pub fn loop_ids(&self, query_id: u64) -> Option<&[u64]> {
        self.entries
            .binary_search_by_key(&query_id, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1.as_slice())
    }

    pub fn has_loop(&self, query_id: u64) -> Option<bool> {
        self.loop_ids(query_id).map(|ids| !ids.is_empty())
    }

    pub fn is_loop(&self, query_id: u64, candidate_id: u64) -> Result<bool, EvalError> {
        let ids = self
            .loop_ids(query_id)
            .ok_or(EvalError::UnknownQuery(query_id))?;
        Ok(ids.binary_search(&candidate_id).is_ok())
    }

    pub fn queries(&self) -> impl Iterator<Item = (u64, &[u64])> {
        self.entries.iter().map(|(q, ids)| (*q, ids.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn loop_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|(_, ids)| !ids.is_empty())
            .count()
    }
}

/// Admissible frames within `d_gt` meters of each query.
pub fn build_gt<T: Scalar>(
    queries: &[Located<T>],
    mode: SessionMode<'_, T>,
    d_gt: T,
) -> GtLoopTable {
    assert!(d_gt > T::zero(), "ground-truth radius must be positive");
    let targets = match mode {
        SessionMode::Single { .. } => queries,
        SessionMode::Multi { targets } => targets,
    };
    let cell = |p: &[T; 3]| p.map(|c| (c / d_gt).floor().to_i64().unwrap_or(i64::MAX));
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (idx, (_, p)) in targets.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(idx);
    }
    let d2 = d_gt * d_gt;
    let entries = queries
        .iter()
        .map(|&(qid, qp)| {
            let max_id = match mode {
                SessionMode::Single { exclude_recent } => qid.checked_sub(exclude_recent),
                SessionMode::Multi { .. } => Some(u64::MAX),
            };
            let mut ids = Vec::new();
            if let Some(max_id) = max_id {
                let c = cell(&qp);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            let key = [c[0] + dx, c[1] + dy, c[2] + dz];
                            for &idx in grid.get(&key).into_iter().flatten() {
                                let (tid, tp) = targets[idx];
                                if tid <= max_id && sq_dist(&qp, &tp) <= d2 {
                                    ids.push(tid);
                                }
                            }
                        }
                    }
                }
            }
            (qid, ids)
        })
        .collect();
    GtLoopTable::from_entries(entries)
}

fn sq_dist<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    (0..3).fold(T::zero(), |acc, k| acc + (a[k] - b[k]) * (a[k] - b[k]))
}
