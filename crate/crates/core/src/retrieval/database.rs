use super::kdtree::KdTree;
use super::{
    cosine_from_parts, dot, estimate_heading, Backend, CandidatePool, Match, NoCandidate,
    SearchOutcome,
};
use crate::descriptor::{GridSpec, SolidDescriptor};
use crate::error::RetrievalError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Record<T> {
    pub position: Option<[T; 3]>,
    pub descriptor: SolidDescriptor<T>,
}

impl<T> Record<T> {
    pub fn frame_id(&self) -> u64 {
        self.descriptor.frame_id
    }
}

/// Ordered frame records with an optional kd-tree over the unit-normalized
/// range descriptors.
///
/// Frame ids are strictly increasing, so every single-session candidate pool
/// is a prefix of the records.
#[derive(Debug, Clone)]
pub struct DescriptorDatabase<T> {
    grid: GridSpec<T>,
    records: Vec<Record<T>>,
    sq_norms: Vec<T>,
    index: Option<KdTree<T>>,
}

impl<T: Scalar> PartialEq for DescriptorDatabase<T> {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.records == other.records
    }
}

impl<T: Scalar> DescriptorDatabase<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        Self {
            grid,
            records: Vec::new(),
            sq_norms: Vec::new(),
            index: None,
        }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn records(&self) -> &[Record<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_positions(&self) -> bool {
        self.records.first().is_some_and(|r| r.position.is_some())
    }

    pub fn get(&self, frame_id: u64) -> Option<&Record<T>> {
        self.records
            .binary_search_by_key(&frame_id, Record::frame_id)
            .ok()
            .map(|i| &self.records[i])
    }

    /// Appends a record. Drops any built index.
    pub fn push(
        &mut self,
        descriptor: SolidDescriptor<T>,
        position: Option<[T; 3]>,
    ) -> Result<(), RetrievalError> {
        self.check_shape(&descriptor)?;
        if let Some(last) = self.records.last() {
            if descriptor.frame_id <= last.frame_id() {
                return Err(RetrievalError::FrameOrder {
                    id: descriptor.frame_id,
                    previous: last.frame_id(),
                });
            }
            if last.position.is_some() != position.is_some() {
                return Err(RetrievalError::PositionPresence {
                    id: descriptor.frame_id,
                });
            }
        }
        self.sq_norms
            .push(dot(&descriptor.r_solid, &descriptor.r_solid));
        self.records.push(Record {
            position,
            descriptor,
        });
        self.index = None;
        Ok(())
    }

    fn check_shape(&self, d: &SolidDescriptor<T>) -> Result<(), RetrievalError> {
        if d.r_solid.len() != self.grid.n_r || d.a_solid.len() != self.grid.n_a {
            return Err(RetrievalError::ShapeMismatch {
                n_r: d.r_solid.len(),
                n_a: d.a_solid.len(),
                db_n_r: self.grid.n_r,
                db_n_a: self.grid.n_a,
            });
        }
        Ok(())
    }

    /// Builds the kd-tree over unit-normalized range descriptors of every
    /// record with a nonzero norm.
    pub fn build_index(&mut self) {
        let items = self
            .records
            .iter()
            .zip(&self.sq_norms)
            .enumerate()
            .filter(|(_, (_, &n2))| n2 > T::zero())
            .map(|(rank, (rec, &n2))| {
                let inv = n2.sqrt().recip();
                (
                    rank,
                    rec.descriptor.r_solid.iter().map(|&v| v * inv).collect(),
                )
            })
            .collect();
        self.index = Some(KdTree::build(self.grid.n_r, items));
    }

    pub fn index(&self) -> Option<&KdTree<T>> {
        self.index.as_ref()
    }

    /// Number of records admissible for a query.
    fn pool_len(&self, query_id: u64, pool: CandidatePool) -> usize {
        match pool.max_frame_id(query_id) {
            None => 0,
            Some(max_id) => self.records.partition_point(|r| r.frame_id() <= max_id),
        }
    }

    fn finish(&self, query: &SolidDescriptor<T>, rank: usize) -> Result<Match<T>, RetrievalError> {
        let cand = &self.records[rank];
        let qn2 = dot(&query.r_solid, &query.r_solid);
        let dist = cosine_from_parts(
            dot(&query.r_solid, &cand.descriptor.r_solid),
            qn2,
            self.sq_norms[rank],
        );
        let (heading_shift, heading_deg) =
            estimate_heading(&query.a_solid, &cand.descriptor.a_solid)?;
        Ok(Match {
            query_id: query.frame_id,
            candidate_id: cand.frame_id(),
            distance: dist.value,
            zero_norm: dist.zero_norm,
            heading_shift,
            heading_deg,
        })
    }

    /// Linear scan for the smallest cosine distance; ties go to the smaller
    /// frame id.
    pub fn search_bruteforce(
        &self,
        query: &SolidDescriptor<T>,
        pool: CandidatePool,
    ) -> Result<SearchOutcome<T>, RetrievalError> {
        self.check_shape(query)?;
        let limit = self.pool_len(query.frame_id, pool);
        if limit == 0 {
            return Ok(SearchOutcome::NoCandidate(NoCandidate::EmptyPool));
        }
        let qn2 = dot(&query.r_solid, &query.r_solid);
        let mut best = (0usize, T::infinity());
        for (rank, (rec, &n2)) in self.records[..limit].iter().zip(&self.sq_norms).enumerate() {
            let d = cosine_from_parts(dot(&query.r_solid, &rec.descriptor.r_solid), qn2, n2).value;
            if d < best.1 {
                best = (rank, d);
            }
        }
        Ok(SearchOutcome::Found(self.finish(query, best.0)?))
    }

    /// Exact nearest neighbor through the kd-tree. Agrees with
    /// [`Self::search_bruteforce`] whenever the minimum is unique; zero-norm
    /// records are not indexed and zero-norm queries find nothing.
    pub fn search_kdtree(
        &self,
        query: &SolidDescriptor<T>,
        pool: CandidatePool,
    ) -> Result<SearchOutcome<T>, RetrievalError> {
        self.check_shape(query)?;
        let index = self.index.as_ref().ok_or(RetrievalError::IndexNotBuilt)?;
        let limit = self.pool_len(query.frame_id, pool);
        if limit == 0 {
            return Ok(SearchOutcome::NoCandidate(NoCandidate::EmptyPool));
        }
        let qn2 = dot(&query.r_solid, &query.r_solid);
        if qn2 == T::zero() {
            return Ok(SearchOutcome::NoCandidate(NoCandidate::ZeroNormQuery));
        }
        let inv = qn2.sqrt().recip();
        let unit: Vec<T> = query.r_solid.iter().map(|&v| v * inv).collect();
        match index.nearest(&unit, limit) {
            Some(hit) => Ok(SearchOutcome::Found(self.finish(query, hit.rank)?)),
            None => Ok(SearchOutcome::NoCandidate(NoCandidate::EmptyPool)),
        }
    }

    pub fn search(
        &self,
        backend: Backend,
        query: &SolidDescriptor<T>,
        pool: CandidatePool,
    ) -> Result<SearchOutcome<T>, RetrievalError> {
        match backend {
            Backend::BruteForce => self.search_bruteforce(query, pool),
            Backend::KdTree => self.search_kdtree(query, pool),
        }
    }
}
