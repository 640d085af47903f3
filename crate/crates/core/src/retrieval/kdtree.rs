//! Exact Euclidean nearest-neighbor kd-tree over fixed-dimension vectors.
//!
//! Each stored vector carries a caller-supplied rank (the record position in
//! the database). Queries take an exclusive upper bound on admissible ranks,
//! and every node records the smallest rank below it so that inadmissible
//! subtrees are skipped without visiting them.

use crate::scalar::Scalar;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf {
        start: usize,
        end: usize,
        min_rank: usize,
    },
    Split {
        dim: usize,
        value: T,
        left: usize,
        right: usize,
        min_rank: usize,
    },
}

impl<T> Node<T> {
    fn min_rank(&self) -> usize {
        match self {
            Node::Leaf { min_rank, .. } | Node::Split { min_rank, .. } => *min_rank,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KdTree<T> {
    dim: usize,
    /// Vectors permuted into leaf order, flattened.
    coords: Vec<T>,
    ranks: Vec<usize>,
    nodes: Vec<Node<T>>,
}

/// Nearest stored vector: its rank and squared Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest<T> {
    pub rank: usize,
    pub dist2: T,
}

impl<T: Scalar> KdTree<T> {
    /// Builds a tree over `(rank, vector)` pairs; every vector must have
    /// length `dim`.
    pub fn build(dim: usize, items: Vec<(usize, Vec<T>)>) -> Self {
        assert!(
            items.iter().all(|(_, v)| v.len() == dim),
            "vector dimension mismatch"
        );
        let mut order: Vec<usize> = (0..items.len()).collect();
        let mut nodes = Vec::new();
        if !items.is_empty() {
            build_node(&items, dim, &mut order[..], 0, &mut nodes);
        }
        let mut coords = Vec::with_capacity(items.len() * dim);
        let mut ranks = Vec::with_capacity(items.len());
        for &idx in &order {
            coords.extend_from_slice(&items[idx].1);
            ranks.push(items[idx].0);
        }
        Self {
            dim,
            coords,
            ranks,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Exact nearest neighbor among vectors with `rank < rank_limit`. Equal
    /// distances resolve to the smaller rank.
    pub fn nearest(&self, query: &[T], rank_limit: usize) -> Option<Nearest<T>> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        if self.nodes.is_empty() || self.nodes[0].min_rank() >= rank_limit {
            return None;
        }
        let mut search = Search {
            tree: self,
            query,
            rank_limit,
            offsets: vec![T::zero(); self.dim],
            best: None,
        };
        search.visit(0, T::zero());
        search.best
    }
}

fn build_node<T: Scalar>(
    items: &[(usize, Vec<T>)],
    dim: usize,
    order: &mut [usize],
    base: usize,
    nodes: &mut Vec<Node<T>>,
) -> usize {
    let id = nodes.len();
    let min_rank = order.iter().map(|&i| items[i].0).min().unwrap();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: base,
            end: base + order.len(),
            min_rank,
        });
        return id;
    }
    // split the widest dimension at its median
    let mut split_dim = 0;
    let mut widest = T::neg_infinity();
    for d in 0..dim {
        let (lo, hi) = order
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &i| {
                let v = items[i].1[d];
                (lo.min(v), hi.max(v))
            });
        if hi - lo > widest {
            widest = hi - lo;
            split_dim = d;
        }
    }
    if widest <= T::zero() {
        nodes.push(Node::Leaf {
            start: base,
            end: base + order.len(),
            min_rank,
        });
        return id;
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        items[a].1[split_dim]
            .partial_cmp(&items[b].1[split_dim])
            .unwrap()
    });
    let value = items[order[mid]].1[split_dim];
    nodes.push(Node::Leaf {
        start: 0,
        end: 0,
        min_rank,
    });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_node(items, dim, lo, base, nodes);
    let right = build_node(items, dim, hi, base + mid, nodes);
    nodes[id] = Node::Split {
        dim: split_dim,
        value,
        left,
        right,
        min_rank,
    };
    id
}

struct Search<'a, T> {
    tree: &'a KdTree<T>,
    query: &'a [T],
    rank_limit: usize,
    /// Per-dimension distance from the query to the current cell.
    offsets: Vec<T>,
    best: Option<Nearest<T>>,
}

impl<T: Scalar> Search<'_, T> {
    fn bound(&self) -> T {
        self.best.map_or(T::infinity(), |b| b.dist2)
    }

    /// `cell_dist2` is a lower bound on the squared distance from the query
    /// to anything in this subtree.
    fn visit(&mut self, node: usize, cell_dist2: T) {
        let tree = self.tree;
        let n = &tree.nodes[node];
        if n.min_rank() >= self.rank_limit || cell_dist2 > self.bound() {
            return;
        }
        match *n {
            Node::Leaf { start, end, .. } => {
                for slot in start..end {
                    let rank = tree.ranks[slot];
                    if rank >= self.rank_limit {
                        continue;
                    }
                    let v = &tree.coords[slot * tree.dim..(slot + 1) * tree.dim];
                    let mut dist2 = T::zero();
                    for (a, b) in v.iter().zip(self.query) {
                        let diff = *a - *b;
                        dist2 += diff * diff;
                    }
                    let better = match self.best {
                        None => true,
                        Some(b) => dist2 < b.dist2 || (dist2 == b.dist2 && rank < b.rank),
                    };
                    if better {
                        self.best = Some(Nearest { rank, dist2 });
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
                ..
            } => {
                let diff = self.query[dim] - value;
                let (near, far) = if diff < T::zero() {
                    (left, right)
                } else {
                    (right, left)
                };
                self.visit(near, cell_dist2);
                let old = self.offsets[dim];
                let far_dist2 = cell_dist2 - old * old + diff * diff;
                if far_dist2 <= self.bound() {
                    self.offsets[dim] = diff;
                    self.visit(far, far_dist2);
                    self.offsets[dim] = old;
                }
            }
        }
    }
}
