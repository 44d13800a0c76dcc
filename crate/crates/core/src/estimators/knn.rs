//! Exact nearest-neighbour search under the Chebyshev (max-norm) metric.
//!
//! A static kd-tree over a borrowed row-major point buffer. Every query is
//! exact; there is no approximate mode.

const LEAF_SIZE: usize = 12;

#[inline]
pub(crate) fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Kd-tree over `n` points of dimension `dim`, stored row-major in `data`.
#[derive(Debug)]
pub struct KdTree<'a> {
    data: &'a [f64],
    dim: usize,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Bounded list of the best `k` candidates seen so far, sorted by distance.
struct Nearest {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Nearest {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn worst(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    #[inline]
    fn offer(&mut self, dist: f64, idx: usize) {
        if self.items.len() == self.k && dist >= self.worst() {
            return;
        }
        let pos = self.items.partition_point(|&(d, _)| d <= dist);
        self.items.insert(pos, (dist, idx));
        self.items.truncate(self.k);
    }
}

impl<'a> KdTree<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim));
        let n = data.len() / dim;
        let mut tree = Self {
            data,
            dim,
            order: (0..n).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis with the widest spread
        let mut axis = 0;
        let mut best_spread = -1.0;
        for a in 0..self.dim {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&i| self.data[i * self.dim + a])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            if hi - lo > best_spread {
                best_spread = hi - lo;
                axis = a;
            }
        }
        let mid = start + (end - start) / 2;
        let (data, dim) = (self.data, self.dim);
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            data[i * dim + axis].total_cmp(&data[j * dim + axis])
        });
        let value = data[self.order[mid] * dim + axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points to `query`, sorted by distance, skipping index
    /// `exclude` if given.
    pub fn k_nearest(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<(f64, usize)> {
        let mut best = Nearest::new(k);
        if k > 0 && !self.is_empty() {
            self.search(0, query, exclude, &mut best);
        }
        best.items
    }

    /// Distance from point `i` to its `k`-th nearest neighbour among the
    /// other points of the tree.
    pub fn kth_distance_excluding(&self, i: usize, k: usize) -> f64 {
        self.k_nearest(self.point(i), k, Some(i))
            .get(k - 1)
            .map_or(f64::INFINITY, |&(d, _)| d)
    }

    /// Distance from an external `query` to its `k`-th nearest point.
    pub fn kth_distance(&self, query: &[f64], k: usize) -> f64 {
        self.k_nearest(query, k, None)
            .get(k - 1)
            .map_or(f64::INFINITY, |&(d, _)| d)
    }

    fn search(&self, node: usize, q: &[f64], exclude: Option<usize>, best: &mut Nearest) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    best.offer(chebyshev(q, self.point(i)), i);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, exclude, best);
                if diff.abs() <= best.worst() {
                    self.search(far, q, exclude, best);
                }
            }
        }
    }

    /// Number of points strictly closer than `radius` to `query`
    /// (the query point itself counts if it is in the tree).
    pub fn count_within(&self, query: &[f64], radius: f64) -> usize {
        if self.is_empty() {
            return 0;
        }
        self.count(0, query, radius)
    }

    fn count(&self, node: usize, q: &[f64], r: f64) -> usize {
        match self.nodes[node] {
            Node::Leaf { start, end } => self.order[start..end]
                .iter()
                .filter(|&&i| chebyshev(q, self.point(i)) < r)
                .count(),
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let mut c = 0;
                if q[axis] - r < value {
                    c += self.count(left, q, r);
                }
                if value < q[axis] + r {
                    c += self.count(right, q, r);
                }
                c
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * dim).map(|_| rng.random::<f64>()).collect()
    }

    fn brute_kth(data: &[f64], dim: usize, i: usize, k: usize) -> f64 {
        let q = &data[i * dim..(i + 1) * dim];
        let mut d: Vec<f64> = (0..data.len() / dim)
            .filter(|&j| j != i)
            .map(|j| chebyshev(q, &data[j * dim..(j + 1) * dim]))
            .collect();
        d.sort_by(f64::total_cmp);
        d[k - 1]
    }

    #[test]
    fn kth_distance_matches_brute_force() {
        for dim in 1..=3 {
            let data = random_points(400, dim, dim as u64);
            let tree = KdTree::new(&data, dim);
            for i in (0..400).step_by(7) {
                for k in [1, 3, 5] {
                    assert_eq!(
                        tree.kth_distance_excluding(i, k),
                        brute_kth(&data, dim, i, k)
                    );
                }
            }
        }
    }

    #[test]
    fn count_within_matches_brute_force() {
        let dim = 2;
        let data = random_points(500, dim, 11);
        let tree = KdTree::new(&data, dim);
        for i in (0..500).step_by(13) {
            let q = tree.point(i);
            for r in [0.0, 0.01, 0.05, 0.3] {
                let brute = (0..500)
                    .filter(|&j| chebyshev(q, tree.point(j)) < r)
                    .count();
                assert_eq!(tree.count_within(q, r), brute);
            }
        }
    }

    #[test]
    fn duplicate_coordinates_are_handled() {
        let data = vec![1.0; 40];
        let tree = KdTree::new(&data, 1);
        assert_eq!(tree.kth_distance_excluding(3, 3), 0.0);
        assert_eq!(tree.count_within(&[1.0], 1e-12), 40);
    }
}
