use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Point3;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
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

/// Static k-d tree over a point set.
///
/// Query results are exact and ordered by `(distance, index)`, so they agree
/// with a brute-force scan including how ties are broken.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Vec<Point3<f64>>,
    perm: Vec<usize>,
    // points in leaf order, so a leaf scan walks contiguous memory
    packed: Vec<Point3<f64>>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl NeighborIndex {
    pub fn new(points: &[Point3<f64>]) -> Self {
        let mut index = NeighborIndex {
            points: points.to_vec(),
            perm: (0..points.len()).collect(),
            packed: Vec::new(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            index.build(0, points.len());
        }
        index.packed = index.perm.iter().map(|&i| index.points[i]).collect();
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &Point3<f64> {
        &self.points[index]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.perm[start..end] {
            for a in 0..3 {
                lo[a] = lo[a].min(self.points[i][a]);
                hi[a] = hi[a].max(self.points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        if hi[axis] - lo[axis] == 0.0 {
            // all coincident
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.perm[mid]][axis];
        self.nodes.push(Node::Split {
            axis,
            value,
            left: 0,
            right: 0,
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[id]
        {
            *l = left;
            *r = right;
        }
        id
    }

    /// The `k` nearest points as `(index, distance)`, closest first.
    pub fn knn(&self, query: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.knn_visit(0, query, k, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.index, c.dist2.sqrt())).collect()
    }

    fn knn_visit(&self, node: usize, q: &Point3<f64>, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for (p, &i) in self.packed[start..end].iter().zip(&self.perm[start..end]) {
                    let c = Candidate {
                        dist2: (p - q).norm_squared(),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_visit(near, q, k, heap);
                if heap.len() < k || diff * diff <= heap.peek().unwrap().dist2 {
                    self.knn_visit(far, q, k, heap);
                }
            }
        }
    }

    /// Nearest point as `(index, distance)`.
    pub fn nearest(&self, query: &Point3<f64>) -> Option<(usize, f64)> {
        self.nearest_within(query, f64::INFINITY)
    }

    /// Whether any point lies within `radius` (inclusive).
    pub fn any_within(&self, query: &Point3<f64>, radius: f64) -> bool {
        !self.points.is_empty() && self.any_visit(0, query, radius * radius)
    }

    fn any_visit(&self, node: usize, q: &Point3<f64>, r2: f64) -> bool {
        match self.nodes[node] {
            Node::Leaf { start, end } => self.packed[start..end].iter().any(|p| (p - q).norm_squared() <= r2),
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.any_visit(near, q, r2) || (diff * diff <= r2 && self.any_visit(far, q, r2))
            }
        }
    }

    /// Nearest point no farther than `max_dist`.
    pub fn nearest_within(&self, query: &Point3<f64>, max_dist: f64) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = Candidate {
            dist2: max_dist * max_dist,
            index: usize::MAX,
        };
        self.nearest_visit(0, query, &mut best);
        (best.index != usize::MAX).then(|| (best.index, best.dist2.sqrt()))
    }

    fn nearest_visit(&self, node: usize, q: &Point3<f64>, best: &mut Candidate) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for (p, &i) in self.packed[start..end].iter().zip(&self.perm[start..end]) {
                    let c = Candidate {
                        dist2: (p - q).norm_squared(),
                        index: i,
                    };
                    if c.dist2 <= best.dist2 && (best.index == usize::MAX || c < *best) {
                        *best = c;
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_visit(near, q, best);
                if diff * diff <= best.dist2 {
                    self.nearest_visit(far, q, best);
                }
            }
        }
    }

    /// Calls `visit(index, squared_distance)` for every point within `radius`
    /// (inclusive). Visit order is unspecified.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, query: &Point3<f64>, radius: f64, mut visit: F) {
        if !self.points.is_empty() {
            self.radius_visit(0, query, radius * radius, &mut visit);
        }
    }

    fn radius_visit<F: FnMut(usize, f64)>(&self, node: usize, q: &Point3<f64>, r2: f64, visit: &mut F) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for (p, &i) in self.packed[start..end].iter().zip(&self.perm[start..end]) {
                    let d2 = (p - q).norm_squared();
                    if d2 <= r2 {
                        visit(i, d2);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                if diff <= 0.0 || diff * diff <= r2 {
                    self.radius_visit(left, q, r2, visit);
                }
                if diff >= 0.0 || diff * diff <= r2 {
                    self.radius_visit(right, q, r2, visit);
                }
            }
        }
    }

    /// All points within `radius` as `(index, distance)`, sorted by index.
    pub fn within_radius(&self, query: &Point3<f64>, radius: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.for_each_within(query, radius, |i, d2| out.push((i, d2.sqrt())));
        out.sort_by_key(|(i, _)| *i);
        out
    }
}
