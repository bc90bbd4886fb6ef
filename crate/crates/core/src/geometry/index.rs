use super::Vec3;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

/// Exact kd-tree over a fixed point set.
///
/// Results are identical to an exhaustive scan: the same squared distances
/// are compared and equal distances resolve to the lowest point id.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    // Implicit tree: a node covering perm[lo..hi] splits at mid = (lo + hi) / 2.
    perm: Vec<usize>,
    axes: Vec<u8>,
}

#[derive(Clone, Copy)]
struct Best {
    dist2: f64,
    id: usize,
}

impl Best {
    fn offer(&mut self, dist2: f64, id: usize) {
        if dist2 < self.dist2 || (dist2 == self.dist2 && id < self.id) {
            self.dist2 = dist2;
            self.id = id;
        }
    }
}

impl SpatialIndex {
    pub fn new(points: &[Vec3]) -> Self {
        let mut index = Self {
            points: points.to_vec(),
            perm: (0..points.len()).collect(),
            axes: vec![0; points.len()],
        };
        index.build(0, points.len());
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn point(&self, id: usize) -> &Vec3 {
        &self.points[id]
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi - lo <= LEAF_SIZE {
            return;
        }
        let (mut min, mut max) = (self.points[self.perm[lo]], self.points[self.perm[lo]]);
        for &i in &self.perm[lo..hi] {
            min = min.inf(&self.points[i]);
            max = max.sup(&self.points[i]);
        }
        let axis = (max - min).imax();
        let mid = (lo + hi) / 2;
        let points = &self.points;
        self.perm[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        self.axes[mid] = axis as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    /// Closest indexed point and its Euclidean distance.
    pub fn nearest(&self, query: &Vec3) -> Result<(usize, f64)> {
        let (id, d2) = self.nearest_squared(query)?;
        Ok((id, d2.sqrt()))
    }

    /// Like [`nearest`](Self::nearest) but returns the squared distance.
    pub fn nearest_squared(&self, query: &Vec3) -> Result<(usize, f64)> {
        if self.points.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut best = Best {
            dist2: f64::INFINITY,
            id: usize::MAX,
        };
        self.search_nearest(0, self.points.len(), query, &mut best);
        Ok((best.id, best.dist2))
    }

    fn search_nearest(&self, lo: usize, hi: usize, q: &Vec3, best: &mut Best) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.perm[lo..hi] {
                best.offer((self.points[i] - q).norm_squared(), i);
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let pivot_id = self.perm[mid];
        let pivot = &self.points[pivot_id];
        best.offer((pivot - q).norm_squared(), pivot_id);
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - pivot[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search_nearest(near.0, near.1, q, best);
        // `<=` keeps equal-distance candidates reachable for the id tie-break
        if diff * diff <= best.dist2 {
            self.search_nearest(far.0, far.1, q, best);
        }
    }

    /// Ids of all points with distance ≤ `radius`, ascending.
    pub fn radius_neighbors(&self, query: &Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.points.is_empty() && radius >= 0.0 {
            self.search_radius(0, self.points.len(), query, radius * radius, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn search_radius(&self, lo: usize, hi: usize, q: &Vec3, r2: f64, out: &mut Vec<usize>) {
        if hi - lo <= LEAF_SIZE {
            out.extend(
                self.perm[lo..hi]
                    .iter()
                    .copied()
                    .filter(|&i| (self.points[i] - q).norm_squared() <= r2),
            );
            return;
        }
        let mid = (lo + hi) / 2;
        let pivot_id = self.perm[mid];
        let pivot = &self.points[pivot_id];
        if (pivot - q).norm_squared() <= r2 {
            out.push(pivot_id);
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - pivot[axis];
        if diff <= 0.0 || diff * diff <= r2 {
            self.search_radius(lo, mid, q, r2, out);
        }
        if diff >= 0.0 || diff * diff <= r2 {
            self.search_radius(mid + 1, hi, q, r2, out);
        }
    }
}
