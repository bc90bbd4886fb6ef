use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, Vec3};

/// Points bucketed into cubic cells anchored at the cloud's minimum corner.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    voxel_size: f64,
    origin: Vec3,
    cells: BTreeMap<[i64; 3], Vec<usize>>,
}

impl VoxelGrid {
    pub fn new(points: &[Vec3], voxel_size: f64) -> Result<Self> {
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(Error::invalid("voxel size must be positive"));
        }
        let origin = bounding_box(points).map_or(Vec3::zeros(), |(lo, _)| lo);
        let mut cells: BTreeMap<[i64; 3], Vec<usize>> = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            let rel = (p - origin) / voxel_size;
            let key = [rel.x.floor() as i64, rel.y.floor() as i64, rel.z.floor() as i64];
            cells.entry(key).or_default().push(i);
        }
        Ok(Self {
            voxel_size,
            origin,
            cells,
        })
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    /// Cell index → point ids, ids ascending within each cell.
    pub fn cells(&self) -> &BTreeMap<[i64; 3], Vec<usize>> {
        &self.cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_point_in_one_cell() {
        let pts: Vec<Vec3> = (0..50)
            .map(|i| Vec3::new(i as f64 * 0.037, (i % 7) as f64 * 0.11, -(i as f64) * 0.02))
            .collect();
        let g = VoxelGrid::new(&pts, 0.1).unwrap();
        let mut all: Vec<usize> = g.cells().values().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        for (key, ids) in g.cells() {
            for &i in ids {
                let rel = (pts[i] - g.origin()) / 0.1;
                assert_eq!(*key, [rel.x.floor() as i64, rel.y.floor() as i64, rel.z.floor() as i64]);
            }
        }
    }

    #[test]
    fn rejects_bad_size() {
        assert!(VoxelGrid::new(&[Vec3::zeros()], 0.0).is_err());
    }
}
