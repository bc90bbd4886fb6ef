use super::Vec3;
use crate::error::{Error, Result};

/// Positions in meters with per-point RGB in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColoredPointCloud {
    positions: Vec<Vec3>,
    colors: Vec<Vec3>,
}

impl ColoredPointCloud {
    pub fn new(positions: Vec<Vec3>, colors: Vec<Vec3>) -> Result<Self> {
        if positions.len() != colors.len() {
            return Err(Error::invalid(format!(
                "{} positions but {} colors",
                positions.len(),
                colors.len()
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(Error::invalid(format!("position {i} is not finite")));
        }
        if let Some(i) = colors.iter().position(|c| !c.iter().all(|x| (0.0..=1.0).contains(x))) {
            return Err(Error::invalid(format!("color {i} has a channel outside [0, 1]")));
        }
        Ok(Self { positions, colors })
    }

    pub(crate) fn from_parts_unchecked(positions: Vec<Vec3>, colors: Vec<Vec3>) -> Self {
        debug_assert_eq!(positions.len(), colors.len());
        Self { positions, colors }
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn colors(&self) -> &[Vec3] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Vec3>, Vec<Vec3>) {
        (self.positions, self.colors)
    }

    /// Axis-aligned bounds `(min, max)`, or `None` for an empty cloud.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        super::bounding_box(&self.positions)
    }

    /// Length of the axis-aligned bounding box diagonal; zero when empty.
    pub fn bbox_diagonal(&self) -> f64 {
        self.bounds().map_or(0.0, |(lo, hi)| (hi - lo).norm())
    }

    /// Subset by index, preserving the given order.
    pub fn select(&self, ids: &[usize]) -> Self {
        Self {
            positions: ids.iter().map(|&i| self.positions[i]).collect(),
            colors: ids.iter().map(|&i| self.colors[i]).collect(),
        }
    }

    pub fn extend(&mut self, other: &ColoredPointCloud) {
        self.positions.extend_from_slice(&other.positions);
        self.colors.extend_from_slice(&other.colors);
    }

    pub fn concat<'a>(clouds: impl IntoIterator<Item = &'a ColoredPointCloud>) -> Self {
        let mut out = Self::default();
        for c in clouds {
            out.extend(c);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_invariants() {
        assert!(ColoredPointCloud::new(vec![Vec3::zeros()], vec![]).is_err());
        assert!(ColoredPointCloud::new(vec![Vec3::zeros()], vec![Vec3::new(0.0, 1.5, 0.0)]).is_err());
        assert!(ColoredPointCloud::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)], vec![Vec3::zeros()]).is_err());
    }

    #[test]
    fn bbox_diagonal_of_unit_cube_corners() {
        let c = ColoredPointCloud::new(vec![Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)], vec![Vec3::zeros(); 2]).unwrap();
        assert!((c.bbox_diagonal() - 3f64.sqrt()).abs() < 1e-15);
    }
}
