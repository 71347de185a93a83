use nalgebra::Vector3;

use super::ReconError;
use crate::splat::RigidTransform;

/// Points with unit normals sampling the vector field to integrate.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedPointCloud {
    points: Vec<Vector3<f64>>,
    normals: Vec<Vector3<f64>>,
}

impl OrientedPointCloud {
    pub fn new(points: Vec<Vector3<f64>>, normals: Vec<Vector3<f64>>) -> Result<Self, ReconError> {
        if points.len() != normals.len() {
            return Err(ReconError::Cloud(format!(
                "{} points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        for (i, (p, n)) in points.iter().zip(&normals).enumerate() {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(ReconError::Cloud(format!("point {i} is not finite")));
            }
            if !((n.norm() - 1.0).abs() <= 1e-6) {
                return Err(ReconError::Cloud(format!(
                    "normal {i} has length {}",
                    n.norm()
                )));
            }
        }
        Ok(Self { points, normals })
    }

    /// Builds a cloud, normalizing each normal first.
    pub fn normalized(points: Vec<Vector3<f64>>, normals: Vec<Vector3<f64>>) -> Result<Self, ReconError> {
        let normals = normals
            .into_iter()
            .map(|n| if n.norm() > 0.0 { n.normalize() } else { n })
            .collect();
        Self::new(points, normals)
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Self {
            points: self.points.clone(),
            normals: self.normals.iter().map(|n| -n).collect(),
        }
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            points: self.points.iter().map(|p| t.apply_point(p)).collect(),
            normals: self.normals.iter().map(|n| t.apply_vector(n)).collect(),
        }
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
    }
}
