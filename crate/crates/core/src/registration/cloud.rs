use std::collections::HashSet;

use crate::geometry::{Point2, Transform2D};
use crate::scalar::Real;

/// Planar point set with optional per-point intensity descriptors.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud<T> {
    pub points: Vec<Point2<T>>,
    /// Grayscale intensity per point; same length as `points` when present.
    pub descriptors: Option<Vec<T>>,
    pub frame_id: String,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Point2<T>>, frame_id: impl Into<String>) -> Self {
        Self {
            points,
            descriptors: None,
            frame_id: frame_id.into(),
        }
    }

    pub fn with_descriptors(points: Vec<Point2<T>>, descriptors: Vec<T>, frame_id: impl Into<String>) -> Self {
        assert_eq!(points.len(), descriptors.len(), "descriptor count must match point count");
        Self {
            points,
            descriptors: Some(descriptors),
            frame_id: frame_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn descriptor(&self, i: usize) -> Option<T> {
        self.descriptors.as_ref().map(|d| d[i])
    }

    pub fn transformed(&self, transform: &Transform2D<T>, frame_id: impl Into<String>) -> Self {
        Self {
            points: self.points.iter().map(|p| transform.apply(*p)).collect(),
            descriptors: self.descriptors.clone(),
            frame_id: frame_id.into(),
        }
    }
}

/// Keeps the first point landing in each `voxel`-sized cell, in input order.
pub fn voxel_downsample<T: Real>(cloud: &PointCloud<T>, voxel: T) -> PointCloud<T> {
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    let mut descriptors = cloud.descriptors.as_ref().map(|_| Vec::new());
    for (i, p) in cloud.points.iter().enumerate() {
        let key = ((p.x / voxel).floor().to_i64().unwrap_or(i64::MAX), (p.y / voxel).floor().to_i64().unwrap_or(i64::MAX));
        if seen.insert(key) {
            points.push(*p);
            if let (Some(out), Some(src)) = (descriptors.as_mut(), cloud.descriptors.as_ref()) {
                out.push(src[i]);
            }
        }
    }
    PointCloud {
        points,
        descriptors,
        frame_id: cloud.frame_id.clone(),
    }
}
