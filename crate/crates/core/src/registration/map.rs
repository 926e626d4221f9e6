use std::collections::{BTreeMap, HashMap};

use super::PointCloud;
use crate::geometry::{Point2, Transform2D};
use crate::radiation::{RadiationAnnotation, UpdateRule};
use crate::scalar::Real;

pub type VoxelKey = (i64, i64);

/// Accumulate-only voxel map. Each occupied voxel holds exactly one point,
/// the first one that landed there. Coordinates are stored at `f32`
/// precision so the binary export round-trips exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedMap<T> {
    points: Vec<Point2<T>>,
    descriptors: Vec<T>,
    cells: HashMap<VoxelKey, usize>,
    annotations: BTreeMap<usize, RadiationAnnotation>,
    voxel: T,
    origin_frame: String,
}

impl<T: Real> AnnotatedMap<T> {
    pub fn new(voxel: T, origin_frame: impl Into<String>) -> Self {
        assert!(voxel > T::zero(), "voxel size must be positive");
        Self {
            points: Vec::new(),
            descriptors: Vec::new(),
            cells: HashMap::new(),
            annotations: BTreeMap::new(),
            voxel: quantize_scalar(voxel),
            origin_frame: origin_frame.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn voxel(&self) -> T {
        self.voxel
    }

    pub fn origin_frame(&self) -> &str {
        &self.origin_frame
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    pub fn descriptors(&self) -> &[T] {
        &self.descriptors
    }

    pub fn annotations(&self) -> &BTreeMap<usize, RadiationAnnotation> {
        &self.annotations
    }

    pub fn annotation(&self, index: usize) -> Option<&RadiationAnnotation> {
        self.annotations.get(&index)
    }

    pub fn cloud(&self) -> PointCloud<T> {
        PointCloud::with_descriptors(self.points.clone(), self.descriptors.clone(), self.origin_frame.clone())
    }

    pub fn voxel_key(&self, p: Point2<T>) -> VoxelKey {
        let q = quantize(p);
        (
            (q.x / self.voxel).floor().to_i64().unwrap_or(i64::MAX),
            (q.y / self.voxel).floor().to_i64().unwrap_or(i64::MAX),
        )
    }

    /// Index of the point occupying `p`'s voxel.
    pub fn lookup(&self, p: Point2<T>) -> Option<usize> {
        self.cells.get(&self.voxel_key(p)).copied()
    }

    /// Inserts `p` (map frame) unless its voxel is occupied. Returns the
    /// occupying index and whether a new point was created.
    pub fn insert(&mut self, p: Point2<T>, descriptor: T) -> (usize, bool) {
        let q = quantize(p);
        let key = self.voxel_key(q);
        if let Some(&idx) = self.cells.get(&key) {
            return (idx, false);
        }
        let idx = self.points.len();
        self.points.push(q);
        self.descriptors.push(quantize_scalar(descriptor));
        self.cells.insert(key, idx);
        (idx, true)
    }

    /// Transforms the scan into the map frame and inserts every point that
    /// lands in a free voxel. Returns the number of new points.
    pub fn update_map(&mut self, scan_cloud: &PointCloud<T>, pose: &Transform2D<T>) -> usize {
        let mut inserted = 0;
        for (i, p) in scan_cloud.points.iter().enumerate() {
            let d = scan_cloud.descriptor(i).unwrap_or_else(T::zero);
            if self.insert(pose.apply(*p), d).1 {
                inserted += 1;
            }
        }
        inserted
    }

    /// Folds `incoming` into this map through `incoming_to_self`. Points are
    /// inserted as in `update_map`; annotations combine under `rule`.
    pub fn merge(&mut self, incoming: &AnnotatedMap<T>, incoming_to_self: &Transform2D<T>, rule: UpdateRule) {
        for (i, p) in incoming.points.iter().enumerate() {
            let (idx, _) = self.insert(incoming_to_self.apply(*p), incoming.descriptors[i]);
            if let Some(ann) = incoming.annotations.get(&i) {
                self.annotate(idx, *ann, rule);
            }
        }
    }

    /// Applies `rule` at `index`. Returns whether the stored annotation changed.
    pub fn annotate(&mut self, index: usize, annotation: RadiationAnnotation, rule: UpdateRule) -> bool {
        assert!(index < self.points.len(), "annotation must index a live point");
        let current = self.annotations.get(&index);
        if rule.replaces(current, &annotation) {
            self.annotations.insert(index, annotation);
            true
        } else {
            false
        }
    }

    /// Stores `annotation` at `index` unconditionally. Used when replaying
    /// a map from a delta stream.
    pub fn set_annotation(&mut self, index: usize, annotation: RadiationAnnotation) {
        assert!(index < self.points.len(), "annotation must index a live point");
        self.annotations.insert(index, annotation);
    }

    /// Points within `radius` of `center`, in index order.
    pub fn points_within(&self, center: Point2<T>, radius: T) -> Vec<Point2<T>> {
        let r2 = radius * radius;
        self.points.iter().copied().filter(|p| p.distance_squared(center) <= r2).collect()
    }

    /// Occupied voxel count; equals `len` by construction.
    pub fn occupied_voxels(&self) -> usize {
        self.cells.len()
    }

    pub(crate) fn push_raw(&mut self, p: Point2<T>, descriptor: T, annotation: Option<RadiationAnnotation>) -> bool {
        let (idx, fresh) = self.insert(p, descriptor);
        if let Some(a) = annotation {
            self.annotations.insert(idx, a);
        }
        fresh
    }
}

fn quantize<T: Real>(p: Point2<T>) -> Point2<T> {
    Point2::new(quantize_scalar(p.x), quantize_scalar(p.y))
}

fn quantize_scalar<T: Real>(v: T) -> T {
    T::lit(v.to_f32().unwrap_or(0.0) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radiation::RadiationLevel;

    fn cloud(n: usize) -> PointCloud<f64> {
        let pts = (0..n).map(|i| Point2::new(i as f64 * 0.037, (i as f64 * 0.11).sin())).collect();
        PointCloud::new(pts, "scan")
    }

    #[test]
    fn insert_dedups_by_voxel() {
        let mut map = AnnotatedMap::new(0.1, "m");
        let inserted = map.update_map(&cloud(100), &Transform2D::identity());
        assert!(inserted <= 100 && inserted > 0);
        assert_eq!(map.len(), inserted);
        let again = map.update_map(&cloud(100), &Transform2D::identity());
        assert_eq!(again, 0);
        assert_eq!(map.occupied_voxels(), map.len());
        let keys: std::collections::HashSet<_> = map.points().iter().map(|p| map.voxel_key(*p)).collect();
        assert_eq!(keys.len(), map.len());
    }

    #[test]
    fn existing_points_never_move() {
        let mut map = AnnotatedMap::new(0.1, "m");
        map.insert(Point2::new(0.01, 0.01), 5.0);
        let before = map.points()[0];
        map.insert(Point2::new(0.09, 0.09), 200.0);
        assert_eq!(map.len(), 1);
        assert_eq!(map.points()[0], before);
        assert_eq!(map.descriptors()[0], 5.0);
    }

    #[test]
    fn merge_identity_is_idempotent() {
        let mut map = AnnotatedMap::new(0.1, "m");
        map.update_map(&cloud(50), &Transform2D::identity());
        map.annotate(
            3,
            RadiationAnnotation {
                level: RadiationLevel::Orange,
                observation_distance: 2.5,
                observed_at: 1.0,
            },
            UpdateRule::CloserWins,
        );
        let copy = map.clone();
        map.merge(&copy, &Transform2D::identity(), UpdateRule::CloserWins);
        assert_eq!(map, copy);
        let empty = AnnotatedMap::new(0.1, "x");
        map.merge(&empty, &Transform2D::new(1.0, 2.0, 0.3), UpdateRule::CloserWins);
        assert_eq!(map, copy);
    }
}
