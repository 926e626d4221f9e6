//! Static environment: walls, lights and labeled regions, plus the ray and
//! wall-crossing queries the sensor and radio models are built on.

use serde::{Deserialize, Serialize};

use crate::geometry::{point_in_polygon, point_segment_distance, polygon_is_simple, segments_intersect};
use crate::scenario::ScenarioError;
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

fn default_true() -> bool {
    true
}

/// Infinitely thin wall. Radio loss is charged once per crossing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSegment {
    pub a: Point,
    pub b: Point,
    #[serde(default)]
    pub radio_attenuation: f64,
    /// Blocks lidar beams and light.
    #[serde(default = "default_true")]
    pub opaque: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSource {
    pub position: Point,
    #[serde(default = "LightSource::default_power")]
    pub power: f64,
    #[serde(default = "default_true")]
    pub enabled: bool,
}

impl LightSource {
    fn default_power() -> f64 {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionLabel {
    Indoor,
    Outdoor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledPolygon {
    #[serde(default)]
    pub name: String,
    pub label: RegionLabel,
    pub vertices: Vec<Point>,
}

impl LabeledPolygon {
    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, &self.vertices)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldModel {
    pub bounds: Bounds,
    #[serde(default)]
    pub segments: Vec<WallSegment>,
    #[serde(default)]
    pub lights: Vec<LightSource>,
    #[serde(default)]
    pub regions: Vec<LabeledPolygon>,
}

/// Nearest opaque intersection along a ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub distance: f64,
    pub segment_index: usize,
}

impl WorldModel {
    pub fn open_field(bounds: Bounds) -> Self {
        Self {
            bounds,
            segments: Vec::new(),
            lights: Vec::new(),
            regions: Vec::new(),
        }
    }

    /// Checks every structural invariant, reporting the offending path.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let b = &self.bounds;
        if !(b.min.x < b.max.x && b.min.y < b.max.y) {
            return Err(ScenarioError::invariant("world.bounds", "min must be strictly below max"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            let path = format!("world.segments[{i}]");
            if s.a == s.b {
                return Err(ScenarioError::invariant(path, "degenerate segment"));
            }
            if !s.radio_attenuation.is_finite() || s.radio_attenuation < 0.0 {
                return Err(ScenarioError::invariant(path, "radio_attenuation must be finite and >= 0"));
            }
            if !b.contains(s.a) || !b.contains(s.b) {
                return Err(ScenarioError::invariant(path, "segment endpoint outside world bounds"));
            }
        }
        for (i, l) in self.lights.iter().enumerate() {
            let path = format!("world.lights[{i}]");
            if !(l.power > 0.0) || !l.power.is_finite() {
                return Err(ScenarioError::invariant(path, "light power must be > 0"));
            }
            if !b.contains(l.position) {
                return Err(ScenarioError::invariant(path, "light outside world bounds"));
            }
        }
        for (i, r) in self.regions.iter().enumerate() {
            let path = format!("world.regions[{i}]");
            if r.vertices.iter().any(|v| !b.contains(*v)) {
                return Err(ScenarioError::invariant(path, "region vertex outside world bounds"));
            }
            if !polygon_is_simple(&r.vertices) {
                return Err(ScenarioError::invariant(path, "region polygon is not simple"));
            }
        }
        Ok(())
    }

    pub fn indoor_regions(&self) -> impl Iterator<Item = &LabeledPolygon> {
        self.regions.iter().filter(|r| r.label == RegionLabel::Indoor)
    }

    pub fn is_indoor(&self, p: Point) -> bool {
        self.indoor_regions().any(|r| r.contains(p))
    }

    /// Nearest opaque wall hit within `max_range` along unit `direction`.
    /// Equidistant hits resolve to the lowest segment index.
    pub fn raycast(&self, origin: Point, direction: Point, max_range: f64) -> Option<Hit> {
        let end = origin + direction * max_range;
        let (lo_x, hi_x) = (origin.x.min(end.x), origin.x.max(end.x));
        let (lo_y, hi_y) = (origin.y.min(end.y), origin.y.max(end.y));
        let mut best: Option<Hit> = None;
        for (index, seg) in self.segments.iter().enumerate() {
            if !seg.opaque {
                continue;
            }
            if seg.a.x.max(seg.b.x) < lo_x
                || seg.a.x.min(seg.b.x) > hi_x
                || seg.a.y.max(seg.b.y) < lo_y
                || seg.a.y.min(seg.b.y) > hi_y
            {
                continue;
            }
            if !segments_intersect(&origin, &end, &seg.a, &seg.b) {
                continue;
            }
            let distance = ray_hit_distance(origin, direction, max_range, seg.a, seg.b);
            if best.is_none_or(|h| distance < h.distance) {
                best = Some(Hit {
                    distance,
                    segment_index: index,
                });
            }
        }
        best
    }

    /// Summed radio attenuation of every wall the segment `a-b` touches.
    pub fn walls_between(&self, a: Point, b: Point) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.radio_attenuation > 0.0 && segments_intersect(&a, &b, &s.a, &s.b))
            .map(|s| s.radio_attenuation)
            .sum()
    }

    /// Distance from `p` to the nearest opaque segment; infinite in an open
    /// field.
    pub fn clearance(&self, p: Point) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.opaque)
            .map(|s| point_segment_distance(p, s.a, s.b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Opaque walls only; used for line-of-sight checks.
    pub fn line_of_sight(&self, a: Point, b: Point) -> bool {
        !self.segments.iter().any(|s| s.opaque && segments_intersect(&a, &b, &s.a, &s.b))
    }
}

// Distance along the ray to a segment already known to intersect it.
fn ray_hit_distance(origin: Point, dir: Point, max_range: f64, a: Point, b: Point) -> f64 {
    let s = b - a;
    let denom = dir.cross(s);
    let d = if denom.abs() > 1e-12 * s.norm() {
        (a - origin).cross(s) / denom
    } else {
        // collinear overlap: nearest overlapping point along the ray
        let ta = (a - origin).dot(dir);
        let tb = (b - origin).dot(dir);
        ta.min(tb).max(0.0)
    };
    d.clamp(0.0, max_range)
}
