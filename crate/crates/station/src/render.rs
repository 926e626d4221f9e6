//! Top-down PNG rendering of the unified map and robot trajectories.

use image::{Rgb, RgbImage};
use inspect_core::fleet::MissionLog;
use inspect_core::radiation::RadiationLevel;
use inspect_core::{AnnotatedMap, Point, Pose2D};

#[derive(Clone, Debug)]
pub struct RenderStyle {
    pub pixels_per_meter: f64,
    pub margin_px: u32,
    /// Canvas extent in meters when there is nothing to draw.
    pub empty_extent: f64,
    pub background: Rgb<u8>,
    pub point: Rgb<u8>,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            pixels_per_meter: 10.0,
            margin_px: 20,
            empty_extent: 20.0,
            background: Rgb([255, 255, 255]),
            point: Rgb([90, 90, 90]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Mapping,
    Inspection,
    Other,
}

impl Role {
    fn color(self) -> Rgb<u8> {
        match self {
            Role::Mapping => Rgb([240, 130, 0]),
            Role::Inspection => Rgb([30, 90, 230]),
            Role::Other => Rgb([40, 160, 60]),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub robot_id: String,
    pub role: Role,
    /// Map-frame positions in time order.
    pub points: Vec<Point>,
}

pub fn level_color(level: RadiationLevel) -> Rgb<u8> {
    match level {
        RadiationLevel::Red => Rgb([220, 20, 20]),
        RadiationLevel::Orange => Rgb([255, 140, 0]),
        RadiationLevel::Yellow => Rgb([235, 200, 0]),
    }
}

/// Ground-truth trajectories from pose records, expressed in the global map
/// frame named by the log header. Empty if the log has no header.
pub fn trajectories_from_log(log: &MissionLog) -> Vec<Trajectory> {
    let Some(header) = log.of_kind("header").next() else {
        return Vec::new();
    };
    let frame = &header.payload["world_frame_of"];
    let Ok(start) = serde_json::from_value::<Pose2D>(frame["start_pose"].clone()) else {
        return Vec::new();
    };
    let mapping = frame["mapping_robot"].as_str().unwrap_or_default();
    let inspection = header.payload["scenario_document"]["mission"]["inspection_robot"].as_str().unwrap_or_default();
    let world_to_map = start.inverse();
    let mut out: Vec<Trajectory> = Vec::new();
    for rec in log.of_kind("pose") {
        let (Some(id), Ok(truth)) = (
            rec.payload["robot_id"].as_str(),
            serde_json::from_value::<Pose2D>(rec.payload["truth"].clone()),
        ) else {
            continue;
        };
        let p = world_to_map.apply(truth.translation());
        match out.iter_mut().find(|t| t.robot_id == id) {
            Some(t) => t.points.push(p),
            None => out.push(Trajectory {
                robot_id: id.into(),
                role: if id == mapping {
                    Role::Mapping
                } else if id == inspection {
                    Role::Inspection
                } else {
                    Role::Other
                },
                points: vec![p],
            }),
        }
    }
    out
}

struct Canvas {
    img: RgbImage,
    min: Point,
    max_y: f64,
    scale: f64,
    margin: f64,
}

impl Canvas {
    fn to_px(&self, p: Point) -> (f64, f64) {
        (
            self.margin + (p.x - self.min.x) * self.scale,
            self.margin + (self.max_y - p.y) * self.scale,
        )
    }

    fn put(&mut self, x: i64, y: i64, c: Rgb<u8>) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, c);
        }
    }

    fn dot(&mut self, p: Point, radius: i64, c: Rgb<u8>) {
        let (x, y) = self.to_px(p);
        let (x, y) = (x.round() as i64, y.round() as i64);
        for dx in -radius..=radius {
            for dy in -radius..=radius {
                self.put(x + dx, y + dy, c);
            }
        }
    }

    fn line(&mut self, a: Point, b: Point, c: Rgb<u8>) {
        let (ax, ay) = self.to_px(a);
        let (bx, by) = self.to_px(b);
        let n = (bx - ax).abs().max((by - ay).abs()).ceil().max(1.0) as i64;
        for k in 0..=n {
            let t = k as f64 / n as f64;
            let (x, y) = ((ax + (bx - ax) * t).round() as i64, (ay + (by - ay) * t).round() as i64);
            self.put(x, y, c);
            self.put(x + 1, y, c);
            self.put(x, y + 1, c);
        }
    }
}

/// Draws map points in gray, annotated points in their level color on top,
/// and each trajectory in its role color. North is up.
pub fn render_map(map: &AnnotatedMap, trajectories: &[Trajectory], style: &RenderStyle) -> RgbImage {
    let all = map.points().iter().chain(trajectories.iter().flat_map(|t| t.points.iter()));
    let (mut min, mut max) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in all {
        min = Point::new(min.x.min(p.x), min.y.min(p.y));
        max = Point::new(max.x.max(p.x), max.y.max(p.y));
    }
    if !min.x.is_finite() {
        min = Point::new(0.0, 0.0);
        max = Point::new(style.empty_extent, style.empty_extent);
    }
    let scale = style.pixels_per_meter;
    let w = ((max.x - min.x) * scale).ceil() as u32 + 2 * style.margin_px + 1;
    let h = ((max.y - min.y) * scale).ceil() as u32 + 2 * style.margin_px + 1;
    let mut canvas = Canvas {
        img: RgbImage::from_pixel(w, h, style.background),
        min,
        max_y: max.y,
        scale,
        margin: style.margin_px as f64,
    };
    for p in map.points() {
        canvas.dot(*p, 0, style.point);
    }
    for t in trajectories {
        for seg in t.points.windows(2) {
            canvas.line(seg[0], seg[1], t.role.color());
        }
    }
    // Weakest first so red stays visible where levels overlap.
    let mut annotated: Vec<_> = map.annotations().iter().collect();
    annotated.sort_by_key(|(i, a)| (a.level, **i));
    for (i, a) in annotated {
        canvas.dot(map.points()[*i], 1, level_color(a.level));
    }
    canvas.img
}

#[cfg(test)]
mod tests {
    use super::*;
    use inspect_core::radiation::RadiationAnnotation;

    #[test]
    fn empty_map_gives_blank_canvas() {
        let style = RenderStyle::default();
        let img = render_map(&AnnotatedMap::new(0.1, "m"), &[], &style);
        assert_eq!(img.width(), 241);
        assert!(img.pixels().all(|p| *p == style.background));
    }

    #[test]
    fn annotated_points_use_level_colors() {
        let mut map = AnnotatedMap::new(0.1, "m");
        map.insert(Point::new(0.0, 0.0), 0.0);
        map.insert(Point::new(5.0, 3.0), 0.0);
        map.set_annotation(
            1,
            RadiationAnnotation {
                level: RadiationLevel::Red,
                observation_distance: 1.0,
                observed_at: 0.0,
            },
        );
        let style = RenderStyle::default();
        let img = render_map(&map, &[], &style);
        assert_eq!(*img.get_pixel(20, 50), style.point);
        assert_eq!(*img.get_pixel(70, 20), level_color(RadiationLevel::Red));
    }
}
