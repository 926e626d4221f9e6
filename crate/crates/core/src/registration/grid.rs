use std::collections::HashMap;

use crate::geometry::Point2;
use crate::scalar::Real;

/// Uniform hash grid over a fixed point set for radius-bounded nearest
/// neighbor queries.
#[derive(Clone, Debug)]
pub struct NeighborGrid<T> {
    cell: T,
    cells: HashMap<(i64, i64), Vec<u32>>,
}

impl<T: Real> NeighborGrid<T> {
    pub fn new(points: &[Point2<T>], cell: T) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(cell, *p)).or_default().push(i as u32);
        }
        Self { cell, cells }
    }

    fn key(cell: T, p: Point2<T>) -> (i64, i64) {
        ((p.x / cell).floor().to_i64().unwrap_or(0), (p.y / cell).floor().to_i64().unwrap_or(0))
    }

    /// Nearest point within `max_dist` (inclusive) as `(index, squared
    /// distance)`. Equidistant candidates resolve to the lowest index.
    pub fn nearest(&self, points: &[Point2<T>], query: Point2<T>, max_dist: T) -> Option<(usize, T)> {
        let reach = (max_dist / self.cell).ceil().to_i64().unwrap_or(1).max(1);
        let (cx, cy) = Self::key(self.cell, query);
        let limit = max_dist * max_dist;
        let mut best: Option<(usize, T)> = None;
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                let Some(bucket) = self.cells.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &idx in bucket {
                    let idx = idx as usize;
                    let d2 = points[idx].distance_squared(query);
                    if d2 > limit {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((bi, bd)) => d2 < bd || (d2 == bd && idx < bi),
                    };
                    if better {
                        best = Some((idx, d2));
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_brute_force() {
        let pts: Vec<Point2<f64>> = (0..200)
            .map(|i| {
                let t = i as f64 * 0.37;
                Point2::new((t * 1.3).sin() * 5.0, (t * 0.7).cos() * 5.0)
            })
            .collect();
        let grid = NeighborGrid::new(&pts, 1.0);
        for j in 0..100 {
            let q = Point2::new(j as f64 * 0.1 - 5.0, (j as f64 * 0.9).sin() * 4.0);
            let brute = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, p.distance_squared(q)))
                .filter(|(_, d)| *d <= 1.0)
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            assert_eq!(grid.nearest(&pts, q, 1.0), brute);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let pts = vec![Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0)];
        let grid = NeighborGrid::new(&pts, 2.0);
        assert_eq!(grid.nearest(&pts, Point2::new(0.0, 0.0), 2.0).unwrap().0, 0);
        let pts = vec![Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)];
        let grid = NeighborGrid::new(&pts, 2.0);
        assert_eq!(grid.nearest(&pts, Point2::new(0.0, 0.0), 2.0).unwrap().0, 0);
    }
}
