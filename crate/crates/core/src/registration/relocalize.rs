use serde::{Deserialize, Serialize};

use super::{AnnotatedMap, IcpOutcome, IcpParams, IcpTarget, PointCloud};
use crate::geometry::Transform2D;
use crate::scalar::Real;

/// Search grid around the operator's guess and acceptance thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RelocalizeParams<T> {
    /// Positions per side of the square grid (odd, centered on the guess).
    pub grid_positions: usize,
    pub grid_spacing: T,
    pub headings: usize,
    pub accept_residual: T,
    pub min_inlier_fraction: T,
    pub icp: IcpParams<T>,
}

impl<T: Real> Default for RelocalizeParams<T> {
    fn default() -> Self {
        Self {
            grid_positions: 3,
            grid_spacing: T::lit(1.0),
            headings: 8,
            accept_residual: T::lit(0.15),
            min_inlier_fraction: T::lit(0.6),
            icp: IcpParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Relocalized<T> {
    /// Scan frame expressed in the map frame.
    pub pose: Transform2D<T>,
    pub mean_residual: T,
    pub inlier_fraction: T,
    pub candidate_index: usize,
}

/// No candidate met the thresholds. `best_residual` is infinite when no
/// candidate registered at all.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("relocalization failed: best residual {best_residual}")]
pub struct RelocalizeFailure<T: std::fmt::Display + std::fmt::Debug> {
    pub best_residual: T,
    pub best_pose: Option<Transform2D<T>>,
}

impl<T: Real> RelocalizeParams<T> {
    /// Seeds in deterministic order: heading-major, then x, then y offsets.
    pub fn candidates(&self, guess: &Transform2D<T>) -> Vec<Transform2D<T>> {
        let half = (self.grid_positions / 2) as i64;
        let mut out = Vec::with_capacity(self.grid_positions * self.grid_positions * self.headings);
        for h in 0..self.headings {
            let dtheta = T::TAU() * T::from_usize(h).unwrap() / T::from_usize(self.headings.max(1)).unwrap();
            for ix in -half..=half {
                for iy in -half..=half {
                    out.push(Transform2D::new(
                        guess.x + self.grid_spacing * T::from_i64(ix).unwrap(),
                        guess.y + self.grid_spacing * T::from_i64(iy).unwrap(),
                        guess.theta + dtheta,
                    ));
                }
            }
        }
        out
    }
}

/// Registers `scan_cloud` against `map` from every seed around
/// `coarse_guess`. Among candidates meeting both thresholds the lowest
/// residual wins; on failure the overall lowest residual is reported.
pub fn relocalize<T: Real>(
    map: &AnnotatedMap<T>,
    scan_cloud: &PointCloud<T>,
    coarse_guess: Transform2D<T>,
    params: &RelocalizeParams<T>,
) -> Result<Relocalized<T>, RelocalizeFailure<T>> {
    let target = IcpTarget::new(map.points(), params.icp.max_correspondence_dist);
    let mut best: Option<(usize, IcpOutcome<T>)> = None;
    let mut accepted: Option<(usize, IcpOutcome<T>)> = None;
    for (i, seed) in params.candidates(&coarse_guess).into_iter().enumerate() {
        let Ok(outcome) = target.register(scan_cloud, seed, &params.icp) else {
            continue;
        };
        let passes = outcome.mean_residual < params.accept_residual && outcome.inlier_fraction > params.min_inlier_fraction;
        if passes && accepted.as_ref().is_none_or(|(_, b)| outcome.mean_residual < b.mean_residual) {
            accepted = Some((i, outcome.clone()));
        }
        if best.as_ref().is_none_or(|(_, b)| outcome.mean_residual < b.mean_residual) {
            best = Some((i, outcome));
        }
    }
    if let Some((i, b)) = accepted {
        return Ok(Relocalized {
            pose: b.transform,
            mean_residual: b.mean_residual,
            inlier_fraction: b.inlier_fraction,
            candidate_index: i,
        });
    }
    match best {
        Some((_, b)) => Err(RelocalizeFailure {
            best_residual: b.mean_residual,
            best_pose: Some(b.transform),
        }),
        None => Err(RelocalizeFailure {
            best_residual: T::infinity(),
            best_pose: None,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    fn room() -> Vec<Point2<f64>> {
        let mut pts = Vec::new();
        let corners = [(0.0, 0.0), (8.0, 0.0), (8.0, 5.0), (3.0, 5.0), (3.0, 7.0), (0.0, 7.0)];
        for k in 0..corners.len() {
            let (a, b) = (corners[k], corners[(k + 1) % corners.len()]);
            let len = ((b.0 - a.0) as f64).hypot(b.1 - a.1);
            let n = (len / 0.05) as usize;
            for i in 0..n {
                let t = i as f64 / n as f64;
                pts.push(Point2::new(a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t));
            }
        }
        pts
    }

    #[test]
    fn identity_guess_on_own_map() {
        let mut map = AnnotatedMap::new(0.1, "r");
        let cloud = PointCloud::new(room(), "scan");
        map.update_map(&cloud, &Transform2D::identity());
        let out = relocalize(&map, &cloud, Transform2D::identity(), &RelocalizeParams::default()).unwrap();
        assert!(out.pose.translation().norm() < 0.05 && out.pose.theta.abs() < 0.01);
    }

    #[test]
    fn candidate_grid_shape() {
        let c = RelocalizeParams::<f64>::default().candidates(&Transform2D::identity());
        assert_eq!(c.len(), 72);
        assert_eq!(c[4], Transform2D::identity());
    }

    #[test]
    fn far_guess_fails_with_residual() {
        let mut map = AnnotatedMap::new(0.1, "r");
        let cloud = PointCloud::new(room(), "scan");
        map.update_map(&cloud, &Transform2D::identity());
        let err = relocalize(&map, &cloud, Transform2D::new(60.0, 0.0, 0.0), &RelocalizeParams::default()).unwrap_err();
        assert!(err.best_residual.is_infinite() || err.best_residual >= 0.15);
    }
}
