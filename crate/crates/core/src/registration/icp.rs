use serde::{Deserialize, Serialize};

use super::grid::NeighborGrid;
use super::{PointCloud, RegistrationError};
use crate::geometry::{Point2, Transform2D};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct IcpParams<T> {
    pub max_iterations: usize,
    pub max_correspondence_dist: T,
    /// Fraction of correspondences kept, closest first.
    pub trim_ratio: T,
    pub convergence_translation: T,
    pub convergence_rotation: T,
}

impl<T: Real> Default for IcpParams<T> {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            max_correspondence_dist: T::lit(1.0),
            trim_ratio: T::lit(0.9),
            convergence_translation: T::lit(1e-4),
            convergence_rotation: T::lit(1e-4),
        }
    }
}

impl<T: Real> IcpParams<T> {
    pub fn validate(&self) -> Result<(), String> {
        let positive = self.max_iterations > 0
            && self.max_correspondence_dist > T::zero()
            && self.trim_ratio > T::zero()
            && self.convergence_translation > T::zero()
            && self.convergence_rotation > T::zero();
        if !positive {
            return Err("ICP parameters must all be positive".into());
        }
        if self.trim_ratio > T::one() {
            return Err("trim_ratio must be <= 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcpOutcome<T> {
    /// Maps source coordinates into the target frame.
    pub transform: Transform2D<T>,
    /// Mean distance over kept correspondences at the final transform.
    pub mean_residual: T,
    pub converged: bool,
    pub iterations: usize,
    /// Share of source points with a correspondence at the final transform.
    pub inlier_fraction: T,
    /// Kept-correspondence mean residual at each iterate, ending with the
    /// final one.
    pub residual_history: Vec<T>,
}

/// Target cloud with its search grid, reusable across many registrations.
pub struct IcpTarget<'a, T> {
    points: &'a [Point2<T>],
    grid: NeighborGrid<T>,
    cell: T,
}

struct Correspondences<T> {
    kept: Vec<(Point2<T>, Point2<T>)>,
    mean: T,
    matched: usize,
}

impl<'a, T: Real> IcpTarget<'a, T> {
    pub fn new(points: &'a [Point2<T>], max_correspondence_dist: T) -> Self {
        Self {
            points,
            grid: NeighborGrid::new(points, max_correspondence_dist),
            cell: max_correspondence_dist,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn correspond(&self, source: &[Point2<T>], pose: &Transform2D<T>, params: &IcpParams<T>) -> Correspondences<T> {
        let max_dist = params.max_correspondence_dist;
        let mut pairs: Vec<(T, usize, Point2<T>, Point2<T>)> = source
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let moved = pose.apply(*p);
                self.grid
                    .nearest(self.points, moved, max_dist)
                    .map(|(j, d2)| (d2.sqrt(), i, moved, self.points[j]))
            })
            .collect();
        let matched = pairs.len();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        let keep = (T::from_usize(matched).unwrap() * params.trim_ratio)
            .ceil()
            .to_usize()
            .unwrap_or(matched)
            .min(matched);
        pairs.truncate(keep);
        let mean = if keep == 0 {
            T::infinity()
        } else {
            pairs.iter().fold(T::zero(), |acc, p| acc + p.0) / T::from_usize(keep).unwrap()
        };
        Correspondences {
            kept: pairs.into_iter().map(|(_, _, s, t)| (s, t)).collect(),
            mean,
            matched,
        }
    }

    /// Point-to-point ICP from `initial`.
    pub fn register(
        &self,
        source: &PointCloud<T>,
        initial: Transform2D<T>,
        params: &IcpParams<T>,
    ) -> Result<IcpOutcome<T>, RegistrationError> {
        if source.len() < 3 {
            return Err(RegistrationError::InsufficientPoints {
                which: "source",
                count: source.len(),
            });
        }
        if self.points.len() < 3 {
            return Err(RegistrationError::InsufficientPoints {
                which: "target",
                count: self.points.len(),
            });
        }
        debug_assert!(self.cell == params.max_correspondence_dist);
        let mut current = initial;
        let mut history = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        while iterations < params.max_iterations {
            let corr = self.correspond(&source.points, &current, params);
            if corr.kept.len() < 3 {
                return Err(RegistrationError::InsufficientOverlap {
                    iteration: iterations,
                    correspondences: corr.kept.len(),
                });
            }
            history.push(corr.mean);
            iterations += 1;
            let delta = solve_rigid(&corr.kept);
            current = delta.compose(&current);
            if delta.translation().norm() < params.convergence_translation && delta.theta.abs() < params.convergence_rotation {
                converged = true;
                break;
            }
        }
        let last = self.correspond(&source.points, &current, params);
        if last.kept.len() < 3 {
            return Err(RegistrationError::InsufficientOverlap {
                iteration: iterations,
                correspondences: last.kept.len(),
            });
        }
        history.push(last.mean);
        Ok(IcpOutcome {
            transform: current,
            mean_residual: last.mean,
            converged,
            iterations,
            inlier_fraction: T::from_usize(last.matched).unwrap() / T::from_usize(source.len()).unwrap(),
            residual_history: history,
        })
    }
}

/// Registers `source` onto `target` starting from `initial`.
pub fn icp_register<T: Real>(
    source: &PointCloud<T>,
    target: &PointCloud<T>,
    initial: Transform2D<T>,
    params: &IcpParams<T>,
) -> Result<IcpOutcome<T>, RegistrationError> {
    IcpTarget::new(&target.points, params.max_correspondence_dist).register(source, initial, params)
}

// Closed-form least-squares rigid motion taking each pair's first point
// onto its second.
fn solve_rigid<T: Real>(pairs: &[(Point2<T>, Point2<T>)]) -> Transform2D<T> {
    let n = T::from_usize(pairs.len()).unwrap();
    let (mut cs, mut ct) = (Point2::zero(), Point2::zero());
    for (s, t) in pairs {
        cs = cs + *s;
        ct = ct + *t;
    }
    cs = cs * (T::one() / n);
    ct = ct * (T::one() / n);
    let (mut dot, mut cross) = (T::zero(), T::zero());
    for (s, t) in pairs {
        let (a, b) = (*s - cs, *t - ct);
        dot += a.dot(b);
        cross += a.cross(b);
    }
    let theta = cross.atan2(dot);
    let rot = Transform2D::new(T::zero(), T::zero(), theta);
    let t = ct - rot.rotate(cs);
    Transform2D::new(t.x, t.y, theta)
}
