//! Deterministic two-robot inspection mission simulator.
//!
//! Geometry and registration are generic over the scalar (`f32`/`f64`, with
//! exact rational orientation predicates); the simulation layers run in
//! `f64`. The aliases below name the common concrete types.

pub mod fleet;
pub mod geometry;
pub mod navigation;
pub mod netsim;
pub mod radiation;
pub mod registration;
pub mod scalar;
pub mod scenario;
pub mod sensors;
pub mod world;

pub use geometry::{Point2, Transform2D as Transform2DOf};
pub use scalar::Real;

pub type Point = geometry::Point2<f64>;
pub type Transform2D = geometry::Transform2D<f64>;
pub type Pose2D = geometry::Transform2D<f64>;
pub type PointCloud = registration::PointCloud<f64>;
pub type AnnotatedMap = registration::AnnotatedMap<f64>;

pub type Point32 = geometry::Point2<f32>;
pub type Transform2D32 = geometry::Transform2D<f32>;
pub type PointCloud32 = registration::PointCloud<f32>;
pub type AnnotatedMap32 = registration::AnnotatedMap<f32>;
