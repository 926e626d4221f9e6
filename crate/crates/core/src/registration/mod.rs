//! Scan registration and map maintenance: ICP, voxel maps with per-point
//! intensity descriptors, guess-seeded relocalization and map merging.

mod cloud;
mod export;
mod grid;
mod icp;
mod map;
mod relocalize;

pub use cloud::{voxel_downsample, PointCloud};
pub use export::{decode_map, encode_map, export_text, MapFormatError, MAP_FORMAT_VERSION, MAP_MAGIC, POINT_RECORD_BYTES};
pub use grid::NeighborGrid;
pub use icp::{icp_register, IcpOutcome, IcpParams, IcpTarget};
pub use map::{AnnotatedMap, VoxelKey};
pub use relocalize::{relocalize, RelocalizeFailure, RelocalizeParams, Relocalized};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistrationError {
    #[error("{which} cloud has {count} points; at least 3 are required")]
    InsufficientPoints { which: &'static str, count: usize },
    #[error("insufficient overlap: {correspondences} correspondences at iteration {iteration}")]
    InsufficientOverlap { iteration: usize, correspondences: usize },
}
