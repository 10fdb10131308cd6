//! Geometric saliency estimation for 3D point clouds of natural
//! environments.
//!
//! A small 3D convolutional encoder-decoder is trained, per scene, to
//! reconstruct a voxelized surface patch from the patch's outer shell.
//! Regions the network cannot reconstruct are anomalies with respect to the
//! prevalent surface; the per-point reconstruction error is the saliency
//! score. Plane-fit and handcrafted normal/curvature baselines plus a
//! saliency-ratio evaluation harness round out the pipeline.

pub mod baseline;
pub mod checkpoint;
pub mod cloud;
pub mod error;
pub mod eval;
pub mod index;
pub mod infer;
pub mod io;
pub mod loss;
pub mod net;
pub mod region;
pub mod scene;
pub mod tensor;
pub mod train;
pub mod voxel;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use index::{Aabb, SpatialIndex};
pub use net::{ArchSpec, NetworkParams};
pub use region::{Label, Region, RegionSet, Role};
pub use voxel::{GridKind, VoxelGrid};
