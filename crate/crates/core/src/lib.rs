//! Geometry, losses, masks and metrics for self-supervised multi-frame depth
//! estimation, checked against ray-cast synthetic scenes.
//!
//! The crate is organised as a pipeline:
//!
//! - [`geometry`]: pinhole projection, inverse warping, the over-fit depth
//!   solver and RANSAC ground-plane fitting.
//! - [`photometric`]: SSIM, photometric error, minimum re-projection and
//!   edge-aware smoothness.
//! - [`costvolume`]: plane-sweep L1 cost volumes, depth hints and the
//!   consistency mask.
//! - [`dynmask`]: median alignment and the depth-inconsistency masks.
//! - [`distill`]: robust gating, consistency loss and the final loss.
//! - [`fusion`]: forward pass of the multi-scale feature fusion block.
//! - [`metrics`]: depth evaluation statistics.
//! - [`synth`]: synthetic scenes with exact depth and object ids.

pub mod camera;
pub mod costvolume;
pub mod distill;
pub mod dynmask;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod photometric;
pub mod raster;
pub mod stats;
pub mod synth;

pub use camera::{CameraIntrinsics, ObjectMotion, RigidPose};
pub use error::{Error, Result};
pub use raster::{BinaryMask, DepthMap, ImagePlane};
