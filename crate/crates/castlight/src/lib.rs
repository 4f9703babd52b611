//! Differentiable Blinn-Phong rendering of oriented point clouds with hard
//! cast shadows, and gradient-descent estimation of a point light's position
//! (optionally intensity and ambient) from a single image.
//!
//! The pipeline is: depth map -> oriented point cloud -> forward render with
//! cube-map shadows -> analytic shading Jacobian plus finite-difference
//! shadow Jacobian -> fixed-rate gradient descent on the light parameters.

pub mod error;
pub mod estimate;
pub mod grad;
pub mod io;
pub mod oracle;
pub mod render;
pub mod scene;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
