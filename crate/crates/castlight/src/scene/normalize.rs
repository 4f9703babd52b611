//! Scene normalization into the unit cube.
//!
//! Fixed-step gradient descent only has a meaningful step size on a known
//! scale, so estimation works on scenes whose valid points fit the unit cube
//! centered at the origin. The returned transform maps normalized
//! coordinates back to the input units.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scene::Scene;

/// Uniform scale followed by translation: `apply(p) = p * scale + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub offset: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform { scale: 1.0, offset: Vector3::zeros() }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p * self.scale + self.offset
    }

    pub fn inverse(&self) -> SimilarityTransform {
        SimilarityTransform { scale: 1.0 / self.scale, offset: -self.offset / self.scale }
    }
}

/// Largest side of the valid-point bounding box and its center. The
/// normalized scene is `(p - center) / side`.
pub fn normalization_frame(scene: &Scene) -> Result<(f64, Vector3<f64>)> {
    let (lo, hi) = scene.cloud.bounds()?;
    let extent = hi - lo;
    let side = extent.x.max(extent.y).max(extent.z);
    let side = if side > 0.0 { side } else { 1.0 }; // single-point scene
    Ok((side, (lo + hi) * 0.5))
}

/// Rescale the scene so its valid points fit the unit cube centered at the
/// origin. Returns the normalized copy and the transform back to input units.
pub fn normalize_scene(scene: &Scene) -> Result<(Scene, SimilarityTransform)> {
    let (side, center) = normalization_frame(scene)?;
    let s = 1.0 / side;
    let mut out = scene.clone();
    for (i, ok) in scene.cloud.valid.iter().enumerate() {
        if *ok {
            out.cloud.points[i] = (scene.cloud.points[i] - center) * s;
        }
    }
    out.camera.translation = (scene.camera.translation - center) * s;
    Ok((out, SimilarityTransform { scale: side, offset: center }))
}
