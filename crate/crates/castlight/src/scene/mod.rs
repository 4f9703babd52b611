//! Scene representation: geometry as a pixel-aligned oriented point cloud,
//! a pinhole camera, and per-pixel material maps.

mod camera;
mod cloud;
mod depth;
mod materials;
mod normalize;

pub use camera::Camera;
pub use cloud::{OrientedPointCloud, UNIT_NORMAL_TOL};
pub use depth::{depth_to_cloud, DepthMap};
pub use materials::MaterialMaps;
pub use normalize::{normalization_frame, normalize_scene, SimilarityTransform};

use crate::error::{Error, Result};

/// Fixed, known inputs of the estimation problem: geometry plus materials.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub cloud: OrientedPointCloud,
    pub camera: Camera,
    pub materials: MaterialMaps,
}

impl Scene {
    pub fn new(cloud: OrientedPointCloud, camera: Camera, materials: MaterialMaps) -> Result<Self> {
        if materials.width != cloud.width || materials.height != cloud.height {
            return Err(Error::DimensionMismatch {
                what: "materials vs point cloud",
                expected_w: cloud.width,
                expected_h: cloud.height,
                got_w: materials.width,
                got_h: materials.height,
            });
        }
        Ok(Scene { cloud, camera, materials })
    }

    pub fn width(&self) -> usize {
        self.cloud.width
    }

    pub fn height(&self) -> usize {
        self.cloud.height
    }

    /// Same geometry and camera with different material maps.
    pub fn with_materials(&self, materials: MaterialMaps) -> Result<Scene> {
        Scene::new(self.cloud.clone(), self.camera.clone(), materials)
    }
}
