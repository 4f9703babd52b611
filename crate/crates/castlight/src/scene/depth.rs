//! Depth maps and backprojection into oriented point clouds.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scene::camera::Camera;
use crate::scene::cloud::OrientedPointCloud;

/// Per-pixel depth measured along the camera ray, with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depth: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if depth.len() != width * height || valid.len() != width * height {
            return Err(Error::DimensionMismatch {
                what: "depth buffers",
                expected_w: width,
                expected_h: height,
                got_w: depth.len(),
                got_h: valid.len(),
            });
        }
        for (i, (&d, &ok)) in depth.iter().zip(&valid).enumerate() {
            if ok && !(d.is_finite() && d > 0.0) {
                return Err(Error::invariant(
                    "valid depths finite and strictly positive",
                    format!("pixel {i}: depth = {d}"),
                ));
            }
        }
        Ok(DepthMap { width, height, depth, valid })
    }

    /// Build from a flat buffer where non-finite or non-positive entries mark
    /// invalid pixels (the usual sensor convention).
    pub fn from_raw(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        let valid: Vec<bool> = depth.iter().map(|d| d.is_finite() && *d > 0.0).collect();
        DepthMap::new(width, height, depth, valid)
    }

    pub fn idx(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }
}

/// Backproject a depth map through the camera and derive per-pixel normals
/// from central differences of the neighboring backprojected points.
///
/// A pixel needs all four direct neighbors valid to get a normal; everything
/// else (borders, pixels next to holes, degenerate tangents) is marked
/// invalid in the output. Normals are oriented toward the camera.
pub fn depth_to_cloud(depth: &DepthMap, camera: &Camera) -> Result<OrientedPointCloud> {
    if depth.width != camera.width || depth.height != camera.height {
        return Err(Error::DimensionMismatch {
            what: "depth map vs camera",
            expected_w: camera.width,
            expected_h: camera.height,
            got_w: depth.width,
            got_h: depth.height,
        });
    }
    let (w, h) = (depth.width, depth.height);
    let n = w * h;
    let mut points = vec![Vector3::zeros(); n];
    let mut point_ok = vec![false; n];
    for v in 0..h {
        for u in 0..w {
            let i = depth.idx(u, v);
            if depth.valid[i] {
                points[i] = camera.backproject(u as f64, v as f64, depth.depth[i]);
                point_ok[i] = true;
            }
        }
    }
    if !point_ok.iter().any(|&ok| ok) {
        return Err(Error::NoValidPixels("depth map"));
    }

    let cam_center = camera.center();
    let mut normals = vec![Vector3::zeros(); n];
    let mut valid = vec![false; n];
    let mut any_valid = false;
    for v in 0..h {
        for u in 0..w {
            let i = depth.idx(u, v);
            if !point_ok[i] || u == 0 || v == 0 || u + 1 >= w || v + 1 >= h {
                continue;
            }
            let (l, r) = (depth.idx(u - 1, v), depth.idx(u + 1, v));
            let (t, b) = (depth.idx(u, v - 1), depth.idx(u, v + 1));
            if !(point_ok[l] && point_ok[r] && point_ok[t] && point_ok[b]) {
                continue;
            }
            let tangent_u = points[r] - points[l];
            let tangent_v = points[b] - points[t];
            let Some(mut normal) = tangent_u.cross(&tangent_v).try_normalize(1e-12) else {
                continue;
            };
            if normal.dot(&(cam_center - points[i])) < 0.0 {
                normal = -normal;
            }
            normals[i] = normal;
            valid[i] = true;
            any_valid = true;
        }
    }
    if !any_valid {
        return Err(Error::NoValidPixels("point cloud (no pixel has a valid 4-neighborhood)"));
    }
    OrientedPointCloud::new(w, h, points, normals, valid)
}
