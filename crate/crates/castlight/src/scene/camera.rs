//! Pinhole camera with a world-from-camera rigid pose.
//!
//! Camera space: x right, y down, z forward (into the scene). Pixel (u, v)
//! addresses the sample point at integer coordinates, with the principal
//! point expressed in the same frame.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// World-from-camera rotation.
    pub rotation: Matrix3<f64>,
    /// World-from-camera translation; equals the camera center.
    pub translation: Vector3<f64>,
}

const ORTHONORMAL_TOL: f64 = 1e-6;

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::invariant(
                "focal lengths strictly positive",
                format!("fx = {fx}, fy = {fy}"),
            ));
        }
        if !(cx.is_finite() && cy.is_finite())
            || rotation.iter().any(|v| !v.is_finite())
            || translation.iter().any(|v| !v.is_finite())
        {
            return Err(Error::invariant("camera parameters finite", "non-finite entry"));
        }
        let gram = rotation.transpose() * rotation;
        let dev = (gram - Matrix3::identity()).abs().max();
        if dev > ORTHONORMAL_TOL {
            return Err(Error::invariant(
                "rotation orthonormal",
                format!("max |R^T R - I| = {dev:.3e}"),
            ));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::invariant(
                "rotation determinant +1",
                format!("det = {det}"),
            ));
        }
        Ok(Camera { fx, fy, cx, cy, width, height, rotation, translation })
    }

    /// Camera looking from `eye` toward `target`, world +y treated as up.
    pub fn look_at(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        eye: Vector3<f64>,
        target: Vector3<f64>,
    ) -> Result<Self> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidParameter("camera eye coincides with target".into()))?;
        let world_up = Vector3::new(0.0, 1.0, 0.0);
        let right = forward
            .cross(&world_up)
            .try_normalize(1e-9)
            .unwrap_or_else(|| Vector3::new(1.0, 0.0, 0.0));
        let down = forward.cross(&right);
        let rotation = Matrix3::from_columns(&[right, down, forward]);
        Camera::new(fx, fy, cx, cy, width, height, rotation, eye)
    }

    /// World-space camera center (the pose applied to the origin).
    pub fn center(&self) -> Vector3<f64> {
        self.translation
    }

    /// World-space up direction of the camera (-y in camera space).
    pub fn up_world(&self) -> Vector3<f64> {
        self.rotation * Vector3::new(0.0, -1.0, 0.0)
    }

    /// Unit ray through pixel (u, v): returns (origin, direction).
    pub fn pixel_ray(&self, u: f64, v: f64) -> (Vector3<f64>, Vector3<f64>) {
        let dir_cam = Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        let dir = (self.rotation * dir_cam).normalize();
        (self.translation, dir)
    }

    /// Backproject pixel (u, v) at `depth` measured along the camera ray.
    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        let (origin, dir) = self.pixel_ray(u, v);
        origin + dir * depth
    }

    /// Project a world point; `None` if it lies at or behind the camera plane.
    pub fn project(&self, world: &Vector3<f64>) -> Option<(f64, f64)> {
        let cam = self.rotation.transpose() * (world - self.translation);
        if cam.z <= 0.0 {
            return None;
        }
        Some((self.fx * cam.x / cam.z + self.cx, self.fy * cam.y / cam.z + self.cy))
    }
}
