//! Per-pixel shading geometry for one light: light/view directions, the
//! halfway vector, and the clamped dot products that drive Blinn-Phong.

use nalgebra::Vector3;

use crate::render::PointLight;
use crate::scene::Scene;

/// Distance below which a surface point counts as coincident with the light
/// or camera and the pixel is dropped from shading.
pub const COINCIDENT_EPS: f64 = 1e-9;

/// Shading geometry of a single pixel.
#[derive(Debug, Clone, Copy)]
pub struct PixelFrame {
    /// Unit direction surface -> light.
    pub omega_l: Vector3<f64>,
    /// Unit direction surface -> camera.
    pub omega_v: Vector3<f64>,
    /// Unit halfway vector, or zero when omega_l ~ -omega_v.
    pub halfway: Vector3<f64>,
    /// |omega_l + omega_v| before normalization (0 when degenerate).
    pub half_len: f64,
    /// max(0, omega_l . n)
    pub dot_diffuse: f64,
    /// max(0, halfway . n)
    pub dot_specular: f64,
    /// Distance from the surface point to the light.
    pub distance: f64,
    /// Unit surface normal (kept for differentiating the dot products).
    pub normal: Vector3<f64>,
}

/// Build the shading geometry for one surface sample, or `None` when the
/// point coincides with the light or the camera.
pub fn pixel_frame(
    point: &Vector3<f64>,
    normal: &Vector3<f64>,
    cam_center: &Vector3<f64>,
    light_pos: &Vector3<f64>,
) -> Option<PixelFrame> {
    let to_light = light_pos - point;
    let to_cam = cam_center - point;
    let distance = to_light.norm();
    let view_dist = to_cam.norm();
    if distance < COINCIDENT_EPS || view_dist < COINCIDENT_EPS {
        return None;
    }
    let omega_l = to_light / distance;
    let omega_v = to_cam / view_dist;
    let half_sum = omega_l + omega_v;
    let half_len = half_sum.norm();
    let halfway = if half_len > COINCIDENT_EPS { half_sum / half_len } else { Vector3::zeros() };
    Some(PixelFrame {
        omega_l,
        omega_v,
        halfway,
        half_len,
        dot_diffuse: omega_l.dot(normal).max(0.0),
        dot_specular: halfway.dot(normal).max(0.0),
        distance,
        normal: *normal,
    })
}

/// Per-pixel shading frames for a whole scene under one light.
#[derive(Debug, Clone)]
pub struct ShadingFrame {
    pub width: usize,
    pub height: usize,
    pub frames: Vec<Option<PixelFrame>>,
}

impl ShadingFrame {
    pub fn valid(&self, i: usize) -> bool {
        self.frames[i].is_some()
    }
}

pub fn build_shading_frame(scene: &Scene, light: &PointLight) -> ShadingFrame {
    let cam_center = scene.camera.center();
    let frames = scene
        .cloud
        .valid
        .iter()
        .enumerate()
        .map(|(i, &ok)| {
            if ok {
                pixel_frame(&scene.cloud.points[i], &scene.cloud.normals[i], &cam_center, &light.position)
            } else {
                None
            }
        })
        .collect();
    ShadingFrame { width: scene.width(), height: scene.height(), frames }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::SplitMix64;

    #[test]
    fn coincident_directions_give_unit_dots() {
        let f = pixel_frame(
            &Vector3::zeros(),
            &Vector3::new(0.0, 0.0, 1.0),
            &Vector3::new(0.0, 0.0, 1.0),
            &Vector3::new(0.0, 0.0, 1.0),
        )
        .unwrap();
        let z = Vector3::new(0.0, 0.0, 1.0);
        assert!((f.omega_l - z).norm() < 1e-12);
        assert!((f.omega_v - z).norm() < 1e-12);
        assert!((f.halfway - z).norm() < 1e-12);
        assert!((f.dot_diffuse - 1.0).abs() < 1e-12);
        assert!((f.dot_specular - 1.0).abs() < 1e-12);
    }

    #[test]
    fn light_behind_surface_clamps_diffuse() {
        let f = pixel_frame(
            &Vector3::zeros(),
            &Vector3::new(0.0, 0.0, 1.0),
            &Vector3::new(0.0, 0.0, 2.0),
            &Vector3::new(0.0, 0.0, -3.0),
        )
        .unwrap();
        assert_eq!(f.dot_diffuse, 0.0);
    }

    #[test]
    fn point_coincident_with_light_is_dropped() {
        let p = Vector3::new(0.1, 0.2, 0.3);
        assert!(pixel_frame(&p, &Vector3::new(0.0, 0.0, 1.0), &Vector3::new(0.0, 0.0, 2.0), &p).is_none());
    }

    #[test]
    fn halfway_bisects_light_and_view() {
        let mut rng = SplitMix64::new(0xbeef);
        for _ in 0..200 {
            let p = Vector3::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0), rng.range(-1.0, 1.0));
            let c = p + rng.unit_vector() * rng.range(0.5, 3.0);
            let l = p + rng.unit_vector() * rng.range(0.5, 3.0);
            let n = rng.unit_vector();
            let f = pixel_frame(&p, &n, &c, &l).unwrap();
            if f.half_len < 1e-6 {
                continue;
            }
            let a_l = f.halfway.dot(&f.omega_l).clamp(-1.0, 1.0).acos();
            let a_v = f.halfway.dot(&f.omega_v).clamp(-1.0, 1.0).acos();
            assert!((a_l - a_v).abs() < 1e-6, "bisector violated: {a_l} vs {a_v}");
            assert!((f.omega_l.norm() - 1.0).abs() < 1e-6);
            assert!((f.omega_v.norm() - 1.0).abs() < 1e-6);
            assert!((f.halfway.norm() - 1.0).abs() < 1e-6);
            assert!((0.0..=1.0).contains(&f.dot_diffuse));
            assert!((0.0..=1.0).contains(&f.dot_specular));
        }
    }
}
