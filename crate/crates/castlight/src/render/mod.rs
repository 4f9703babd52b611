//! Forward rendering: Blinn-Phong shading of an oriented point cloud under
//! point lights, with optional hard cast shadows from cube shadow maps.
//!
//! Radiometry is deliberately minimal: no distance falloff, no tone mapping.
//! Per pixel with normal N, unit light direction w_l, unit view direction
//! w_v and halfway H = normalize(w_l + w_v):
//!
//!   I = k_d * L_a + sum_i S_i * I_i * (k_d * max(0, w_l.N) + k_s * max(0, H.N)^alpha)
//!
//! S_i is the binary shadow term of light i (identically 1 for the
//! shadowless model variants).

mod frame;
mod image;
mod shadow;

pub use frame::{build_shading_frame, pixel_frame, PixelFrame, ShadingFrame, COINCIDENT_EPS};
pub use image::Image;
pub use shadow::{
    render_shadow_map, shadow_term, ShadowBuffer, ShadowConfig, ShadowMap, DEFAULT_BIAS_FRACTION,
};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLight {
    pub position: Vector3<f64>,
    pub intensity: f64,
}

impl PointLight {
    pub fn new(position: Vector3<f64>, intensity: f64) -> Result<Self> {
        if !position.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite light position {position:?}")));
        }
        if !intensity.is_finite() || intensity < 0.0 {
            return Err(Error::InvalidParameter(format!("light intensity must be finite and >= 0, got {intensity}")));
        }
        Ok(PointLight { position, intensity })
    }
}

/// All lighting unknowns of the model: point lights plus a constant ambient.
#[derive(Debug, Clone, PartialEq)]
pub struct LightParams {
    pub lights: Vec<PointLight>,
    pub ambient: f64,
}

impl LightParams {
    pub fn new(lights: Vec<PointLight>, ambient: f64) -> Result<Self> {
        if !ambient.is_finite() || ambient < 0.0 {
            return Err(Error::InvalidParameter(format!("ambient must be finite and >= 0, got {ambient}")));
        }
        Ok(LightParams { lights, ambient })
    }

    pub fn single(position: Vector3<f64>, intensity: f64, ambient: f64) -> Result<Self> {
        Ok(LightParams { lights: vec![PointLight::new(position, intensity)?], ambient: Self::checked_ambient(ambient)? })
    }

    fn checked_ambient(ambient: f64) -> Result<f64> {
        if !ambient.is_finite() || ambient < 0.0 {
            return Err(Error::InvalidParameter(format!("ambient must be finite and >= 0, got {ambient}")));
        }
        Ok(ambient)
    }
}

/// Which terms of the image formation model are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Diffuse + ambient only, no shadows.
    DiffuseAmbient,
    /// Diffuse + specular + ambient, no shadows.
    DiffuseSpecular,
    /// Diffuse + specular + ambient with hard cast shadows.
    FullShadows,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] =
        [ModelKind::DiffuseAmbient, ModelKind::DiffuseSpecular, ModelKind::FullShadows];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DiffuseAmbient => "diffuse-ambient",
            ModelKind::DiffuseSpecular => "diffuse-specular",
            ModelKind::FullShadows => "full-shadows",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl ModelKind {
    pub fn uses_specular(self) -> bool {
        !matches!(self, ModelKind::DiffuseAmbient)
    }

    pub fn uses_shadows(self) -> bool {
        matches!(self, ModelKind::FullShadows)
    }
}

/// Shading response to one unit of light intensity, before shadowing:
/// k_d * max(0, w_l.N) + k_s * max(0, H.N)^alpha.
pub fn direct_response(frame: &PixelFrame, k_d: f64, k_s: f64, alpha: f64, use_specular: bool) -> f64 {
    let mut r = k_d * frame.dot_diffuse;
    if use_specular && frame.dot_specular > 0.0 {
        r += k_s * frame.dot_specular.powf(alpha);
    }
    r
}

/// One complete forward pass with everything the gradients need cached:
/// per-light shading frames, binary shadow terms, and the per-light
/// unshadowed direct contribution I_i * (k_d * dot_d + k_s * dot_s^alpha).
#[derive(Debug, Clone)]
pub struct Forward {
    pub image: Image,
    pub frames: Vec<ShadingFrame>,
    pub shadows: ShadowBuffer,
    pub unshadowed: Vec<Vec<f64>>,
    pub model: ModelKind,
    pub shadow_cfg: ShadowConfig,
}

/// Shade from prebuilt frames and shadow terms.
pub fn shade(
    scene: &Scene,
    frames: &[ShadingFrame],
    lights: &LightParams,
    shadows: &ShadowBuffer,
    model: ModelKind,
) -> Result<Image> {
    if frames.len() != lights.lights.len() || shadows.per_light.len() != lights.lights.len() {
        return Err(Error::InvalidParameter(format!(
            "expected one frame and one shadow buffer per light: {} lights, {} frames, {} buffers",
            lights.lights.len(),
            frames.len(),
            shadows.per_light.len()
        )));
    }
    let (w, h) = (scene.width(), scene.height());
    let n = w * h;
    let mut pixels = vec![0.0f32; n];
    let mut valid = vec![false; n];
    let alpha = scene.materials.alpha;
    for i in 0..n {
        if !scene.cloud.valid[i] {
            continue;
        }
        if frames.iter().any(|f| f.frames[i].is_none()) {
            continue;
        }
        let k_d = scene.materials.k_d[i];
        let k_s = scene.materials.k_s[i];
        let mut value = k_d * lights.ambient;
        for (li, light) in lights.lights.iter().enumerate() {
            let f = frames[li].frames[i].as_ref().unwrap();
            let s = shadows.term(li, i);
            value += s * light.intensity * direct_response(f, k_d, k_s, alpha, model.uses_specular());
        }
        pixels[i] = value as f32;
        valid[i] = true;
    }
    Image::new(w, h, pixels, valid)
}

/// Full forward pass for the given model variant.
pub fn render_model(
    scene: &Scene,
    lights: &LightParams,
    model: ModelKind,
    shadow_cfg: &ShadowConfig,
) -> Result<Forward> {
    let n = scene.width() * scene.height();
    let frames: Vec<ShadingFrame> = lights
        .lights
        .iter()
        .map(|l| build_shading_frame(scene, l))
        .collect();
    let shadows = if model.uses_shadows() {
        let mut per_light = Vec::with_capacity(lights.lights.len());
        for light in &lights.lights {
            let map = render_shadow_map(&scene.cloud, &light.position, shadow_cfg)?;
            per_light.push(shadow_term(&map, &scene.cloud).per_light.pop().unwrap());
        }
        ShadowBuffer { width: scene.width(), height: scene.height(), per_light }
    } else {
        ShadowBuffer::all_lit(scene.width(), scene.height(), lights.lights.len())
    };
    let alpha = scene.materials.alpha;
    let unshadowed: Vec<Vec<f64>> = lights
        .lights
        .iter()
        .zip(&frames)
        .map(|(light, sf)| {
            (0..n)
                .map(|i| match &sf.frames[i] {
                    Some(f) => {
                        light.intensity
                            * direct_response(
                                f,
                                scene.materials.k_d[i],
                                scene.materials.k_s[i],
                                alpha,
                                model.uses_specular(),
                            )
                    }
                    None => 0.0,
                })
                .collect()
        })
        .collect();
    let image = shade(scene, &frames, lights, &shadows, model)?;
    Ok(Forward { image, frames, shadows, unshadowed, model, shadow_cfg: *shadow_cfg })
}

/// Convenience wrapper for the full model.
pub fn render(
    scene: &Scene,
    lights: &LightParams,
    shadow_cfg: &ShadowConfig,
) -> Result<(Image, ShadowBuffer)> {
    let fwd = render_model(scene, lights, ModelKind::FullShadows, shadow_cfg)?;
    Ok((fwd.image, fwd.shadows))
}
