//! Gradients of the rendered image and of the photometric energy with
//! respect to the light parameters.
//!
//! The shading terms are piecewise smooth, so their derivatives are
//! analytic (zero wherever a clamp is active). The binary shadow term has
//! no pointwise derivative; it is differentiated by central finite
//! differences on the light position, re-rendering the shadow maps at the
//! six axis-perturbed positions. Per pixel and axis k:
//!
//!   dS/dL_k = (S(L + h e_k) - S(L - h e_k)) / (2h)
//!
//! which takes only the values -1/(2h), 0 and +1/(2h). The image Jacobian
//! combines both parts:
//!
//!   dI/dL = S * (dI_d/dL + dI_s/dL) + (I_d + I_s) * dS/dL
//!
//! where I_d + I_s is the unshadowed direct contribution of the light.
//! The photometric energy is the plain sum of squared residuals over pixels
//! valid in both images, and its gradient carries the factor 2 from the
//! square. All reductions run in fixed pixel order, so results are
//! bit-stable across runs and thread counts.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::render::{
    direct_response, render_model, render_shadow_map, shadow_term, Forward, Image, LightParams,
    ModelKind, PixelFrame, ShadowConfig,
};
use crate::scene::{OrientedPointCloud, Scene};

/// Fraction of the scene diagonal used as the default shadow FD step.
pub const DEFAULT_SHADOW_FD_FRACTION: f64 = 0.01;

/// Default finite-difference step for the shadow term: 1% of the diagonal.
pub fn default_shadow_fd_step(cloud: &OrientedPointCloud) -> Result<f64> {
    Ok(DEFAULT_SHADOW_FD_FRACTION * cloud.diagonal()?)
}

/// Derivative of one pixel's rendered intensity with respect to one light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelJacobian {
    /// dI/dL, gradient with respect to the light position.
    pub d_pos: Vector3<f64>,
    /// dI/d(intensity) of the same light.
    pub d_intensity: f64,
}

/// d(I_L * k_d * max(0, w_l.N)) / dL for one unit of shadow.
pub fn grad_diffuse(frame: &PixelFrame, k_d: f64, intensity: f64) -> Vector3<f64> {
    if frame.dot_diffuse <= 0.0 {
        return Vector3::zeros();
    }
    (k_d * intensity / frame.distance)
        * (frame.normal - frame.omega_l * frame.dot_diffuse)
}

/// d(I_L * k_s * max(0, H.N)^alpha) / dL for one unit of shadow.
pub fn grad_specular(frame: &PixelFrame, k_s: f64, alpha: f64, intensity: f64) -> Vector3<f64> {
    if frame.dot_specular <= 0.0 || frame.half_len <= 0.0 {
        return Vector3::zeros();
    }
    // chain through H = (w_l + w_v)/|w_l + w_v| and w_l = (L - X)/|L - X|:
    // both steps project onto the complement of the normalized vector
    let a = frame.normal - frame.halfway * frame.dot_specular;
    let b = a - frame.omega_l * frame.omega_l.dot(&a);
    (k_s * intensity * alpha * frame.dot_specular.powf(alpha - 1.0)
        / (frame.half_len * frame.distance))
        * b
}

/// dI/d(intensity): the shadowed shading response to one unit of intensity.
pub fn grad_intensity(
    frame: &PixelFrame,
    k_d: f64,
    k_s: f64,
    alpha: f64,
    shadow: f64,
    use_specular: bool,
) -> f64 {
    shadow * direct_response(frame, k_d, k_s, alpha, use_specular)
}

/// Per-pixel dS/dL by central finite differences; zero for invalid pixels.
/// Every component is exactly -1/(2*step), 0 or +1/(2*step).
pub fn grad_shadow_fd(
    cloud: &OrientedPointCloud,
    light: &Vector3<f64>,
    cfg: &ShadowConfig,
    step: f64,
) -> Result<Vec<Vector3<f64>>> {
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidParameter(format!("shadow FD step must be > 0, got {step}")));
    }
    let n = cloud.width * cloud.height;
    let mut grads = vec![Vector3::zeros(); n];
    for axis in 0..3 {
        let mut offset = Vector3::zeros();
        offset[axis] = step;
        let plus = shadow_term(&render_shadow_map(cloud, &(light + offset), cfg)?, cloud);
        let minus = shadow_term(&render_shadow_map(cloud, &(light - offset), cfg)?, cloud);
        let sp = &plus.per_light[0];
        let sm = &minus.per_light[0];
        for i in 0..n {
            grads[i][axis] = (sp[i] - sm[i]) / (2.0 * step);
        }
    }
    Ok(grads)
}

/// Energy gradient with respect to one light's parameters plus the ambient,
/// with the position part split by cause for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct EnergyGradient {
    pub energy: f64,
    /// Number of pixels valid in both the rendering and the target.
    pub n_valid: usize,
    pub d_pos: Vector3<f64>,
    pub d_intensity: f64,
    pub d_ambient: f64,
    /// Position part coming from moving the shading (diffuse + specular).
    pub shading_part: Vector3<f64>,
    /// Position part coming from moving the shadow boundaries.
    pub shadow_part: Vector3<f64>,
}

/// Sum of squared residuals over pixels valid in both images.
pub fn energy(target: &Image, rendered: &Image) -> Result<f64> {
    if target.width != rendered.width || target.height != rendered.height {
        return Err(Error::DimensionMismatch {
            what: "target vs rendered image",
            expected_w: rendered.width,
            expected_h: rendered.height,
            got_w: target.width,
            got_h: target.height,
        });
    }
    let mut e = 0.0;
    let mut any = false;
    for i in 0..target.pixels.len() {
        if target.valid[i] && rendered.valid[i] {
            any = true;
            let r = rendered.pixels[i] as f64 - target.pixels[i] as f64;
            e += r * r;
        }
    }
    if !any {
        return Err(Error::EmptyValidOverlap);
    }
    Ok(e)
}

/// Render under the given model and differentiate the energy with respect
/// to light `light_index`'s position and intensity and the ambient level.
pub fn energy_and_gradient(
    scene: &Scene,
    lights: &LightParams,
    light_index: usize,
    model: ModelKind,
    shadow_cfg: &ShadowConfig,
    fd_step: f64,
    target: &Image,
) -> Result<(Forward, EnergyGradient)> {
    if light_index >= lights.lights.len() {
        return Err(Error::InvalidParameter(format!(
            "light index {light_index} out of range ({} lights)",
            lights.lights.len()
        )));
    }
    if target.width != scene.width() || target.height != scene.height() {
        return Err(Error::DimensionMismatch {
            what: "target image vs scene",
            expected_w: scene.width(),
            expected_h: scene.height(),
            got_w: target.width,
            got_h: target.height,
        });
    }
    let fwd = render_model(scene, lights, model, shadow_cfg)?;
    let shadow_grads = if model.uses_shadows() {
        Some(grad_shadow_fd(
            &scene.cloud,
            &lights.lights[light_index].position,
            shadow_cfg,
            fd_step,
        )?)
    } else {
        None
    };

    let light = &lights.lights[light_index];
    let alpha = scene.materials.alpha;
    let n = scene.width() * scene.height();
    let mut g = EnergyGradient {
        energy: 0.0,
        n_valid: 0,
        d_pos: Vector3::zeros(),
        d_intensity: 0.0,
        d_ambient: 0.0,
        shading_part: Vector3::zeros(),
        shadow_part: Vector3::zeros(),
    };
    for i in 0..n {
        if !(fwd.image.valid[i] && target.valid[i]) {
            continue;
        }
        g.n_valid += 1;
        let r = fwd.image.pixels[i] as f64 - target.pixels[i] as f64;
        g.energy += r * r;
        let two_r = 2.0 * r;

        let frame = fwd.frames[light_index].frames[i].as_ref().unwrap();
        let k_d = scene.materials.k_d[i];
        let k_s = scene.materials.k_s[i];
        let s = fwd.shadows.term(light_index, i);

        let mut shading = grad_diffuse(frame, k_d, light.intensity);
        if model.uses_specular() {
            shading += grad_specular(frame, k_s, alpha, light.intensity);
        }
        shading *= s;
        let shadow = match &shadow_grads {
            Some(sg) => fwd.unshadowed[light_index][i] * sg[i],
            None => Vector3::zeros(),
        };

        g.shading_part += two_r * shading;
        g.shadow_part += two_r * shadow;
        g.d_pos += two_r * (shading + shadow);
        g.d_intensity += two_r * grad_intensity(frame, k_d, k_s, alpha, s, model.uses_specular());
        g.d_ambient += two_r * k_d;
    }
    if g.n_valid == 0 {
        return Err(Error::EmptyValidOverlap);
    }
    Ok((fwd, g))
}
