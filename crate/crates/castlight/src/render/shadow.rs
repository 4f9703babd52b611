//! Point-splatted cube shadow maps and the hard (binary) occlusion test.
//!
//! A point light sees in all directions, so the depth buffer is a cube of
//! six 90-degree faces. Every valid cloud point is splatted into the faces
//! it projects onto with an s x s texel footprint, keeping the minimum
//! distance-to-light per texel. Points near a face seam are splatted into
//! both adjacent faces, which avoids light leaks along seams.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::scene::OrientedPointCloud;

/// Fraction of the scene bounding-box diagonal used as the default depth
/// bias. Large enough to swallow splat quantization at the default
/// resolution, small enough not to eat contact shadows.
pub const DEFAULT_BIAS_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, Copy)]
pub struct ShadowConfig {
    /// Face resolution R (R x R texels per cube face).
    pub resolution: usize,
    /// Splat footprint side in texels.
    pub splat: usize,
    /// Depth bias in scene units; `None` derives 2% of the scene diagonal.
    pub bias: Option<f64>,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        ShadowConfig { resolution: 256, splat: 3, bias: None }
    }
}

/// Light-space minimum-distance cube. Texels that received no splat hold
/// +inf and read back as unoccluded.
#[derive(Debug, Clone)]
pub struct ShadowMap {
    pub light: Vector3<f64>,
    pub resolution: usize,
    pub bias: f64,
    faces: [Vec<f64>; 6],
}

/// Binary shadow terms, one buffer per light; values are exactly 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowBuffer {
    pub width: usize,
    pub height: usize,
    pub per_light: Vec<Vec<f64>>,
}

impl ShadowBuffer {
    /// Everything lit: S = 1 for every pixel of every light.
    pub fn all_lit(width: usize, height: usize, n_lights: usize) -> Self {
        ShadowBuffer { width, height, per_light: vec![vec![1.0; width * height]; n_lights] }
    }

    pub fn term(&self, light: usize, pixel: usize) -> f64 {
        self.per_light[light][pixel]
    }
}

// Face order: +X, -X, +Y, -Y, +Z, -Z.
const FACE_AXES: [(usize, f64); 6] =
    [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0)];

/// The two in-face component indices for each face axis.
fn minor_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Face owning direction `v` (largest absolute component, x > y > z priority
/// on ties) plus the texel coordinates on that face.
fn owner_face_texel(v: &Vector3<f64>, resolution: usize) -> (usize, usize, usize) {
    let (ax, ay, az) = (v.x.abs(), v.y.abs(), v.z.abs());
    let axis = if ax >= ay && ax >= az { 0 } else if ay >= az { 1 } else { 2 };
    let face = axis * 2 + usize::from(v[axis] < 0.0);
    let w = v[axis].abs();
    let (pa, qa) = minor_axes(axis);
    let r = resolution as f64;
    let to_texel = |c: f64| -> usize {
        let x = (c / w + 1.0) * 0.5 * r;
        (x.floor() as isize).clamp(0, resolution as isize - 1) as usize
    };
    (face, to_texel(v[pa]), to_texel(v[qa]))
}

impl ShadowMap {
    /// Stored minimum distance for the texel that direction `v` falls into.
    pub fn lookup(&self, v: &Vector3<f64>) -> f64 {
        let (face, i, j) = owner_face_texel(v, self.resolution);
        self.faces[face][j * self.resolution + i]
    }

    #[cfg(test)]
    pub(crate) fn face_texel(&self, face: usize, i: usize, j: usize) -> f64 {
        self.faces[face][j * self.resolution + i]
    }
}

/// Rasterize the cloud into a cube shadow map around `light`.
pub fn render_shadow_map(
    cloud: &OrientedPointCloud,
    light: &Vector3<f64>,
    cfg: &ShadowConfig,
) -> Result<ShadowMap> {
    if cfg.resolution < 16 {
        return Err(Error::InvalidParameter(format!(
            "shadow map resolution must be >= 16, got {}",
            cfg.resolution
        )));
    }
    if cfg.splat == 0 {
        return Err(Error::InvalidParameter("splat footprint must be >= 1 texel".into()));
    }
    let bias = match cfg.bias {
        Some(b) if b >= 0.0 => b,
        Some(b) => return Err(Error::InvalidParameter(format!("negative shadow bias {b}"))),
        None => DEFAULT_BIAS_FRACTION * cloud.diagonal()?,
    };

    let res = cfg.resolution;
    let mut faces: [Vec<f64>; 6] = std::array::from_fn(|_| vec![f64::INFINITY; res * res]);
    let lo = -((cfg.splat as isize - 1) / 2);
    let hi = cfg.splat as isize / 2;
    let r = res as f64;

    for (_, point, _) in cloud.valid_entries() {
        let v = point - light;
        let dist = v.norm();
        if dist < 1e-9 {
            return Err(Error::LightOnSurface { threshold: 1e-9 });
        }
        for (face, &(axis, sign)) in FACE_AXES.iter().enumerate() {
            let w = v[axis] * sign;
            if w <= 0.0 {
                continue;
            }
            let (pa, qa) = minor_axes(axis);
            let ci = ((v[pa] / w + 1.0) * 0.5 * r).floor() as isize;
            let cj = ((v[qa] / w + 1.0) * 0.5 * r).floor() as isize;
            // skip faces whose padded range the splat cannot touch
            if ci + hi < 0 || ci + lo >= res as isize || cj + hi < 0 || cj + lo >= res as isize {
                continue;
            }
            let buf = &mut faces[face];
            for dj in lo..=hi {
                let j = cj + dj;
                if j < 0 || j >= res as isize {
                    continue;
                }
                for di in lo..=hi {
                    let i = ci + di;
                    if i < 0 || i >= res as isize {
                        continue;
                    }
                    let t = &mut buf[j as usize * res + i as usize];
                    if dist < *t {
                        *t = dist;
                    }
                }
            }
        }
    }
    Ok(ShadowMap { light: *light, resolution: res, bias, faces })
}

/// Binary occlusion test of every cloud pixel against one shadow map.
///
/// S = 0 iff the pixel's distance to the light exceeds the stored minimum
/// plus the bias. Invalid pixels get S = 1 (no occlusion claim is made).
pub fn shadow_term(map: &ShadowMap, cloud: &OrientedPointCloud) -> ShadowBuffer {
    let mut terms = vec![1.0; cloud.width * cloud.height];
    for (i, point, _) in cloud.valid_entries() {
        let v = point - map.light;
        let d = v.norm();
        if d < 1e-9 {
            continue;
        }
        let stored = map.lookup(&v);
        if d > stored + map.bias {
            terms[i] = 0.0;
        }
    }
    ShadowBuffer { width: cloud.width, height: cloud.height, per_light: vec![terms] }
}
