//! Brute-force occlusion reference: exhaustive pixel-vs-point tests with
//! each cloud point covering the continuous footprint of a shadow-map splat
//! on the cube face the pixel reads.
//!
//! This path never touches the rasterizer's min-depth buffers or its texel
//! grid; quantization to whole texels is the only thing the rasterized maps
//! add on top of this model. It exists to validate the rasterized shadows
//! independently and to measure shadow coverage when generating synthetic
//! scenes. It is O(pixels x points) and parallelized over pixels; results
//! do not depend on the thread count.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::render::ShadowConfig;
use crate::scene::OrientedPointCloud;

/// The two in-face component indices for each face axis.
fn minor_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Binary shadow terms by exhaustive testing. A pixel is shadowed iff some
/// valid point projects within a splat half-width of the pixel's direction
/// on the pixel's cube face and is closer to the light by more than `bias`.
/// Invalid pixels get 1.0.
pub fn reference_shadow_term(
    cloud: &OrientedPointCloud,
    light: &Vector3<f64>,
    cfg: &ShadowConfig,
    bias: f64,
) -> Vec<f64> {
    // a face spans 2 tangent units across `resolution` texels, so an s-texel
    // splat covers a square of tangent half-width s/resolution around the
    // occluder's exact projection
    let half_width = cfg.splat as f64 / cfg.resolution as f64;

    let occluders: Vec<(Vector3<f64>, f64)> = cloud
        .valid_entries()
        .map(|(_, p, _)| {
            let rel = p - light;
            (rel, rel.norm())
        })
        .collect();

    let n = cloud.width * cloud.height;
    (0..n)
        .into_par_iter()
        .map(|i| {
            if !cloud.valid[i] {
                return 1.0;
            }
            let v = cloud.points[i] - light;
            let d = v.norm();
            if d < 1e-9 {
                return 1.0;
            }
            // the face owning the pixel's direction, as the map lookup picks
            // it: largest absolute component, x > y > z priority on ties
            let (ax, ay, az) = (v.x.abs(), v.y.abs(), v.z.abs());
            let axis = if ax >= ay && ax >= az { 0 } else if ay >= az { 1 } else { 2 };
            let w_pix = v[axis].abs();
            let (pa, qa) = minor_axes(axis);
            let px = v[pa] / w_pix;
            let py = v[qa] / w_pix;
            let positive = v[axis] >= 0.0;
            let d_cut = d - bias;
            for (rel, dist) in &occluders {
                if *dist >= d_cut {
                    continue;
                }
                let w_occ = if positive { rel[axis] } else { -rel[axis] };
                if w_occ <= 0.0 {
                    continue;
                }
                if (rel[pa] / w_occ - px).abs() < half_width
                    && (rel[qa] / w_occ - py).abs() < half_width
                {
                    return 0.0;
                }
            }
            1.0
        })
        .collect()
}

/// Fraction of valid pixels on which two shadow buffers agree exactly.
/// Returns 1.0 when no pixel is valid.
pub fn shadow_agreement(a: &[f64], b: &[f64], valid: &[bool]) -> f64 {
    assert_eq!(a.len(), b.len());
    assert_eq!(a.len(), valid.len());
    let mut total = 0usize;
    let mut same = 0usize;
    for i in 0..a.len() {
        if valid[i] {
            total += 1;
            if a[i] == b[i] {
                same += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        same as f64 / total as f64
    }
}

/// Fraction of masked pixels whose shadow term is 0. Returns 0.0 for an
/// empty mask.
pub fn shadow_fraction(terms: &[f64], mask: &[bool]) -> f64 {
    assert_eq!(terms.len(), mask.len());
    let mut total = 0usize;
    let mut dark = 0usize;
    for i in 0..terms.len() {
        if mask[i] {
            total += 1;
            if terms[i] == 0.0 {
                dark += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        dark as f64 / total as f64
    }
}
