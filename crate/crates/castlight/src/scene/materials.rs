//! Per-pixel Blinn-Phong material maps.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMaps {
    pub width: usize,
    pub height: usize,
    /// Diffuse reflectance per pixel, >= 0.
    pub k_d: Vec<f64>,
    /// Specular reflectance per pixel, >= 0.
    pub k_s: Vec<f64>,
    /// Shininess exponent, > 0, shared by the whole scene.
    pub alpha: f64,
}

impl MaterialMaps {
    pub fn new(width: usize, height: usize, k_d: Vec<f64>, k_s: Vec<f64>, alpha: f64) -> Result<Self> {
        if k_d.len() != width * height || k_s.len() != width * height {
            return Err(Error::DimensionMismatch {
                what: "material maps",
                expected_w: width,
                expected_h: height,
                got_w: k_d.len(),
                got_h: k_s.len(),
            });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invariant("shininess alpha > 0", format!("alpha = {alpha}")));
        }
        for (name, map) in [("k_d", &k_d), ("k_s", &k_s)] {
            if let Some((i, &bad)) = map.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::invariant(
                    "reflectance finite and non-negative",
                    format!("{name}[{i}] = {bad}"),
                ));
            }
        }
        Ok(MaterialMaps { width, height, k_d, k_s, alpha })
    }

    /// Uniform maps from scalar reflectances.
    pub fn uniform(width: usize, height: usize, k_d: f64, k_s: f64, alpha: f64) -> Result<Self> {
        MaterialMaps::new(width, height, vec![k_d; width * height], vec![k_s; width * height], alpha)
    }
}
