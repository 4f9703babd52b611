//! Seeded value-noise FBM fields and reflectance perturbation.
//!
//! The field is a sum of octaves of bilinear value noise with smoothstep
//! interpolation; octave o has frequency base * lacunarity^o and amplitude
//! gain^o. The summed field is rescaled so its maximum absolute value equals
//! the requested magnitude, which makes the magnitude parameter directly
//! comparable across seeds and resolutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::MaterialMaps;
use crate::util::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Maximum absolute value of the generated field.
    pub magnitude: f64,
    pub seed: u64,
    #[serde(default = "default_octaves")]
    pub octaves: usize,
    #[serde(default = "default_lacunarity")]
    pub lacunarity: f64,
    #[serde(default = "default_gain")]
    pub gain: f64,
    /// Cycles across the image at the first octave.
    #[serde(default = "default_base_frequency")]
    pub base_frequency: f64,
}

fn default_octaves() -> usize {
    4
}
fn default_lacunarity() -> f64 {
    2.0
}
fn default_gain() -> f64 {
    0.5
}
fn default_base_frequency() -> f64 {
    4.0
}

impl NoiseConfig {
    pub fn new(magnitude: f64, seed: u64) -> Result<Self> {
        let cfg = NoiseConfig {
            magnitude,
            seed,
            octaves: default_octaves(),
            lacunarity: default_lacunarity(),
            gain: default_gain(),
            base_frequency: default_base_frequency(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise magnitude must be >= 0, got {}",
                self.magnitude
            )));
        }
        if self.octaves == 0 {
            return Err(Error::InvalidParameter("noise octaves must be >= 1".into()));
        }
        Ok(())
    }
}

/// Deterministic lattice value in [-1, 1].
fn lattice(seed: u64, octave: usize, xi: i64, yi: i64) -> f64 {
    let h = mix_seed(&[seed, octave as u64, xi as u64, yi as u64]);
    // map the top 53 bits to [0, 1), then to [-1, 1]
    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn smoothstep(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// One octave of value noise at the given frequency, sampled at (x, y) in
/// image-normalized coordinates [0, 1).
fn value_noise(seed: u64, octave: usize, x: f64, y: f64, freq: f64) -> f64 {
    let fx = x * freq;
    let fy = y * freq;
    let x0 = fx.floor() as i64;
    let y0 = fy.floor() as i64;
    let tx = smoothstep(fx - x0 as f64);
    let ty = smoothstep(fy - y0 as f64);
    let v00 = lattice(seed, octave, x0, y0);
    let v10 = lattice(seed, octave, x0 + 1, y0);
    let v01 = lattice(seed, octave, x0, y0 + 1);
    let v11 = lattice(seed, octave, x0 + 1, y0 + 1);
    let a = v00 + (v10 - v00) * tx;
    let b = v01 + (v11 - v01) * tx;
    a + (b - a) * ty
}

/// Unnormalized octave sum; exposed for spectrum tests.
pub(crate) fn fbm_field_raw(width: usize, height: usize, cfg: &NoiseConfig) -> Vec<f64> {
    let mut field = vec![0.0; width * height];
    for o in 0..cfg.octaves {
        let freq = cfg.base_frequency * cfg.lacunarity.powi(o as i32);
        let amp = cfg.gain.powi(o as i32);
        for v in 0..height {
            let y = v as f64 / height as f64;
            for u in 0..width {
                let x = u as f64 / width as f64;
                field[v * width + u] += amp * value_noise(cfg.seed, o, x, y, freq);
            }
        }
    }
    field
}

/// FBM field with max |value| = cfg.magnitude (all zeros when magnitude 0).
pub fn fbm_noise(width: usize, height: usize, cfg: &NoiseConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if cfg.magnitude == 0.0 {
        return Ok(vec![0.0; width * height]);
    }
    let mut field = fbm_field_raw(width, height, cfg);
    let peak = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let s = cfg.magnitude / peak;
        for v in &mut field {
            *v *= s;
        }
    }
    Ok(field)
}

/// The estimator's (possibly wrong) belief about the scene reflectance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReflectanceLevel {
    /// True maps, unchanged.
    Ideal,
    /// FBM perturbation of the true maps with the given magnitude; a
    /// magnitude of exactly 0 replaces both maps by a uniform 0.5 instead
    /// (a constant wrong guess rather than no perturbation).
    Noisy(NoiseConfig),
}

/// Apply a reflectance level to material maps. Shininess is never altered.
pub fn perturb_materials(materials: &MaterialMaps, level: &ReflectanceLevel) -> Result<MaterialMaps> {
    let cfg = match level {
        ReflectanceLevel::Ideal => return Ok(materials.clone()),
        ReflectanceLevel::Noisy(cfg) => cfg,
    };
    cfg.validate()?;
    let (w, h) = (materials.width, materials.height);
    if cfg.magnitude == 0.0 {
        return MaterialMaps::new(w, h, vec![0.5; w * h], vec![0.5; w * h], materials.alpha);
    }
    let field_d = fbm_noise(w, h, &NoiseConfig { seed: mix_seed(&[cfg.seed, 1]), ..*cfg })?;
    let field_s = fbm_noise(w, h, &NoiseConfig { seed: mix_seed(&[cfg.seed, 2]), ..*cfg })?;
    let k_d = materials.k_d.iter().zip(&field_d).map(|(k, f)| (k + f).max(0.0)).collect();
    let k_s = materials.k_s.iter().zip(&field_s).map(|(k, f)| (k + f).max(0.0)).collect();
    MaterialMaps::new(w, h, k_d, k_s, materials.alpha)
}
