//! Procedural benchmark scenes: analytically ray-cast depth maps of simple
//! occluder-on-ground arrangements, plus ground-truth lights placed around
//! the scene so that each one casts a visible shadow.
//!
//! World convention here: the ground plane is y = 0 with +y up; the camera
//! orbits above at a seeded azimuth and ~35 degree elevation. All randomness
//! is drawn from splitmix streams keyed on (preset, seed), so the same
//! inputs always produce bitwise-identical scenes.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{reference_shadow_term, shadow_fraction};
use crate::render::{PointLight, ShadowConfig, DEFAULT_BIAS_FRACTION};
use crate::scene::{depth_to_cloud, Camera, DepthMap, MaterialMaps, Scene};
use crate::util::{mix_seed, SplitMix64};

/// Default image side for generated scenes.
pub const DEFAULT_SIZE: usize = 64;

/// Reflectance and shininess of every generated target scene.
pub const IDEAL_KD: f64 = 1.0;
pub const IDEAL_KS: f64 = 1.0;
pub const IDEAL_ALPHA: f64 = 10.0;
/// Intensity of each ground-truth light and the ambient level.
pub const GT_INTENSITY: f64 = 0.5;
pub const GT_AMBIENT: f64 = 0.5;

/// Minimum fraction of visible ground pixels a ground-truth light must
/// shadow; light placement retries until this holds.
pub const MIN_SHADOW_COVERAGE: f64 = 0.05;

pub const GROUND_HALF_EXTENT: f64 = 2.5;
const LIGHTS_PER_SCENE: usize = 6;
const PLACEMENT_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Ground plane plus one axis-aligned box.
    PlaneBox,
    /// Ground plane plus two or three spheres.
    PlaneSpheres,
    /// Four-step staircase on the ground plane.
    Steps,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::PlaneBox, Preset::PlaneSpheres, Preset::Steps];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PlaneBox => "plane-box",
            Preset::PlaneSpheres => "plane-spheres",
            Preset::Steps => "steps",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset {
                name: s.to_string(),
                valid: "plane-box, plane-spheres, steps",
            })
    }
}

/// A generated scene with its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub preset: Preset,
    pub seed: u64,
    pub scene: Scene,
    pub depth: DepthMap,
    /// Ground-truth lights, each with intensity `GT_INTENSITY`.
    pub lights: Vec<PointLight>,
    pub ambient: f64,
    /// Pixels whose primary ray hit the ground plane.
    pub ground_mask: Vec<bool>,
}

enum Body {
    Aabb { lo: Vector3<f64>, hi: Vector3<f64> },
    Sphere { center: Vector3<f64>, radius: f64 },
}

fn ray_ground(origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    if dir.y.abs() < 1e-12 {
        return None;
    }
    let t = -origin.y / dir.y;
    if t <= 1e-9 {
        return None;
    }
    let p = origin + t * dir;
    if p.x.abs() <= GROUND_HALF_EXTENT && p.z.abs() <= GROUND_HALF_EXTENT {
        Some(t)
    } else {
        None
    }
}

fn ray_body(body: &Body, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    match body {
        Body::Aabb { lo, hi } => {
            let mut t0 = 1e-9f64;
            let mut t1 = f64::INFINITY;
            for k in 0..3 {
                if dir[k].abs() < 1e-12 {
                    if origin[k] < lo[k] || origin[k] > hi[k] {
                        return None;
                    }
                } else {
                    let a = (lo[k] - origin[k]) / dir[k];
                    let b = (hi[k] - origin[k]) / dir[k];
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
            }
            (t0 < t1).then_some(t0)
        }
        Body::Sphere { center, radius } => {
            let oc = origin - center;
            let b = oc.dot(dir);
            let c = oc.norm_squared() - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let t = -b - disc.sqrt();
            (t > 1e-9).then_some(t)
        }
    }
}

fn build_bodies(preset: Preset, rng: &mut SplitMix64) -> Vec<Body> {
    match preset {
        Preset::PlaneBox => {
            let hx = rng.range(0.3, 0.45);
            let hz = rng.range(0.3, 0.45);
            let height = rng.range(0.7, 0.95);
            let cx = rng.range(-0.3, 0.3);
            let cz = rng.range(-0.3, 0.3);
            vec![Body::Aabb {
                lo: Vector3::new(cx - hx, 0.0, cz - hz),
                hi: Vector3::new(cx + hx, height, cz + hz),
            }]
        }
        Preset::PlaneSpheres => {
            let n = 2 + (rng.next_u64() % 2) as usize;
            let mut spheres: Vec<(Vector3<f64>, f64)> = Vec::new();
            while spheres.len() < n {
                let r = rng.range(0.3, 0.45);
                let c = Vector3::new(rng.range(-0.7, 0.7), r, rng.range(-0.7, 0.7));
                let clear = spheres.iter().all(|(c2, r2)| {
                    let d = Vector3::new(c.x - c2.x, 0.0, c.z - c2.z).norm();
                    d >= r + r2 + 0.1
                });
                if clear {
                    spheres.push((c, r));
                }
            }
            spheres
                .into_iter()
                .map(|(center, radius)| Body::Sphere { center, radius })
                .collect()
        }
        Preset::Steps => {
            let rise = rng.range(0.2, 0.28);
            let run = rng.range(0.28, 0.36);
            let half_w = 0.9;
            let z0 = rng.range(-0.9, -0.5);
            (0..4)
                .map(|i| Body::Aabb {
                    lo: Vector3::new(-half_w, 0.0, z0 + i as f64 * run),
                    hi: Vector3::new(half_w, rise * (i + 1) as f64, z0 + (i + 1) as f64 * run),
                })
                .collect()
        }
    }
}

fn orbit_point(target: &Vector3<f64>, azimuth: f64, elevation: f64, dist: f64) -> Vector3<f64> {
    target
        + dist
            * Vector3::new(
                elevation.cos() * azimuth.cos(),
                elevation.sin(),
                elevation.cos() * azimuth.sin(),
            )
}

/// Generate a deterministic benchmark scene at the default image size.
pub fn gen_scene(preset: Preset, seed: u64) -> Result<GeneratedScene> {
    gen_scene_sized(preset, seed, DEFAULT_SIZE)
}

/// Generate a deterministic benchmark scene at `size` x `size` pixels.
pub fn gen_scene_sized(preset: Preset, seed: u64, size: usize) -> Result<GeneratedScene> {
    if size < 16 {
        return Err(Error::InvalidParameter(format!("scene size must be >= 16, got {size}")));
    }
    let preset_salt = preset as u64 + 1;
    let mut rng = SplitMix64::new(mix_seed(&[seed, preset_salt, 0x5ce9e]));
    let bodies = build_bodies(preset, &mut rng);

    // elevation/distance/focal ranges chosen so most of the frame lands on
    // the ground square rather than the sky
    let target = Vector3::new(0.0, 0.35, 0.0);
    let azimuth = rng.range(0.0, std::f64::consts::TAU);
    let elevation = rng.range(42f64.to_radians(), 52f64.to_radians());
    let dist = rng.range(3.2, 3.6);
    let eye = orbit_point(&target, azimuth, elevation, dist);
    let f = 1.5 * size as f64;
    let c = (size as f64 - 1.0) / 2.0;
    let camera = Camera::look_at(f, f, c, c, size, size, eye, target)?;

    let mut depth_raw = Vec::with_capacity(size * size);
    let mut ground_mask = vec![false; size * size];
    for v in 0..size {
        for u in 0..size {
            let (origin, dir) = camera.pixel_ray(u as f64, v as f64);
            let mut best = ray_ground(&origin, &dir).map(|t| (t, true));
            for body in &bodies {
                if let Some(t) = ray_body(body, &origin, &dir) {
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, false));
                    }
                }
            }
            match best {
                Some((t, on_ground)) => {
                    depth_raw.push(t);
                    ground_mask[v * size + u] = on_ground;
                }
                None => depth_raw.push(f64::NAN),
            }
        }
    }
    let depth = DepthMap::from_raw(size, size, depth_raw)?;
    let cloud = depth_to_cloud(&depth, &camera)?;
    let materials = MaterialMaps::uniform(size, size, IDEAL_KD, IDEAL_KS, IDEAL_ALPHA)?;
    let scene = Scene::new(cloud, camera, materials)?;

    // shadow coverage is judged with the same bias the renderer would use
    let shadow_cfg = ShadowConfig { resolution: 128, ..Default::default() };
    let bias = DEFAULT_BIAS_FRACTION * scene.cloud.diagonal()?;
    let visible_ground: Vec<bool> = (0..size * size)
        .map(|i| ground_mask[i] && scene.cloud.valid[i])
        .collect();

    let mut lights = Vec::with_capacity(LIGHTS_PER_SCENE);
    for j in 0..LIGHTS_PER_SCENE {
        let slot = std::f64::consts::TAU * j as f64 / LIGHTS_PER_SCENE as f64;
        let mut best: Option<(f64, Vector3<f64>)> = None;
        for attempt in 0..PLACEMENT_ATTEMPTS {
            let mut lrng = SplitMix64::new(mix_seed(&[
                seed,
                preset_salt,
                j as u64,
                attempt as u64,
                0x11647,
            ]));
            // low, close lights make the cast shadow sweep quickly as the
            // light moves, which is what the position estimate feeds on
            let az = slot + lrng.range(-0.35, 0.35);
            let el = lrng.range(18f64.to_radians(), 32f64.to_radians());
            let rad = lrng.range(0.9 * GROUND_HALF_EXTENT, 1.3 * GROUND_HALF_EXTENT);
            let pos = orbit_point(&target, az, el, rad);
            let terms = reference_shadow_term(&scene.cloud, &pos, &shadow_cfg, bias);
            let coverage = shadow_fraction(&terms, &visible_ground);
            if best.is_none_or(|(bc, _)| coverage > bc) {
                best = Some((coverage, pos));
            }
            if coverage >= MIN_SHADOW_COVERAGE {
                break;
            }
        }
        let (coverage, pos) = best.unwrap();
        if coverage < MIN_SHADOW_COVERAGE {
            return Err(Error::invariant(
                "ground-truth light shadows >= 5% of visible ground",
                format!("{preset} seed {seed} light {j}: best coverage {coverage:.4}"),
            ));
        }
        lights.push(PointLight::new(pos, GT_INTENSITY)?);
    }

    Ok(GeneratedScene {
        preset,
        seed,
        scene,
        depth,
        lights,
        ambient: GT_AMBIENT,
        ground_mask,
    })
}
