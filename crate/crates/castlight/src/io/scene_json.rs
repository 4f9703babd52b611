//! Scene file: one JSON document holding camera, depth, materials and
//! optional normals / ground-truth lights.
//!
//! Depth is either an inline row-major array (`null` marks invalid pixels)
//! or `{"pfm": "relative/path"}` referencing a float image next to the scene
//! file. When normals are present they are trusted verbatim (after the
//! unit-length check); otherwise they are recomputed from depth, which
//! invalidates border pixels.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::PointLight;
use crate::scene::{depth_to_cloud, Camera, DepthMap, MaterialMaps, OrientedPointCloud, Scene};

use super::atomic_write;

#[derive(Debug, Serialize, Deserialize)]
struct SceneDoc {
    camera: CameraDoc,
    depth: DepthDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normals: Option<Vec<Option<[f64; 3]>>>,
    materials: MaterialsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_truth_lights: Option<Vec<LightDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ambient: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CameraDoc {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    /// Row-major world-from-camera rotation.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum DepthDoc {
    Inline(Vec<Option<f64>>),
    Pfm { pfm: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarOrArray {
    Scalar(f64),
    Array(Vec<f64>),
}

#[derive(Debug, Serialize, Deserialize)]
struct MaterialsDoc {
    k_d: ScalarOrArray,
    k_s: ScalarOrArray,
    alpha: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LightDoc {
    position: [f64; 3],
    intensity: f64,
}

/// A scene file's contents after validation.
#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub scene: Scene,
    pub depth: DepthMap,
    pub ground_truth_lights: Vec<PointLight>,
    pub ambient: Option<f64>,
}

/// Load and validate a scene file.
pub fn load_scene(path: &Path) -> Result<LoadedScene> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    load_scene_str(&text, path)
}

/// Parse scene JSON from a string; `path` anchors relative PFM references
/// and labels errors.
pub fn load_scene_str(text: &str, path: &Path) -> Result<LoadedScene> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    build_scene(doc, path)
}

fn build_scene(doc: SceneDoc, path: &Path) -> Result<LoadedScene> {
    let parse = |detail: String| Error::Parse { path: path.display().to_string(), detail };

    let r = doc.camera.rotation;
    let rotation = Matrix3::new(
        r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
    );
    let camera = Camera::new(
        doc.camera.fx,
        doc.camera.fy,
        doc.camera.cx,
        doc.camera.cy,
        doc.camera.width,
        doc.camera.height,
        rotation,
        Vector3::from(doc.camera.translation),
    )?;
    let (w, h) = (camera.width, camera.height);
    let n = w.checked_mul(h).ok_or_else(|| parse("camera dimensions overflow".into()))?;

    let depth = match doc.depth {
        DepthDoc::Inline(values) => {
            if values.len() != n {
                return Err(parse(format!(
                    "depth array has {} entries, camera is {w}x{h}",
                    values.len()
                )));
            }
            let mut buf = Vec::with_capacity(n);
            let mut valid = Vec::with_capacity(n);
            for (i, value) in values.into_iter().enumerate() {
                match value {
                    Some(d) if d.is_finite() && d > 0.0 => {
                        buf.push(d);
                        valid.push(true);
                    }
                    Some(d) => {
                        return Err(parse(format!(
                            "depth[{i}] = {d}: valid depths must be finite and > 0 (use null for invalid)"
                        )));
                    }
                    None => {
                        buf.push(f64::NAN);
                        valid.push(false);
                    }
                }
            }
            DepthMap::new(w, h, buf, valid)?
        }
        DepthDoc::Pfm { pfm } => {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            let img = super::pfm::read_pfm(&base.join(&pfm))?;
            if img.width != w || img.height != h {
                return Err(parse(format!(
                    "depth PFM is {}x{}, camera is {w}x{h}",
                    img.width, img.height
                )));
            }
            let buf: Vec<f64> =
                img.pixels.iter().map(|&p| if p.is_finite() { p as f64 } else { f64::NAN }).collect();
            DepthMap::from_raw(w, h, buf)?
        }
    };

    let materials = MaterialMaps::new(
        w,
        h,
        broadcast(doc.materials.k_d, n, "k_d").map_err(&parse)?,
        broadcast(doc.materials.k_s, n, "k_s").map_err(&parse)?,
        doc.materials.alpha,
    )?;

    let cloud = match doc.normals {
        None => depth_to_cloud(&depth, &camera)?,
        Some(entries) => {
            if entries.len() != n {
                return Err(parse(format!(
                    "normals array has {} entries, camera is {w}x{h}",
                    entries.len()
                )));
            }
            let mut points = vec![Vector3::zeros(); n];
            let mut normals = vec![Vector3::zeros(); n];
            let mut valid = vec![false; n];
            for v in 0..h {
                for u in 0..w {
                    let i = v * w + u;
                    let Some(nrm) = entries[i] else { continue };
                    if !depth.valid[i] {
                        return Err(parse(format!(
                            "normal at pixel ({u}, {v}) has no valid depth"
                        )));
                    }
                    points[i] = camera.backproject(u as f64, v as f64, depth.depth[i]);
                    normals[i] = Vector3::from(nrm);
                    valid[i] = true;
                }
            }
            // the constructor enforces the unit-norm invariant and names it
            OrientedPointCloud::new(w, h, points, normals, valid)?
        }
    };

    let scene = Scene::new(cloud, camera, materials)?;
    let ground_truth_lights = doc
        .ground_truth_lights
        .unwrap_or_default()
        .into_iter()
        .map(|l| PointLight::new(Vector3::from(l.position), l.intensity))
        .collect::<Result<Vec<_>>>()?;
    Ok(LoadedScene { scene, depth, ground_truth_lights, ambient: doc.ambient })
}

fn broadcast(value: ScalarOrArray, n: usize, what: &str) -> std::result::Result<Vec<f64>, String> {
    match value {
        ScalarOrArray::Scalar(s) => Ok(vec![s; n]),
        ScalarOrArray::Array(a) if a.len() == n => Ok(a),
        ScalarOrArray::Array(a) => {
            Err(format!("{what} array has {} entries, expected {n}", a.len()))
        }
    }
}

/// Save a scene (with its source depth map and optional ground-truth lights)
/// as a self-contained JSON document with inline depth and normals.
pub fn save_scene(
    scene: &Scene,
    depth: &DepthMap,
    ground_truth_lights: &[PointLight],
    ambient: Option<f64>,
    path: &Path,
) -> Result<()> {
    let n = depth.depth.len();
    let depth_doc = DepthDoc::Inline(
        (0..n).map(|i| depth.valid[i].then_some(depth.depth[i])).collect(),
    );
    let normals = (0..n)
        .map(|i| {
            scene.cloud.valid[i].then(|| {
                let nrm = scene.cloud.normals[i];
                [nrm.x, nrm.y, nrm.z]
            })
        })
        .collect();
    let camera = &scene.camera;
    let r = &camera.rotation;
    let doc = SceneDoc {
        camera: CameraDoc {
            fx: camera.fx,
            fy: camera.fy,
            cx: camera.cx,
            cy: camera.cy,
            width: camera.width,
            height: camera.height,
            rotation: [
                [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            ],
            translation: [camera.translation.x, camera.translation.y, camera.translation.z],
        },
        depth: depth_doc,
        normals: Some(normals),
        materials: MaterialsDoc {
            k_d: compact(&scene.materials.k_d),
            k_s: compact(&scene.materials.k_s),
            alpha: scene.materials.alpha,
        },
        ground_truth_lights: (!ground_truth_lights.is_empty()).then(|| {
            ground_truth_lights
                .iter()
                .map(|l| LightDoc {
                    position: [l.position.x, l.position.y, l.position.z],
                    intensity: l.intensity,
                })
                .collect()
        }),
        ambient,
    };
    let mut bytes = serde_json::to_vec_pretty(&doc)
        .map_err(|e| Error::Parse { path: path.display().to_string(), detail: e.to_string() })?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Uniform maps serialize as a scalar, everything else stays an array.
fn compact(values: &[f64]) -> ScalarOrArray {
    match values.split_first() {
        Some((&first, rest)) if rest.iter().all(|&v| v == first) => ScalarOrArray::Scalar(first),
        _ => ScalarOrArray::Array(values.to_vec()),
    }
}
