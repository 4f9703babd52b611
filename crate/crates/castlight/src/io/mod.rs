//! File formats and small parsing helpers shared by the CLI and tests.

pub mod pfm;
pub mod scene_json;

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::estimate::TracePoint;

pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use scene_json::{load_scene, load_scene_str, save_scene, LoadedScene};

/// Parse a comma-separated "x,y,z" triple of finite floats.
pub fn parse_vec3(text: &str) -> Result<Vector3<f64>> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "expected \"x,y,z\" with three components, got \"{text}\""
        )));
    }
    let mut out = [0.0f64; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        let value: f64 = part.trim().parse().map_err(|_| {
            Error::InvalidParameter(format!("unparseable component \"{part}\" in \"{text}\""))
        })?;
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite component in \"{text}\"")));
        }
        *slot = value;
    }
    Ok(Vector3::new(out[0], out[1], out[2]))
}

/// Write a file via a sibling temp path and rename, so readers never observe
/// a half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(format!("writing {}", tmp.display()), e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(format!("renaming into {}", path.display()), e)
    })
}

/// Write a descent trace as CSV: one row per energy evaluation.
pub fn write_trace_csv(path: &Path, trace: &[TracePoint]) -> Result<()> {
    let mut out = String::from("iteration,energy,x,y,z,grad_norm\n");
    for point in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            point.iteration,
            point.energy,
            point.position.x,
            point.position.y,
            point.position.z,
            point.grad_norm
        ));
    }
    atomic_write(path, out.as_bytes())
}
