//! Pixel-aligned oriented point cloud.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Surface samples backprojected from a depth map, one per pixel, with unit
/// normals. Pixel alignment with the source depth map is what ties each 3D
/// point to a screen position.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedPointCloud {
    pub width: usize,
    pub height: usize,
    /// World-space surface points; meaningful only where `valid`.
    pub points: Vec<Vector3<f64>>,
    /// Unit normals oriented toward the camera; meaningful only where `valid`.
    pub normals: Vec<Vector3<f64>>,
    pub valid: Vec<bool>,
}

pub const UNIT_NORMAL_TOL: f64 = 1e-6;

impl OrientedPointCloud {
    pub fn new(
        width: usize,
        height: usize,
        points: Vec<Vector3<f64>>,
        normals: Vec<Vector3<f64>>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if points.len() != n || normals.len() != n || valid.len() != n {
            return Err(Error::DimensionMismatch {
                what: "point cloud buffers",
                expected_w: width,
                expected_h: height,
                got_w: points.len().min(normals.len()),
                got_h: valid.len(),
            });
        }
        for i in 0..n {
            if !valid[i] {
                continue;
            }
            let norm = normals[i].norm();
            if (norm - 1.0).abs() > UNIT_NORMAL_TOL {
                return Err(Error::invariant(
                    "unit-norm normal",
                    format!("pixel {i}: |n| = {norm}"),
                ));
            }
            if !points[i].iter().all(|c| c.is_finite()) {
                return Err(Error::invariant("finite point", format!("pixel {i}")));
            }
        }
        Ok(OrientedPointCloud { width, height, points, normals, valid })
    }

    pub fn idx(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Iterator over (index, point, normal) of valid pixels.
    pub fn valid_entries(&self) -> impl Iterator<Item = (usize, &Vector3<f64>, &Vector3<f64>)> {
        self.valid
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i, &self.points[i], &self.normals[i]))
    }

    /// Axis-aligned bounds of the valid points: (min, max).
    pub fn bounds(&self) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        let mut any = false;
        for (_, p, _) in self.valid_entries() {
            lo = lo.inf(p);
            hi = hi.sup(p);
            any = true;
        }
        if !any {
            return Err(Error::NoValidPixels("point cloud"));
        }
        Ok((lo, hi))
    }

    /// Diagonal length of the valid-point bounding box.
    pub fn diagonal(&self) -> Result<f64> {
        let (lo, hi) = self.bounds()?;
        Ok((hi - lo).norm())
    }

    /// Smallest distance from `pos` to any valid point.
    pub fn min_distance_to(&self, pos: &Vector3<f64>) -> f64 {
        let mut best = f64::INFINITY;
        for (_, p, _) in self.valid_entries() {
            let d2 = (pos - p).norm_squared();
            if d2 < best {
                best = d2;
            }
        }
        best.sqrt()
    }
}
