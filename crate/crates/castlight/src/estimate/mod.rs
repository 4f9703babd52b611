//! Fixed-rate gradient descent on the photometric energy to recover a point
//! light's position (optionally intensity and ambient) from one image.
//!
//! The update is the plain descent step the energy defines on a
//! unit-normalized copy of the scene (largest bounding-box side scaled to 1,
//! energy averaged over valid pixels), applied directly in the input
//! coordinate frame. For the position that works out to
//!
//!   L <- L - rate * side^2 / n_valid * dE/dL
//!
//! which is algebraically identical to normalizing, stepping, and mapping
//! back, but avoids the extra rounding of an explicit round trip. Intensity
//! and ambient are unitless, so their steps carry no side^2 factor.
//!
//! The loop stops when the relative energy change |E_t - E_{t-1}| / E_{t-1}
//! falls below the tolerance (a zero previous energy counts as converged),
//! when the energy reaches the exact-fit floor, or at the iteration cap.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grad::{default_shadow_fd_step, energy_and_gradient};
use crate::render::{LightParams, ModelKind, ShadowConfig};
use crate::scene::{normalization_frame, Scene};
use crate::render::Image;

pub use crate::grad::energy;

/// Minimum distance the initial light must keep from every scene point.
pub const INIT_CLEARANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct OptimizerOptions {
    /// Learning rate of the descent step.
    pub rate: f64,
    /// Relative energy-change tolerance of the stopping rule.
    pub tolerance: f64,
    /// Maximum number of parameter updates.
    pub max_iterations: usize,
    /// Shadow FD step in scene units; `None` derives 1% of the diagonal.
    pub fd_step: Option<f64>,
    /// Energy at or below this is an exact fit; stop without stepping.
    pub min_energy: f64,
    /// Optimize the light intensity as well (fixed by default).
    pub free_intensity: bool,
    /// Optimize the ambient level as well (fixed by default).
    pub free_ambient: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            rate: 0.02,
            tolerance: 1e-4,
            max_iterations: 1000,
            fd_step: None,
            min_energy: 1e-12,
            free_intensity: false,
            free_ambient: false,
        }
    }
}

impl OptimizerOptions {
    fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::InvalidParameter(format!("rate must be > 0, got {}", self.rate)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    Converged,
    MaxIterations,
}

/// One energy evaluation along the descent path.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub iteration: usize,
    pub energy: f64,
    pub position: Vector3<f64>,
    /// Norm of the raw (summed) position gradient at this point.
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct EstimateResult {
    /// Final light parameters in the input scene's units.
    pub lights: LightParams,
    pub trace: Vec<TracePoint>,
    /// Number of parameter updates performed (trace has one more entry).
    pub iterations: usize,
    pub reason: TerminationReason,
    pub final_energy: f64,
    /// Largest bounding-box side, the unit of normalized coordinates.
    pub scale: f64,
}

impl EstimateResult {
    /// Final light position divided by the normalization scale.
    pub fn normalized_error_to(&self, ground_truth: &Vector3<f64>) -> f64 {
        (self.lights.lights[0].position - ground_truth).norm() / self.scale
    }
}

/// Recover the (single) light of `init` by gradient descent against `target`.
pub fn estimate_light(
    scene: &Scene,
    target: &Image,
    init: &LightParams,
    model: ModelKind,
    opts: &OptimizerOptions,
    shadow_cfg: &ShadowConfig,
) -> Result<EstimateResult> {
    opts.validate()?;
    if init.lights.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "estimation expects exactly one light, got {}",
            init.lights.len()
        )));
    }
    let p0 = init.lights[0].position;
    if !p0.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite initial position {p0:?}")));
    }
    if scene.cloud.min_distance_to(&p0) <= INIT_CLEARANCE {
        return Err(Error::LightOnSurface { threshold: INIT_CLEARANCE });
    }

    let (side, _) = normalization_frame(scene)?;
    let fd_step = match opts.fd_step {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => {
            return Err(Error::InvalidParameter(format!("shadow FD step must be > 0, got {h}")))
        }
        None => default_shadow_fd_step(&scene.cloud)?,
    };

    let mut lights = init.clone();
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut prev_energy: Option<f64> = None;
    let mut iterations = 0usize;
    let reason;

    loop {
        let (_, g) =
            energy_and_gradient(scene, &lights, 0, model, shadow_cfg, fd_step, target)?;
        if !g.energy.is_finite() {
            return Err(Error::Diverged { iteration: iterations, energy: g.energy });
        }
        trace.push(TracePoint {
            iteration: iterations,
            energy: g.energy,
            position: lights.lights[0].position,
            grad_norm: g.d_pos.norm(),
        });

        if g.energy <= opts.min_energy {
            reason = TerminationReason::Converged;
            break;
        }
        if let Some(prev) = prev_energy {
            if prev == 0.0 || (prev - g.energy).abs() / prev < opts.tolerance {
                reason = TerminationReason::Converged;
                break;
            }
        }
        if iterations >= opts.max_iterations {
            reason = TerminationReason::MaxIterations;
            break;
        }

        let pixel_scale = 1.0 / g.n_valid as f64;
        let pos_step = opts.rate * side * side * pixel_scale;
        lights.lights[0].position -= pos_step * g.d_pos;
        if opts.free_intensity {
            lights.lights[0].intensity =
                (lights.lights[0].intensity - opts.rate * pixel_scale * g.d_intensity).max(0.0);
        }
        if opts.free_ambient {
            lights.ambient = (lights.ambient - opts.rate * pixel_scale * g.d_ambient).max(0.0);
        }
        if !lights.lights[0].position.iter().all(|c| c.is_finite()) {
            return Err(Error::Diverged { iteration: iterations, energy: g.energy });
        }
        iterations += 1;
        prev_energy = Some(g.energy);
    }

    let final_energy = trace.last().map(|t| t.energy).unwrap_or(f64::NAN);
    Ok(EstimateResult { lights, trace, iterations, reason, final_energy, scale: side })
}
