//! Benchmark harness: for every generated scene and ground-truth light,
//! render a clean target with the true materials, hand each estimator
//! variant a (possibly perturbed) belief about the reflectance, and score
//! the recovered light positions.
//!
//! An experiment unit is one (scene, light, level) triple; within a unit the
//! configured models compete and the smallest position error wins (ties
//! split fractionally). Units where any model failed to produce an estimate
//! are excluded from the success rates. Every run is seeded, jobs are listed
//! in a fixed order, and wall-clock timings are kept out of the report so
//! that identical configurations produce identical report bytes.

use std::fmt;
use std::io::Write as IoWrite;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{estimate_light, OptimizerOptions, TerminationReason};
use crate::render::{render_model, Image, LightParams, ModelKind, PointLight, ShadowConfig};
use crate::scene::{normalization_frame, Scene};
use crate::synth::noise::{perturb_materials, NoiseConfig, ReflectanceLevel};
use crate::synth::presets::{gen_scene_sized, Preset, DEFAULT_SIZE, GT_INTENSITY};
use crate::util::mix_seed;

/// One scene slot of a benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub preset: Preset,
    pub seed: u64,
}

/// Reflectance belief handed to the estimators: the true maps ("ideal") or
/// an FBM perturbation of the given magnitude. Serialized as the string
/// "ideal" or a bare number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LevelRepr", into = "LevelRepr")]
pub enum NoiseLevel {
    Ideal,
    Magnitude(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LevelRepr {
    Name(String),
    Magnitude(f64),
}

impl TryFrom<LevelRepr> for NoiseLevel {
    type Error = String;

    fn try_from(repr: LevelRepr) -> std::result::Result<Self, String> {
        match repr {
            LevelRepr::Name(s) if s == "ideal" => Ok(NoiseLevel::Ideal),
            LevelRepr::Name(s) => {
                Err(format!("unknown noise level '{s}'; use \"ideal\" or a number"))
            }
            LevelRepr::Magnitude(m) if m.is_finite() && m >= 0.0 => Ok(NoiseLevel::Magnitude(m)),
            LevelRepr::Magnitude(m) => Err(format!("noise magnitude must be >= 0, got {m}")),
        }
    }
}

impl From<NoiseLevel> for LevelRepr {
    fn from(level: NoiseLevel) -> LevelRepr {
        match level {
            NoiseLevel::Ideal => LevelRepr::Name("ideal".to_string()),
            NoiseLevel::Magnitude(m) => LevelRepr::Magnitude(m),
        }
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseLevel::Ideal => f.write_str("ideal"),
            NoiseLevel::Magnitude(m) => write!(f, "{m}"),
        }
    }
}

impl NoiseLevel {
    fn to_reflectance(self, seed: u64) -> Result<ReflectanceLevel> {
        match self {
            NoiseLevel::Ideal => Ok(ReflectanceLevel::Ideal),
            NoiseLevel::Magnitude(m) => Ok(ReflectanceLevel::Noisy(NoiseConfig::new(m, seed)?)),
        }
    }
}

/// Optimizer knobs exposed to benchmark configurations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub rate: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let o = OptimizerOptions::default();
        OptimizerSettings { rate: o.rate, tolerance: o.tolerance, max_iterations: o.max_iterations }
    }
}

impl OptimizerSettings {
    fn to_options(self) -> OptimizerOptions {
        OptimizerOptions {
            rate: self.rate,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            ..OptimizerOptions::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub scenes: Vec<SceneSpec>,
    /// How many of each scene's ground-truth lights to use (max 6).
    pub lights_per_scene: usize,
    /// Image side of the generated scenes, pixels.
    pub size: usize,
    /// Shadow cube-map face resolution used for targets and estimation.
    pub shadow_resolution: usize,
    pub levels: Vec<NoiseLevel>,
    pub models: Vec<ModelKind>,
    pub optimizer: OptimizerSettings,
    /// Root seed of the reflectance perturbations.
    pub noise_seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            scenes: Preset::ALL.iter().map(|&preset| SceneSpec { preset, seed: 1 }).collect(),
            lights_per_scene: 6,
            size: DEFAULT_SIZE,
            shadow_resolution: 128,
            levels: vec![
                NoiseLevel::Ideal,
                NoiseLevel::Magnitude(0.0),
                NoiseLevel::Magnitude(0.1),
                NoiseLevel::Magnitude(0.2),
                NoiseLevel::Magnitude(0.3),
            ],
            models: ModelKind::ALL.to_vec(),
            optimizer: OptimizerSettings::default(),
            noise_seed: 2024,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenes.is_empty() {
            return Err(Error::InvalidParameter("benchmark needs at least one scene".into()));
        }
        for (i, a) in self.scenes.iter().enumerate() {
            if self.scenes[..i].contains(a) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate scene {} seed {}",
                    a.preset, a.seed
                )));
            }
        }
        if !(1..=6).contains(&self.lights_per_scene) {
            return Err(Error::InvalidParameter(format!(
                "lights_per_scene must be in 1..=6, got {}",
                self.lights_per_scene
            )));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter("benchmark needs at least one noise level".into()));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidParameter("benchmark needs at least one model".into()));
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return Err(Error::InvalidParameter(format!("duplicate model {m}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed {
        /// |estimate - truth| / largest scene bounding-box side.
        error: f64,
        iterations: usize,
        final_energy: f64,
        converged: bool,
    },
    Failed {
        message: String,
    },
}

impl RunOutcome {
    pub fn error(&self) -> Option<f64> {
        match self {
            RunOutcome::Completed { error, .. } => Some(*error),
            RunOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    pub preset: Preset,
    pub scene_seed: u64,
    pub light_index: usize,
    pub level: NoiseLevel,
    pub model: ModelKind,
    pub outcome: RunOutcome,
    /// Wall-clock duration; informational only, never part of the report.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelLevelStats {
    pub model: ModelKind,
    pub completed: usize,
    pub failed: usize,
    /// Share of complete units this model won, percent.
    pub success_rate_percent: f64,
    /// Mean error over this model's completed runs; None if none completed.
    pub avg_error: Option<f64>,
    pub median_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub level: NoiseLevel,
    pub units_total: usize,
    /// Units where every configured model produced an estimate.
    pub units_complete: usize,
    pub models: Vec<ModelLevelStats>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub records: Vec<ExperimentRecord>,
    pub levels: Vec<LevelSummary>,
}

impl BenchReport {
    pub fn stats(&self, level: NoiseLevel, model: ModelKind) -> Option<&ModelLevelStats> {
        self.levels
            .iter()
            .find(|l| l.level == level)?
            .models
            .iter()
            .find(|s| s.model == model)
    }
}

struct PreparedScene {
    spec: SceneSpec,
    /// True-material scene; targets are rendered from this.
    lights: Vec<PointLight>,
    targets: Vec<Image>,
    /// One belief scene per configured level (materials swapped).
    belief_scenes: Vec<Scene>,
    init: LightParams,
}

fn prepare_scene(config: &BenchConfig, spec: SceneSpec) -> Result<PreparedScene> {
    let generated = gen_scene_sized(spec.preset, spec.seed, config.size)?;
    let shadow_cfg = ShadowConfig { resolution: config.shadow_resolution, ..Default::default() };

    let (side, _) = normalization_frame(&generated.scene)?;
    let init_pos = generated.scene.camera.center() + side * generated.scene.camera.up_world();
    let init = LightParams::single(init_pos, GT_INTENSITY, generated.ambient)?;

    let lights: Vec<PointLight> =
        generated.lights.iter().take(config.lights_per_scene).copied().collect();
    let mut targets = Vec::with_capacity(lights.len());
    for light in &lights {
        let lp = LightParams::new(vec![*light], generated.ambient)?;
        let fwd = render_model(&generated.scene, &lp, ModelKind::FullShadows, &shadow_cfg)?;
        targets.push(fwd.image);
    }

    let mut belief_scenes = Vec::with_capacity(config.levels.len());
    for (li, level) in config.levels.iter().enumerate() {
        let seed = mix_seed(&[config.noise_seed, spec.preset as u64 + 1, spec.seed, li as u64]);
        let belief = perturb_materials(&generated.scene.materials, &level.to_reflectance(seed)?)?;
        belief_scenes.push(generated.scene.with_materials(belief)?);
    }

    Ok(PreparedScene { spec, lights, targets, belief_scenes, init })
}

/// Run every (scene, light, level, model) combination and aggregate.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let shadow_cfg = ShadowConfig { resolution: config.shadow_resolution, ..Default::default() };
    let opts = config.optimizer.to_options();

    let prepared: Vec<PreparedScene> = config
        .scenes
        .iter()
        .map(|&spec| prepare_scene(config, spec))
        .collect::<Result<_>>()?;

    struct Job {
        scene_idx: usize,
        light_idx: usize,
        level_idx: usize,
        model: ModelKind,
    }
    let mut jobs = Vec::new();
    for (scene_idx, p) in prepared.iter().enumerate() {
        for light_idx in 0..p.lights.len() {
            for level_idx in 0..config.levels.len() {
                for &model in &config.models {
                    jobs.push(Job { scene_idx, light_idx, level_idx, model });
                }
            }
        }
    }

    // indexed parallel map keeps record order identical to the job order
    let records: Vec<ExperimentRecord> = jobs
        .into_par_iter()
        .map(|job| {
            let p = &prepared[job.scene_idx];
            let start = Instant::now();
            let outcome = run_one(
                &p.belief_scenes[job.level_idx],
                &p.targets[job.light_idx],
                &p.init,
                job.model,
                &opts,
                &shadow_cfg,
                &p.lights[job.light_idx],
            );
            ExperimentRecord {
                preset: p.spec.preset,
                scene_seed: p.spec.seed,
                light_index: job.light_idx,
                level: config.levels[job.level_idx],
                model: job.model,
                outcome,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        })
        .collect();

    let levels = aggregate(config, &records);
    Ok(BenchReport { config: config.clone(), records, levels })
}

fn run_one(
    belief_scene: &Scene,
    target: &Image,
    init: &LightParams,
    model: ModelKind,
    opts: &OptimizerOptions,
    shadow_cfg: &ShadowConfig,
    gt_light: &PointLight,
) -> RunOutcome {
    match estimate_light(belief_scene, target, init, model, opts, shadow_cfg) {
        Ok(res) => RunOutcome::Completed {
            error: res.normalized_error_to(&gt_light.position),
            iterations: res.iterations,
            final_energy: res.final_energy,
            converged: res.reason == TerminationReason::Converged,
        },
        Err(e) => RunOutcome::Failed { message: e.to_string() },
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn aggregate(config: &BenchConfig, records: &[ExperimentRecord]) -> Vec<LevelSummary> {
    let n_models = config.models.len();
    config
        .levels
        .iter()
        .map(|&level| {
            let at_level: Vec<&ExperimentRecord> =
                records.iter().filter(|r| r.level == level).collect();

            // records arrive grouped by (scene, light) unit with one entry
            // per model, in the configured model order
            let units: Vec<&[&ExperimentRecord]> = at_level.chunks(n_models).collect();
            debug_assert!(units.iter().all(|u| u.len() == n_models));

            let mut wins = vec![0.0f64; n_models];
            let mut units_complete = 0usize;
            for unit in &units {
                let errors: Vec<Option<f64>> = unit.iter().map(|r| r.outcome.error()).collect();
                if errors.iter().any(|e| e.is_none()) {
                    continue;
                }
                units_complete += 1;
                let best =
                    errors.iter().map(|e| e.unwrap()).fold(f64::INFINITY, f64::min);
                let tied: Vec<usize> = (0..n_models)
                    .filter(|&i| errors[i].unwrap() == best)
                    .collect();
                for &i in &tied {
                    wins[i] += 1.0 / tied.len() as f64;
                }
            }

            let models = config
                .models
                .iter()
                .enumerate()
                .map(|(mi, &model)| {
                    let mut errors: Vec<f64> = at_level
                        .iter()
                        .filter(|r| r.model == model)
                        .filter_map(|r| r.outcome.error())
                        .collect();
                    errors.sort_by(f64::total_cmp);
                    let completed = errors.len();
                    let failed = units.len() - completed;
                    ModelLevelStats {
                        model,
                        completed,
                        failed,
                        success_rate_percent: if units_complete > 0 {
                            100.0 * wins[mi] / units_complete as f64
                        } else {
                            0.0
                        },
                        avg_error: (completed > 0)
                            .then(|| errors.iter().sum::<f64>() / completed as f64),
                        median_error: (completed > 0).then(|| median(&errors)),
                    }
                })
                .collect();

            LevelSummary { level, units_total: units.len(), units_complete, models }
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-run results, one row per experiment. Deterministic for a fixed config.
pub fn write_report_csv(report: &BenchReport, out: &mut dyn IoWrite) -> Result<()> {
    let ctx = "writing report csv";
    writeln!(
        out,
        "preset,scene_seed,light,level,model,status,iterations,final_energy,converged,error,detail"
    )
    .map_err(|e| Error::io(ctx, e))?;
    for r in &report.records {
        let head = format!(
            "{},{},{},{},{}",
            r.preset, r.scene_seed, r.light_index, r.level, r.model
        );
        let row = match &r.outcome {
            RunOutcome::Completed { error, iterations, final_energy, converged } => {
                format!("{head},ok,{iterations},{final_energy},{converged},{error},")
            }
            RunOutcome::Failed { message } => {
                format!("{head},failed,,,,,{}", csv_field(message))
            }
        };
        writeln!(out, "{row}").map_err(|e| Error::io(ctx, e))?;
    }
    Ok(())
}

/// Wall-clock per run. Split from the report because timings vary run to run.
pub fn write_timings_csv(report: &BenchReport, out: &mut dyn IoWrite) -> Result<()> {
    let ctx = "writing timings csv";
    writeln!(out, "preset,scene_seed,light,level,model,wall_ms").map_err(|e| Error::io(ctx, e))?;
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{},{},{:.3}",
            r.preset, r.scene_seed, r.light_index, r.level, r.model, r.wall_ms
        )
        .map_err(|e| Error::io(ctx, e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    config: &'a BenchConfig,
    levels: &'a [LevelSummary],
}

/// Aggregated success rates and errors per (level, model), as pretty JSON.
pub fn write_summary_json(report: &BenchReport, out: &mut dyn IoWrite) -> Result<()> {
    let ctx = "writing summary json";
    let doc = SummaryDoc { config: &report.config, levels: &report.levels };
    serde_json::to_writer_pretty(&mut *out, &doc)
        .map_err(|e| Error::Parse { path: "<summary>".into(), detail: e.to_string() })?;
    writeln!(out).map_err(|e| Error::io(ctx, e))?;
    Ok(())
}
