//! Synthetic benchmark: procedural scenes, reflectance-noise perturbation,
//! and the estimator comparison harness built on top of them.

pub mod bench;
pub mod noise;
pub mod presets;

pub use bench::{
    run_benchmark, write_report_csv, write_summary_json, write_timings_csv, BenchConfig,
    BenchReport, ExperimentRecord, LevelSummary, ModelLevelStats, NoiseLevel, SceneSpec,
};
pub use noise::{fbm_noise, perturb_materials, NoiseConfig, ReflectanceLevel};
pub use presets::{gen_scene, gen_scene_sized, GeneratedScene, Preset, DEFAULT_SIZE};
