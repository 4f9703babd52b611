//! Command-line driver: scene generation, rendering, estimation, gradient
//! diagnostics and the reflectance-noise benchmark.
//!
//! Exit codes: 0 success, 2 usage or precondition failure, 3 divergence,
//! 4 gradient-check failure, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use castlight::estimate::{estimate_light, EstimateResult, OptimizerOptions, TerminationReason};
use castlight::grad::{grad_diffuse, grad_shadow_fd, grad_specular};
use castlight::io::{
    atomic_write, load_scene, parse_vec3, read_pfm, save_scene, write_pfm, write_trace_csv,
};
use castlight::render::{
    build_shading_frame, pixel_frame, render_model, Image, LightParams, ModelKind, PointLight,
    ShadowConfig,
};
use castlight::synth::{
    gen_scene_sized, run_benchmark, write_report_csv, write_summary_json, write_timings_csv,
    BenchConfig, Preset, DEFAULT_SIZE,
};
use castlight::util::{mix_seed, SplitMix64};
use castlight::Error;

#[derive(Parser)]
#[command(name = "castlight", version, about = "Blinn-Phong rendering and light estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark scene and save it as JSON.
    GenScene(GenSceneArgs),
    /// Render a scene under a point light.
    Render(RenderArgs),
    /// Recover a light position from an observed image by gradient descent.
    Estimate(EstimateArgs),
    /// Compare analytic shading gradients against finite differences.
    CheckGrad(CheckGradArgs),
    /// Run the reflectance-noise benchmark described by a JSON config.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct GenSceneArgs {
    /// Scene preset (plane-box, plane-spheres, steps).
    #[arg(long, value_parser = parse_preset)]
    preset: Preset,
    #[arg(long)]
    seed: u64,
    /// Image side in pixels.
    #[arg(long, default_value_t = DEFAULT_SIZE)]
    size: usize,
    /// Output scene JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShadowArgs {
    /// Cube shadow-map face resolution R.
    #[arg(long, default_value_t = 256)]
    shadow_res: usize,
    /// Splat footprint side in texels.
    #[arg(long, default_value_t = 3)]
    splat: usize,
    /// Depth bias in scene units (default: 2% of the scene diagonal).
    #[arg(long)]
    bias: Option<f64>,
}

impl ShadowArgs {
    fn config(&self) -> ShadowConfig {
        ShadowConfig { resolution: self.shadow_res, splat: self.splat, bias: self.bias }
    }
}

#[derive(Args)]
struct RenderArgs {
    /// Scene JSON path.
    #[arg(long)]
    scene: PathBuf,
    /// Light position "x,y,z" in scene units.
    #[arg(long, value_parser = parse_vec3_arg)]
    light: Vec3Arg,
    #[arg(long, default_value_t = 0.5)]
    intensity: f64,
    #[arg(long, default_value_t = 0.5)]
    ambient: f64,
    /// Shading model: diffuse, specular or full.
    #[arg(long, default_value = "full", value_parser = parse_model)]
    model: ModelKind,
    #[command(flatten)]
    shadow: ShadowArgs,
    /// Output PFM path.
    #[arg(long)]
    out: PathBuf,
    /// Also write an 8-bit PNG preview (clamp to [0,1], scale to 255).
    #[arg(long)]
    png: Option<PathBuf>,
    /// Also write the first light's shadow term as a PFM mask.
    #[arg(long)]
    shadow_mask: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Observed image (PFM).
    #[arg(long)]
    image: PathBuf,
    /// Initial light position "x,y,z".
    #[arg(long, value_parser = parse_vec3_arg)]
    init: Vec3Arg,
    #[arg(long, default_value_t = 0.5)]
    intensity: f64,
    #[arg(long, default_value_t = 0.5)]
    ambient: f64,
    #[arg(long, default_value = "full", value_parser = parse_model)]
    model: ModelKind,
    /// Descent rate.
    #[arg(long, default_value_t = 0.02)]
    rate: f64,
    /// Relative energy-change stopping tolerance.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    /// Shadow FD step in scene units (default: 1% of the scene diagonal).
    #[arg(long)]
    fd_step: Option<f64>,
    /// Also optimize the light intensity.
    #[arg(long)]
    free_intensity: bool,
    /// Also optimize the ambient level.
    #[arg(long)]
    free_ambient: bool,
    #[command(flatten)]
    shadow: ShadowArgs,
    /// Write the result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the descent trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Ground-truth position "x,y,z"; prints the normalized error.
    #[arg(long, value_parser = parse_vec3_arg)]
    ground_truth: Option<Vec3Arg>,
}

#[derive(Args)]
struct CheckGradArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_parser = parse_vec3_arg)]
    light: Vec3Arg,
    #[arg(long, default_value_t = 0.5)]
    intensity: f64,
    /// full additionally runs the directional whole-image check.
    #[arg(long, default_value = "specular", value_parser = parse_model)]
    model: ModelKind,
    #[command(flatten)]
    shadow: ShadowArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Benchmark config JSON; missing fields fall back to defaults.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving report.csv, summary.json and timings.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

/// Newtype so clap can carry a parsed vector.
#[derive(Clone)]
struct Vec3Arg(Vector3<f64>);

fn parse_vec3_arg(text: &str) -> Result<Vec3Arg, String> {
    parse_vec3(text).map(Vec3Arg).map_err(|e| e.to_string())
}

fn parse_preset(text: &str) -> Result<Preset, String> {
    text.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(text: &str) -> Result<ModelKind, String> {
    match text {
        "diffuse" | "diffuse-ambient" => Ok(ModelKind::DiffuseAmbient),
        "specular" | "diffuse-specular" => Ok(ModelKind::DiffuseSpecular),
        "full" | "full-shadows" => Ok(ModelKind::FullShadows),
        other => Err(format!(
            "unknown model \"{other}\", expected diffuse, specular or full"
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenScene(args) => cmd_gen_scene(args),
        Command::Render(args) => cmd_render(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::CheckGrad(args) => cmd_check_grad(args),
        Command::Benchmark(args) => cmd_benchmark(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Library errors sorted into the documented exit codes.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Diverged { .. } => 3,
        Error::Io { .. } => 1,
        _ => 2,
    }
}

fn cmd_gen_scene(args: GenSceneArgs) -> Result<(), Error> {
    let gen = gen_scene_sized(args.preset, args.seed, args.size)?;
    save_scene(&gen.scene, &gen.depth, &gen.lights, Some(gen.ambient), &args.out)?;
    println!(
        "wrote {} ({}, seed {}, {}x{}, {} ground-truth lights)",
        args.out.display(),
        gen.preset,
        gen.seed,
        args.size,
        args.size,
        gen.lights.len()
    );
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<(), Error> {
    let loaded = load_scene(&args.scene)?;
    let lights = LightParams::single(args.light.0, args.intensity, args.ambient)?;
    let fwd = render_model(&loaded.scene, &lights, args.model, &args.shadow.config())?;
    write_pfm(&args.out, &fwd.image)?;
    println!("wrote {}", args.out.display());
    if let Some(png) = &args.png {
        write_png(png, &fwd.image)?;
        println!("wrote {}", png.display());
    }
    if let Some(mask_path) = &args.shadow_mask {
        let terms = &fwd.shadows.per_light[0];
        let pixels: Vec<f32> = terms.iter().map(|&s| s as f32).collect();
        let mask = Image::new(fwd.image.width, fwd.image.height, pixels, fwd.image.valid.clone())?;
        write_pfm(mask_path, &mask)?;
        let shadowed = loaded
            .scene
            .cloud
            .valid
            .iter()
            .zip(terms)
            .filter(|&(&ok, &s)| ok && s == 0.0)
            .count();
        println!("wrote {} ({} shadowed pixels)", mask_path.display(), shadowed);
    }
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Error> {
    let loaded = load_scene(&args.scene)?;
    let target = read_pfm(&args.image)?;
    let init = LightParams::single(args.init.0, args.intensity, args.ambient)?;
    let opts = OptimizerOptions {
        rate: args.rate,
        tolerance: args.tolerance,
        max_iterations: args.max_iterations,
        fd_step: args.fd_step,
        free_intensity: args.free_intensity,
        free_ambient: args.free_ambient,
        ..OptimizerOptions::default()
    };
    let shadow_cfg = args.shadow.config();
    let result = estimate_light(&loaded.scene, &target, &init, args.model, &opts, &shadow_cfg)?;

    let light = &result.lights.lights[0];
    println!(
        "position: {:.6} {:.6} {:.6}",
        light.position.x, light.position.y, light.position.z
    );
    println!("intensity: {:.6}  ambient: {:.6}", light.intensity, result.lights.ambient);
    println!(
        "iterations: {}  reason: {}  final energy: {:.6e}",
        result.iterations,
        reason_name(result.reason),
        result.final_energy
    );
    let error = args.ground_truth.as_ref().map(|gt| {
        let err = result.normalized_error_to(&gt.0);
        println!("error vs ground truth: {err:.6} (normalized units)");
        err
    });

    if let Some(trace_path) = &args.trace {
        write_trace_csv(trace_path, &result.trace)?;
    }
    if let Some(out) = &args.out {
        write_estimate_json(out, &result, error)?;
    }
    Ok(())
}

fn reason_name(reason: TerminationReason) -> &'static str {
    match reason {
        TerminationReason::Converged => "converged",
        TerminationReason::MaxIterations => "max-iterations",
    }
}

fn write_estimate_json(
    path: &Path,
    result: &EstimateResult,
    error: Option<f64>,
) -> Result<(), Error> {
    let light = &result.lights.lights[0];
    let mut doc = serde_json::json!({
        "position": [light.position.x, light.position.y, light.position.z],
        "intensity": light.intensity,
        "ambient": result.lights.ambient,
        "iterations": result.iterations,
        "reason": reason_name(result.reason),
        "final_energy": result.final_energy,
        "scale": result.scale,
    });
    if let Some(err) = error {
        doc["error_to_ground_truth"] = serde_json::json!(err);
    }
    let mut bytes = serde_json::to_vec_pretty(&doc)
        .map_err(|e| Error::Parse { path: path.display().to_string(), detail: e.to_string() })?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Worst offender of one finite-difference comparison.
#[derive(Clone, Copy, Default)]
struct WorstPixel {
    rel: f64,
    pixel: (usize, usize),
    dot_diffuse: f64,
    dot_specular: f64,
    distance: f64,
    analytic: Vector3<f64>,
    fd: Vector3<f64>,
}

const FD_STEP: f64 = 1e-5;
const CLAMP_MARGIN: f64 = 1e-3;

fn cmd_check_grad(args: CheckGradArgs) -> Result<(), Error> {
    let loaded = load_scene(&args.scene)?;
    let scene = &loaded.scene;
    let light_pos = args.light.0;
    if scene.cloud.min_distance_to(&light_pos) <= 1e-9 {
        return Err(Error::LightOnSurface { threshold: 1e-9 });
    }

    let cam = scene.camera.center();
    let mats = &scene.materials;
    let light = PointLight::new(light_pos, args.intensity)?;
    let frame_at = |pos: &Vector3<f64>, i: usize| {
        pixel_frame(&scene.cloud.points[i], &scene.cloud.normals[i], &cam, pos)
    };

    let mut diffuse_worst = WorstPixel::default();
    let mut specular_worst = WorstPixel::default();
    let mut checked = 0usize;
    for v in 0..scene.height() {
        for u in 0..scene.width() {
            let i = v * scene.width() + u;
            if !scene.cloud.valid[i] {
                continue;
            }
            let Some(center) = frame_at(&light_pos, i) else { continue };

            // the 6 perturbed frames; clamp crossings inside the bracket
            // would poison the difference quotient, so such pixels are
            // excluded just like the boundary exclusion in the test suite
            let mut shifted = Vec::with_capacity(6);
            for axis in 0..3 {
                for sign in [1.0, -1.0] {
                    let mut pos = light_pos;
                    pos[axis] += sign * FD_STEP;
                    shifted.push(frame_at(&pos, i));
                }
            }
            if shifted.iter().any(|f| f.is_none()) {
                continue;
            }
            let shifted: Vec<_> = shifted.into_iter().map(|f| f.unwrap()).collect();
            let all = || std::iter::once(&center).chain(&shifted);

            let diffuse_ok = all().all(|f| f.dot_diffuse > CLAMP_MARGIN);
            let specular_ok =
                all().all(|f| f.dot_specular > CLAMP_MARGIN && f.half_len > CLAMP_MARGIN);
            checked += 1;

            if diffuse_ok {
                let analytic = grad_diffuse(&center, mats.k_d[i], args.intensity);
                let mut fd = Vector3::zeros();
                for axis in 0..3 {
                    let plus = mats.k_d[i] * args.intensity * shifted[2 * axis].dot_diffuse;
                    let minus = mats.k_d[i] * args.intensity * shifted[2 * axis + 1].dot_diffuse;
                    fd[axis] = (plus - minus) / (2.0 * FD_STEP);
                }
                record_worst(&mut diffuse_worst, &center, (u, v), analytic, fd);
            }
            if specular_ok {
                let analytic = grad_specular(&center, mats.k_s[i], mats.alpha, args.intensity);
                let mut fd = Vector3::zeros();
                for axis in 0..3 {
                    let plus = mats.k_s[i]
                        * args.intensity
                        * shifted[2 * axis].dot_specular.powf(mats.alpha);
                    let minus = mats.k_s[i]
                        * args.intensity
                        * shifted[2 * axis + 1].dot_specular.powf(mats.alpha);
                    fd[axis] = (plus - minus) / (2.0 * FD_STEP);
                }
                record_worst(&mut specular_worst, &center, (u, v), analytic, fd);
            }
        }
    }

    println!("checked {checked} pixels, FD step {FD_STEP:.0e}");
    println!("diffuse:  max relative error {:.3e}", diffuse_worst.rel);
    println!("specular: max relative error {:.3e}", specular_worst.rel);

    if args.model == ModelKind::FullShadows {
        directional_check(scene, &light, &args.shadow.config())?;
    }

    let tol = 1e-4;
    for (name, worst) in [("diffuse", diffuse_worst), ("specular", specular_worst)] {
        if worst.rel >= tol {
            let (u, v) = worst.pixel;
            eprintln!(
                "{name} check failed at pixel ({u}, {v}): rel {:.3e}, \
                 dot_d {:.6}, dot_s {:.6}, dist {:.6}, analytic {:?}, fd {:?}",
                worst.rel,
                worst.dot_diffuse,
                worst.dot_specular,
                worst.distance,
                worst.analytic.as_slice(),
                worst.fd.as_slice()
            );
            use std::io::Write;
            std::io::stdout().flush().ok();
            std::process::exit(4);
        }
    }
    Ok(())
}

fn record_worst(
    worst: &mut WorstPixel,
    frame: &castlight::render::PixelFrame,
    pixel: (usize, usize),
    analytic: Vector3<f64>,
    fd: Vector3<f64>,
) {
    let scale = fd.norm().max(analytic.norm());
    if scale < 1e-9 {
        return;
    }
    let rel = (analytic - fd).norm() / scale;
    if rel > worst.rel {
        *worst = WorstPixel {
            rel,
            pixel,
            dot_diffuse: frame.dot_diffuse,
            dot_specular: frame.dot_specular,
            distance: frame.distance,
            analytic,
            fd,
        };
    }
}

/// Whole-image directional derivative against a central difference at the
/// shadow FD step; loose tolerance because S is a step function.
fn directional_check(
    scene: &castlight::scene::Scene,
    light: &PointLight,
    shadow_cfg: &ShadowConfig,
) -> Result<(), Error> {
    let step = castlight::grad::default_shadow_fd_step(&scene.cloud)?;
    let mut rng = SplitMix64::new(mix_seed(&[0xd17c, light.position.x.to_bits()]));
    let dir = rng.unit_vector();

    let lights = LightParams::new(vec![light.clone()], 0.0)?;
    let fwd = render_model(scene, &lights, ModelKind::FullShadows, shadow_cfg)?;
    let frame = build_shading_frame(scene, light);
    let shadow_grads = grad_shadow_fd(&scene.cloud, &light.position, shadow_cfg, step)?;

    let shift = |sign: f64| -> Result<Image, Error> {
        let moved = PointLight::new(light.position + sign * step * dir, light.intensity)?;
        let params = LightParams::new(vec![moved], 0.0)?;
        Ok(render_model(scene, &params, ModelKind::FullShadows, shadow_cfg)?.image)
    };
    let plus = shift(1.0)?;
    let minus = shift(-1.0)?;

    let mats = &scene.materials;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..scene.cloud.points.len() {
        let Some(f) = &frame.frames[i] else { continue };
        if f.dot_diffuse <= CLAMP_MARGIN || f.dot_specular <= CLAMP_MARGIN {
            continue;
        }
        let s = fwd.shadows.term(0, i);
        let gated = s * (grad_diffuse(f, mats.k_d[i], light.intensity)
            + grad_specular(f, mats.k_s[i], mats.alpha, light.intensity));
        let analytic = (gated + fwd.unshadowed[0][i] * shadow_grads[i]).dot(&dir);
        let fd = (plus.pixels[i] as f64 - minus.pixels[i] as f64) / (2.0 * step);
        num += (analytic - fd).powi(2);
        den += fd * fd;
    }
    let rel = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    let verdict = if rel < 0.10 { "ok" } else { "exceeds 10%" };
    println!("directional (shadow) check: relative L2 error {rel:.3} at step {step:.4e} [{verdict}]");
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::io(format!("reading {}", args.config.display()), e))?;
    let config: BenchConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: args.config.display().to_string(),
        detail: e.to_string(),
    })?;

    let report = run_benchmark(&config)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::io(format!("creating {}", args.out_dir.display()), e))?;
    let mut buf = Vec::new();
    write_report_csv(&report, &mut buf)?;
    atomic_write(&args.out_dir.join("report.csv"), &buf)?;
    buf.clear();
    write_summary_json(&report, &mut buf)?;
    atomic_write(&args.out_dir.join("summary.json"), &buf)?;
    buf.clear();
    write_timings_csv(&report, &mut buf)?;
    atomic_write(&args.out_dir.join("timings.csv"), &buf)?;

    println!(
        "{:<8} {:<18} {:>9} {:>7} {:>10} {:>10} {:>9}",
        "level", "model", "completed", "failed", "success%", "avg err", "median"
    );
    for level in &report.levels {
        for stats in &level.models {
            let fmt = |v: Option<f64>| match v {
                Some(x) => format!("{x:.4}"),
                None => "-".into(),
            };
            println!(
                "{:<8} {:<18} {:>9} {:>7} {:>10.2} {:>10} {:>9}",
                level.level.to_string(),
                stats.model.name(),
                stats.completed,
                stats.failed,
                stats.success_rate_percent,
                fmt(stats.avg_error),
                fmt(stats.median_error)
            );
        }
    }
    println!("wrote report.csv, summary.json, timings.csv to {}", args.out_dir.display());

    let all_failed = report.records.iter().all(|r| r.outcome.error().is_none());
    if all_failed && !report.records.is_empty() {
        return Err(Error::invariant("at least one experiment completes", "all failed"));
    }
    Ok(())
}

fn write_png(path: &Path, img: &Image) -> Result<(), Error> {
    let bytes: Vec<u8> = img
        .pixels
        .iter()
        .zip(&img.valid)
        .map(|(&p, &ok)| if ok { (p.clamp(0.0, 1.0) * 255.0).round() as u8 } else { 0 })
        .collect();
    let mut encoded = Vec::new();
    let encoder = image::codecs::png::PngEncoder::new(&mut encoded);
    image::ImageEncoder::write_image(
        encoder,
        &bytes,
        img.width as u32,
        img.height as u32,
        image::ExtendedColorType::L8,
    )
    .map_err(|e| Error::Parse { path: path.display().to_string(), detail: e.to_string() })?;
    atomic_write(path, &encoded)
}
