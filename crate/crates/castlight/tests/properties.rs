//! Property tests over the public geometry, shadowing, noise, and
//! serialization APIs: randomized inputs, exact or toleranced invariants.

use nalgebra::Vector3;
use proptest::prelude::*;

use castlight::grad::grad_shadow_fd;
use castlight::io::{decode_pfm, encode_pfm, parse_vec3};
use castlight::render::{render_shadow_map, shadow_term, Image, ShadowConfig};
use castlight::scene::{
    depth_to_cloud, normalize_scene, Camera, DepthMap, MaterialMaps, Scene, UNIT_NORMAL_TOL,
};
use castlight::synth::{fbm_noise, perturb_materials, NoiseConfig, ReflectanceLevel};

fn vec3(range: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

/// A smooth positive depth map plus the camera that produced it.
fn depth_scene(size: usize) -> impl Strategy<Value = (DepthMap, Camera)> {
    let jitter = prop::collection::vec(0.9f64..1.1, size * size);
    (1.0f64..4.0, jitter, vec3(2.0)).prop_map(move |(base, jitter, eye_off)| {
        let depth: Vec<f64> = jitter.iter().map(|j| base * j).collect();
        let eye = Vector3::new(0.0, 0.0, -6.0) + eye_off;
        let camera = Camera::look_at(
            size as f64 * 1.2,
            size as f64 * 1.2,
            size as f64 * 0.5,
            size as f64 * 0.5,
            size,
            size,
            eye,
            Vector3::zeros(),
        )
        .unwrap();
        (DepthMap::from_raw(size, size, depth).unwrap(), camera)
    })
}

proptest! {
    #[test]
    fn camera_rays_are_unit_and_projection_round_trips(
        eye in vec3(3.0),
        target in vec3(1.0),
        fx in 20.0f64..80.0,
        fy in 20.0f64..80.0,
        u in 0.0f64..32.0,
        v in 0.0f64..32.0,
        depth in 0.1f64..20.0,
    ) {
        prop_assume!((eye - target).norm() > 0.1);
        let cam = Camera::look_at(fx, fy, 16.0, 16.0, 32, 32, eye, target).unwrap();

        let (origin, dir) = cam.pixel_ray(u, v);
        prop_assert_eq!(origin, eye);
        prop_assert!((dir.norm() - 1.0).abs() < 1e-12);

        let world = cam.backproject(u, v, depth);
        let (pu, pv) = cam.project(&world).expect("point in front of the camera");
        prop_assert!((pu - u).abs() < 1e-4, "u {} -> {}", u, pu);
        prop_assert!((pv - v).abs() < 1e-4, "v {} -> {}", v, pv);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cloud_normals_are_unit_and_points_reproject((depth, camera) in depth_scene(8)) {
        let cloud = depth_to_cloud(&depth, &camera).unwrap();
        for i in 0..cloud.points.len() {
            if !cloud.valid[i] {
                continue;
            }
            prop_assert!((cloud.normals[i].norm() - 1.0).abs() <= UNIT_NORMAL_TOL);
            let (u, v) = (i % cloud.width, i / cloud.width);
            let (pu, pv) = camera.project(&cloud.points[i]).expect("cloud point visible");
            prop_assert!((pu - u as f64).abs() < 1e-4);
            prop_assert!((pv - v as f64).abs() < 1e-4);
        }
    }

    #[test]
    fn normalization_fits_the_unit_cube_and_inverts((depth, camera) in depth_scene(8)) {
        let cloud = depth_to_cloud(&depth, &camera).unwrap();
        let materials = MaterialMaps::uniform(8, 8, 0.7, 0.3, 10.0).unwrap();
        let scene = Scene::new(cloud, camera, materials).unwrap();

        let (unit, transform) = normalize_scene(&scene).unwrap();
        let (lo, hi) = unit.cloud.bounds().unwrap();
        let extent = hi - lo;
        let side = extent.x.max(extent.y).max(extent.z);
        prop_assert!((side - 1.0).abs() < 1e-9);
        prop_assert!(lo.min() >= -0.5 - 1e-9 && hi.max() <= 0.5 + 1e-9);

        for i in 0..unit.cloud.points.len() {
            if unit.cloud.valid[i] {
                let back = transform.apply(&unit.cloud.points[i]);
                prop_assert!((back - scene.cloud.points[i]).norm() < 1e-9 * transform.scale);
            }
        }

        // a normalized scene is its own normalization
        let (_, again) = normalize_scene(&unit).unwrap();
        prop_assert!((again.scale - 1.0).abs() < 1e-9);
        prop_assert!(again.offset.norm() < 1e-9);
    }

    #[test]
    fn shadow_terms_are_binary_and_fd_entries_quantized(
        (depth, camera) in depth_scene(8),
        light_off in vec3(3.0),
        step in 0.01f64..0.3,
    ) {
        let cloud = depth_to_cloud(&depth, &camera).unwrap();
        let light = camera.center() + light_off;
        prop_assume!(cloud.min_distance_to(&light) > 1e-3);

        let cfg = ShadowConfig { resolution: 32, splat: 3, bias: None };
        let terms = shadow_term(&render_shadow_map(&cloud, &light, &cfg).unwrap(), &cloud);
        for (i, &t) in terms.per_light[0].iter().enumerate() {
            prop_assert!(t == 0.0 || t == 1.0, "pixel {} term {}", i, t);
        }

        let grads = grad_shadow_fd(&cloud, &light, &cfg, step).unwrap();
        let up = (1.0 - 0.0) / (2.0 * step);
        let down = (0.0 - 1.0) / (2.0 * step);
        for g in &grads {
            for axis in 0..3 {
                let v = g[axis];
                prop_assert!(v == 0.0 || v == up || v == down, "entry {}", v);
            }
        }
    }
}

proptest! {
    #[test]
    fn pfm_round_trips_bitwise(
        width in 1usize..6,
        height in 1usize..6,
        fill in prop::collection::vec((0.0f32..1e20, any::<bool>()), 25),
    ) {
        let n = width * height;
        let pixels: Vec<f32> = fill.iter().take(n).map(|&(p, ok)| if ok { p } else { f32::NAN }).collect();
        let valid: Vec<bool> = fill.iter().take(n).map(|&(_, ok)| ok).collect();
        let img = Image::new(width, height, pixels, valid).unwrap();

        let decoded = decode_pfm(&encode_pfm(&img)).unwrap();
        prop_assert_eq!(&decoded.valid, &img.valid);
        for i in 0..n {
            if img.valid[i] {
                prop_assert_eq!(decoded.pixels[i].to_bits(), img.pixels[i].to_bits());
            }
        }
    }

    #[test]
    fn parse_vec3_round_trips(
        x in any::<f64>().prop_filter("finite", |v| v.is_finite()),
        y in any::<f64>().prop_filter("finite", |v| v.is_finite()),
        z in any::<f64>().prop_filter("finite", |v| v.is_finite()),
    ) {
        let parsed = parse_vec3(&format!("{x},{y},{z}")).unwrap();
        prop_assert_eq!(parsed.x.to_bits(), x.to_bits());
        prop_assert_eq!(parsed.y.to_bits(), y.to_bits());
        prop_assert_eq!(parsed.z.to_bits(), z.to_bits());
    }

    #[test]
    fn fbm_is_deterministic_and_peaks_at_the_magnitude(
        magnitude in 0.01f64..0.5,
        seed in any::<u64>(),
    ) {
        let cfg = NoiseConfig::new(magnitude, seed).unwrap();
        let a = fbm_noise(24, 24, &cfg).unwrap();
        let b = fbm_noise(24, 24, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        let peak = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(peak <= magnitude * (1.0 + 1e-12));
    }

    #[test]
    fn perturbation_stays_within_the_magnitude_band(
        magnitude in 0.01f64..0.5,
        seed in any::<u64>(),
        k_d in 0.1f64..1.0,
        k_s in 0.1f64..1.0,
    ) {
        let materials = MaterialMaps::uniform(16, 16, k_d, k_s, 10.0).unwrap();
        let level = ReflectanceLevel::Noisy(NoiseConfig::new(magnitude, seed).unwrap());
        let out = perturb_materials(&materials, &level).unwrap();
        prop_assert_eq!(out.alpha, materials.alpha);
        let slack = magnitude * (1.0 + 1e-12);
        for (orig, new) in [(k_d, &out.k_d), (k_s, &out.k_s)] {
            for &v in new {
                prop_assert!(v >= (orig - slack).max(0.0) && v <= orig + slack);
            }
        }
    }
}
