use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stf::estimators::{EstimatorKind, EstimatorVariant};
use stf::exec::ExecMode;
use stf::noise::white_noise;
use stf::render::{render_frame, NoiseSource, RenderConfig, Scene, Shading};
use stf::texture::{AddressMode, FilterKind, Texture};
use stf::wave::{build_square_footprint, WaveConfig};

fn bench_scene() -> Scene {
    let (w, h) = (128, 128);
    let data: Vec<f32> = (0..w * h)
        .map(|i| white_noise(3, ((i % w) as i64, (i / w) as i64), 0) as f32)
        .collect();
    Scene {
        albedo: Texture::new(w, h, 1, data, AddressMode::Wrap).unwrap(),
        normal_map: None,
        zoom: 16.0,
        uv_offset: (0.25, 0.75),
        shading: Shading::Albedo,
        resolution: (256, 256),
    }
}

fn render_modes(c: &mut Criterion) {
    let scene = bench_scene();
    let footprint = build_square_footprint(&WaveConfig::default(), 3).unwrap();
    let noise = NoiseSource::White;
    let mut group = c.benchmark_group("render_wis_256");
    for (name, mode) in [
        ("parallel", ExecMode::Parallel),
        ("sequential", ExecMode::Sequential),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            let cfg = RenderConfig {
                estimator: EstimatorKind::new(EstimatorVariant::Wis),
                filter: FilterKind::Bilinear,
                footprint: &footprint,
                noise: &noise,
                frame: 0,
                seed: 1,
                mode,
            };
            b.iter(|| render_frame(&scene, &cfg).unwrap());
        });
    }
    group.finish();
}

fn estimator_cost(c: &mut Criterion) {
    let scene = bench_scene();
    let footprint = build_square_footprint(&WaveConfig::default(), 3).unwrap();
    let noise = NoiseSource::White;
    let mut group = c.benchmark_group("estimators_256");
    for (name, variant) in [
        ("onetap", EstimatorVariant::OneTap),
        ("wis", EstimatorVariant::Wis),
        ("pmis", EstimatorVariant::PairwiseMis),
    ] {
        group.bench_function(name, |b| {
            let cfg = RenderConfig {
                estimator: EstimatorKind::new(variant),
                filter: FilterKind::Bilinear,
                footprint: &footprint,
                noise: &noise,
                frame: 0,
                seed: 1,
                mode: ExecMode::Parallel,
            };
            b.iter(|| render_frame(&scene, &cfg).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, render_modes, estimator_cost);
criterion_main!(benches);
