//! Scene rendering: magnified textured plane, two-phase wave loop
//! (sample, then share), shading, temporal accumulation.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::StfError;
use crate::estimators::{
    estimate, shared_value_hull, EstimatorContext, EstimatorKind, EstimatorVariant, sample_texel,
};
use crate::exec::{self, ExecMode};
use crate::metrics::{compute_metrics, Image, Metrics};
use crate::noise::{sample_mask, white_noise, NoiseMask};
use crate::texture::{filter_support, reference_filter, Channels, FilterKind, Texture};
use crate::wave::{wave_read, FootprintTable, LaneRecord, LaneSample, WaveConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Shading {
    /// Identity on the filtered albedo (affine).
    Albedo,
    BlinnPhong {
        exponent: f64,
        light_dir: [f64; 3],
        view_dir: [f64; 3],
    },
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if len <= 0.0 {
        return [0.0, 0.0, 1.0];
    }
    [v[0] / len, v[1] / len, v[2] / len]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Shade a filtered albedo (and optional raw filtered normal-map value,
/// decoded from [0,1]^3 and renormalized here).
pub fn shade(shading: &Shading, albedo: Channels, normal_value: Option<Channels>) -> Channels {
    match shading {
        Shading::Albedo => albedo,
        Shading::BlinnPhong {
            exponent,
            light_dir,
            view_dir,
        } => {
            let n = match normal_value {
                Some(v) => normalize3([2.0 * v[0] - 1.0, 2.0 * v[1] - 1.0, 2.0 * v[2] - 1.0]),
                None => [0.0, 0.0, 1.0],
            };
            let l = normalize3(*light_dir);
            let h = normalize3([
                light_dir[0] + view_dir[0],
                light_dir[1] + view_dir[1],
                light_dir[2] + view_dir[2],
            ]);
            let diffuse = dot3(n, l).max(0.0);
            let specular = dot3(n, h).max(0.0).powf(*exponent);
            let mut out = [0.0; 4];
            for c in 0..4 {
                out[c] = albedo[c] * diffuse + specular;
            }
            out
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub albedo: Texture,
    pub normal_map: Option<Texture>,
    /// Texel-to-pixel magnification; >= 1 (magnification regime only).
    pub zoom: f64,
    /// Texel-space offset added to every lookup.
    pub uv_offset: (f64, f64),
    pub shading: Shading,
    pub resolution: (usize, usize),
}

impl Scene {
    pub fn validate(&self) -> Result<(), StfError> {
        if self.zoom < 1.0 {
            return Err(StfError::InvalidScene(format!("zoom {} < 1", self.zoom)));
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(StfError::InvalidScene("zero resolution".into()));
        }
        if let Some(n) = &self.normal_map {
            if n.width() != self.albedo.width() || n.height() != self.albedo.height() {
                return Err(StfError::InvalidScene(
                    "normal map resolution must match albedo".into(),
                ));
            }
        }
        Ok(())
    }

    /// Continuous texel-space lookup for a screen pixel
    /// (uv * dims - 0.5 convention; texel centers on integers).
    pub fn lookup_point(&self, pixel: (i64, i64)) -> (f64, f64) {
        (
            (pixel.0 as f64 + 0.5) / self.zoom + self.uv_offset.0 - 0.5,
            (pixel.1 as f64 + 0.5) / self.zoom + self.uv_offset.1 - 0.5,
        )
    }
}

/// Scene description on disk; texture paths resolve relative to the scene
/// file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub albedo: String,
    #[serde(default)]
    pub normal_map: Option<String>,
    pub zoom: f64,
    #[serde(default)]
    pub uv_offset: (f64, f64),
    pub shading: Shading,
    pub resolution: (usize, usize),
}

pub fn load_scene(path: &Path) -> Result<Scene, StfError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))?;
    let file: SceneFile =
        serde_json::from_str(&text).map_err(|e| StfError::InvalidScene(e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let albedo = crate::texture::load_texture_auto(&dir.join(&file.albedo))?;
    let normal_map = file
        .normal_map
        .as_ref()
        .map(|p| crate::texture::load_texture_auto(&dir.join(p)))
        .transpose()?;
    let scene = Scene {
        albedo,
        normal_map,
        zoom: file.zoom,
        uv_offset: file.uv_offset,
        shading: file.shading,
        resolution: file.resolution,
    };
    scene.validate()?;
    Ok(scene)
}

#[derive(Debug, Clone)]
pub enum NoiseSource {
    White,
    Mask(NoiseMask),
}

impl NoiseSource {
    /// The per-pixel random value driving texel selection. The seed feeds
    /// the white-noise hash; for masks it offsets the temporal slice so
    /// trials with different seeds decorrelate.
    pub fn sample(&self, seed: u64, pixel: (i64, i64), frame: u32) -> f64 {
        match self {
            NoiseSource::White => white_noise(seed, pixel, frame),
            NoiseSource::Mask(mask) => sample_mask(mask, pixel, frame.wrapping_add(seed as u32)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderConfig<'a> {
    pub estimator: EstimatorKind,
    pub filter: FilterKind,
    pub footprint: &'a FootprintTable,
    pub noise: &'a NoiseSource,
    pub frame: u32,
    pub seed: u64,
    pub mode: ExecMode,
}

#[derive(Debug, Clone)]
pub struct FrameResult {
    pub image: Image,
    /// Filtering-before-shading ground truth; estimator-independent.
    pub reference: Image,
    pub metrics: Metrics,
    /// Pixels whose pre-shading WIS value (as stored, f32) left the hull
    /// of its contributing shared texels. Always 0 for a correct build.
    pub hull_violations: u64,
}

const ALBEDO_TEX: u32 = 0;
const NORMAL_TEX: u32 = 1;

struct LaneState {
    pixel: (i64, i64),
    lookup: (f64, f64),
    ctx_albedo: EstimatorContext,
    ctx_normal: Option<EstimatorContext>,
}

/// Filtering-before-shading reference image.
pub fn render_reference(scene: &Scene, filter: FilterKind) -> Image {
    let (w, h) = scene.resolution;
    let channels = scene.albedo.channels();
    let mut img = Image::new(w, h, channels);
    for y in 0..h {
        for x in 0..w {
            let lookup = scene.lookup_point((x as i64, y as i64));
            let albedo = reference_filter(&scene.albedo, filter, lookup);
            let normal = scene
                .normal_map
                .as_ref()
                .map(|n| reference_filter(n, filter, lookup));
            let color = shade(&scene.shading, albedo, normal);
            for (c, out) in img.pixel_mut(x, y).iter_mut().enumerate() {
                *out = color[c] as f32;
            }
        }
    }
    img
}

pub fn render_frame(scene: &Scene, cfg: &RenderConfig) -> Result<FrameResult, StfError> {
    scene.validate()?;
    cfg.footprint.validate()?;
    let wave = cfg.footprint.wave_config();
    let (res_w, res_h) = scene.resolution;
    let pad_w = res_w.div_ceil(wave.cols) * wave.cols;
    let pad_h = res_h.div_ceil(wave.rows) * wave.rows;

    let channels = scene.albedo.channels();
    let mut padded = vec![0.0f32; pad_w * pad_h * channels];
    let band_rows = wave.rows;
    let band_len = pad_w * band_rows * channels;
    let violations = AtomicU64::new(0);

    exec::for_each_chunk_mut(&mut padded, band_len, cfg.mode, |band_idx, band| {
        let oy = (band_idx * band_rows) as i64;
        for wx in 0..pad_w / wave.cols {
            let origin = ((wx * wave.cols) as i64, oy);
            let v = render_wave(scene, cfg, &wave, origin, band, pad_w, channels);
            violations.fetch_add(v, Ordering::Relaxed);
        }
    });

    // Crop padding; padded lanes never reach the image or the metrics.
    let mut image = Image::new(res_w, res_h, channels);
    for y in 0..res_h {
        let src = y * pad_w * channels;
        let dst = y * res_w * channels;
        image.data[dst..dst + res_w * channels]
            .copy_from_slice(&padded[src..src + res_w * channels]);
    }

    let reference = render_reference(scene, cfg.filter);
    let metrics = compute_metrics(&image, &reference)?;
    Ok(FrameResult {
        image,
        reference,
        metrics,
        hull_violations: violations.load(Ordering::Relaxed),
    })
}

/// Renders one wave into its band; returns the WIS hull violation count.
/// Phase 1 samples one texel per lane (one random value drives all
/// textures at a pixel); phase 2 shares via wave reads and estimates.
/// Lanes in the padding still sample (helper-lane style) so edge waves
/// can share, but only in-resolution pixels are written.
fn render_wave(
    scene: &Scene,
    cfg: &RenderConfig,
    wave: &WaveConfig,
    origin: (i64, i64),
    band: &mut [f32],
    pad_w: usize,
    channels: usize,
) -> u64 {
    let lanes = wave.lanes();
    let mut states = Vec::with_capacity(lanes);
    let mut records_albedo = Vec::with_capacity(lanes);
    let mut records_normal = Vec::with_capacity(lanes);

    for lane in 0..lanes {
        let (lx, ly) = wave.lane_pos(lane);
        let pixel = (origin.0 + lx as i64, origin.1 + ly as i64);
        let lookup = scene.lookup_point(pixel);
        let support = filter_support(cfg.filter, lookup);
        let u = cfg.noise.sample(cfg.seed, pixel, cfg.frame);
        let sample = sample_texel(&support, u, &scene.albedo, ALBEDO_TEX);
        let ctx_albedo = EstimatorContext {
            filter: cfg.filter,
            lookup_point: lookup,
            support,
            texture_id: ALBEDO_TEX,
        };
        let ctx_normal = scene.normal_map.as_ref().map(|_| EstimatorContext {
            filter: cfg.filter,
            lookup_point: lookup,
            support: ctx_albedo.support.clone(),
            texture_id: NORMAL_TEX,
        });
        if let Some(normal) = &scene.normal_map {
            records_normal.push(LaneRecord {
                lane,
                pixel,
                sample: LaneSample {
                    texel_coords: sample.texel_coords,
                    value: normal.fetch_texel(sample.texel_coords),
                    pmf: sample.pmf,
                    texture_id: NORMAL_TEX,
                },
                active: true,
            });
        }
        records_albedo.push(LaneRecord {
            lane,
            pixel,
            sample,
            active: true,
        });
        states.push(LaneState {
            pixel,
            lookup,
            ctx_albedo,
            ctx_normal,
        });
    }

    let mut violations = 0u64;
    for lane in 0..lanes {
        let state = &states[lane];
        let (px, py) = state.pixel;
        if px >= pad_w as i64 {
            continue;
        }
        let lane_lookups: Vec<(f64, f64)> = cfg.footprint.table[lane]
            .iter()
            .map(|&j| states[j].lookup)
            .collect();

        let shared = wave_read(&records_albedo, cfg.footprint, lane).expect("lanes active");
        let albedo = estimate(&cfg.estimator, &shared, &state.ctx_albedo, &lane_lookups);
        if cfg.estimator.variant == EstimatorVariant::Wis && !cfg.estimator.exact_filtering {
            let (lo, hi) = shared_value_hull(&shared, &state.ctx_albedo);
            for c in 0..channels {
                let v = albedo[c] as f32;
                if v < lo[c] as f32 || v > hi[c] as f32 {
                    violations += 1;
                    break;
                }
            }
        }
        let normal = state.ctx_normal.as_ref().map(|ctx| {
            let shared = wave_read(&records_normal, cfg.footprint, lane).expect("lanes active");
            estimate(&cfg.estimator, &shared, ctx, &lane_lookups)
        });
        let color = shade(&scene.shading, albedo, normal);

        let band_y = (py - origin.1) as usize;
        let base = (band_y * pad_w + px as usize) * channels;
        for c in 0..channels {
            band[base + c] = color[c] as f32;
        }
    }
    violations
}

/// Exponential moving average accumulation with optional 3x3 neighborhood
/// clamping of the history against the current frame.
pub fn accumulate_ema(
    history: &Image,
    frame: &Image,
    alpha: f64,
    neighborhood_clamp: bool,
) -> Result<Image, StfError> {
    if history.width != frame.width
        || history.height != frame.height
        || history.channels != frame.channels
    {
        return Err(StfError::DimensionMismatch);
    }
    let (w, h, ch) = (frame.width, frame.height, frame.channels);
    let mut out = Image::new(w, h, ch);
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let cur = frame.pixel(x, y)[c] as f64;
                let mut hist = history.pixel(x, y)[c] as f64;
                if neighborhood_clamp {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let nx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                            let ny = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                            let v = frame.pixel(nx, ny)[c] as f64;
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                    hist = hist.clamp(lo, hi);
                }
                out.pixel_mut(x, y)[c] = (alpha * cur + (1.0 - alpha) * hist) as f32;
            }
        }
    }
    Ok(out)
}
