use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stf::estimators::{EstimatorKind, EstimatorVariant};
use stf::exec::ExecMode;
use stf::experiments::{sweep_csv, taylor_bias_study, zoom_sweep, TaylorFn};
use stf::footprint_opt::{optimize_frame_patterns, OptParams};
use stf::metrics::Metrics;
use stf::noise::{band_mean, generate_stbn, load_mask, power_spectrum, save_mask, StbnParams};
use stf::render::{
    accumulate_ema, load_scene, render_frame, NoiseSource, RenderConfig, Scene,
};
use stf::texture::{load_texture_auto, FilterKind};
use stf::wave::{
    build_quad_footprint, build_self_footprint, build_square_footprint, FootprintTable, WaveConfig,
};

#[derive(Parser)]
#[command(name = "stf", about = "Stochastic texture filtering lab with wave-level sample reuse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene over one or more frames and write PNGs plus metrics.
    Render(RenderArgs),
    /// PSNR-vs-zoom sweep across estimators, written as CSV.
    Sweep(SweepArgs),
    /// Optimize sparse sharing footprints and write the table as JSON.
    GenFootprints(GenFootprintsArgs),
    /// Generate a spatiotemporal blue-noise mask.
    GenNoise(GenNoiseArgs),
    /// Radially averaged power spectrum of a noise mask, as CSV.
    AnalyzeNoise(AnalyzeNoiseArgs),
    /// Bias of shading after stochastic filtering vs. the Taylor prediction.
    Taylor(TaylorArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Onetap,
    Is,
    Mis,
    Pmis,
    Regression,
    Wis,
}

impl EstimatorArg {
    fn variant(self) -> EstimatorVariant {
        match self {
            EstimatorArg::Onetap => EstimatorVariant::OneTap,
            EstimatorArg::Is => EstimatorVariant::Is,
            EstimatorArg::Mis => EstimatorVariant::Mis,
            EstimatorArg::Pmis => EstimatorVariant::PairwiseMis,
            EstimatorArg::Regression => EstimatorVariant::Regression,
            EstimatorArg::Wis => EstimatorVariant::Wis,
        }
    }

    fn parse_name(name: &str) -> Result<EstimatorVariant> {
        Ok(
            <Self as ValueEnum>::from_str(name, true)
                .map_err(|_| anyhow::anyhow!("unknown estimator '{name}'"))?
                .variant(),
        )
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Bilinear,
    Bspline,
}

impl FilterArg {
    fn kind(self) -> FilterKind {
        match self {
            FilterArg::Bilinear => FilterKind::Bilinear,
            FilterArg::Bspline => FilterKind::BicubicBSpline,
        }
    }
}

/// `quad`, `square2..4`, `self`, or `sparse:table.json`.
fn parse_footprint(spec: &str, wave: &WaveConfig) -> Result<FootprintTable> {
    match spec {
        "quad" => Ok(build_quad_footprint(wave)?),
        "square2" => Ok(build_square_footprint(wave, 2)?),
        "square3" => Ok(build_square_footprint(wave, 3)?),
        "square4" => Ok(build_square_footprint(wave, 4)?),
        "self" => Ok(build_self_footprint(wave)),
        other => {
            if let Some(path) = other.strip_prefix("sparse:") {
                let json = std::fs::read_to_string(path)
                    .with_context(|| format!("reading footprint table {path}"))?;
                Ok(FootprintTable::from_json(&json)?)
            } else {
                bail!("unknown footprint '{other}' (quad|square2|square3|square4|self|sparse:table.json)")
            }
        }
    }
}

/// `white`, `stbn:mask.bin`, or `stbnquad:mask.bin`. Quad-optimized masks
/// differ only at generation time; sampling is identical.
fn parse_noise(spec: &str) -> Result<NoiseSource> {
    if spec == "white" {
        return Ok(NoiseSource::White);
    }
    for prefix in ["stbn:", "stbnquad:"] {
        if let Some(path) = spec.strip_prefix(prefix) {
            return Ok(NoiseSource::Mask(load_mask(Path::new(path))?));
        }
    }
    bail!("unknown noise '{spec}' (white|stbn:mask.bin|stbnquad:mask.bin)")
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum, default_value = "wis")]
    estimator: EstimatorArg,
    /// Clamp the estimate to the convex hull of the shared texel values.
    #[arg(long)]
    clamp: bool,
    /// Exact bilinear filtering when the footprint covers the support.
    #[arg(long)]
    exact: bool,
    #[arg(long, value_enum, default_value = "bilinear")]
    filter: FilterArg,
    #[arg(long, default_value = "quad")]
    footprint: String,
    #[arg(long, default_value = "white")]
    noise: String,
    #[arg(long, default_value_t = 1)]
    frames: u32,
    #[arg(long, default_value_t = 0.1)]
    ema_alpha: f64,
    /// 3x3 neighborhood clamp of the history before blending.
    #[arg(long)]
    ema_clamp: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Single-threaded execution (bitwise-identical output).
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Comma-separated zoom factors.
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,4,8,16,32,64")]
    zooms: Vec<f64>,
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',', default_value = "onetap,is,mis,pmis,regression,wis")]
    estimators: Vec<String>,
    #[arg(long, default_value_t = 4)]
    trials: u32,
    #[arg(long, value_enum, default_value = "bilinear")]
    filter: FilterArg,
    #[arg(long, default_value = "square3")]
    footprint: String,
    #[arg(long, default_value = "white")]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct GenFootprintsArgs {
    #[arg(long, default_value_t = 9)]
    size: usize,
    #[arg(long, default_value_t = 1.4)]
    sigma: f64,
    #[arg(long, default_value_t = 10000)]
    trials: usize,
    #[arg(long, default_value_t = 30)]
    restarts: usize,
    /// Independent patterns to cycle over time; 1 emits a single table,
    /// more emit a JSON array of tables.
    #[arg(long, default_value_t = 1)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenNoiseArgs {
    /// WxHxT, e.g. 64x64x16; power-of-two extents up to 128.
    #[arg(long, default_value = "64x64x16")]
    dims: String,
    #[arg(long, default_value = "scalar")]
    variant: String,
    #[arg(long, default_value_t = 1.9)]
    spatial_sigma: f64,
    #[arg(long, default_value_t = 0.8)]
    temporal_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeNoiseArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TaylorArgs {
    #[arg(long = "fn", value_enum)]
    function: TaylorFnArg,
    #[arg(long)]
    texture: PathBuf,
    #[arg(long, value_enum, default_value = "bilinear")]
    filter: FilterArg,
    /// Continuous texel-space lookup point, "x,y".
    #[arg(long, default_value = "8.3,8.7")]
    lookup: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaylorFnArg {
    Square,
    Exp,
}

fn mode(sequential: bool) -> ExecMode {
    if sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

#[derive(serde::Serialize)]
struct RenderReport {
    frames: Vec<Metrics>,
    hull_violations: Vec<u64>,
    accumulated: Option<Metrics>,
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let scene: Scene = load_scene(&args.scene)?;
    let footprint = parse_footprint(&args.footprint, &WaveConfig::default())?;
    let noise = parse_noise(&args.noise)?;
    let mut estimator = EstimatorKind::new(args.estimator.variant());
    estimator.clamp = args.clamp;
    estimator.exact_filtering = args.exact;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let mut report = RenderReport {
        frames: Vec::new(),
        hull_violations: Vec::new(),
        accumulated: None,
    };
    let mut history = None;
    let mut reference = None;
    for frame in 0..args.frames.max(1) {
        let cfg = RenderConfig {
            estimator,
            filter: args.filter.kind(),
            footprint: &footprint,
            noise: &noise,
            frame,
            seed: args.seed,
            mode: mode(args.sequential),
        };
        let result = render_frame(&scene, &cfg)?;
        result
            .image
            .save_png(&args.out.join(format!("frame_{frame:04}.png")))?;
        report.frames.push(result.metrics);
        report.hull_violations.push(result.hull_violations);
        history = Some(match history {
            None => result.image,
            Some(h) => accumulate_ema(&h, &result.image, args.ema_alpha, args.ema_clamp)?,
        });
        reference = Some(result.reference);
    }
    let reference = reference.expect("at least one frame");
    reference.save_png(&args.out.join("reference.png"))?;
    if args.frames > 1 {
        let acc = history.expect("at least one frame");
        report.accumulated = Some(stf::metrics::compute_metrics(&acc, &reference)?);
        acc.save_png(&args.out.join("accumulated.png"))?;
    }
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(args.out.join("metrics.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let footprint = parse_footprint(&args.footprint, &WaveConfig::default())?;
    let noise = parse_noise(&args.noise)?;
    let estimators: Vec<(String, EstimatorKind)> = args
        .estimators
        .iter()
        .map(|name| Ok((name.clone(), EstimatorKind::new(EstimatorArg::parse_name(name)?))))
        .collect::<Result<_>>()?;
    let rows = zoom_sweep(
        &scene,
        &estimators,
        &args.zooms,
        args.filter.kind(),
        &footprint,
        &noise,
        args.trials,
        args.seed,
        mode(args.sequential),
    )?;
    std::fs::write(&args.out, sweep_csv(&rows))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_gen_footprints(args: GenFootprintsArgs) -> Result<()> {
    let params = OptParams {
        sigma: args.sigma,
        stage2_trials: args.trials,
        restarts: args.restarts,
        footprint_size: args.size,
        seed: args.seed,
        ..OptParams::default()
    };
    let wave = WaveConfig::default();
    let results = optimize_frame_patterns(&wave, &params, args.frames.max(1));
    let json = if results.len() == 1 {
        results[0].table.to_json()
    } else {
        let tables: Vec<&FootprintTable> = results.iter().map(|r| &r.table).collect();
        serde_json::to_string_pretty(&tables)?
    };
    std::fs::write(&args.out, json)?;
    for (i, r) in results.iter().enumerate() {
        println!("frame {i}: usage stddev {:.6}", r.score);
    }
    Ok(())
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<usize> = s
        .split('x')
        .map(|p| p.parse::<usize>().context("bad dims"))
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        bail!("dims must be WxHxT, got '{s}'");
    }
    Ok((parts[0], parts[1], parts[2]))
}

fn cmd_gen_noise(args: GenNoiseArgs) -> Result<()> {
    let dims = parse_dims(&args.dims)?;
    let mut params = StbnParams {
        spatial_sigma: args.spatial_sigma,
        temporal_sigma: args.temporal_sigma,
        seed: args.seed,
        ..StbnParams::default()
    };
    match args.variant.as_str() {
        "scalar" => {}
        "quad" => params = params.quad_optimized(),
        other => bail!("unknown variant '{other}' (scalar|quad)"),
    }
    let mask = generate_stbn(dims, &params)?;
    save_mask(&args.out, &mask)?;
    println!(
        "wrote {}x{}x{} {} mask to {}",
        dims.0,
        dims.1,
        dims.2,
        args.variant,
        args.out.display()
    );
    Ok(())
}

fn cmd_analyze_noise(args: AnalyzeNoiseArgs) -> Result<()> {
    let mask = load_mask(&args.mask)?;
    let (w, h, depth) = mask.dims;
    if w != h {
        bail!("spectrum analysis expects square slices, mask is {w}x{h}");
    }
    // Average the per-slice spectra; bins line up because slices share dims.
    let mut accum: Vec<(f64, f64, usize)> = Vec::new();
    for t in 0..depth {
        let psd = power_spectrum(mask.slice(t), w);
        if accum.is_empty() {
            accum = psd.iter().map(|b| (b.frequency, 0.0, b.cells)).collect();
        }
        for (a, b) in accum.iter_mut().zip(&psd) {
            a.1 += b.energy / depth as f64;
        }
    }
    let mut csv = String::from("frequency,energy,cells\n");
    for (f, e, c) in &accum {
        csv.push_str(&format!("{f},{e:.10e},{c}\n"));
    }
    std::fs::write(&args.out, csv)?;
    let psd: Vec<stf::noise::PsdBin> = accum
        .iter()
        .map(|&(frequency, energy, cells)| stf::noise::PsdBin {
            frequency,
            energy,
            cells,
        })
        .collect();
    let nyquist = accum.last().map(|b| b.0).unwrap_or(0.0);
    println!(
        "low-band mean {:.6e}, high-band mean {:.6e}",
        band_mean(&psd, 0.0, nyquist / 8.0),
        band_mean(&psd, nyquist * 7.0 / 8.0, nyquist)
    );
    Ok(())
}

fn cmd_taylor(args: TaylorArgs) -> Result<()> {
    let tex = load_texture_auto(&args.texture)?;
    let lookup: Vec<f64> = args
        .lookup
        .split(',')
        .map(|p| p.trim().parse::<f64>().context("bad lookup point"))
        .collect::<Result<_>>()?;
    if lookup.len() != 2 {
        bail!("lookup must be 'x,y'");
    }
    let f = match args.function {
        TaylorFnArg::Square => TaylorFn::Square,
        TaylorFnArg::Exp => TaylorFn::Exp,
    };
    let report = taylor_bias_study(&tex, args.filter.kind(), (lookup[0], lookup[1]), f);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Render(args) => cmd_render(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::GenFootprints(args) => cmd_gen_footprints(args),
        Command::GenNoise(args) => cmd_gen_noise(args),
        Command::AnalyzeNoise(args) => cmd_analyze_noise(args),
        Command::Taylor(args) => cmd_taylor(args),
    }
}
