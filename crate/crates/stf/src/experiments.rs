//! Offline studies: PSNR-vs-zoom sweeps and the Taylor bias check for
//! filtering-after-shading with nonlinear maps.

use crate::error::StfError;
use crate::estimators::EstimatorKind;
use crate::exec::ExecMode;
use crate::metrics::psnr_from_mse;
use crate::render::{render_frame, NoiseSource, RenderConfig, Scene};
use crate::texture::{filter_support, FilterKind, Texture};
use crate::wave::FootprintTable;

#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepRow {
    pub estimator: String,
    pub zoom: f64,
    pub mean_mse: f64,
    pub mean_psnr_db: f64,
}

/// Renders `trials` independent frames per (estimator, zoom) cell and
/// averages MSE before converting to PSNR. Rows come out in input order.
#[allow(clippy::too_many_arguments)]
pub fn zoom_sweep(
    scene: &Scene,
    estimators: &[(String, EstimatorKind)],
    zooms: &[f64],
    filter: FilterKind,
    footprint: &FootprintTable,
    noise: &NoiseSource,
    trials: u32,
    base_seed: u64,
    mode: ExecMode,
) -> Result<Vec<SweepRow>, StfError> {
    let mut rows = Vec::new();
    for (name, estimator) in estimators {
        for &zoom in zooms {
            let mut sc = scene.clone();
            sc.zoom = zoom;
            let mut mse_sum = 0.0;
            for trial in 0..trials {
                let cfg = RenderConfig {
                    estimator: *estimator,
                    filter,
                    footprint,
                    noise,
                    frame: trial,
                    seed: base_seed.wrapping_add(trial as u64),
                    mode,
                };
                mse_sum += render_frame(&sc, &cfg)?.metrics.mse;
            }
            let mean_mse = mse_sum / trials.max(1) as f64;
            rows.push(SweepRow {
                estimator: name.clone(),
                zoom,
                mean_mse,
                mean_psnr_db: psnr_from_mse(mean_mse),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("estimator,zoom,mean_mse,mean_psnr_db\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.10e},{:.6}\n",
            r.estimator, r.zoom, r.mean_mse, r.mean_psnr_db
        ));
    }
    out
}

/// Mean PSNR over several noise seeds for one configuration; the loop the
/// comparison experiments share.
#[allow(clippy::too_many_arguments)]
pub fn mean_psnr_over_seeds(
    scene: &Scene,
    estimator: EstimatorKind,
    filter: FilterKind,
    footprint: &FootprintTable,
    noise: &NoiseSource,
    seeds: &[u64],
    mode: ExecMode,
) -> Result<f64, StfError> {
    let mut mse = 0.0;
    for (i, &seed) in seeds.iter().enumerate() {
        let cfg = RenderConfig {
            estimator,
            filter,
            footprint,
            noise,
            frame: i as u32,
            seed,
            mode,
        };
        mse += render_frame(scene, &cfg)?.metrics.mse;
    }
    Ok(psnr_from_mse(mse / seeds.len().max(1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaylorFn {
    Square,
    Exp,
}

impl TaylorFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TaylorFn::Square => x * x,
            TaylorFn::Exp => x.exp(),
        }
    }

    pub fn second_derivative(self, x: f64) -> f64 {
        match self {
            TaylorFn::Square => 2.0,
            TaylorFn::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TaylorReport {
    pub mu: f64,
    pub variance: f64,
    /// E[f(X)] - f(E[X]) with the sampling distribution enumerated exactly.
    pub empirical_bias: f64,
    /// Second-order prediction f''(mu)/2 * Var[X].
    pub predicted_bias: f64,
}

/// Bias of shading a stochastically filtered scalar with a nonlinear map.
/// The stochastic lookup's distribution is finite (the filter support), so
/// every expectation here is an exact weighted sum, not a Monte Carlo run.
pub fn taylor_bias_study(
    tex: &Texture,
    filter: FilterKind,
    lookup_point: (f64, f64),
    f: TaylorFn,
) -> TaylorReport {
    let support = filter_support(filter, lookup_point);
    let mut mu = 0.0;
    let mut ex2 = 0.0;
    let mut ef = 0.0;
    for e in &support.entries {
        if e.weight <= 0.0 {
            continue;
        }
        let t = tex.fetch_texel(e.coords)[0];
        mu += e.weight * t;
        ex2 += e.weight * t * t;
        ef += e.weight * f.eval(t);
    }
    let variance = (ex2 - mu * mu).max(0.0);
    TaylorReport {
        mu,
        variance,
        empirical_bias: ef - f.eval(mu),
        predicted_bias: f.second_derivative(mu) / 2.0 * variance,
    }
}
