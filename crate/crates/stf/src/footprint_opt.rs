//! Pseudorandom sparse sharing footprint generation: per-lane Gaussian
//! candidate sets, random-selection search scored by usage uniformity, and
//! coordinate descent, repeated over independent restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::exec;
use crate::wave::{ordered_footprint, FootprintKind, FootprintTable, WaveConfig};

#[derive(Debug, Clone, Copy)]
pub struct OptParams {
    pub sigma: f64,
    pub candidates_per_lane: usize,
    pub stage2_trials: usize,
    pub restarts: usize,
    pub footprint_size: usize,
    pub seed: u64,
}

impl Default for OptParams {
    fn default() -> Self {
        OptParams {
            sigma: 1.4,
            candidates_per_lane: 32,
            stage2_trials: 10_000,
            restarts: 30,
            footprint_size: 9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageHistogram {
    pub counts: Vec<usize>,
    pub mean: f64,
    pub stddev: f64,
}

/// counts[j] = number of lanes whose footprint contains lane j.
pub fn usage_histogram(table: &FootprintTable) -> UsageHistogram {
    let mut counts = vec![0usize; table.lanes];
    for list in &table.table {
        for &j in list {
            counts[j] += 1;
        }
    }
    histogram_from_counts(counts)
}

fn histogram_from_counts(counts: Vec<usize>) -> UsageHistogram {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    let var = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    UsageHistogram {
        counts,
        mean,
        stddev: var.sqrt(),
    }
}

/// Population stddev of the usage counts for one candidate selection;
/// lower is better.
pub fn score_configuration(selection: &[&Vec<usize>], lanes: usize) -> f64 {
    let mut counts = vec![0usize; lanes];
    for list in selection {
        for &j in *list {
            counts[j] += 1;
        }
    }
    histogram_from_counts(counts).stddev
}

fn sigma_for_lane(cfg: &WaveConfig, lane: usize, sigma: f64) -> f64 {
    // Border lanes get a relaxed sigma so enough distinct neighbors exist:
    // x1.5 on an edge, x2.0 in a corner.
    let (x, y) = cfg.lane_pos(lane);
    let on_x_edge = x == 0 || x == cfg.cols - 1;
    let on_y_edge = y == 0 || y == cfg.rows - 1;
    match (on_x_edge, on_y_edge) {
        (true, true) => sigma * 2.0,
        (true, false) | (false, true) => sigma * 1.5,
        (false, false) => sigma,
    }
}

/// Stage 1: candidate footprints for one lane. Integer offsets drawn from
/// a 2D normal; out-of-wave draws and repeats are discarded until
/// footprint_size distinct lanes (always including the owner) are
/// collected. The sigma grows geometrically if draws keep missing, which
/// bounds the rejection loop even as sigma -> 0.
pub fn gen_candidates(
    lane: usize,
    cfg: &WaveConfig,
    params: &OptParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let base_sigma = sigma_for_lane(cfg, lane, params.sigma);
    let (lx, ly) = cfg.lane_pos(lane);
    (0..params.candidates_per_lane)
        .map(|_| {
            let mut members = vec![lane];
            let mut sigma = base_sigma;
            let mut misses = 0;
            while members.len() < params.footprint_size.min(cfg.lanes()) {
                let normal = Normal::new(0.0, sigma).expect("positive sigma");
                let dx = normal.sample(rng).round() as i64;
                let dy = normal.sample(rng).round() as i64;
                let (x, y) = (lx as i64 + dx, ly as i64 + dy);
                let inside = x >= 0 && y >= 0 && (x as usize) < cfg.cols && (y as usize) < cfg.rows;
                let candidate = inside.then(|| cfg.lane_at(x as usize, y as usize));
                match candidate {
                    Some(j) if !members.contains(&j) => {
                        members.push(j);
                        misses = 0;
                    }
                    _ => {
                        misses += 1;
                        if misses >= 64 {
                            sigma *= 1.5;
                            misses = 0;
                        }
                    }
                }
            }
            let mut others = members;
            ordered_footprint(cfg, lane, &mut others)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub table: FootprintTable,
    pub score: f64,
    /// Coordinate-descent score after each full pass of the winning
    /// restart, starting with the stage-2 score.
    pub descent_scores: Vec<f64>,
}

struct RestartResult {
    selection: Vec<usize>,
    candidates: Vec<Vec<Vec<usize>>>,
    score: f64,
    descent_scores: Vec<f64>,
}

fn run_restart(cfg: &WaveConfig, params: &OptParams, seed: u64) -> RestartResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lanes = cfg.lanes();
    let candidates: Vec<Vec<Vec<usize>>> = (0..lanes)
        .map(|lane| gen_candidates(lane, cfg, params, &mut rng))
        .collect();

    // Stage 2: random selections, keep the best score.
    let mut best: Vec<usize> = (0..lanes)
        .map(|lane| rng.gen_range(0..candidates[lane].len()))
        .collect();
    let score_of = |sel: &[usize]| {
        let lists: Vec<&Vec<usize>> = sel
            .iter()
            .enumerate()
            .map(|(lane, &c)| &candidates[lane][c])
            .collect();
        score_configuration(&lists, lanes)
    };
    let mut best_score = score_of(&best);
    for _ in 1..params.stage2_trials {
        let sel: Vec<usize> = (0..lanes)
            .map(|lane| rng.gen_range(0..candidates[lane].len()))
            .collect();
        let s = score_of(&sel);
        if s < best_score {
            best_score = s;
            best = sel;
        }
    }

    // Stage 3: coordinate descent, full ascending-lane passes until no
    // strict improvement.
    let mut descent_scores = vec![best_score];
    loop {
        let mut improved = false;
        for lane in 0..lanes {
            let current = best[lane];
            for c in 0..candidates[lane].len() {
                if c == current {
                    continue;
                }
                let mut trial = best.clone();
                trial[lane] = c;
                let s = score_of(&trial);
                if s < best_score {
                    best_score = s;
                    best = trial;
                    improved = true;
                }
            }
        }
        descent_scores.push(best_score);
        if !improved {
            break;
        }
    }

    RestartResult {
        selection: best,
        candidates,
        score: best_score,
        descent_scores,
    }
}

/// Full three-stage optimization. Restarts are independent (and run in
/// parallel when enabled); the best score wins with lowest-restart-index
/// tie-break, so the result is deterministic for a given seed.
pub fn optimize_sparse_footprints(cfg: &WaveConfig, params: &OptParams) -> OptResult {
    let seeds: Vec<u64> = (0..params.restarts.max(1))
        .map(|i| params.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64 + 1))
        .collect();
    let results = exec::map(&seeds, |&seed| run_restart(cfg, params, seed));
    let best = results
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.score.partial_cmp(&b.score).unwrap().then(ia.cmp(ib)))
        .map(|(_, r)| r)
        .expect("at least one restart");

    let table = FootprintTable {
        lanes: cfg.lanes(),
        shape: (cfg.cols, cfg.rows),
        footprint_size: params.footprint_size.min(cfg.lanes()),
        kind: FootprintKind::Sparse,
        table: best
            .selection
            .iter()
            .enumerate()
            .map(|(lane, &c)| best.candidates[lane][c].clone())
            .collect(),
    };
    debug_assert!(table.validate().is_ok());
    OptResult {
        table,
        score: best.score,
        descent_scores: best.descent_scores.clone(),
    }
}

/// F frame-cycled patterns from F derived seeds.
pub fn optimize_frame_patterns(cfg: &WaveConfig, params: &OptParams, frames: usize) -> Vec<OptResult> {
    (0..frames)
        .map(|f| {
            let p = OptParams {
                seed: params.seed.wrapping_add((f as u64) << 32),
                ..*params
            };
            optimize_sparse_footprints(cfg, &p)
        })
        .collect()
}
