//! Simulated GPU waves: lane-to-pixel mapping, texel sharing footprints,
//! and lane-to-lane sample exchange.

use serde::{Deserialize, Serialize};

use crate::error::StfError;
use crate::texture::Channels;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveConfig {
    pub cols: usize,
    pub rows: usize,
}

impl WaveConfig {
    pub fn new(cols: usize, rows: usize) -> Self {
        WaveConfig { cols, rows }
    }

    pub fn lanes(&self) -> usize {
        self.cols * self.rows
    }

    /// Row-major lane id for an in-wave pixel position.
    pub fn lane_at(&self, x: usize, y: usize) -> usize {
        y * self.cols + x
    }

    pub fn lane_pos(&self, lane: usize) -> (usize, usize) {
        (lane % self.cols, lane / self.cols)
    }
}

impl Default for WaveConfig {
    /// 32 lanes as 8x4 pixels, linear row ordering.
    fn default() -> Self {
        WaveConfig { cols: 8, rows: 4 }
    }
}

/// Screen pixel for a lane given the wave's origin pixel.
pub fn lane_to_pixel(
    cfg: &WaveConfig,
    wave_origin: (i64, i64),
    lane: usize,
) -> Result<(i64, i64), StfError> {
    if lane >= cfg.lanes() {
        return Err(StfError::LaneOutOfRange {
            lane,
            lanes: cfg.lanes(),
        });
    }
    let (lx, ly) = cfg.lane_pos(lane);
    Ok((wave_origin.0 + lx as i64, wave_origin.1 + ly as i64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FootprintKind {
    Quad,
    SquareWave,
    Sparse,
    SelfOnly,
}

/// Per-lane lists of the lanes each lane reads samples from. The owning
/// lane is always first; the remaining lanes follow in row-major pixel
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FootprintTable {
    pub lanes: usize,
    pub shape: (usize, usize),
    pub footprint_size: usize,
    pub kind: FootprintKind,
    pub table: Vec<Vec<usize>>,
}

impl FootprintTable {
    pub fn wave_config(&self) -> WaveConfig {
        WaveConfig::new(self.shape.0, self.shape.1)
    }

    pub fn validate(&self) -> Result<(), StfError> {
        let err = |m: String| Err(StfError::InvalidFootprint(m));
        if self.shape.0 * self.shape.1 != self.lanes {
            return err(format!("shape {:?} != {} lanes", self.shape, self.lanes));
        }
        if self.table.len() != self.lanes {
            return err(format!("table has {} rows, expected {}", self.table.len(), self.lanes));
        }
        for (lane, list) in self.table.iter().enumerate() {
            if list.len() != self.footprint_size {
                return err(format!("lane {lane} list length {} != {}", list.len(), self.footprint_size));
            }
            if list.first() != Some(&lane) {
                return err(format!("lane {lane} footprint must start with itself"));
            }
            if list.iter().any(|&j| j >= self.lanes) {
                return err(format!("lane {lane} references a lane outside the wave"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("footprint table serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, StfError> {
        let table: FootprintTable =
            serde_json::from_str(json).map_err(|e| StfError::InvalidFootprint(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }
}

/// Sorts `others` in row-major pixel order and prepends the owning lane.
pub(crate) fn ordered_footprint(cfg: &WaveConfig, lane: usize, others: &mut Vec<usize>) -> Vec<usize> {
    others.retain(|&j| j != lane);
    others.sort_unstable_by_key(|&j| {
        let (x, y) = cfg.lane_pos(j);
        (y, x)
    });
    let mut list = Vec::with_capacity(others.len() + 1);
    list.push(lane);
    list.append(others);
    list
}

/// Fixed 2x2 quads anchored at even in-wave coordinates.
pub fn build_quad_footprint(cfg: &WaveConfig) -> Result<FootprintTable, StfError> {
    if !cfg.cols.is_multiple_of(2) || !cfg.rows.is_multiple_of(2) {
        return Err(StfError::OddWaveShape {
            cols: cfg.cols,
            rows: cfg.rows,
        });
    }
    let mut table = Vec::with_capacity(cfg.lanes());
    for lane in 0..cfg.lanes() {
        let (x, y) = cfg.lane_pos(lane);
        let (ax, ay) = (x & !1, y & !1);
        let mut members = vec![
            cfg.lane_at(ax, ay),
            cfg.lane_at(ax + 1, ay),
            cfg.lane_at(ax, ay + 1),
            cfg.lane_at(ax + 1, ay + 1),
        ];
        table.push(ordered_footprint(cfg, lane, &mut members));
    }
    Ok(FootprintTable {
        lanes: cfg.lanes(),
        shape: (cfg.cols, cfg.rows),
        footprint_size: 4,
        kind: FootprintKind::Quad,
        table,
    })
}

/// size x size block containing the lane; near wave edges the window is
/// translated to stay inside the wave so all footprints keep the same size.
pub fn build_square_footprint(cfg: &WaveConfig, size: usize) -> Result<FootprintTable, StfError> {
    if size > cfg.cols.min(cfg.rows) {
        return Err(StfError::FootprintTooLarge {
            size,
            cols: cfg.cols,
            rows: cfg.rows,
        });
    }
    let start = |p: usize, extent: usize| -> usize {
        let half = (size - 1) / 2;
        p.saturating_sub(half).min(extent - size)
    };
    let mut table = Vec::with_capacity(cfg.lanes());
    for lane in 0..cfg.lanes() {
        let (x, y) = cfg.lane_pos(lane);
        let (sx, sy) = (start(x, cfg.cols), start(y, cfg.rows));
        let mut members = Vec::with_capacity(size * size);
        for by in sy..sy + size {
            for bx in sx..sx + size {
                members.push(cfg.lane_at(bx, by));
            }
        }
        table.push(ordered_footprint(cfg, lane, &mut members));
    }
    Ok(FootprintTable {
        lanes: cfg.lanes(),
        shape: (cfg.cols, cfg.rows),
        footprint_size: size * size,
        kind: FootprintKind::SquareWave,
        table,
    })
}

/// Degenerate size-1 footprint; estimators then reduce to one-tap STF.
pub fn build_self_footprint(cfg: &WaveConfig) -> FootprintTable {
    FootprintTable {
        lanes: cfg.lanes(),
        shape: (cfg.cols, cfg.rows),
        footprint_size: 1,
        kind: FootprintKind::SelfOnly,
        table: (0..cfg.lanes()).map(|lane| vec![lane]).collect(),
    }
}

/// One lane's stochastically chosen texel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneSample {
    pub texel_coords: (i64, i64),
    pub value: Channels,
    /// Probability the owning lane drew this texel with; always > 0.
    pub pmf: f64,
    pub texture_id: u32,
}

#[derive(Debug, Clone)]
pub struct LaneRecord {
    pub lane: usize,
    pub pixel: (i64, i64),
    pub sample: LaneSample,
    pub active: bool,
}

/// Samples of the lanes in `lane`'s footprint, in footprint order.
/// Mirrors WaveReadLaneAt: reading an inactive lane is a checked error.
pub fn wave_read(
    records: &[LaneRecord],
    table: &FootprintTable,
    lane: usize,
) -> Result<Vec<LaneSample>, StfError> {
    if lane >= table.lanes || records.len() != table.lanes {
        return Err(StfError::LaneOutOfRange {
            lane,
            lanes: table.lanes,
        });
    }
    let mut out = Vec::with_capacity(table.footprint_size);
    for &j in &table.table[lane] {
        let rec = &records[j];
        if !rec.active {
            return Err(StfError::InactiveLane(j));
        }
        out.push(rec.sample);
    }
    Ok(out)
}
