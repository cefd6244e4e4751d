//! Per-pixel random sources: hash-based white noise, scalar spatiotemporal
//! blue noise via void-and-cluster, the quad-weighted variant, and radial
//! power spectrum analysis.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::StfError;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Deterministic hash-based white noise in [0,1).
pub fn white_noise(seed: u64, pixel: (i64, i64), frame: u32) -> f64 {
    let mut h = splitmix64(seed ^ 0xA076_1D64_78BD_642F);
    h = splitmix64(h ^ pixel.0 as u64);
    h = splitmix64(h ^ pixel.1 as u64);
    h = splitmix64(h ^ frame as u64);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// 3D (x, y, frame) scalar mask; each fixed-t slice holds every value
/// k/(x*y) + 1/(2*x*y) exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMask {
    pub dims: (usize, usize, usize),
    pub values: Vec<f64>,
}

impl NoiseMask {
    fn index(&self, x: usize, y: usize, t: usize) -> usize {
        (t * self.dims.1 + y) * self.dims.0 + x
    }

    pub fn slice(&self, t: usize) -> &[f64] {
        let n = self.dims.0 * self.dims.1;
        &self.values[t * n..(t + 1) * n]
    }
}

/// Toroidal tiling in all three dimensions.
pub fn sample_mask(mask: &NoiseMask, pixel: (i64, i64), frame: u32) -> f64 {
    let x = pixel.0.rem_euclid(mask.dims.0 as i64) as usize;
    let y = pixel.1.rem_euclid(mask.dims.1 as i64) as usize;
    let t = (frame as usize) % mask.dims.2;
    mask.values[mask.index(x, y, t)]
}

#[derive(Debug, Clone, Copy)]
pub struct StbnParams {
    pub spatial_sigma: f64,
    pub temporal_sigma: f64,
    /// 2.0 for the quad-optimized variant, 1.0 otherwise.
    pub quad_boost: f64,
    pub seed: u64,
}

impl Default for StbnParams {
    fn default() -> Self {
        StbnParams {
            spatial_sigma: 1.9,
            temporal_sigma: 0.8,
            quad_boost: 1.0,
            seed: 0,
        }
    }
}

impl StbnParams {
    pub fn quad_optimized(mut self) -> Self {
        self.quad_boost = 2.0;
        self
    }
}

fn is_pow2(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// Scalar spatiotemporal blue noise by greedy void-and-cluster ranking
/// over a 3D energy field. Energy between sites is a separable product of
/// toroidal spatial and temporal Gaussians; in the quad variant the
/// spatial term of same-slice 2x2 quad partners is multiplied by
/// `quad_boost`. Ranks are assigned round-robin across slices so each
/// slice stays a complete dither mask.
pub fn generate_stbn(dims: (usize, usize, usize), params: &StbnParams) -> Result<NoiseMask, StfError> {
    let (w, h, depth) = dims;
    if !is_pow2(w) || !is_pow2(h) || !is_pow2(depth) || w > 128 || h > 128 || depth > 128 {
        return Err(StfError::BadMaskDims(w, h, depth));
    }
    let slice_len = w * h;
    let total = slice_len * depth;

    // Precomputed toroidal kernels.
    let toroidal = |d: usize, n: usize| d.min(n - d) as f64;
    let s2 = 2.0 * params.spatial_sigma * params.spatial_sigma;
    let mut spatial = vec![0.0f64; slice_len];
    for dy in 0..h {
        for dx in 0..w {
            let (ddx, ddy) = (toroidal(dx, w), toroidal(dy, h));
            spatial[dy * w + dx] = (-(ddx * ddx + ddy * ddy) / s2).exp();
        }
    }
    let t2 = 2.0 * params.temporal_sigma * params.temporal_sigma;
    let temporal: Vec<f64> = (0..depth)
        .map(|dt| {
            let d = toroidal(dt, depth);
            (-(d * d) / t2).exp()
        })
        .collect();

    // Tiny per-cell jitter breaks energy ties deterministically and picks
    // the first point of each slice.
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(params.seed));
    let mut energy: Vec<f64> = (0..total).map(|_| rng.gen::<f64>() * 1e-9).collect();
    let mut occupied = vec![false; total];
    let mut ranks = vec![0usize; total];

    let splat = |energy: &mut [f64], px: usize, py: usize, pt: usize| {
        for (t, &wt) in temporal.iter().enumerate() {
            if wt < 1e-7 && t != 0 {
                continue;
            }
            let tt = (pt + t) % depth;
            let base = tt * slice_len;
            for y in 0..h {
                let dy = (y + h - py) % h;
                let row = &spatial[dy * w..dy * w + w];
                let out = &mut energy[base + y * w..base + y * w + w];
                for (x, o) in out.iter_mut().enumerate() {
                    let dx = (x + w - px) % w;
                    *o += wt * row[dx];
                }
            }
        }
        if params.quad_boost > 1.0 {
            // Extra spatial energy onto same-slice quad partners.
            let extra = params.quad_boost - 1.0;
            let (qx, qy) = (px & !1, py & !1);
            let base = pt * slice_len;
            for y in qy..qy + 2 {
                for x in qx..qx + 2 {
                    if x == px && y == py {
                        continue;
                    }
                    let dx = (x + w - px) % w;
                    let dy = (y + h - py) % h;
                    energy[base + y * w + x] += extra * spatial[dy * w + dx];
                }
            }
        }
    };

    for rank in 0..slice_len {
        for t in 0..depth {
            let base = t * slice_len;
            let mut best = usize::MAX;
            let mut best_e = f64::INFINITY;
            for i in 0..slice_len {
                if !occupied[base + i] && energy[base + i] < best_e {
                    best_e = energy[base + i];
                    best = i;
                }
            }
            occupied[base + best] = true;
            ranks[base + best] = rank;
            splat(&mut energy, best % w, best / w, t);
        }
    }

    let norm = 1.0 / slice_len as f64;
    let values = ranks.iter().map(|&r| (r as f64 + 0.5) * norm).collect();
    Ok(NoiseMask { dims, values })
}

/// One bin of a radially averaged power spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdBin {
    pub frequency: f64,
    pub energy: f64,
    pub cells: usize,
}

/// Radially averaged PSD of one square mask slice: 2D DFT of the
/// mean-subtracted slice, magnitude squared, binned by integer radius.
/// DC is excluded.
pub fn power_spectrum(slice: &[f64], n: usize) -> Vec<PsdBin> {
    assert_eq!(slice.len(), n * n, "square slice required");
    let mean = slice.iter().sum::<f64>() / slice.len() as f64;
    let mut buf: Vec<Complex<f64>> = slice.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    // rows
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    // columns via transpose
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            col[y] = buf[y * n + x];
        }
        fft.process(&mut col);
        for y in 0..n {
            buf[y * n + x] = col[y];
        }
    }

    let max_bin = n / 2 * 2; // corners reach sqrt(2) * n/2
    let mut sums = vec![0.0f64; max_bin + 1];
    let mut counts = vec![0usize; max_bin + 1];
    for ky in 0..n {
        for kx in 0..n {
            if kx == 0 && ky == 0 {
                continue;
            }
            let fx = kx.min(n - kx) as f64;
            let fy = ky.min(n - ky) as f64;
            let r = (fx * fx + fy * fy).sqrt().round() as usize;
            let e = buf[ky * n + kx].norm_sqr() / (n * n) as f64;
            sums[r] += e;
            counts[r] += 1;
        }
    }
    (0..=max_bin)
        .filter(|&r| counts[r] > 0)
        .map(|r| PsdBin {
            frequency: r as f64,
            energy: sums[r] / counts[r] as f64,
            cells: counts[r],
        })
        .collect()
}

/// Mean PSD energy over bins with frequency in [lo, hi], weighted by bin
/// cell counts.
pub fn band_mean(psd: &[PsdBin], lo: f64, hi: f64) -> f64 {
    let mut sum = 0.0;
    let mut cells = 0usize;
    for b in psd {
        if b.frequency >= lo && b.frequency <= hi {
            sum += b.energy * b.cells as f64;
            cells += b.cells;
        }
    }
    if cells == 0 {
        0.0
    } else {
        sum / cells as f64
    }
}

// --- mask file I/O ----------------------------------------------------
//
// Raw float32 little-endian with the texture header plus a u32 depth
// field: {magic "STFT", u32 width, u32 height, u32 channels=1, u32 depth}.

pub fn save_mask(path: &Path, mask: &NoiseMask) -> Result<(), StfError> {
    let mut out = Vec::with_capacity(20 + mask.values.len() * 4);
    out.extend_from_slice(crate::texture::RAW_MAGIC);
    out.extend_from_slice(&(mask.dims.0 as u32).to_le_bytes());
    out.extend_from_slice(&(mask.dims.1 as u32).to_le_bytes());
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&(mask.dims.2 as u32).to_le_bytes());
    for v in &mask.values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))?;
    file.write_all(&out)
        .map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))
}

pub fn load_mask(path: &Path) -> Result<NoiseMask, StfError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))?
        .read_to_end(&mut bytes)
        .map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))?;
    let parse = || -> Option<NoiseMask> {
        if bytes.len() < 20 || &bytes[0..4] != crate::texture::RAW_MAGIC {
            return None;
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let (w, h, c, d) = (u32_at(4), u32_at(8), u32_at(12), u32_at(16));
        if c != 1 {
            return None;
        }
        let count = w.checked_mul(h)?.checked_mul(d)?;
        if bytes.len() != 20 + count * 4 {
            return None;
        }
        let values = bytes[20..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        Some(NoiseMask {
            dims: (w, h, d),
            values,
        })
    };
    parse().ok_or_else(|| StfError::Parse(path.display().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_deterministic_and_decorrelated() {
        let a = white_noise(7, (3, 4), 2);
        let b = white_noise(7, (3, 4), 2);
        assert_eq!(a, b);
        assert_ne!(white_noise(7, (3, 4), 3), a);
        assert!((0.0..1.0).contains(&a));
    }

    #[test]
    fn white_noise_mean() {
        let mut sum = 0.0;
        let n = 1_000_000;
        for i in 0..n {
            sum += white_noise(1, (i % 1000, i / 1000), 0);
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    fn rank_property(mask: &NoiseMask) {
        let (w, h, d) = mask.dims;
        let n = w * h;
        for t in 0..d {
            let mut seen = vec![false; n];
            for &v in mask.slice(t) {
                let k = (v * n as f64 - 0.5).round() as usize;
                let expect = (k as f64 + 0.5) / n as f64;
                assert!((v - expect).abs() < 1e-12);
                assert!(!seen[k], "duplicate rank {k} in slice {t}");
                seen[k] = true;
            }
        }
    }

    #[test]
    fn stbn_rank_property_and_determinism() {
        let params = StbnParams::default();
        let a = generate_stbn((8, 8, 2), &params).unwrap();
        rank_property(&a);
        let b = generate_stbn((8, 8, 2), &params).unwrap();
        assert_eq!(a, b);
        let c = generate_stbn((8, 8, 2), &StbnParams { seed: 1, ..params }).unwrap();
        assert_ne!(a, c);
        assert!(generate_stbn((7, 8, 1), &params).is_err());
    }

    #[test]
    fn quad_variant_rank_property_and_partner_separation() {
        let plain = generate_stbn((16, 16, 2), &StbnParams::default()).unwrap();
        let quad = generate_stbn((16, 16, 2), &StbnParams::default().quad_optimized()).unwrap();
        rank_property(&quad);

        // mean absolute value difference between 2x2 quad partners grows
        // under the boosted energy
        let partner_gap = |m: &NoiseMask| {
            let (w, h, d) = m.dims;
            let mut sum = 0.0;
            let mut count = 0usize;
            for t in 0..d {
                let s = m.slice(t);
                for qy in (0..h).step_by(2) {
                    for qx in (0..w).step_by(2) {
                        let vals = [
                            s[qy * w + qx],
                            s[qy * w + qx + 1],
                            s[(qy + 1) * w + qx],
                            s[(qy + 1) * w + qx + 1],
                        ];
                        for i in 0..4 {
                            for j in i + 1..4 {
                                sum += (vals[i] - vals[j]).abs();
                                count += 1;
                            }
                        }
                    }
                }
            }
            sum / count as f64
        };
        assert!(
            partner_gap(&quad) > partner_gap(&plain),
            "quad {} !> plain {}",
            partner_gap(&quad),
            partner_gap(&plain)
        );
    }

    #[test]
    fn mask_tiling() {
        let mask = generate_stbn((8, 8, 2), &StbnParams::default()).unwrap();
        assert_eq!(sample_mask(&mask, (3, 5), 0), sample_mask(&mask, (11, 5), 0));
        assert_eq!(sample_mask(&mask, (3, 5), 0), sample_mask(&mask, (3, 5), 2));
        assert_eq!(sample_mask(&mask, (0, 0), 0), mask.values[0]);
        assert_eq!(sample_mask(&mask, (-5, -3), 1), sample_mask(&mask, (3, 5), 1));
    }

    #[test]
    fn psd_constant_slice_is_zero() {
        let psd = power_spectrum(&vec![0.7; 16 * 16], 16);
        for b in &psd {
            assert!(b.energy.abs() < 1e-20);
        }
    }

    #[test]
    fn psd_white_noise_is_flat() {
        // 32 realizations; every binwise mean within 3 sigma of the global
        // mean. Conjugate symmetry of the real-input DFT halves the
        // effective sample count, hence the factor 2 in the variance.
        let n = 32;
        let reals = 32;
        let mut bin_means: Vec<f64> = Vec::new();
        let mut cells: Vec<usize> = Vec::new();
        for r in 0..reals {
            let slice: Vec<f64> = (0..n * n)
                .map(|i| white_noise(r as u64, ((i % n) as i64, (i / n) as i64), 0))
                .collect();
            let psd = power_spectrum(&slice, n);
            if bin_means.is_empty() {
                bin_means = vec![0.0; psd.len()];
                cells = psd.iter().map(|b| b.cells).collect();
            }
            for (a, b) in bin_means.iter_mut().zip(&psd) {
                *a += b.energy / reals as f64;
            }
        }
        let global = bin_means.iter().sum::<f64>() / bin_means.len() as f64;
        for (m, &c) in bin_means.iter().zip(&cells) {
            let sigma = global * (2.0 / (c * reals) as f64).sqrt();
            assert!(
                (m - global).abs() < 3.0 * sigma,
                "bin mean {m} vs global {global} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn stbn_low_frequency_suppression() {
        let mask = generate_stbn((64, 64, 1), &StbnParams::default()).unwrap();
        let psd = power_spectrum(mask.slice(0), 64);
        let nyquist = 32.0;
        let low = band_mean(&psd, 1.0, nyquist / 8.0);
        let high = band_mean(&psd, nyquist * 7.0 / 8.0, nyquist);
        assert!(low < high, "low {low} !< high {high}");
    }

    #[test]
    fn mask_io_roundtrip() {
        let dir = std::env::temp_dir().join("stf_mask_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.bin");
        let mask = generate_stbn((8, 8, 2), &StbnParams::default()).unwrap();
        save_mask(&path, &mask).unwrap();
        let back = load_mask(&path).unwrap();
        assert_eq!(back.dims, mask.dims);
        for (a, b) in back.values.iter().zip(&mask.values) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
