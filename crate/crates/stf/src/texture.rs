//! Texture storage, reconstruction filters, reference filtering, and
//! filter PMF evaluation.
//!
//! Continuous texel coordinates follow the `uv * dims - 0.5` convention:
//! texel centers sit on the integer grid.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::StfError;

/// Per-texel channel vector. Channels beyond `Texture::channels` are zero.
pub type Channels = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddressMode {
    Clamp,
    Wrap,
}

#[derive(Debug, Clone)]
pub struct Texture {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
    pub address_mode: AddressMode,
}

impl Texture {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
        address_mode: AddressMode,
    ) -> Result<Self, StfError> {
        if width == 0 || height == 0 {
            return Err(StfError::ZeroSizedImage);
        }
        if channels == 0 || channels > 4 {
            return Err(StfError::UnsupportedChannels(channels));
        }
        if data.len() != width * height * channels {
            return Err(StfError::DataLengthMismatch {
                expected: width * height * channels,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(StfError::NonFiniteTexel);
        }
        Ok(Texture {
            width,
            height,
            channels,
            data,
            address_mode,
        })
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Texture::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
            AddressMode::Clamp,
        )
        .expect("valid constant texture")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn resolve(&self, coord: i64, extent: usize) -> usize {
        let n = extent as i64;
        let c = match self.address_mode {
            AddressMode::Clamp => coord.clamp(0, n - 1),
            AddressMode::Wrap => coord.rem_euclid(n),
        };
        c as usize
    }

    /// Value at integer coords after applying the address mode. Coords may be
    /// out of range.
    pub fn fetch_texel(&self, coords: (i64, i64)) -> Channels {
        let x = self.resolve(coords.0, self.width);
        let y = self.resolve(coords.1, self.height);
        let base = (y * self.width + x) * self.channels;
        let mut out = [0.0; 4];
        for c in 0..self.channels {
            out[c] = self.data[base + c] as f64;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Bilinear,
    BicubicBSpline,
}

impl FilterKind {
    fn weight_1d(self, d: f64) -> f64 {
        let a = d.abs();
        match self {
            FilterKind::Bilinear => (1.0 - a).max(0.0),
            FilterKind::BicubicBSpline => {
                if a < 1.0 {
                    ((3.0 * a - 6.0) * a * a + 4.0) / 6.0
                } else if a < 2.0 {
                    let t = 2.0 - a;
                    t * t * t / 6.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Separable product of the 1D kernel; `offset = lookup_point - texel`.
    pub fn weight(self, offset: (f64, f64)) -> f64 {
        self.weight_1d(offset.0) * self.weight_1d(offset.1)
    }

    /// Texels per axis covered by the support.
    pub fn support_width(self) -> usize {
        match self {
            FilterKind::Bilinear => 2,
            FilterKind::BicubicBSpline => 4,
        }
    }
}

/// PMF for the current filter sampling a given texel. Equals the filter
/// weight because both filters are normalized with nonnegative weights.
pub fn get_filter_pmf(kind: FilterKind, lookup_point: (f64, f64), texel: (i64, i64)) -> f64 {
    kind.weight((lookup_point.0 - texel.0 as f64, lookup_point.1 - texel.1 as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEntry {
    /// Unclamped integer texel coordinates; addressing is applied on fetch
    /// so that lanes agree on texel identity.
    pub coords: (i64, i64),
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct FilterSupport {
    pub entries: Vec<SupportEntry>,
    pub lookup_point: (f64, f64),
}

/// All texels under the filter at `lookup_point`, zero-weight entries kept
/// (fixed 4 / 16 entry counts).
pub fn filter_support(kind: FilterKind, lookup_point: (f64, f64)) -> FilterSupport {
    let (lo, hi) = match kind {
        FilterKind::Bilinear => (0i64, 1i64),
        FilterKind::BicubicBSpline => (-1i64, 2i64),
    };
    let bx = lookup_point.0.floor() as i64;
    let by = lookup_point.1.floor() as i64;
    let mut entries = Vec::with_capacity(kind.support_width() * kind.support_width());
    for dy in lo..=hi {
        for dx in lo..=hi {
            let coords = (bx + dx, by + dy);
            entries.push(SupportEntry {
                coords,
                weight: get_filter_pmf(kind, lookup_point, coords),
            });
        }
    }
    FilterSupport {
        entries,
        lookup_point,
    }
}

/// Exact weighted sum over the filter support; the filtering-before-shading
/// ground truth.
pub fn reference_filter(tex: &Texture, kind: FilterKind, lookup_point: (f64, f64)) -> Channels {
    let support = filter_support(kind, lookup_point);
    let mut out = [0.0; 4];
    for e in &support.entries {
        let v = tex.fetch_texel(e.coords);
        for c in 0..4 {
            out[c] += e.weight * v[c];
        }
    }
    out
}

// --- file I/O ---------------------------------------------------------

pub const RAW_MAGIC: &[u8; 4] = b"STFT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextureFormat {
    Png,
    Pfm,
    RawF32,
}

impl TextureFormat {
    pub fn from_path(path: &Path) -> Option<TextureFormat> {
        match path.extension()?.to_str()? {
            "png" => Some(TextureFormat::Png),
            "pfm" => Some(TextureFormat::Pfm),
            "bin" | "raw" => Some(TextureFormat::RawF32),
            _ => None,
        }
    }
}

pub fn load_texture(path: &Path, format: TextureFormat) -> Result<Texture, StfError> {
    match format {
        TextureFormat::Png => load_png(path),
        TextureFormat::Pfm => load_pfm(path),
        TextureFormat::RawF32 => load_raw_f32(path),
    }
}

/// Loads by file extension (`.png`, `.pfm`, `.bin`/`.raw`).
pub fn load_texture_auto(path: &Path) -> Result<Texture, StfError> {
    let format = TextureFormat::from_path(path)
        .ok_or_else(|| StfError::UnknownFormat(path.display().to_string()))?;
    load_texture(path, format)
}

/// 8-bit PNG values map to value/255 in [0,1]; no gamma decode.
fn load_png(path: &Path) -> Result<Texture, StfError> {
    let img = image::open(path).map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))?;
    let (w, h, channels, bytes): (usize, usize, usize, Vec<u8>) = match img {
        image::DynamicImage::ImageLuma8(b) => (b.width() as usize, b.height() as usize, 1, b.into_raw()),
        image::DynamicImage::ImageLumaA8(b) => (b.width() as usize, b.height() as usize, 2, b.into_raw()),
        image::DynamicImage::ImageRgb8(b) => (b.width() as usize, b.height() as usize, 3, b.into_raw()),
        image::DynamicImage::ImageRgba8(b) => (b.width() as usize, b.height() as usize, 4, b.into_raw()),
        other => {
            let b = other.to_rgba8();
            (b.width() as usize, b.height() as usize, 4, b.into_raw())
        }
    };
    let data = bytes.iter().map(|&b| b as f32 / 255.0).collect();
    Texture::new(w, h, channels, data, AddressMode::Clamp)
}

fn load_pfm(path: &Path) -> Result<Texture, StfError> {
    let bytes = std::fs::read(path).map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))?;
    parse_pfm(&bytes).ok_or_else(|| StfError::Parse(path.display().to_string()))
}

fn parse_pfm(bytes: &[u8]) -> Option<Texture> {
    let mut pos = 0;
    let mut token = || {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let t = std::str::from_utf8(&bytes[start..pos]).ok()?.to_string();
        pos += 1; // single whitespace after each header token
        Some(t)
    };
    let magic = token()?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        _ => return None,
    };
    let width: usize = token()?.parse().ok()?;
    let height: usize = token()?.parse().ok()?;
    let scale: f32 = token()?.parse().ok()?;
    let little_endian = scale < 0.0;
    let count = width * height * channels;
    if bytes.len() < pos + count * 4 {
        return None;
    }
    let mut data = vec![0f32; count];
    // PFM stores rows bottom-to-top.
    for row in 0..height {
        let src_row = height - 1 - row;
        for i in 0..width * channels {
            let off = pos + (src_row * width * channels + i) * 4;
            let raw: [u8; 4] = bytes[off..off + 4].try_into().ok()?;
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            data[row * width * channels + i] = v * scale.abs().max(f32::MIN_POSITIVE);
        }
    }
    Texture::new(width, height, channels, data, AddressMode::Clamp).ok()
}

/// Raw float32 little-endian with 16-byte header {magic "STFT", u32 width,
/// u32 height, u32 channels}.
fn load_raw_f32(path: &Path) -> Result<Texture, StfError> {
    let mut file =
        std::fs::File::open(path).map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))?;
    parse_raw_f32(&bytes).ok_or_else(|| StfError::Parse(path.display().to_string()))
}

fn parse_raw_f32(bytes: &[u8]) -> Option<Texture> {
    if bytes.len() < 16 || &bytes[0..4] != RAW_MAGIC {
        return None;
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (w, h, c) = (u32_at(4), u32_at(8), u32_at(12));
    let count = w.checked_mul(h)?.checked_mul(c)?;
    if bytes.len() != 16 + count * 4 {
        return None;
    }
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Texture::new(w, h, c, data, AddressMode::Clamp).ok()
}

pub fn save_raw_f32(path: &Path, tex: &Texture) -> Result<(), StfError> {
    let mut out = Vec::with_capacity(16 + tex.data.len() * 4);
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(tex.width as u32).to_le_bytes());
    out.extend_from_slice(&(tex.height as u32).to_le_bytes());
    out.extend_from_slice(&(tex.channels as u32).to_le_bytes());
    for v in &tex.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))?;
    file.write_all(&out)
        .map_err(|e| StfError::Io(path.display().to_string(), e.to_string()))
}
