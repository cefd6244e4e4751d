//! Float image buffer and quality metrics (channel-averaged MSE, PSNR in
//! dB with peak 1.0, computed in linear space).

use crate::error::StfError;

/// Zero-MSE images report this PSNR so CSV output stays numeric.
pub const PSNR_SENTINEL_DB: f64 = 99.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Image {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let base = (y * self.width + x) * self.channels;
        &self.data[base..base + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let base = (y * self.width + x) * self.channels;
        &mut self.data[base..base + self.channels]
    }

    /// 8-bit PNG, clamped to [0,1]; no tone mapping.
    pub fn save_png(&self, path: &std::path::Path) -> Result<(), StfError> {
        let to_byte = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let w = self.width as u32;
        let h = self.height as u32;
        let err = |e: image::ImageError| StfError::Io(path.display().to_string(), e.to_string());
        match self.channels {
            1 => {
                let bytes: Vec<u8> = self.data.iter().map(|&v| to_byte(v)).collect();
                image::GrayImage::from_raw(w, h, bytes)
                    .expect("buffer sized")
                    .save(path)
                    .map_err(err)
            }
            3 => {
                let bytes: Vec<u8> = self.data.iter().map(|&v| to_byte(v)).collect();
                image::RgbImage::from_raw(w, h, bytes)
                    .expect("buffer sized")
                    .save(path)
                    .map_err(err)
            }
            _ => {
                // expand to RGBA
                let mut bytes = Vec::with_capacity(self.width * self.height * 4);
                for px in self.data.chunks_exact(self.channels) {
                    for c in 0..3 {
                        bytes.push(to_byte(*px.get(c).unwrap_or(&0.0)));
                    }
                    bytes.push(if self.channels == 4 { to_byte(px[3]) } else { 255 });
                }
                image::RgbaImage::from_raw(w, h, bytes)
                    .expect("buffer sized")
                    .save(path)
                    .map_err(err)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Metrics {
    pub mse: f64,
    pub psnr_db: f64,
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_SENTINEL_DB
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

pub fn compute_metrics(image: &Image, reference: &Image) -> Result<Metrics, StfError> {
    if image.width != reference.width
        || image.height != reference.height
        || image.channels != reference.channels
    {
        return Err(StfError::DimensionMismatch);
    }
    let mut sum = 0.0f64;
    for (a, b) in image.data.iter().zip(&reference.data) {
        let d = *a as f64 - *b as f64;
        sum += d * d;
    }
    let mse = sum / image.data.len() as f64;
    Ok(Metrics {
        mse,
        psnr_db: psnr_from_mse(mse),
    })
}
