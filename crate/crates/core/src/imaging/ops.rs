use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GrayImage;
use crate::error::{Error, Result};

/// Non-overlapping `q x q` block mean. No clipping, no noise.
pub fn box_downsample(hr: &GrayImage, q: usize) -> Result<GrayImage> {
    if q == 0 {
        return Err(Error::Domain("factor must be >= 1".into()));
    }
    if hr.width() % q != 0 || hr.height() % q != 0 {
        return Err(Error::Domain(format!(
            "image {}x{} is not divisible by factor {q}",
            hr.width(),
            hr.height()
        )));
    }
    let (w, h) = (hr.width() / q, hr.height() / q);
    let norm = 1.0 / (q * q) as f64;
    GrayImage::from_fn(w, h, |r, c| {
        let mut s = 0.0;
        for dr in 0..q {
            for dc in 0..q {
                s += hr.get(r * q + dr, c * q + dc);
            }
        }
        s * norm
    })
}

/// Synthetic degradation: block mean, subsampling, additive Gaussian noise,
/// clipping to `[0, 1]`.
pub fn degrade(hr: &GrayImage, q: usize, noise_sigma: f64, seed: u64) -> Result<GrayImage> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::Domain(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    let lr = box_downsample(hr, q)?;
    let (w, h) = (lr.width(), lr.height());
    let mut px = lr.into_pixels();
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Domain(e.to_string()))?;
        px.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }
    px.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    GrayImage::new(w, h, px)
}

/// Pixel replication by `q` in each direction.
pub fn upsample_nearest(lr: &GrayImage, q: usize) -> Result<GrayImage> {
    if q == 0 {
        return Err(Error::Domain("factor must be >= 1".into()));
    }
    GrayImage::from_fn(lr.width() * q, lr.height() * q, |r, c| lr.get(r / q, c / q))
}

/// Sub-image with top-left `(row, col)`.
pub fn crop(img: &GrayImage, row: usize, col: usize, height: usize, width: usize) -> Result<GrayImage> {
    if row + height > img.height() || col + width > img.width() {
        return Err(Error::Domain(format!(
            "crop {width}x{height}+{col}+{row} exceeds {}x{} image",
            img.width(),
            img.height()
        )));
    }
    GrayImage::from_fn(width, height, |r, c| img.get(row + r, col + c))
}

/// Peak signal-to-noise ratio in dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Psnr {
    Finite(f64),
    /// The images are identical.
    Infinite,
}

impl Psnr {
    /// `f64::INFINITY` for identical images.
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Psnr::Finite(v) => s.serialize_f64(*v),
            Psnr::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Psnr::Finite(v)),
            Repr::Str(s) if s == "inf" => Ok(Psnr::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad PSNR value `{s}`"))),
        }
    }
}

/// `10 log10(peak² / MSE)`.
pub fn psnr(a: &GrayImage, b: &GrayImage, peak: f64) -> Result<Psnr> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Image(format!(
            "size mismatch: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if !(peak > 0.0) {
        return Err(Error::Domain(format!("peak must be > 0, got {peak}")));
    }
    let mse = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.pixels().len() as f64;
    if mse == 0.0 {
        return Ok(Psnr::Infinite);
    }
    Ok(Psnr::Finite(10.0 * (peak * peak / mse).log10()))
}
