//! In-memory image representation and sRGB transfer functions.
//!
//! The whole pipeline works on interleaved RGB `f32` samples in `[0, 1]`.
//! Every image carries a color-space tag so operations that are only correct
//! in one space (`Srgb` for display-referred edits, `Linear` for physical
//! light arithmetic) can check their contract instead of silently producing
//! wrong pixels.
//!
//! Transfer functions follow the IEC 61966-2-1 piecewise definition, not the
//! gamma-2.2 approximation; the round trip is exact to well below 1e-6, which
//! the tests pin down.

use std::path::Path;

use crate::error::{Error, Result};

/// Tag for the space the samples of a [`RasterImage`] live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    /// Display-referred, sRGB-encoded samples.
    Srgb,
    /// Scene-referred linear light.
    Linear,
}

/// Interleaved RGB image, `f32` samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    space: ColorSpace,
    data: Vec<f32>,
}

/// sRGB-encoded value to linear light (per IEC 61966-2-1).
#[inline]
pub fn srgb_to_linear(s: f32) -> f32 {
    if s <= 0.04045 {
        s / 12.92
    } else {
        (((s as f64 + 0.055) / 1.055).powf(2.4)) as f32
    }
}

/// Linear light to sRGB encoding (inverse of [`srgb_to_linear`]).
#[inline]
pub fn linear_to_srgb(l: f32) -> f32 {
    if l <= 0.003_130_8 {
        l * 12.92
    } else {
        (1.055 * (l as f64).powf(1.0 / 2.4) - 0.055) as f32
    }
}

#[inline]
pub fn clamp01(x: f32) -> f32 {
    x.clamp(0.0, 1.0)
}

/// Round-half-up quantization of a unit sample to 8 bits.
#[inline]
pub fn quantize8(x: f32) -> u8 {
    (clamp01(x) * 255.0).round() as u8
}

impl RasterImage {
    /// Build an image from raw samples. `data.len()` must be `w * h * 3` and
    /// every sample must already be a finite value in `[0, 1]`.
    pub fn from_samples(width: u32, height: u32, space: ColorSpace, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Param(format!(
                "image dimensions must be nonzero, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::Param(format!(
                "sample buffer length {} does not match {width}x{height}x3 = {expected}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite() || **x < 0.0 || **x > 1.0) {
            return Err(Error::Param(format!(
                "sample {bad} outside [0, 1]; normalize before constructing"
            )));
        }
        Ok(RasterImage {
            width,
            height,
            space,
            data,
        })
    }

    /// Constant-color image, mostly useful in tests and previews.
    pub fn filled(width: u32, height: u32, space: ColorSpace, rgb: [f32; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&rgb);
        }
        Self::from_samples(width, height, space, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn samples(&self) -> &[f32] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Number of pixels (not samples).
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [f32; 3]) {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Error unless the image is tagged with `expected`.
    pub fn require_space(&self, expected: ColorSpace) -> Result<()> {
        if self.space == expected {
            Ok(())
        } else {
            Err(Error::ColorSpace {
                expected,
                actual: self.space,
            })
        }
    }

    /// Decode the whole image into the other space.
    pub fn to_space(&self, target: ColorSpace) -> RasterImage {
        if self.space == target {
            return self.clone();
        }
        let f = match target {
            ColorSpace::Linear => srgb_to_linear,
            ColorSpace::Srgb => linear_to_srgb,
        };
        RasterImage {
            width: self.width,
            height: self.height,
            space: target,
            data: self.data.iter().map(|&s| clamp01(f(s))).collect(),
        }
    }

    /// Quantized 8-bit view of the samples (round-half-up). This is the byte
    /// sequence that both file encoding and content digests are defined over.
    pub fn quantized(&self) -> Vec<u8> {
        self.data.iter().map(|&s| quantize8(s)).collect()
    }
}

/// Decode a PNG or JPEG file into unit-range sRGB samples.
///
/// Grayscale images are replicated across the three channels; an alpha
/// channel is dropped. Sixteen-bit sources are refused rather than silently
/// truncated, since the pipeline's digests are defined over 8-bit data.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let dynimg = image::open(path).map_err(|e| Error::codec(path, e))?;
    use image::DynamicImage::*;
    match dynimg {
        ImageLuma16(_) | ImageLumaA16(_) | ImageRgb16(_) | ImageRgba16(_) | ImageRgb32F(_)
        | ImageRgba32F(_) => {
            return Err(Error::Param(format!(
                "{}: only 8-bit images are supported (got a deeper pixel format)",
                path.display()
            )));
        }
        _ => {}
    }
    let rgb = dynimg.to_rgb8();
    let (width, height) = rgb.dimensions();
    if width == 0 || height == 0 {
        return Err(Error::Param(format!(
            "{}: image has zero dimension",
            path.display()
        )));
    }
    let data = rgb.as_raw().iter().map(|&b| b as f32 / 255.0).collect();
    RasterImage::from_samples(width, height, ColorSpace::Srgb, data)
}

/// Encode to PNG or JPEG, chosen by file extension.
///
/// Samples are clamped and quantized round-half-up to 8 bits. The image must
/// be in sRGB space — writing linear-light samples into an sRGB container is
/// almost always a bug upstream.
pub fn save_image(img: &RasterImage, path: &Path) -> Result<()> {
    img.require_space(ColorSpace::Srgb)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let format = match ext.as_str() {
        "png" => image::ImageFormat::Png,
        "jpg" | "jpeg" => image::ImageFormat::Jpeg,
        other => {
            return Err(Error::Param(format!(
                "unsupported output extension `{other}` (use .png, .jpg or .jpeg)"
            )));
        }
    };
    let buf: image::RgbImage =
        image::ImageBuffer::from_raw(img.width, img.height, img.quantized()).expect("sized buffer");
    buf.save_with_format(path, format)
        .map_err(|e| Error::codec(path, e))
}
