//! The lighting operation family.
//!
//! Twelve pure, deterministic pixel transforms that model illumination
//! degradations: global exposure shift, directional soft shadow, warm/cool
//! color temperature, vignetting, contrast, gamma, brightness, film grain,
//! atmospheric haze, hue-directed color cast, and lens flare.
//!
//! Conventions shared by every op:
//!
//! * input and output are sRGB-encoded unit-range images; only
//!   [`apply_exposure`] round-trips through linear light (an exposure change
//!   is a multiplication of physical light, so it must happen there);
//! * outputs are clamped to `[0, 1]` and keep the input dimensions;
//! * identity parameters (`ev = 0`, `factor = 1`, `strength = 0`, ...)
//!   return the input bit-exactly — callers rely on this to treat "no-op"
//!   steps as true no-ops;
//! * all randomness (grain) is counter-based off an explicit seed carried in
//!   the step itself, so replaying a recorded step reproduces the exact
//!   noise field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{clamp01, linear_to_srgb, srgb_to_linear, ColorSpace, RasterImage};
use crate::rng::standard_normal_at;

/// Discriminant for the operation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Exposure,
    Shadow,
    Warm,
    Cool,
    Vignette,
    Contrast,
    Gamma,
    Brightness,
    Grain,
    Haze,
    ColorCast,
    Flare,
}

impl OpKind {
    pub const ALL: [OpKind; 12] = [
        OpKind::Exposure,
        OpKind::Shadow,
        OpKind::Warm,
        OpKind::Cool,
        OpKind::Vignette,
        OpKind::Contrast,
        OpKind::Gamma,
        OpKind::Brightness,
        OpKind::Grain,
        OpKind::Haze,
        OpKind::ColorCast,
        OpKind::Flare,
    ];

    /// Color cast and flare are reserved for the harshest severity tier.
    pub fn severity3_only(self) -> bool {
        matches!(self, OpKind::ColorCast | OpKind::Flare)
    }

    /// Position in the canonical composition order.
    ///
    /// Ops compose scene-first: atmospheric and occlusion effects (haze,
    /// shadow, flare), then capture-level tone changes (exposure,
    /// brightness, temperature, cast), then optics and post (vignette,
    /// contrast, gamma), with sensor grain last. Warm and cool share a slot
    /// because they are mutually exclusive.
    pub fn stage(self) -> u8 {
        match self {
            OpKind::Haze => 0,
            OpKind::Shadow => 1,
            OpKind::Flare => 2,
            OpKind::Exposure => 3,
            OpKind::Brightness => 4,
            OpKind::Warm | OpKind::Cool => 5,
            OpKind::ColorCast => 6,
            OpKind::Vignette => 7,
            OpKind::Contrast => 8,
            OpKind::Gamma => 9,
            OpKind::Grain => 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Exposure => "exposure",
            OpKind::Shadow => "shadow",
            OpKind::Warm => "warm",
            OpKind::Cool => "cool",
            OpKind::Vignette => "vignette",
            OpKind::Contrast => "contrast",
            OpKind::Gamma => "gamma",
            OpKind::Brightness => "brightness",
            OpKind::Grain => "grain",
            OpKind::Haze => "haze",
            OpKind::ColorCast => "color_cast",
            OpKind::Flare => "flare",
        }
    }

    pub fn from_name(name: &str) -> Option<OpKind> {
        OpKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for OpKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Default atmospheric haze color: a pale, slightly cool white.
pub const HAZE_COLOR_DEFAULT: [f64; 3] = [0.85, 0.87, 0.90];

/// Hard per-op parameter limits, shared by the op implementations and the
/// severity-config validator. Lower limits sit at the identity value where
/// the op has one, so "no-op" parameters are always admissible; tier tables
/// narrow these to the bands actually sampled.
pub mod limits {
    pub const BRIGHTNESS_PERCENT: (f64, f64) = (-45.0, 45.0);
    pub const CONTRAST_FACTOR: (f64, f64) = (0.6, 1.4);
    pub const GAMMA: (f64, f64) = (0.55, 1.5);
    pub const TINT: (f64, f64) = (0.0, 0.25);
    pub const VIGNETTE_STRENGTH: (f64, f64) = (0.0, 0.65);
    pub const VIGNETTE_CENTER: (f64, f64) = (0.4, 0.6);
    pub const SHADOW_STRENGTH: (f64, f64) = (0.0, 0.75);
    pub const GRAIN_INTENSITY: (f64, f64) = (0.0, 0.07);
    pub const HAZE_ALPHA: (f64, f64) = (0.0, 1.0);
    pub const CAST_STRENGTH: (f64, f64) = (0.0, 1.5);
    pub const FLARE_AMPLITUDE: (f64, f64) = (0.0, 1.0);
    /// Maximum normalized distance of a flare center from the nearest edge.
    pub const FLARE_EDGE_DISTANCE: f64 = 0.15;
}

/// Warm-white tint of the flare spot.
pub const FLARE_TINT: [f64; 3] = [1.0, 0.96, 0.82];

/// Default radial falloff exponent for the vignette mask.
pub const VIGNETTE_POWER_DEFAULT: f64 = 2.5;

/// One fully-parameterized operation, as recorded in recipes and manifests.
///
/// The serialized form tags each step with its `kind`, e.g.
/// `{"kind": "exposure", "ev": 0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpStep {
    Exposure {
        /// Exposure shift in photographic stops; the linear-light multiplier
        /// is `2^ev`.
        ev: f64,
    },
    Shadow {
        strength: f64,
        /// Direction of the shadow gradient, degrees in `[0, 360)`.
        angle_deg: f64,
        /// Logistic steepness of the lit/shadow transition.
        sharpness: f64,
    },
    Warm {
        tint: f64,
    },
    Cool {
        tint: f64,
    },
    Vignette {
        strength: f64,
        /// Mask center in normalized image coordinates.
        center_x: f64,
        center_y: f64,
        power: f64,
    },
    Contrast {
        factor: f64,
    },
    Gamma {
        gamma: f64,
    },
    Brightness {
        percent: f64,
    },
    Grain {
        intensity: f64,
        /// Key of the counter-based noise field; stored so replays are exact.
        noise_seed: u64,
    },
    Haze {
        alpha: f64,
        color: [f64; 3],
    },
    ColorCast {
        hue_deg: f64,
        strength: f64,
    },
    Flare {
        /// Spot center in normalized coordinates; must lie within 15% of a
        /// frame edge (flares originate at the frame boundary).
        center_x: f64,
        center_y: f64,
        sigma: f64,
        amplitude: f64,
    },
}

impl OpStep {
    pub fn kind(&self) -> OpKind {
        match self {
            OpStep::Exposure { .. } => OpKind::Exposure,
            OpStep::Shadow { .. } => OpKind::Shadow,
            OpStep::Warm { .. } => OpKind::Warm,
            OpStep::Cool { .. } => OpKind::Cool,
            OpStep::Vignette { .. } => OpKind::Vignette,
            OpStep::Contrast { .. } => OpKind::Contrast,
            OpStep::Gamma { .. } => OpKind::Gamma,
            OpStep::Brightness { .. } => OpKind::Brightness,
            OpStep::Grain { .. } => OpKind::Grain,
            OpStep::Haze { .. } => OpKind::Haze,
            OpStep::ColorCast { .. } => OpKind::ColorCast,
            OpStep::Flare { .. } => OpKind::Flare,
        }
    }

    /// True when the parameters make the op a mathematical no-op.
    pub fn is_identity(&self) -> bool {
        match *self {
            OpStep::Exposure { ev } => ev == 0.0,
            OpStep::Shadow { strength, .. } => strength == 0.0,
            OpStep::Warm { tint } | OpStep::Cool { tint } => tint == 0.0,
            OpStep::Vignette { strength, .. } => strength == 0.0,
            OpStep::Contrast { factor } => factor == 1.0,
            OpStep::Gamma { gamma } => gamma == 1.0,
            OpStep::Brightness { percent } => percent == 0.0,
            OpStep::Grain { intensity, .. } => intensity == 0.0,
            OpStep::Haze { alpha, .. } => alpha == 0.0,
            OpStep::ColorCast { strength, .. } => strength == 0.0,
            OpStep::Flare { amplitude, .. } => amplitude == 0.0,
        }
    }
}

fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(Error::ParamRange {
            name,
            value,
            min,
            max,
        })
    }
}

/// Shift exposure by `ev` stops.
///
/// The only op that leaves sRGB space: samples are decoded to linear light,
/// scaled by `2^ev`, and re-encoded. `ev` may be any finite value; the tier
/// tables bound what the sampler will actually draw.
pub fn apply_exposure(img: &RasterImage, ev: f64) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    if !ev.is_finite() {
        return Err(Error::Param(format!("exposure ev must be finite, got {ev}")));
    }
    if ev == 0.0 {
        return Ok(img.clone());
    }
    let factor = ev.exp2();
    let mut out = img.clone();
    for s in out.samples_mut() {
        let l = srgb_to_linear(*s) as f64 * factor;
        *s = clamp01(linear_to_srgb(l as f32));
    }
    Ok(out)
}

/// Scale brightness by `1 + percent/100` directly in sRGB.
pub fn apply_brightness(img: &RasterImage, percent: f64) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    check_range("brightness percent", percent, limits::BRIGHTNESS_PERCENT.0, limits::BRIGHTNESS_PERCENT.1)?;
    if percent == 0.0 {
        return Ok(img.clone());
    }
    let factor = (1.0 + percent / 100.0) as f32;
    let mut out = img.clone();
    for s in out.samples_mut() {
        *s = clamp01(*s * factor);
    }
    Ok(out)
}

/// Stretch each channel about its own mean: `(s - mean) * factor + mean`.
pub fn apply_contrast(img: &RasterImage, factor: f64) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    check_range("contrast factor", factor, limits::CONTRAST_FACTOR.0, limits::CONTRAST_FACTOR.1)?;
    if factor == 1.0 {
        return Ok(img.clone());
    }
    let mut sums = [0.0f64; 3];
    for px in img.samples().chunks_exact(3) {
        for c in 0..3 {
            sums[c] += px[c] as f64;
        }
    }
    let n = img.pixel_count() as f64;
    let means = [
        (sums[0] / n) as f32,
        (sums[1] / n) as f32,
        (sums[2] / n) as f32,
    ];
    let f = factor as f32;
    let mut out = img.clone();
    for px in out.samples_mut().chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = clamp01((px[c] - means[c]) * f + means[c]);
        }
    }
    Ok(out)
}

/// The pointwise power-law tone curve `s^(1/gamma)`, shared by
/// [`apply_gamma`] and its tests.
#[inline]
fn gamma_curve(s: f32, gamma: f64) -> f32 {
    (s as f64).powf(1.0 / gamma) as f32
}

/// Apply the power-law tone curve `s -> s^(1/gamma)` in sRGB.
pub fn apply_gamma(img: &RasterImage, gamma: f64) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    check_range("gamma", gamma, limits::GAMMA.0, limits::GAMMA.1)?;
    if gamma == 1.0 {
        return Ok(img.clone());
    }
    let mut out = img.clone();
    for s in out.samples_mut() {
        *s = clamp01(gamma_curve(*s, gamma));
    }
    Ok(out)
}

/// Shift color temperature: `warm` boosts red and damps blue by `tint`,
/// `cool` does the opposite. Green is untouched, which keeps overall
/// luminance nearly constant.
pub fn apply_color_temp(img: &RasterImage, tint: f64, warm: bool) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    check_range("color temperature tint", tint, limits::TINT.0, limits::TINT.1)?;
    if tint == 0.0 {
        return Ok(img.clone());
    }
    let (rf, bf) = if warm {
        ((1.0 + tint) as f32, (1.0 - tint) as f32)
    } else {
        ((1.0 - tint) as f32, (1.0 + tint) as f32)
    };
    let mut out = img.clone();
    for px in out.samples_mut().chunks_exact_mut(3) {
        px[0] = clamp01(px[0] * rf);
        px[2] = clamp01(px[2] * bf);
    }
    Ok(out)
}

/// Darken toward the borders with the radial mask
/// `m(r) = 1 - strength * (r / r_max)^power`,
/// where `r` is the pixel's distance from the mask center and `r_max` the
/// distance from the center to the farthest corner pixel.
pub fn apply_vignette(
    img: &RasterImage,
    strength: f64,
    center_x: f64,
    center_y: f64,
    power: f64,
) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    check_range("vignette strength", strength, limits::VIGNETTE_STRENGTH.0, limits::VIGNETTE_STRENGTH.1)?;
    check_range("vignette center_x", center_x, limits::VIGNETTE_CENTER.0, limits::VIGNETTE_CENTER.1)?;
    check_range("vignette center_y", center_y, limits::VIGNETTE_CENTER.0, limits::VIGNETTE_CENTER.1)?;
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::Param(format!("vignette power must be > 0, got {power}")));
    }
    let (w, h) = (img.width(), img.height());
    let cx = center_x * (w - 1) as f64;
    let cy = center_y * (h - 1) as f64;
    let r_max = [(0.0, 0.0), ((w - 1) as f64, 0.0), (0.0, (h - 1) as f64), ((w - 1) as f64, (h - 1) as f64)]
        .into_iter()
        .map(|(x, y)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    if r_max == 0.0 {
        return Err(Error::Param(
            "vignette is undefined on a 1x1 image (zero corner radius)".into(),
        ));
    }
    if strength == 0.0 {
        return Ok(img.clone());
    }
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            let m = (1.0 - strength * (r / r_max).powf(power)) as f32;
            let px = out.pixel(x, y);
            out.set_pixel(x, y, [clamp01(px[0] * m), clamp01(px[1] * m), clamp01(px[2] * m)]);
        }
    }
    Ok(out)
}

#[inline]
fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Directional soft shadow.
///
/// Pixel coordinates are centered and normalized to `[-1, 1]` per axis,
/// projected onto the direction `(cos angle, sin angle)`, and rescaled so
/// the projection spans exactly `[-1, 1]` across the frame. The multiplier
/// is `1 - strength * logistic(sharpness * t)`: the half-plane with `t < 0`
/// stays lit, the other half darkens toward `1 - strength`, and `sharpness`
/// controls how wide the penumbra is.
pub fn apply_shadow(
    img: &RasterImage,
    strength: f64,
    angle_deg: f64,
    sharpness: f64,
) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    check_range("shadow strength", strength, limits::SHADOW_STRENGTH.0, limits::SHADOW_STRENGTH.1)?;
    if !(0.0..360.0).contains(&angle_deg) {
        return Err(Error::Param(format!(
            "shadow angle_deg must be in [0, 360), got {angle_deg}"
        )));
    }
    if !(sharpness.is_finite() && sharpness > 0.0) {
        return Err(Error::Param(format!(
            "shadow sharpness must be > 0, got {sharpness}"
        )));
    }
    if strength == 0.0 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let theta = angle_deg.to_radians();
    let (dx, dy) = (theta.cos(), theta.sin());
    // Max |projection| over the [-1,1]^2 corners; guards the rescale below.
    let span = dx.abs() + dy.abs();
    let mut out = img.clone();
    for y in 0..h {
        let v = if h > 1 { 2.0 * y as f64 / (h - 1) as f64 - 1.0 } else { 0.0 };
        for x in 0..w {
            let u = if w > 1 { 2.0 * x as f64 / (w - 1) as f64 - 1.0 } else { 0.0 };
            let t = (u * dx + v * dy) / span;
            let m = (1.0 - strength * logistic(sharpness * t)) as f32;
            let px = out.pixel(x, y);
            out.set_pixel(x, y, [clamp01(px[0] * m), clamp01(px[1] * m), clamp01(px[2] * m)]);
        }
    }
    Ok(out)
}

/// Additive zero-mean Gaussian grain, `sigma = intensity` per sample.
///
/// The noise field is a pure function of `noise_seed` and the sample index,
/// so identical steps produce identical grain regardless of how the work is
/// scheduled.
pub fn apply_grain(img: &RasterImage, intensity: f64, noise_seed: u64) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    check_range("grain intensity", intensity, limits::GRAIN_INTENSITY.0, limits::GRAIN_INTENSITY.1)?;
    if intensity == 0.0 {
        return Ok(img.clone());
    }
    let mut out = img.clone();
    for (i, s) in out.samples_mut().iter_mut().enumerate() {
        let z = standard_normal_at(noise_seed, i as u64);
        *s = clamp01(*s + (intensity * z) as f32);
    }
    Ok(out)
}

/// Blend toward a flat haze color: `s * (1 - alpha) + color * alpha`.
pub fn apply_haze(img: &RasterImage, alpha: f64, color: [f64; 3]) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    check_range("haze alpha", alpha, limits::HAZE_ALPHA.0, limits::HAZE_ALPHA.1)?;
    for (c, &v) in color.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) || !v.is_finite() {
            return Err(Error::Param(format!(
                "haze color channel {c} must be in [0, 1], got {v}"
            )));
        }
    }
    if alpha == 0.0 {
        return Ok(img.clone());
    }
    let keep = (1.0 - alpha) as f32;
    let add = [
        (color[0] * alpha) as f32,
        (color[1] * alpha) as f32,
        (color[2] * alpha) as f32,
    ];
    let mut out = img.clone();
    for px in out.samples_mut().chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = clamp01(px[c] * keep + add[c]);
        }
    }
    Ok(out)
}

/// Per-channel gains of a color cast toward `hue_deg`.
///
/// The hue is converted to a fully saturated RGB direction `d`; gains are
/// `1 + strength * (d_c - mean(d))`, so they always average exactly 1 and
/// overall brightness is preserved.
pub(crate) fn cast_gains(hue_deg: f64, strength: f64) -> [f64; 3] {
    let d = hue_to_rgb(hue_deg);
    let mean = (d[0] + d[1] + d[2]) / 3.0;
    [
        1.0 + strength * (d[0] - mean),
        1.0 + strength * (d[1] - mean),
        1.0 + strength * (d[2] - mean),
    ]
}

/// Fully saturated, full-value HSV hue to RGB.
fn hue_to_rgb(hue_deg: f64) -> [f64; 3] {
    let h6 = hue_deg / 60.0;
    let sector = h6.floor() as i64 % 6;
    let f = h6 - h6.floor();
    match sector {
        0 => [1.0, f, 0.0],
        1 => [1.0 - f, 1.0, 0.0],
        2 => [0.0, 1.0, f],
        3 => [0.0, 1.0 - f, 1.0],
        4 => [f, 0.0, 1.0],
        _ => [1.0, 0.0, 1.0 - f],
    }
}

/// Tint the whole frame toward a hue while preserving mean gain.
pub fn apply_color_cast(img: &RasterImage, hue_deg: f64, strength: f64) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    if !(0.0..360.0).contains(&hue_deg) {
        return Err(Error::Param(format!(
            "color cast hue_deg must be in [0, 360), got {hue_deg}"
        )));
    }
    // Above 1.5 a gain can go negative; the sampler stays well below this.
    check_range("color cast strength", strength, limits::CAST_STRENGTH.0, limits::CAST_STRENGTH.1)?;
    if strength == 0.0 {
        return Ok(img.clone());
    }
    let g = cast_gains(hue_deg, strength);
    let gains = [g[0] as f32, g[1] as f32, g[2] as f32];
    let mut out = img.clone();
    for px in out.samples_mut().chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = clamp01(px[c] * gains[c]);
        }
    }
    Ok(out)
}

/// Additive Gaussian flare spot with a warm-white tint.
///
/// `s + amplitude * exp(-d^2 / (2 sigma^2)) * tint`, with distances and
/// `sigma` in normalized image coordinates. Real flares enter from the frame
/// boundary, so the center must lie within 15% of some edge.
pub fn apply_flare(
    img: &RasterImage,
    center_x: f64,
    center_y: f64,
    sigma: f64,
    amplitude: f64,
) -> Result<RasterImage> {
    img.require_space(ColorSpace::Srgb)?;
    check_range("flare center_x", center_x, 0.0, 1.0)?;
    check_range("flare center_y", center_y, 0.0, 1.0)?;
    check_range("flare amplitude", amplitude, limits::FLARE_AMPLITUDE.0, limits::FLARE_AMPLITUDE.1)?;
    if !(sigma.is_finite() && sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::Param(format!(
            "flare sigma must be in (0, 1], got {sigma}"
        )));
    }
    let edge_dist = center_x
        .min(1.0 - center_x)
        .min(center_y)
        .min(1.0 - center_y);
    if edge_dist > limits::FLARE_EDGE_DISTANCE + 1e-9 {
        return Err(Error::Param(format!(
            "flare center ({center_x}, {center_y}) must lie within 15% of a frame edge"
        )));
    }
    if amplitude == 0.0 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    let mut out = img.clone();
    for y in 0..h {
        let v = if h > 1 { y as f64 / (h - 1) as f64 } else { 0.5 };
        for x in 0..w {
            let u = if w > 1 { x as f64 / (w - 1) as f64 } else { 0.5 };
            let d2 = (u - center_x).powi(2) + (v - center_y).powi(2);
            let e = amplitude * (-d2 * inv_two_sigma_sq).exp();
            let px = out.pixel(x, y);
            out.set_pixel(
                x,
                y,
                [
                    clamp01(px[0] + (e * FLARE_TINT[0]) as f32),
                    clamp01(px[1] + (e * FLARE_TINT[1]) as f32),
                    clamp01(px[2] + (e * FLARE_TINT[2]) as f32),
                ],
            );
        }
    }
    Ok(out)
}

/// Apply one recorded step.
pub fn apply_step(img: &RasterImage, step: &OpStep) -> Result<RasterImage> {
    match *step {
        OpStep::Exposure { ev } => apply_exposure(img, ev),
        OpStep::Shadow {
            strength,
            angle_deg,
            sharpness,
        } => apply_shadow(img, strength, angle_deg, sharpness),
        OpStep::Warm { tint } => apply_color_temp(img, tint, true),
        OpStep::Cool { tint } => apply_color_temp(img, tint, false),
        OpStep::Vignette {
            strength,
            center_x,
            center_y,
            power,
        } => apply_vignette(img, strength, center_x, center_y, power),
        OpStep::Contrast { factor } => apply_contrast(img, factor),
        OpStep::Gamma { gamma } => apply_gamma(img, gamma),
        OpStep::Brightness { percent } => apply_brightness(img, percent),
        OpStep::Grain {
            intensity,
            noise_seed,
        } => apply_grain(img, intensity, noise_seed),
        OpStep::Haze { alpha, color } => apply_haze(img, alpha, color),
        OpStep::ColorCast { hue_deg, strength } => apply_color_cast(img, hue_deg, strength),
        OpStep::Flare {
            center_x,
            center_y,
            sigma,
            amplitude,
        } => apply_flare(img, center_x, center_y, sigma, amplitude),
    }
}

/// Apply a full recipe in the order given.
pub fn apply_steps(img: &RasterImage, steps: &[OpStep]) -> Result<RasterImage> {
    let mut out = img.clone();
    for step in steps {
        out = apply_step(&out, step)?;
    }
    Ok(out)
}
