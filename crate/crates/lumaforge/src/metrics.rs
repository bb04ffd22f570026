//! Perceptual and overlap metrics, plus the per-severity corpus report.
//!
//! Two metric families live here: gaussian-windowed SSIM between the clean
//! and degraded halves of each pair, and mask IoU for comparing two systems'
//! predicted instance masks against ground truth. [`severity_report`]
//! aggregates both across a generated tree, grouped by severity tier.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pairgen::PairManifest;
use crate::raster::{load_image, ColorSpace, RasterImage};

/// Windowed-SSIM parameters. Defaults are the canonical choices for float
/// images in `[0, 1]`: 11×11 window, σ = 1.5, K1 = 0.01, K2 = 0.03, L = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub l: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            l: 1.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::Param(format!(
                "ssim window must be odd and at least 3, got {}",
                self.window
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.sigma) || !positive(self.k1) || !positive(self.k2) || !positive(self.l) {
            return Err(Error::Param(
                "ssim sigma, K1, K2 and L must all be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Rec. 601 luma of a display-encoded image, one f64 per pixel in row order.
pub fn luminance_plane(img: &RasterImage) -> Vec<f64> {
    let mut out = Vec::with_capacity(img.width() as usize * img.height() as usize);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let [r, g, b] = img.pixel(x, y);
            out.push(0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64);
        }
    }
    out
}

fn gaussian_kernel(window: usize, sigma: f64) -> Vec<f64> {
    let r = (window / 2) as f64;
    let mut k: Vec<f64> = (0..window)
        .map(|i| (-((i as f64 - r).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Gaussian-windowed means of `plane`, evaluated only where the full window
/// fits (output is `(w - win + 1) × (h - win + 1)`), as two separable passes.
fn windowed_mean(plane: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let win = kernel.len();
    let ow = w - win + 1;
    let oh = h - win + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for ox in 0..ow {
            let mut s = 0.0;
            for (k, &g) in kernel.iter().enumerate() {
                s += g * row[ox + k];
            }
            horiz[y * ow + ox] = s;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for oy in 0..oh {
        for ox in 0..ow {
            let mut s = 0.0;
            for (k, &g) in kernel.iter().enumerate() {
                s += g * horiz[(oy + k) * ow + ox];
            }
            out[oy * ow + ox] = s;
        }
    }
    out
}

/// Mean SSIM between two same-sized display-encoded images.
///
/// Identical inputs score exactly 1.0: both halves run through the same
/// accumulation code, so every windowed moment of `a` is bit-identical to
/// its twin for `b`, and the per-window ratio reduces to `n / n`.
pub fn ssim_with(a: &RasterImage, b: &RasterImage, params: &SsimParams) -> Result<f64> {
    params.validate()?;
    a.require_space(ColorSpace::Srgb)?;
    b.require_space(ColorSpace::Srgb)?;
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < params.window || h < params.window {
        return Err(Error::Param(format!(
            "image {w}x{h} is smaller than the {}-pixel ssim window",
            params.window
        )));
    }

    let xa = luminance_plane(a);
    let xb = luminance_plane(b);
    let sq = |p: &[f64]| p.iter().map(|v| v * v).collect::<Vec<_>>();
    let prod: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| x * y).collect();

    let kernel = gaussian_kernel(params.window, params.sigma);
    let mu_a = windowed_mean(&xa, w, h, &kernel);
    let mu_b = windowed_mean(&xb, w, h, &kernel);
    let e_aa = windowed_mean(&sq(&xa), w, h, &kernel);
    let e_bb = windowed_mean(&sq(&xb), w, h, &kernel);
    let e_ab = windowed_mean(&prod, w, h, &kernel);

    let c1 = (params.k1 * params.l) * (params.k1 * params.l);
    let c2 = (params.k2 * params.l) * (params.k2 * params.l);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        total += num / den;
    }
    Ok(total / mu_a.len() as f64)
}

/// [`ssim_with`] under the default parameters.
pub fn ssim(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    ssim_with(a, b, &SsimParams::default())
}

/// A per-pixel foreground mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::Param(format!(
                "mask bit count {} does not match {width}x{height}",
                bits.len()
            )));
        }
        Ok(BinaryMask { width, height, bits })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        BinaryMask { width, height, bits }
    }

    /// Threshold an image into a mask: luma above 0.5 is foreground.
    pub fn from_image(img: &RasterImage) -> Self {
        let lum = luminance_plane(img);
        BinaryMask {
            width: img.width(),
            height: img.height(),
            bits: lum.into_iter().map(|v| v > 0.5).collect(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Intersection-over-union of two masks. Two empty masks score 1.0 — both
/// sides agree there is nothing there, which keeps degenerate crops from
/// reading as disagreement.
pub fn mask_iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        inter += (x && y) as u64;
        union += (x || y) as u64;
    }
    if union == 0 {
        Ok(1.0)
    } else {
        Ok(inter as f64 / union as f64)
    }
}

/// Fixed-bin IoU histogram: 20 bins covering `[0, 1]` in steps of 0.05, the
/// top bin closed so a perfect 1.0 lands in bin 19.
pub const IOU_BINS: usize = 20;

pub fn iou_bin(value: f64) -> usize {
    ((value.max(0.0) / 0.05) as usize).min(IOU_BINS - 1)
}

pub fn iou_histogram(values: &[f64]) -> [u64; IOU_BINS] {
    let mut bins = [0u64; IOU_BINS];
    for &v in values {
        bins[iou_bin(v)] += 1;
    }
    bins
}

/// Directories of per-instance mask images for the two-system comparison.
/// Each directory holds `{annotation_id}.png` files; a missing prediction
/// counts as an empty mask.
#[derive(Debug, Clone)]
pub struct MaskDirs {
    pub truth: PathBuf,
    pub system_a: PathBuf,
    pub system_b: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    pub masks: Option<MaskDirs>,
}

/// One row of the per-pair CSV.
#[derive(Debug, Clone, Serialize)]
pub struct PairRow {
    pub image_id: String,
    pub variant_index: u32,
    pub tier: u8,
    pub ssim: f64,
}

/// Instance-level IoU aggregates for one tier (present only when mask
/// directories were supplied).
#[derive(Debug, Clone, Serialize)]
pub struct TierIou {
    pub instance_count: usize,
    pub histogram_a: Vec<u64>,
    pub histogram_b: Vec<u64>,
    /// Instances where system B beats / loses to / ties system A against truth.
    pub wins_b: u64,
    pub losses_b: u64,
    pub ties: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TierReport {
    pub tier: u8,
    pub pair_count: usize,
    pub ssim_mean: Option<f64>,
    pub ssim_std: Option<f64>,
    /// Reserved; this build does not compute deep-feature metrics.
    pub fid: Option<f64>,
    /// Reserved; this build does not compute phase-congruency metrics.
    pub fsim: Option<f64>,
    pub iou: Option<TierIou>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeverityReport {
    pub tiers: Vec<TierReport>,
    pub per_pair: Vec<PairRow>,
}

struct PairMetrics {
    row: PairRow,
    /// (iou vs truth for system A, for system B) per instance.
    instance_ious: Vec<(f64, f64)>,
}

fn resolve(out_root: &Path, recorded: &str) -> PathBuf {
    let p = Path::new(recorded);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_root.join(p)
    }
}

fn load_mask(dir: &Path, ann_id: u64, like: &RasterImage) -> Result<Option<BinaryMask>> {
    let path = dir.join(format!("{ann_id}.png"));
    if !path.is_file() {
        return Ok(None);
    }
    let img = load_image(&path)?;
    if (img.width(), img.height()) != (like.width(), like.height()) {
        return Err(Error::DimensionMismatch(
            img.width(),
            img.height(),
            like.width(),
            like.height(),
        ));
    }
    Ok(Some(BinaryMask::from_image(&img)))
}

/// Compute SSIM (and, when mask directories are given, per-instance IoU for
/// the two systems) across a generated tree, aggregated per severity tier.
///
/// Pairs are processed in parallel; aggregation walks the results in
/// manifest order, so the report is deterministic for any worker count.
pub fn severity_report(
    manifest: &PairManifest,
    out_root: &Path,
    options: &ReportOptions,
) -> Result<SeverityReport> {
    let per_pair: Vec<PairMetrics> = manifest
        .pairs
        .par_iter()
        .map(|pair| -> Result<PairMetrics> {
            let clean = load_image(&resolve(out_root, &pair.clean_path))?;
            let variant = load_image(&resolve(out_root, &pair.variant_path))?;
            let score = ssim(&clean, &variant)?;
            let mut instance_ious = Vec::new();
            if let Some(dirs) = &options.masks {
                for &ann_id in &pair.annotation_ids {
                    let Some(truth) = load_mask(&dirs.truth, ann_id, &variant)? else {
                        continue;
                    };
                    let empty = || BinaryMask::empty(variant.width(), variant.height());
                    let a = load_mask(&dirs.system_a, ann_id, &variant)?.unwrap_or_else(empty);
                    let b = load_mask(&dirs.system_b, ann_id, &variant)?.unwrap_or_else(empty);
                    instance_ious.push((mask_iou(&a, &truth)?, mask_iou(&b, &truth)?));
                }
            }
            Ok(PairMetrics {
                row: PairRow {
                    image_id: pair.image_id.clone(),
                    variant_index: pair.variant_index,
                    tier: pair.severity.tier(),
                    ssim: score,
                },
                instance_ious,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tiers = Vec::with_capacity(3);
    for tier in 1u8..=3 {
        let scores: Vec<f64> = per_pair
            .iter()
            .filter(|m| m.row.tier == tier)
            .map(|m| m.row.ssim)
            .collect();
        let n = scores.len();
        let (mean, std) = if n == 0 {
            (None, None)
        } else {
            let mean = scores.iter().sum::<f64>() / n as f64;
            let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64;
            (Some(mean), Some(var.sqrt()))
        };

        let iou = options.masks.as_ref().map(|_| {
            let mut ious_a = Vec::new();
            let mut ious_b = Vec::new();
            let (mut wins_b, mut losses_b, mut ties) = (0u64, 0u64, 0u64);
            for m in per_pair.iter().filter(|m| m.row.tier == tier) {
                for &(ia, ib) in &m.instance_ious {
                    ious_a.push(ia);
                    ious_b.push(ib);
                    if ib > ia {
                        wins_b += 1;
                    } else if ib < ia {
                        losses_b += 1;
                    } else {
                        ties += 1;
                    }
                }
            }
            TierIou {
                instance_count: ious_a.len(),
                histogram_a: iou_histogram(&ious_a).to_vec(),
                histogram_b: iou_histogram(&ious_b).to_vec(),
                wins_b,
                losses_b,
                ties,
            }
        });

        tiers.push(TierReport {
            tier,
            pair_count: n,
            ssim_mean: mean,
            ssim_std: std,
            fid: None,
            fsim: None,
            iou,
        });
    }

    Ok(SeverityReport {
        tiers,
        per_pair: per_pair.into_iter().map(|m| m.row).collect(),
    })
}

/// Render the per-pair rows as CSV for plotting.
pub fn per_pair_csv(rows: &[PairRow]) -> String {
    let mut out = String::from("image_id,variant_index,tier,ssim\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:.6}", r.image_id, r.variant_index, r.tier, r.ssim);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::KeyedRng;

    fn random_image(key: u64, w: u32, h: u32) -> RasterImage {
        let mut rng = KeyedRng::from_key(key);
        let data: Vec<f32> = (0..w as usize * h as usize * 3)
            .map(|_| rng.next_f64() as f32)
            .collect();
        RasterImage::from_samples(w, h, ColorSpace::Srgb, data).unwrap()
    }

    /// Direct-formula SSIM: jointly normalized 2D window, per-position
    /// double loop, no separable passes. Kept deliberately naive so it
    /// shares no code path with the production implementation.
    fn naive_ssim(a: &RasterImage, b: &RasterImage, p: &SsimParams) -> f64 {
        let win = p.window;
        let r = (win / 2) as f64;
        let g = |i: usize| (-((i as f64 - r) * (i as f64 - r)) / (2.0 * p.sigma * p.sigma)).exp();
        let mut weights = vec![0.0; win * win];
        let mut wsum = 0.0;
        for i in 0..win {
            for j in 0..win {
                weights[i * win + j] = g(i) * g(j);
                wsum += weights[i * win + j];
            }
        }
        for w in &mut weights {
            *w /= wsum;
        }

        let lum = |img: &RasterImage, x: u32, y: u32| {
            let [r, g, b] = img.pixel(x, y);
            0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
        };
        let c1 = (p.k1 * p.l).powi(2);
        let c2 = (p.k2 * p.l).powi(2);
        let (w, h) = (a.width() as usize, a.height() as usize);
        let mut total = 0.0;
        let mut count = 0usize;
        for y0 in 0..=(h - win) {
            for x0 in 0..=(w - win) {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..win {
                    for j in 0..win {
                        let wt = weights[i * win + j];
                        let xv = lum(a, (x0 + j) as u32, (y0 + i) as u32);
                        let yv = lum(b, (x0 + j) as u32, (y0 + i) as u32);
                        ma += wt * xv;
                        mb += wt * yv;
                        saa += wt * xv * xv;
                        sbb += wt * yv * yv;
                        sab += wt * xv * yv;
                    }
                }
                let va = saa - ma * ma;
                let vb = sbb - mb * mb;
                let cov = sab - ma * mb;
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn identical_images_score_exactly_one() {
        for key in [1u64, 2, 3] {
            let img = random_image(key, 24, 17);
            let s = ssim(&img, &img).unwrap();
            assert_eq!(s, 1.0, "self-similarity must be exact, got {s:e}");
        }
    }

    #[test]
    fn ssim_is_symmetric() {
        for key in 0..10u64 {
            let a = random_image(key * 2 + 1, 20, 14);
            let b = random_image(key * 2 + 2, 20, 14);
            let ab = ssim(&a, &b).unwrap();
            let ba = ssim(&b, &a).unwrap();
            assert_eq!(ab, ba, "every term of the formula is commutative in (a, b)");
        }
    }

    #[test]
    fn separable_matches_direct_formula() {
        let p = SsimParams::default();
        for key in 0..3u64 {
            let a = random_image(100 + key, 64, 64);
            let b = random_image(200 + key, 64, 64);
            let fast = ssim_with(&a, &b, &p).unwrap();
            let slow = naive_ssim(&a, &b, &p);
            assert!(
                (fast - slow).abs() < 1e-6,
                "separable {fast} vs direct {slow} differ by {:e}",
                (fast - slow).abs()
            );
        }
    }

    #[test]
    fn uniform_offset_matches_direct_formula_and_is_below_one() {
        let base = random_image(7, 64, 64);
        let mut shifted = Vec::new();
        for y in 0..base.height() {
            for x in 0..base.width() {
                let px = base.pixel(x, y);
                shifted.extend(px.iter().map(|v| (v + 0.1).min(1.0)));
            }
        }
        let off = RasterImage::from_samples(64, 64, ColorSpace::Srgb, shifted).unwrap();
        let fast = ssim(&base, &off).unwrap();
        let slow = naive_ssim(&base, &off, &SsimParams::default());
        assert!((fast - slow).abs() < 1e-6, "{fast} vs {slow}");
        assert!(fast < 1.0 && fast > 0.0, "offset must cost similarity: {fast}");
    }

    #[test]
    fn constant_images_score_independent_of_canvas_size() {
        // Every window of a constant pair sees the same statistics, so the
        // windowed mean cannot depend on how many windows the canvas holds.
        let small_a = RasterImage::filled(16, 16, ColorSpace::Srgb, [0.3, 0.3, 0.3]).unwrap();
        let small_b = RasterImage::filled(16, 16, ColorSpace::Srgb, [0.5, 0.5, 0.5]).unwrap();
        let big_a = RasterImage::filled(40, 23, ColorSpace::Srgb, [0.3, 0.3, 0.3]).unwrap();
        let big_b = RasterImage::filled(40, 23, ColorSpace::Srgb, [0.5, 0.5, 0.5]).unwrap();
        let s_small = ssim(&small_a, &small_b).unwrap();
        let s_big = ssim(&big_a, &big_b).unwrap();
        assert!(
            (s_small - s_big).abs() < 1e-12,
            "translation/tiling of constant windows changed the score: {s_small} vs {s_big}"
        );
    }

    #[test]
    fn ssim_rejects_bad_inputs() {
        let a = random_image(1, 20, 20);
        let b = random_image(2, 21, 20);
        assert!(matches!(ssim(&a, &b), Err(Error::DimensionMismatch(..))));

        let tiny = random_image(3, 8, 8);
        let err = ssim(&tiny, &tiny).unwrap_err();
        assert!(err.to_string().contains("smaller than"), "{err}");

        let bad = SsimParams {
            window: 4,
            ..SsimParams::default()
        };
        assert!(ssim_with(&a, &a, &bad).is_err(), "even window must be rejected");
    }

    #[test]
    fn mask_iou_hand_examples() {
        let full = BinaryMask::from_fn(4, 4, |_, _| true);
        assert_eq!(mask_iou(&full, &full).unwrap(), 1.0);

        let left = BinaryMask::from_fn(4, 4, |x, _| x < 2);
        let right = BinaryMask::from_fn(4, 4, |x, _| x >= 2);
        assert_eq!(mask_iou(&left, &right).unwrap(), 0.0);

        // {(0,0),(0,1)} vs {(0,1),(1,1)}: intersection 1, union 3.
        let a = BinaryMask::from_fn(2, 2, |x, y| (x, y) == (0, 0) || (x, y) == (0, 1));
        let b = BinaryMask::from_fn(2, 2, |x, y| (x, y) == (0, 1) || (x, y) == (1, 1));
        assert_eq!(mask_iou(&a, &b).unwrap(), 1.0 / 3.0);

        let empty = BinaryMask::empty(4, 4);
        assert_eq!(
            mask_iou(&empty, &empty).unwrap(),
            1.0,
            "two empty masks agree perfectly by definition"
        );

        let narrow = BinaryMask::empty(3, 4);
        assert!(matches!(
            mask_iou(&narrow, &full),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn mask_iou_symmetry_equality_and_size_bound() {
        let mut rng = KeyedRng::from_key(99);
        let random_mask = |rng: &mut KeyedRng| {
            let bits: Vec<bool> = (0..64).map(|_| rng.next_f64() < 0.4).collect();
            BinaryMask::new(8, 8, bits).unwrap()
        };
        for _ in 0..100 {
            let a = random_mask(&mut rng);
            let b = random_mask(&mut rng);
            let ab = mask_iou(&a, &b).unwrap();
            assert_eq!(ab, mask_iou(&b, &a).unwrap(), "iou must be symmetric");
            assert_eq!(ab == 1.0, a == b, "iou hits 1 exactly for equal masks");
            let (na, nb) = (a.count_ones(), b.count_ones());
            if na.max(nb) > 0 {
                let bound = na.min(nb) as f64 / na.max(nb) as f64;
                assert!(
                    ab <= bound + 1e-12,
                    "iou {ab} exceeds size bound {bound} for |a|={na}, |b|={nb}"
                );
            }
        }
    }

    #[test]
    fn histogram_bins_partition_unit_interval() {
        let values = [0.0, 0.049, 0.05, 0.51, 0.999, 1.0];
        let bins = iou_histogram(&values);
        assert_eq!(bins.iter().sum::<u64>(), values.len() as u64);
        assert_eq!(bins[0], 2, "0.0 and 0.049 land in the first bin");
        assert_eq!(bins[1], 1, "0.05 opens the second bin");
        assert_eq!(bins[10], 1);
        assert_eq!(bins[19], 2, "0.999 and the closed top 1.0 share the last bin");
    }

    #[test]
    fn csv_has_header_and_one_row_per_pair() {
        let rows = vec![
            PairRow {
                image_id: "3".into(),
                variant_index: 0,
                tier: 2,
                ssim: 0.87654321,
            },
            PairRow {
                image_id: "4".into(),
                variant_index: 1,
                tier: 1,
                ssim: 1.0,
            },
        ];
        let csv = per_pair_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "image_id,variant_index,tier,ssim");
        assert_eq!(lines[1], "3,0,2,0.876543");
        assert_eq!(lines[2], "4,1,1,1.000000");
    }
}
