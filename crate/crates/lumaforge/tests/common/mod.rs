//! Shared fixtures for the integration suites: a deterministic synthetic
//! image corpus with COCO annotations, and an independent SSIM oracle.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Output;

use lumaforge::raster::{save_image, ColorSpace, RasterImage};
use lumaforge::rng::KeyedRng;
use serde_json::{json, Value};

pub const FIXTURE_IMAGES: usize = 20;

/// A self-cleaning dataset on disk: `images/` plus `coco.json`.
pub struct Fixture {
    pub root: tempfile::TempDir,
    pub coco_path: PathBuf,
    pub images_dir: PathBuf,
    /// `file_name` of every image, by index.
    pub file_names: Vec<String>,
}

/// Varied-but-bounded image sizes; everything stays SSIM-compatible (both
/// dimensions at least the 11-pixel window).
pub fn image_size(i: usize) -> (u32, u32) {
    const SIZES: [(u32, u32); 8] = [
        (32, 24),
        (24, 32),
        (40, 28),
        (28, 40),
        (48, 32),
        (36, 36),
        (26, 22),
        (44, 30),
    ];
    SIZES[i % SIZES.len()]
}

/// Deterministic structured content: soft gradients, a couple of bright
/// blobs, low-amplitude texture. Structured (not noise) so that similarity
/// metrics behave the way they do on photographs.
pub fn synth_image(i: usize, w: u32, h: u32) -> RasterImage {
    let mut rng = KeyedRng::from_key(0xF1C5_0000 + i as u64);
    let gx = rng.range_f64(-0.25, 0.25);
    let gy = rng.range_f64(-0.25, 0.25);
    let base = rng.range_f64(0.35, 0.6);
    let blob_x = rng.range_f64(0.2, 0.8);
    let blob_y = rng.range_f64(0.2, 0.8);
    let blob_r = rng.range_f64(0.15, 0.35);
    let freq = rng.range_f64(2.0, 5.0);
    let phase = rng.range_f64(0.0, std::f64::consts::TAU);
    let tint = [
        rng.range_f64(0.9, 1.1),
        rng.range_f64(0.9, 1.1),
        rng.range_f64(0.9, 1.1),
    ];

    let mut data = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            let u = x as f64 / w as f64;
            let v = y as f64 / h as f64;
            let d2 = (u - blob_x).powi(2) + (v - blob_y).powi(2);
            let blob = 0.3 * (-d2 / (blob_r * blob_r)).exp();
            let texture = 0.08 * (freq * std::f64::consts::TAU * u + phase).sin()
                * (freq * std::f64::consts::TAU * v).cos();
            let lum = base + gx * (u - 0.5) + gy * (v - 0.5) + blob + texture;
            for t in tint {
                data.push((lum * t).clamp(0.02, 0.98) as f32);
            }
        }
    }
    RasterImage::from_samples(w, h, ColorSpace::Srgb, data).expect("fixture image is valid")
}

fn polygon_for(w: u32, h: u32, inset: f64) -> Value {
    // A quadrilateral comfortably inside the image.
    let (wf, hf) = (w as f64, h as f64);
    json!([[
        inset,
        inset,
        wf - inset,
        inset + 1.0,
        wf - inset - 2.0,
        hf - inset,
        inset + 1.0,
        hf - inset - 1.0
    ]])
}

/// Annotations for image `i`: 1–3 instances with deliberately mixed JSON
/// number formats (ints vs floats) and mixed segmentation styles (polygon,
/// compressed RLE string, uncompressed RLE count list).
fn annotations_for(i: usize, image_id: u64, w: u32, h: u32, next_ann_id: &mut u64) -> Vec<Value> {
    let count = 1 + i % 3;
    let mut out = Vec::new();
    for k in 0..count {
        let id = *next_ann_id;
        *next_ann_id += 1;
        let category_id = 1 + ((i + k) % 3) as u64;
        // Keep each box inside the image whatever the size.
        let bw = (w as f64 / 2.0 - 2.0).max(4.0);
        let bh = (h as f64 / 2.0 - 2.0).max(4.0);
        let bx = 1.0 + (k as f64) * 2.0;
        let by = 1.5 + (k as f64) * 1.5;
        // Mixed formats: integral x/width as JSON ints, fractional y/height.
        let bbox = json!([bx as u64, by, bw as u64, bh]);
        let area = bw * bh * 0.7;
        let ann = if (i + k) % 5 == 0 {
            // Compressed RLE (opaque counts string) marked as crowd.
            json!({
                "id": id,
                "image_id": image_id,
                "category_id": category_id,
                "bbox": bbox,
                "area": area,
                "iscrowd": 1,
                "segmentation": {"size": [h, w], "counts": "b2Yd02N1O1O2N0010O"},
            })
        } else if (i + k) % 7 == 0 {
            // Uncompressed RLE (integer run lengths).
            json!({
                "id": id,
                "image_id": image_id,
                "category_id": category_id,
                "bbox": bbox,
                "area": area,
                "iscrowd": 0,
                "segmentation": {"size": [h, w], "counts": [8, 5, 11, 3, (w * h - 27)]},
            })
        } else {
            // Plain polygon, plus a non-standard field that must survive.
            json!({
                "id": id,
                "image_id": image_id,
                "category_id": category_id,
                "bbox": bbox,
                "area": area,
                "iscrowd": 0,
                "segmentation": polygon_for(w, h, 2.0),
                "labeler_confidence": 0.87,
            })
        };
        out.push(ann);
    }
    out
}

/// Build the synthetic corpus on disk.
pub fn build_fixture(n_images: usize) -> Fixture {
    let root = tempfile::tempdir().expect("create fixture dir");
    let images_dir = root.path().join("images");
    std::fs::create_dir(&images_dir).expect("create images dir");

    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut file_names = Vec::new();
    let mut next_ann_id = 1000u64;
    for i in 0..n_images {
        let (w, h) = image_size(i);
        let image_id = 100 + i as u64;
        let file_name = format!("img_{i:03}.png");
        save_image(&synth_image(i, w, h), &images_dir.join(&file_name))
            .expect("write fixture image");
        images.push(json!({
            "id": image_id,
            "file_name": file_name,
            "width": w,
            "height": h,
            "license": 1,
        }));
        annotations.extend(annotations_for(i, image_id, w, h, &mut next_ann_id));
        file_names.push(file_name);
    }

    let doc = json!({
        "info": {"description": "synthetic bench corpus", "version": "1.0"},
        "licenses": [{"id": 1, "name": "internal-use"}],
        "images": images,
        "annotations": annotations,
        "categories": [
            {"id": 1, "name": "widget", "supercategory": "thing"},
            {"id": 2, "name": "gadget", "supercategory": "thing"},
            {"id": 3, "name": "fixture", "supercategory": "stuff"},
        ],
        "capture_rig": {"rig": "bench-3", "revision": 7},
    });
    let coco_path = root.path().join("coco.json");
    std::fs::write(
        &coco_path,
        serde_json::to_string_pretty(&doc).expect("fixture json"),
    )
    .expect("write fixture json");

    Fixture {
        root,
        coco_path,
        images_dir,
        file_names,
    }
}

/// Replace one fixture image with bytes no decoder accepts.
pub fn corrupt_image(fixture: &Fixture, index: usize) {
    let path = fixture.images_dir.join(&fixture.file_names[index]);
    std::fs::write(&path, b"this is not an image at all").expect("overwrite image");
}

/// Independent SSIM oracle: direct per-window evaluation with jointly
/// normalized 2D Gaussian weights, no separability, no reuse of the library
/// kernels. Same convention as the library: Rec. 601 luma of display-space
/// values, 11x11 window, sigma 1.5, K1 = 0.01, K2 = 0.03, L = 1.
pub fn naive_ssim(a: &RasterImage, b: &RasterImage) -> f64 {
    assert_eq!(a.width(), b.width(), "oracle inputs must match");
    assert_eq!(a.height(), b.height(), "oracle inputs must match");
    let (w, h) = (a.width() as usize, a.height() as usize);
    const WIN: usize = 11;
    const SIGMA: f64 = 1.5;
    assert!(w >= WIN && h >= WIN, "oracle needs at least one full window");

    let mut weights = [[0.0f64; WIN]; WIN];
    let mut total = 0.0;
    for (i, row) in weights.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let dy = i as f64 - (WIN as f64 - 1.0) / 2.0;
            let dx = j as f64 - (WIN as f64 - 1.0) / 2.0;
            *cell = (-(dx * dx + dy * dy) / (2.0 * SIGMA * SIGMA)).exp();
            total += *cell;
        }
    }
    for row in weights.iter_mut() {
        for cell in row.iter_mut() {
            *cell /= total;
        }
    }

    let luma = |img: &RasterImage, x: usize, y: usize| -> f64 {
        let p = img.pixel(x as u32, y as u32);
        0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
    };

    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let mut sum = 0.0;
    let mut windows = 0usize;
    for ty in 0..=(h - WIN) {
        for tx in 0..=(w - WIN) {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..WIN {
                for j in 0..WIN {
                    ma += weights[i][j] * luma(a, tx + j, ty + i);
                    mb += weights[i][j] * luma(b, tx + j, ty + i);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..WIN {
                for j in 0..WIN {
                    let da = luma(a, tx + j, ty + i) - ma;
                    let db = luma(b, tx + j, ty + i) - mb;
                    va += weights[i][j] * da * da;
                    vb += weights[i][j] * db * db;
                    cov += weights[i][j] * da * db;
                }
            }
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            windows += 1;
        }
    }
    sum / windows as f64
}

/// Run the compiled CLI binary with the given arguments and environment.
pub fn run_cli(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_lumaforge"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("run lumaforge binary")
}
