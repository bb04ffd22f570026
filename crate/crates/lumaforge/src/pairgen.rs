//! Dataset-level pair generation, the manifest format, and re-verification.
//!
//! A run turns one COCO annotation file plus an image directory into an
//! output tree:
//!
//! ```text
//! out/
//!   annotations.json      original annotations, filtered to usable images
//!   manifest.json         one record per (clean, variant) pair
//!   clean/<...>           byte-copied originals (unless --reference-clean)
//!   variant/<...>.png     degraded twins
//! ```
//!
//! Every pair record carries the full sampled recipe and content digests of
//! both pixel buffers, so a manifest is sufficient to re-verify a tree from
//! scratch: decode the clean image, re-run the recipe, and compare digests.
//! Records are sorted by `(image id, variant index)` after the parallel
//! phase, which makes the manifest bytes independent of worker count and
//! scheduling order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Component, Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coco::{self, CocoDocument, ImageEntry};
use crate::error::{Error, Result};
use crate::lightops::apply_steps;
use crate::raster::{load_image, save_image, ColorSpace, RasterImage};
use crate::sampler::{sample_recipe_indexed, SeverityPolicy, VariantRecipe};
use crate::severity::{SeverityConfig, SeverityLevel};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ANNOTATIONS_FILE: &str = "annotations.json";
pub const CLEAN_DIR: &str = "clean";
pub const VARIANT_DIR: &str = "variant";

/// Digest of an image's pixel content: SHA-256 over the little-endian
/// dimensions followed by the 8-bit quantized RGB buffer. Decoding an 8-bit
/// file and re-quantizing is lossless, so the digest identifies what a
/// round-trip through disk preserves, independent of codec byte layout.
pub fn content_digest(img: &RasterImage) -> String {
    assert_eq!(
        img.space(),
        ColorSpace::Srgb,
        "content digests are defined over display-encoded pixels"
    );
    let mut hasher = Sha256::new();
    hasher.update(img.width().to_le_bytes());
    hasher.update(img.height().to_le_bytes());
    hasher.update(&img.quantized());
    format!("sha256:{}", hex::encode(hasher.finalize()))
}

fn bytes_digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// One usable image from the ingested dataset.
#[derive(Debug, Clone)]
pub struct IndexedImage {
    pub entry: ImageEntry,
    /// `file_name` as a checked relative path (no `..`, not absolute).
    pub rel_path: PathBuf,
    /// Where the source pixels live on disk.
    pub source_path: PathBuf,
    /// Ids of the annotations attached to this image, ascending.
    pub annotation_ids: Vec<u64>,
}

/// A record of an image that was dropped from the run, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub image_id: String,
    pub file_name: String,
    pub reason: String,
}

/// The validated dataset: annotation document plus per-image index.
#[derive(Debug)]
pub struct DatasetIndex {
    pub doc: CocoDocument,
    /// Usable images, ascending by id.
    pub entries: Vec<IndexedImage>,
    /// Images dropped at ingest (e.g. the file is missing on disk).
    pub skipped: Vec<SkipRecord>,
}

/// Reject `file_name` values that could escape the output tree.
fn sanitize_relative(file_name: &str) -> Result<PathBuf> {
    let p = Path::new(file_name);
    if p.is_absolute() {
        return Err(Error::Annotation(format!(
            "image file_name `{file_name}` is an absolute path"
        )));
    }
    for c in p.components() {
        match c {
            Component::Normal(_) => {}
            _ => {
                return Err(Error::Annotation(format!(
                    "image file_name `{file_name}` contains a non-plain path component"
                )));
            }
        }
    }
    Ok(p.to_path_buf())
}

/// Parse and cross-check a COCO file against the image directory.
///
/// Structural problems are fatal: duplicate ids, an annotation referencing
/// an image or category that does not exist, a bbox outside its image. A
/// missing or unreadable image *file* only produces a [`SkipRecord`] so one
/// bad file cannot sink a large run.
pub fn ingest_coco(coco_path: &Path, images_dir: &Path) -> Result<DatasetIndex> {
    let text = fs::read_to_string(coco_path).map_err(|e| Error::io(coco_path, e))?;
    let doc = CocoDocument::parse(&text)?;

    let mut by_id: BTreeMap<u64, ImageEntry> = BTreeMap::new();
    for raw in doc.images() {
        let entry = coco::image_entry(raw)?;
        if let Some(prev) = by_id.insert(entry.id, entry.clone()) {
            return Err(Error::Annotation(format!(
                "duplicate image id {} (`{}` and `{}`)",
                entry.id, prev.file_name, entry.file_name
            )));
        }
    }

    let mut category_ids: BTreeSet<u64> = BTreeSet::new();
    for raw in doc.categories() {
        category_ids.insert(coco::u64_field(raw, "id", "category")?);
    }

    let mut ann_ids: BTreeSet<u64> = BTreeSet::new();
    let mut anns_by_image: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for raw in doc.annotations() {
        let ann_id = coco::u64_field(raw, "id", "annotation")?;
        if !ann_ids.insert(ann_id) {
            return Err(Error::Annotation(format!("duplicate annotation id {ann_id}")));
        }
        let image_id = coco::u64_field(raw, "image_id", "annotation")?;
        let Some(img) = by_id.get(&image_id) else {
            return Err(Error::Annotation(format!(
                "annotation {ann_id} references unknown image id {image_id}"
            )));
        };
        let category_id = coco::u64_field(raw, "category_id", "annotation")?;
        if !category_ids.contains(&category_id) {
            return Err(Error::Annotation(format!(
                "annotation {ann_id} references unknown category id {category_id}"
            )));
        }
        if let Some(bbox) = coco::ann_bbox(raw)? {
            coco::check_bbox_bounds(ann_id, bbox, img)?;
        }
        anns_by_image.entry(image_id).or_default().push(ann_id);
    }

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for entry in by_id.values() {
        let rel_path = sanitize_relative(&entry.file_name)?;
        let source_path = images_dir.join(&rel_path);
        if !source_path.is_file() {
            skipped.push(SkipRecord {
                image_id: entry.id.to_string(),
                file_name: entry.file_name.clone(),
                reason: format!("image file not found under {}", images_dir.display()),
            });
            continue;
        }
        let mut annotation_ids = anns_by_image.remove(&entry.id).unwrap_or_default();
        annotation_ids.sort_unstable();
        entries.push(IndexedImage {
            entry: entry.clone(),
            rel_path,
            source_path,
            annotation_ids,
        });
    }

    Ok(DatasetIndex { doc, entries, skipped })
}

/// Knobs for one generation run.
#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub global_seed: u64,
    pub policy: SeverityPolicy,
    /// Degraded twins per clean image (>= 1).
    pub variants_per_image: u32,
    /// Worker threads (>= 1).
    pub workers: usize,
    /// Record paths to the original clean files instead of copying them
    /// into the output tree.
    pub reference_clean: bool,
}

/// One (clean, variant) pair in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub image_id: String,
    pub variant_index: u32,
    pub severity: SeverityLevel,
    /// Relative to the output root, or absolute under `reference_clean`.
    pub clean_path: String,
    /// Relative to the output root.
    pub variant_path: String,
    /// The annotations both halves of the pair share, ascending by id.
    pub annotation_ids: Vec<u64>,
    pub recipe: VariantRecipe,
    pub clean_digest: String,
    pub variant_digest: String,
}

/// The run manifest: everything needed to audit or re-verify the tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub global_seed: u64,
    pub severity_policy: SeverityPolicy,
    pub variants_per_image: u32,
    pub reference_clean: bool,
    pub annotations_file: String,
    /// SHA-256 of the emitted annotation file's bytes.
    pub annotations_digest: String,
    pub pairs: Vec<PairRecord>,
    pub skipped: Vec<SkipRecord>,
}

enum ImageOutcome {
    Pairs(Vec<(u64, PairRecord)>),
    Skip(u64, SkipRecord),
}

/// Variant file name for `rel_path`'s image. Always PNG (lossless — the
/// digest must survive the disk round trip). With a single variant per image
/// the clean stem is kept; with fan-out each index gets a `_v{k}` suffix.
fn variant_rel_path(rel_path: &Path, variant_index: u32, variants_per_image: u32) -> PathBuf {
    let stem = rel_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".to_string());
    let name = if variants_per_image == 1 {
        format!("{stem}.png")
    } else {
        format!("{stem}_v{variant_index}.png")
    };
    rel_path.with_file_name(name)
}

/// Manifest path strings always use forward slashes.
fn path_string(prefix: &str, rel: &Path) -> String {
    let mut out = String::from(prefix);
    for c in rel.components() {
        out.push('/');
        out.push_str(&c.as_os_str().to_string_lossy());
    }
    out
}

fn process_image(
    img: &IndexedImage,
    config: &SeverityConfig,
    opts: &GenerateOptions,
    out_root: &Path,
) -> Result<ImageOutcome> {
    let id = img.entry.id;
    let id_str = id.to_string();
    let skip = |reason: String| {
        Ok(ImageOutcome::Skip(
            id,
            SkipRecord {
                image_id: id_str.clone(),
                file_name: img.entry.file_name.clone(),
                reason,
            },
        ))
    };

    let clean = match load_image(&img.source_path) {
        Ok(i) => i,
        Err(e) => return skip(format!("unusable image file: {e}")),
    };
    if (clean.width(), clean.height()) != (img.entry.width, img.entry.height) {
        return skip(format!(
            "decoded size {}x{} does not match the annotated size {}x{}",
            clean.width(),
            clean.height(),
            img.entry.width,
            img.entry.height
        ));
    }

    let clean_digest = content_digest(&clean);
    let clean_path = if opts.reference_clean {
        img.source_path.to_string_lossy().into_owned()
    } else {
        let dest = out_root.join(CLEAN_DIR).join(&img.rel_path);
        if let Some(parent) = dest.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::copy(&img.source_path, &dest).map_err(|e| Error::io(&dest, e))?;
        path_string(CLEAN_DIR, &img.rel_path)
    };

    let mut pairs = Vec::with_capacity(opts.variants_per_image as usize);
    for variant_index in 0..opts.variants_per_image {
        let severity = opts.policy.assign(opts.global_seed, &id_str, variant_index);
        let recipe = sample_recipe_indexed(opts.global_seed, &id_str, variant_index, severity, config);
        let variant = apply_steps(&clean, &recipe.steps)?;

        let rel = variant_rel_path(&img.rel_path, variant_index, opts.variants_per_image);
        let dest = out_root.join(VARIANT_DIR).join(&rel);
        if let Some(parent) = dest.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        save_image(&variant, &dest)?;

        pairs.push((
            id,
            PairRecord {
                image_id: id_str.clone(),
                variant_index,
                severity,
                clean_path: clean_path.clone(),
                variant_path: path_string(VARIANT_DIR, &rel),
                annotation_ids: img.annotation_ids.clone(),
                variant_digest: content_digest(&variant),
                clean_digest: clean_digest.clone(),
                recipe,
            },
        ));
    }
    Ok(ImageOutcome::Pairs(pairs))
}

/// Run the full pipeline over an ingested dataset, writing the output tree
/// and returning the manifest (also written to `manifest.json`).
pub fn generate_pairs(
    index: &DatasetIndex,
    config: &SeverityConfig,
    opts: &GenerateOptions,
    out_root: &Path,
) -> Result<PairManifest> {
    if opts.variants_per_image == 0 {
        return Err(Error::Param("variants_per_image must be at least 1".into()));
    }
    if opts.workers == 0 {
        return Err(Error::Param("workers must be at least 1".into()));
    }
    opts.policy.validate()?;
    config.validate()?;

    fs::create_dir_all(out_root).map_err(|e| Error::io(out_root, e))?;

    // Annotations are written once per run; both members of every pair refer
    // to this one file, so they share annotation bytes by construction.
    let kept: BTreeSet<u64> = index.entries.iter().map(|e| e.entry.id).collect();
    let filtered = index.doc.filtered(&|id| kept.contains(&id))?;
    let ann_bytes = {
        let mut s = serde_json::to_string_pretty(&filtered)?;
        s.push('\n');
        s.into_bytes()
    };
    let ann_path = out_root.join(ANNOTATIONS_FILE);
    fs::write(&ann_path, &ann_bytes).map_err(|e| Error::io(&ann_path, e))?;
    let annotations_digest = bytes_digest(&ann_bytes);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(format!("could not build worker pool: {e}")))?;
    let outcomes: Vec<ImageOutcome> = pool.install(|| {
        index
            .entries
            .par_iter()
            .map(|img| process_image(img, config, opts, out_root))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut pairs: Vec<(u64, PairRecord)> = Vec::new();
    let mut skipped: Vec<(u64, SkipRecord)> = index
        .skipped
        .iter()
        .map(|s| (s.image_id.parse::<u64>().unwrap_or(u64::MAX), s.clone()))
        .collect();
    for outcome in outcomes {
        match outcome {
            ImageOutcome::Pairs(p) => pairs.extend(p),
            ImageOutcome::Skip(id, s) => skipped.push((id, s)),
        }
    }
    // Normalize ordering so the manifest is byte-identical for any worker
    // count or scheduling interleave.
    pairs.sort_by(|a, b| (a.0, a.1.variant_index).cmp(&(b.0, b.1.variant_index)));
    skipped.sort_by(|a, b| a.0.cmp(&b.0));

    let manifest = PairManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        global_seed: opts.global_seed,
        severity_policy: opts.policy,
        variants_per_image: opts.variants_per_image,
        reference_clean: opts.reference_clean,
        annotations_file: ANNOTATIONS_FILE.to_string(),
        annotations_digest,
        pairs: pairs.into_iter().map(|(_, p)| p).collect(),
        skipped: skipped.into_iter().map(|(_, s)| s).collect(),
    };
    save_manifest(&manifest, &out_root.join(MANIFEST_FILE))?;
    Ok(manifest)
}

pub fn save_manifest(manifest: &PairManifest, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: &Path) -> Result<PairManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: PairManifest = serde_json::from_str(&text)?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(Error::Manifest(format!(
            "unsupported manifest schema version {} (this build reads {})",
            manifest.schema_version, MANIFEST_SCHEMA_VERSION
        )));
    }
    Ok(manifest)
}

/// What a verification issue is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    MissingFile,
    CleanDigestMismatch,
    VariantDigestMismatch,
    ReplayMismatch,
    AnnotationsDigestMismatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyIssue {
    /// `"image 7 variant 0"` or `"annotations"`.
    pub scope: String,
    pub kind: IssueKind,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub pairs_checked: usize,
    pub issues: Vec<VerifyIssue>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }
}

fn resolve(out_root: &Path, recorded: &str) -> PathBuf {
    let p = Path::new(recorded);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_root.join(p)
    }
}

/// Re-check a generated tree against its manifest.
///
/// Per pair: (1) the clean file must decode to the recorded clean digest,
/// (2) the variant file must decode to the recorded variant digest, and
/// (3) re-running the recorded recipe on the clean pixels must reproduce the
/// recorded variant digest. The replay check is skipped when (1) fails —
/// replay is only meaningful from authentic clean pixels — so each kind of
/// tampering surfaces as exactly one issue.
pub fn verify_pairs(manifest: &PairManifest, out_root: &Path) -> Result<VerifyReport> {
    let mut issues = Vec::new();

    let ann_path = resolve(out_root, &manifest.annotations_file);
    match fs::read(&ann_path) {
        Ok(bytes) => {
            let digest = bytes_digest(&bytes);
            if digest != manifest.annotations_digest {
                issues.push(VerifyIssue {
                    scope: "annotations".into(),
                    kind: IssueKind::AnnotationsDigestMismatch,
                    detail: format!(
                        "{} hashes to {digest}, manifest records {}",
                        manifest.annotations_file, manifest.annotations_digest
                    ),
                });
            }
        }
        Err(e) => issues.push(VerifyIssue {
            scope: "annotations".into(),
            kind: IssueKind::MissingFile,
            detail: format!("{}: {e}", ann_path.display()),
        }),
    }

    for pair in &manifest.pairs {
        let scope = format!("image {} variant {}", pair.image_id, pair.variant_index);

        let clean = match load_image(&resolve(out_root, &pair.clean_path)) {
            Ok(img) => Some(img),
            Err(e) => {
                issues.push(VerifyIssue {
                    scope: scope.clone(),
                    kind: IssueKind::MissingFile,
                    detail: format!("clean half unreadable: {e}"),
                });
                None
            }
        };
        let clean_ok = match &clean {
            Some(img) => {
                let digest = content_digest(img);
                let ok = digest == pair.clean_digest;
                if !ok {
                    issues.push(VerifyIssue {
                        scope: scope.clone(),
                        kind: IssueKind::CleanDigestMismatch,
                        detail: format!(
                            "{} hashes to {digest}, manifest records {}",
                            pair.clean_path, pair.clean_digest
                        ),
                    });
                }
                ok
            }
            None => false,
        };

        match load_image(&resolve(out_root, &pair.variant_path)) {
            Ok(img) => {
                let digest = content_digest(&img);
                if digest != pair.variant_digest {
                    issues.push(VerifyIssue {
                        scope: scope.clone(),
                        kind: IssueKind::VariantDigestMismatch,
                        detail: format!(
                            "{} hashes to {digest}, manifest records {}",
                            pair.variant_path, pair.variant_digest
                        ),
                    });
                }
            }
            Err(e) => issues.push(VerifyIssue {
                scope: scope.clone(),
                kind: IssueKind::MissingFile,
                detail: format!("variant half unreadable: {e}"),
            }),
        }

        if clean_ok {
            let replayed = apply_steps(clean.as_ref().unwrap(), &pair.recipe.steps)?;
            let digest = content_digest(&replayed);
            if digest != pair.variant_digest {
                issues.push(VerifyIssue {
                    scope,
                    kind: IssueKind::ReplayMismatch,
                    detail: format!(
                        "re-running the recorded recipe yields {digest}, manifest records {}",
                        pair.variant_digest
                    ),
                });
            }
        }
    }

    Ok(VerifyReport {
        pairs_checked: manifest.pairs.len(),
        issues,
    })
}
