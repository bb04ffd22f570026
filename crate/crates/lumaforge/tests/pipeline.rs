//! End-to-end pipeline tests: generate a paired tree from the synthetic
//! fixture, verify it, then tamper with each artifact class and confirm the
//! verifier attributes exactly one issue of the right kind.

mod common;

use std::path::Path;

use lumaforge::lightops::OpStep;
use lumaforge::pairgen::{
    generate_pairs, ingest_coco, load_manifest, verify_pairs, DatasetIndex, GenerateOptions,
    IssueKind, PairManifest, ANNOTATIONS_FILE, MANIFEST_FILE,
};
use lumaforge::raster::{load_image, save_image};
use lumaforge::sampler::SeverityPolicy;
use lumaforge::severity::{SeverityConfig, SeverityLevel};

fn ingest(fixture: &common::Fixture) -> DatasetIndex {
    ingest_coco(&fixture.coco_path, &fixture.images_dir).expect("fixture ingests cleanly")
}

fn default_opts(seed: u64) -> GenerateOptions {
    GenerateOptions {
        global_seed: seed,
        policy: SeverityPolicy::Uniform,
        variants_per_image: 1,
        workers: 2,
        reference_clean: false,
    }
}

fn generate(
    index: &DatasetIndex,
    opts: &GenerateOptions,
    out_root: &Path,
) -> PairManifest {
    generate_pairs(index, &SeverityConfig::default(), opts, out_root).expect("generation succeeds")
}

/// Rewrite one image file with visibly different pixels of the same size.
fn tamper_pixels(path: &Path) {
    let mut img = load_image(path).expect("tamper target loads");
    let p = img.pixel(0, 0);
    let flipped = if p[0] > 0.5 { 0.0 } else { 1.0 };
    img.set_pixel(0, 0, [flipped, p[1], p[2]]);
    save_image(&img, path).expect("tampered image saves");
}

/// Shift one parameter of a step, staying inside globally valid ranges so
/// the replay still runs — it just no longer reproduces the recording.
fn nudge(step: &OpStep) -> OpStep {
    match *step {
        OpStep::Exposure { ev } => OpStep::Exposure { ev: ev + 0.05 },
        OpStep::Shadow { strength, angle_deg, sharpness } => OpStep::Shadow {
            strength: if strength > 0.5 { strength - 0.1 } else { strength + 0.1 },
            angle_deg,
            sharpness,
        },
        OpStep::Warm { tint } => OpStep::Warm { tint: if tint > 0.12 { tint - 0.02 } else { tint + 0.02 } },
        OpStep::Cool { tint } => OpStep::Cool { tint: if tint > 0.12 { tint - 0.02 } else { tint + 0.02 } },
        OpStep::Vignette { strength, center_x, center_y, power } => OpStep::Vignette {
            strength: if strength > 0.4 { strength - 0.08 } else { strength + 0.08 },
            center_x,
            center_y,
            power,
        },
        OpStep::Contrast { factor } => OpStep::Contrast {
            factor: if factor > 1.0 { factor - 0.08 } else { factor + 0.08 },
        },
        OpStep::Gamma { gamma } => OpStep::Gamma {
            gamma: if gamma > 1.0 { gamma - 0.08 } else { gamma + 0.08 },
        },
        OpStep::Brightness { percent } => OpStep::Brightness {
            percent: if percent > 0.0 { percent - 8.0 } else { percent + 8.0 },
        },
        OpStep::Grain { intensity, noise_seed } => OpStep::Grain {
            intensity: if intensity > 0.04 { intensity - 0.01 } else { intensity + 0.01 },
            noise_seed,
        },
        OpStep::Haze { alpha, color } => OpStep::Haze { alpha: alpha + 0.05, color },
        OpStep::ColorCast { hue_deg, strength } => OpStep::ColorCast {
            hue_deg: (hue_deg + 30.0) % 360.0,
            strength,
        },
        OpStep::Flare { center_x, center_y, sigma, amplitude } => OpStep::Flare {
            center_x,
            center_y,
            sigma,
            amplitude: if amplitude > 0.75 { amplitude - 0.2 } else { amplitude + 0.2 },
        },
    }
}

#[test]
fn fresh_run_verifies_clean() {
    let fixture = common::build_fixture(8);
    let index = ingest(&fixture);
    let out = tempfile::tempdir().unwrap();
    let manifest = generate(&index, &default_opts(3), out.path());
    assert_eq!(manifest.pairs.len(), 8, "one pair per fixture image");
    assert!(manifest.skipped.is_empty(), "nothing to skip in a clean fixture");

    let report = verify_pairs(&manifest, out.path()).expect("verification runs");
    assert!(report.ok(), "fresh tree must verify clean, got {:?}", report.issues);
    assert_eq!(report.pairs_checked, 8);

    // The manifest on disk round-trips to the in-memory one.
    let reloaded = load_manifest(&out.path().join(MANIFEST_FILE)).expect("manifest loads");
    assert_eq!(reloaded, manifest, "written manifest differs from the returned one");
}

#[test]
fn variant_overwrite_is_one_variant_digest_issue() {
    let fixture = common::build_fixture(6);
    let index = ingest(&fixture);
    let out = tempfile::tempdir().unwrap();
    let manifest = generate(&index, &default_opts(5), out.path());

    let victim = &manifest.pairs[2];
    tamper_pixels(&out.path().join(&victim.variant_path));

    let report = verify_pairs(&manifest, out.path()).expect("verification runs");
    assert_eq!(
        report.issues.len(),
        1,
        "tampered variant must yield exactly one issue, got {:?}",
        report.issues
    );
    let issue = &report.issues[0];
    assert_eq!(issue.kind, IssueKind::VariantDigestMismatch);
    assert!(
        issue.scope.contains(&victim.image_id),
        "issue scope `{}` does not name image {}",
        issue.scope,
        victim.image_id
    );
}

#[test]
fn clean_overwrite_is_one_clean_digest_issue() {
    let fixture = common::build_fixture(6);
    let index = ingest(&fixture);
    let out = tempfile::tempdir().unwrap();
    let manifest = generate(&index, &default_opts(5), out.path());

    let victim = &manifest.pairs[4];
    tamper_pixels(&out.path().join(&victim.clean_path));

    let report = verify_pairs(&manifest, out.path()).expect("verification runs");
    // The replay check must stay silent: replaying from tampered clean
    // pixels would merely cascade the same root cause.
    assert_eq!(
        report.issues.len(),
        1,
        "tampered clean must yield exactly one issue, got {:?}",
        report.issues
    );
    assert_eq!(report.issues[0].kind, IssueKind::CleanDigestMismatch);
}

#[test]
fn recipe_edit_is_one_replay_issue() {
    let fixture = common::build_fixture(6);
    let index = ingest(&fixture);
    let out = tempfile::tempdir().unwrap();
    let mut manifest = generate(&index, &default_opts(9), out.path());

    let original = manifest.pairs[1].recipe.steps[0].clone();
    let edited = nudge(&original);
    assert_ne!(edited, original, "nudge must actually change the step");
    manifest.pairs[1].recipe.steps[0] = edited;

    let report = verify_pairs(&manifest, out.path()).expect("verification runs");
    assert_eq!(
        report.issues.len(),
        1,
        "edited recipe must yield exactly one issue, got {:?}",
        report.issues
    );
    let issue = &report.issues[0];
    assert_eq!(issue.kind, IssueKind::ReplayMismatch);
    assert!(
        issue.scope.contains(&manifest.pairs[1].image_id),
        "issue scope `{}` does not name the edited pair",
        issue.scope
    );
}

#[test]
fn annotations_edit_is_one_annotations_issue() {
    let fixture = common::build_fixture(5);
    let index = ingest(&fixture);
    let out = tempfile::tempdir().unwrap();
    let manifest = generate(&index, &default_opts(13), out.path());

    let ann_path = out.path().join(ANNOTATIONS_FILE);
    let mut text = std::fs::read_to_string(&ann_path).unwrap();
    text.push('\n');
    std::fs::write(&ann_path, text).unwrap();

    let report = verify_pairs(&manifest, out.path()).expect("verification runs");
    assert_eq!(
        report.issues.len(),
        1,
        "edited annotation file must yield exactly one issue, got {:?}",
        report.issues
    );
    assert_eq!(report.issues[0].kind, IssueKind::AnnotationsDigestMismatch);
    assert_eq!(report.issues[0].scope, "annotations");
}

#[test]
fn deleted_variant_is_one_missing_file_issue() {
    let fixture = common::build_fixture(5);
    let index = ingest(&fixture);
    let out = tempfile::tempdir().unwrap();
    let manifest = generate(&index, &default_opts(21), out.path());

    std::fs::remove_file(out.path().join(&manifest.pairs[0].variant_path)).unwrap();

    let report = verify_pairs(&manifest, out.path()).expect("verification runs");
    assert_eq!(report.issues.len(), 1, "got {:?}", report.issues);
    assert_eq!(report.issues[0].kind, IssueKind::MissingFile);
}

#[test]
fn unreadable_source_image_becomes_a_skip_not_a_failure() {
    let fixture = common::build_fixture(7);
    common::corrupt_image(&fixture, 3);

    let index = ingest(&fixture);
    let out = tempfile::tempdir().unwrap();
    let manifest = generate(&index, &default_opts(2), out.path());

    let skipped_total = index.skipped.len() + manifest.skipped.len();
    assert_eq!(skipped_total, 1, "exactly the corrupted image is skipped");
    assert_eq!(manifest.pairs.len(), 6, "remaining images still produce pairs");
    let all_skips: Vec<&str> = index
        .skipped
        .iter()
        .chain(manifest.skipped.iter())
        .map(|s| s.file_name.as_str())
        .collect();
    assert!(
        all_skips.contains(&fixture.file_names[3].as_str()),
        "skip records {all_skips:?} do not name the corrupted file"
    );

    let report = verify_pairs(&manifest, out.path()).expect("verification runs");
    assert!(report.ok(), "surviving pairs still verify, got {:?}", report.issues);
}

#[test]
fn reference_clean_records_absolute_sources_without_copies() {
    let fixture = common::build_fixture(4);
    let index = ingest(&fixture);
    let out = tempfile::tempdir().unwrap();
    let opts = GenerateOptions {
        reference_clean: true,
        ..default_opts(17)
    };
    let manifest = generate(&index, &opts, out.path());

    assert!(manifest.reference_clean);
    for pair in &manifest.pairs {
        assert!(
            Path::new(&pair.clean_path).is_absolute(),
            "clean path `{}` should point at the source tree",
            pair.clean_path
        );
        assert!(
            out.path().join(&pair.variant_path).exists(),
            "variant `{}` must still be written",
            pair.variant_path
        );
    }
    assert!(
        !out.path().join("clean").exists(),
        "no clean copies should be made in reference mode"
    );

    let report = verify_pairs(&manifest, out.path()).expect("verification runs");
    assert!(report.ok(), "referenced tree verifies, got {:?}", report.issues);
}

#[test]
fn variant_fanout_names_indexes_and_distinct_recipes() {
    let fixture = common::build_fixture(4);
    let index = ingest(&fixture);
    let out = tempfile::tempdir().unwrap();
    let opts = GenerateOptions {
        variants_per_image: 3,
        policy: SeverityPolicy::Fixed(SeverityLevel::Severe),
        ..default_opts(31)
    };
    let manifest = generate(&index, &opts, out.path());
    assert_eq!(manifest.pairs.len(), 12, "4 images x 3 variants");

    for image_idx in 0..4 {
        let group: Vec<_> = manifest
            .pairs
            .iter()
            .filter(|p| p.image_id == manifest.pairs[image_idx * 3].image_id)
            .collect();
        assert_eq!(group.len(), 3);
        for (k, pair) in group.iter().enumerate() {
            assert_eq!(pair.variant_index, k as u32, "pairs sorted by variant index");
            assert!(
                pair.variant_path.contains(&format!("_v{k}")),
                "fan-out path `{}` must carry the index suffix",
                pair.variant_path
            );
            assert_eq!(
                pair.clean_digest, group[0].clean_digest,
                "all variants of an image share its clean half"
            );
        }
        assert!(
            group[0].recipe.steps != group[1].recipe.steps
                || group[1].recipe.steps != group[2].recipe.steps,
            "variant indexes must decorrelate the sampled recipes"
        );
    }

    let report = verify_pairs(&manifest, out.path()).expect("verification runs");
    assert!(report.ok(), "fan-out tree verifies, got {:?}", report.issues);
}

#[test]
fn worker_count_never_leaks_into_output() {
    let fixture = common::build_fixture(9);
    let index = ingest(&fixture);
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    let opts_a = GenerateOptions { workers: 3, ..default_opts(77) };
    let opts_b = GenerateOptions { workers: 5, ..default_opts(77) };
    generate(&index, &opts_a, out_a.path());
    generate(&index, &opts_b, out_b.path());

    let bytes_a = std::fs::read(out_a.path().join(MANIFEST_FILE)).unwrap();
    let bytes_b = std::fs::read(out_b.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(bytes_a, bytes_b, "manifest bytes depend on the worker count");
}

#[test]
fn global_seed_changes_the_variants() {
    let fixture = common::build_fixture(5);
    let index = ingest(&fixture);
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    let a = generate(&index, &default_opts(1), out_a.path());
    let b = generate(&index, &default_opts(2), out_b.path());

    assert_eq!(a.pairs.len(), b.pairs.len());
    assert!(
        a.pairs
            .iter()
            .zip(&b.pairs)
            .any(|(x, y)| x.variant_digest != y.variant_digest),
        "different seeds must produce different degradations somewhere"
    );
    // Clean halves are untouched by the seed.
    for (x, y) in a.pairs.iter().zip(&b.pairs) {
        assert_eq!(x.clean_digest, y.clean_digest, "seed must not affect clean pixels");
    }
}
