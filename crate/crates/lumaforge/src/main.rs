//! Command-line front end.
//!
//! Exit codes: 0 = full success, 2 = completed with skipped images,
//! 1 = anything fatal (bad arguments, unreadable inputs, failed checks).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lumaforge::lca::selftest::run_self_test;
use lumaforge::lightops::{apply_step, OpKind, OpStep, HAZE_COLOR_DEFAULT, VIGNETTE_POWER_DEFAULT};
use lumaforge::metrics::{per_pair_csv, severity_report, MaskDirs, ReportOptions};
use lumaforge::pairgen::{
    generate_pairs, ingest_coco, load_manifest, verify_pairs, GenerateOptions, SkipRecord,
    MANIFEST_FILE,
};
use lumaforge::raster::{load_image, save_image};
use lumaforge::sampler::SeverityPolicy;
use lumaforge::severity::{load_severity_config, SeverityConfig, SeverityLevel};
use lumaforge::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lumaforge",
    version,
    about = "Deterministic lighting augmentation for paired instance-segmentation datasets",
    after_help = "Every run is a pure function of its flags: same inputs and seed, same bytes.\n\
                  Use --config-dump to print the effective severity configuration as TOML."
)]
struct Cli {
    /// Print the effective severity configuration (TOML) and exit.
    #[arg(long)]
    config_dump: bool,

    /// Severity-band override file (TOML); defaults to the built-in table.
    #[arg(long, value_name = "FILE", global = true)]
    severity_config: Option<PathBuf>,

    /// Emit machine-readable JSON on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (clean, variant) image pairs from a COCO dataset.
    Augment(AugmentArgs),
    /// Apply a single operation to a single image with explicit parameters.
    Preview(PreviewArgs),
    /// Re-verify a generated tree against its manifest.
    Validate(ValidateArgs),
    /// Compute the per-severity quality report (JSON plus per-pair CSV).
    Report(ReportArgs),
    /// Run the numeric invariant and gradient suite of the attention module.
    LcaSelftest,
}

#[derive(Args)]
struct AugmentArgs {
    /// COCO annotation JSON file.
    #[arg(long, value_name = "FILE")]
    coco: PathBuf,

    /// Directory holding the images the annotations reference.
    #[arg(long, value_name = "DIR")]
    images: PathBuf,

    /// Output root for the generated tree.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Global seed. Mandatory — a run is identified by its seed; there is
    /// no wall-clock default.
    #[arg(long)]
    seed: u64,

    /// Severity policy: a fixed tier (`1`, `2`, `3`), `uniform`, or
    /// `weighted:W1,W2,W3` (relative tier weights). Tiers bound both the
    /// per-op parameter bands and how many ops stack (1/2/3); see
    /// --config-dump for every band.
    #[arg(long, default_value = "uniform", value_parser = parse_policy)]
    severity: SeverityPolicy,

    /// Degraded variants per clean image.
    #[arg(long, value_name = "N", default_value_t = 1)]
    variants_per_image: u32,

    /// Worker threads. Output bytes are identical for any worker count.
    #[arg(long, value_name = "N", env = "LUMAFORGE_WORKERS", default_value_t = 1)]
    workers: usize,

    /// Record absolute paths to the source clean files instead of copying
    /// them into the output tree.
    #[arg(long)]
    reference_clean: bool,
}

#[derive(Args)]
struct PreviewArgs {
    /// Input image (8-bit PNG or JPEG).
    image: PathBuf,

    /// Operation: exposure, brightness, contrast, gamma, warm, cool,
    /// vignette, shadow, grain, haze, color_cast, flare.
    op: String,

    /// Operation parameters as key=value, e.g. `ev=0.5` or `strength=0.3
    /// angle_deg=45 sharpness=6`.
    #[arg(value_name = "KEY=VALUE")]
    params: Vec<String>,

    /// Severity context (1, 2 or 3): rejects operations reserved for a
    /// harsher tier.
    #[arg(long)]
    severity: Option<u8>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Manifest file of the tree to check.
    manifest: PathBuf,

    /// Root the manifest's relative paths resolve against (default: the
    /// manifest's directory).
    #[arg(long, value_name = "DIR")]
    out_root: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Manifest file of the tree to score.
    manifest: PathBuf,

    /// Root the manifest's relative paths resolve against (default: the
    /// manifest's directory).
    #[arg(long, value_name = "DIR")]
    out_root: Option<PathBuf>,

    /// Where to write report.json and report_per_pair.csv (default: the
    /// output root).
    #[arg(long, value_name = "DIR")]
    report_dir: Option<PathBuf>,

    /// Ground-truth instance masks, one `{annotation_id}.png` per instance.
    #[arg(long, value_name = "DIR")]
    truth_masks: Option<PathBuf>,

    /// Baseline system's predicted masks (same naming as --truth-masks).
    #[arg(long, value_name = "DIR")]
    system_a: Option<PathBuf>,

    /// Comparison system's predicted masks (same naming as --truth-masks).
    #[arg(long, value_name = "DIR")]
    system_b: Option<PathBuf>,
}

fn parse_policy(s: &str) -> std::result::Result<SeverityPolicy, String> {
    match s {
        "uniform" => Ok(SeverityPolicy::Uniform),
        "1" | "2" | "3" => {
            let tier = s.parse::<u8>().expect("single digit");
            Ok(SeverityPolicy::Fixed(
                SeverityLevel::from_tier(tier).expect("tier in 1..=3"),
            ))
        }
        _ => {
            let Some(rest) = s.strip_prefix("weighted:") else {
                return Err(format!(
                    "`{s}` is not a severity policy; expected `1`, `2`, `3`, `uniform` or `weighted:W1,W2,W3`"
                ));
            };
            let weights: Vec<f64> = rest
                .split(',')
                .map(|w| {
                    w.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("weight `{w}` is not a number"))
                })
                .collect::<std::result::Result<_, _>>()?;
            let [w1, w2, w3]: [f64; 3] = weights
                .try_into()
                .map_err(|_| "weighted policy needs exactly three weights".to_string())?;
            let policy = SeverityPolicy::Weighted([w1, w2, w3]);
            policy.validate().map_err(|e| e.to_string())?;
            Ok(policy)
        }
    }
}

fn main() -> ExitCode {
    // Exit codes are a contract (0 = success, 1 = fatal, 2 = completed with
    // skips), so clap's usage errors are remapped from its default 2 to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let severity_config = match &cli.severity_config {
        Some(path) => load_severity_config(path)?,
        None => SeverityConfig::default(),
    };

    if cli.config_dump {
        print!("{}", severity_config.to_toml_string()?);
        return Ok(ExitCode::SUCCESS);
    }

    let Some(command) = cli.command else {
        return Err(Error::Param(
            "no subcommand given; see --help (or --config-dump for the severity table)".into(),
        ));
    };

    match command {
        Command::Augment(args) => run_augment(args, &severity_config, cli.json),
        Command::Preview(args) => run_preview(args, cli.json),
        Command::Validate(args) => run_validate(args, cli.json),
        Command::Report(args) => run_report(args, cli.json),
        Command::LcaSelftest => run_lca_selftest(),
    }
}

fn default_out_root(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf()
}

#[derive(Serialize)]
struct AugmentSummary<'a> {
    manifest: String,
    pairs: usize,
    /// Pair counts for tiers 1, 2, 3.
    tier_counts: [usize; 3],
    skipped: &'a [SkipRecord],
}

fn run_augment(args: AugmentArgs, config: &SeverityConfig, json: bool) -> Result<ExitCode> {
    let index = ingest_coco(&args.coco, &args.images)?;
    let opts = GenerateOptions {
        global_seed: args.seed,
        policy: args.severity,
        variants_per_image: args.variants_per_image,
        workers: args.workers,
        reference_clean: args.reference_clean,
    };
    let manifest = generate_pairs(&index, config, &opts, &args.out)?;

    let mut tier_counts = [0usize; 3];
    for pair in &manifest.pairs {
        tier_counts[(pair.severity.tier() - 1) as usize] += 1;
    }
    let manifest_path = args.out.join(MANIFEST_FILE);
    let summary = AugmentSummary {
        manifest: manifest_path.display().to_string(),
        pairs: manifest.pairs.len(),
        tier_counts,
        skipped: &manifest.skipped,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("manifest: {}", summary.manifest);
        println!(
            "pairs: {} (tier 1: {}, tier 2: {}, tier 3: {})",
            summary.pairs, tier_counts[0], tier_counts[1], tier_counts[2]
        );
        for skip in &manifest.skipped {
            println!(
                "skipped image {} ({}): {}",
                skip.image_id, skip.file_name, skip.reason
            );
        }
    }
    Ok(if manifest.skipped.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

/// `key=value` parameter list with checked extraction.
struct ParamBag {
    op: OpKind,
    values: BTreeMap<String, f64>,
}

impl ParamBag {
    fn parse(op: OpKind, params: &[String]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for raw in params {
            let Some((key, value)) = raw.split_once('=') else {
                return Err(Error::Param(format!(
                    "parameters are key=value, got `{raw}`"
                )));
            };
            let parsed: f64 = value.parse().map_err(|_| {
                Error::Param(format!("parameter `{key}` must be a number, got `{value}`"))
            })?;
            if values.insert(key.to_string(), parsed).is_some() {
                return Err(Error::Param(format!("parameter `{key}` given twice")));
            }
        }
        Ok(ParamBag { op, values })
    }

    fn require(&mut self, key: &str) -> Result<f64> {
        self.values.remove(key).ok_or_else(|| {
            Error::Param(format!(
                "operation `{}` requires parameter `{key}`",
                self.op
            ))
        })
    }

    fn optional(&mut self, key: &str, default: f64) -> f64 {
        self.values.remove(key).unwrap_or(default)
    }

    fn finish(self) -> Result<()> {
        if self.values.is_empty() {
            Ok(())
        } else {
            let unknown: Vec<&str> = self.values.keys().map(String::as_str).collect();
            Err(Error::Param(format!(
                "unknown parameter(s) for `{}`: {}",
                self.op,
                unknown.join(", ")
            )))
        }
    }
}

fn step_from_params(op: OpKind, params: &[String]) -> Result<OpStep> {
    let mut bag = ParamBag::parse(op, params)?;
    let step = match op {
        OpKind::Exposure => OpStep::Exposure {
            ev: bag.require("ev")?,
        },
        OpKind::Brightness => OpStep::Brightness {
            percent: bag.require("percent")?,
        },
        OpKind::Contrast => OpStep::Contrast {
            factor: bag.require("factor")?,
        },
        OpKind::Gamma => OpStep::Gamma {
            gamma: bag.require("gamma")?,
        },
        OpKind::Warm => OpStep::Warm {
            tint: bag.require("tint")?,
        },
        OpKind::Cool => OpStep::Cool {
            tint: bag.require("tint")?,
        },
        OpKind::Vignette => OpStep::Vignette {
            strength: bag.require("strength")?,
            center_x: bag.optional("center_x", 0.5),
            center_y: bag.optional("center_y", 0.5),
            power: bag.optional("power", VIGNETTE_POWER_DEFAULT),
        },
        OpKind::Shadow => OpStep::Shadow {
            strength: bag.require("strength")?,
            angle_deg: bag.optional("angle_deg", 0.0),
            sharpness: bag.require("sharpness")?,
        },
        OpKind::Grain => OpStep::Grain {
            intensity: bag.require("intensity")?,
            noise_seed: bag.optional("noise_seed", 0.0) as u64,
        },
        OpKind::Haze => OpStep::Haze {
            alpha: bag.require("alpha")?,
            color: [
                bag.optional("color_r", HAZE_COLOR_DEFAULT[0]),
                bag.optional("color_g", HAZE_COLOR_DEFAULT[1]),
                bag.optional("color_b", HAZE_COLOR_DEFAULT[2]),
            ],
        },
        OpKind::ColorCast => OpStep::ColorCast {
            hue_deg: bag.require("hue_deg")?,
            strength: bag.require("strength")?,
        },
        OpKind::Flare => OpStep::Flare {
            center_x: bag.require("center_x")?,
            center_y: bag.require("center_y")?,
            sigma: bag.require("sigma")?,
            amplitude: bag.require("amplitude")?,
        },
    };
    bag.finish()?;
    Ok(step)
}

#[derive(Serialize)]
struct PreviewSummary {
    input: String,
    output: String,
    step: OpStep,
}

fn run_preview(args: PreviewArgs, json: bool) -> Result<ExitCode> {
    let op = OpKind::from_name(&args.op).ok_or_else(|| {
        let known: Vec<&str> = OpKind::ALL.iter().map(|k| k.name()).collect();
        Error::Param(format!(
            "unknown operation `{}`; expected one of: {}",
            args.op,
            known.join(", ")
        ))
    })?;

    if let Some(tier) = args.severity {
        let level = SeverityLevel::from_tier(tier)?;
        if op.severity3_only() && level.tier() < 3 {
            return Err(Error::Param(format!(
                "operation `{op}` is reserved for severity tier 3, but the requested context is tier {tier}"
            )));
        }
    }

    let step = step_from_params(op, &args.params)?;
    let input = load_image(&args.image)?;
    let output = apply_step(&input, &step)?;

    let stem = args
        .image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    let out_path = args
        .image
        .with_file_name(format!("{stem}_preview_{}.png", op.name()));
    save_image(&output, &out_path)?;

    let summary = PreviewSummary {
        input: args.image.display().to_string(),
        output: out_path.display().to_string(),
        step,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("wrote {}", summary.output);
        println!("applied: {}", serde_json::to_string(&summary.step)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn run_validate(args: ValidateArgs, json: bool) -> Result<ExitCode> {
    let manifest = load_manifest(&args.manifest)?;
    let out_root = args
        .out_root
        .unwrap_or_else(|| default_out_root(&args.manifest));
    let report = verify_pairs(&manifest, &out_root)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("checked {} pairs", report.pairs_checked);
        for issue in &report.issues {
            println!("{} [{:?}]: {}", issue.scope, issue.kind, issue.detail);
        }
        if report.ok() {
            println!("all digests and replays match");
        }
    }
    Ok(if report.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_report(args: ReportArgs, json: bool) -> Result<ExitCode> {
    let manifest = load_manifest(&args.manifest)?;
    let out_root = args
        .out_root
        .unwrap_or_else(|| default_out_root(&args.manifest));

    let masks = match (args.truth_masks, args.system_a, args.system_b) {
        (None, None, None) => None,
        (Some(truth), Some(system_a), Some(system_b)) => Some(MaskDirs {
            truth,
            system_a,
            system_b,
        }),
        _ => {
            return Err(Error::Param(
                "mask scoring needs --truth-masks, --system-a and --system-b together".into(),
            ));
        }
    };

    let report = severity_report(&manifest, &out_root, &ReportOptions { masks })?;

    let report_dir = args.report_dir.unwrap_or_else(|| out_root.clone());
    std::fs::create_dir_all(&report_dir).map_err(|e| Error::io(&report_dir, e))?;
    let json_path = report_dir.join("report.json");
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    std::fs::write(&json_path, body).map_err(|e| Error::io(&json_path, e))?;
    let csv_path = report_dir.join("report_per_pair.csv");
    std::fs::write(&csv_path, per_pair_csv(&report.per_pair))
        .map_err(|e| Error::io(&csv_path, e))?;

    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("wrote {} and {}", json_path.display(), csv_path.display());
        for tier in &report.tiers {
            match (tier.ssim_mean, tier.ssim_std) {
                (Some(mean), Some(std)) => println!(
                    "tier {}: {} pairs, ssim {:.4} ± {:.4}",
                    tier.tier, tier.pair_count, mean, std
                ),
                _ => println!("tier {}: no pairs", tier.tier),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_lca_selftest() -> Result<ExitCode> {
    let report = run_self_test();
    // The verdict is JSON by contract, --json or not.
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
