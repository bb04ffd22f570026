//! Conflict-aware recipe sampling.
//!
//! A *recipe* is the full parameterization of one variant image: which ops
//! run, with which parameters, in which order. Recipes are pure functions of
//! `(global seed, image id, variant index, severity)` — nothing about worker
//! scheduling, directory order, or previous images can change them, which is
//! what makes parallel generation byte-reproducible.
//!
//! Sampling respects three structural rules on top of the per-tier parameter
//! bands:
//!
//! * op count is uniform in `1..=max_ops(tier)` and kinds never repeat;
//! * physically contradictory pairs are mutually exclusive (see
//!   [`CONFLICT_GROUPS`]);
//! * color cast and flare only appear at the severe tier.
//!
//! Steps are recorded in the canonical composition order ([`OpKind::stage`]),
//! so applying a recipe is a straight left fold.

use serde::{Deserialize, Serialize};

use crate::lightops::{OpKind, OpStep, HAZE_COLOR_DEFAULT, VIGNETTE_POWER_DEFAULT};
use crate::rng::{derive_key, KeyedRng};
use crate::severity::{SeverityConfig, SeverityLevel};

/// Mutually exclusive op pairs.
///
/// Warm vs cool is a direct contradiction; exposure vs brightness stack the
/// same global gain twice; haze lifts black levels that contrast would fight
/// against; and a flare through haze washes out into nothing useful.
pub const CONFLICT_GROUPS: [[OpKind; 2]; 4] = [
    [OpKind::Warm, OpKind::Cool],
    [OpKind::Exposure, OpKind::Brightness],
    [OpKind::Haze, OpKind::Contrast],
    [OpKind::Flare, OpKind::Haze],
];

/// True when the two kinds may not appear in the same recipe.
pub fn conflicts(a: OpKind, b: OpKind) -> bool {
    CONFLICT_GROUPS
        .iter()
        .any(|g| (g[0] == a && g[1] == b) || (g[0] == b && g[1] == a))
}

/// Kinds eligible at a tier, in canonical enum order.
pub fn candidate_pool(level: SeverityLevel) -> Vec<OpKind> {
    OpKind::ALL
        .into_iter()
        .filter(|k| level == SeverityLevel::Severe || !k.severity3_only())
        .collect()
}

/// Sort steps into the canonical composition order, preserving relative
/// order within a stage.
pub fn sort_canonical(steps: &mut [OpStep]) {
    steps.sort_by_key(|s| s.kind().stage());
}

/// True when `steps` already follows the canonical composition order.
pub fn is_canonical(steps: &[OpStep]) -> bool {
    steps.windows(2).all(|w| w[0].kind().stage() <= w[1].kind().stage())
}

/// A fully sampled variant specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRecipe {
    pub image_id: String,
    pub severity: SeverityLevel,
    /// The derived stream key the recipe was drawn from; recorded for
    /// debugging, replay needs only `steps`.
    pub seed: u64,
    pub steps: Vec<OpStep>,
}

/// Sample the recipe for `(global_seed, image_id, severity)`.
pub fn sample_recipe(
    global_seed: u64,
    image_id: &str,
    severity: SeverityLevel,
    config: &SeverityConfig,
) -> VariantRecipe {
    sample_recipe_indexed(global_seed, image_id, 0, severity, config)
}

/// Like [`sample_recipe`] but for the `variant_index`-th variant of an image
/// when generating several variants per clean frame.
pub fn sample_recipe_indexed(
    global_seed: u64,
    image_id: &str,
    variant_index: u32,
    severity: SeverityLevel,
    config: &SeverityConfig,
) -> VariantRecipe {
    let key = derive_key("recipe", global_seed, image_id, variant_index, severity.tier());
    let mut rng = KeyedRng::from_key(key);

    let max_ops = config.max_ops.get(severity) as usize;
    let n = 1 + rng.below(max_ops);

    let mut pool = candidate_pool(severity);
    let mut kinds = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = pool[rng.below(pool.len())];
        kinds.push(pick);
        pool.retain(|&k| k != pick && !conflicts(k, pick));
    }
    kinds.sort_by_key(|k| k.stage());

    let steps = kinds
        .into_iter()
        .map(|kind| sample_step(kind, severity, config, &mut rng))
        .collect();

    VariantRecipe {
        image_id: image_id.to_string(),
        severity,
        seed: key,
        steps,
    }
}

fn uniform_in(rng: &mut KeyedRng, band: [f64; 2]) -> f64 {
    rng.range_f64(band[0], band[1])
}

fn sample_step(
    kind: OpKind,
    severity: SeverityLevel,
    config: &SeverityConfig,
    rng: &mut KeyedRng,
) -> OpStep {
    match kind {
        OpKind::Exposure => OpStep::Exposure {
            ev: uniform_in(rng, config.exposure_ev.get(severity)),
        },
        OpKind::Shadow => OpStep::Shadow {
            strength: uniform_in(rng, config.shadow_strength.get(severity)),
            angle_deg: rng.range_f64(0.0, 360.0),
            sharpness: uniform_in(rng, config.shadow_sharpness.get(severity)),
        },
        OpKind::Warm => OpStep::Warm {
            tint: uniform_in(rng, config.color_temp_tint.get(severity)),
        },
        OpKind::Cool => OpStep::Cool {
            tint: uniform_in(rng, config.color_temp_tint.get(severity)),
        },
        OpKind::Vignette => OpStep::Vignette {
            strength: uniform_in(rng, config.vignette_strength.get(severity)),
            center_x: rng.range_f64(0.4, 0.6),
            center_y: rng.range_f64(0.4, 0.6),
            power: VIGNETTE_POWER_DEFAULT,
        },
        OpKind::Contrast => OpStep::Contrast {
            factor: uniform_in(rng, config.contrast_factor.get(severity)),
        },
        OpKind::Gamma => OpStep::Gamma {
            gamma: uniform_in(rng, config.gamma.get(severity)),
        },
        OpKind::Brightness => OpStep::Brightness {
            percent: uniform_in(rng, config.brightness_percent.get(severity)),
        },
        OpKind::Grain => OpStep::Grain {
            intensity: uniform_in(rng, config.grain_intensity.get(severity)),
            noise_seed: rng.next_u64(),
        },
        OpKind::Haze => OpStep::Haze {
            alpha: uniform_in(rng, config.haze_alpha.get(severity)),
            color: HAZE_COLOR_DEFAULT,
        },
        OpKind::ColorCast => OpStep::ColorCast {
            hue_deg: rng.range_f64(0.0, 360.0),
            strength: uniform_in(rng, config.color_cast_strength.tier3),
        },
        OpKind::Flare => {
            // Pick an edge, a position along it, and an inset toward the
            // interior of at most the allowed edge distance.
            let edge = rng.below(4);
            let along = rng.next_f64();
            let inset = rng.range_f64(0.0, crate::lightops::limits::FLARE_EDGE_DISTANCE);
            let (center_x, center_y) = match edge {
                0 => (along, inset),          // top
                1 => (along, 1.0 - inset),    // bottom
                2 => (inset, along),          // left
                _ => (1.0 - inset, along),    // right
            };
            OpStep::Flare {
                center_x,
                center_y,
                sigma: uniform_in(rng, config.flare_sigma.tier3),
                amplitude: uniform_in(rng, config.flare_amplitude.tier3),
            }
        }
    }
}

/// How a pipeline run assigns severities to images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityPolicy {
    /// Every variant gets the same tier.
    Fixed(SeverityLevel),
    /// Tier drawn uniformly per variant.
    Uniform,
    /// Tier drawn with the given (not necessarily normalized) weights.
    Weighted([f64; 3]),
}

impl SeverityPolicy {
    /// The tier for one variant; deterministic per
    /// `(global_seed, image_id, variant_index)`.
    pub fn assign(&self, global_seed: u64, image_id: &str, variant_index: u32) -> SeverityLevel {
        match *self {
            SeverityPolicy::Fixed(level) => level,
            SeverityPolicy::Uniform => {
                let key = derive_key("severity", global_seed, image_id, variant_index, 0);
                SeverityLevel::ALL[KeyedRng::from_key(key).below(3)]
            }
            SeverityPolicy::Weighted(w) => {
                let key = derive_key("severity", global_seed, image_id, variant_index, 0);
                let total: f64 = w.iter().sum();
                let mut x = KeyedRng::from_key(key).next_f64() * total;
                for (i, &wi) in w.iter().enumerate() {
                    if x < wi {
                        return SeverityLevel::ALL[i];
                    }
                    x -= wi;
                }
                SeverityLevel::Severe
            }
        }
    }

    /// Weights must be finite, non-negative, and not all zero.
    pub fn validate(&self) -> crate::error::Result<()> {
        if let SeverityPolicy::Weighted(w) = self {
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return Err(crate::error::Error::Param(format!(
                    "severity weights must be non-negative and sum to > 0, got {w:?}"
                )));
            }
        }
        Ok(())
    }
}

/// One way a recipe can violate the sampling contract.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RecipeViolation {
    EmptyRecipe,
    TooManyOps { count: usize, max: u32 },
    DuplicateKind(OpKind),
    ConflictingKinds(OpKind, OpKind),
    SeverityRestricted(OpKind),
    NotCanonicalOrder { position: usize },
    OutOfBand {
        kind: OpKind,
        param: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

impl std::fmt::Display for RecipeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecipeViolation::EmptyRecipe => write!(f, "recipe has no steps"),
            RecipeViolation::TooManyOps { count, max } => {
                write!(f, "{count} steps exceed the tier maximum of {max}")
            }
            RecipeViolation::DuplicateKind(k) => write!(f, "op `{k}` appears more than once"),
            RecipeViolation::ConflictingKinds(a, b) => {
                write!(f, "ops `{a}` and `{b}` are mutually exclusive")
            }
            RecipeViolation::SeverityRestricted(k) => {
                write!(f, "op `{k}` is only allowed at severity tier 3")
            }
            RecipeViolation::NotCanonicalOrder { position } => {
                write!(f, "step {position} breaks the canonical composition order")
            }
            RecipeViolation::OutOfBand {
                kind,
                param,
                value,
                lo,
                hi,
            } => write!(
                f,
                "`{kind}` {param} = {value} outside the tier band [{lo}, {hi}]"
            ),
        }
    }
}

/// Re-check every constraint the sampler honors. An empty result means the
/// recipe is admissible for its severity under `config`.
pub fn validate_recipe(recipe: &VariantRecipe, config: &SeverityConfig) -> Vec<RecipeViolation> {
    let mut violations = Vec::new();
    let severity = recipe.severity;
    let max = config.max_ops.get(severity);

    if recipe.steps.is_empty() {
        violations.push(RecipeViolation::EmptyRecipe);
    }
    if recipe.steps.len() > max as usize {
        violations.push(RecipeViolation::TooManyOps {
            count: recipe.steps.len(),
            max,
        });
    }

    let kinds: Vec<OpKind> = recipe.steps.iter().map(|s| s.kind()).collect();
    for (i, &a) in kinds.iter().enumerate() {
        if kinds[i + 1..].contains(&a) {
            violations.push(RecipeViolation::DuplicateKind(a));
        }
        for &b in &kinds[i + 1..] {
            if conflicts(a, b) {
                violations.push(RecipeViolation::ConflictingKinds(a, b));
            }
        }
        if a.severity3_only() && severity != SeverityLevel::Severe {
            violations.push(RecipeViolation::SeverityRestricted(a));
        }
    }

    for (i, w) in recipe.steps.windows(2).enumerate() {
        if w[0].kind().stage() > w[1].kind().stage() {
            violations.push(RecipeViolation::NotCanonicalOrder { position: i + 1 });
        }
    }

    for step in &recipe.steps {
        check_step_bands(step, severity, config, &mut violations);
    }
    violations
}

fn check_step_bands(
    step: &OpStep,
    severity: SeverityLevel,
    config: &SeverityConfig,
    out: &mut Vec<RecipeViolation>,
) {
    let mut check = |kind: OpKind, param: &'static str, value: f64, band: [f64; 2]| {
        if !(value >= band[0] && value <= band[1]) {
            out.push(RecipeViolation::OutOfBand {
                kind,
                param,
                value,
                lo: band[0],
                hi: band[1],
            });
        }
    };
    match *step {
        OpStep::Exposure { ev } => check(OpKind::Exposure, "ev", ev, config.exposure_ev.get(severity)),
        OpStep::Shadow {
            strength,
            angle_deg,
            sharpness,
        } => {
            check(
                OpKind::Shadow,
                "strength",
                strength,
                config.shadow_strength.get(severity),
            );
            check(OpKind::Shadow, "angle_deg", angle_deg, [0.0, 360.0 - f64::EPSILON]);
            check(
                OpKind::Shadow,
                "sharpness",
                sharpness,
                config.shadow_sharpness.get(severity),
            );
        }
        OpStep::Warm { tint } => check(OpKind::Warm, "tint", tint, config.color_temp_tint.get(severity)),
        OpStep::Cool { tint } => check(OpKind::Cool, "tint", tint, config.color_temp_tint.get(severity)),
        OpStep::Vignette {
            strength,
            center_x,
            center_y,
            ..
        } => {
            check(
                OpKind::Vignette,
                "strength",
                strength,
                config.vignette_strength.get(severity),
            );
            let c = crate::lightops::limits::VIGNETTE_CENTER;
            check(OpKind::Vignette, "center_x", center_x, [c.0, c.1]);
            check(OpKind::Vignette, "center_y", center_y, [c.0, c.1]);
        }
        OpStep::Contrast { factor } => check(
            OpKind::Contrast,
            "factor",
            factor,
            config.contrast_factor.get(severity),
        ),
        OpStep::Gamma { gamma } => check(OpKind::Gamma, "gamma", gamma, config.gamma.get(severity)),
        OpStep::Brightness { percent } => check(
            OpKind::Brightness,
            "percent",
            percent,
            config.brightness_percent.get(severity),
        ),
        OpStep::Grain { intensity, .. } => check(
            OpKind::Grain,
            "intensity",
            intensity,
            config.grain_intensity.get(severity),
        ),
        OpStep::Haze { alpha, .. } => {
            check(OpKind::Haze, "alpha", alpha, config.haze_alpha.get(severity))
        }
        OpStep::ColorCast { hue_deg, strength } => {
            check(OpKind::ColorCast, "hue_deg", hue_deg, [0.0, 360.0 - f64::EPSILON]);
            check(
                OpKind::ColorCast,
                "strength",
                strength,
                config.color_cast_strength.tier3,
            );
        }
        OpStep::Flare {
            center_x,
            center_y,
            sigma,
            amplitude,
        } => {
            let edge = center_x
                .min(1.0 - center_x)
                .min(center_y)
                .min(1.0 - center_y);
            check(
                OpKind::Flare,
                "edge distance",
                edge,
                [0.0, crate::lightops::limits::FLARE_EDGE_DISTANCE],
            );
            check(OpKind::Flare, "sigma", sigma, config.flare_sigma.tier3);
            check(
                OpKind::Flare,
                "amplitude",
                amplitude,
                config.flare_amplitude.tier3,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> SeverityConfig {
        SeverityConfig::default()
    }

    #[test]
    fn recipes_are_deterministic() {
        let c = config();
        let a = sample_recipe(7, "frame_012", SeverityLevel::Moderate, &c);
        let b = sample_recipe(7, "frame_012", SeverityLevel::Moderate, &c);
        assert_eq!(a, b);
        let other = sample_recipe(7, "frame_013", SeverityLevel::Moderate, &c);
        assert_ne!(a, other);
        let reseeded = sample_recipe(8, "frame_012", SeverityLevel::Moderate, &c);
        assert_ne!(a, reseeded);
    }

    #[test]
    fn variant_indices_decorrelate() {
        let c = config();
        let a = sample_recipe_indexed(7, "x", 0, SeverityLevel::Severe, &c);
        let b = sample_recipe_indexed(7, "x", 1, SeverityLevel::Severe, &c);
        assert_ne!(a, b);
    }

    #[test]
    fn mild_tier_stacks_exactly_one_op() {
        let c = config();
        for i in 0..200 {
            let r = sample_recipe(3, &format!("img{i}"), SeverityLevel::Mild, &c);
            assert_eq!(r.steps.len(), 1);
        }
    }

    #[test]
    fn sampled_recipes_always_validate_clean() {
        let c = config();
        for level in SeverityLevel::ALL {
            for i in 0..2_000 {
                let r = sample_recipe(11, &format!("img{i}"), level, &c);
                let v = validate_recipe(&r, &c);
                assert!(v.is_empty(), "tier {level}: {v:?}\nrecipe {r:?}");
            }
        }
    }

    #[test]
    fn conflicting_kinds_never_cooccur() {
        let c = config();
        for i in 0..5_000 {
            let r = sample_recipe(5, &format!("img{i}"), SeverityLevel::Severe, &c);
            let kinds: Vec<OpKind> = r.steps.iter().map(|s| s.kind()).collect();
            for (j, &a) in kinds.iter().enumerate() {
                for &b in &kinds[j + 1..] {
                    assert!(!conflicts(a, b), "{a} with {b} in {kinds:?}");
                }
            }
        }
    }

    #[test]
    fn severe_only_ops_stay_out_of_lower_tiers() {
        let c = config();
        for level in [SeverityLevel::Mild, SeverityLevel::Moderate] {
            for i in 0..3_000 {
                let r = sample_recipe(13, &format!("img{i}"), level, &c);
                assert!(
                    r.steps.iter().all(|s| !s.kind().severity3_only()),
                    "tier {level}: {r:?}"
                );
            }
        }
    }

    #[test]
    fn severe_tier_op_count_is_uniform() {
        // Chi-squared against uniform over {1, 2, 3}; 9.21 is the 1%
        // critical value at two degrees of freedom.
        let c = config();
        let n = 100_000;
        let mut counts = [0u32; 3];
        for i in 0..n {
            let r = sample_recipe(2, &format!("img{i}"), SeverityLevel::Severe, &c);
            counts[r.steps.len() - 1] += 1;
        }
        let expected = n as f64 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 9.21, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn canonical_order_examples() {
        let mut steps = vec![
            OpStep::Grain {
                intensity: 0.02,
                noise_seed: 1,
            },
            OpStep::Haze {
                alpha: 0.2,
                color: HAZE_COLOR_DEFAULT,
            },
        ];
        sort_canonical(&mut steps);
        assert_eq!(steps[0].kind(), OpKind::Haze);
        assert_eq!(steps[1].kind(), OpKind::Grain);

        let mut steps = vec![
            OpStep::Gamma { gamma: 1.1 },
            OpStep::Shadow {
                strength: 0.3,
                angle_deg: 10.0,
                sharpness: 3.0,
            },
            OpStep::Warm { tint: 0.05 },
        ];
        sort_canonical(&mut steps);
        let kinds: Vec<OpKind> = steps.iter().map(|s| s.kind()).collect();
        assert_eq!(kinds, vec![OpKind::Shadow, OpKind::Warm, OpKind::Gamma]);
        assert!(is_canonical(&steps));
    }

    #[test]
    fn validator_flags_conflicts() {
        let r = VariantRecipe {
            image_id: "x".into(),
            severity: SeverityLevel::Moderate,
            seed: 0,
            steps: vec![
                OpStep::Haze {
                    alpha: 0.2,
                    color: HAZE_COLOR_DEFAULT,
                },
                OpStep::Contrast { factor: 1.1 },
            ],
        };
        let v = validate_recipe(&r, &config());
        assert!(
            v.contains(&RecipeViolation::ConflictingKinds(
                OpKind::Haze,
                OpKind::Contrast
            )),
            "{v:?}"
        );
    }

    #[test]
    fn validator_flags_out_of_band_parameters() {
        let r = VariantRecipe {
            image_id: "x".into(),
            severity: SeverityLevel::Mild,
            seed: 0,
            steps: vec![OpStep::Exposure { ev: 0.5 }],
        };
        let v = validate_recipe(&r, &config());
        assert_eq!(v.len(), 1);
        assert!(
            matches!(v[0], RecipeViolation::OutOfBand { kind: OpKind::Exposure, param: "ev", .. }),
            "{v:?}"
        );
    }

    #[test]
    fn validator_flags_order_duplicates_and_restrictions() {
        let r = VariantRecipe {
            image_id: "x".into(),
            severity: SeverityLevel::Moderate,
            seed: 0,
            steps: vec![
                OpStep::Gamma { gamma: 1.1 },
                OpStep::Shadow {
                    strength: 0.4,
                    angle_deg: 0.0,
                    sharpness: 5.0,
                },
                OpStep::Gamma { gamma: 1.2 },
            ],
        };
        let v = validate_recipe(&r, &config());
        assert!(v.iter().any(|x| matches!(x, RecipeViolation::TooManyOps { .. })), "{v:?}");
        assert!(v.iter().any(|x| matches!(x, RecipeViolation::DuplicateKind(OpKind::Gamma))));
        assert!(v.iter().any(|x| matches!(x, RecipeViolation::NotCanonicalOrder { .. })));

        let r = VariantRecipe {
            image_id: "x".into(),
            severity: SeverityLevel::Mild,
            seed: 0,
            steps: vec![OpStep::ColorCast {
                hue_deg: 10.0,
                strength: 0.2,
            }],
        };
        let v = validate_recipe(&r, &config());
        assert!(v.contains(&RecipeViolation::SeverityRestricted(OpKind::ColorCast)), "{v:?}");
    }

    #[test]
    fn policies_assign_deterministically() {
        let uniform = SeverityPolicy::Uniform;
        assert_eq!(uniform.assign(1, "a", 0), uniform.assign(1, "a", 0));

        let fixed = SeverityPolicy::Fixed(SeverityLevel::Severe);
        for i in 0..50 {
            assert_eq!(fixed.assign(9, &format!("i{i}"), 0), SeverityLevel::Severe);
        }

        let loaded = SeverityPolicy::Weighted([0.0, 0.0, 2.5]);
        for i in 0..200 {
            assert_eq!(loaded.assign(4, &format!("i{i}"), 0), SeverityLevel::Severe);
        }
        assert!(SeverityPolicy::Weighted([0.0, 0.0, 0.0]).validate().is_err());
        assert!(SeverityPolicy::Weighted([1.0, -0.1, 0.0]).validate().is_err());
    }

    #[test]
    fn uniform_policy_covers_all_tiers() {
        let mut seen = [0u32; 3];
        for i in 0..3_000 {
            let level = SeverityPolicy::Uniform.assign(17, &format!("img{i}"), 0);
            seen[(level.tier() - 1) as usize] += 1;
        }
        for (i, &c) in seen.iter().enumerate() {
            assert!(c > 800, "tier {} count {c} out of 3000", i + 1);
        }
    }

    #[test]
    fn recipes_round_trip_through_json() {
        let c = config();
        let r = sample_recipe(21, "roundtrip", SeverityLevel::Severe, &c);
        let text = serde_json::to_string(&r).unwrap();
        let back: VariantRecipe = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
