//! Severity tiers and the per-tier parameter table.
//!
//! Every generated variant belongs to one of three severity tiers. A tier
//! bounds two things: how many operations may stack (1/2/3) and the interval
//! each operation's driving parameter is drawn from. The built-in table is
//! the calibrated default; deployments can override it with a TOML file that
//! follows the same layout (see [`SeverityConfig::to_toml_string`] for a
//! dump of the schema).
//!
//! Two shapes of row exist. *Magnitude* rows (tint, vignette, shadow, grain,
//! sharpness, haze) grow strictly: the tier-2 band starts at or above where
//! tier 1 ends. *Signed* rows (EV, brightness, contrast, gamma) are centered
//! on the identity value and nest: each tier widens the previous one.
//! [`SeverityConfig::validate`] enforces the appropriate property per row so
//! a hand-edited table cannot silently invert the meaning of "severe".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lightops::limits;

/// The three degradation tiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SeverityLevel {
    Mild,
    Moderate,
    Severe,
}

impl SeverityLevel {
    pub const ALL: [SeverityLevel; 3] = [
        SeverityLevel::Mild,
        SeverityLevel::Moderate,
        SeverityLevel::Severe,
    ];

    pub fn tier(self) -> u8 {
        match self {
            SeverityLevel::Mild => 1,
            SeverityLevel::Moderate => 2,
            SeverityLevel::Severe => 3,
        }
    }

    pub fn from_tier(tier: u8) -> Result<Self> {
        match tier {
            1 => Ok(SeverityLevel::Mild),
            2 => Ok(SeverityLevel::Moderate),
            3 => Ok(SeverityLevel::Severe),
            other => Err(Error::Param(format!(
                "severity tier must be 1, 2 or 3, got {other}"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SeverityLevel::Mild => "mild",
            SeverityLevel::Moderate => "moderate",
            SeverityLevel::Severe => "severe",
        }
    }
}

impl TryFrom<u8> for SeverityLevel {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        SeverityLevel::from_tier(v).map_err(|e| e.to_string())
    }
}

impl From<SeverityLevel> for u8 {
    fn from(s: SeverityLevel) -> u8 {
        s.tier()
    }
}

impl std::fmt::Display for SeverityLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.tier(), self.name())
    }
}

/// A closed sampling interval `[lo, hi]` per tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub tier1: [f64; 2],
    pub tier2: [f64; 2],
    pub tier3: [f64; 2],
}

impl Band {
    pub fn get(&self, level: SeverityLevel) -> [f64; 2] {
        match level {
            SeverityLevel::Mild => self.tier1,
            SeverityLevel::Moderate => self.tier2,
            SeverityLevel::Severe => self.tier3,
        }
    }

    pub fn contains(&self, level: SeverityLevel, value: f64) -> bool {
        let [lo, hi] = self.get(level);
        value >= lo && value <= hi
    }
}

/// Sampling interval for operations restricted to the severe tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SevereBand {
    pub tier3: [f64; 2],
}

/// Operation-stack ceiling per tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierCounts {
    pub tier1: u32,
    pub tier2: u32,
    pub tier3: u32,
}

impl TierCounts {
    pub fn get(&self, level: SeverityLevel) -> u32 {
        match level {
            SeverityLevel::Mild => self.tier1,
            SeverityLevel::Moderate => self.tier2,
            SeverityLevel::Severe => self.tier3,
        }
    }
}

/// The full per-tier parameter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeverityConfig {
    pub schema_version: u32,
    pub max_ops: TierCounts,
    pub exposure_ev: Band,
    pub brightness_percent: Band,
    pub contrast_factor: Band,
    pub gamma: Band,
    pub color_temp_tint: Band,
    pub vignette_strength: Band,
    pub shadow_strength: Band,
    pub shadow_sharpness: Band,
    pub grain_intensity: Band,
    pub haze_alpha: Band,
    pub color_cast_strength: SevereBand,
    pub flare_sigma: SevereBand,
    pub flare_amplitude: SevereBand,
}

pub const SEVERITY_CONFIG_SCHEMA_VERSION: u32 = 1;

impl Default for SeverityConfig {
    /// The built-in severity table.
    fn default() -> Self {
        SeverityConfig {
            schema_version: SEVERITY_CONFIG_SCHEMA_VERSION,
            max_ops: TierCounts {
                tier1: 1,
                tier2: 2,
                tier3: 3,
            },
            exposure_ev: Band {
                tier1: [-0.3, 0.3],
                tier2: [-0.8, 0.8],
                tier3: [-1.5, 1.5],
            },
            brightness_percent: Band {
                tier1: [-15.0, 15.0],
                tier2: [-30.0, 30.0],
                tier3: [-45.0, 45.0],
            },
            contrast_factor: Band {
                tier1: [0.9, 1.1],
                tier2: [0.75, 1.25],
                tier3: [0.6, 1.4],
            },
            gamma: Band {
                tier1: [0.85, 1.15],
                tier2: [0.7, 1.3],
                tier3: [0.55, 1.5],
            },
            color_temp_tint: Band {
                tier1: [0.03, 0.07],
                tier2: [0.08, 0.14],
                tier3: [0.15, 0.25],
            },
            vignette_strength: Band {
                tier1: [0.1, 0.2],
                tier2: [0.2, 0.4],
                tier3: [0.4, 0.65],
            },
            shadow_strength: Band {
                tier1: [0.2, 0.35],
                tier2: [0.35, 0.55],
                tier3: [0.55, 0.75],
            },
            shadow_sharpness: Band {
                tier1: [2.0, 4.0],
                tier2: [4.0, 8.0],
                tier3: [8.0, 16.0],
            },
            grain_intensity: Band {
                tier1: [0.01, 0.02],
                tier2: [0.02, 0.04],
                tier3: [0.04, 0.07],
            },
            haze_alpha: Band {
                tier1: [0.05, 0.15],
                tier2: [0.15, 0.30],
                tier3: [0.30, 0.50],
            },
            color_cast_strength: SevereBand {
                tier3: [0.15, 0.25],
            },
            flare_sigma: SevereBand { tier3: [0.08, 0.2] },
            flare_amplitude: SevereBand { tier3: [0.5, 1.0] },
        }
    }
}

/// Shape of a table row, deciding which cross-tier property is enforced.
enum RowShape {
    /// Strictly growing magnitude: tier N's band must end at or before
    /// tier N+1's begins.
    Magnitude,
    /// Symmetric around an identity value: each tier must contain the
    /// previous tier's interval.
    Nested,
}

impl SeverityConfig {
    /// Check internal consistency and compatibility with the hard op limits.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SEVERITY_CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SEVERITY_CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        for level in SeverityLevel::ALL {
            let n = self.max_ops.get(level);
            if !(1..=3).contains(&n) {
                return Err(Error::Config(format!(
                    "max_ops.{} = {n} outside 1..=3",
                    toml_key(level)
                )));
            }
        }
        if !(self.max_ops.tier1 <= self.max_ops.tier2 && self.max_ops.tier2 <= self.max_ops.tier3)
        {
            return Err(Error::Config("max_ops must be non-decreasing across tiers".into()));
        }

        let no_limit = (f64::NEG_INFINITY, f64::INFINITY);
        let rows: [(&str, &Band, RowShape, (f64, f64)); 10] = [
            ("exposure_ev", &self.exposure_ev, RowShape::Nested, no_limit),
            (
                "brightness_percent",
                &self.brightness_percent,
                RowShape::Nested,
                limits::BRIGHTNESS_PERCENT,
            ),
            (
                "contrast_factor",
                &self.contrast_factor,
                RowShape::Nested,
                limits::CONTRAST_FACTOR,
            ),
            ("gamma", &self.gamma, RowShape::Nested, limits::GAMMA),
            (
                "color_temp_tint",
                &self.color_temp_tint,
                RowShape::Magnitude,
                limits::TINT,
            ),
            (
                "vignette_strength",
                &self.vignette_strength,
                RowShape::Magnitude,
                limits::VIGNETTE_STRENGTH,
            ),
            (
                "shadow_strength",
                &self.shadow_strength,
                RowShape::Magnitude,
                limits::SHADOW_STRENGTH,
            ),
            (
                "shadow_sharpness",
                &self.shadow_sharpness,
                RowShape::Magnitude,
                (f64::MIN_POSITIVE, 64.0),
            ),
            (
                "grain_intensity",
                &self.grain_intensity,
                RowShape::Magnitude,
                limits::GRAIN_INTENSITY,
            ),
            ("haze_alpha", &self.haze_alpha, RowShape::Magnitude, limits::HAZE_ALPHA),
        ];

        for (name, band, shape, limit) in rows {
            for level in SeverityLevel::ALL {
                check_interval(name, level, band.get(level), limit)?;
            }
            match shape {
                RowShape::Magnitude => {
                    for pair in [
                        (band.tier1, band.tier2, "tier1/tier2"),
                        (band.tier2, band.tier3, "tier2/tier3"),
                    ] {
                        if pair.0[1] > pair.1[0] + 1e-12 {
                            return Err(Error::Config(format!(
                                "{name}: {} bands overlap ({:?} vs {:?}); magnitude rows must grow",
                                pair.2, pair.0, pair.1
                            )));
                        }
                    }
                }
                RowShape::Nested => {
                    for pair in [
                        (band.tier1, band.tier2, "tier2"),
                        (band.tier2, band.tier3, "tier3"),
                    ] {
                        if pair.1[0] > pair.0[0] + 1e-12 || pair.1[1] < pair.0[1] - 1e-12 {
                            return Err(Error::Config(format!(
                                "{name}: {} band {:?} must contain the previous tier's {:?}",
                                pair.2, pair.1, pair.0
                            )));
                        }
                    }
                }
            }
        }

        check_interval(
            "color_cast_strength",
            SeverityLevel::Severe,
            self.color_cast_strength.tier3,
            limits::CAST_STRENGTH,
        )?;
        check_interval(
            "flare_sigma",
            SeverityLevel::Severe,
            self.flare_sigma.tier3,
            (f64::MIN_POSITIVE, 1.0),
        )?;
        check_interval(
            "flare_amplitude",
            SeverityLevel::Severe,
            self.flare_amplitude.tier3,
            limits::FLARE_AMPLITUDE,
        )?;
        Ok(())
    }

    /// Serialize the effective table as a TOML document (the same layout
    /// [`load_severity_config`] reads back).
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Toml(e.to_string()))
    }
}

fn toml_key(level: SeverityLevel) -> &'static str {
    match level {
        SeverityLevel::Mild => "tier1",
        SeverityLevel::Moderate => "tier2",
        SeverityLevel::Severe => "tier3",
    }
}

fn check_interval(
    name: &str,
    level: SeverityLevel,
    band: [f64; 2],
    limit: (f64, f64),
) -> Result<()> {
    let [lo, hi] = band;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::Config(format!(
            "{name}.{}: [{lo}, {hi}] is not a valid interval",
            toml_key(level)
        )));
    }
    if lo < limit.0 || hi > limit.1 {
        return Err(Error::Config(format!(
            "{name}.{}: [{lo}, {hi}] exceeds the hard operation limit [{}, {}]",
            toml_key(level),
            limit.0,
            limit.1
        )));
    }
    Ok(())
}

/// Read and validate a severity table from a TOML file.
pub fn load_severity_config(path: &std::path::Path) -> Result<SeverityConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: SeverityConfig =
        toml::from_str(&text).map_err(|e| Error::Toml(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}
