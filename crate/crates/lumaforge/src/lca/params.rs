//! Parameter container for the lighting attention module.
//!
//! All weights are flat `Vec<f64>` buffers with documented layouts, which
//! keeps finite-difference sweeps and serialization trivial. The trainable
//! set is exactly the fifteen named tensors in [`TENSOR_NAMES`]; the 3×3
//! Laplacian is a fixed buffer and deliberately has no entry there.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::standard_normal_at;

/// The fixed edge-detection kernel, row-major 3×3.
pub const LAPLACIAN: [f64; 9] = [0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0];

/// Numerical guard for the per-sample min–max normalization and group norm.
pub const EPSILON: f64 = 1e-6;

/// Module hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcaConfig {
    /// Feature channels C of the wrapped block.
    pub channels: usize,
    /// Channel-MLP reduction ratio r (hidden width = C / r).
    pub reduction: usize,
    /// GroupNorm group count; must divide `channels`.
    pub groups: usize,
}

impl LcaConfig {
    pub fn new(channels: usize, reduction: usize, groups: usize) -> Result<Self> {
        let cfg = LcaConfig {
            channels,
            reduction,
            groups,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The configuration the parameter-count claims are made at:
    /// C = 768 (ViT-B width), r = 2, 32 norm groups.
    pub fn full_scale() -> Self {
        LcaConfig {
            channels: 768,
            reduction: 2,
            groups: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.reduction == 0 || self.groups == 0 {
            return Err(Error::Config("channels, reduction and groups must be positive".into()));
        }
        if self.channels % self.reduction != 0 {
            return Err(Error::Config(format!(
                "reduction {} must divide channel count {}",
                self.reduction, self.channels
            )));
        }
        if self.channels % self.groups != 0 {
            return Err(Error::Config(format!(
                "group count {} must divide channel count {}",
                self.groups, self.channels
            )));
        }
        Ok(())
    }

    pub fn hidden(&self) -> usize {
        self.channels / self.reduction
    }
}

/// Names of every trainable tensor, in a fixed order used by gradient
/// checks and serialization.
pub const TENSOR_NAMES: [&str; 15] = [
    "mlp_w1", "mlp_b1", "mlp_w2", "mlp_b2", "spatial_w", "gray_w", "gray_b", "refine_w",
    "refine_b", "dw_w", "dw_b", "gn_scale", "gn_shift", "pw_w", "gamma",
];

/// All weights of one module instance.
///
/// Layouts (row-major):
/// * `mlp_w1`: `[hidden × C]`, `mlp_w2`: `[C × hidden]`; biases per row.
/// * `spatial_w`: `[2 × 7 × 7]` (mean map then max map), single output, no bias.
/// * `gray_w`: `[C]` plus scalar `gray_b` — a 1×1 projection to one channel.
/// * `refine_w`: `[3 × 3]` plus scalar `refine_b`.
/// * `dw_w`: `[C × 3 × 3]` depthwise kernels, `dw_b`: `[C]`.
/// * `gn_scale`/`gn_shift`: `[C]`.
/// * `pw_w`: `[C × C]` (output-channel major), no bias, zero at construction.
/// * `gamma`: one scalar, −1.0 at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LcaParams {
    pub config: LcaConfig,
    pub mlp_w1: Vec<f64>,
    pub mlp_b1: Vec<f64>,
    pub mlp_w2: Vec<f64>,
    pub mlp_b2: Vec<f64>,
    pub spatial_w: Vec<f64>,
    pub gray_w: Vec<f64>,
    pub gray_b: Vec<f64>,
    pub refine_w: Vec<f64>,
    pub refine_b: Vec<f64>,
    pub dw_w: Vec<f64>,
    pub dw_b: Vec<f64>,
    pub gn_scale: Vec<f64>,
    pub gn_shift: Vec<f64>,
    pub pw_w: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: f64,
}

fn randn_vec(len: usize, key: u64, std: f64) -> Vec<f64> {
    (0..len).map(|i| std * standard_normal_at(key, i as u64)).collect()
}

impl LcaParams {
    /// Training-start parameters: small random weights everywhere except the
    /// pointwise projection (all zeros) and the gate scalar (−1.0), the two
    /// initializations the module's do-no-harm guarantee rests on.
    pub fn fresh(config: LcaConfig, key: u64) -> Result<Self> {
        config.validate()?;
        let c = config.channels;
        let hidden = config.hidden();
        let std_in = |fan_in: usize| (2.0 / fan_in as f64).sqrt();
        Ok(LcaParams {
            config,
            mlp_w1: randn_vec(hidden * c, key ^ 0x11, std_in(c)),
            mlp_b1: vec![0.0; hidden],
            mlp_w2: randn_vec(c * hidden, key ^ 0x12, std_in(hidden)),
            mlp_b2: vec![0.0; c],
            spatial_w: randn_vec(2 * 49, key ^ 0x13, std_in(2 * 49)),
            gray_w: randn_vec(c, key ^ 0x14, std_in(c)),
            gray_b: vec![0.0],
            refine_w: randn_vec(9, key ^ 0x15, std_in(9)),
            refine_b: vec![0.0],
            dw_w: randn_vec(c * 9, key ^ 0x16, std_in(9)),
            dw_b: vec![0.0; c],
            gn_scale: vec![1.0; c],
            gn_shift: vec![0.0; c],
            pw_w: vec![0.0; c * c],
            gamma: vec![-1.0],
            epsilon: EPSILON,
        })
    }

    /// Fully randomized parameters (pointwise projection included) so that
    /// gradients flow through every layer; used by the gradient checks.
    pub fn randomized(config: LcaConfig, key: u64) -> Result<Self> {
        let mut p = LcaParams::fresh(config, key)?;
        let c = config.channels;
        p.mlp_b1 = randn_vec(p.mlp_b1.len(), key ^ 0x21, 0.2);
        p.mlp_b2 = randn_vec(p.mlp_b2.len(), key ^ 0x22, 0.2);
        p.gray_b = randn_vec(1, key ^ 0x23, 0.2);
        p.refine_b = randn_vec(1, key ^ 0x24, 0.2);
        p.dw_b = randn_vec(c, key ^ 0x25, 0.2);
        p.gn_scale = randn_vec(c, key ^ 0x26, 0.2)
            .into_iter()
            .map(|v| 1.0 + v)
            .collect();
        p.gn_shift = randn_vec(c, key ^ 0x27, 0.2);
        p.pw_w = randn_vec(c * c, key ^ 0x28, (1.0 / c as f64).sqrt());
        p.gamma = vec![-1.0 + 0.3 * standard_normal_at(key ^ 0x29, 0)];
        Ok(p)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma[0]
    }

    /// Expected length of each named tensor under `config`.
    fn expected_len(config: &LcaConfig, name: &str) -> usize {
        let c = config.channels;
        let hidden = config.hidden();
        match name {
            "mlp_w1" => hidden * c,
            "mlp_b1" => hidden,
            "mlp_w2" => c * hidden,
            "mlp_b2" => c,
            "spatial_w" => 2 * 49,
            "gray_w" => c,
            "gray_b" => 1,
            "refine_w" => 9,
            "refine_b" => 1,
            "dw_w" => c * 9,
            "dw_b" => c,
            "gn_scale" => c,
            "gn_shift" => c,
            "pw_w" => c * c,
            "gamma" => 1,
            other => unreachable!("unknown tensor name {other}"),
        }
    }

    pub fn tensor(&self, name: &str) -> &[f64] {
        match name {
            "mlp_w1" => &self.mlp_w1,
            "mlp_b1" => &self.mlp_b1,
            "mlp_w2" => &self.mlp_w2,
            "mlp_b2" => &self.mlp_b2,
            "spatial_w" => &self.spatial_w,
            "gray_w" => &self.gray_w,
            "gray_b" => &self.gray_b,
            "refine_w" => &self.refine_w,
            "refine_b" => &self.refine_b,
            "dw_w" => &self.dw_w,
            "dw_b" => &self.dw_b,
            "gn_scale" => &self.gn_scale,
            "gn_shift" => &self.gn_shift,
            "pw_w" => &self.pw_w,
            "gamma" => &self.gamma,
            other => panic!("unknown tensor name {other}"),
        }
    }

    pub fn tensor_mut(&mut self, name: &str) -> &mut [f64] {
        match name {
            "mlp_w1" => &mut self.mlp_w1,
            "mlp_b1" => &mut self.mlp_b1,
            "mlp_w2" => &mut self.mlp_w2,
            "mlp_b2" => &mut self.mlp_b2,
            "spatial_w" => &mut self.spatial_w,
            "gray_w" => &mut self.gray_w,
            "gray_b" => &mut self.gray_b,
            "refine_w" => &mut self.refine_w,
            "refine_b" => &mut self.refine_b,
            "dw_w" => &mut self.dw_w,
            "dw_b" => &mut self.dw_b,
            "gn_scale" => &mut self.gn_scale,
            "gn_shift" => &mut self.gn_shift,
            "pw_w" => &mut self.pw_w,
            "gamma" => &mut self.gamma,
            other => panic!("unknown tensor name {other}"),
        }
    }
}

/// Per-tensor gradient accumulator with the same names and layouts as
/// [`LcaParams`]. The fixed Laplacian has no slot here by construction.
#[derive(Debug, Clone)]
pub struct LcaGrads {
    by_name: BTreeMap<&'static str, Vec<f64>>,
}

impl LcaGrads {
    pub fn zeros_like(params: &LcaParams) -> Self {
        let by_name = TENSOR_NAMES
            .iter()
            .map(|&name| (name, vec![0.0; params.tensor(name).len()]))
            .collect();
        LcaGrads { by_name }
    }

    pub fn tensor(&self, name: &str) -> &[f64] {
        self.by_name
            .get(name)
            .unwrap_or_else(|| panic!("unknown gradient tensor {name}"))
    }

    pub fn tensor_mut(&mut self, name: &str) -> &mut [f64] {
        self.by_name
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown gradient tensor {name}"))
    }

    pub fn add_scaled(&mut self, name: &str, values: &[f64], scale: f64) {
        let g = self.tensor_mut(name);
        assert_eq!(g.len(), values.len(), "gradient length mismatch for {name}");
        for (gi, &v) in g.iter_mut().zip(values) {
            *gi += scale * v;
        }
    }
}

/// Per-layer parameter counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamBreakdown {
    pub per_layer: Vec<(String, usize)>,
    pub total: usize,
}

/// Exact parameter counts per sub-layer for one module instance. With
/// `trainable_only` the fixed Laplacian buffer is excluded (its nine entries
/// are constants, not parameters to learn).
pub fn param_count(config: &LcaConfig, trainable_only: bool) -> ParamBreakdown {
    let c = config.channels;
    let hidden = config.hidden();
    let mut per_layer = vec![
        ("channel_mlp".to_string(), hidden * c + hidden + c * hidden + c),
        ("spatial_conv".to_string(), 2 * 49),
        ("gray_proj".to_string(), c + 1),
        ("refine_conv".to_string(), 9 + 1),
        ("dw_conv".to_string(), c * 9 + c),
        ("group_norm".to_string(), 2 * c),
        ("pw_conv".to_string(), c * c),
        ("gate_scalar".to_string(), 1),
    ];
    if !trainable_only {
        per_layer.insert(3, ("laplacian (fixed)".to_string(), 9));
    }
    let total = per_layer.iter().map(|(_, n)| n).sum();
    ParamBreakdown { per_layer, total }
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorDump {
    len: usize,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    schema_version: u32,
    config: LcaConfig,
    epsilon: f64,
    /// Trainable tensors only; the Laplacian is a fixed constant and is
    /// reconstructed, never serialized.
    tensors: BTreeMap<String, TensorDump>,
}

const WEIGHTS_SCHEMA_VERSION: u32 = 1;

/// Serialize all trainable tensors as JSON (exact f64 round trip).
pub fn export_weights(params: &LcaParams) -> Result<String> {
    let tensors = TENSOR_NAMES
        .iter()
        .map(|&name| {
            let data = params.tensor(name).to_vec();
            (
                name.to_string(),
                TensorDump {
                    len: data.len(),
                    data,
                },
            )
        })
        .collect();
    let file = WeightsFile {
        schema_version: WEIGHTS_SCHEMA_VERSION,
        config: params.config,
        epsilon: params.epsilon,
        tensors,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Inverse of [`export_weights`] with full shape validation.
pub fn import_weights(text: &str) -> Result<LcaParams> {
    let file: WeightsFile = serde_json::from_str(text)?;
    if file.schema_version != WEIGHTS_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported weights schema version {}",
            file.schema_version
        )));
    }
    file.config.validate()?;
    let mut params = LcaParams::fresh(file.config, 0)?;
    params.epsilon = file.epsilon;
    for &name in &TENSOR_NAMES {
        let dump = file
            .tensors
            .get(name)
            .ok_or_else(|| Error::Config(format!("weights file missing tensor `{name}`")))?;
        let expected = LcaParams::expected_len(&file.config, name);
        if dump.data.len() != expected || dump.len != expected {
            return Err(Error::Config(format!(
                "tensor `{name}` has {} values, config requires {expected}",
                dump.data.len()
            )));
        }
        params.tensor_mut(name).copy_from_slice(&dump.data);
    }
    if file.tensors.len() != TENSOR_NAMES.len() {
        return Err(Error::Config(format!(
            "weights file carries {} tensors, expected the {} trainable ones",
            file.tensors.len(),
            TENSOR_NAMES.len()
        )));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(LcaConfig::new(8, 2, 4).is_ok());
        assert!(LcaConfig::new(8, 3, 4).is_err(), "reduction must divide C");
        assert!(LcaConfig::new(8, 2, 3).is_err(), "groups must divide C");
        assert!(LcaConfig::new(0, 1, 1).is_err());
        LcaConfig::full_scale().validate().unwrap();
    }

    #[test]
    fn fresh_params_start_inert() {
        let p = LcaParams::fresh(LcaConfig::new(8, 2, 4).unwrap(), 3).unwrap();
        assert!(p.pw_w.iter().all(|&v| v == 0.0), "pointwise projection must start at zero");
        assert_eq!(p.gamma(), -1.0);
        assert!(p.gn_scale.iter().all(|&v| v == 1.0));
        assert!(p.gn_shift.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_is_fixed_and_not_trainable() {
        assert_eq!(LAPLACIAN, [0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(
            !TENSOR_NAMES.contains(&"laplacian"),
            "the edge kernel must not appear in the trainable set"
        );
    }

    #[test]
    fn tensor_lengths_match_declared_layouts() {
        let cfg = LcaConfig::new(8, 2, 4).unwrap();
        let p = LcaParams::randomized(cfg, 9).unwrap();
        for &name in &TENSOR_NAMES {
            assert_eq!(
                p.tensor(name).len(),
                LcaParams::expected_len(&cfg, name),
                "length mismatch for {name}"
            );
        }
    }

    #[test]
    fn sublayer_counts_match_published_claims() {
        let counts = param_count(&LcaConfig::full_scale(), true);
        let get = |name: &str| {
            counts
                .per_layer
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .unwrap()
        };
        assert_eq!(get("spatial_conv"), 98);
        assert_eq!(get("refine_conv"), 10);
        assert_eq!(get("gray_proj"), 769);
        assert_eq!(get("dw_conv"), 768 * 10);
        assert_eq!(get("pw_conv"), 768 * 768);

        // Two module instances at C = 768, r = 2.
        let two_modules = 2 * counts.total;
        assert!(
            (2_300_000..=2_500_000).contains(&two_modules),
            "two-module total {two_modules} out of the published ballpark"
        );

        let with_fixed = param_count(&LcaConfig::full_scale(), false);
        assert_eq!(with_fixed.total, counts.total + 9, "only the Laplacian is non-trainable");
    }

    #[test]
    fn weights_round_trip_exactly() {
        let p = LcaParams::randomized(LcaConfig::new(8, 2, 4).unwrap(), 77).unwrap();
        let text = export_weights(&p).unwrap();
        let back = import_weights(&text).unwrap();
        assert_eq!(back, p, "weight export/import must be bit-exact");
    }

    #[test]
    fn import_rejects_wrong_shapes() {
        let p = LcaParams::randomized(LcaConfig::new(8, 2, 4).unwrap(), 77).unwrap();
        let text = export_weights(&p).unwrap();
        let mangled = text.replace("\"channels\": 8", "\"channels\": 16");
        let err = import_weights(&mangled).unwrap_err();
        assert!(err.to_string().contains("mlp_w1"), "{err}");
    }
}
