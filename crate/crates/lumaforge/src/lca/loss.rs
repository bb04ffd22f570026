//! Segmentation and consistency losses over paired prediction streams.
//!
//! Public probability-form entry points (`dice`, `bce`, `seg_loss`) enforce
//! their contracts strictly; the training-path internals work on logits for
//! numerical stability, which is mathematically the same loss (verified in
//! tests to a tight tolerance).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::forward::sigmoid;
use super::tensor::Tensor4;

/// Smoothing constant keeping Dice finite on empty masks.
pub const DICE_SMOOTHING: f64 = 1.0;

/// Blend weights of the loss stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Supervised blend between the clean and variant streams.
    pub lambda_s: f64,
    /// Weight of the cross-stream consistency term.
    pub lambda_c: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_s: 0.5,
            lambda_c: 0.1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda_s) {
            return Err(Error::Param(format!(
                "lambda_s must lie in [0, 1], got {}",
                self.lambda_s
            )));
        }
        if !self.lambda_c.is_finite() || self.lambda_c < 0.0 {
            return Err(Error::Param(format!(
                "lambda_c must be finite and non-negative, got {}",
                self.lambda_c
            )));
        }
        Ok(())
    }
}

fn check_probabilities(p: &Tensor4) -> Result<()> {
    if p.data().iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Param(
            "probabilities must lie strictly inside (0, 1); pass post-sigmoid values".into(),
        ));
    }
    Ok(())
}

fn check_mask(m: &Tensor4) -> Result<()> {
    if m.data().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Param("mask entries must be exactly 0 or 1".into()));
    }
    Ok(())
}

/// Dice similarity `(2·Σpm + s)/(Σp + Σm + s)` over the whole tensor.
pub fn dice(p: &Tensor4, m: &Tensor4) -> Result<f64> {
    m.require_shape(p.shape(), "dice mask")?;
    check_probabilities(p)?;
    check_mask(m)?;
    let s_pm: f64 = p.data().iter().zip(m.data()).map(|(a, b)| a * b).sum();
    let s_p: f64 = p.data().iter().sum();
    let s_m: f64 = m.data().iter().sum();
    Ok((2.0 * s_pm + DICE_SMOOTHING) / (s_p + s_m + DICE_SMOOTHING))
}

/// Mean binary cross-entropy of probabilities against a hard mask.
pub fn bce(p: &Tensor4, m: &Tensor4) -> Result<f64> {
    m.require_shape(p.shape(), "bce mask")?;
    check_probabilities(p)?;
    check_mask(m)?;
    let total: f64 = p
        .data()
        .iter()
        .zip(m.data())
        .map(|(&pi, &mi)| -mi * pi.ln() - (1.0 - mi) * (1.0 - pi).ln())
        .sum();
    Ok(total / p.len() as f64)
}

/// Combined segmentation loss: `BCE(p, m) + 1 − Dice(p, m)`.
pub fn seg_loss(p: &Tensor4, m: &Tensor4) -> Result<f64> {
    Ok(bce(p, m)? + 1.0 - dice(p, m)?)
}

/// Mean L1 distance between the sigmoid activations of two logit tensors.
pub fn consistency_loss(clean_logits: &Tensor4, variant_logits: &Tensor4) -> Result<f64> {
    variant_logits.require_shape(clean_logits.shape(), "consistency")?;
    let total: f64 = clean_logits
        .data()
        .iter()
        .zip(variant_logits.data())
        .map(|(&a, &b)| (sigmoid(a) - sigmoid(b)).abs())
        .sum();
    Ok(total / clean_logits.len() as f64)
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Per-sample segmentation loss on logits, with its gradient. The logit
/// form equals `seg_loss(σ(z), m)` exactly in infinite precision and avoids
/// `ln` of values near 0 and 1 in finite precision.
fn seg_loss_logits(z: &[f64], m: &[f64]) -> (f64, Vec<f64>) {
    let n = z.len() as f64;
    let p: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();

    let bce: f64 = z
        .iter()
        .zip(m)
        .map(|(&zi, &mi)| mi * softplus(-zi) + (1.0 - mi) * softplus(zi))
        .sum::<f64>()
        / n;

    let s_pm: f64 = p.iter().zip(m).map(|(a, b)| a * b).sum();
    let s_p: f64 = p.iter().sum();
    let s_m: f64 = m.iter().sum();
    let denom = s_p + s_m + DICE_SMOOTHING;
    let dice_v = (2.0 * s_pm + DICE_SMOOTHING) / denom;

    let loss = bce + 1.0 - dice_v;

    let mut grad = vec![0.0; z.len()];
    for i in 0..z.len() {
        let d_bce = (p[i] - m[i]) / n;
        // d(1 − Dice)/dp_i, then chain through σ'.
        let d_dice_dp = (2.0 * m[i] * denom - (2.0 * s_pm + DICE_SMOOTHING)) / (denom * denom);
        let d_dice = -d_dice_dp * p[i] * (1.0 - p[i]);
        grad[i] = d_bce + d_dice;
    }
    (loss, grad)
}

/// Per-sample consistency loss on logits with gradients for both streams.
fn consistency_logits(za: &[f64], zb: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let n = za.len() as f64;
    let mut loss = 0.0;
    let mut ga = vec![0.0; za.len()];
    let mut gb = vec![0.0; zb.len()];
    for i in 0..za.len() {
        let pa = sigmoid(za[i]);
        let pb = sigmoid(zb[i]);
        let diff = pa - pb;
        loss += diff.abs();
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        ga[i] = sign * pa * (1.0 - pa) / n;
        gb[i] = -sign * pb * (1.0 - pb) / n;
    }
    (loss / n, ga, gb)
}

/// Instance-level aggregation: `mean_k(sup_k + λ_c · cons_k)`.
pub fn aggregate_instances(sup: &[f64], cons: &[f64], lambda_c: f64) -> Result<f64> {
    if sup.is_empty() {
        return Err(Error::Param("at least one instance is required".into()));
    }
    if sup.len() != cons.len() {
        return Err(Error::Param(format!(
            "{} supervised terms vs {} consistency terms",
            sup.len(),
            cons.len()
        )));
    }
    let total: f64 = sup.iter().zip(cons).map(|(s, c)| s + lambda_c * c).sum();
    Ok(total / sup.len() as f64)
}

fn check_total_inputs(
    clean_logits: &Tensor4,
    variant_logits: &Tensor4,
    masks: &Tensor4,
    weights: &LossWeights,
) -> Result<()> {
    weights.validate()?;
    variant_logits.require_shape(clean_logits.shape(), "variant stream")?;
    masks.require_shape(clean_logits.shape(), "masks")?;
    check_mask(masks)
}

/// Full training loss over a batch of K instances (the batch dimension):
/// per instance, a λ_s-blend of clean- and variant-stream segmentation
/// losses plus λ_c times the consistency term, averaged over instances.
pub fn total_loss(
    clean_logits: &Tensor4,
    variant_logits: &Tensor4,
    masks: &Tensor4,
    weights: &LossWeights,
) -> Result<f64> {
    check_total_inputs(clean_logits, variant_logits, masks, weights)?;
    let k = clean_logits.b();
    let per = clean_logits.len() / k;
    let mut sup = Vec::with_capacity(k);
    let mut cons = Vec::with_capacity(k);
    for i in 0..k {
        let zc = &clean_logits.data()[i * per..(i + 1) * per];
        let zv = &variant_logits.data()[i * per..(i + 1) * per];
        let m = &masks.data()[i * per..(i + 1) * per];
        let (seg_c, _) = seg_loss_logits(zc, m);
        let (seg_v, _) = seg_loss_logits(zv, m);
        sup.push(weights.lambda_s * seg_c + (1.0 - weights.lambda_s) * seg_v);
        let (cv, _, _) = consistency_logits(zc, zv);
        cons.push(cv);
    }
    aggregate_instances(&sup, &cons, weights.lambda_c)
}

/// [`total_loss`] plus gradients w.r.t. both logit tensors.
pub(crate) fn total_loss_backward(
    clean_logits: &Tensor4,
    variant_logits: &Tensor4,
    masks: &Tensor4,
    weights: &LossWeights,
) -> Result<(f64, Tensor4, Tensor4)> {
    check_total_inputs(clean_logits, variant_logits, masks, weights)?;
    let k = clean_logits.b();
    let per = clean_logits.len() / k;
    let kf = k as f64;
    let mut d_zc = Tensor4::zeros(clean_logits.shape());
    let mut d_zv = Tensor4::zeros(variant_logits.shape());
    let mut total = 0.0;
    for i in 0..k {
        let zc = &clean_logits.data()[i * per..(i + 1) * per];
        let zv = &variant_logits.data()[i * per..(i + 1) * per];
        let m = &masks.data()[i * per..(i + 1) * per];
        let (seg_c, g_c) = seg_loss_logits(zc, m);
        let (seg_v, g_v) = seg_loss_logits(zv, m);
        let (cons, ca, cb) = consistency_logits(zc, zv);
        total += weights.lambda_s * seg_c
            + (1.0 - weights.lambda_s) * seg_v
            + weights.lambda_c * cons;
        for j in 0..per {
            d_zc.data_mut()[i * per + j] =
                (weights.lambda_s * g_c[j] + weights.lambda_c * ca[j]) / kf;
            d_zv.data_mut()[i * per + j] =
                ((1.0 - weights.lambda_s) * g_v[j] + weights.lambda_c * cb[j]) / kf;
        }
    }
    Ok((total / kf, d_zc, d_zv))
}
