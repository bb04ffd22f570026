//! Forward pass of the lighting attention module.
//!
//! Three sigmoid gates are computed in parallel from the block input `x` —
//! channel (shared two-layer MLP over average- and max-pooled descriptors),
//! spatial (7×7 convolution over the channelwise mean/max maps), and
//! contrast (1×1 gray projection → fixed Laplacian → per-sample min–max
//! normalization → 3×3 refine). They multiply onto `x` conjunctively, and
//! the result runs through a depthwise-separable projection whose final
//! pointwise convolution starts at zero, making the whole module a no-op at
//! construction.

use crate::error::{Error, Result};

use super::params::{LcaParams, LAPLACIAN};
use super::tensor::Tensor4;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Zero-padded stride-1 convolution preserving H×W.
/// `weights` layout: `[cout][cin][k][k]` row-major.
pub(crate) fn conv2d(
    input: &Tensor4,
    weights: &[f64],
    cout: usize,
    cin: usize,
    k: usize,
    bias: Option<&[f64]>,
) -> Tensor4 {
    let [b, ci, h, w] = input.shape();
    assert_eq!(ci, cin, "conv input channel mismatch");
    assert_eq!(weights.len(), cout * cin * k * k, "conv weight length mismatch");
    let pad = (k / 2) as isize;
    let mut out = Tensor4::zeros([b, cout, h, w]);
    for bi in 0..b {
        for co in 0..cout {
            let bias_v = bias.map_or(0.0, |bs| bs[co]);
            for oy in 0..h {
                for ox in 0..w {
                    let mut acc = bias_v;
                    for c in 0..cin {
                        for ky in 0..k {
                            let iy = oy as isize + ky as isize - pad;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..k {
                                let ix = ox as isize + kx as isize - pad;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                acc += weights[((co * cin + c) * k + ky) * k + kx]
                                    * input.get(bi, c, iy as usize, ix as usize);
                            }
                        }
                    }
                    out.set(bi, co, oy, ox, acc);
                }
            }
        }
    }
    out
}

/// Depthwise 3×3 convolution (one kernel per channel), zero padding.
/// `w` layout: `[C][3][3]`.
pub(crate) fn dw_conv3(input: &Tensor4, w: &[f64], bias: &[f64]) -> Tensor4 {
    let [b, c, h, wd] = input.shape();
    assert_eq!(w.len(), c * 9, "depthwise weight length mismatch");
    assert_eq!(bias.len(), c, "depthwise bias length mismatch");
    let mut out = Tensor4::zeros([b, c, h, wd]);
    for bi in 0..b {
        for ci in 0..c {
            for oy in 0..h {
                for ox in 0..wd {
                    let mut acc = bias[ci];
                    for ky in 0..3usize {
                        let iy = oy as isize + ky as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..3usize {
                            let ix = ox as isize + kx as isize - 1;
                            if ix < 0 || ix >= wd as isize {
                                continue;
                            }
                            acc += w[ci * 9 + ky * 3 + kx] * input.get(bi, ci, iy as usize, ix as usize);
                        }
                    }
                    out.set(bi, ci, oy, ox, acc);
                }
            }
        }
    }
    out
}

/// Apply the fixed 3×3 Laplacian to a single-channel map (zero padding).
pub fn laplacian_filter(g: &Tensor4) -> Result<Tensor4> {
    if g.c() != 1 {
        return Err(Error::Shape(format!(
            "laplacian filter expects a single-channel map, got {} channels",
            g.c()
        )));
    }
    Ok(conv2d(g, &LAPLACIAN, 1, 1, 3, None))
}

pub(crate) struct GnCache {
    pub istd: Vec<f64>,
    /// Standardized activations x̂ before scale/shift.
    pub norm: Tensor4,
}

/// GroupNorm: per (sample, group) standardization, then per-channel affine.
pub(crate) fn group_norm_forward(
    input: &Tensor4,
    scale: &[f64],
    shift: &[f64],
    groups: usize,
    eps: f64,
) -> (Tensor4, GnCache) {
    let [b, c, h, w] = input.shape();
    assert_eq!(c % groups, 0, "group count must divide channels");
    let cg = c / groups;
    let n = (cg * h * w) as f64;
    let mut istd = vec![0.0; b * groups];
    let mut norm = Tensor4::zeros([b, c, h, w]);
    let mut out = Tensor4::zeros([b, c, h, w]);
    for bi in 0..b {
        for g in 0..groups {
            let mut sum = 0.0;
            for ci in g * cg..(g + 1) * cg {
                for y in 0..h {
                    for x in 0..w {
                        sum += input.get(bi, ci, y, x);
                    }
                }
            }
            let mu = sum / n;
            let mut var = 0.0;
            for ci in g * cg..(g + 1) * cg {
                for y in 0..h {
                    for x in 0..w {
                        let d = input.get(bi, ci, y, x) - mu;
                        var += d * d;
                    }
                }
            }
            var /= n;
            let is = 1.0 / (var + eps).sqrt();
            istd[bi * groups + g] = is;
            for ci in g * cg..(g + 1) * cg {
                for y in 0..h {
                    for x in 0..w {
                        let xhat = (input.get(bi, ci, y, x) - mu) * is;
                        norm.set(bi, ci, y, x, xhat);
                        out.set(bi, ci, y, x, scale[ci] * xhat + shift[ci]);
                    }
                }
            }
        }
    }
    (out, GnCache { istd, norm })
}

/// Everything the backward pass needs from one forward evaluation.
///
/// Only what parameter gradients consume is kept; intermediates that would
/// matter solely for input gradients (pooling argmax positions, pre-sigmoid
/// activations) are recomputable and not cached.
pub(crate) struct ForwardCache {
    pub x: Tensor4,
    // Channel gate.
    pub pooled_avg: Vec<f64>, // B×C
    pub pooled_max: Vec<f64>, // B×C
    pub h1_avg: Vec<f64>,     // B×hidden, pre-ReLU
    pub h1_max: Vec<f64>,
    // Spatial gate.
    pub sp_input: Tensor4, // (B,2,H,W): [channel mean; channel max]
    // Contrast gate.
    pub edges: Tensor4,                        // Laplacian response e
    pub minmax: Vec<(usize, usize, f64, f64)>, // per sample: argmin, argmax, min, max
    pub norm_edges: Tensor4,                   // ê
    // Gates and fusion.
    pub g_ch: Tensor4, // (B,C,1,1)
    pub g_sp: Tensor4, // (B,1,H,W)
    pub g_ct: Tensor4, // (B,1,H,W)
    pub fused: Tensor4,
    // Projection.
    pub gn: GnCache,
    pub gn_out: Tensor4,
    pub relu_out: Tensor4,
    pub phi: Tensor4,
}

/// Gate maps returned for inspection alongside Φ(x).
#[derive(Debug, Clone)]
pub struct LcaGates {
    pub channel: Tensor4,
    pub spatial: Tensor4,
    pub contrast: Tensor4,
}

fn check_input(x: &Tensor4, params: &LcaParams) -> Result<()> {
    if x.c() != params.config.channels {
        return Err(Error::Shape(format!(
            "input has {} channels, parameters are built for {}",
            x.c(),
            params.config.channels
        )));
    }
    Ok(())
}

/// Shared two-layer MLP (ReLU between) applied to one `B×C` descriptor
/// batch; returns pre-ReLU hiddens and outputs.
fn mlp_forward(d: &[f64], b: usize, params: &LcaParams) -> (Vec<f64>, Vec<f64>) {
    let c = params.config.channels;
    let hidden = params.config.hidden();
    let mut h1 = vec![0.0; b * hidden];
    let mut out = vec![0.0; b * c];
    for bi in 0..b {
        for j in 0..hidden {
            let mut acc = params.mlp_b1[j];
            for ci in 0..c {
                acc += params.mlp_w1[j * c + ci] * d[bi * c + ci];
            }
            h1[bi * hidden + j] = acc;
        }
        for co in 0..c {
            let mut acc = params.mlp_b2[co];
            for j in 0..hidden {
                acc += params.mlp_w2[co * hidden + j] * h1[bi * hidden + j].max(0.0);
            }
            out[bi * c + co] = acc;
        }
    }
    (h1, out)
}

/// σ(MLP(avgpool(x)) + MLP(maxpool(x))), shape `(B, C, 1, 1)`.
pub fn channel_gate(x: &Tensor4, params: &LcaParams) -> Result<Tensor4> {
    Ok(forward_cached(x, params)?.g_ch)
}

/// σ(Conv7×7([mean_c(x); max_c(x)])), shape `(B, 1, H, W)`.
pub fn spatial_gate(x: &Tensor4, params: &LcaParams) -> Result<Tensor4> {
    Ok(forward_cached(x, params)?.g_sp)
}

/// σ(Conv3×3(minmax(Laplacian(Conv1×1(x))))), shape `(B, 1, H, W)`.
pub fn contrast_gate(x: &Tensor4, params: &LcaParams) -> Result<Tensor4> {
    Ok(forward_cached(x, params)?.g_ct)
}

/// Conjunctive gating: `x ⊙ g_ch ⊙ g_sp ⊙ g_ct` with broadcasting.
pub fn fuse(x: &Tensor4, g_ch: &Tensor4, g_sp: &Tensor4, g_ct: &Tensor4) -> Result<Tensor4> {
    let [b, c, h, w] = x.shape();
    g_ch.require_shape([b, c, 1, 1], "channel gate")?;
    g_sp.require_shape([b, 1, h, w], "spatial gate")?;
    g_ct.require_shape([b, 1, h, w], "contrast gate")?;
    let mut out = Tensor4::zeros([b, c, h, w]);
    for bi in 0..b {
        for ci in 0..c {
            let a = g_ch.get(bi, ci, 0, 0);
            for y in 0..h {
                for x_ in 0..w {
                    let v = x.get(bi, ci, y, x_) * a * g_sp.get(bi, 0, y, x_) * g_ct.get(bi, 0, y, x_);
                    out.set(bi, ci, y, x_, v);
                }
            }
        }
    }
    Ok(out)
}

/// Depthwise-separable projection `PW(ReLU(GN(DW(·))))`. With the pointwise
/// weights at zero this is identically zero for any input.
pub fn project(x_att: &Tensor4, params: &LcaParams) -> Result<Tensor4> {
    check_input(x_att, params)?;
    let dw = dw_conv3(x_att, &params.dw_w, &params.dw_b);
    let (gn_out, _) = group_norm_forward(
        &dw,
        &params.gn_scale,
        &params.gn_shift,
        params.config.groups,
        params.epsilon,
    );
    let relu = gn_out.map(|v| v.max(0.0));
    let c = params.config.channels;
    Ok(conv2d(&relu, &params.pw_w, c, c, 1, None))
}

pub(crate) fn forward_cached(x: &Tensor4, params: &LcaParams) -> Result<ForwardCache> {
    check_input(x, params)?;
    let [b, c, h, w] = x.shape();
    let hw = h * w;

    // --- channel gate ---
    let mut pooled_avg = vec![0.0; b * c];
    let mut pooled_max = vec![0.0; b * c];
    for bi in 0..b {
        for ci in 0..c {
            let mut sum = 0.0;
            let mut best = f64::NEG_INFINITY;
            for y in 0..h {
                for x_ in 0..w {
                    let v = x.get(bi, ci, y, x_);
                    sum += v;
                    if v > best {
                        best = v;
                    }
                }
            }
            pooled_avg[bi * c + ci] = sum / hw as f64;
            pooled_max[bi * c + ci] = best;
        }
    }
    let (h1_avg, out_avg) = mlp_forward(&pooled_avg, b, params);
    let (h1_max, out_max) = mlp_forward(&pooled_max, b, params);
    let ch_pre: Vec<f64> = out_avg.iter().zip(&out_max).map(|(a, m)| a + m).collect();
    let mut g_ch = Tensor4::zeros([b, c, 1, 1]);
    for bi in 0..b {
        for ci in 0..c {
            g_ch.set(bi, ci, 0, 0, sigmoid(ch_pre[bi * c + ci]));
        }
    }

    // --- spatial gate ---
    let mut sp_input = Tensor4::zeros([b, 2, h, w]);
    for bi in 0..b {
        for y in 0..h {
            for x_ in 0..w {
                let mut sum = 0.0;
                let mut best = f64::NEG_INFINITY;
                for ci in 0..c {
                    let v = x.get(bi, ci, y, x_);
                    sum += v;
                    if v > best {
                        best = v;
                    }
                }
                sp_input.set(bi, 0, y, x_, sum / c as f64);
                sp_input.set(bi, 1, y, x_, best);
            }
        }
    }
    let g_sp = conv2d(&sp_input, &params.spatial_w, 1, 2, 7, None).map(sigmoid);

    // --- contrast gate ---
    let gray = conv2d(x, &params.gray_w, 1, c, 1, Some(&params.gray_b));
    let edges = conv2d(&gray, &LAPLACIAN, 1, 1, 3, None);
    let mut minmax = Vec::with_capacity(b);
    let mut norm_edges = Tensor4::zeros([b, 1, h, w]);
    for bi in 0..b {
        let mut min_i = 0usize;
        let mut max_i = 0usize;
        let mut min_v = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        for y in 0..h {
            for x_ in 0..w {
                let v = edges.get(bi, 0, y, x_);
                if v < min_v {
                    min_v = v;
                    min_i = y * w + x_;
                }
                if v > max_v {
                    max_v = v;
                    max_i = y * w + x_;
                }
            }
        }
        let denom = max_v - min_v + params.epsilon;
        for y in 0..h {
            for x_ in 0..w {
                norm_edges.set(bi, 0, y, x_, (edges.get(bi, 0, y, x_) - min_v) / denom);
            }
        }
        minmax.push((min_i, max_i, min_v, max_v));
    }
    let g_ct = conv2d(&norm_edges, &params.refine_w, 1, 1, 3, Some(&params.refine_b)).map(sigmoid);

    // --- fusion and projection ---
    let fused = fuse(x, &g_ch, &g_sp, &g_ct)?;
    let dw_out = dw_conv3(&fused, &params.dw_w, &params.dw_b);
    let (gn_out, gn) = group_norm_forward(
        &dw_out,
        &params.gn_scale,
        &params.gn_shift,
        params.config.groups,
        params.epsilon,
    );
    let relu_out = gn_out.map(|v| v.max(0.0));
    let phi = conv2d(&relu_out, &params.pw_w, c, c, 1, None);

    Ok(ForwardCache {
        x: x.clone(),
        pooled_avg,
        pooled_max,
        h1_avg,
        h1_max,
        sp_input,
        edges,
        minmax,
        norm_edges,
        g_ch,
        g_sp,
        g_ct,
        fused,
        gn,
        gn_out,
        relu_out,
        phi,
    })
}

/// Full module forward: Φ(x) plus the three gate maps for inspection.
pub fn lca_forward(x: &Tensor4, params: &LcaParams) -> Result<(Tensor4, LcaGates)> {
    let cache = forward_cached(x, params)?;
    Ok((
        cache.phi,
        LcaGates {
            channel: cache.g_ch,
            spatial: cache.g_sp,
            contrast: cache.g_ct,
        },
    ))
}

/// Residual integration: `block_out + σ(γ)·Φ(x)`. Note Φ consumes the
/// block's *input*, not its output.
pub fn gated_residual(block_out: &Tensor4, x: &Tensor4, params: &LcaParams) -> Result<Tensor4> {
    let (phi, _) = lca_forward(x, params)?;
    block_out.require_shape(phi.shape(), "gated residual")?;
    let s = sigmoid(params.gamma());
    Ok(Tensor4::new(
        block_out.shape(),
        block_out
            .data()
            .iter()
            .zip(phi.data())
            .map(|(b, p)| b + s * p)
            .collect(),
    )?)
}

/// The wrapped (frozen) block: anything mapping `(B,C,H,W)` to itself.
pub trait Block {
    fn forward(&self, x: &Tensor4) -> Result<Tensor4>;
}

/// Pass-through stub block.
pub struct IdentityBlock;

impl Block for IdentityBlock {
    fn forward(&self, x: &Tensor4) -> Result<Tensor4> {
        Ok(x.clone())
    }
}

/// Fixed random channel-mixing block (a stand-in for a frozen encoder
/// layer): `y[b,·,y,x] = M · x[b,·,y,x]` with a seeded, non-trainable `M`.
pub struct LinearBlock {
    channels: usize,
    mix: Vec<f64>,
}

impl LinearBlock {
    pub fn seeded(channels: usize, key: u64) -> Self {
        let std = (1.0 / channels as f64).sqrt();
        LinearBlock {
            channels,
            mix: (0..channels * channels)
                .map(|i| std * crate::rng::standard_normal_at(key, i as u64))
                .collect(),
        }
    }
}

impl Block for LinearBlock {
    fn forward(&self, x: &Tensor4) -> Result<Tensor4> {
        if x.c() != self.channels {
            return Err(Error::Shape(format!(
                "linear block built for {} channels, input has {}",
                self.channels,
                x.c()
            )));
        }
        Ok(conv2d(x, &self.mix, self.channels, self.channels, 1, None))
    }
}
