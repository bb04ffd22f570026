//! Analytic backward pass mirroring the forward graph.
//!
//! The module input `x` is a leaf (the wrapped block is frozen), so only
//! parameter gradients are produced — there is deliberately no `dL/dx`.
//! Each stage accumulates into local buffers first and then adds them into
//! the shared [`LcaGrads`], which keeps the code free of borrow gymnastics
//! and makes every stage independently readable.

use super::forward::{conv2d, ForwardCache, GnCache};
use super::params::{LcaGrads, LcaParams, LAPLACIAN};
use super::tensor::Tensor4;

/// GroupNorm backward. Returns `(d_input, d_scale, d_shift)` given the
/// forward cache and the gradient at the affine output.
pub(crate) fn group_norm_backward(
    gn: &GnCache,
    scale: &[f64],
    groups: usize,
    d_out: &Tensor4,
) -> (Tensor4, Vec<f64>, Vec<f64>) {
    let [b, c, h, w] = d_out.shape();
    let cg = c / groups;
    let n = (cg * h * w) as f64;
    let mut d_input = Tensor4::zeros([b, c, h, w]);
    let mut d_scale = vec![0.0; c];
    let mut d_shift = vec![0.0; c];
    for bi in 0..b {
        for g in 0..groups {
            let istd = gn.istd[bi * groups + g];
            let mut sum_d = 0.0;
            let mut sum_dx = 0.0;
            for ci in g * cg..(g + 1) * cg {
                for y in 0..h {
                    for x in 0..w {
                        let dv = d_out.get(bi, ci, y, x);
                        let xhat = gn.norm.get(bi, ci, y, x);
                        d_scale[ci] += dv * xhat;
                        d_shift[ci] += dv;
                        let dxhat = dv * scale[ci];
                        sum_d += dxhat;
                        sum_dx += dxhat * xhat;
                    }
                }
            }
            for ci in g * cg..(g + 1) * cg {
                for y in 0..h {
                    for x in 0..w {
                        let dxhat = d_out.get(bi, ci, y, x) * scale[ci];
                        let xhat = gn.norm.get(bi, ci, y, x);
                        d_input.set(bi, ci, y, x, istd * (dxhat - sum_d / n - xhat * sum_dx / n));
                    }
                }
            }
        }
    }
    (d_input, d_scale, d_shift)
}

/// Backward through the shared MLP for one pooling path. `d` is the pooled
/// descriptor batch that entered the MLP, `h1` its cached pre-ReLU hiddens,
/// `d_out` the gradient at the MLP output. Parameter gradients accumulate
/// into the local buffers passed in (the descriptor is a leaf).
#[allow(clippy::too_many_arguments)]
fn mlp_backward(
    params: &LcaParams,
    d: &[f64],
    h1: &[f64],
    batch: usize,
    d_out: &[f64],
    d_w1: &mut [f64],
    d_b1: &mut [f64],
    d_w2: &mut [f64],
    d_b2: &mut [f64],
) {
    let c = params.config.channels;
    let hidden = params.config.hidden();
    for bi in 0..batch {
        let mut d_r = vec![0.0; hidden];
        for co in 0..c {
            let dv = d_out[bi * c + co];
            d_b2[co] += dv;
            for j in 0..hidden {
                let r = h1[bi * hidden + j].max(0.0);
                d_w2[co * hidden + j] += dv * r;
                d_r[j] += params.mlp_w2[co * hidden + j] * dv;
            }
        }
        for j in 0..hidden {
            if h1[bi * hidden + j] > 0.0 {
                let dh = d_r[j];
                d_b1[j] += dh;
                for ci in 0..c {
                    d_w1[j * c + ci] += dh * d[bi * c + ci];
                }
            }
        }
    }
}

/// Accumulate gradients of every trainable tensor (except `gamma`, owned by
/// the residual wrapper) given `dL/dΦ`.
pub(crate) fn lca_backward(
    cache: &ForwardCache,
    params: &LcaParams,
    d_phi: &Tensor4,
    grads: &mut LcaGrads,
) {
    let [b, c, h, w] = cache.x.shape();
    let hw = h * w;
    let hidden = params.config.hidden();

    // --- pointwise projection: Φ = PW · relu ---
    let mut d_pw = vec![0.0; c * c];
    let mut d_relu = Tensor4::zeros([b, c, h, w]);
    for bi in 0..b {
        for co in 0..c {
            for y in 0..h {
                for x in 0..w {
                    let dv = d_phi.get(bi, co, y, x);
                    if dv == 0.0 {
                        continue;
                    }
                    for ci in 0..c {
                        d_pw[co * c + ci] += dv * cache.relu_out.get(bi, ci, y, x);
                        d_relu.add_at(bi, ci, y, x, params.pw_w[co * c + ci] * dv);
                    }
                }
            }
        }
    }
    grads.add_scaled("pw_w", &d_pw, 1.0);

    // --- ReLU, then GroupNorm ---
    let mut d_gn_out = Tensor4::zeros([b, c, h, w]);
    for (i, &go) in cache.gn_out.data().iter().enumerate() {
        if go > 0.0 {
            d_gn_out.data_mut()[i] = d_relu.data()[i];
        }
    }
    let (d_dw_out, d_scale, d_shift) =
        group_norm_backward(&cache.gn, &params.gn_scale, params.config.groups, &d_gn_out);
    grads.add_scaled("gn_scale", &d_scale, 1.0);
    grads.add_scaled("gn_shift", &d_shift, 1.0);

    // --- depthwise convolution ---
    let mut d_dw_w = vec![0.0; c * 9];
    let mut d_dw_b = vec![0.0; c];
    let mut d_fused = Tensor4::zeros([b, c, h, w]);
    for bi in 0..b {
        for ci in 0..c {
            for oy in 0..h {
                for ox in 0..w {
                    let dv = d_dw_out.get(bi, ci, oy, ox);
                    if dv == 0.0 {
                        continue;
                    }
                    d_dw_b[ci] += dv;
                    for ky in 0..3usize {
                        let iy = oy as isize + ky as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..3usize {
                            let ix = ox as isize + kx as isize - 1;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let (iy, ix) = (iy as usize, ix as usize);
                            d_dw_w[ci * 9 + ky * 3 + kx] += dv * cache.fused.get(bi, ci, iy, ix);
                            d_fused.add_at(bi, ci, iy, ix, params.dw_w[ci * 9 + ky * 3 + kx] * dv);
                        }
                    }
                }
            }
        }
    }
    grads.add_scaled("dw_w", &d_dw_w, 1.0);
    grads.add_scaled("dw_b", &d_dw_b, 1.0);

    // --- fusion: fused = x · g_ch · g_sp · g_ct ---
    let mut d_a = vec![0.0; b * c]; // channel gate
    let mut d_s = vec![0.0; b * hw]; // spatial gate
    let mut d_t = vec![0.0; b * hw]; // contrast gate
    for bi in 0..b {
        for ci in 0..c {
            let a = cache.g_ch.get(bi, ci, 0, 0);
            for y in 0..h {
                for x in 0..w {
                    let dv = d_fused.get(bi, ci, y, x);
                    if dv == 0.0 {
                        continue;
                    }
                    let xv = cache.x.get(bi, ci, y, x);
                    let s = cache.g_sp.get(bi, 0, y, x);
                    let t = cache.g_ct.get(bi, 0, y, x);
                    d_a[bi * c + ci] += dv * xv * s * t;
                    d_s[bi * hw + y * w + x] += dv * xv * a * t;
                    d_t[bi * hw + y * w + x] += dv * xv * a * s;
                }
            }
        }
    }

    // --- channel gate: σ(MLP(avg) + MLP(max)) ---
    let mut d_pre = vec![0.0; b * c];
    for i in 0..b * c {
        let g = cache.g_ch.data()[i];
        d_pre[i] = d_a[i] * g * (1.0 - g);
    }
    let mut d_w1 = vec![0.0; hidden * c];
    let mut d_b1 = vec![0.0; hidden];
    let mut d_w2 = vec![0.0; c * hidden];
    let mut d_b2 = vec![0.0; c];
    mlp_backward(
        params,
        &cache.pooled_avg,
        &cache.h1_avg,
        b,
        &d_pre,
        &mut d_w1,
        &mut d_b1,
        &mut d_w2,
        &mut d_b2,
    );
    mlp_backward(
        params,
        &cache.pooled_max,
        &cache.h1_max,
        b,
        &d_pre,
        &mut d_w1,
        &mut d_b1,
        &mut d_w2,
        &mut d_b2,
    );
    grads.add_scaled("mlp_w1", &d_w1, 1.0);
    grads.add_scaled("mlp_b1", &d_b1, 1.0);
    grads.add_scaled("mlp_w2", &d_w2, 1.0);
    grads.add_scaled("mlp_b2", &d_b2, 1.0);

    // --- spatial gate: σ(conv7×7(sp_input)) ---
    let mut d_spw = vec![0.0; 98];
    for bi in 0..b {
        for oy in 0..h {
            for ox in 0..w {
                let g = cache.g_sp.get(bi, 0, oy, ox);
                let dv = d_s[bi * hw + oy * w + ox] * g * (1.0 - g);
                if dv == 0.0 {
                    continue;
                }
                for cin in 0..2usize {
                    for ky in 0..7usize {
                        let iy = oy as isize + ky as isize - 3;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..7usize {
                            let ix = ox as isize + kx as isize - 3;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            d_spw[cin * 49 + ky * 7 + kx] +=
                                dv * cache.sp_input.get(bi, cin, iy as usize, ix as usize);
                        }
                    }
                }
            }
        }
    }
    grads.add_scaled("spatial_w", &d_spw, 1.0);

    // --- contrast gate: σ(refine(minmax(lap(gray)))) ---
    let mut d_refine_w = vec![0.0; 9];
    let mut d_refine_b = vec![0.0; 1];
    let mut d_ne = Tensor4::zeros([b, 1, h, w]);
    for bi in 0..b {
        for oy in 0..h {
            for ox in 0..w {
                let g = cache.g_ct.get(bi, 0, oy, ox);
                let dv = d_t[bi * hw + oy * w + ox] * g * (1.0 - g);
                if dv == 0.0 {
                    continue;
                }
                d_refine_b[0] += dv;
                for ky in 0..3usize {
                    let iy = oy as isize + ky as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..3usize {
                        let ix = ox as isize + kx as isize - 1;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let (iy, ix) = (iy as usize, ix as usize);
                        d_refine_w[ky * 3 + kx] += dv * cache.norm_edges.get(bi, 0, iy, ix);
                        d_ne.add_at(bi, 0, iy, ix, params.refine_w[ky * 3 + kx] * dv);
                    }
                }
            }
        }
    }
    grads.add_scaled("refine_w", &d_refine_w, 1.0);
    grads.add_scaled("refine_b", &d_refine_b, 1.0);

    // Per-sample min–max normalization: besides the direct 1/(D+ε) term,
    // gradient flows into the argmin through the shift and into both
    // extrema through the range.
    let mut d_e = Tensor4::zeros([b, 1, h, w]);
    for bi in 0..b {
        let (min_i, max_i, min_v, max_v) = cache.minmax[bi];
        let denom = max_v - min_v + params.epsilon;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for y in 0..h {
            for x in 0..w {
                let dn = d_ne.get(bi, 0, y, x);
                d_e.set(bi, 0, y, x, dn / denom);
                s1 += dn;
                s2 += dn * (cache.edges.get(bi, 0, y, x) - min_v);
            }
        }
        let (min_y, min_x) = (min_i / w, min_i % w);
        let (max_y, max_x) = (max_i / w, max_i % w);
        d_e.add_at(bi, 0, min_y, min_x, -s1 / denom + s2 / (denom * denom));
        d_e.add_at(bi, 0, max_y, max_x, -s2 / (denom * denom));
    }

    // The Laplacian is symmetric under 180° flip, so the zero-padded
    // transpose convolution is the same stencil applied to the gradient.
    let d_gray = conv2d(&d_e, &LAPLACIAN, 1, 1, 3, None);

    let mut d_gray_w = vec![0.0; c];
    let mut d_gray_b = vec![0.0; 1];
    for bi in 0..b {
        for y in 0..h {
            for x in 0..w {
                let dv = d_gray.get(bi, 0, y, x);
                if dv == 0.0 {
                    continue;
                }
                d_gray_b[0] += dv;
                for ci in 0..c {
                    d_gray_w[ci] += dv * cache.x.get(bi, ci, y, x);
                }
            }
        }
    }
    grads.add_scaled("gray_w", &d_gray_w, 1.0);
    grads.add_scaled("gray_b", &d_gray_b, 1.0);
}

/// Forward state of one gated-residual application.
pub(crate) struct ResidualCache {
    pub cache: ForwardCache,
    pub sig_gamma: f64,
}

/// `y = block_out + σ(γ)·Φ(x)` with the cache needed to run backward.
pub(crate) fn residual_forward(
    block_out: &Tensor4,
    x: &Tensor4,
    params: &LcaParams,
) -> crate::error::Result<(Tensor4, ResidualCache)> {
    let cache = super::forward::forward_cached(x, params)?;
    block_out.require_shape(cache.phi.shape(), "gated residual")?;
    let s = super::forward::sigmoid(params.gamma());
    let y = Tensor4::new(
        block_out.shape(),
        block_out
            .data()
            .iter()
            .zip(cache.phi.data())
            .map(|(bo, p)| bo + s * p)
            .collect(),
    )?;
    Ok((y, ResidualCache { cache, sig_gamma: s }))
}

/// Backward of [`residual_forward`] given `dL/dy`. The frozen block
/// contributes no parameters; `dL/d block_out` equals `d_y` and is not
/// returned.
pub(crate) fn residual_backward(
    rc: &ResidualCache,
    params: &LcaParams,
    d_y: &Tensor4,
    grads: &mut LcaGrads,
) {
    let s = rc.sig_gamma;
    let dot: f64 = d_y
        .data()
        .iter()
        .zip(rc.cache.phi.data())
        .map(|(d, p)| d * p)
        .sum();
    grads.tensor_mut("gamma")[0] += s * (1.0 - s) * dot;
    let d_phi = d_y.map(|v| s * v);
    lca_backward(&rc.cache, params, &d_phi, grads);
}
