//! One-shot machine-readable health check of the whole numeric reference.
//!
//! Runs the structural invariants (do-no-harm initialization, fixed edge
//! kernel, parameter-count claims, batch independence, loss hand values) and
//! the full finite-difference gradient sweep, and folds the results into a
//! single JSON-serializable verdict for the command line.

use serde::Serialize;

use super::forward::{gated_residual, laplacian_filter, lca_forward, sigmoid, Block, IdentityBlock};
use super::gradcheck::{standard_grad_checks, FD_TOLERANCE, GRAD_CHECK_SEEDS};
use super::loss::aggregate_instances;
use super::params::{param_count, LcaConfig, LcaParams, TENSOR_NAMES};
use super::tensor::Tensor4;

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    /// Measured value(s), human-readable.
    pub detail: String,
}

/// Aggregate verdict; `pass` is the conjunction of all entries.
#[derive(Debug, Clone, Serialize)]
pub struct SelfTestReport {
    pub pass: bool,
    pub checks: Vec<CheckEntry>,
}

fn entry(name: &str, pass: bool, detail: String) -> CheckEntry {
    CheckEntry {
        name: name.to_string(),
        pass,
        detail,
    }
}

fn check_identity_at_init() -> CheckEntry {
    let config = LcaConfig::new(16, 2, 4).expect("static config");
    let mut worst: f64 = 0.0;
    let mut bitwise = true;
    for seed in 0..5u64 {
        let params = LcaParams::fresh(config, 900 + seed).expect("fresh params");
        let x = Tensor4::randn([2, 16, 5, 7], 300 + seed, 1.0);
        let block_out = IdentityBlock.forward(&x).expect("identity block");
        let y = gated_residual(&block_out, &x, &params).expect("forward");
        worst = worst.max(y.max_abs_diff(&x).expect("shape match"));
        bitwise &= y.data() == x.data();
    }
    entry(
        "identity_at_initialization",
        bitwise,
        format!("5 random inputs, max |y − x| = {worst:e} (bitwise equal: {bitwise})"),
    )
}

fn check_gate_init() -> CheckEntry {
    let config = LcaConfig::new(8, 2, 4).expect("static config");
    let params = LcaParams::fresh(config, 1).expect("fresh params");
    let s = sigmoid(params.gamma());
    let pass = (s - 0.26894).abs() <= 1e-4;
    entry(
        "sigmoid_gate_init=0.26894",
        pass,
        format!("sigmoid({}) = {s:.6}", params.gamma()),
    )
}

fn layer_count(breakdown: &super::params::ParamBreakdown, name: &str) -> usize {
    breakdown
        .per_layer
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, v)| *v)
        .unwrap_or(0)
}

fn check_param_counts() -> Vec<CheckEntry> {
    let breakdown = param_count(&LcaConfig::full_scale(), true);
    let spatial = layer_count(&breakdown, "spatial_conv");
    let refine = layer_count(&breakdown, "refine_conv");
    let two_modules = 2 * breakdown.total;
    vec![
        entry(
            "spatial_gate_params=98",
            spatial == 98,
            format!("counted {spatial}"),
        ),
        entry(
            "contrast_refine_params=10",
            refine == 10,
            format!("counted {refine}"),
        ),
        entry(
            "two_module_params_in_2.3M..2.5M",
            (2_300_000..=2_500_000).contains(&two_modules),
            format!("2 × {} = {two_modules}", breakdown.total),
        ),
    ]
}

fn check_laplacian_frozen() -> CheckEntry {
    let in_trainables = TENSOR_NAMES.iter().any(|n| n.contains("laplacian"));
    let full = param_count(&LcaConfig::full_scale(), false);
    let trainable = param_count(&LcaConfig::full_scale(), true);
    let buffer_rows: Vec<&str> = full
        .per_layer
        .iter()
        .filter(|(n, _)| !trainable.per_layer.iter().any(|(t, _)| t == n))
        .map(|(n, _)| n.as_str())
        .collect();
    let pass = !in_trainables
        && buffer_rows == ["laplacian (fixed)"]
        && full.total == trainable.total + 9;
    entry(
        "laplacian_not_trainable",
        pass,
        format!("non-trainable rows: {buffer_rows:?}"),
    )
}

fn check_laplacian_response() -> CheckEntry {
    // Impulse: −4 at the center, +1 on the 4-neighbors.
    let impulse = Tensor4::from_fn([1, 1, 5, 5], |_, _, y, x| ((y, x) == (2, 2)) as u8 as f64);
    let resp = laplacian_filter(&impulse).expect("laplacian");
    let mut impulse_ok = (resp.get(0, 0, 2, 2) + 4.0).abs() < 1e-12;
    for (y, x) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
        impulse_ok &= (resp.get(0, 0, y, x) - 1.0).abs() < 1e-12;
    }
    // Affine image: zero response away from the padding ring.
    let affine = Tensor4::from_fn([1, 1, 8, 9], |_, _, y, x| 0.3 * y as f64 - 0.7 * x as f64 + 2.0);
    let affine_resp = laplacian_filter(&affine).expect("laplacian");
    let mut interior_max: f64 = 0.0;
    for y in 1..7 {
        for x in 1..8 {
            interior_max = interior_max.max(affine_resp.get(0, 0, y, x).abs());
        }
    }
    entry(
        "laplacian_impulse_and_affine_interior",
        impulse_ok && interior_max < 1e-6,
        format!("impulse taps ok: {impulse_ok}, max |response| on affine interior = {interior_max:e}"),
    )
}

fn check_batch_independence() -> CheckEntry {
    let config = LcaConfig::new(8, 2, 4).expect("static config");
    let params = LcaParams::randomized(config, 41).expect("randomized params");
    let x = Tensor4::randn([3, 8, 6, 6], 42, 1.0);
    let (batched, _) = lca_forward(&x, &params).expect("batched forward");
    let mut worst: f64 = 0.0;
    for b in 0..3 {
        let (single, _) = lca_forward(&x.slice_batch(b), &params).expect("single forward");
        worst = worst.max(single.max_abs_diff(&batched.slice_batch(b)).expect("shape match"));
    }
    entry(
        "batch_independence",
        worst <= 1e-7,
        format!("max per-sample deviation = {worst:e}"),
    )
}

fn check_loss_hand_value() -> CheckEntry {
    let total = aggregate_instances(&[0.4, 0.6], &[0.1, 0.3], 0.1).expect("aggregation");
    entry(
        "loss_hand_value=0.52",
        (total - 0.52).abs() < 1e-12,
        format!("computed {total}"),
    )
}

fn check_gradients() -> CheckEntry {
    match standard_grad_checks() {
        Ok(reports) => {
            let worst = reports.iter().fold(0.0f64, |m, r| m.max(r.max_rel_err));
            let pass = reports.iter().all(|r| r.pass);
            entry(
                "gradient_check",
                pass,
                format!(
                    "{} seeds {:?}, max relative error = {worst:e} (tolerance {FD_TOLERANCE:e})",
                    reports.len(),
                    GRAD_CHECK_SEEDS
                ),
            )
        }
        Err(e) => entry("gradient_check", false, format!("harness error: {e}")),
    }
}

/// Run every check. Never panics on a failed check — failures are reported
/// in the verdict so the caller can exit non-zero.
pub fn run_self_test() -> SelfTestReport {
    let mut checks = vec![check_identity_at_init(), check_gate_init()];
    checks.extend(check_param_counts());
    checks.push(check_laplacian_frozen());
    checks.push(check_laplacian_response());
    checks.push(check_batch_independence());
    checks.push(check_loss_hand_value());
    checks.push(check_gradients());
    let pass = checks.iter().all(|c| c.pass);
    SelfTestReport { pass, checks }
}
