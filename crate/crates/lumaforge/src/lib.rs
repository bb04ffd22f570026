//! Paired lighting augmentation for instance-segmentation datasets.
//!
//! The crate generates `(clean, degraded)` image pairs that share identical
//! annotations, so a segmentation model can be trained to give consistent
//! predictions under bad lighting without a single new label. It also ships
//! a small, dependency-free numeric reference of the lighting attention
//! block used by the downstream model, precise enough to check gradients
//! against finite differences.
//!
//! Top-level map:
//!
//! * [`raster`] — image representation, sRGB transfer, PNG/JPEG I/O;
//! * [`lightops`] — the twelve lighting degradation operations;
//! * [`severity`] — tier table (parameter bands per severity);
//! * [`sampler`] — deterministic, conflict-aware recipe sampling;
//! * [`coco`] — COCO annotation ingestion (opaque passthrough);
//! * [`pairgen`] — dataset-level pair generation, manifest, verification;
//! * [`metrics`] — SSIM, mask IoU, per-severity corpus report;
//! * [`lca`] — numeric reference of the lighting attention block and losses;
//! * [`rng`] — counter-based random streams behind all of the above.

pub mod coco;
pub mod error;
pub mod lca;
pub mod lightops;
pub mod metrics;
pub mod pairgen;
pub mod raster;
pub mod rng;
pub mod sampler;
pub mod severity;

pub use error::{Error, Result};
