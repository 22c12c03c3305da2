//! Adversarial hardening for configuration-space classifiers.
//!
//! A variability model describes a configurable system's options and
//! constraints; a classifier trained on labeled configurations predicts
//! whether an unseen configuration derives an acceptable variant. This
//! crate generates adversarial configurations with a gradient-based
//! evasion attack on that classifier, feeds them back through retraining,
//! and distills the hardened classifier into constraints that can be
//! injected into the variability model.
//!
//! The pieces compose as a pipeline:
//!
//! - [`varmodel`] — parse, validate, and rejection-sample variability models
//! - [`encoding`] — configurations to points in \[0,1\]^d and back
//! - [`classifier`] — soft-margin kernel SVM with an analytic gradient
//! - [`attack`] — fixed-step gradient evasion inside the feature box
//! - [`oracle`] — ground-truth labelers and synthetic scenarios
//! - [`retrain`] — the adversarial loop and the random baseline
//! - [`rules`] — tree distillation and constraint extraction
//! - [`cli`] — the `advconf` command-line front end
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --release --example sample_configurations
//! cargo run --release --example encode_roundtrip
//! cargo run --release --example train_classifier
//! cargo run --release --example evasion_attack
//! cargo run --release --example boundary_map
//! cargo run --release --example adversarial_loop
//! cargo run --release --example extract_rules
//! cargo run --release --example full_scale
//! ```
//!
//! All randomness flows from explicit seeds; identical inputs reproduce
//! identical outputs byte for byte.

pub mod attack;
pub mod classifier;
pub mod cli;
pub mod encoding;
mod error;
pub mod oracle;
pub mod retrain;
pub mod rules;
pub mod varmodel;

pub use error::{Error, Result};
