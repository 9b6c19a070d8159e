//! Interpretable separable-convolution CNN for cross-subject EEG drowsiness
//! classification.
//!
//! The crate is organised around six subsystems:
//!
//! - [`dataset`]: reaction-time labelling, session selection, class balancing,
//!   leave-one-subject-out splits, a deterministic synthetic fixture generator,
//!   and the `EEGB` binary container format.
//! - [`model`]: the compact pointwise+depthwise CNN (and its ablation
//!   variants), parameter initialisation, the cached forward pass, and the
//!   checkpoint format.
//! - [`training`]: softmax cross-entropy, exact analytic gradients through
//!   every layer (including batch-statistics terms of batch norm), Adam, and
//!   the mini-batch training loop.
//! - [`interpret`]: class activation maps, top-location ranking, back-tracing
//!   through the separable layers, and Gaussian heatmap synthesis with
//!   CSV/SVG/JSON export.
//! - [`baselines`]: Welch PSD, band-power features, wavelet entropy, the four
//!   entropy features, and closed-form classifiers (GNB, LDA, QDA, LR, KNN).
//! - [`harness`]: leave-one-subject-out protocols, accuracy/precision/recall
//!   metrics, repeat/epoch sweeps, and report serialisation.
//!
//! All randomness flows through explicit `u64` seeds (ChaCha streams), and all
//! reductions have a fixed order, so results are reproducible bit-for-bit
//! across runs and thread counts.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod interpret;
pub mod model;
pub mod seed;
pub mod training;

pub use dataset::{BundleKind, DatasetBundle, EegSample, Label, Trial};
pub use error::{Error, Result};
pub use interpret::Heatmap;
pub use model::{ForwardCache, ModelConfig, ModelParams, Variant};
pub use training::{AdamState, TrainReport};
