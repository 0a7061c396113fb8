//! Multi-modal behavioral biometric user authentication.
//!
//! Fuses touch-dynamics strokes with phone-movement sensor snapshots into
//! per-user datasets, trains one binary verifier per enrolled user (random
//! forest, SVM, or k-nearest-neighbors) and evaluates each with the full
//! biometric metric suite: accuracy, precision, recall (TAR), F1, FAR, FRR,
//! EER, ROC and AUC.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] — parse the touch and motion source exports (or the
//!    canonical 25-column CSV) into typed, validated records.
//! 2. [`fusion`] — join strokes with stride-decimated motion snapshots into
//!    a fused 24-feature dataset and build per-user train/test splits
//!    (80 genuine + 80 impostor train, 20 genuine + 50 impostor test).
//! 3. [`features`] + [`classifiers`] — z-score standardization fitted on
//!    train data only, then per-user model training behind a uniform
//!    genuine-score interface.
//! 4. [`metrics`] + [`harness`] — threshold sweeps, EER interpolation, AUC,
//!    per-user results and roster-wide averages, emitted as reports.
//!
//! Everything is deterministic for a fixed seed. With the default
//! `parallel` feature the per-user work is distributed with rayon; without
//! it the same code runs sequentially and produces byte-identical output.

pub mod classifiers;
pub mod features;
pub mod fusion;
pub mod harness;
pub mod ingest;
pub mod metrics;

/// Stable 64-bit FNV-1a hash, used to derive per-user and per-model seeds.
///
/// `std`'s `DefaultHasher` is explicitly unstable across releases, so seed
/// derivation uses this instead.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
