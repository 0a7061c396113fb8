//! Synthetic fused datasets for hermetic testing.
//!
//! Each user is a Gaussian cluster in feature space: a center drawn
//! uniformly in a hypercube scaled by `separation`, plus per-sample noise.
//! Physically-constrained features are repaired afterwards so every
//! sample passes the ingest invariants.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::HarnessError;
use crate::features::FEATURE_COUNT;
use crate::fusion::{FusedDataset, FusedSample};

// canonical feature indices with physical constraints
const F_STROKE_DURATION: usize = 0;
const F_DIRECT_DISTANCE: usize = 5;
const F_MEAN_RESULTANT_LENGTH: usize = 6;
const F_UP_DOWN_LEFT_RIGHT: usize = 7;
const F_TRAJECTORY_LENGTH: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub users: usize,
    pub samples_per_user: usize,
    /// Edge length of the hypercube user centers are drawn from.
    pub separation: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            users: 51,
            samples_per_user: 100,
            separation: 10.0,
            noise_std: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.users < 2 {
            return Err(HarnessError::InvalidSpec("users must be >= 2".into()));
        }
        if self.samples_per_user < 100 {
            return Err(HarnessError::InvalidSpec(
                "samples_per_user must be >= 100 for split eligibility".into(),
            ));
        }
        if !(self.separation > 0.0) {
            return Err(HarnessError::InvalidSpec("separation must be > 0".into()));
        }
        if self.noise_std < 0.0 {
            return Err(HarnessError::InvalidSpec("noise_std must be >= 0".into()));
        }
        Ok(())
    }
}

fn repair(f: &mut [f64; FEATURE_COUNT]) {
    f[F_STROKE_DURATION] = f[F_STROKE_DURATION].abs().max(1e-3);
    f[F_DIRECT_DISTANCE] = f[F_DIRECT_DISTANCE].abs();
    f[F_MEAN_RESULTANT_LENGTH] = f[F_MEAN_RESULTANT_LENGTH].clamp(0.0, 1.0);
    f[F_UP_DOWN_LEFT_RIGHT] = f[F_UP_DOWN_LEFT_RIGHT].round().clamp(0.0, 3.0);
    f[F_TRAJECTORY_LENGTH] = f[F_TRAJECTORY_LENGTH].abs().max(f[F_DIRECT_DISTANCE]);
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FusedDataset, HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std.max(f64::MIN_POSITIVE))
        .expect("std validated non-negative");
    let mut samples = Vec::with_capacity(spec.users * spec.samples_per_user);
    for u in 0..spec.users {
        let mut center = [0.0f64; FEATURE_COUNT];
        for c in &mut center {
            *c = rng.gen_range(0.0..spec.separation);
        }
        for _ in 0..spec.samples_per_user {
            let mut f = center;
            if spec.noise_std > 0.0 {
                for x in &mut f {
                    *x += noise.sample(&mut rng);
                }
            }
            repair(&mut f);
            samples.push(FusedSample::new(format!("user{u:03}"), f));
        }
    }
    Ok(FusedDataset::from_samples(samples))
}

/// Reassigns user ids by a seeded shuffle of the whole label column.
/// Sample counts per user are preserved; any real structure between
/// features and identity is destroyed.
pub fn permute_labels(dataset: &FusedDataset, seed: u64) -> FusedDataset {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<String> = dataset
        .samples()
        .iter()
        .map(|s| s.user_id().to_string())
        .collect();
    ids.shuffle(&mut rng);
    let mut out = dataset.clone();
    for (sample, id) in out.samples_mut().iter_mut().zip(ids) {
        sample.set_user_id(id);
    }
    out.rebuild_roster();
    out
}
