//! Feature-vector assembly and train-set-fitted standardization.

use thiserror::Error;

use crate::fusion::FusedSample;

/// The 24 model features in canonical column order (user id excluded; it
/// is the classification target, not an input).
pub const FEATURE_NAMES: [&str; 24] = [
    "stroke_duration",
    "start_x",
    "start_y",
    "stop_x",
    "stop_y",
    "direct_end_to_end_distance",
    "mean_resultant_length",
    "up_down_left_right",
    "direction_of_end_to_end_line",
    "largest_deviation_from_end_to_end",
    "average_direction",
    "length_of_trajectory",
    "average_velocity",
    "mid_stroke_pressure",
    "mid_stroke_area_covered",
    "acc_x",
    "acc_y",
    "acc_z",
    "gyro_x",
    "gyro_y",
    "gyro_z",
    "mag_x",
    "mag_y",
    "mag_z",
];

pub const FEATURE_COUNT: usize = 24;

/// Features whose standard deviation falls below this are masked as
/// constant and transform to 0.
pub const CONSTANT_STD_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("scaler needs at least 2 training vectors, got {0}")]
    TooFewVectors(usize),
}

/// An ordered 24-tuple of feature values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }
}

/// Extracts the feature vector from a fused sample.
pub fn assemble(sample: &FusedSample) -> FeatureVector {
    FeatureVector(*sample.features())
}

/// Per-feature z-score standardization, fitted on training data only.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    mean: [f64; FEATURE_COUNT],
    std: [f64; FEATURE_COUNT],
    masked: [bool; FEATURE_COUNT],
}

impl Scaler {
    /// Fits per-feature mean and population standard deviation. Features
    /// with std below [`CONSTANT_STD_EPS`] are masked.
    pub fn fit(train: &[FeatureVector]) -> Result<Self, FeatureError> {
        if train.len() < 2 {
            return Err(FeatureError::TooFewVectors(train.len()));
        }
        let n = train.len() as f64;
        let mut mean = [0.0f64; FEATURE_COUNT];
        for v in train {
            for (m, x) in mean.iter_mut().zip(v.0) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0f64; FEATURE_COUNT];
        for v in train {
            for ((s, x), m) in var.iter_mut().zip(v.0).zip(mean) {
                *s += (x - m) * (x - m);
            }
        }
        let mut std = [0.0f64; FEATURE_COUNT];
        let mut masked = [false; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            std[j] = (var[j] / n).sqrt();
            masked[j] = std[j] < CONSTANT_STD_EPS;
        }
        Ok(Self { mean, std, masked })
    }

    /// Standardizes a vector: `(x - mean) / std` per feature, 0 for masked
    /// features.
    pub fn transform(&self, v: &FeatureVector) -> FeatureVector {
        let mut out = [0.0f64; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            out[j] = if self.masked[j] {
                0.0
            } else {
                (v.0[j] - self.mean[j]) / self.std[j]
            };
        }
        FeatureVector(out)
    }

    /// Inverse of [`transform`](Self::transform) on unmasked features;
    /// masked features are restored to their training mean.
    pub fn inverse_transform(&self, v: &FeatureVector) -> FeatureVector {
        let mut out = [0.0f64; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            out[j] = if self.masked[j] {
                self.mean[j]
            } else {
                v.0[j] * self.std[j] + self.mean[j]
            };
        }
        FeatureVector(out)
    }

    pub fn mean(&self) -> &[f64; FEATURE_COUNT] {
        &self.mean
    }

    pub fn std(&self) -> &[f64; FEATURE_COUNT] {
        &self.std
    }

    pub fn masked(&self) -> &[bool; FEATURE_COUNT] {
        &self.masked
    }

    /// Plain-text audit block: one `name mean std masked` line per feature.
    pub fn to_text(&self) -> String {
        let mut out = String::from("feature mean std masked\n");
        for j in 0..FEATURE_COUNT {
            out.push_str(&format!(
                "{} {} {} {}\n",
                FEATURE_NAMES[j], self.mean[j], self.std[j], self.masked[j]
            ));
        }
        out
    }
}

/// Drops named features from a vector by zeroing them (ablation hook; the
/// default pipeline keeps all 24).
pub fn drop_features(v: &FeatureVector, names: &[&str]) -> FeatureVector {
    let mut out = *v;
    for (j, feature) in FEATURE_NAMES.iter().enumerate() {
        if names.contains(feature) {
            out.0[j] = 0.0;
        }
    }
    out
}
