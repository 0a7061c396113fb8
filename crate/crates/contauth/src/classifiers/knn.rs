//! Lazy k-nearest-neighbors verifier over standardized features.
//!
//! Distances are Euclidean; ties resolve to the lower training index.

use super::FeatureVector;
use crate::features::FEATURE_COUNT;

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub points: Vec<[f64; FEATURE_COUNT]>,
    pub labels: Vec<bool>,
    pub k: usize,
}

impl KnnModel {
    /// Stores the training set verbatim.
    pub fn fit(k: usize, vectors: &[FeatureVector], labels: &[bool]) -> Self {
        Self {
            points: vectors.iter().map(|v| v.0).collect(),
            labels: labels.to_vec(),
            k: k.min(vectors.len()),
        }
    }

    /// Fraction of genuine labels among the k nearest stored points.
    pub fn score(&self, v: &FeatureVector) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d2: f64 = p.iter().zip(&v.0).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let genuine = dist[..self.k].iter().filter(|(_, i)| self.labels[*i]).count();
        genuine as f64 / self.k as f64
    }
}
