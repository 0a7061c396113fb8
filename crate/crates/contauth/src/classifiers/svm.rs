//! Support vector machine trained with simplified SMO.
//!
//! The dual is optimized two multipliers at a time; the partner index is
//! drawn from a seeded generator, so training is deterministic. Training
//! stops once `svm_max_passes` consecutive full passes find no KKT
//! violator, which implies every KKT condition holds within `svm_tol`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainConfig;
use crate::features::{FeatureVector, FEATURE_COUNT};

/// Hard cap on total SMO passes; hitting it reports `converged = false`.
const MAX_TOTAL_PASSES: usize = 2_000;

/// Minimum multiplier step for an update to count. Small enough that
/// violators barely past `svm_tol` can still resolve instead of stalling.
const MIN_ALPHA_STEP: f64 = 1e-10;

/// Rounds a multiplier onto the box boundary when it lands within float
/// noise of it. Residues like 1e-18 would otherwise flag their point as a
/// KKT violator that no partner can fix with a step above the minimum.
fn snap(alpha: f64, c: f64) -> f64 {
    if alpha < 1e-8 {
        0.0
    } else if alpha > c - 1e-8 {
        c
    } else {
        alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Linear,
    Rbf,
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Rbf => "rbf",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "linear" => Some(Kernel::Linear),
            "rbf" => Some(Kernel::Rbf),
            _ => None,
        }
    }

    pub fn eval(&self, gamma: f64, a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// Trained SVM: retained support vectors with `coeffs[i] = alpha_i * y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support: Vec<[f64; FEATURE_COUNT]>,
    pub coeffs: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub gamma: f64,
    pub converged: bool,
}

impl SvmModel {
    /// Raw decision value `f(v) = sum alpha_i y_i K(x_i, v) + b`.
    pub fn score(&self, v: &FeatureVector) -> f64 {
        self.support
            .iter()
            .zip(&self.coeffs)
            .map(|(sv, c)| c * self.kernel.eval(self.gamma, sv, &v.0))
            .sum::<f64>()
            + self.bias
    }
}

struct SmoState {
    alphas: Vec<f64>,
    bias: f64,
    converged: bool,
}

/// Dual objective `sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
fn dual_objective(alphas: &[f64], y: &[f64], gram: &[Vec<f64>]) -> f64 {
    let n = alphas.len();
    let mut obj: f64 = alphas.iter().sum();
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            obj -= 0.5 * alphas[i] * alphas[j] * y[i] * y[j] * gram[i][j];
        }
    }
    obj
}

fn smo(
    cfg: &TrainConfig,
    vectors: &[FeatureVector],
    y: &[f64],
    trace: Option<&mut Vec<f64>>,
) -> (SmoState, Vec<Vec<f64>>) {
    let n = vectors.len();
    let c = cfg.svm_c;
    let tol = cfg.svm_tol;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5f3a_9d2e_c4b7_0168);

    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| cfg.svm_kernel.eval(cfg.svm_gamma, &vectors[i].0, &vectors[j].0))
                .collect()
        })
        .collect();

    let mut alphas = vec![0.0f64; n];
    let mut bias = 0.0f64;
    let f = |alphas: &[f64], bias: f64, i: usize, gram: &[Vec<f64>]| -> f64 {
        let mut s = bias;
        for j in 0..n {
            if alphas[j] != 0.0 {
                s += alphas[j] * y[j] * gram[i][j];
            }
        }
        s
    };

    let mut trace = trace;
    let mut quiet_passes = 0usize;
    let mut total_passes = 0usize;
    while quiet_passes < cfg.svm_max_passes && total_passes < MAX_TOTAL_PASSES {
        let mut violators = 0usize;
        for i in 0..n {
            let e_i = f(&alphas, bias, i, &gram) - y[i];
            let r = y[i] * e_i;
            if !((r < -tol && alphas[i] < c) || (r > tol && alphas[i] > 0.0)) {
                continue;
            }
            violators += 1;
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let e_j = f(&alphas, bias, j, &gram) - y[j];
            let (a_i_old, a_j_old) = (alphas[i], alphas[j]);
            let (low, high) = if (y[i] - y[j]).abs() > f64::EPSILON {
                ((a_j_old - a_i_old).max(0.0), (c + a_j_old - a_i_old).min(c))
            } else {
                ((a_i_old + a_j_old - c).max(0.0), (a_i_old + a_j_old).min(c))
            };
            if low >= high {
                continue;
            }
            let eta = 2.0 * gram[i][j] - gram[i][i] - gram[j][j];
            if eta >= 0.0 {
                continue;
            }
            let a_j_new = snap(
                (a_j_old - y[j] * (e_i - e_j) / eta).clamp(low, high),
                c,
            );
            if (a_j_new - a_j_old).abs() < MIN_ALPHA_STEP {
                continue;
            }
            let a_i_new = snap(a_i_old + y[i] * y[j] * (a_j_old - a_j_new), c);
            let b1 = bias
                - e_i
                - y[i] * (a_i_new - a_i_old) * gram[i][i]
                - y[j] * (a_j_new - a_j_old) * gram[i][j];
            let b2 = bias
                - e_j
                - y[i] * (a_i_new - a_i_old) * gram[i][j]
                - y[j] * (a_j_new - a_j_old) * gram[j][j];
            alphas[i] = a_i_new;
            alphas[j] = a_j_new;
            bias = if a_i_new > 0.0 && a_i_new < c {
                b1
            } else if a_j_new > 0.0 && a_j_new < c {
                b2
            } else {
                (b1 + b2) / 2.0
            };
            if let Some(t) = trace.as_deref_mut() {
                t.push(dual_objective(&alphas, y, &gram));
            }
        }
        if violators == 0 {
            quiet_passes += 1;
        } else {
            quiet_passes = 0;
        }
        total_passes += 1;
    }

    (
        SmoState {
            alphas,
            bias,
            converged: quiet_passes >= cfg.svm_max_passes,
        },
        gram,
    )
}

pub fn train_svm(cfg: &TrainConfig, vectors: &[FeatureVector], labels: &[bool]) -> SvmModel {
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let (state, _) = smo(cfg, vectors, &y, None);
    let mut support = Vec::new();
    let mut coeffs = Vec::new();
    for i in 0..vectors.len() {
        if state.alphas[i] > 0.0 {
            support.push(vectors[i].0);
            coeffs.push(state.alphas[i] * y[i]);
        }
    }
    SvmModel {
        support,
        coeffs,
        bias: state.bias,
        kernel: cfg.svm_kernel,
        gamma: cfg.svm_gamma,
        converged: state.converged,
    }
}
