//! Per-user binary verifiers behind one genuine-score interface.
//!
//! Three variants: a random forest (CART trees, Gini splits, bootstrap +
//! per-split feature subsampling), an SMO-trained SVM (linear or RBF
//! kernel) and a lazy k-nearest-neighbors store. All training is
//! deterministic for a fixed `(config, data, seed)`; scores are monotone
//! in genuineness so ROC/EER threshold sweeps apply uniformly.

mod forest;
mod knn;
mod svm;

pub use forest::{best_split, Forest, Node, Tree};
pub use knn::KnnModel;
pub use svm::{train_svm, Kernel, SvmModel};

use thiserror::Error;

use crate::features::{FeatureVector, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Rf,
    Svm,
    Knn,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Rf => "rf",
            Algorithm::Svm => "svm",
            Algorithm::Knn => "knn",
        }
    }

    /// Operating threshold for accuracy-style metrics: 0.5 for the voting
    /// classifiers, 0 for the raw SVM margin.
    pub fn default_threshold(&self) -> f64 {
        match self {
            Algorithm::Rf | Algorithm::Knn => 0.5,
            Algorithm::Svm => 0.0,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(Algorithm::Rf),
            "svm" => Ok(Algorithm::Svm),
            "knn" => Ok(Algorithm::Knn),
            other => Err(format!("unknown algorithm `{other}` (expected rf, svm or knn)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("training set contains only one class")]
    SingleClass,
    #[error("non-finite feature value in training vector {index}")]
    NonFinite { index: usize },
    #[error("non-finite feature value in query vector")]
    NonFiniteQuery,
    #[error("model parse error: {0}")]
    Parse(String),
}

/// Hyperparameters for all three variants plus the training seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub rf_trees: usize,
    /// `None` grows trees until purity.
    pub rf_max_depth: Option<usize>,
    pub rf_min_leaf: usize,
    pub rf_features_per_split: usize,
    pub rf_bootstrap: bool,
    pub knn_k: usize,
    pub svm_c: f64,
    pub svm_kernel: Kernel,
    pub svm_gamma: f64,
    pub svm_tol: f64,
    pub svm_max_passes: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            rf_trees: 100,
            rf_max_depth: None,
            rf_min_leaf: 1,
            // ceil(sqrt(24)) = 5
            rf_features_per_split: 5,
            rf_bootstrap: true,
            knn_k: 5,
            svm_c: 1.0,
            svm_kernel: Kernel::Rbf,
            svm_gamma: 1.0 / FEATURE_COUNT as f64,
            svm_tol: 1e-3,
            svm_max_passes: 10,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.rf_trees < 1 {
            return Err(TrainError::InvalidConfig("rf_trees must be >= 1".into()));
        }
        if self.rf_min_leaf < 1 {
            return Err(TrainError::InvalidConfig("rf_min_leaf must be >= 1".into()));
        }
        if self.rf_features_per_split < 1 {
            return Err(TrainError::InvalidConfig(
                "rf_features_per_split must be >= 1".into(),
            ));
        }
        if self.knn_k % 2 == 0 {
            // even k ties the vote at the 0.5 operating threshold
            return Err(TrainError::InvalidConfig("knn_k must be odd".into()));
        }
        if self.knn_k > 160 {
            return Err(TrainError::InvalidConfig("knn_k must be <= 160".into()));
        }
        if !(self.svm_c > 0.0) {
            return Err(TrainError::InvalidConfig("svm_c must be > 0".into()));
        }
        if !(self.svm_gamma > 0.0) {
            return Err(TrainError::InvalidConfig("svm_gamma must be > 0".into()));
        }
        if !(self.svm_tol > 0.0) {
            return Err(TrainError::InvalidConfig("svm_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Variant-specific trained state.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Forest(Forest),
    Svm(SvmModel),
    Knn(KnnModel),
}

/// A trained per-user verifier: the fitted state plus an echo of the
/// config that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: TrainConfig,
    pub state: ModelState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Genuine,
    Impostor,
}

/// One authentication decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub verdict: Verdict,
    pub score: f64,
    pub threshold: f64,
}

/// Trains the classifier named by `config.algorithm` on labeled,
/// standardized vectors (`true` = genuine).
pub fn train(
    config: &TrainConfig,
    vectors: &[FeatureVector],
    labels: &[bool],
) -> Result<TrainedModel, TrainError> {
    config.validate()?;
    if vectors.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if vectors.len() != labels.len() {
        return Err(TrainError::LengthMismatch {
            vectors: vectors.len(),
            labels: labels.len(),
        });
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(TrainError::SingleClass);
    }
    for (i, v) in vectors.iter().enumerate() {
        if v.0.iter().any(|x| !x.is_finite()) {
            return Err(TrainError::NonFinite { index: i });
        }
    }
    let state = match config.algorithm {
        Algorithm::Rf => ModelState::Forest(forest::train_forest(config, vectors, labels)),
        Algorithm::Svm => ModelState::Svm(svm::train_svm(config, vectors, labels)),
        Algorithm::Knn => ModelState::Knn(KnnModel::fit(config.knn_k, vectors, labels)),
    };
    Ok(TrainedModel {
        config: config.clone(),
        state,
    })
}

/// Genuine-score of a query vector.
///
/// RF: fraction of trees voting genuine, in [0,1]. KNN: genuine fraction
/// among the k nearest, in {0, 1/k, ..., 1}. SVM: raw decision value,
/// unbounded.
pub fn score(model: &TrainedModel, v: &FeatureVector) -> Result<f64, TrainError> {
    if v.0.iter().any(|x| !x.is_finite()) {
        return Err(TrainError::NonFiniteQuery);
    }
    Ok(match &model.state {
        ModelState::Forest(f) => f.score(v),
        ModelState::Svm(s) => s.score(v),
        ModelState::Knn(k) => k.score(v),
    })
}

/// Thresholded decision: genuine iff `score >= threshold` (boundary
/// inclusive).
pub fn predict(model: &TrainedModel, v: &FeatureVector, threshold: f64) -> Result<Decision, TrainError> {
    let s = score(model, v)?;
    Ok(Decision {
        verdict: if s >= threshold {
            Verdict::Genuine
        } else {
            Verdict::Impostor
        },
        score: s,
        threshold,
    })
}

// ---------------------------------------------------------------------
// serialization: versioned plain text, floats as IEEE-754 bit patterns so
// a reloaded model scores identically

fn f64_hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn parse_f64_hex(s: &str) -> Result<f64, TrainError> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| TrainError::Parse(format!("bad float bits `{s}`")))
}

/// Serializes a trained model to the versioned text container.
pub fn save_model(model: &TrainedModel) -> String {
    let c = &model.config;
    let mut out = String::from("contauth-model v1\n");
    out.push_str(&format!("algorithm {}\n", c.algorithm.name()));
    out.push_str(&format!("rf_trees {}\n", c.rf_trees));
    out.push_str(&format!(
        "rf_max_depth {}\n",
        c.rf_max_depth.map_or("none".to_string(), |d| d.to_string())
    ));
    out.push_str(&format!("rf_min_leaf {}\n", c.rf_min_leaf));
    out.push_str(&format!("rf_features_per_split {}\n", c.rf_features_per_split));
    out.push_str(&format!("rf_bootstrap {}\n", c.rf_bootstrap));
    out.push_str(&format!("knn_k {}\n", c.knn_k));
    out.push_str(&format!("svm_c {}\n", f64_hex(c.svm_c)));
    out.push_str(&format!("svm_kernel {}\n", c.svm_kernel.name()));
    out.push_str(&format!("svm_gamma {}\n", f64_hex(c.svm_gamma)));
    out.push_str(&format!("svm_tol {}\n", f64_hex(c.svm_tol)));
    out.push_str(&format!("svm_max_passes {}\n", c.svm_max_passes));
    out.push_str(&format!("seed {}\n", c.seed));
    out.push_str("state\n");
    match &model.state {
        ModelState::Forest(f) => {
            out.push_str(&format!("forest {}\n", f.trees.len()));
            for tree in &f.trees {
                out.push_str(&format!("tree {}\n", tree.nodes.len()));
                for node in &tree.nodes {
                    match node {
                        Node::Leaf { genuine_frac } => {
                            out.push_str(&format!("leaf {}\n", f64_hex(*genuine_frac)));
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            out.push_str(&format!(
                                "split {} {} {} {}\n",
                                feature,
                                f64_hex(*threshold),
                                left,
                                right
                            ));
                        }
                    }
                }
            }
        }
        ModelState::Svm(s) => {
            out.push_str(&format!(
                "svm {} {} {}\n",
                s.support.len(),
                f64_hex(s.bias),
                s.converged
            ));
            for (sv, coeff) in s.support.iter().zip(&s.coeffs) {
                out.push_str(&format!("sv {}", f64_hex(*coeff)));
                for x in sv {
                    out.push_str(&format!(" {}", f64_hex(*x)));
                }
                out.push('\n');
            }
        }
        ModelState::Knn(k) => {
            out.push_str(&format!("knn {}\n", k.points.len()));
            for (pt, label) in k.points.iter().zip(&k.labels) {
                out.push_str(&format!("pt {}", u8::from(*label)));
                for x in pt {
                    out.push_str(&format!(" {}", f64_hex(*x)));
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Reloads a model saved by [`save_model`].
pub fn load_model(text: &str) -> Result<TrainedModel, TrainError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| TrainError::Parse("empty input".into()))?;
    if header != "contauth-model v1" {
        return Err(TrainError::Parse(format!("unsupported container `{header}`")));
    }
    let mut fields = std::collections::HashMap::new();
    for line in lines.by_ref() {
        if line == "state" {
            break;
        }
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| TrainError::Parse(format!("bad header line `{line}`")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<&String, TrainError> {
        fields.get(k).ok_or_else(|| TrainError::Parse(format!("missing field `{k}`")))
    };
    let parse_usize = |s: &str| -> Result<usize, TrainError> {
        s.parse().map_err(|_| TrainError::Parse(format!("bad count `{s}`")))
    };
    let algorithm: Algorithm = get("algorithm")?
        .parse()
        .map_err(TrainError::Parse)?;
    let max_depth_raw = get("rf_max_depth")?;
    let config = TrainConfig {
        algorithm,
        rf_trees: parse_usize(get("rf_trees")?)?,
        rf_max_depth: if max_depth_raw == "none" {
            None
        } else {
            Some(parse_usize(max_depth_raw)?)
        },
        rf_min_leaf: parse_usize(get("rf_min_leaf")?)?,
        rf_features_per_split: parse_usize(get("rf_features_per_split")?)?,
        rf_bootstrap: get("rf_bootstrap")? == "true",
        knn_k: parse_usize(get("knn_k")?)?,
        svm_c: parse_f64_hex(get("svm_c")?)?,
        svm_kernel: Kernel::from_name(get("svm_kernel")?)
            .ok_or_else(|| TrainError::Parse("bad kernel".into()))?,
        svm_gamma: parse_f64_hex(get("svm_gamma")?)?,
        svm_tol: parse_f64_hex(get("svm_tol")?)?,
        svm_max_passes: parse_usize(get("svm_max_passes")?)?,
        seed: get("seed")?
            .parse()
            .map_err(|_| TrainError::Parse("bad seed".into()))?,
    };

    let state_line = lines
        .next()
        .ok_or_else(|| TrainError::Parse("missing state".into()))?;
    let mut parts = state_line.split(' ');
    let tag = parts.next().unwrap_or("");
    let state = match tag {
        "forest" => {
            let n_trees = parse_usize(parts.next().unwrap_or(""))?;
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                let tree_line = lines
                    .next()
                    .ok_or_else(|| TrainError::Parse("truncated forest".into()))?;
                let n_nodes = parse_usize(
                    tree_line
                        .strip_prefix("tree ")
                        .ok_or_else(|| TrainError::Parse("expected tree line".into()))?,
                )?;
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    let line = lines
                        .next()
                        .ok_or_else(|| TrainError::Parse("truncated tree".into()))?;
                    let mut p = line.split(' ');
                    match p.next().unwrap_or("") {
                        "leaf" => nodes.push(Node::Leaf {
                            genuine_frac: parse_f64_hex(p.next().unwrap_or(""))?,
                        }),
                        "split" => nodes.push(Node::Split {
                            feature: parse_usize(p.next().unwrap_or(""))?,
                            threshold: parse_f64_hex(p.next().unwrap_or(""))?,
                            left: parse_usize(p.next().unwrap_or(""))?,
                            right: parse_usize(p.next().unwrap_or(""))?,
                        }),
                        other => return Err(TrainError::Parse(format!("bad node `{other}`"))),
                    }
                }
                trees.push(Tree { nodes });
            }
            ModelState::Forest(Forest { trees })
        }
        "svm" => {
            let n_sv = parse_usize(parts.next().unwrap_or(""))?;
            let bias = parse_f64_hex(parts.next().unwrap_or(""))?;
            let converged = parts.next() == Some("true");
            let mut support = Vec::with_capacity(n_sv);
            let mut coeffs = Vec::with_capacity(n_sv);
            for _ in 0..n_sv {
                let line = lines
                    .next()
                    .ok_or_else(|| TrainError::Parse("truncated svm".into()))?;
                let mut p = line.split(' ');
                if p.next() != Some("sv") {
                    return Err(TrainError::Parse("expected sv line".into()));
                }
                coeffs.push(parse_f64_hex(p.next().unwrap_or(""))?);
                let mut vec = [0.0f64; FEATURE_COUNT];
                for slot in &mut vec {
                    *slot = parse_f64_hex(p.next().unwrap_or(""))?;
                }
                support.push(vec);
            }
            ModelState::Svm(SvmModel {
                support,
                coeffs,
                bias,
                kernel: config.svm_kernel,
                gamma: config.svm_gamma,
                converged,
            })
        }
        "knn" => {
            let n = parse_usize(parts.next().unwrap_or(""))?;
            let mut points = Vec::with_capacity(n);
            let mut model_labels = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines
                    .next()
                    .ok_or_else(|| TrainError::Parse("truncated knn".into()))?;
                let mut p = line.split(' ');
                if p.next() != Some("pt") {
                    return Err(TrainError::Parse("expected pt line".into()));
                }
                model_labels.push(p.next() == Some("1"));
                let mut vec = [0.0f64; FEATURE_COUNT];
                for slot in &mut vec {
                    *slot = parse_f64_hex(p.next().unwrap_or(""))?;
                }
                points.push(vec);
            }
            ModelState::Knn(KnnModel {
                points,
                labels: model_labels,
                k: config.knn_k,
            })
        }
        other => return Err(TrainError::Parse(format!("bad state tag `{other}`"))),
    };
    Ok(TrainedModel { config, state })
}
