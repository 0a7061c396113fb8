//! Experiment orchestration: split, standardize, train, score and report
//! for every (user, algorithm) pair.

mod report;
mod synth;

pub use report::{emit_csv, emit_files, emit_text, parse_report, ReportFormat};
pub use synth::{generate_synthetic, permute_labels, SyntheticSpec};

use thiserror::Error;

use crate::classifiers::{self, Algorithm, TrainConfig, TrainError};
use crate::features::{assemble, FeatureError, Scaler};
use crate::fnv1a64;
use crate::fusion::{build_user_split, user_seed, FusedDataset, FusionError, UserSplit};
use crate::metrics::{aggregate, evaluate, EvalResult, MetricAverages, MetricsError};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("report parse error: {0}")]
    ReportParse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Run parameters shared by `run_user` and `run_all`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub rf: TrainConfig,
    pub svm: TrainConfig,
    pub knn: TrainConfig,
    /// Key-value pairs echoed verbatim into the report.
    pub config_echo: Vec<(String, String)>,
}

impl RunConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            algorithms: vec![Algorithm::Rf, Algorithm::Svm, Algorithm::Knn],
            rf: TrainConfig::new(Algorithm::Rf),
            svm: TrainConfig::new(Algorithm::Svm),
            knn: TrainConfig::new(Algorithm::Knn),
            config_echo: vec![("seed".to_string(), seed.to_string())],
        }
    }

    pub fn base_config(&self, algo: Algorithm) -> &TrainConfig {
        match algo {
            Algorithm::Rf => &self.rf,
            Algorithm::Svm => &self.svm,
            Algorithm::Knn => &self.knn,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserResult {
    pub user: String,
    pub result: EvalResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoReport {
    pub algorithm: Algorithm,
    pub users: Vec<UserResult>,
    pub average: MetricAverages,
}

/// Full experiment output: per-user results per algorithm, averages,
/// config echo and the dataset fingerprint the numbers are tied to.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tool_version: String,
    pub dataset_fingerprint: String,
    pub config_echo: Vec<(String, String)>,
    pub algos: Vec<AlgoReport>,
}

fn labeled_train_test(
    dataset: &FusedDataset,
    split: &UserSplit,
) -> (Vec<crate::features::FeatureVector>, Vec<bool>, Vec<crate::features::FeatureVector>, Vec<bool>) {
    let take = |indices: &[usize]| -> Vec<crate::features::FeatureVector> {
        indices
            .iter()
            .map(|&i| assemble(&dataset.samples()[i]))
            .collect()
    };
    let mut train = take(&split.train_genuine);
    train.extend(take(&split.train_impostor));
    let mut train_labels = vec![true; split.train_genuine.len()];
    train_labels.extend(vec![false; split.train_impostor.len()]);
    let mut test = take(&split.test_genuine);
    test.extend(take(&split.test_impostor));
    let mut test_labels = vec![true; split.test_genuine.len()];
    test_labels.extend(vec![false; split.test_impostor.len()]);
    (train, train_labels, test, test_labels)
}

/// Trains and evaluates one (target user, algorithm) pair: split, fit
/// scaler on train, train model, score the 70 test samples, compute the
/// metric suite at the algorithm's default threshold.
pub fn run_user(
    dataset: &FusedDataset,
    target: &str,
    algo: Algorithm,
    config: &RunConfig,
) -> Result<EvalResult, HarnessError> {
    let split_seed = user_seed(config.seed, target);
    let split = build_user_split(dataset, target, split_seed)?;
    let (train_raw, train_labels, test_raw, test_labels) = labeled_train_test(dataset, &split);

    let scaler = Scaler::fit(&train_raw)?;
    let train: Vec<_> = train_raw.iter().map(|v| scaler.transform(v)).collect();
    let test: Vec<_> = test_raw.iter().map(|v| scaler.transform(v)).collect();

    let mut train_cfg = config.base_config(algo).clone();
    train_cfg.algorithm = algo;
    train_cfg.seed = split_seed ^ fnv1a64(algo.name().as_bytes());
    let model = classifiers::train(&train_cfg, &train, &train_labels)?;

    let scores: Vec<f64> = test
        .iter()
        .map(|v| classifiers::score(&model, v))
        .collect::<Result<_, _>>()?;
    Ok(evaluate(&scores, &test_labels, algo.default_threshold())?)
}

/// Runs every roster user under every requested algorithm.
///
/// (user, algorithm) tasks are independent and may execute in parallel;
/// results are sorted afterwards, so the report is deterministic either
/// way.
pub fn run_all(dataset: &FusedDataset, config: &RunConfig) -> Result<Report, HarnessError> {
    let tasks: Vec<(Algorithm, &String)> = config
        .algorithms
        .iter()
        .flat_map(|&a| dataset.roster().iter().map(move |u| (a, u)))
        .collect();

    let run = |&(algo, user): &(Algorithm, &String)| -> Result<(Algorithm, String, EvalResult), HarnessError> {
        let result = run_user(dataset, user, algo, config)?;
        Ok((algo, user.clone(), result))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<(Algorithm, String, EvalResult)> =
        tasks.par_iter().map(run).collect::<Result<_, _>>()?;
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(Algorithm, String, EvalResult)> =
        tasks.iter().map(run).collect::<Result<_, _>>()?;

    let mut algos = Vec::with_capacity(config.algorithms.len());
    for &algo in &config.algorithms {
        let mut users: Vec<UserResult> = results
            .iter()
            .filter(|(a, _, _)| *a == algo)
            .map(|(_, u, r)| UserResult {
                user: u.clone(),
                result: r.clone(),
            })
            .collect();
        users.sort_by(|a, b| a.user.cmp(&b.user));
        let average = aggregate(&users.iter().map(|u| u.result.clone()).collect::<Vec<_>>())?;
        algos.push(AlgoReport {
            algorithm: algo,
            users,
            average,
        });
    }

    Ok(Report {
        tool_version: TOOL_VERSION.to_string(),
        dataset_fingerprint: dataset.content_hash(),
        config_echo: config.config_echo.clone(),
        algos,
    })
}
