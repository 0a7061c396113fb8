//! Report emission and re-parsing.
//!
//! Three formats: a line-oriented machine-readable tree (the on-disk
//! result store), a tabular CSV with one averaged row per metric, and
//! per-user two-column ROC point files. Re-emission of a parsed report is
//! byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use super::{AlgoReport, HarnessError, Report, UserResult};
use crate::classifiers::Algorithm;
use crate::metrics::{ConfusionMatrix, EvalResult, MetricAverages, RocCurve, RocPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Structured text tree, parseable by [`parse_report`].
    Text,
    /// Averaged metrics table, one row per metric, one column per
    /// algorithm.
    Csv,
    /// Per-user `far tar` point files.
    Roc,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json-like" | "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "roc" => Ok(ReportFormat::Roc),
            other => Err(format!("unknown format `{other}` (expected csv, json-like or roc)")),
        }
    }
}

pub fn emit_text(report: &Report) -> String {
    let mut out = String::new();
    out.push_str("contauth-report v1\n");
    let _ = writeln!(out, "tool_version: {}", report.tool_version);
    let _ = writeln!(out, "dataset_fingerprint: {}", report.dataset_fingerprint);
    let _ = writeln!(out, "config: {}", report.config_echo.len());
    for (k, v) in &report.config_echo {
        let _ = writeln!(out, "{k} = {v}");
    }
    let _ = writeln!(out, "algorithms: {}", report.algos.len());
    for algo in &report.algos {
        let _ = writeln!(out, "algorithm: {}", algo.algorithm.name());
        let _ = writeln!(out, "users: {}", algo.users.len());
        for u in &algo.users {
            let r = &u.result;
            let _ = writeln!(out, "user: {}", u.user);
            let _ = writeln!(
                out,
                "confusion: {} {} {} {}",
                r.confusion.tp, r.confusion.fp, r.confusion.tn, r.confusion.fn_
            );
            let _ = writeln!(out, "accuracy: {}", r.accuracy);
            let _ = writeln!(out, "precision: {}", r.precision);
            let _ = writeln!(out, "recall: {}", r.recall);
            let _ = writeln!(out, "f1: {}", r.f1);
            let _ = writeln!(out, "far: {}", r.far);
            let _ = writeln!(out, "frr: {}", r.frr);
            let _ = writeln!(out, "eer: {}", r.eer);
            let _ = writeln!(out, "eer_threshold: {}", r.eer_threshold);
            let _ = writeln!(out, "auc: {}", r.auc);
            let _ = writeln!(out, "no_positive_predictions: {}", r.no_positive_predictions);
            out.push_str("roc:");
            for p in &r.roc.points {
                let _ = write!(out, " {},{}", p.far, p.tar);
            }
            out.push('\n');
        }
        let a = &algo.average;
        let _ = writeln!(
            out,
            "average: {} {} {} {} {} {}",
            a.accuracy, a.precision, a.recall, a.f1, a.eer, a.auc
        );
    }
    out
}

fn percent(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// Averaged-results table in the shape of the per-algorithm summary:
/// metrics as percentage rows (AUC as a fraction).
pub fn emit_csv(report: &Report) -> String {
    let mut out = String::from("metric");
    for algo in &report.algos {
        let _ = write!(out, ",{}", algo.algorithm.name());
    }
    out.push('\n');
    let rows: [(&str, fn(&MetricAverages) -> String); 6] = [
        ("accuracy", |a| percent(a.accuracy)),
        ("precision", |a| percent(a.precision)),
        ("recall", |a| percent(a.recall)),
        ("f1", |a| percent(a.f1)),
        ("eer", |a| percent(a.eer)),
        ("auc", |a| format!("{:.4}", a.auc)),
    ];
    for (name, cell) in rows {
        out.push_str(name);
        for algo in &report.algos {
            let _ = write!(out, ",{}", cell(&algo.average));
        }
        out.push('\n');
    }
    out
}

/// Writes the requested formats under `dir`. The text report goes to
/// `report.txt`, the table to `report.csv`, ROC points to
/// `roc/<user>_<algo>.txt`.
pub fn emit_files(report: &Report, dir: &Path, formats: &[ReportFormat]) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    for format in formats {
        match format {
            ReportFormat::Text => {
                std::fs::write(dir.join("report.txt"), emit_text(report))?;
            }
            ReportFormat::Csv => {
                std::fs::write(dir.join("report.csv"), emit_csv(report))?;
            }
            ReportFormat::Roc => {
                let roc_dir = dir.join("roc");
                std::fs::create_dir_all(&roc_dir)?;
                for algo in &report.algos {
                    for u in &algo.users {
                        let name = format!("{}_{}.txt", u.user, algo.algorithm.name());
                        std::fs::write(roc_dir.join(name), u.result.roc.to_text())?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn parse_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::ReportParse(msg.into())
}

fn expect_field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, HarnessError> {
    let line = line.ok_or_else(|| parse_err(format!("missing `{key}` line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(": "))
        .ok_or_else(|| parse_err(format!("expected `{key}: ...`, found `{line}`")))
}

fn parse_f64(s: &str) -> Result<f64, HarnessError> {
    s.parse().map_err(|_| parse_err(format!("bad number `{s}`")))
}

/// Parses a report previously written by [`emit_text`].
pub fn parse_report(text: &str) -> Result<Report, HarnessError> {
    let mut lines = text.lines();
    if lines.next() != Some("contauth-report v1") {
        return Err(parse_err("unsupported report container"));
    }
    let tool_version = expect_field(lines.next(), "tool_version")?.to_string();
    let dataset_fingerprint = expect_field(lines.next(), "dataset_fingerprint")?.to_string();
    let n_config: usize = expect_field(lines.next(), "config")?
        .parse()
        .map_err(|_| parse_err("bad config count"))?;
    let mut config_echo = Vec::with_capacity(n_config);
    for _ in 0..n_config {
        let line = lines.next().ok_or_else(|| parse_err("truncated config"))?;
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| parse_err(format!("bad config line `{line}`")))?;
        config_echo.push((k.to_string(), v.to_string()));
    }
    let n_algos: usize = expect_field(lines.next(), "algorithms")?
        .parse()
        .map_err(|_| parse_err("bad algorithm count"))?;
    let mut algos = Vec::with_capacity(n_algos);
    for _ in 0..n_algos {
        let algorithm: Algorithm = expect_field(lines.next(), "algorithm")?
            .parse()
            .map_err(parse_err)?;
        let n_users: usize = expect_field(lines.next(), "users")?
            .parse()
            .map_err(|_| parse_err("bad user count"))?;
        let mut users = Vec::with_capacity(n_users);
        for _ in 0..n_users {
            let user = expect_field(lines.next(), "user")?.to_string();
            let confusion_raw = expect_field(lines.next(), "confusion")?;
            let counts: Vec<usize> = confusion_raw
                .split(' ')
                .map(|c| c.parse().map_err(|_| parse_err("bad confusion count")))
                .collect::<Result<_, _>>()?;
            if counts.len() != 4 {
                return Err(parse_err("confusion needs 4 counts"));
            }
            let accuracy = parse_f64(expect_field(lines.next(), "accuracy")?)?;
            let precision = parse_f64(expect_field(lines.next(), "precision")?)?;
            let recall = parse_f64(expect_field(lines.next(), "recall")?)?;
            let f1 = parse_f64(expect_field(lines.next(), "f1")?)?;
            let far = parse_f64(expect_field(lines.next(), "far")?)?;
            let frr = parse_f64(expect_field(lines.next(), "frr")?)?;
            let eer = parse_f64(expect_field(lines.next(), "eer")?)?;
            let eer_threshold = parse_f64(expect_field(lines.next(), "eer_threshold")?)?;
            let auc = parse_f64(expect_field(lines.next(), "auc")?)?;
            let no_positive_predictions =
                expect_field(lines.next(), "no_positive_predictions")? == "true";
            let roc_line = lines.next().ok_or_else(|| parse_err("missing roc line"))?;
            let roc_raw = roc_line
                .strip_prefix("roc:")
                .ok_or_else(|| parse_err("expected roc line"))?;
            let mut points = Vec::new();
            for pair in roc_raw.split(' ').filter(|p| !p.is_empty()) {
                let (f, t) = pair
                    .split_once(',')
                    .ok_or_else(|| parse_err(format!("bad roc point `{pair}`")))?;
                points.push(RocPoint {
                    far: parse_f64(f)?,
                    tar: parse_f64(t)?,
                });
            }
            users.push(UserResult {
                user,
                result: EvalResult {
                    confusion: ConfusionMatrix::new(counts[0], counts[1], counts[2], counts[3]),
                    accuracy,
                    precision,
                    recall,
                    f1,
                    far,
                    frr,
                    eer,
                    eer_threshold,
                    auc,
                    roc: RocCurve { points },
                    no_positive_predictions,
                },
            });
        }
        let avg_raw = expect_field(lines.next(), "average")?;
        let avg: Vec<f64> = avg_raw
            .split(' ')
            .map(parse_f64)
            .collect::<Result<_, _>>()?;
        if avg.len() != 6 {
            return Err(parse_err("average needs 6 values"));
        }
        algos.push(AlgoReport {
            algorithm,
            users,
            average: MetricAverages {
                accuracy: avg[0],
                precision: avg[1],
                recall: avg[2],
                f1: avg[3],
                eer: avg[4],
                auc: avg[5],
            },
        });
    }
    Ok(Report {
        tool_version,
        dataset_fingerprint,
        config_echo,
        algos,
    })
}
