use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ClusterSpace;
use super::evaluate::ClusterModel;
use super::feedback::FeedbackSummary;
use super::stats::{ClusterStats, STATS_COLUMNS, STAT_ROWS};
use super::{PipelineError, Result};
use crate::cluster::ElbowCurve;
use crate::models::{MetricPair, ModelFamily, ModelParams};
use crate::reduce::PcaModel;
use crate::tabular::ScalingParams;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub crate_version: String,
    pub seed: u64,
    /// Hex SHA-256 of the configuration.
    pub config_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub loaded: usize,
    pub removed_nulls: usize,
    pub used: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSilhouette {
    pub k: usize,
    pub mean: f64,
}

/// How the cluster count was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KSource {
    Override,
    Elbow,
    /// A neighbour of the elbow k with a higher mean silhouette.
    Silhouette,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub cluster: usize,
    /// Train plus test members.
    pub size: usize,
    /// Over all members; `None` only for an empty cluster.
    pub stats: Option<ClusterStats>,
    pub model: ClusterModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub provenance: Provenance,
    pub rows: RowCounts,
    pub features: Vec<String>,
    pub clamped_test_values: usize,
    pub scaling: ScalingParams,
    pub pca: Option<PcaModel>,
    pub clustering_space: ClusterSpace,
    pub elbow: ElbowCurve,
    pub silhouette_by_k: Vec<KSilhouette>,
    pub selected_k: usize,
    pub k_source: KSource,
    pub silhouette_mean: Option<f64>,
    pub centroids: Vec<Vec<f64>>,
    pub model_family: ModelFamily,
    pub shared_params: Option<ModelParams>,
    pub clusters: Vec<ClusterReport>,
    pub global_train: Option<MetricPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub sequence_id: String,
    pub cluster: usize,
    pub part: Part,
}

/// Everything a run produces. The JSON form is canonical: fields serialize
/// in declaration order and nothing time-dependent is recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub report: EvaluationReport,
    pub feedback: FeedbackSummary,
    pub assignments: Vec<Assignment>,
    /// Planted tiers of synthetic rows; not serialized.
    #[serde(skip)]
    pub tiers: Option<Vec<usize>>,
}

impl RunOutput {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("report JSON: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Md,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "md" | "markdown" => Ok(Self::Md),
            other => Err(format!("unknown format `{other}` (json, csv, md)")),
        }
    }
}

fn na_or(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// `cluster,rmse_test,r2_test`, one row per cluster; `NA` when unmodelled.
pub fn metrics_csv(report: &EvaluationReport) -> String {
    let mut s = String::from("cluster,rmse_test,r2_test\n");
    for c in &report.clusters {
        let t = c.model.test;
        let _ = writeln!(s, "{},{},{}", c.cluster, na_or(t.map(|m| m.rmse)), na_or(t.map(|m| m.r2)));
    }
    s
}

pub fn metrics_markdown(report: &EvaluationReport) -> String {
    let mut s = String::from("| Cluster# | RMSE test | R² test |\n|---|---:|---:|\n");
    for c in &report.clusters {
        match c.model.test {
            Some(m) => {
                let _ = writeln!(s, "| Cluster {} | {:.3} | {:.3} |", c.cluster, m.rmse, m.r2);
            }
            None => {
                let _ = writeln!(s, "| Cluster {} | - | - |", c.cluster);
            }
        }
    }
    if let Some(g) = report.global_train {
        let _ = writeln!(s, "\nRMSE train and R² train: {:.3} and {:.3}.", g.rmse, g.r2);
    }
    s
}

fn stat_cells(stats: &ClusterStats, fmt: impl Fn(f64) -> String) -> Vec<Vec<String>> {
    STAT_ROWS
        .iter()
        .enumerate()
        .map(|(row, _)| {
            STATS_COLUMNS
                .iter()
                .map(|col| match stats.column(col) {
                    Some(sm) => fmt(sm.rows()[row]),
                    None => "-".to_string(),
                })
                .collect()
        })
        .collect()
}

/// Statistics table of one cluster: the seven statistic rows by column;
/// `-` marks a column with no values.
pub fn stats_csv(stats: &ClusterStats) -> String {
    let mut s = format!("statistic,{}\n", STATS_COLUMNS.join(","));
    for (label, cells) in STAT_ROWS.iter().zip(stat_cells(stats, |v| v.to_string())) {
        let _ = writeln!(s, "{label},{}", cells.join(","));
    }
    s
}

const DISPLAY_NAMES: [&str; 8] = [
    "ΔtR",
    "SNR",
    "Skewness",
    "Peak area",
    "Length",
    "Sulfur#",
    "tR (min)",
    "Injection Volume (µL)",
];

pub fn stats_markdown(stats: &ClusterStats) -> String {
    let mut s = format!("|  | {} |\n|---|{}\n", DISPLAY_NAMES.join(" | "), "---:|".repeat(DISPLAY_NAMES.len()));
    for (label, cells) in STAT_ROWS.iter().zip(stat_cells(stats, |v| format!("{v:.2}"))) {
        let _ = writeln!(s, "| **{label}** | {} |", cells.join(" | "));
    }
    s
}

pub fn elbow_csv(curve: &ElbowCurve) -> String {
    let mut s = String::from("k,wcss,selected\n");
    for (k, w) in curve.ks.iter().zip(&curve.wcss) {
        let _ = writeln!(s, "{k},{w},{}", u8::from(*k == curve.selected_k));
    }
    s
}

pub fn silhouette_csv(report: &EvaluationReport) -> String {
    let mut s = String::from("k,mean_silhouette,selected\n");
    for p in &report.silhouette_by_k {
        let _ = writeln!(s, "{},{},{}", p.k, p.mean, u8::from(p.k == report.selected_k));
    }
    s
}

/// Cross-validation table: one row per cluster, combination and fold, plus a
/// `mean` row per combination.
pub fn cv_scores_csv(report: &EvaluationReport) -> String {
    let names: Vec<String> = report
        .clusters
        .iter()
        .flat_map(|c| c.model.cv_scores.first())
        .next()
        .map(|s| s.params.keys().cloned().collect())
        .unwrap_or_default();
    let mut s = format!("cluster,combination,{}fold,rmse,error\n", names.iter().map(|n| format!("{n},")).collect::<String>());
    for c in &report.clusters {
        for score in &c.model.cv_scores {
            let params: String = names
                .iter()
                .map(|n| format!("{},", na_or(score.params.get(n).copied())))
                .collect();
            let prefix = format!("{},{},{params}", c.cluster, score.index);
            let error = score.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
            for (f, r) in score.fold_rmse.iter().enumerate() {
                let _ = writeln!(s, "{prefix}{f},{r},");
            }
            let _ = writeln!(s, "{prefix}mean,{},{error}", na_or(score.mean_rmse));
        }
    }
    s
}

pub fn labels_csv(out: &RunOutput) -> String {
    let mut s = String::from("sequence_id,part,cluster\n");
    for a in &out.assignments {
        let part = match a.part {
            Part::Train => "train",
            Part::Test => "test",
        };
        let _ = writeln!(s, "{},{part},{}", a.sequence_id, a.cluster);
    }
    s
}

/// Human-readable report.
pub fn render_markdown(out: &RunOutput) -> String {
    let r = &out.report;
    let mut s = format!("# Quality evaluation: {}\n\n", r.dataset);
    let _ = writeln!(
        s,
        "Seed {}, config `{}`. {} rows used ({} loaded, {} dropped for nulls); {} train, {} test.\n",
        r.provenance.seed,
        &r.provenance.config_hash[..12],
        r.rows.used,
        r.rows.loaded,
        r.rows.removed_nulls,
        r.rows.train,
        r.rows.test
    );
    let source = match r.k_source {
        KSource::Override => "set in the configuration",
        KSource::Elbow => "elbow of the WCSS curve",
        KSource::Silhouette => "silhouette check next to the elbow",
    };
    let _ = write!(s, "## Clusters\n\nk = {} ({source})", r.selected_k);
    if let Some(m) = r.silhouette_mean {
        let _ = write!(s, ", mean silhouette {m:.3}");
    }
    s.push_str(".\n");
    if r.elbow.low_curvature && r.k_source != KSource::Override {
        s.push_str("\nThe elbow curve has no pronounced bend; review the choice of k.\n");
    }
    s.push_str("\n| k | WCSS | silhouette |\n|---:|---:|---:|\n");
    for (k, w) in r.elbow.ks.iter().zip(&r.elbow.wcss) {
        let sil = r
            .silhouette_by_k
            .iter()
            .find(|p| p.k == *k)
            .map_or("-".to_string(), |p| format!("{:.3}", p.mean));
        let _ = writeln!(s, "| {k} | {w:.4} | {sil} |");
    }
    let _ = write!(s, "\n## Model performance ({})\n\n{}", r.model_family, metrics_markdown(r));
    for c in &r.clusters {
        let _ = write!(s, "\n## Cluster {} ({} compounds)\n\n", c.cluster, c.size);
        if let Some(note) = &c.model.note {
            let _ = writeln!(s, "{note}\n");
        }
        if let Some(stats) = &c.stats {
            s.push_str(&stats_markdown(stats));
        }
    }
    s.push_str("\n## Feedback\n\n");
    for (rank, f) in out.feedback.clusters.iter().enumerate() {
        let r2 = f.r2_test.map_or("not modelled".to_string(), |v| format!("R² {v:.3}"));
        let traits: Vec<String> = f.characteristics.iter().map(|c| c.to_string()).collect();
        let traits = if traits.is_empty() { "no distinctive features".to_string() } else { traits.join("; ") };
        let _ = writeln!(s, "{}. Cluster {} ({r2}): {traits}", rank + 1, f.cluster);
    }
    s
}

fn write_file(dir: &Path, name: &str, content: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| PipelineError::Io { path: path.clone(), source: e })?;
    written.push(path);
    Ok(())
}

/// Writes the requested formats into `dir` and returns the written paths.
///
/// - json: `report.json`
/// - csv: `metrics.csv`, `stats_cluster_<c>.csv`, `elbow.csv`,
///   `silhouette.csv`, `cv_scores.csv`, `labels.csv`
/// - md: `report.md`
pub fn emit_report(out: &RunOutput, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io { path: dir.to_path_buf(), source: e })?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            OutputFormat::Json => write_file(dir, "report.json", &out.to_json(), &mut written)?,
            OutputFormat::Csv => {
                let r = &out.report;
                write_file(dir, "metrics.csv", &metrics_csv(r), &mut written)?;
                for c in &r.clusters {
                    if let Some(stats) = &c.stats {
                        write_file(dir, &format!("stats_cluster_{}.csv", c.cluster), &stats_csv(stats), &mut written)?;
                    }
                }
                write_file(dir, "elbow.csv", &elbow_csv(&r.elbow), &mut written)?;
                write_file(dir, "silhouette.csv", &silhouette_csv(r), &mut written)?;
                write_file(dir, "cv_scores.csv", &cv_scores_csv(r), &mut written)?;
                write_file(dir, "labels.csv", &labels_csv(out), &mut written)?;
            }
            OutputFormat::Md => write_file(dir, "report.md", &render_markdown(out), &mut written)?,
        }
    }
    Ok(written)
}
