//! Stage functions and their composition.
//!
//! Seeds handed to the stages, with `m` the master seed:
//!
//! | stage | seed |
//! |---|---|
//! | synthetic table, tier `i` | `derive_seed(m, "synth-table", i)` |
//! | train/test split | `derive_seed(m, "split", 0)` |
//! | elbow fit at `k` | `derive_seed(m, "elbow", k)` |
//! | k-means restart `r` of a fit seeded `s` | `derive_seed(s, "kmeans-restart", r)` |
//! | CV folds of cluster `c` | `derive_seed(m, "cv", c)` |
//! | CV folds of shared tuning | `derive_seed(m, "cv", u64::MAX)` |

use ndarray::Array2;

use super::config::{ClusterSpace, ClusteringConfig, Components, PcaConfig, PipelineConfig, ScalingConfig};
use super::evaluate::evaluate_per_cluster;
use super::feedback::rank_clusters;
use super::report::{Assignment, ClusterReport, Part, EvaluationReport, KSilhouette, KSource, Provenance, RowCounts, RunOutput};
use super::stats::cluster_stats;
use super::synthetic::generate;
use super::{PipelineError, Result};
use crate::cluster::{assign, elbow_scan, kmeans_fit, silhouette, ElbowCurve, KMeansModel, KMeansParams};
use crate::reduce::{choose_components, fit_pca, PcaModel};
use crate::seed::derive_seed;
use crate::tabular::{drop_nulls, feature_matrix_with, load_csv, split_indices, QualityDataset, ScalingParams};

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: QualityDataset,
    pub loaded: usize,
    pub removed: usize,
    /// Planted tier of each row for synthetic data.
    pub tiers: Option<Vec<usize>>,
}

/// Reads (or generates) the dataset and drops rows with nulls.
pub fn load_stage(cfg: &PipelineConfig, seed: u64) -> Result<LoadedData> {
    let err = |e: crate::tabular::TabularError| PipelineError::stage("load", e);
    match (&cfg.data.path, &cfg.data.synthetic) {
        (Some(path), None) => {
            let mut raw = load_csv(path).map_err(err)?;
            raw.name = cfg.name.clone();
            let loaded = raw.len();
            let (dataset, removed) = drop_nulls(&raw).map_err(err)?;
            Ok(LoadedData { dataset, loaded, removed, tiers: None })
        }
        (None, Some(spec)) => {
            let g = generate(&cfg.name, spec, seed)?;
            Ok(LoadedData {
                loaded: g.dataset.len(),
                dataset: g.dataset,
                removed: 0,
                tiers: Some(g.tiers),
            })
        }
        _ => Err(PipelineError::Config("set exactly one of `data.path` and `data.synthetic`".into())),
    }
}

/// Row indices of the train and test parts.
pub fn split_stage(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    split_indices(n, test_fraction, derive_seed(seed, "split", 0)).map_err(|e| PipelineError::stage("split", e))
}

#[derive(Debug, Clone)]
pub struct ScaledData {
    pub columns: Vec<String>,
    pub params: ScalingParams,
    pub train: Array2<f64>,
    pub test: Array2<f64>,
    /// Test values clamped into the training range.
    pub clamped: usize,
    pub y_train: Vec<f64>,
    pub y_test: Vec<f64>,
}

/// Fits scaling on the training rows and applies it to both parts.
pub fn scale_stage(
    train: &QualityDataset,
    test: &QualityDataset,
    columns: &[String],
    cfg: ScalingConfig,
) -> Result<ScaledData> {
    let err = |e: crate::tabular::TabularError| PipelineError::stage("scale", e);
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let ftr = feature_matrix_with(train, &cols).map_err(err)?;
    let fte = feature_matrix_with(test, &cols).map_err(err)?;
    let params = ScalingParams::fit(ftr.x.view(), &ftr.columns, cfg.standardize, cfg.normalize).map_err(err)?;
    let (xtr, _) = params.transform(ftr.x.view()).map_err(err)?;
    let (xte, clamped) = params.transform(fte.x.view()).map_err(err)?;
    if clamped > 0 {
        log::warn!("scale: {clamped} test values clamped into the training range");
    }
    Ok(ScaledData {
        columns: ftr.columns,
        params,
        train: xtr,
        test: xte,
        clamped,
        y_train: ftr.target.to_vec(),
        y_test: fte.target.to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub pca: PcaModel,
    pub train: Array2<f64>,
    pub test: Array2<f64>,
}

/// PCA fitted on the training rows. With `components = "auto"` the count is
/// the smallest whose cumulative ratio exceeds the threshold.
pub fn project_stage(train: &Array2<f64>, test: &Array2<f64>, cfg: PcaConfig) -> Result<Projection> {
    let err = |e: crate::reduce::ReduceError| PipelineError::stage("pca", e);
    let d = train.ncols();
    let m = match cfg.components {
        Components::Fixed(m) => m.min(d),
        Components::Auto(_) => {
            let full = fit_pca(train.view(), d).map_err(err)?;
            choose_components(&full.variance_ratios, cfg.variance_threshold)
        }
    };
    let pca = fit_pca(train.view(), m).map_err(err)?;
    Ok(Projection {
        train: pca.transform(train.view()).map_err(err)?,
        test: pca.transform(test.view()).map_err(err)?,
        pca,
    })
}

#[derive(Debug, Clone)]
pub struct Clustering {
    pub curve: ElbowCurve,
    pub silhouettes: Vec<KSilhouette>,
    pub selected_k: usize,
    pub k_source: KSource,
    pub model: KMeansModel,
    pub labels_train: Vec<usize>,
    pub labels_test: Vec<usize>,
    /// Mean silhouette of the training rows at the selected k.
    pub silhouette_mean: Option<f64>,
}

/// Elbow proposal validated by silhouette: among the elbow k and its direct
/// neighbours (k >= 2, within the scanned range) the one with the highest
/// mean silhouette wins; ties keep the elbow k, then the smaller k.
pub fn choose_k(curve: &ElbowCurve, silhouettes: &[KSilhouette]) -> (usize, KSource) {
    let e = curve.selected_k;
    let score = |k: usize| silhouettes.iter().find(|s| s.k == k).map(|s| s.mean);
    let Some(mut best_score) = score(e) else {
        return (e, KSource::Elbow);
    };
    let mut best = e;
    for k in [e.saturating_sub(1), e + 1] {
        if let Some(s) = score(k) {
            if s > best_score || (s == best_score && best != e && k < best) {
                best = k;
                best_score = s;
            }
        }
    }
    if best == e {
        (e, KSource::Elbow)
    } else {
        (best, KSource::Silhouette)
    }
}

/// Elbow scan over the configured range, silhouette of every k >= 2 in the
/// range, k selection, and assignment of the test rows.
pub fn cluster_stage(
    train: &Array2<f64>,
    test: &Array2<f64>,
    cfg: &ClusteringConfig,
    seed: u64,
) -> Result<Clustering> {
    let err = |e: crate::cluster::ClusterError| PipelineError::stage("cluster", e);
    let n = train.nrows();
    let k_max = cfg.k_max.min(n);
    if k_max < cfg.k_max {
        log::warn!("cluster: k_max lowered from {} to {n} training rows", cfg.k_max);
    }
    if cfg.k_min > k_max {
        return Err(PipelineError::stage("cluster", format!("k_min {} exceeds {n} training rows", cfg.k_min)));
    }
    let base = KMeansParams {
        n_init: cfg.n_init,
        max_iter: cfg.max_iter,
        tol: cfg.tol,
        ..KMeansParams::new(cfg.k_min, seed)
    };
    let scan = elbow_scan(train.view(), cfg.k_min, k_max, &base).map_err(err)?;
    let mut silhouettes = Vec::new();
    for m in &scan.models {
        if m.k >= 2 {
            let mean = silhouette(train.view(), &m.labels).map_err(err)?.mean;
            silhouettes.push(KSilhouette { k: m.k, mean });
        }
    }
    let (selected_k, k_source) = match cfg.k {
        Some(k) => (k, KSource::Override),
        None => choose_k(&scan.curve, &silhouettes),
    };
    let model = match scan.model_for(selected_k) {
        Some(m) => m.clone(),
        None => {
            let p = KMeansParams {
                k: selected_k,
                seed: derive_seed(seed, "elbow", selected_k as u64),
                ..base
            };
            kmeans_fit(train.view(), &p).map_err(err)?
        }
    };
    let labels_train = model.labels.clone();
    let labels_test = assign(&model, test.view()).map_err(err)?;
    let silhouette_mean = match silhouettes.iter().find(|s| s.k == selected_k) {
        Some(s) => Some(s.mean),
        None if selected_k >= 2 => Some(silhouette(train.view(), &labels_train).map_err(err)?.mean),
        None => None,
    };
    Ok(Clustering {
        curve: scan.curve,
        silhouettes,
        selected_k,
        k_source,
        model,
        labels_train,
        labels_test,
        silhouette_mean,
    })
}

/// Runs every stage in order and assembles the report and feedback.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let seed = cfg.master_seed()?;
    let data = load_stage(cfg, seed)?;
    let ds = &data.dataset;
    let (train_idx, test_idx) = split_stage(ds.len(), cfg.split.test_fraction, seed)?;
    let train = ds.select(&train_idx);
    let test = ds.select(&test_idx);

    let scaled = scale_stage(&train, &test, &cfg.features.clustering, cfg.scaling)?;
    let (space_train, space_test, pca) = match cfg.clustering.space {
        ClusterSpace::Pca => {
            let p = project_stage(&scaled.train, &scaled.test, cfg.pca)?;
            (p.train, p.test, Some(p.pca))
        }
        ClusterSpace::Scaled => (scaled.train.clone(), scaled.test.clone(), None),
    };
    let clustering = cluster_stage(&space_train, &space_test, &cfg.clustering, seed)?;

    let regression = if cfg.features.regression == cfg.features.clustering {
        scaled.clone()
    } else {
        scale_stage(&train, &test, &cfg.features.regression, cfg.scaling)?
    };
    let k = clustering.selected_k;
    let evaluation = evaluate_per_cluster(
        regression.train.view(),
        &regression.y_train,
        regression.test.view(),
        &regression.y_test,
        &clustering.labels_train,
        &clustering.labels_test,
        k,
        &cfg.model,
        seed,
    )?;

    let mut labels = vec![0; ds.len()];
    for (&row, &l) in train_idx.iter().zip(&clustering.labels_train) {
        labels[row] = l;
    }
    for (&row, &l) in test_idx.iter().zip(&clustering.labels_test) {
        labels[row] = l;
    }
    let clusters = evaluation
        .clusters
        .into_iter()
        .map(|model| {
            let stats = cluster_stats(ds, &labels, model.cluster);
            ClusterReport {
                cluster: model.cluster,
                size: model.n_train + model.n_test,
                stats,
                model,
            }
        })
        .collect();

    let report = EvaluationReport {
        dataset: cfg.name.clone(),
        provenance: Provenance {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config_hash: cfg.hash(),
        },
        rows: RowCounts {
            loaded: data.loaded,
            removed_nulls: data.removed,
            used: ds.len(),
            train: train_idx.len(),
            test: test_idx.len(),
        },
        features: scaled.columns.clone(),
        clamped_test_values: scaled.clamped,
        scaling: scaled.params.clone(),
        pca,
        clustering_space: cfg.clustering.space,
        elbow: clustering.curve,
        silhouette_by_k: clustering.silhouettes,
        selected_k: k,
        k_source: clustering.k_source,
        silhouette_mean: clustering.silhouette_mean,
        centroids: clustering.model.centroids,
        model_family: cfg.model.family,
        shared_params: evaluation.shared_params,
        clusters,
        global_train: evaluation.global_train,
    };
    let feedback = rank_clusters(&report);
    let mut in_test = vec![false; ds.len()];
    test_idx.iter().for_each(|&i| in_test[i] = true);
    let assignments = ds
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| Assignment {
            sequence_id: r.sequence_id.clone(),
            cluster: labels[i],
            part: if in_test[i] { Part::Test } else { Part::Train },
        })
        .collect();
    Ok(RunOutput {
        report,
        feedback,
        assignments,
        tiers: data.tiers,
    })
}
