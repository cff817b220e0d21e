use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use qualeval::pipeline::{
    cluster_stage, cluster_stats, elbow_csv, emit_report, evaluate_per_cluster, load_stage,
    metrics_csv, metrics_markdown, project_stage, run_pipeline, scale_stage, split_stage,
    synthetic, ClusterReport, ClusterSpace, OutputFormat, PerClusterEvaluation, PipelineConfig,
    RunOutput,
};
use qualeval::signal::{
    delta_tr, measure_peak, synthesize_chromatogram, Chromatogram, PeakQuery, TimeWindow,
};
use qualeval::tabular::{self, QualityDataset, QualityRecord};

#[derive(Parser)]
#[command(name = "qualeval", version, about = "Quality-centric evaluation of chromatographic datasets")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config value.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output formats, comma separated: json, csv, md.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Vec<OutputFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured chromatograms and synthetic quality table.
    Synth,
    /// Measure one peak per chromatogram CSV.
    Peaks(PeaksArgs),
    /// Pair replicate peak measurements into a quality table.
    BuildTable(BuildTableArgs),
    /// Split, scale, project and cluster the configured dataset.
    Cluster,
    /// Model each cluster given a labels file from `cluster`.
    Evaluate(EvaluateArgs),
    /// Run the full pipeline and write the report.
    Run,
    /// Re-render a stored JSON report.
    Report(ReportArgs),
}

#[derive(Args)]
struct PeaksArgs {
    /// Chromatogram CSV files (`time_s,intensity`).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Search window in seconds: START,END.
    #[arg(long, value_parser = parse_window)]
    window: TimeWindow,
    /// Idle window for noise in seconds: START,END.
    #[arg(long, value_parser = parse_window)]
    idle: Option<TimeWindow>,
    /// Height fraction for skewness.
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
}

#[derive(Args)]
struct BuildTableArgs {
    /// Peak metrics CSV written by `peaks`.
    #[arg(long)]
    peaks: PathBuf,
    /// Pairing CSV: sequence_id,run1,run2,length,sulfur_count[,injection_volume].
    #[arg(long)]
    pairs: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Labels CSV written by `cluster`.
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Stored `report.json`.
    input: PathBuf,
}

fn parse_window(s: &str) -> std::result::Result<TimeWindow, String> {
    let (a, b) = s.split_once(',').ok_or("expected START,END")?;
    let start: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let end: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(start < end) {
        return Err(format!("window start {start} must be below end {end}"));
    }
    Ok(TimeWindow::new(start, end))
}

impl Global {
    fn load_config(&self) -> Result<PipelineConfig> {
        let path = self.config.as_ref().ok_or_else(|| anyhow!("--config is required"))?;
        let mut cfg = PipelineConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: Option<&PipelineConfig>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn formats(&self) -> Vec<OutputFormat> {
        if self.format.is_empty() {
            vec![OutputFormat::Json, OutputFormat::Csv, OutputFormat::Md]
        } else {
            self.format.clone()
        }
    }
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", path.display());
    Ok(path)
}

fn synth(g: &Global) -> Result<()> {
    let cfg = g.load_config()?;
    let seed = cfg.master_seed()?;
    let dir = g.out_dir(Some(&cfg));
    std::fs::create_dir_all(&dir)?;
    for spec in &cfg.synth.chromatograms {
        let c = synthesize_chromatogram(&spec.id, &spec.peaks, spec.duration, spec.sample_rate, seed)
            .with_context(|| format!("chromatogram `{}`", spec.id))?;
        let path = dir.join(format!("{}.csv", spec.id));
        c.write_csv(&path)?;
        println!("{}", path.display());
    }
    if let Some(spec) = &cfg.data.synthetic {
        let data = synthetic::generate(&cfg.name, spec, seed)?;
        let path = dir.join("dataset.csv");
        let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        tabular::write_csv(&data.dataset, file, Some(("tier", &data.tiers)))?;
        println!("{}", path.display());
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct PeakRow {
    chromatogram: String,
    retention_time: f64,
    height: f64,
    snr: f64,
    skewness: f64,
    area: f64,
}

fn peaks(g: &Global, a: &PeaksArgs) -> Result<()> {
    let mut out: Box<dyn Write> = match &g.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Box::new(File::create(dir.join("peaks.csv"))?)
        }
        None => Box::new(std::io::stdout()),
    };
    let mut wtr = csv::Writer::from_writer(&mut out);
    let query = PeakQuery {
        search_window: a.window,
        idle_window: a.idle,
        fraction: a.fraction,
    };
    for path in &a.inputs {
        let chrom = Chromatogram::read_csv(path).with_context(|| format!("reading {}", path.display()))?;
        let m = measure_peak(&chrom, &query).with_context(|| format!("measuring {}", path.display()))?;
        wtr.serialize(PeakRow {
            chromatogram: chrom.id().to_string(),
            retention_time: m.retention_time,
            height: m.height,
            snr: m.snr,
            skewness: m.skewness,
            area: m.area,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PairRow {
    sequence_id: String,
    run1: String,
    run2: String,
    length: u32,
    sulfur_count: u32,
    #[serde(default)]
    injection_volume: Option<f64>,
}

/// Replicate pairing: ΔtR is run1 minus run2; SNR, skewness, area and the
/// retention time are the means of the two runs.
fn build_table(g: &Global, a: &BuildTableArgs) -> Result<()> {
    let mut peaks = HashMap::new();
    for row in csv::Reader::from_path(&a.peaks)?.deserialize() {
        let row: PeakRow = row?;
        peaks.insert(row.chromatogram.clone(), row);
    }
    let mut records = Vec::new();
    for row in csv::Reader::from_path(&a.pairs)?.deserialize() {
        let p: PairRow = row?;
        let get = |id: &str| peaks.get(id).ok_or_else(|| anyhow!("no peak row for chromatogram `{id}`"));
        let (r1, r2) = (get(&p.run1)?, get(&p.run2)?);
        records.push(QualityRecord {
            sequence_id: p.sequence_id,
            delta_tr: Some(delta_tr(r1.retention_time, r2.retention_time)),
            snr: Some(0.5 * (r1.snr + r2.snr)),
            skewness: Some(0.5 * (r1.skewness + r2.skewness)),
            peak_area: Some(0.5 * (r1.area + r2.area)),
            length: Some(p.length),
            sulfur_count: Some(p.sulfur_count),
            injection_volume: p.injection_volume,
            retention_time: Some(0.5 * (r1.retention_time + r2.retention_time)),
        });
    }
    let ds = QualityDataset::new("table", records);
    match &g.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join("table.csv");
            tabular::write_csv(&ds, File::create(&path)?, None)?;
            println!("{}", path.display());
        }
        None => tabular::write_csv(&ds, std::io::stdout(), None)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterSummary<'a> {
    dataset: &'a str,
    seed: u64,
    selected_k: usize,
    k_source: qualeval::pipeline::KSource,
    silhouette_mean: Option<f64>,
    elbow: &'a qualeval::ElbowCurve,
    centroids: &'a [Vec<f64>],
}

fn cluster(g: &Global) -> Result<()> {
    let cfg = g.load_config()?;
    cfg.validate()?;
    let seed = cfg.master_seed()?;
    let dir = g.out_dir(Some(&cfg));
    let data = load_stage(&cfg, seed)?;
    let ds = &data.dataset;
    let (tr, te) = split_stage(ds.len(), cfg.split.test_fraction, seed)?;
    let (train, test) = (ds.select(&tr), ds.select(&te));
    let scaled = scale_stage(&train, &test, &cfg.features.clustering, cfg.scaling)?;
    let (xtr, xte) = match cfg.clustering.space {
        ClusterSpace::Pca => {
            let p = project_stage(&scaled.train, &scaled.test, cfg.pca)?;
            (p.train, p.test)
        }
        ClusterSpace::Scaled => (scaled.train, scaled.test),
    };
    let c = cluster_stage(&xtr, &xte, &cfg.clustering, seed)?;

    let mut labels = String::from("sequence_id,part,cluster\n");
    let mut rows: Vec<(usize, &str, usize)> = tr
        .iter()
        .zip(&c.labels_train)
        .map(|(&i, &l)| (i, "train", l))
        .chain(te.iter().zip(&c.labels_test).map(|(&i, &l)| (i, "test", l)))
        .collect();
    rows.sort_unstable();
    for (i, part, l) in rows {
        labels.push_str(&format!("{},{part},{l}\n", ds.records[i].sequence_id));
    }
    let formats = g.formats();
    if formats.contains(&OutputFormat::Csv) {
        write(&dir, "labels.csv", &labels)?;
        write(&dir, "elbow.csv", &elbow_csv(&c.curve))?;
        let mut sil = String::from("k,mean_silhouette,selected\n");
        for p in &c.silhouettes {
            sil.push_str(&format!("{},{},{}\n", p.k, p.mean, u8::from(p.k == c.selected_k)));
        }
        write(&dir, "silhouette.csv", &sil)?;
    }
    if formats.contains(&OutputFormat::Json) {
        let summary = ClusterSummary {
            dataset: &cfg.name,
            seed,
            selected_k: c.selected_k,
            k_source: c.k_source,
            silhouette_mean: c.silhouette_mean,
            elbow: &c.curve,
            centroids: &c.model.centroids,
        };
        write(&dir, "clustering.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    }
    if formats.contains(&OutputFormat::Md) {
        let mut md = format!("# Clustering: {}\n\nk = {} ({:?})\n\n| k | WCSS |\n|---:|---:|\n", cfg.name, c.selected_k, c.k_source);
        for (k, w) in c.curve.ks.iter().zip(&c.curve.wcss) {
            md.push_str(&format!("| {k} | {w:.4} |\n"));
        }
        write(&dir, "clustering.md", &md)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    sequence_id: String,
    part: String,
    cluster: usize,
}

fn evaluate(g: &Global, a: &EvaluateArgs) -> Result<()> {
    let cfg = g.load_config()?;
    cfg.validate()?;
    let seed = cfg.master_seed()?;
    let dir = g.out_dir(Some(&cfg));
    let data = load_stage(&cfg, seed)?;
    let ds = &data.dataset;
    let index: HashMap<&str, usize> = ds.records.iter().enumerate().map(|(i, r)| (r.sequence_id.as_str(), i)).collect();

    let (mut tr, mut te, mut ltr, mut lte) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut labels = vec![usize::MAX; ds.len()];
    for row in csv::Reader::from_path(&a.labels).with_context(|| format!("reading {}", a.labels.display()))?.deserialize() {
        let row: LabelRow = row?;
        let &i = index
            .get(row.sequence_id.as_str())
            .ok_or_else(|| anyhow!("label for unknown sequence `{}`", row.sequence_id))?;
        labels[i] = row.cluster;
        match row.part.as_str() {
            "train" => {
                tr.push(i);
                ltr.push(row.cluster);
            }
            "test" => {
                te.push(i);
                lte.push(row.cluster);
            }
            other => bail!("unknown part `{other}` for `{}`", row.sequence_id),
        }
    }
    if tr.is_empty() || te.is_empty() {
        bail!("labels file needs both train and test rows");
    }
    let k = ltr.iter().chain(&lte).max().map_or(0, |m| m + 1);
    let (train, test) = (ds.select(&tr), ds.select(&te));
    let scaled = scale_stage(&train, &test, &cfg.features.regression, cfg.scaling)?;
    let ev: PerClusterEvaluation = evaluate_per_cluster(
        scaled.train.view(),
        &scaled.y_train,
        scaled.test.view(),
        &scaled.y_test,
        &ltr,
        &lte,
        k,
        &cfg.model,
        seed,
    )?;

    let rows: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] != usize::MAX).collect();
    let labelled = ds.select(&rows);
    let sub_labels: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
    let clusters: Vec<ClusterReport> = ev
        .clusters
        .iter()
        .map(|m| ClusterReport {
            cluster: m.cluster,
            size: m.n_train + m.n_test,
            stats: cluster_stats(&labelled, &sub_labels, m.cluster),
            model: m.clone(),
        })
        .collect();

    // The metric renderers take a full report; fill only what they read.
    let mut shell = qualeval::pipeline::EvaluationReport {
        dataset: cfg.name.clone(),
        provenance: qualeval::pipeline::Provenance {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config_hash: cfg.hash(),
        },
        rows: qualeval::pipeline::RowCounts { loaded: data.loaded, removed_nulls: data.removed, used: rows.len(), train: tr.len(), test: te.len() },
        features: scaled.columns.clone(),
        clamped_test_values: scaled.clamped,
        scaling: scaled.params.clone(),
        pca: None,
        clustering_space: cfg.clustering.space,
        elbow: qualeval::ElbowCurve { ks: vec![k], wcss: vec![0.0], selected_k: k, low_curvature: false, degenerate: true },
        silhouette_by_k: Vec::new(),
        selected_k: k,
        k_source: qualeval::pipeline::KSource::Override,
        silhouette_mean: None,
        centroids: Vec::new(),
        model_family: cfg.model.family,
        shared_params: ev.shared_params,
        clusters,
        global_train: ev.global_train,
    };
    shell.clusters.sort_by_key(|c| c.cluster);
    for f in g.formats() {
        match f {
            OutputFormat::Csv => {
                write(&dir, "metrics.csv", &metrics_csv(&shell))?;
                write(&dir, "cv_scores.csv", &qualeval::pipeline::cv_scores_csv(&shell))?;
            }
            OutputFormat::Md => {
                write(&dir, "metrics.md", &metrics_markdown(&shell))?;
            }
            OutputFormat::Json => {
                write(&dir, "evaluation.json", &(serde_json::to_string_pretty(&ev)? + "\n"))?;
            }
        }
    }
    Ok(())
}

fn run(g: &Global) -> Result<()> {
    let cfg = g.load_config()?;
    let dir = g.out_dir(Some(&cfg));
    let out = run_pipeline(&cfg)?;
    for p in emit_report(&out, &dir, &g.formats())? {
        println!("{}", p.display());
    }
    let r = &out.report;
    eprintln!("k = {} ({:?}); ranking {:?}", r.selected_k, r.k_source, out.feedback.ranking);
    Ok(())
}

fn report(g: &Global, a: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let out = RunOutput::from_json(&text)?;
    let dir = g.out_dir(None);
    for p in emit_report(&out, &dir, &g.formats())? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    match &cli.command {
        Command::Synth => synth(g),
        Command::Peaks(a) => peaks(g, a),
        Command::BuildTable(a) => build_table(g, a),
        Command::Cluster => cluster(g),
        Command::Evaluate(a) => evaluate(g, a),
        Command::Run => run(g),
        Command::Report(a) => report(g, a),
    }
}

