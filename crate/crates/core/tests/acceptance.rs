//! Acceptance suite. Runs each criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use ndarray::Axis;
use qualeval::cluster::{elbow_scan, kmeans_plus_plus, lloyd, silhouette, KMeansParams};
use qualeval::models::{
    fit_gb, fit_svr, grid_search, kfold_indices, r_squared, rmse, GbParams, ModelFamily,
    ParamGrid, SvrParams,
};
use qualeval::pipeline::{
    choose_k, emit_report, metrics_csv, metrics_markdown, run_pipeline, stats_csv,
    stats_markdown, Direction, KSilhouette, OutputFormat, PipelineConfig, RunOutput,
};
use qualeval::reduce::{choose_components, fit_pca};
use qualeval::seed::rng;
use qualeval::signal::{
    compute_area, compute_skewness, detect_peak, estimate_noise, synthesize_chromatogram,
    PeakRegion, SyntheticPeakSpec, TimeWindow,
};
use rand::Rng;

mod common;
use common::*;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure!(t < limit, "took {:.1?}, limit {:?}", t, limit);
    Ok(())
}

fn signal() -> Check {
    let start = Instant::now();
    let zero = |r: PeakRegion| vec![0.0; r.len()];

    let c = synthesize_chromatogram("g", &[SyntheticPeakSpec::gaussian(50.0, 100.0, 2.0)], 100.0, 10.0, 0)
        .map_err(|e| e.to_string())?;
    let r = detect_peak(&c, TimeWindow::new(30.0, 70.0)).map_err(|e| e.to_string())?;
    let s = compute_skewness(&c, r, &zero(r), 0.5).map_err(|e| e.to_string())?;
    ensure!((s - 1.0).abs() < 1e-6, "gaussian skewness {s}");

    let oracle = dense_grid_skewness(1.0, 2.0);
    let spec = SyntheticPeakSpec { tau: 2.0, ..SyntheticPeakSpec::gaussian(40.0, 100.0, 1.0) };
    let c = synthesize_chromatogram("e", &[spec], 100.0, 100.0, 0).map_err(|e| e.to_string())?;
    let r = detect_peak(&c, TimeWindow::new(20.0, 80.0)).map_err(|e| e.to_string())?;
    let emg = compute_skewness(&c, r, &zero(r), 0.5).map_err(|e| e.to_string())?;
    ensure!((emg - oracle).abs() < 1e-3, "EMG skewness {emg} vs oracle {oracle}");

    let (a, sigma) = (250.0, 3.0);
    let c = synthesize_chromatogram("a", &[SyntheticPeakSpec::gaussian(100.0, a, sigma)], 200.0, 20.0, 0)
        .map_err(|e| e.to_string())?;
    let r = PeakRegion { left: 1520, apex: 2000, right: 2480 };
    let area = compute_area(&c, r, &zero(r)).map_err(|e| e.to_string())?;
    let exact = a * sigma * (2.0 * std::f64::consts::PI).sqrt();
    ensure!((area / exact - 1.0).abs() < 1e-3, "area {area} vs {exact}");

    let spec = SyntheticPeakSpec {
        noise_sigma: 0.5,
        baseline_offset: 3.0,
        ..SyntheticPeakSpec::gaussian(5000.0, 1e-300, 1.0)
    };
    let c = synthesize_chromatogram("n", &[spec], 1000.0, 10.0, 42).map_err(|e| e.to_string())?;
    let noise = estimate_noise(&c, TimeWindow::new(0.0, 999.9)).map_err(|e| e.to_string())?.value();
    ensure!((noise / 0.5 - 1.0).abs() < 0.04, "noise {noise} vs 0.5");

    within(Duration::from_secs(10), start)?;
    Ok(format!("skew {s:.9}, EMG {emg:.6} vs {oracle:.6}, area err {:.2e}, noise {noise:.4}", area / exact - 1.0))
}

fn pca() -> Check {
    let mut worst_ortho: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for seed in 0..5 {
        let x = correlated(250, 5, seed);
        let p = fit_pca(x.view(), 5).map_err(|e| e.to_string())?;
        for (i, a) in p.components.iter().enumerate() {
            for (j, b) in p.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
                worst_ortho = worst_ortho.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let z = p.transform(x.view()).map_err(|e| e.to_string())?;
        for (j, want) in covariance_eigenvalues(x.view()).iter().enumerate() {
            worst_var = worst_var.max((sample_variance(&z.column(j).to_vec()) - want).abs());
        }
    }
    ensure!(worst_ortho < 1e-8, "orthonormality error {worst_ortho}");
    ensure!(worst_var < 1e-8, "variance vs eigenvalue error {worst_var}");
    let n = choose_components(&[0.7, 0.2, 0.1], 0.8);
    ensure!(n == 2, "choose_components gave {n}");
    Ok(format!("ortho err {worst_ortho:.1e}, variance err {worst_var:.1e}, components 2"))
}

fn clustering() -> Check {
    let start = Instant::now();
    for seed in 0..100 {
        let x = random_matrix(80, 3, seed);
        let init = kmeans_plus_plus(x.view(), 2 + seed as usize % 6, &mut rng(seed));
        let run = lloyd(x.view(), init, 300, 0.0);
        ensure!(
            run.inertia_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
            "inertia rose on fixture {seed}"
        );
    }
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let x = random_matrix(120, 2, seed);
        let m = qualeval::cluster::kmeans_fit(x.view(), &KMeansParams::new(4, seed)).map_err(|e| e.to_string())?;
        let fast = silhouette(x.view(), &m.labels).map_err(|e| e.to_string())?;
        for (a, b) in fast.values.iter().zip(naive_silhouette(x.view(), &m.labels)) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure!(worst < 1e-12, "silhouette differs from naive by {worst}");

    let (x, truth) = blobs(&UNIT_TRIANGLE, 200, 0.05, 2024);
    let scan = elbow_scan(x.view(), 1, 10, &KMeansParams::new(1, 2024)).map_err(|e| e.to_string())?;
    let sils: Vec<KSilhouette> = scan
        .models
        .iter()
        .filter(|m| m.k >= 2)
        .map(|m| KSilhouette { k: m.k, mean: silhouette(x.view(), &m.labels).unwrap().mean })
        .collect();
    let (k, _) = choose_k(&scan.curve, &sils);
    ensure!(k == 3, "three blobs selected k = {k}");
    let errors = label_errors(&truth, &scan.model_for(3).unwrap().labels, 3);
    ensure!(errors == 0, "{errors} label errors");
    let mean = sils.iter().find(|s| s.k == 3).unwrap().mean;
    ensure!(mean >= 0.8, "mean silhouette {mean}");

    within(Duration::from_secs(30), start)?;
    Ok(format!("silhouette err {worst:.1e}, blobs k = 3, 0 errors, mean silhouette {mean:.3}"))
}

fn noisy_target(x: &ndarray::Array2<f64>, seed: u64) -> Vec<f64> {
    let mut r = chacha(seed);
    x.outer_iter()
        .map(|row| (3.0 * row[0]).sin() + row[1] * row[1] + 0.1 * (r.random::<f64>() - 0.5))
        .collect()
}

fn models() -> Check {
    let start = Instant::now();
    let e = |e: qualeval::models::ModelError| e.to_string();
    for seed in 0..20 {
        let x = random_matrix(120, 3, seed);
        let y = noisy_target(&x, seed);
        let p = GbParams { max_depth: 1 + seed as usize % 4, n_estimators: 60, ..GbParams::default() };
        let m = fit_gb(x.view(), &y, &p).map_err(e)?;
        ensure!(m.train_rmse.windows(2).all(|w| w[1] <= w[0] + 1e-12), "GB train RMSE rose on fixture {seed}");
    }

    let x = random_matrix(200, 3, 77);
    let y = x.column(0).to_vec();
    let m = fit_gb(x.view(), &y, &GbParams::default()).map_err(e)?;
    let (fit, sd) = (rmse(&y, &m.predict(x.view())).map_err(e)?, sample_variance(&y).sqrt());
    ensure!(fit < 0.05 * sd, "GB on y = x1: RMSE {fit} vs sd {sd}");

    let mut worst_kkt: f64 = 0.0;
    for (i, (c, g, eps)) in [(1.0, 0.5, 0.1), (10.0, 1.0, 0.05), (100.0, 2.0, 0.01), (0.5, 0.1, 0.2)].into_iter().enumerate() {
        let x = random_matrix(90, 2, 300 + i as u64);
        let y = noisy_target(&x, i as u64);
        let m = fit_svr(x.view(), &y, &SvrParams::new(c, g, eps)).map_err(e)?;
        ensure!(m.converged, "SVR C={c} did not converge");
        ensure!(m.dual_coef.iter().all(|b| b.abs() <= c * (1.0 + 1e-12)), "SVR C={c} leaves the box");
        worst_kkt = worst_kkt.max(svr_kkt_residual(&m, x.view(), &y));
    }
    ensure!(worst_kkt < 1e-3, "KKT residual {worst_kkt}");

    let v = [1.0, 2.0, 3.0, 4.0];
    ensure!(rmse(&v, &v).map_err(e)? == 0.0 && r_squared(&v, &v).map_err(e)? == 1.0, "identical predictions");
    ensure!(r_squared(&v, &[2.5; 4]).map_err(e)? == 0.0, "mean predictor");

    let x = random_matrix(80, 2, 9);
    let y = noisy_target(&x, 9);
    let grid = ParamGrid::new(vec![("max_depth".into(), vec![1.0, 4.0]), ("n_estimators".into(), vec![40.0])]).map_err(e)?;
    let found = grid_search(ModelFamily::GradientBoost, &grid, x.view(), &y, 4, 123).map_err(e)?;
    let folds = kfold_indices(80, 4, 123).map_err(e)?;
    let mut oracle = Vec::new();
    for depth in [1, 4] {
        let p = GbParams { max_depth: depth, n_estimators: 40, ..GbParams::default() };
        let mut total = 0.0;
        for held in &folds {
            let train: Vec<usize> = (0..80).filter(|i| !held.contains(i)).collect();
            let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let m = fit_gb(x.select(Axis(0), &train).view(), &yt, &p).map_err(e)?;
            let truth: Vec<f64> = held.iter().map(|&i| y[i]).collect();
            total += rmse(&truth, &m.predict(x.select(Axis(0), held).view())).map_err(e)?;
        }
        oracle.push(total / 4.0);
    }
    let best = usize::from(oracle[1] < oracle[0]);
    ensure!(found.best_index == best, "grid search picked {} but the oracle picks {best}", found.best_index);

    within(Duration::from_secs(60), start)?;
    Ok(format!("GB fit {:.4}·sd, KKT {worst_kkt:.1e}, grid pick {best}", fit / sd))
}

/// Clusters matched to their majority planted tier (sequence ids start with
/// the tier name), then checked for R² order and an above-mean SNR in the
/// top cluster.
fn tier_outcome(out: &RunOutput) -> Result<(), String> {
    let k = out.report.selected_k;
    ensure!(k == 3, "selected k = {k}");
    let mut majority = Vec::new();
    for c in 0..k {
        let mut counts = [0usize; 3];
        for a in out.assignments.iter().filter(|a| a.cluster == c) {
            counts[["A", "B", "C"].iter().position(|t| a.sequence_id.starts_with(t)).unwrap()] += 1;
        }
        majority.push((0..3).max_by_key(|&t| counts[t]).unwrap());
    }
    ensure!(majority.iter().collect::<HashSet<_>>().len() == 3, "tiers not separated: {majority:?}");
    let r2_of_tier = |t: usize| {
        let c = majority.iter().position(|&m| m == t).unwrap();
        out.report.clusters[c].model.test.map_or(f64::NEG_INFINITY, |m| m.r2)
    };
    let (a, b, c) = (r2_of_tier(0), r2_of_tier(1), r2_of_tier(2));
    ensure!(a > b && b > c, "R² by tier A/B/C = {a:.3}/{b:.3}/{c:.3}");
    let top = out.feedback.ranking[0];
    let fb = out.feedback.clusters.iter().find(|f| f.cluster == top).unwrap();
    ensure!(
        fb.characteristics.iter().any(|ch| ch.feature == "snr" && ch.direction == Direction::Above),
        "top cluster lacks above-mean SNR"
    );
    Ok(())
}

/// The synthetic config with a 16-point subset of the default GB grid. The
/// full 180-point default takes hours over ten seeds.
fn desk_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::synthetic(seed);
    cfg.model.gradient_boost = ParamGrid::new(vec![
        ("max_depth".into(), vec![5.0, 10.0]),
        ("learning_rate".into(), vec![0.01, 0.1]),
        ("n_estimators".into(), vec![100.0, 500.0]),
        ("max_leaf_nodes".into(), vec![5.0, 10.0]),
    ])
    .expect("static grid");
    cfg
}

/// Grid size does not matter for determinism or layout.
fn quick_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::synthetic(seed);
    cfg.model.gradient_boost =
        ParamGrid::new(vec![("max_depth".into(), vec![3.0]), ("max_leaf_nodes".into(), vec![5.0, 10.0])])
            .expect("static grid");
    cfg
}

fn end_to_end() -> Check {
    let start = Instant::now();
    let mut passed = 0;
    let mut misses = Vec::new();
    for seed in 0..10 {
        let out = run_pipeline(&desk_config(seed)).map_err(|e| e.to_string())?;
        match tier_outcome(&out) {
            Ok(()) => passed += 1,
            Err(m) => misses.push(format!("seed {seed}: {m}")),
        }
    }
    ensure!(passed >= 9, "{passed}/10 seeds; {}", misses.join("; "));
    within(Duration::from_secs(300), start)?;
    Ok(format!("{passed}/10 seeds in {:.1?}", start.elapsed()))
}

fn determinism() -> Check {
    let cfg = quick_config(42);
    let (a, b) = (run_pipeline(&cfg).map_err(|e| e.to_string())?, run_pipeline(&cfg).map_err(|e| e.to_string())?);
    ensure!(a.to_json() == b.to_json(), "JSON reports differ");
    let dirs = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let all = [OutputFormat::Json, OutputFormat::Csv, OutputFormat::Md];
    let fa = emit_report(&a, dirs.0.path(), &all).map_err(|e| e.to_string())?;
    let fb = emit_report(&b, dirs.1.path(), &all).map_err(|e| e.to_string())?;
    ensure!(fa.len() == fb.len(), "different file sets");
    for (p, q) in fa.iter().zip(&fb) {
        ensure!(std::fs::read(p).unwrap() == std::fs::read(q).unwrap(), "{} differs", p.display());
    }
    Ok(format!("{} files byte-identical", fa.len()))
}

fn formats() -> Check {
    let out = run_pipeline(&quick_config(3)).map_err(|e| e.to_string())?;
    let rows = ["mean", "std", "min", "25%", "median", "75%", "max"];
    for c in &out.report.clusters {
        let stats = c.stats.as_ref().ok_or("cluster without stats")?;
        let csv: Vec<String> = stats_csv(stats).lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
        ensure!(csv == rows, "CSV rows {csv:?}");
        let md: Vec<String> = stats_markdown(stats)
            .lines()
            .skip(2)
            .map(|l| l.split('|').nth(1).unwrap().trim().trim_matches('*').to_string())
            .collect();
        ensure!(md == rows, "markdown rows {md:?}");
    }
    let header = metrics_csv(&out.report).lines().next().unwrap_or_default().to_string();
    ensure!(header == "cluster,rmse_test,r2_test", "metrics CSV header {header}");
    let md = metrics_markdown(&out.report);
    ensure!(md.starts_with("| Cluster# | RMSE test | R² test |"), "metrics markdown header");
    Ok("seven statistic rows, metric columns cluster/RMSE test/R² test".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("signal oracles", signal),
        ("PCA", pca),
        ("clustering", clustering),
        ("models", models),
        ("synthetic end-to-end", end_to_end),
        ("determinism", determinism),
        ("report formats", formats),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let t = start.elapsed();
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({t:.1?}) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({t:.1?}) {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
