use ndarray::Axis;
use qualeval::cluster::{assign, elbow_scan, silhouette, KMeansParams};
use qualeval::models::{grid_search, ModelFamily, ParamGrid};
use qualeval::pipeline::{
    choose_k, emit_report, metrics_csv, rank_clusters, render_markdown, run_pipeline, stats_csv,
    stats_markdown, synthetic, ClusterStatus, KSilhouette, OutputFormat, PipelineConfig,
    RunOutput, STAT_ROWS,
};
use qualeval::reduce::fit_pca;
use qualeval::seed::derive_seed;
use qualeval::tabular::{feature_matrix_with, split_indices, write_csv, ScalingParams, FEATURES};

fn small(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::synthetic(seed);
    cfg.model.gradient_boost = ParamGrid::new(vec![
        ("max_depth".into(), vec![3.0]),
        ("n_estimators".into(), vec![60.0]),
        ("max_leaf_nodes".into(), vec![5.0, 10.0]),
    ])
    .unwrap();
    cfg
}

#[test]
fn identical_runs_give_identical_json() {
    let a = run_pipeline(&small(5)).unwrap().to_json();
    let b = run_pipeline(&small(5)).unwrap().to_json();
    assert_eq!(a, b);
    let c = run_pipeline(&small(6)).unwrap().to_json();
    assert_ne!(a, c);
}

#[test]
fn json_round_trips() {
    let out = run_pipeline(&small(1)).unwrap();
    let back = RunOutput::from_json(&out.to_json()).unwrap();
    assert_eq!(back.report, out.report);
    assert_eq!(back.feedback, out.feedback);
    assert_eq!(back.assignments, out.assignments);
}

/// Every module called directly with the documented seeds.
#[test]
fn manual_composition_reproduces_the_report() {
    let m = 3;
    let cfg = small(m);
    let out = run_pipeline(&cfg).unwrap();

    let ds = synthetic::generate(&cfg.name, cfg.data.synthetic.as_ref().unwrap(), m).unwrap().dataset;
    let (tr, te) = split_indices(ds.len(), 0.2, derive_seed(m, "split", 0)).unwrap();
    let fm = feature_matrix_with(&ds, &FEATURES).unwrap();
    let (xtr, xte) = (fm.x.select(Axis(0), &tr), fm.x.select(Axis(0), &te));
    let ytr: Vec<f64> = tr.iter().map(|&i| fm.target[i]).collect();
    let yte: Vec<f64> = te.iter().map(|&i| fm.target[i]).collect();
    let scaling = ScalingParams::fit(xtr.view(), &fm.columns, true, true).unwrap();
    let (str_, _) = scaling.transform(xtr.view()).unwrap();
    let (ste, _) = scaling.transform(xte.view()).unwrap();
    let pca = fit_pca(str_.view(), 2).unwrap();
    let (ptr, pte) = (pca.transform(str_.view()).unwrap(), pca.transform(ste.view()).unwrap());

    let scan = elbow_scan(ptr.view(), 1, 10, &KMeansParams::new(1, m)).unwrap();
    let sils: Vec<KSilhouette> = scan
        .models
        .iter()
        .filter(|k| k.k >= 2)
        .map(|k| KSilhouette { k: k.k, mean: silhouette(ptr.view(), &k.labels).unwrap().mean })
        .collect();
    let (k, _) = choose_k(&scan.curve, &sils);
    let model = scan.model_for(k).unwrap();
    let lte = assign(model, pte.view()).unwrap();

    let r = &out.report;
    assert_eq!(r.selected_k, k);
    assert_eq!(r.centroids, model.centroids);
    assert_eq!(r.elbow, scan.curve);
    for c in 0..k {
        let rows: Vec<usize> = (0..tr.len()).filter(|&i| model.labels[i] == c).collect();
        let xc = str_.select(Axis(0), &rows);
        let yc: Vec<f64> = rows.iter().map(|&i| ytr[i]).collect();
        let g = grid_search(ModelFamily::GradientBoost, &cfg.model.gradient_boost, xc.view(), &yc, 5, derive_seed(m, "cv", c as u64)).unwrap();
        let test_rows: Vec<usize> = (0..te.len()).filter(|&i| lte[i] == c).collect();
        let pred = g.model.predict(ste.select(Axis(0), &test_rows).view());
        let truth: Vec<f64> = test_rows.iter().map(|&i| yte[i]).collect();
        let got = r.clusters[c].model.test.unwrap();
        assert_eq!(got.rmse, qualeval::models::rmse(&truth, &pred).unwrap());
        assert_eq!(r.clusters[c].model.best_index, Some(g.best_index));
    }
}

#[test]
fn override_fixes_the_cluster_count() {
    for k in [2, 3, 5] {
        let mut cfg = small(2);
        cfg.clustering.k = Some(k);
        let r = run_pipeline(&cfg).unwrap().report;
        assert_eq!(r.selected_k, k);
        assert_eq!(r.clusters.len(), k);
    }
}

#[test]
fn override_on_a_csv_dataset_in_scaled_space() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic::generate("csv", &synthetic::SyntheticDatasetSpec::default(), 4).unwrap();
    let path = dir.path().join("table.csv");
    write_csv(&data.dataset, std::fs::File::create(&path).unwrap(), None).unwrap();
    let text = format!(
        "seed = 4\n[data]\npath = \"table.csv\"\n[clustering]\nspace = \"scaled\"\nk = 3\n[model.gradient_boost]\nn_estimators = [30]\n"
    );
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, text).unwrap();
    let cfg = PipelineConfig::load(&cfg_path).unwrap();
    let r = run_pipeline(&cfg).unwrap().report;
    assert_eq!(r.clusters.len(), 3);
    assert!(r.pca.is_none());
    assert_eq!(r.rows.used, 900);
}

#[test]
fn missing_data_file_names_the_stage() {
    let cfg = PipelineConfig::from_toml_str("seed = 1\n[data]\npath = \"/nonexistent/table.csv\"\n").unwrap();
    let e = run_pipeline(&cfg).unwrap_err().to_string();
    assert!(e.starts_with("config") && e.contains("/nonexistent/table.csv"), "{e}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "sequence_id,snr\nx,not-a-number\n").unwrap();
    let cfg = PipelineConfig::from_toml_str(&format!("seed = 1\n[data]\npath = {:?}\n", path)).unwrap();
    let e = run_pipeline(&cfg).unwrap_err().to_string();
    assert!(e.starts_with("load"), "{e}");
}

#[test]
fn seed_is_mandatory() {
    let cfg = PipelineConfig::from_toml_str("[data.synthetic]\n").unwrap();
    assert!(run_pipeline(&cfg).is_err());
}

#[test]
fn sizes_ranking_and_report_layout() {
    let out = run_pipeline(&small(8)).unwrap();
    let r = &out.report;
    let train: usize = r.clusters.iter().map(|c| c.model.n_train).sum();
    let test: usize = r.clusters.iter().map(|c| c.model.n_test).sum();
    assert_eq!((train, test), (r.rows.train, r.rows.test));
    assert_eq!(r.clusters.iter().map(|c| c.size).sum::<usize>(), r.rows.used);

    // Ranking reads the report's own R² values.
    let mut ranking = out.feedback.ranking.clone();
    let r2 = |c: usize| r.clusters[c].model.test.map(|m| m.r2);
    assert!(ranking.windows(2).all(|w| r2(w[0]) >= r2(w[1])));
    ranking.sort_unstable();
    assert_eq!(ranking, (0..r.selected_k).collect::<Vec<_>>());

    for c in &r.clusters {
        assert_eq!(c.model.status, ClusterStatus::Modelled);
        let m = c.model.test.unwrap();
        assert!(m.rmse.is_finite() && m.r2.is_finite());
        let stats = c.stats.as_ref().unwrap();
        let csv = stats_csv(stats);
        let labels: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(labels, STAT_ROWS);
        assert_eq!(labels, ["mean", "std", "min", "25%", "median", "75%", "max"]);
        let md = stats_markdown(stats);
        let md_rows: Vec<&str> = md
            .lines()
            .filter(|l| l.starts_with("| ") && !l.starts_with("| statistic"))
            .map(|l| l.trim_start_matches("| ").split(" |").next().unwrap().trim_matches('*'))
            .filter(|l| !l.is_empty())
            .collect();
        assert_eq!(md_rows, STAT_ROWS);
    }
    assert_eq!(metrics_csv(r).lines().next(), Some("cluster,rmse_test,r2_test"));
    assert!(render_markdown(&out).contains("R² test"));
}

#[test]
fn ranking_rules() {
    let mut out = run_pipeline(&small(0)).unwrap();
    let set = |out: &mut RunOutput, r2: [f64; 3]| {
        for (c, v) in out.report.clusters.iter_mut().zip(r2) {
            c.model.test.as_mut().unwrap().r2 = v;
        }
    };
    assert_eq!(out.report.clusters.len(), 3);
    set(&mut out, [0.95, 0.78, 0.03]);
    assert_eq!(rank_clusters(&out.report).ranking, [0, 1, 2]);
    set(&mut out, [0.03, 0.95, 0.78]);
    assert_eq!(rank_clusters(&out.report).ranking, [1, 2, 0]);
    set(&mut out, [0.5; 3]);
    assert_eq!(rank_clusters(&out.report).ranking, [0, 1, 2]);
}

#[test]
fn emitted_files() {
    let out = run_pipeline(&small(9)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&out, dir.path(), &[OutputFormat::Json, OutputFormat::Csv, OutputFormat::Md]).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for want in ["report.json", "metrics.csv", "elbow.csv", "silhouette.csv", "labels.csv", "report.md", "stats_cluster_0.csv"] {
        assert!(names.iter().any(|n| n == want), "{want} missing from {names:?}");
    }
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(json, out.to_json());
    let bad = emit_report(&out, &dir.path().join("report.json/sub"), &[OutputFormat::Json]).unwrap_err();
    assert!(bad.to_string().contains("report.json"), "{bad}");
}
