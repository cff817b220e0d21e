//! Browser bindings for the demo page in `web/`.
//!
//! Each export takes a JSON request and returns a JSON response (or throws a
//! string). The request handlers are plain Rust functions so they can be
//! tested natively.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use qualeval::cluster::{elbow_scan, silhouette, KMeansParams};
use qualeval::models::{fit_gb, fit_svr, r_squared, rmse, GbParams, SvrParams};
use qualeval::seed::{derive_seed, rng};
use qualeval::signal::{
    detect_peak, measure_peak, synthesize_chromatogram, PeakMetrics, PeakQuery, PeakRegion,
    SyntheticPeakSpec, TimeWindow,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct PeakRequest {
    pub sigma: f64,
    pub tau: f64,
    pub noise: f64,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for PeakRequest {
    fn default() -> Self {
        Self {
            sigma: 4.0,
            tau: 3.0,
            noise: 2.0,
            amplitude: 1000.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PeakResponse {
    pub time: Vec<f64>,
    pub intensity: Vec<f64>,
    pub region: PeakRegion,
    pub metrics: PeakMetrics,
}

/// One EMG peak at 150 s on a 300 s trace sampled at 5 Hz.
pub fn peak_demo(req: &PeakRequest) -> Result<PeakResponse, String> {
    let spec = SyntheticPeakSpec {
        tau: req.tau,
        baseline_offset: 10.0,
        noise_sigma: req.noise,
        ..SyntheticPeakSpec::gaussian(150.0, req.amplitude, req.sigma)
    };
    let chrom = synthesize_chromatogram("demo", &[spec], 300.0, 5.0, req.seed).map_err(err)?;
    let window = TimeWindow::new(100.0, 220.0);
    let region = detect_peak(&chrom, window).map_err(err)?;
    let query = PeakQuery {
        idle_window: Some(TimeWindow::new(5.0, 90.0)),
        ..PeakQuery::new(window)
    };
    let metrics = measure_peak(&chrom, &query).map_err(err)?;
    Ok(PeakResponse {
        time: chrom.times().to_vec(),
        intensity: chrom.intensities().to_vec(),
        region,
        metrics,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ClusterRequest {
    pub blobs: usize,
    pub per_blob: usize,
    pub spread: f64,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for ClusterRequest {
    fn default() -> Self {
        Self {
            blobs: 3,
            per_blob: 100,
            spread: 0.1,
            k_max: 8,
            seed: 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ClusterResponse {
    pub points: Vec<[f64; 2]>,
    pub ks: Vec<usize>,
    pub wcss: Vec<f64>,
    /// Mean silhouette per k; `None` at k = 1.
    pub silhouette: Vec<Option<f64>>,
    pub elbow_k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
}

/// Gaussian blobs with centres on a unit circle, then an elbow scan.
pub fn cluster_demo(req: &ClusterRequest) -> Result<ClusterResponse, String> {
    if req.blobs == 0 || req.per_blob == 0 || req.k_max < 2 {
        return Err("need at least one blob, one point per blob and k_max >= 2".into());
    }
    let n = req.blobs * req.per_blob;
    let noise = Normal::new(0.0, req.spread).map_err(err)?;
    let mut r = rng(derive_seed(req.seed, "demo-blobs", 0));
    let mut x = Array2::zeros((n, 2));
    for b in 0..req.blobs {
        let angle = std::f64::consts::TAU * b as f64 / req.blobs as f64;
        for i in 0..req.per_blob {
            let row = b * req.per_blob + i;
            x[[row, 0]] = angle.cos() + noise.sample(&mut r);
            x[[row, 1]] = angle.sin() + noise.sample(&mut r);
        }
    }
    let k_max = req.k_max.min(n);
    let scan = elbow_scan(x.view(), 1, k_max, &KMeansParams::new(1, req.seed)).map_err(err)?;
    let silhouette = scan
        .models
        .iter()
        .map(|m| match m.k {
            1 => Ok(None),
            _ => silhouette(x.view(), &m.labels).map(|s| Some(s.mean)),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let chosen = scan.model_for(scan.curve.selected_k).expect("selected k was scanned");
    Ok(ClusterResponse {
        points: x.outer_iter().map(|p| [p[0], p[1]]).collect(),
        ks: scan.curve.ks.clone(),
        wcss: scan.curve.wcss.clone(),
        silhouette,
        elbow_k: scan.curve.selected_k,
        labels: chosen.labels.clone(),
        centroids: chosen.centroids.clone(),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RegressionModel {
    GradientBoost(GbParams),
    Svr(SvrParams),
}

#[derive(Debug, Clone, Deserialize)]
pub struct RegressionRequest {
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
    pub model: RegressionModel,
}

#[derive(Debug, Serialize)]
pub struct RegressionResponse {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub grid: Vec<f64>,
    pub prediction: Vec<f64>,
    pub rmse: f64,
    pub r2: f64,
}

/// Noisy `sin(x)` on `[0, 2 pi]`; metrics are in-sample.
pub fn regression_demo(req: &RegressionRequest) -> Result<RegressionResponse, String> {
    if req.n < 2 {
        return Err("need at least two samples".into());
    }
    let noise = Normal::new(0.0, req.noise).map_err(err)?;
    let mut r = rng(derive_seed(req.seed, "demo-sine", 0));
    let tau = std::f64::consts::TAU;
    let x: Vec<f64> = (0..req.n).map(|_| r.random::<f64>() * tau).collect();
    let y: Vec<f64> = x.iter().map(|v| v.sin() + noise.sample(&mut r)).collect();
    let grid: Vec<f64> = (0..=200).map(|i| tau * i as f64 / 200.0).collect();
    let column = |v: &[f64]| Array2::from_shape_vec((v.len(), 1), v.to_vec()).expect("n x 1");
    let (xs, gs) = (column(&x), column(&grid));
    let (fitted, prediction) = match &req.model {
        RegressionModel::GradientBoost(p) => {
            let m = fit_gb(xs.view(), &y, p).map_err(err)?;
            (m.predict(xs.view()), m.predict(gs.view()))
        }
        RegressionModel::Svr(p) => {
            let m = fit_svr(xs.view(), &y, p).map_err(err)?;
            (m.predict(xs.view()), m.predict(gs.view()))
        }
    };
    Ok(RegressionResponse {
        rmse: rmse(&y, &fitted).map_err(err)?,
        r2: r_squared(&y, &fitted).map_err(err)?,
        x,
        y,
        grid,
        prediction,
    })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn call<Req, Resp>(json: &str, f: impl FnOnce(&Req) -> Result<Resp, String>) -> Result<String, JsValue>
where
    Req: for<'de> Deserialize<'de>,
    Resp: Serialize,
{
    let req: Req = serde_json::from_str(json).map_err(|e| JsValue::from_str(&e.to_string()))?;
    let resp = f(&req).map_err(|e| JsValue::from_str(&e))?;
    serde_json::to_string(&resp).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = peakDemo)]
pub fn peak_demo_js(request: &str) -> Result<String, JsValue> {
    call(request, peak_demo)
}

#[wasm_bindgen(js_name = clusterDemo)]
pub fn cluster_demo_js(request: &str) -> Result<String, JsValue> {
    call(request, cluster_demo)
}

#[wasm_bindgen(js_name = regressionDemo)]
pub fn regression_demo_js(request: &str) -> Result<String, JsValue> {
    call(request, regression_demo)
}
