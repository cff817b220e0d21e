use std::collections::BTreeMap;
use std::fmt;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::gb::{fit_gb, GbParams, GradientBoostRegressor};
use super::metrics::rmse;
use super::svr::{fit_svr, SvrModel, SvrParams};
use super::{check_xy, ModelError, Result};
use crate::seed::rng;

/// `n` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    GradientBoost,
    Svr,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::GradientBoost => "gradient_boost",
            Self::Svr => "svr",
        }
    }

    fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Self::GradientBoost => &["max_depth", "learning_rate", "n_estimators", "max_leaf_nodes"],
            Self::Svr => &["C", "gamma", "epsilon"],
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named candidate lists. Combinations are enumerated row-major in
/// declaration order: the last parameter varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    params: Vec<(String, Vec<f64>)>,
}

impl ParamGrid {
    pub fn new(params: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if params.is_empty() {
            return Err(ModelError::InvalidGrid("no parameters".into()));
        }
        for (i, (name, values)) in params.iter().enumerate() {
            if values.is_empty() {
                return Err(ModelError::InvalidGrid(format!("`{name}` has no candidate values")));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::InvalidGrid(format!("`{name}` has a non-finite value")));
            }
            if params[..i].iter().any(|(other, _)| other == name) {
                return Err(ModelError::InvalidGrid(format!("`{name}` listed twice")));
            }
        }
        Ok(Self { params })
    }

    /// Gradient boosting search space of the reference study.
    pub fn gradient_boost_default() -> Self {
        Self::new(vec![
            ("max_depth".into(), vec![5.0, 10.0, 15.0, 20.0, 50.0]),
            ("learning_rate".into(), vec![0.001, 0.01, 0.1, 0.2]),
            ("n_estimators".into(), vec![100.0, 500.0, 1000.0]),
            ("max_leaf_nodes".into(), vec![2.0, 5.0, 10.0]),
        ])
        .expect("static grid")
    }

    /// SVR search space: C on 50 even steps over [1, 1000], epsilon on 10
    /// even steps over [1e-4, 2e-4].
    pub fn svr_default() -> Self {
        Self::new(vec![
            ("C".into(), linspace(1.0, 1000.0, 50)),
            ("gamma".into(), vec![0.1, 0.01, 0.001]),
            ("epsilon".into(), linspace(1e-4, 2e-4, 10)),
        ])
        .expect("static grid")
    }

    pub fn default_for(family: ModelFamily) -> Self {
        match family {
            ModelFamily::GradientBoost => Self::gradient_boost_default(),
            ModelFamily::Svr => Self::svr_default(),
        }
    }

    pub fn params(&self) -> &[(String, Vec<f64>)] {
        &self.params
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.params.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `index`-th combination in row-major order.
    pub fn combination(&self, mut index: usize) -> Vec<(String, f64)> {
        let mut out = vec![(String::new(), 0.0); self.params.len()];
        for (slot, (name, values)) in out.iter_mut().zip(&self.params).rev() {
            *slot = (name.clone(), values[index % values.len()]);
            index /= values.len();
        }
        out
    }

    pub fn combinations(&self) -> impl Iterator<Item = Vec<(String, f64)>> + '_ {
        (0..self.len()).map(|i| self.combination(i))
    }

    /// Rejects parameter names the family does not know.
    pub fn check_family(&self, family: ModelFamily) -> Result<()> {
        let known = family.parameter_names();
        for name in self.names() {
            if !known.contains(&name) {
                return Err(ModelError::InvalidGrid(format!(
                    "`{name}` is not a {family} parameter (expected one of {known:?})"
                )));
            }
        }
        Ok(())
    }
}

impl Serialize for ParamGrid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.params.len()))?;
        for (name, values) in &self.params {
            map.serialize_entry(name, values)?;
        }
        map.end()
    }
}

/// Candidate values in a config file: an explicit list or an even spacing.
#[derive(Deserialize)]
#[serde(untagged)]
enum Candidates {
    List(Vec<f64>),
    Spaced { linspace: (f64, f64, usize) },
}

impl<'de> Deserialize<'de> for ParamGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct GridVisitor;
        impl<'de> Visitor<'de> for GridVisitor {
            type Value = ParamGrid;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map of parameter name to a list of values or {linspace = [start, stop, n]}")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<ParamGrid, A::Error> {
                let mut params = Vec::new();
                while let Some((name, c)) = map.next_entry::<String, Candidates>()? {
                    let values = match c {
                        Candidates::List(v) => v,
                        Candidates::Spaced { linspace: (a, b, n) } => linspace(a, b, n),
                    };
                    params.push((name, values));
                }
                ParamGrid::new(params).map_err(serde::de::Error::custom)
            }
        }
        d.deserialize_map(GridVisitor)
    }
}

/// Concrete hyperparameters of one family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    GradientBoost(GbParams),
    Svr(SvrParams),
}

fn as_count(name: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= 1e9 {
        Ok(v as usize)
    } else {
        Err(ModelError::InvalidParameter(format!("`{name}` must be a positive integer, got {v}")))
    }
}

impl ModelParams {
    /// Builds parameters from a grid combination; names absent from the
    /// combination keep the family defaults.
    pub fn from_combination(family: ModelFamily, combo: &[(String, f64)]) -> Result<Self> {
        match family {
            ModelFamily::GradientBoost => {
                let mut p = GbParams::default();
                for (name, v) in combo {
                    match name.as_str() {
                        "max_depth" => p.max_depth = as_count(name, *v)?,
                        "learning_rate" => p.learning_rate = *v,
                        "n_estimators" => p.n_estimators = as_count(name, *v)?,
                        "max_leaf_nodes" => p.max_leaf_nodes = as_count(name, *v)?,
                        other => return Err(ModelError::InvalidGrid(format!("unknown parameter `{other}`"))),
                    }
                }
                Ok(Self::GradientBoost(p))
            }
            ModelFamily::Svr => {
                let mut p = SvrParams::new(1.0, 0.1, 0.1);
                for (name, v) in combo {
                    match name.as_str() {
                        "C" => p.c = *v,
                        "gamma" => p.gamma = *v,
                        "epsilon" => p.epsilon = *v,
                        other => return Err(ModelError::InvalidGrid(format!("unknown parameter `{other}`"))),
                    }
                }
                Ok(Self::Svr(p))
            }
        }
    }

    pub fn family(&self) -> ModelFamily {
        match self {
            Self::GradientBoost(_) => ModelFamily::GradientBoost,
            Self::Svr(_) => ModelFamily::Svr,
        }
    }

    pub fn fit(&self, x: ArrayView2<f64>, y: &[f64]) -> Result<FittedModel> {
        Ok(match self {
            Self::GradientBoost(p) => FittedModel::GradientBoost(fit_gb(x, y, p)?),
            Self::Svr(p) => FittedModel::Svr(fit_svr(x, y, p)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "model", rename_all = "snake_case")]
pub enum FittedModel {
    GradientBoost(GradientBoostRegressor),
    Svr(SvrModel),
}

impl FittedModel {
    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        match self {
            Self::GradientBoost(m) => m.predict(x),
            Self::Svr(m) => m.predict(x),
        }
    }

    pub fn params(&self) -> ModelParams {
        match self {
            Self::GradientBoost(m) => ModelParams::GradientBoost(m.params),
            Self::Svr(m) => ModelParams::Svr(m.params),
        }
    }
}

/// Seeded k-fold partition: a shuffled permutation cut into `folds`
/// contiguous blocks whose sizes differ by at most one. Each block is
/// returned sorted.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(ModelError::InvalidParameter(format!("folds must be >= 2, got {folds}")));
    }
    if n < folds {
        return Err(ModelError::TooFewSamples { needed: folds, found: n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng(seed));
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = n / folds + usize::from(f < n % folds);
        let mut block = perm[start..start + size].to_vec();
        block.sort_unstable();
        out.push(block);
        start += size;
    }
    Ok(out)
}

/// Cross-validation outcome of one grid combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub index: usize,
    pub params: BTreeMap<String, f64>,
    /// Validation RMSE per fold; empty when fitting failed.
    pub fold_rmse: Vec<f64>,
    pub mean_rmse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_index: usize,
    pub best_params: ModelParams,
    pub scores: Vec<CvScore>,
    /// Refit on all rows with the best parameters.
    pub model: FittedModel,
}

fn cross_validate(params: &ModelParams, x: ArrayView2<f64>, y: &[f64], folds: &[Vec<usize>]) -> Result<Vec<f64>> {
    let n = y.len();
    let mut held_out = vec![false; n];
    folds
        .iter()
        .map(|fold| {
            fold.iter().for_each(|&i| held_out[i] = true);
            let train: Vec<usize> = (0..n).filter(|&i| !held_out[i]).collect();
            fold.iter().for_each(|&i| held_out[i] = false);
            let xt = x.select(Axis(0), &train);
            let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let model = params.fit(xt.view(), &yt)?;
            let xv = x.select(Axis(0), fold);
            let yv: Vec<f64> = fold.iter().map(|&i| y[i]).collect();
            let score = rmse(&yv, &model.predict(xv.view()))?;
            if score.is_finite() {
                Ok(score)
            } else {
                Err(ModelError::InvalidParameter("non-finite validation RMSE".into()))
            }
        })
        .collect()
}

fn score_combination(
    index: usize,
    family: ModelFamily,
    grid: &ParamGrid,
    x: ArrayView2<f64>,
    y: &[f64],
    folds: &[Vec<usize>],
) -> CvScore {
    let combo = grid.combination(index);
    let params: BTreeMap<String, f64> = combo.iter().cloned().collect();
    let outcome = ModelParams::from_combination(family, &combo).and_then(|p| cross_validate(&p, x, y, folds));
    match outcome {
        Ok(fold_rmse) => {
            let mean = fold_rmse.iter().sum::<f64>() / fold_rmse.len() as f64;
            CvScore { index, params, fold_rmse, mean_rmse: Some(mean), error: None }
        }
        Err(e) => CvScore { index, params, fold_rmse: Vec::new(), mean_rmse: None, error: Some(e.to_string()) },
    }
}

/// Exhaustive grid search scored by mean k-fold validation RMSE. One fold
/// partition (from `seed`) is shared by every combination; the lowest mean
/// wins, ties to the earliest combination. Failed combinations are recorded
/// in the score table rather than aborting the search.
pub fn grid_search(
    family: ModelFamily,
    grid: &ParamGrid,
    x: ArrayView2<f64>,
    y: &[f64],
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    check_xy(&x, y)?;
    grid.check_family(family)?;
    let partition = kfold_indices(y.len(), folds, seed)?;
    let x = x.as_standard_layout();
    let xv = x.view();

    #[cfg(feature = "parallel")]
    let scores: Vec<CvScore> = {
        use rayon::prelude::*;
        (0..grid.len())
            .into_par_iter()
            .map(|i| score_combination(i, family, grid, xv, y, &partition))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let scores: Vec<CvScore> = (0..grid.len())
        .map(|i| score_combination(i, family, grid, xv, y, &partition))
        .collect();

    let best = scores
        .iter()
        .filter_map(|s| s.mean_rmse.map(|m| (s.index, m)))
        .fold(None, |best: Option<(usize, f64)>, cur| match best {
            Some(b) if b.1 <= cur.1 => Some(b),
            _ => Some(cur),
        });
    let Some((best_index, _)) = best else {
        let first = scores.iter().find_map(|s| s.error.clone()).unwrap_or_default();
        return Err(ModelError::AllCombinationsFailed(first));
    };
    let best_params = ModelParams::from_combination(family, &grid.combination(best_index))?;
    let model = best_params.fit(xv, y)?;
    Ok(GridSearchResult { best_index, best_params, scores, model })
}
