//! Health index by stacked regression onto normalized cycles.

use serde::{Deserialize, Serialize};

use super::trees::{BoostConfig, BoostedStumps, ForestConfig, Matrix, RandomizedForest};
use super::{normalize_cycles, UnitSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseModel {
    Forest(RandomizedForest),
    Boosted(BoostedStumps),
    Constant(f64),
}

impl BaseModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            BaseModel::Forest(f) => f.predict(x),
            BaseModel::Boosted(b) => b.predict(x),
            BaseModel::Constant(c) => *c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressorKind {
    Forest,
    Boosted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HiConfig {
    pub regressors: Vec<RegressorKind>,
    pub forest: ForestConfig,
    pub boost: BoostConfig,
}

impl Default for HiConfig {
    fn default() -> Self {
        HiConfig {
            regressors: vec![RegressorKind::Forest, RegressorKind::Boosted],
            forest: ForestConfig::default(),
            boost: BoostConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combiner {
    Mean,
}

/// Base regressors over standardized `(selected sensors, cycle)` features,
/// combined by averaging and clipped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedHIModel {
    /// 1-based sensor numbers.
    pub sensor_ids: Vec<usize>,
    pub feature_means: Vec<f64>,
    pub feature_sds: Vec<f64>,
    pub base_models: Vec<BaseModel>,
    pub combiner: Combiner,
}

fn check_sensors(ids: &[usize]) -> Result<()> {
    if ids.is_empty() || ids.iter().any(|&s| !(1..=21).contains(&s)) {
        return Err(Error::invalid(format!("sensor ids must be within 1..=21, got {ids:?}")));
    }
    Ok(())
}

fn raw_features(unit: &UnitSeries, k: usize, ids: &[usize], out: &mut Vec<f64>) {
    out.extend(ids.iter().map(|&s| unit.sensors[k][s - 1]));
    out.push(unit.cycles[k] as f64);
}

impl StackedHIModel {
    pub fn n_features(&self) -> usize {
        self.sensor_ids.len() + 1
    }

    fn standardize(&self, raw: &mut [f64]) {
        for ((v, m), s) in raw.iter_mut().zip(&self.feature_means).zip(&self.feature_sds) {
            *v = (*v - m) / s;
        }
    }

    /// Average of the base predictions, clipped. Summation runs over the
    /// sorted predictions so the result does not depend on model order.
    pub fn combine(preds: &mut [f64]) -> f64 {
        preds.sort_by(f64::total_cmp);
        (preds.iter().sum::<f64>() / preds.len() as f64).clamp(0.0, 1.0)
    }

    pub fn predict_row(&self, features: &[f64]) -> f64 {
        let mut x = features.to_vec();
        self.standardize(&mut x);
        let mut preds: Vec<f64> = self.base_models.iter().map(|m| m.predict(&x)).collect();
        Self::combine(&mut preds)
    }

    fn validate(&self) -> Result<()> {
        check_sensors(&self.sensor_ids)?;
        let n = self.n_features();
        if self.feature_means.len() != n || self.feature_sds.len() != n {
            return Err(Error::invalid("feature statistics do not match the sensor list"));
        }
        if self.base_models.is_empty() {
            return Err(Error::invalid("stacked model has no base models"));
        }
        Ok(())
    }
}

pub fn fit_stacked_hi(train_units: &[UnitSeries], sensor_ids: &[usize], seed: u64) -> Result<StackedHIModel> {
    fit_stacked_hi_with(train_units, sensor_ids, seed, &HiConfig::default())
}

/// Fit every configured base regressor to map features to the per-unit
/// normalized cycle.
pub fn fit_stacked_hi_with(
    train_units: &[UnitSeries],
    sensor_ids: &[usize],
    seed: u64,
    cfg: &HiConfig,
) -> Result<StackedHIModel> {
    if train_units.is_empty() {
        return Err(Error::Empty("training units"));
    }
    check_sensors(sensor_ids)?;
    if cfg.regressors.is_empty() {
        return Err(Error::Config("no HI regressors configured".into()));
    }
    let cols = sensor_ids.len() + 1;
    let mut data = Vec::new();
    let mut y = Vec::new();
    for u in train_units {
        y.extend(normalize_cycles(u)?);
        for k in 0..u.cycles.len() {
            raw_features(u, k, sensor_ids, &mut data);
        }
    }
    let rows = y.len();
    let mut means = vec![0.0; cols];
    let mut sds = vec![0.0; cols];
    for j in 0..cols {
        let m = (0..rows).map(|i| data[i * cols + j]).sum::<f64>() / rows as f64;
        let v = (0..rows).map(|i| (data[i * cols + j] - m).powi(2)).sum::<f64>() / rows as f64;
        means[j] = m;
        sds[j] = if v > 0.0 {
            v.sqrt()
        } else {
            let name = sensor_ids.get(j).map_or("cycle".to_string(), |s| format!("s{s}"));
            log::warn!("feature {name} is constant on the training set; kept unscaled");
            1.0
        };
    }
    for i in 0..rows {
        for j in 0..cols {
            data[i * cols + j] = (data[i * cols + j] - means[j]) / sds[j];
        }
    }
    let x = Matrix::new(rows, cols, data)?;
    let base_models = cfg
        .regressors
        .iter()
        .enumerate()
        .map(|(k, kind)| {
            Ok(match kind {
                RegressorKind::Forest => BaseModel::Forest(RandomizedForest::fit(
                    &x,
                    &y,
                    &cfg.forest,
                    crate::rng::mix(seed, k as u64),
                )?),
                RegressorKind::Boosted => BaseModel::Boosted(BoostedStumps::fit(&x, &y, &cfg.boost)?),
            })
        })
        .collect::<Result<_>>()?;
    Ok(StackedHIModel {
        sensor_ids: sensor_ids.to_vec(),
        feature_means: means,
        feature_sds: sds,
        base_models,
        combiner: Combiner::Mean,
    })
}

/// The unit with `hi` filled in per cycle.
pub fn compute_hi(unit: &UnitSeries, model: &StackedHIModel) -> Result<UnitSeries> {
    model.validate()?;
    if unit.sensors.len() != unit.cycles.len() {
        return Err(Error::invalid(format!("unit {}: sensor rows do not match cycles", unit.unit_id)));
    }
    let mut feats = Vec::with_capacity(model.n_features());
    let hi = (0..unit.cycles.len())
        .map(|k| {
            feats.clear();
            raw_features(unit, k, &model.sensor_ids, &mut feats);
            model.predict_row(&feats)
        })
        .collect();
    Ok(UnitSeries {
        hi: Some(hi),
        ..unit.clone()
    })
}
