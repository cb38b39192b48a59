//! Fitting trust models to trust ratings.
//!
//! Ratings are treated as Bernoulli parameters and compared with model
//! predictions through the Bernoulli cross-entropy. Parameters are found by
//! full-batch Adam on finite-difference gradients, keeping the epoch with
//! the lowest loss on a seeded 15% validation split. [`cross_validate`]
//! wraps this in k-fold cross-validation and reports MAE and NLL.

mod adam;
mod model;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capability::{check_dim, CapabilityVector, Outcome, OutcomeRecord, TaskSpec, TrustParams};
use crate::error::{Result, TrustError};
use crate::rng;

pub use adam::{central_difference, Adam};
pub use model::{BaselineWeights, BtmModel, ModelParams, OptBaseline, PreparedRecord, TrustModel};

/// Predictions are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const PREDICTION_EPS: f64 = 1e-6;

/// One participant's trial: rated task requirements, watched outcomes, and
/// the trust rating for the held-out prediction task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub participant: String,
    pub task_requirements: BTreeMap<String, CapabilityVector>,
    pub observations: Vec<OutcomeRecord>,
    pub prediction_task: String,
    pub trust_rating: f64,
}

impl TrialRecord {
    /// Builds a record from task ids. Observation times are 1, 2, ... in
    /// the given order.
    pub fn new(
        participant: impl Into<String>,
        task_requirements: BTreeMap<String, CapabilityVector>,
        observations: &[(&str, Outcome)],
        prediction_task: impl Into<String>,
        trust_rating: f64,
    ) -> Result<Self> {
        let participant = participant.into();
        let observations = observations
            .iter()
            .enumerate()
            .map(|(t, (id, outcome))| {
                let req = task_requirements.get(*id).ok_or_else(|| TrustError::MalformedRecord {
                    participant: participant.clone(),
                    reason: format!("observation task {id:?} has no requirements"),
                })?;
                Ok(OutcomeRecord::new(
                    TaskSpec::new(*id, req.clone()),
                    t as u64 + 1,
                    *outcome,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let record = Self {
            participant,
            task_requirements,
            observations,
            prediction_task: prediction_task.into(),
            trust_rating,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn dim(&self) -> usize {
        self.task_requirements.values().next().map_or(0, CapabilityVector::dim)
    }

    pub fn prediction_requirements(&self) -> Result<&CapabilityVector> {
        self.task_requirements.get(&self.prediction_task).ok_or_else(|| {
            self.malformed(format!(
                "prediction task {:?} has no requirements",
                self.prediction_task
            ))
        })
    }

    fn malformed(&self, reason: String) -> TrustError {
        TrustError::MalformedRecord {
            participant: self.participant.clone(),
            reason,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.trust_rating) {
            return Err(self.malformed(format!("trust rating {} outside [0, 1]", self.trust_rating)));
        }
        let n = self.dim();
        if n == 0 {
            return Err(self.malformed("no task requirements".into()));
        }
        for (id, req) in &self.task_requirements {
            check_dim(n, req.dim()).map_err(|e| self.malformed(format!("task {id:?}: {e}")))?;
        }
        self.prediction_requirements()?;
        for obs in &self.observations {
            match self.task_requirements.get(&obs.task.id) {
                None => return Err(self.malformed(format!("observation task {:?} has no requirements", obs.task.id))),
                Some(req) if req != &obs.task.requirements => {
                    return Err(self.malformed(format!("observation task {:?} disagrees with its rating", obs.task.id)))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

/// Trust the model assigns to the record's prediction task after folding
/// its observations, in order, into an uninformed belief.
pub fn predict_trust(record: &TrialRecord, params: &TrustParams, bins_per_dim: usize) -> Result<f64> {
    let prepared = PreparedRecord::new(record)?;
    check_dim(params.dim(), prepared.dim())?;
    let model = BtmModel {
        bins_per_dim,
        ..BtmModel::default()
    };
    if bins_per_dim == 0 {
        return Err(TrustError::InvalidArgument("bins_per_dim must be >= 1".into()));
    }
    Ok(model.predict(&prepared, params))
}

/// Bernoulli cross-entropy between a rated and a predicted probability.
pub fn cross_entropy_loss(predicted: f64, rated: f64) -> f64 {
    let p = predicted.clamp(PREDICTION_EPS, 1.0 - PREDICTION_EPS);
    -(rated * p.ln() + (1.0 - rated) * (1.0 - p).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub mae: f64,
    pub nll: f64,
}

/// MAE and mean cross-entropy of `model` on `records`.
pub fn score<M: TrustModel>(model: &M, params: &M::Params, records: &[PreparedRecord]) -> Scores {
    if records.is_empty() {
        return Scores::default();
    }
    let (mut mae, mut nll) = (0.0, 0.0);
    for r in records {
        let p = model.predict(r, params);
        mae += (p - r.rating).abs();
        nll += cross_entropy_loss(p, r.rating);
    }
    let n = records.len() as f64;
    Scores {
        mae: mae / n,
        nll: nll / n,
    }
}

fn mean_loss<M: TrustModel>(model: &M, theta: &[f64], records: &[PreparedRecord]) -> f64 {
    match model.decode(theta) {
        Ok(params) => score(model, &params, records).nll,
        Err(_) => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Stop after this many epochs without a validation improvement.
    pub patience: usize,
    pub validation_fraction: f64,
    pub fd_step: f64,
    pub bins_per_dim: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 500,
            patience: 50,
            validation_fraction: 0.15,
            fd_step: 1e-4,
            bins_per_dim: crate::trust::DEFAULT_BINS_PER_DIM,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub validation: f64,
}

#[derive(Debug, Clone)]
pub struct FittedModel<P> {
    pub params: P,
    pub theta: Vec<f64>,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub learning_curve: Vec<EpochLoss>,
}

/// Fits `model` on `train`, drawing the validation split from `split_rng`.
///
/// Epoch 0 is the initial point. When the split leaves no validation
/// records (tiny inputs) the training loss selects the epoch instead.
pub fn fit_model<M: TrustModel>(
    model: &M,
    train: &[PreparedRecord],
    config: &FitConfig,
    split_rng: &mut rng::StreamRng,
) -> Result<FittedModel<M::Params>> {
    if train.is_empty() {
        return Err(TrustError::EmptyTrainingSet);
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(split_rng);
    let n_val = ((train.len() as f64 * config.validation_fraction).round() as usize).min(train.len() - 1);
    let (val_idx, fit_idx) = order.split_at(n_val);
    let fit_set: Vec<PreparedRecord> = fit_idx.iter().map(|&i| train[i].clone()).collect();
    let val_set: Vec<PreparedRecord> = val_idx.iter().map(|&i| train[i].clone()).collect();

    let dim = train[0].dim();
    let mut theta = model.initial_theta(dim);
    let mut adam = Adam::new(theta.len(), config.learning_rate);
    let loss = |th: &[f64]| mean_loss(model, th, &fit_set);
    let selection_loss = |th: &[f64]| {
        if val_set.is_empty() {
            loss(th)
        } else {
            mean_loss(model, th, &val_set)
        }
    };

    let mut curve = Vec::with_capacity(config.epochs + 1);
    let train0 = loss(&theta);
    let mut best = (selection_loss(&theta), 0usize, theta.clone());
    curve.push(EpochLoss {
        epoch: 0,
        train: train0,
        validation: best.0,
    });
    for epoch in 1..=config.epochs {
        let grad = central_difference(loss, &theta, config.fd_step);
        adam.step(&mut theta, &grad);
        let val = selection_loss(&theta);
        curve.push(EpochLoss {
            epoch,
            train: loss(&theta),
            validation: val,
        });
        if val < best.0 {
            best = (val, epoch, theta.clone());
        } else if epoch - best.1 >= config.patience {
            break;
        }
    }
    let (best_validation_loss, best_epoch, theta) = best;
    Ok(FittedModel {
        params: model.decode(&theta)?,
        theta,
        best_epoch,
        best_validation_loss,
        learning_curve: curve,
    })
}

pub fn prepare(records: &[TrialRecord]) -> Result<Vec<PreparedRecord>> {
    let prepared = records.iter().map(PreparedRecord::new).collect::<Result<Vec<_>>>()?;
    if let Some(first) = prepared.first() {
        for r in &prepared {
            check_dim(first.dim(), r.dim())?;
        }
    }
    Ok(prepared)
}

/// Fits capability-trust parameters shared by all records in `train`.
pub fn fit_params(train: &[TrialRecord], config: &FitConfig) -> Result<TrustParams> {
    let prepared = prepare(train)?;
    let model = BtmModel {
        bins_per_dim: config.bins_per_dim,
        ..BtmModel::default()
    };
    let mut split = rng::stream(config.seed, 0);
    Ok(fit_model(&model, &prepared, config, &mut split)?.params)
}

/// Seeded shuffle of `0..len` cut into `folds` contiguous pieces whose
/// sizes differ by at most one.
pub fn fold_partition(len: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(TrustError::InvalidArgument(format!("folds must be >= 2, got {folds}")));
    }
    if len < folds {
        return Err(TrustError::TooFewRecords {
            folds,
            needed: folds,
            actual: len,
        });
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut rng::stream(seed, 0));
    Ok((0..folds)
        .map(|f| order[f * len / folds..(f + 1) * len / folds].to_vec())
        .collect())
}

/// Cross-validation results for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    /// Parameters refitted on the whole dataset.
    pub params: ModelParams,
    pub fold_params: Vec<ModelParams>,
    pub fold_mae: Vec<f64>,
    pub fold_nll: Vec<f64>,
    pub mean_mae: f64,
    /// Sample standard deviation across folds.
    pub std_mae: f64,
    pub mean_nll: f64,
    pub std_nll: f64,
    /// One curve per fold.
    pub learning_curves: Vec<Vec<EpochLoss>>,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// k-fold cross-validation of any model over a fixed partition.
///
/// Fold `f` draws its validation split from stream `f + 1` of `config.seed`;
/// the refit on all data uses stream 0. Folds run in parallel and the
/// result does not depend on scheduling.
pub fn cross_validate_model<M: TrustModel>(
    model: &M,
    data: &[PreparedRecord],
    partition: &[Vec<usize>],
    config: &FitConfig,
) -> Result<FitReport> {
    let fold_results = partition
        .par_iter()
        .enumerate()
        .map(|(f, test_idx)| {
            let mut in_test = vec![false; data.len()];
            for &i in test_idx {
                in_test[i] = true;
            }
            let train: Vec<PreparedRecord> = (0..data.len())
                .filter(|&i| !in_test[i])
                .map(|i| data[i].clone())
                .collect();
            let test: Vec<PreparedRecord> = test_idx.iter().map(|&i| data[i].clone()).collect();
            let mut split = rng::stream(config.seed, f as u64 + 1);
            let fitted = fit_model(model, &train, config, &mut split)?;
            let scores = score(model, &fitted.params, &test);
            Ok((fitted, scores))
        })
        .collect::<Result<Vec<_>>>()?;

    let full = fit_model(model, data, config, &mut rng::stream(config.seed, 0))?;
    let fold_mae: Vec<f64> = fold_results.iter().map(|(_, s)| s.mae).collect();
    let fold_nll: Vec<f64> = fold_results.iter().map(|(_, s)| s.nll).collect();
    let (mean_mae, std_mae) = mean_std(&fold_mae);
    let (mean_nll, std_nll) = mean_std(&fold_nll);
    Ok(FitReport {
        model: model.name().to_string(),
        params: full.params.into(),
        fold_params: fold_results.iter().map(|(f, _)| f.params.clone().into()).collect(),
        fold_mae,
        fold_nll,
        mean_mae,
        std_mae,
        mean_nll,
        std_nll,
        learning_curves: fold_results.into_iter().map(|(f, _)| f.learning_curve).collect(),
    })
}

/// 10-fold style cross-validation of the capability-trust model.
pub fn cross_validate(data: &[TrialRecord], folds: usize, seed: u64, config: &FitConfig) -> Result<FitReport> {
    let partition = fold_partition(data.len(), folds, seed)?;
    let prepared = prepare(data)?;
    let model = BtmModel {
        bins_per_dim: config.bins_per_dim,
        ..BtmModel::default()
    };
    cross_validate_model(&model, &prepared, &partition, &FitConfig { seed, ..config.clone() })
}

/// Side-by-side cross-validation of both models on one partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub partition: Vec<Vec<usize>>,
    pub reports: Vec<FitReport>,
}

pub fn evaluate_models(data: &[TrialRecord], folds: usize, seed: u64, config: &FitConfig) -> Result<ModelComparison> {
    let partition = fold_partition(data.len(), folds, seed)?;
    let prepared = prepare(data)?;
    let config = FitConfig { seed, ..config.clone() };
    let btm = BtmModel {
        bins_per_dim: config.bins_per_dim,
        ..BtmModel::default()
    };
    let reports = vec![
        cross_validate_model(&btm, &prepared, &partition, &config)?,
        cross_validate_model(&OptBaseline, &prepared, &partition, &config)?,
    ];
    Ok(ModelComparison { partition, reports })
}

impl ModelComparison {
    pub fn report(&self, model: &str) -> Option<&FitReport> {
        self.reports.iter().find(|r| r.model == model)
    }

    /// `model  MAE  NLL` with `mean(std)` cells.
    pub fn summary_table(&self) -> String {
        let mut out = String::from("model\tMAE\tNLL\n");
        for r in &self.reports {
            let _ = writeln!(
                out,
                "{}\t{:.3}({:.3})\t{:.3}({:.3})",
                r.model, r.mean_mae, r.std_mae, r.mean_nll, r.std_nll
            );
        }
        out
    }

    /// `model,fold,mae,nll` rows.
    pub fn fold_table(&self) -> String {
        let mut out = String::from("model,fold,mae,nll\n");
        for r in &self.reports {
            for (f, (mae, nll)) in r.fold_mae.iter().zip(&r.fold_nll).enumerate() {
                let _ = writeln!(out, "{},{},{:.9},{:.9}", r.model, f, mae, nll);
            }
        }
        out
    }

    /// `fold,epoch,train_loss,validation_loss` rows for one model.
    pub fn learning_curve_table(&self, model: &str) -> Option<String> {
        let r = self.report(model)?;
        let mut out = String::from("fold,epoch,train_loss,validation_loss\n");
        for (f, curve) in r.learning_curves.iter().enumerate() {
            for e in curve {
                let _ = writeln!(out, "{},{},{:.9},{:.9}", f, e.epoch, e.train, e.validation);
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cv(v: &[f64]) -> CapabilityVector {
        CapabilityVector::new(v.to_vec()).unwrap()
    }

    fn record(obs: &[((f64, f64), bool)], target: (f64, f64), rating: f64) -> TrialRecord {
        let mut tasks = BTreeMap::new();
        let ids: Vec<String> = (0..obs.len()).map(|i| format!("o{i}")).collect();
        for (id, ((s, p), _)) in ids.iter().zip(obs) {
            tasks.insert(id.clone(), cv(&[*s, *p]));
        }
        tasks.insert("pred".into(), cv(&[target.0, target.1]));
        let list: Vec<(&str, Outcome)> = ids
            .iter()
            .zip(obs)
            .map(|(id, (_, s))| (id.as_str(), Outcome::from_success(*s)))
            .collect();
        TrialRecord::new("p", tasks, &list, "pred", rating).unwrap()
    }

    #[test]
    fn predict_examples() {
        let p = TrustParams::uniform(2, 1e4, 1.0).unwrap();
        let r = record(&[], (0.3, 0.4), 0.5);
        assert_abs_diff_eq!(predict_trust(&r, &p, 1000).unwrap(), 0.42, epsilon = 0.005);
        let r = record(&[((0.5, 0.5), true)], (0.2, 0.2), 0.5);
        assert_abs_diff_eq!(predict_trust(&r, &p, 1000).unwrap(), 1.0, epsilon = 0.005);
        let r = record(&[((0.5, 0.5), false)], (0.8, 0.8), 0.5);
        assert_abs_diff_eq!(predict_trust(&r, &p, 1000).unwrap(), 0.0, epsilon = 0.005);
    }

    #[test]
    fn predict_rejects_malformed() {
        let p = TrustParams::uniform(2, 10.0, 1.0).unwrap();
        let mut r = record(&[((0.5, 0.5), true)], (0.2, 0.2), 0.5);
        r.prediction_task = "missing".into();
        assert!(matches!(
            predict_trust(&r, &p, 10),
            Err(TrustError::MalformedRecord { .. })
        ));
        let mut r = record(&[], (0.2, 0.2), 0.5);
        r.trust_rating = 1.5;
        assert!(predict_trust(&r, &p, 10).is_err());
        let r = record(&[], (0.2, 0.2), 0.5);
        assert!(predict_trust(&r, &TrustParams::uniform(3, 1.0, 1.0).unwrap(), 10).is_err());
    }

    #[test]
    fn observation_order_commutes_for_same_side_updates() {
        let p = TrustParams::new(vec![6.0, 9.0], vec![1.0, 2.0]).unwrap();
        let a = record(&[((0.3, 0.2), true), ((0.6, 0.5), true)], (0.7, 0.7), 0.5);
        let b = record(&[((0.6, 0.5), true), ((0.3, 0.2), true)], (0.7, 0.7), 0.5);
        assert_eq!(predict_trust(&a, &p, 10).unwrap(), predict_trust(&b, &p, 10).unwrap());
        let a = record(&[((0.8, 0.9), false), ((0.4, 0.6), false)], (0.3, 0.3), 0.5);
        let b = record(&[((0.4, 0.6), false), ((0.8, 0.9), false)], (0.3, 0.3), 0.5);
        assert_eq!(predict_trust(&a, &p, 10).unwrap(), predict_trust(&b, &p, 10).unwrap());
    }

    #[test]
    fn cross_entropy_examples() {
        assert_abs_diff_eq!(cross_entropy_loss(0.5, 0.5), std::f64::consts::LN_2, epsilon = 1e-15);
        // -(0.9 ln 0.9 + 0.1 ln 0.1) = 0.3250829733914482
        assert_abs_diff_eq!(cross_entropy_loss(0.9, 0.9), 0.325_082_973_391_448_2, epsilon = 1e-14);
        let l = cross_entropy_loss(1.0 - PREDICTION_EPS, 1.0);
        assert!(l > 0.0 && l < 1.1 * PREDICTION_EPS);
        assert!(cross_entropy_loss(0.0, 1.0).is_finite());
        assert!(cross_entropy_loss(1.0, 0.0).is_finite());
    }

    #[test]
    fn fold_partition_sizes() {
        let parts = fold_partition(284, 10, 3).unwrap();
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        assert_eq!(all, (0..284).collect::<Vec<_>>());
        assert!(fold_partition(5, 1, 0).is_err());
        assert!(matches!(fold_partition(3, 4, 0), Err(TrustError::TooFewRecords { .. })));
    }

    #[test]
    fn mean_std_matches_definition() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(m, 2.5);
        assert_abs_diff_eq!(s, (5.0f64 / 3.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn fit_single_record() {
        let r = record(&[((0.5, 0.5), true)], (0.3, 0.3), 0.8);
        let cfg = FitConfig {
            epochs: 20,
            ..FitConfig::default()
        };
        let p = fit_params(&[r], &cfg).unwrap();
        assert!(p.beta().iter().chain(p.zeta()).all(|v| v.is_finite() && *v > 0.0));
        assert_eq!(fit_params(&[], &cfg), Err(TrustError::EmptyTrainingSet));
    }

    #[test]
    fn identical_records_give_identical_folds() {
        let r = record(&[((0.5, 0.5), true), ((0.2, 0.9), false)], (0.4, 0.3), 0.7);
        let data = vec![r.clone(), r.clone(), r.clone(), r];
        let cfg = FitConfig {
            epochs: 30,
            ..FitConfig::default()
        };
        let rep = cross_validate(&data, 2, 11, &cfg).unwrap();
        assert_eq!(rep.fold_mae.len(), 2);
        assert_abs_diff_eq!(rep.fold_mae[0], rep.fold_mae[1], epsilon = 1e-12);
        assert_abs_diff_eq!(rep.fold_nll[0], rep.fold_nll[1], epsilon = 1e-12);
    }
}
