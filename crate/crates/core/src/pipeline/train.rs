use std::time::Instant;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_analysis::label_mixing_class;
use crate::pipeline::dataset::Dataset;
use crate::rom_ml::{
    ensemble_predict, f1_score, r2_score, svm_predict, svm_train, svr_predict, svr_train,
    MixingClassLabel, RbfKernelParams, SvmModel, SvrModel,
};

/// Train/evaluate recipe: split fraction, hyperparameter grid, split seed.
/// A fraction >= 1 is sanity mode (train = test = all simulations).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentProtocol {
    pub train_fraction: f64,
    pub penalties: Vec<f64>,
    pub gammas: Vec<f64>,
    pub eps_values: Vec<f64>,
    pub split_seed: u64,
}

impl ExperimentProtocol {
    /// Reduced grid drawn from the full study's hyperparameter values,
    /// sized for desk-scale runs.
    pub fn desk_default(train_fraction: f64) -> Self {
        ExperimentProtocol {
            train_fraction,
            penalties: vec![1.0, 100.0],
            gammas: vec![0.1, 0.01],
            eps_values: vec![0.1, 0.01],
            split_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0) {
            return Err(Error::InvalidInput(format!(
                "train fraction must be positive, got {}",
                self.train_fraction
            )));
        }
        if self.penalties.is_empty() || self.gammas.is_empty() || self.eps_values.is_empty() {
            return Err(Error::InvalidInput("empty hyperparameter grid".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvrMemberReport {
    pub penalty: f64,
    pub gamma: f64,
    pub eps: f64,
    pub r2_test: f64,
    pub n_supp: usize,
    /// Fraction of training rows kept as support vectors.
    pub sv_fraction: f64,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmMemberReport {
    pub penalty: f64,
    pub gamma: f64,
    pub f1_test: f64,
    pub n_supp: usize,
    pub sv_fraction: f64,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub train_fraction: f64,
    pub train_sims: Vec<String>,
    pub test_sims: Vec<String>,
    pub n_train_rows: usize,
    pub n_test_rows: usize,
    pub svr_members: Vec<SvrMemberReport>,
    pub svm_members: Vec<SvmMemberReport>,
    /// R^2 of the ensemble-mean prediction on the test rows.
    pub ensemble_r2: f64,
    /// Macro-F1 of the majority vote over classifier members.
    pub ensemble_f1: f64,
}

impl ProtocolReport {
    /// JSON with wall-clock fields zeroed, for byte-level determinism checks.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        for m in &mut copy.svr_members {
            m.train_seconds = 0.0;
        }
        for m in &mut copy.svm_members {
            m.train_seconds = 0.0;
        }
        Ok(serde_json::to_string_pretty(&copy)?)
    }
}

pub struct TrainedModels {
    pub svr_ensemble: Vec<SvrModel>,
    pub svm_ensemble: Vec<SvmModel>,
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Split whole simulations into train/test, never rows: a run's time series
/// stays entirely on one side.
fn split_sims(
    dataset: &Dataset,
    protocol: &ExperimentProtocol,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut sims = dataset.unique_sims();
    if protocol.train_fraction >= 1.0 {
        return Ok((sims.clone(), sims));
    }
    let n_train = ((sims.len() as f64 * protocol.train_fraction).round() as usize).max(1);
    if n_train >= sims.len() {
        return Err(Error::InvalidInput(format!(
            "train fraction {} leaves no test simulations",
            protocol.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.split_seed);
    sims.shuffle(&mut rng);
    let train = sims[..n_train].to_vec();
    let test = sims[n_train..].to_vec();
    Ok((train, test))
}

/// Train the SVR/SVM ensembles over the hyperparameter grid and evaluate on
/// the held-out simulations.
pub fn train_protocol(
    dataset: &Dataset,
    protocol: &ExperimentProtocol,
) -> Result<(ProtocolReport, TrainedModels)> {
    protocol.validate()?;
    let (train_sims, test_sims) = split_sims(dataset, protocol)?;

    let row_set = |sims: &[String]| -> Vec<usize> {
        (0..dataset.n_rows())
            .filter(|&i| sims.contains(&dataset.sim_ids[i]))
            .collect()
    };
    let train_rows = row_set(&train_sims);
    let test_rows = row_set(&test_sims);
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(Error::InvalidInput("empty split side".into()));
    }

    let x_train = submatrix(&dataset.scaled, &train_rows);
    let x_test_raw = submatrix(&dataset.raw, &test_rows);
    let y_train: Vec<f64> = train_rows.iter().map(|&i| dataset.targets[i]).collect();
    let y_test: Vec<f64> = test_rows.iter().map(|&i| dataset.targets[i]).collect();
    let labels_train: Vec<MixingClassLabel> = train_rows
        .iter()
        .map(|&i| label_mixing_class(dataset.mixing[i].clamp(0.0, 1.0)))
        .collect::<Result<_>>()?;
    let labels_test: Vec<MixingClassLabel> = test_rows
        .iter()
        .map(|&i| label_mixing_class(dataset.mixing[i].clamp(0.0, 1.0)))
        .collect::<Result<_>>()?;

    let mut svr_members = Vec::new();
    let mut svr_ensemble = Vec::new();
    for &penalty in &protocol.penalties {
        for &gamma in &protocol.gammas {
            for &eps in &protocol.eps_values {
                let start = Instant::now();
                let mut model =
                    svr_train(&x_train, &y_train, penalty, eps, RbfKernelParams::new(gamma)?)?;
                let train_seconds = start.elapsed().as_secs_f64();
                model.scaling = dataset.scaling.clone();
                model.feature_names = dataset.feature_names.clone();
                let pred = svr_predict(&model, &x_test_raw, true)?;
                let r2_test = r2_score(&y_test, &pred)?;
                svr_members.push(SvrMemberReport {
                    penalty,
                    gamma,
                    eps,
                    r2_test,
                    n_supp: model.n_support(),
                    sv_fraction: model.n_support() as f64 / train_rows.len() as f64,
                    train_seconds,
                });
                svr_ensemble.push(model);
            }
        }
    }

    let distinct_train_classes = {
        let mut c: Vec<u8> = labels_train.iter().map(|l| l.0).collect();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    let mut svm_members = Vec::new();
    let mut svm_ensemble = Vec::new();
    if distinct_train_classes >= 2 {
        for &penalty in &protocol.penalties {
            for &gamma in &protocol.gammas {
                let start = Instant::now();
                let mut model =
                    svm_train(&x_train, &labels_train, penalty, RbfKernelParams::new(gamma)?)?;
                let train_seconds = start.elapsed().as_secs_f64();
                model.scaling = dataset.scaling.clone();
                model.feature_names = dataset.feature_names.clone();
                let pred = svm_predict(&model, &x_test_raw)?;
                let f1_test = f1_score(&labels_test, &pred)?;
                let n_supp: usize = model
                    .classifiers
                    .iter()
                    .map(|c| c.support_vectors.len())
                    .sum();
                svm_members.push(SvmMemberReport {
                    penalty,
                    gamma,
                    f1_test,
                    n_supp,
                    sv_fraction: n_supp as f64 / train_rows.len() as f64,
                    train_seconds,
                });
                svm_ensemble.push(model);
            }
        }
    }

    let bands = ensemble_predict(&svr_ensemble, &x_test_raw, true)?;
    let mean_pred: Vec<f64> = bands.iter().map(|b| b.0).collect();
    let ensemble_r2 = r2_score(&y_test, &mean_pred)?;

    let ensemble_f1 = if svm_ensemble.is_empty() {
        0.0
    } else {
        let member_preds: Vec<Vec<MixingClassLabel>> = svm_ensemble
            .iter()
            .map(|m| svm_predict(m, &x_test_raw))
            .collect::<Result<_>>()?;
        let voted: Vec<MixingClassLabel> = (0..test_rows.len())
            .map(|i| {
                let mut counts = [0usize; 5];
                for preds in &member_preds {
                    counts[preds[i].0 as usize] += 1;
                }
                // lowest label wins ties
                let best = (1..5).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap();
                MixingClassLabel(best as u8)
            })
            .collect();
        f1_score(&labels_test, &voted)?
    };

    let report = ProtocolReport {
        train_fraction: protocol.train_fraction,
        train_sims,
        test_sims,
        n_train_rows: train_rows.len(),
        n_test_rows: test_rows.len(),
        svr_members,
        svm_members,
        ensemble_r2,
        ensemble_f1,
    };
    Ok((
        report,
        TrainedModels {
            svr_ensemble,
            svm_ensemble,
        },
    ))
}
