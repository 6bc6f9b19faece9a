use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_analysis::FeatureScaling;
use crate::rom_ml::kernel::{rbf_unchecked, RbfKernelParams};
use crate::rom_ml::smo::{solve_smo, SmoProblem};
use crate::rom_ml::svr::SVR_SOLVER_TOL;

const SUPPORT_EPS: f64 = 1e-12;

/// Degree-of-mixing class: quartiles of the normalized variance, class 1
/// being the best mixed.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct MixingClassLabel(pub u8);

impl MixingClassLabel {
    pub fn new(label: u8) -> Result<Self> {
        if (1..=4).contains(&label) {
            Ok(MixingClassLabel(label))
        } else {
            Err(Error::InvalidInput(format!(
                "mixing class must be 1..=4, got {label}"
            )))
        }
    }

    /// Bin a normalized degree of mixing (variance in [0,1]) into a class.
    pub fn from_degree_of_mixing(sigma_sq: f64) -> Result<Self> {
        if !(0.0..=1.0 + 1e-12).contains(&sigma_sq) {
            return Err(Error::InvalidInput(format!(
                "degree of mixing must lie in [0,1], got {sigma_sq}"
            )));
        }
        Ok(MixingClassLabel(match sigma_sq {
            v if v < 0.25 => 1,
            v if v < 0.5 => 2,
            v if v < 0.75 => 3,
            _ => 4,
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperparams {
    #[serde(rename = "P")]
    pub penalty: f64,
}

/// One soft-margin binary classifier of a one-vs-one multiclass model.
/// `dual_coefs[j]` stores `y_j * alpha_j`; the decision value for the lower
/// class of `class_pair` is `sum_j dual_coefs[j] K(x, sv_j) + bias`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinaryClassifier {
    pub class_pair: (u8, u8),
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
}

/// One-vs-one multiclass SVM over mixing classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: RbfKernelParams,
    pub hyperparams: SvmHyperparams,
    pub scaling: FeatureScaling,
    pub feature_names: Vec<String>,
    pub classes: Vec<u8>,
    pub classifiers: Vec<BinaryClassifier>,
}

/// Train a one-vs-one SVM: one binary classifier per unordered pair of
/// classes present in `labels`, fit on that pair's samples only, all classes
/// weighted equally.
pub fn svm_train(
    x: &DMatrix<f64>,
    labels: &[MixingClassLabel],
    penalty: f64,
    kernel: RbfKernelParams,
) -> Result<SvmModel> {
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples but {} labels",
            x.nrows(),
            labels.len()
        )));
    }
    if !(penalty > 0.0) {
        return Err(Error::InvalidInput(format!(
            "penalty must be positive, got {penalty}"
        )));
    }
    let mut classes: Vec<u8> = labels.iter().map(|l| l.0).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two distinct classes to train a classifier".into(),
        ));
    }

    let mut classifiers = Vec::new();
    for a_idx in 0..classes.len() {
        for b_idx in (a_idx + 1)..classes.len() {
            let (lo, hi) = (classes[a_idx], classes[b_idx]);
            // +1 for the lower class, -1 for the higher
            let rows: Vec<usize> = (0..x.nrows())
                .filter(|&i| labels[i].0 == lo || labels[i].0 == hi)
                .collect();
            let signs: Vec<f64> = rows
                .iter()
                .map(|&i| if labels[i].0 == lo { 1.0 } else { -1.0 })
                .collect();
            let problem = SmoProblem {
                x,
                gamma: kernel.gamma,
                y: signs.clone(),
                p: vec![-1.0; rows.len()],
                c: penalty,
                base: rows.clone(),
            };
            let sol = solve_smo(&problem, SVR_SOLVER_TOL)?;
            let mut support_vectors = Vec::new();
            let mut dual_coefs = Vec::new();
            for (k, &i) in rows.iter().enumerate() {
                if sol.alpha[k] > SUPPORT_EPS {
                    support_vectors.push(x.row(i).iter().copied().collect());
                    dual_coefs.push(signs[k] * sol.alpha[k]);
                }
            }
            classifiers.push(BinaryClassifier {
                class_pair: (lo, hi),
                support_vectors,
                dual_coefs,
                bias: sol.bias,
            });
        }
    }

    Ok(SvmModel {
        kernel,
        hyperparams: SvmHyperparams { penalty },
        scaling: FeatureScaling::identity(x.ncols()),
        feature_names: (0..x.ncols()).map(|j| format!("f{j}")).collect(),
        classes,
        classifiers,
    })
}

/// Predict classes by majority vote over the binary classifiers; ties go to
/// the lowest class index, as does a decision value of exactly zero.
pub fn svm_predict(model: &SvmModel, x: &DMatrix<f64>) -> Result<Vec<MixingClassLabel>> {
    if x.ncols() != model.scaling.n_features() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, got {}",
            model.scaling.n_features(),
            x.ncols()
        )));
    }
    let mut out = Vec::with_capacity(x.nrows());
    for i in 0..x.nrows() {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        let scaled = model.scaling.apply_row(&row)?;
        let mut votes: Vec<(u8, usize)> = model.classes.iter().map(|&c| (c, 0)).collect();
        for clf in &model.classifiers {
            let mut f = clf.bias;
            for (sv, &coef) in clf.support_vectors.iter().zip(&clf.dual_coefs) {
                f += coef * rbf_unchecked(&scaled, sv, model.kernel.gamma);
            }
            let winner = if f >= 0.0 {
                clf.class_pair.0
            } else {
                clf.class_pair.1
            };
            if let Some(v) = votes.iter_mut().find(|(c, _)| *c == winner) {
                v.1 += 1;
            }
        }
        // classes are sorted ascending, so max_by_key on count with reversed
        // iteration keeps the lowest label on ties
        let best = votes
            .iter()
            .rev()
            .max_by_key(|(_, count)| *count)
            .map(|(c, _)| *c)
            .unwrap();
        out.push(MixingClassLabel(best));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn kernel() -> RbfKernelParams {
        RbfKernelParams::new(2.0).unwrap()
    }

    fn blob(
        rng: &mut ChaCha8Rng,
        center: [f64; 2],
        radius: f64,
        n: usize,
        label: u8,
        xs: &mut Vec<f64>,
        ls: &mut Vec<MixingClassLabel>,
    ) {
        for _ in 0..n {
            xs.push(center[0] + radius * (rng.gen::<f64>() * 2.0 - 1.0));
            xs.push(center[1] + radius * (rng.gen::<f64>() * 2.0 - 1.0));
            ls.push(MixingClassLabel(label));
        }
    }

    #[test]
    fn separable_blobs_perfect_training_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut xs = Vec::new();
        let mut ls = Vec::new();
        blob(&mut rng, [0.0, 0.0], 0.1, 15, 1, &mut xs, &mut ls);
        blob(&mut rng, [1.0, 1.0], 0.1, 15, 2, &mut xs, &mut ls);
        let x = DMatrix::from_row_slice(30, 2, &xs);
        let model = svm_train(&x, &ls, 10.0, kernel()).unwrap();
        assert_eq!(model.classifiers.len(), 1);
        let pred = svm_predict(&model, &x).unwrap();
        assert_eq!(pred, ls);
        // blob centers classify to their own labels
        let centers = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let c = svm_predict(&model, &centers).unwrap();
        assert_eq!(c, vec![MixingClassLabel(1), MixingClassLabel(2)]);
    }

    #[test]
    fn four_classes_give_six_classifiers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut xs = Vec::new();
        let mut ls = Vec::new();
        blob(&mut rng, [0.0, 0.0], 0.1, 8, 1, &mut xs, &mut ls);
        blob(&mut rng, [1.0, 0.0], 0.1, 8, 2, &mut xs, &mut ls);
        blob(&mut rng, [0.0, 1.0], 0.1, 8, 3, &mut xs, &mut ls);
        blob(&mut rng, [1.0, 1.0], 0.1, 8, 4, &mut xs, &mut ls);
        let x = DMatrix::from_row_slice(32, 2, &xs);
        let model = svm_train(&x, &ls, 10.0, kernel()).unwrap();
        assert_eq!(model.classifiers.len(), 6);
        let pred = svm_predict(&model, &x).unwrap();
        let correct = pred.iter().zip(&ls).filter(|(a, b)| a == b).count();
        assert_eq!(correct, 32);
    }

    #[test]
    fn binary_duals_satisfy_kkt_feasibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut xs = Vec::new();
        let mut ls = Vec::new();
        blob(&mut rng, [0.2, 0.2], 0.25, 12, 1, &mut xs, &mut ls);
        blob(&mut rng, [0.6, 0.6], 0.25, 12, 3, &mut xs, &mut ls);
        let x = DMatrix::from_row_slice(24, 2, &xs);
        let penalty = 1.5;
        let model = svm_train(&x, &ls, penalty, kernel()).unwrap();
        for clf in &model.classifiers {
            // dual_coefs store y_j alpha_j: equality constraint is their sum
            let eq: f64 = clf.dual_coefs.iter().sum();
            assert!(eq.abs() <= 1e-8, "sum y_j alpha_j = {eq}");
            assert!(clf
                .dual_coefs
                .iter()
                .all(|&c| c.abs() <= penalty + 1e-12));
        }
    }

    #[test]
    fn missing_classes_shrink_classifier_count() {
        let x = DMatrix::from_row_slice(6, 1, &[0.0, 0.05, 0.1, 0.9, 0.95, 1.0]);
        let ls = vec![
            MixingClassLabel(2),
            MixingClassLabel(2),
            MixingClassLabel(2),
            MixingClassLabel(4),
            MixingClassLabel(4),
            MixingClassLabel(4),
        ];
        let model = svm_train(&x, &ls, 5.0, kernel()).unwrap();
        assert_eq!(model.classes, vec![2, 4]);
        assert_eq!(model.classifiers.len(), 1);
    }

    #[test]
    fn single_class_input_errors() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 1.0]);
        let ls = vec![MixingClassLabel(1); 3];
        assert!(svm_train(&x, &ls, 1.0, kernel()).is_err());
    }

    #[test]
    fn vote_counting_and_tie_break() {
        // hand-built model: class pairs vote deterministically via bias-only
        // classifiers (empty support sets)
        let clf = |pair: (u8, u8), bias: f64| BinaryClassifier {
            class_pair: pair,
            support_vectors: vec![],
            dual_coefs: vec![],
            bias,
        };
        // votes: 1 beats 2,3,4 -> (3,?,?,?); 2 beats 3,4; 3 beats 4
        let model = SvmModel {
            kernel: kernel(),
            hyperparams: SvmHyperparams { penalty: 1.0 },
            scaling: FeatureScaling::identity(1),
            feature_names: vec!["f0".into()],
            classes: vec![1, 2, 3, 4],
            classifiers: vec![
                clf((1, 2), 1.0),
                clf((1, 3), 1.0),
                clf((1, 4), 1.0),
                clf((2, 3), 1.0),
                clf((2, 4), 1.0),
                clf((3, 4), 1.0),
            ],
        };
        let x = DMatrix::from_row_slice(1, 1, &[0.0]);
        assert_eq!(svm_predict(&model, &x).unwrap()[0], MixingClassLabel(1));

        // tie between classes 1 and 2 at two votes each -> lowest label wins
        let tied = SvmModel {
            classifiers: vec![
                clf((1, 2), -1.0), // 2
                clf((1, 3), 1.0),  // 1
                clf((1, 4), 1.0),  // 1
                clf((2, 3), 1.0),  // 2 (now 2 has 2 votes)
                clf((2, 4), -1.0), // 4
                clf((3, 4), 1.0),  // 3
            ],
            ..model
        };
        assert_eq!(svm_predict(&tied, &x).unwrap()[0], MixingClassLabel(1));
    }

    #[test]
    fn class_labels_from_degree_of_mixing() {
        let cases = [
            (0.0, 1),
            (0.24, 1),
            (0.25, 2),
            (0.49, 2),
            (0.5, 3),
            (0.74, 3),
            (0.75, 4),
            (1.0, 4),
        ];
        for (v, label) in cases {
            assert_eq!(
                MixingClassLabel::from_degree_of_mixing(v).unwrap(),
                MixingClassLabel(label)
            );
        }
        assert!(MixingClassLabel::from_degree_of_mixing(1.5).is_err());
        assert!(MixingClassLabel::new(0).is_err());
        assert!(MixingClassLabel::new(5).is_err());
    }
}
