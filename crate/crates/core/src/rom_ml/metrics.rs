use crate::error::{Error, Result};
use crate::rom_ml::svm::MixingClassLabel;

/// Coefficient of determination R^2 = 1 - SS_res / SS_tot.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} true values vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.len() < 2 {
        return Err(Error::InvalidInput("R^2 needs at least 2 samples".into()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|&t| (t - mean) * (t - mean)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::FitDegenerate(
            "R^2 undefined for zero-variance targets".into(),
        ));
    }
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(&t, &p)| (t - p) * (t - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Macro-averaged F1 over the classes present in either labeling.
pub fn f1_score(labels_true: &[MixingClassLabel], labels_pred: &[MixingClassLabel]) -> Result<f64> {
    if labels_true.len() != labels_pred.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} true labels vs {} predictions",
            labels_true.len(),
            labels_pred.len()
        )));
    }
    if labels_true.is_empty() {
        return Err(Error::InvalidInput("F1 needs at least 1 sample".into()));
    }
    let mut classes: Vec<u8> = labels_true
        .iter()
        .chain(labels_pred)
        .map(|l| l.0)
        .collect();
    classes.sort_unstable();
    classes.dedup();

    let mut f1_sum = 0.0;
    for &c in &classes {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fnn = 0usize;
        for (t, p) in labels_true.iter().zip(labels_pred) {
            match (t.0 == c, p.0 == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fnn += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fnn;
        f1_sum += if denom > 0 {
            2.0 * tp as f64 / denom as f64
        } else {
            0.0
        };
    }
    Ok(f1_sum / classes.len() as f64)
}
