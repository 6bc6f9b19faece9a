use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_analysis::FeatureScaling;
use crate::rom_ml::kernel::{rbf_unchecked, RbfKernelParams};
use crate::rom_ml::smo::{solve_smo, SmoProblem};

/// KKT tolerance for the dual solver.
pub const SVR_SOLVER_TOL: f64 = 1e-3;
/// Dual coefficients below this magnitude are dropped from the support set.
const SUPPORT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyperparams {
    /// Penalty weight on tube violations.
    #[serde(rename = "P")]
    pub penalty: f64,
    /// Half-width of the insensitive tube.
    pub eps: f64,
}

/// Trained epsilon-insensitive support vector regressor with an RBF kernel.
///
/// Prediction is `sum_j dual_coefs[j] * K(x, support_vectors[j]) + bias`
/// evaluated on features mapped through `scaling`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: RbfKernelParams,
    pub hyperparams: SvrHyperparams,
    pub scaling: FeatureScaling,
    pub feature_names: Vec<String>,
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
}

impl SvrModel {
    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }
}

fn default_feature_names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("f{j}")).collect()
}

/// Train an SVR on pre-scaled features (entries expected in [0,1]).
///
/// The returned model carries identity scaling; callers that scaled the data
/// themselves should overwrite `scaling` and `feature_names` so that raw
/// samples can be fed to [`svr_predict`].
pub fn svr_train(
    x: &DMatrix<f64>,
    y: &[f64],
    penalty: f64,
    eps: f64,
    kernel: RbfKernelParams,
) -> Result<SvrModel> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "SVR needs at least 2 samples, got {n}"
        )));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} samples but {} targets",
            n,
            y.len()
        )));
    }
    if !(penalty > 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "need penalty > 0 and eps >= 0, got P={penalty}, eps={eps}"
        )));
    }

    // dual over (alpha, alpha*): signs (+1, -1), linear terms (eps - y, eps + y)
    let mut signs = vec![1.0; n];
    signs.extend(std::iter::repeat(-1.0).take(n));
    let mut linear: Vec<f64> = y.iter().map(|&t| eps - t).collect();
    linear.extend(y.iter().map(|&t| eps + t));
    let mut base: Vec<usize> = (0..n).collect();
    base.extend(0..n);

    let problem = SmoProblem {
        x,
        gamma: kernel.gamma,
        y: signs,
        p: linear,
        c: penalty,
        base,
    };
    let sol = solve_smo(&problem, SVR_SOLVER_TOL)?;

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for j in 0..n {
        let beta = sol.alpha[j] - sol.alpha[n + j];
        if beta.abs() > SUPPORT_EPS {
            support_vectors.push(x.row(j).iter().copied().collect());
            dual_coefs.push(beta);
        }
    }

    Ok(SvrModel {
        kernel,
        hyperparams: SvrHyperparams { penalty, eps },
        scaling: FeatureScaling::identity(x.ncols()),
        feature_names: default_feature_names(x.ncols()),
        support_vectors,
        dual_coefs,
        bias: sol.bias,
    })
}

/// Predict with a trained SVR; rows of `x` are raw features mapped through
/// the model's stored scaling. With `clip_unit`, predictions are clamped to
/// [0,1] as normalized QoIs require.
pub fn svr_predict(model: &SvrModel, x: &DMatrix<f64>, clip_unit: bool) -> Result<Vec<f64>> {
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
        let mut f = model.bias;
        for (sv, &coef) in model.support_vectors.iter().zip(&model.dual_coefs) {
            f += coef * rbf_unchecked(&scaled, sv, model.kernel.gamma);
        }
        if clip_unit {
            f = f.clamp(0.0, 1.0);
        }
        out.push(f);
    }
    Ok(out)
}

/// Per-sample mean and [min, max] band over an ensemble of regressors.
pub fn ensemble_predict(
    models: &[SvrModel],
    x: &DMatrix<f64>,
    clip_unit: bool,
) -> Result<Vec<(f64, f64, f64)>> {
    if models.is_empty() {
        return Err(Error::InvalidInput("empty model ensemble".into()));
    }
    let mut bands = vec![(0.0f64, f64::INFINITY, f64::NEG_INFINITY); x.nrows()];
    for model in models {
        let pred = svr_predict(model, x, clip_unit)?;
        for (band, v) in bands.iter_mut().zip(pred) {
            band.0 += v / models.len() as f64;
            band.1 = band.1.min(v);
            band.2 = band.2.max(v);
        }
    }
    Ok(bands)
}
