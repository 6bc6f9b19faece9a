//! Support-vector regression and one-vs-one classification with RBF kernels,
//! trained by an SMO-style dual decomposition solver, plus model metrics,
//! ensembles, and JSON persistence.

mod kernel;
mod metrics;
mod smo;
mod svm;
mod svr;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use kernel::{rbf_kernel, RbfKernelParams};
pub use metrics::{f1_score, r2_score};
pub use smo::{solve_smo, SmoProblem, SmoSolution};
pub use svm::{svm_predict, svm_train, BinaryClassifier, MixingClassLabel, SvmHyperparams, SvmModel};
pub use svr::{ensemble_predict, svr_predict, svr_train, SvrHyperparams, SvrModel, SVR_SOLVER_TOL};

/// Either model kind, tagged for JSON storage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Model {
    Svr(SvrModel),
    Svm(SvmModel),
}

/// Write a model as pretty-printed JSON. Floats round-trip exactly through
/// serde_json's shortest-representation formatting.
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(model)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    let json = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&json)?)
}
