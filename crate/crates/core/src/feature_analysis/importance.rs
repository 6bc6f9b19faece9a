use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    FTest,
    MutualInfo,
    RandomForest,
}

/// Per-feature importance scores with a descending ranking (stable ties).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: ImportanceMethod,
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    /// Feature indices sorted by score, highest first.
    pub ranking: Vec<usize>,
    /// Set when the input was too small to split (all-zero scores).
    pub degenerate: bool,
}

impl ImportanceReport {
    fn new(method: ImportanceMethod, feature_names: Vec<String>, scores: Vec<f64>) -> Self {
        let mut ranking: Vec<usize> = (0..scores.len()).collect();
        ranking.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
        ImportanceReport {
            method,
            feature_names,
            scores,
            ranking,
            degenerate: false,
        }
    }

    /// `feature,score,rank` rows in ranking order.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["feature", "score", "rank"])?;
        for (rank, &j) in self.ranking.iter().enumerate() {
            w.write_record([
                self.feature_names[j].as_str(),
                &format!("{}", self.scores[j]),
                &format!("{}", rank + 1),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_shapes(x: &DMatrix<f64>, y: &[f64], feature_names: &[String]) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if feature_names.len() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} columns but {} feature names",
            x.ncols(),
            feature_names.len()
        )));
    }
    Ok(())
}

/// Univariate linear-regression F statistic per feature:
/// F = r^2 / (1 - r^2) * (n - 2) with r the Pearson correlation.
pub fn f_test_importance(
    x: &DMatrix<f64>,
    y: &[f64],
    feature_names: &[String],
) -> Result<ImportanceReport> {
    check_shapes(x, y, feature_names)?;
    let n = y.len();
    if n < 3 {
        return Err(Error::InvalidInput("F-test needs at least 3 samples".into()));
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let y_var: f64 = y.iter().map(|&v| (v - y_mean) * (v - y_mean)).sum();
    if y_var <= 0.0 {
        return Err(Error::FitDegenerate(
            "F-test undefined for zero-variance targets".into(),
        ));
    }
    let mut scores = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let x_mean = col.sum() / n as f64;
        let x_var: f64 = col.iter().map(|&v| (v - x_mean) * (v - x_mean)).sum();
        let f = if x_var <= 0.0 {
            0.0
        } else {
            let cov: f64 = col
                .iter()
                .zip(y)
                .map(|(&xv, &yv)| (xv - x_mean) * (yv - y_mean))
                .sum();
            let r_sq = (cov * cov / (x_var * y_var)).min(1.0);
            // keep exact fits finite per the report invariant
            r_sq / (1.0 - r_sq).max(1e-12) * (n - 2) as f64
        };
        scores.push(f);
    }
    Ok(ImportanceReport::new(
        ImportanceMethod::FTest,
        feature_names.to_vec(),
        scores,
    ))
}

/// Seed for the deterministic degeneracy-breaking jitter in the MI estimator.
const MI_JITTER_SEED: u64 = 0x6d69; // "mi"

/// Mutual information per feature via the Kraskov k-NN estimator (variant 1)
/// with the Chebyshev metric on standardized (feature, target) pairs.
/// Negative estimates clamp to 0.
pub fn mutual_info_importance(
    x: &DMatrix<f64>,
    y: &[f64],
    k_neighbors: usize,
    feature_names: &[String],
) -> Result<ImportanceReport> {
    check_shapes(x, y, feature_names)?;
    let n = y.len();
    if k_neighbors == 0 || n <= k_neighbors + 1 {
        return Err(Error::InvalidInput(format!(
            "MI estimation needs n > k+1, got n={n}, k={k_neighbors}"
        )));
    }
    let mut scores = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let xs: Vec<f64> = x.column(j).iter().copied().collect();
        let mi = ksg_mi(&xs, y, k_neighbors, MI_JITTER_SEED ^ j as u64);
        scores.push(mi.max(0.0));
    }
    Ok(ImportanceReport::new(
        ImportanceMethod::MutualInfo,
        feature_names.to_vec(),
        scores,
    ))
}

fn standardize(v: &[f64], jitter: &mut ChaCha8Rng) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    v.iter()
        .map(|&x| (x - mean) / sd + 1e-10 * (jitter.gen::<f64>() - 0.5))
        .collect()
}

/// I(X;Y) = psi(k) + psi(N) - <psi(n_x + 1) + psi(n_y + 1)>.
fn ksg_mi(x: &[f64], y: &[f64], k: usize, seed: u64) -> f64 {
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = standardize(x, &mut rng);
    let ys = standardize(y, &mut rng);

    let mut psi_sum = 0.0;
    for i in 0..n {
        // Chebyshev distance to the k-th nearest neighbor in the joint space
        let mut dists: Vec<f64> = (0..n)
            .filter(|&t| t != i)
            .map(|t| (xs[t] - xs[i]).abs().max((ys[t] - ys[i]).abs()))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let eps = dists[k - 1];
        let n_x = (0..n)
            .filter(|&t| t != i && (xs[t] - xs[i]).abs() < eps)
            .count();
        let n_y = (0..n)
            .filter(|&t| t != i && (ys[t] - ys[i]).abs() < eps)
            .count();
        psi_sum += digamma((n_x + 1) as f64) + digamma((n_y + 1) as f64);
    }
    digamma(k as f64) + digamma(n as f64) - psi_sum / n as f64
}

/// Feature importance from a forest of regression trees: variance-reduction
/// impurity, no bootstrap, at most 4 candidate features per node, importances
/// normalized to sum 1. Randomness only in per-node feature subsampling.
pub fn random_forest_importance(
    x: &DMatrix<f64>,
    y: &[f64],
    n_trees: usize,
    seed: u64,
    feature_names: &[String],
) -> Result<ImportanceReport> {
    check_shapes(x, y, feature_names)?;
    if n_trees == 0 {
        return Err(Error::InvalidInput("need at least one tree".into()));
    }
    let n = y.len();
    let n_features = x.ncols();
    if n < 2 {
        let mut report = ImportanceReport::new(
            ImportanceMethod::RandomForest,
            feature_names.to_vec(),
            vec![0.0; n_features],
        );
        report.degenerate = true;
        return Ok(report);
    }

    use rayon::prelude::*;
    let per_tree: Vec<Vec<f64>> = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
            let mut importances = vec![0.0; n_features];
            let rows: Vec<usize> = (0..n).collect();
            grow_tree(x, y, &rows, &mut rng, &mut importances);
            importances
        })
        .collect();

    let mut scores = vec![0.0; n_features];
    for tree in &per_tree {
        for (s, v) in scores.iter_mut().zip(tree) {
            *s += v;
        }
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        for s in &mut scores {
            *s /= total;
        }
    }
    let mut report = ImportanceReport::new(
        ImportanceMethod::RandomForest,
        feature_names.to_vec(),
        scores,
    );
    report.degenerate = total <= 0.0;
    Ok(report)
}

const MAX_FEATURES_PER_NODE: usize = 4;

fn sse(y: &[f64], rows: &[usize]) -> f64 {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n;
    rows.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum()
}

fn grow_tree(
    x: &DMatrix<f64>,
    y: &[f64],
    rows: &[usize],
    rng: &mut ChaCha8Rng,
    importances: &mut Vec<f64>,
) {
    if rows.len() < 2 {
        return;
    }
    let node_sse = sse(y, rows);
    if node_sse <= 1e-15 {
        return;
    }

    let n_features = x.ncols();
    let mut candidates: Vec<usize> = (0..n_features).collect();
    candidates.shuffle(rng);
    candidates.truncate(MAX_FEATURES_PER_NODE.min(n_features));
    candidates.sort_unstable(); // deterministic evaluation order

    let mut best: Option<(f64, usize, f64)> = None; // (decrease, feature, threshold)
    for &j in &candidates {
        let mut sorted: Vec<usize> = rows.to_vec();
        sorted.sort_by(|&a, &b| x[(a, j)].partial_cmp(&x[(b, j)]).unwrap());
        // incremental left/right sums for every midpoint split
        let total_sum: f64 = sorted.iter().map(|&i| y[i]).sum();
        let total_sq: f64 = sorted.iter().map(|&i| y[i] * y[i]).sum();
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for split in 1..sorted.len() {
            let yi = y[sorted[split - 1]];
            left_sum += yi;
            left_sq += yi * yi;
            let lo = x[(sorted[split - 1], j)];
            let hi = x[(sorted[split], j)];
            if hi <= lo {
                continue;
            }
            let nl = split as f64;
            let nr = (sorted.len() - split) as f64;
            let sse_l = left_sq - left_sum * left_sum / nl;
            let sse_r = (total_sq - left_sq) - (total_sum - left_sum).powi(2) / nr;
            let decrease = node_sse - sse_l - sse_r;
            if best.map_or(true, |(d, _, _)| decrease > d) {
                best = Some((decrease, j, 0.5 * (lo + hi)));
            }
        }
    }

    let Some((decrease, feature, threshold)) = best else {
        return;
    };
    if decrease <= 0.0 {
        return;
    }
    importances[feature] += decrease;
    let (left, right): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&i| x[(i, feature)] <= threshold);
    grow_tree(x, y, &left, rng, importances);
    grow_tree(x, y, &right, rng, importances);
}
