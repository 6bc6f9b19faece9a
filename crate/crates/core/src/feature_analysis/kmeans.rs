use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const N_RESTARTS: usize = 10;
const MAX_LLOYD_ITERS: usize = 300;
/// Marginal explained-variance gain below which the elbow sweep stops.
const ELBOW_GAIN: f64 = 0.05;

/// k-means clustering output; explained fraction is between-cluster SS over
/// total SS.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterResult {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub explained_variance_fraction: f64,
}

impl ClusterResult {
    /// `point_id,cluster` rows.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["point_id", "cluster"])?;
        for (i, &c) in self.assignments.iter().enumerate() {
            w.write_record([&format!("{i}"), &format!("{c}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn row(points: &DMatrix<f64>, i: usize) -> Vec<f64> {
    points.row(i).iter().copied().collect()
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(c, cen)| (c, dist_sq(cen, p)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
}

fn kmeanspp_seed(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let mut centroids = vec![row(points, rng.gen_range(0..n))];
    while centroids.len() < k {
        let d2: Vec<f64> = (0..n)
            .map(|i| nearest(&centroids, &row(points, i)).1)
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        };
        centroids.push(row(points, next));
    }
    centroids
}

fn lloyd(points: &DMatrix<f64>, mut centroids: Vec<Vec<f64>>) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let n = points.nrows();
    let d = points.ncols();
    let k = centroids.len();
    let mut assignments = vec![0usize; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for i in 0..n {
            let (c, _) = nearest(&centroids, &row(points, i));
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignments[i]] += 1;
            for j in 0..d {
                sums[assignments[i]][j] += points[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed an empty cluster from the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = dist_sq(&centroids[assignments[a]], &row(points, a));
                        let db = dist_sq(&centroids[assignments[b]], &row(points, b));
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids[c] = row(points, far);
                changed = true;
            } else {
                for j in 0..d {
                    centroids[c][j] = sums[c][j] / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let wss: f64 = (0..n)
        .map(|i| dist_sq(&centroids[assignments[i]], &row(points, i)))
        .sum();
    (assignments, centroids, wss)
}

/// Best of 10 k-means++ restarts by within-cluster sum of squares.
pub fn fit_kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<ClusterResult> {
    let n = points.nrows();
    if k == 0 || n < k {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    for restart in 0..N_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let init = kmeanspp_seed(points, k, &mut rng);
        let run = lloyd(points, init);
        if best.as_ref().map_or(true, |(_, _, wss)| run.2 < *wss) {
            best = Some(run);
        }
    }
    let (assignments, centroids, wss) = best.unwrap();

    let d = points.ncols();
    let mean: Vec<f64> = (0..d)
        .map(|j| points.column(j).sum() / n as f64)
        .collect();
    let tss: f64 = (0..n).map(|i| dist_sq(&mean, &row(points, i))).sum();
    let explained = if tss > 0.0 {
        (1.0 - wss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ClusterResult {
        k,
        assignments,
        centroids,
        explained_variance_fraction: explained,
    })
}

/// Smallest k in the range whose marginal explained-variance gain at k+1
/// drops below 0.05; the largest k if the gain never drops.
pub fn elbow_select(
    points: &DMatrix<f64>,
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<usize> {
    let ks: Vec<usize> = k_range.collect();
    if ks.is_empty() {
        return Err(Error::InvalidInput("empty k range".into()));
    }
    let evf: Vec<f64> = ks
        .iter()
        .map(|&k| fit_kmeans(points, k, seed).map(|r| r.explained_variance_fraction))
        .collect::<Result<_>>()?;
    for i in 0..ks.len() - 1 {
        if evf[i + 1] - evf[i] < ELBOW_GAIN {
            return Ok(ks[i]);
        }
    }
    Ok(*ks.last().unwrap())
}
