//! Dual decomposition (SMO) solver for the box-constrained, single-equality
//! QPs arising from SVR and soft-margin SVM training:
//!
//!   minimize   1/2 a^T Q a + p^T a
//!   subject to y^T a = 0,  0 <= a_t <= c,
//!
//! with Q_ts = y_t y_s K(x_{base(t)}, x_{base(s)}). Working pairs are chosen
//! by maximal KKT violation and the base-kernel rows are held in an LRU cache.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rom_ml::kernel::rbf_unchecked;

const MAX_PAIR_UPDATES: usize = 10_000_000;
/// Default byte budget for cached kernel rows.
const DEFAULT_CACHE_BYTES: usize = 64 << 20;

/// LRU cache over rows of the base kernel matrix K(i, .).
struct KernelCache {
    rows: HashMap<usize, (Vec<f64>, u64)>,
    stamp: u64,
    capacity: usize,
}

impl KernelCache {
    fn new(n_samples: usize, byte_budget: usize) -> Self {
        let row_bytes = (n_samples * 8).max(1);
        KernelCache {
            rows: HashMap::new(),
            stamp: 0,
            capacity: (byte_budget / row_bytes).max(2),
        }
    }

    fn row(&mut self, i: usize, x: &DMatrix<f64>, gamma: f64) -> Vec<f64> {
        self.stamp += 1;
        if let Some((row, stamp)) = self.rows.get_mut(&i) {
            *stamp = self.stamp;
            return row.clone();
        }
        let xi: Vec<f64> = x.row(i).iter().copied().collect();
        let row: Vec<f64> = (0..x.nrows())
            .map(|j| {
                let xj: Vec<f64> = x.row(j).iter().copied().collect();
                rbf_unchecked(&xi, &xj, gamma)
            })
            .collect();
        if self.rows.len() >= self.capacity {
            if let Some(&evict) = self
                .rows
                .iter()
                .min_by_key(|(_, (_, s))| *s)
                .map(|(k, _)| k)
            {
                self.rows.remove(&evict);
            }
        }
        self.rows.insert(i, (row.clone(), self.stamp));
        row
    }
}

pub struct SmoProblem<'a> {
    /// Sample matrix (n_samples x n_features), rows referenced by `base`.
    pub x: &'a DMatrix<f64>,
    pub gamma: f64,
    /// Sign of each dual variable, +1 or -1.
    pub y: Vec<f64>,
    /// Linear term of the dual objective.
    pub p: Vec<f64>,
    /// Upper box bound (the penalty parameter).
    pub c: f64,
    /// Map from dual variable index to sample row.
    pub base: Vec<usize>,
}

pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Pair updates performed before the KKT gap closed.
    #[allow(dead_code)]
    pub iterations: usize,
    /// Final maximal KKT violation.
    #[allow(dead_code)]
    pub gap: f64,
}

/// Solve the dual to first-order KKT tolerance `tol` (maximal violating pair).
pub fn solve_smo(problem: &SmoProblem, tol: f64) -> Result<SmoSolution> {
    let m = problem.y.len();
    assert_eq!(problem.p.len(), m);
    assert_eq!(problem.base.len(), m);
    let n_samples = problem.x.nrows();
    let mut cache = KernelCache::new(n_samples, DEFAULT_CACHE_BYTES);

    let mut alpha = vec![0.0f64; m];
    let mut grad = problem.p.clone();
    let c = problem.c;
    let y = &problem.y;
    let mut iterations = 0usize;
    let mut gap;

    loop {
        // i maximizes -y_t g_t over I_up, j minimizes it over I_low
        let mut i = None;
        let mut j = None;
        let mut up_max = f64::NEG_INFINITY;
        let mut low_min = f64::INFINITY;
        for t in 0..m {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0);
            if in_up && v > up_max {
                up_max = v;
                i = Some(t);
            }
            if in_low && v < low_min {
                low_min = v;
                j = Some(t);
            }
        }
        gap = up_max - low_min;
        let (i, j) = match (i, j) {
            (Some(i), Some(j)) if gap > tol => (i, j),
            _ => break,
        };

        if iterations >= MAX_PAIR_UPDATES {
            return Err(Error::NonConvergence {
                iterations,
                residual: gap,
            });
        }
        iterations += 1;

        let (bi, bj) = (problem.base[i], problem.base[j]);
        let row_i = cache.row(bi, problem.x, problem.gamma);
        let row_j = cache.row(bj, problem.x, problem.gamma);
        let curvature = (row_i[bi] + row_j[bj] - 2.0 * row_i[bj]).max(1e-12);

        // step d along (a_i += y_i d, a_j -= y_j d); gap > 0 implies d > 0
        let mut d = gap / curvature;
        d = d.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        d = d.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });
        alpha[i] += y[i] * d;
        alpha[j] -= y[j] * d;
        alpha[i] = alpha[i].clamp(0.0, c);
        alpha[j] = alpha[j].clamp(0.0, c);

        for t in 0..m {
            let bt = problem.base[t];
            grad[t] += d * y[t] * (row_i[bt] - row_j[bt]);
        }
    }

    Ok(SmoSolution {
        bias: compute_bias(&alpha, &grad, y, c),
        alpha,
        iterations,
        gap: gap.max(0.0),
    })
}

/// Bias from KKT stationarity: averaged over free variables when any exist,
/// otherwise the midpoint of the interval the bound variables allow.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] >= c {
            if y[t] > 0.0 {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    -rho
}

/// Dual objective 1/2 a^T Q a + p^T a, recomputed densely (test/diagnostic use).
#[cfg(test)]
pub(crate) fn dual_objective(problem: &SmoProblem, alpha: &[f64]) -> f64 {
    let m = alpha.len();
    let mut quad = 0.0;
    for t in 0..m {
        for s in 0..m {
            let xt: Vec<f64> = problem.x.row(problem.base[t]).iter().copied().collect();
            let xs: Vec<f64> = problem.x.row(problem.base[s]).iter().copied().collect();
            let k = rbf_unchecked(&xt, &xs, problem.gamma);
            quad += alpha[t] * alpha[s] * problem.y[t] * problem.y[s] * k;
        }
    }
    0.5 * quad + problem.p.iter().zip(alpha).map(|(p, a)| p * a).sum::<f64>()
}
