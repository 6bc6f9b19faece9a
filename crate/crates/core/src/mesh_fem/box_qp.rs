use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Componentwise box `lower <= x <= upper`; entries may be infinite.
#[derive(Debug, Clone)]
pub struct BoxBounds {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl BoxBounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch(format!(
                "bounds lengths {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidInput("lower bound exceeds upper bound".into()));
        }
        Ok(BoxBounds { lower, upper })
    }

    pub fn uniform(lower: f64, upper: f64, n: usize) -> Result<Self> {
        Self::new(
            DVector::from_element(n, lower),
            DVector::from_element(n, upper),
        )
    }

    pub fn unbounded(n: usize) -> Self {
        BoxBounds {
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, x: &DVector<f64>, slack: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(&v, (&l, &u))| v >= l - slack && v <= u + slack)
    }

    pub fn clamp(&self, x: &mut DVector<f64>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }
}

/// Whether a component sits at a bound in the working set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Free,
    Lower,
    Upper,
}

/// Primal active-set solver for `min 1/2 x'Hx - g'x` subject to box bounds.
///
/// The full Cholesky factor is computed once so the common unconstrained
/// path costs a single back-substitution; free-set subproblems refactor the
/// free submatrix. Active sets can be warm-started from a previous solve.
pub struct ActiveSetQp {
    h: DMatrix<f64>,
    full_chol: Cholesky<f64, Dyn>,
}

const STEP_EPS: f64 = 1e-13;

impl ActiveSetQp {
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        let full_chol = Cholesky::new(h.clone())
            .ok_or_else(|| Error::Solver("matrix is not symmetric positive-definite".into()))?;
        Ok(ActiveSetQp { h, full_chol })
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Solve from scratch. See [`ActiveSetQp::solve_warm`].
    pub fn solve(&self, g: &DVector<f64>, bounds: &BoxBounds, tol: f64) -> Result<DVector<f64>> {
        Ok(self.solve_warm(g, bounds, None, tol)?.0)
    }

    /// Solve, optionally seeding the working set from a previous solution.
    /// Returns the minimizer and its final activity pattern.
    pub fn solve_warm(
        &self,
        g: &DVector<f64>,
        bounds: &BoxBounds,
        warm: Option<&[Activity]>,
        tol: f64,
    ) -> Result<(DVector<f64>, Vec<Activity>)> {
        let n = self.dim();
        if g.len() != n || bounds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "H is {n}x{n}, g has {} entries, bounds have {}",
                g.len(),
                bounds.len()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("g contains non-finite entries".into()));
        }

        // Fast path: unconstrained minimizer already feasible.
        let unconstrained = self.full_chol.solve(g);
        if bounds.contains(&unconstrained, 0.0) {
            return Ok((unconstrained, vec![Activity::Free; n]));
        }

        let mut activity: Vec<Activity> = match warm {
            Some(w) if w.len() == n => w.to_vec(),
            _ => {
                // seed from the clamped unconstrained solution
                let mut a = vec![Activity::Free; n];
                for i in 0..n {
                    if unconstrained[i] <= bounds.lower[i] {
                        a[i] = Activity::Lower;
                    } else if unconstrained[i] >= bounds.upper[i] {
                        a[i] = Activity::Upper;
                    }
                }
                a
            }
        };
        // components pinned by equal bounds stay fixed
        for i in 0..n {
            if bounds.lower[i] == bounds.upper[i] {
                activity[i] = Activity::Lower;
            }
        }

        let mut x = self.feasible_start(g, bounds, &mut activity)?;
        let grad_tol_free = tol * g.amax().max(1.0);

        let max_outer = 10 * n + 200;
        for _ in 0..max_outer {
            let target = self.subspace_solve(g, bounds, &activity, &x)?;
            let mut step_max = 0.0f64;
            for i in 0..n {
                step_max = step_max.max((target[i] - x[i]).abs());
            }

            if step_max <= STEP_EPS * (1.0 + x.amax()) {
                // subspace optimum reached; examine multipliers
                let r = &self.h * &x - g;
                let mut worst: Option<(usize, f64)> = None;
                for i in 0..n {
                    if bounds.lower[i] == bounds.upper[i] {
                        continue;
                    }
                    let viol = match activity[i] {
                        Activity::Lower => (-r[i]) - tol,
                        Activity::Upper => r[i] - tol,
                        Activity::Free => continue,
                    };
                    if viol > 0.0 && worst.map_or(true, |(_, v)| viol > v) {
                        worst = Some((i, viol));
                    }
                }
                match worst {
                    None => {
                        let free_ok = (0..n).all(|i| {
                            activity[i] != Activity::Free || r[i].abs() <= grad_tol_free.max(tol)
                        });
                        if free_ok {
                            return Ok((x, activity));
                        }
                        // free residual too large despite exact subspace solve:
                        // fall through to the projected-gradient cleanup below
                        break;
                    }
                    Some((i, _)) => {
                        activity[i] = Activity::Free;
                    }
                }
            } else {
                // step toward the subspace minimizer, stopping at the first bound
                let mut alpha = 1.0f64;
                let mut blocking: Option<(usize, Activity)> = None;
                for i in 0..n {
                    if activity[i] != Activity::Free {
                        continue;
                    }
                    let p = target[i] - x[i];
                    if p > 0.0 && x[i] + p > bounds.upper[i] {
                        let a = (bounds.upper[i] - x[i]) / p;
                        if a < alpha {
                            alpha = a;
                            blocking = Some((i, Activity::Upper));
                        }
                    } else if p < 0.0 && x[i] + p < bounds.lower[i] {
                        let a = (bounds.lower[i] - x[i]) / p;
                        if a < alpha {
                            alpha = a;
                            blocking = Some((i, Activity::Lower));
                        }
                    }
                }
                for i in 0..n {
                    if activity[i] == Activity::Free {
                        x[i] += alpha * (target[i] - x[i]);
                    }
                }
                if let Some((i, side)) = blocking {
                    x[i] = match side {
                        Activity::Lower => bounds.lower[i],
                        Activity::Upper => bounds.upper[i],
                        Activity::Free => unreachable!(),
                    };
                    activity[i] = side;
                }
            }
        }

        self.projected_gradient(g, bounds, x, tol)
    }

    /// Build a feasible point consistent with the working set: pinned
    /// components at their bounds, free components from the subspace solve,
    /// clamping (and pinning) any free component that lands outside.
    fn feasible_start(
        &self,
        g: &DVector<f64>,
        bounds: &BoxBounds,
        activity: &mut [Activity],
    ) -> Result<DVector<f64>> {
        let n = self.dim();
        let mut x = DVector::zeros(n);
        loop {
            for i in 0..n {
                match activity[i] {
                    Activity::Lower => x[i] = bounds.lower[i],
                    Activity::Upper => x[i] = bounds.upper[i],
                    Activity::Free => {}
                }
            }
            let target = self.subspace_solve(g, bounds, activity, &x)?;
            let mut clamped_any = false;
            for i in 0..n {
                if activity[i] != Activity::Free {
                    continue;
                }
                if target[i] < bounds.lower[i] {
                    activity[i] = Activity::Lower;
                    x[i] = bounds.lower[i];
                    clamped_any = true;
                } else if target[i] > bounds.upper[i] {
                    activity[i] = Activity::Upper;
                    x[i] = bounds.upper[i];
                    clamped_any = true;
                } else {
                    x[i] = target[i];
                }
            }
            if !clamped_any {
                return Ok(x);
            }
        }
    }

    /// Minimize over the free components with pinned components held at the
    /// values in `x`; returns the full-length target point.
    fn subspace_solve(
        &self,
        g: &DVector<f64>,
        bounds: &BoxBounds,
        activity: &[Activity],
        x: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let n = self.dim();
        let free: Vec<usize> = (0..n).filter(|&i| activity[i] == Activity::Free).collect();
        let mut target = x.clone();
        for i in 0..n {
            match activity[i] {
                Activity::Lower => target[i] = bounds.lower[i],
                Activity::Upper => target[i] = bounds.upper[i],
                Activity::Free => {}
            }
        }
        if free.is_empty() {
            return Ok(target);
        }
        if free.len() == n {
            return Ok(self.full_chol.solve(g));
        }
        let f = free.len();
        let mut h_ff = DMatrix::zeros(f, f);
        let mut rhs = DVector::zeros(f);
        for (a, &i) in free.iter().enumerate() {
            let mut acc = g[i];
            for j in 0..n {
                if activity[j] != Activity::Free {
                    acc -= self.h[(i, j)] * target[j];
                }
            }
            rhs[a] = acc;
            for (b, &j) in free.iter().enumerate() {
                h_ff[(a, b)] = self.h[(i, j)];
            }
        }
        let chol = Cholesky::new(h_ff)
            .ok_or_else(|| Error::Solver("free-set submatrix not positive-definite".into()))?;
        let xf = chol.solve(&rhs);
        for (a, &i) in free.iter().enumerate() {
            target[i] = xf[a];
        }
        Ok(target)
    }

    /// Fallback when the active-set loop cycles: projected gradient with a
    /// fixed step bounded by the row-sum norm of H.
    fn projected_gradient(
        &self,
        g: &DVector<f64>,
        bounds: &BoxBounds,
        mut x: DVector<f64>,
        tol: f64,
    ) -> Result<(DVector<f64>, Vec<Activity>)> {
        let n = self.dim();
        let row_norm = (0..n)
            .map(|i| self.h.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let step = 1.0 / row_norm.max(1e-300);
        let max_iters = 200_000;
        let grad_tol_free = tol * g.amax().max(1.0);
        for it in 0..max_iters {
            let r = &self.h * &x - g;
            let mut kkt = true;
            for i in 0..n {
                if x[i] <= bounds.lower[i] {
                    kkt &= r[i] >= -tol;
                } else if x[i] >= bounds.upper[i] {
                    kkt &= r[i] <= tol;
                } else {
                    kkt &= r[i].abs() <= grad_tol_free.max(tol);
                }
            }
            if kkt {
                let activity = (0..n)
                    .map(|i| {
                        if x[i] <= bounds.lower[i] {
                            Activity::Lower
                        } else if x[i] >= bounds.upper[i] {
                            Activity::Upper
                        } else {
                            Activity::Free
                        }
                    })
                    .collect();
                return Ok((x, activity));
            }
            x -= step * r;
            bounds.clamp(&mut x);
            if it == max_iters - 1 {
                let residual = (&self.h * &x - g).amax();
                return Err(Error::NonConvergence {
                    iterations: max_iters,
                    residual,
                });
            }
        }
        unreachable!()
    }
}

/// One-shot box-constrained QP solve; see [`ActiveSetQp`].
pub fn solve_box_qp(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    bounds: &BoxBounds,
    tol: f64,
) -> Result<DVector<f64>> {
    ActiveSetQp::new(h.clone())?.solve(g, bounds, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_projection() {
        let h = DMatrix::identity(2, 2);
        let g = DVector::from_vec(vec![-1.0, 2.0]);
        let bounds = BoxBounds::uniform(0.0, f64::INFINITY, 2).unwrap();
        let x = solve_box_qp(&h, &g, &bounds, 1e-10).unwrap();
        assert_relative_eq!(x[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn inactive_constraints_return_g() {
        let h = DMatrix::identity(3, 3);
        let g = DVector::from_vec(vec![0.2, 0.5, 0.9]);
        let bounds = BoxBounds::uniform(0.0, 1.0, 3).unwrap();
        let x = solve_box_qp(&h, &g, &bounds, 1e-10).unwrap();
        assert_relative_eq!(x, g, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_spd() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let g = DVector::zeros(2);
        let bounds = BoxBounds::uniform(0.0, 1.0, 2).unwrap();
        assert!(matches!(
            solve_box_qp(&h, &g, &bounds, 1e-10),
            Err(Error::Solver(_))
        ));
    }

    /// Exhaustive oracle: enumerate all 3^n lower/free/upper patterns, solve
    /// the free block exactly, keep KKT-consistent candidates, and take the
    /// one with the lowest objective.
    pub(crate) fn brute_force_box_qp(
        h: &DMatrix<f64>,
        g: &DVector<f64>,
        bounds: &BoxBounds,
    ) -> DVector<f64> {
        let n = g.len();
        let mut best: Option<(f64, DVector<f64>)> = None;
        let patterns = 3usize.pow(n as u32);
        'pattern: for code in 0..patterns {
            let mut c = code;
            let mut fixed = vec![0u8; n];
            for s in fixed.iter_mut() {
                *s = (c % 3) as u8; // 0 free, 1 lower, 2 upper
                c /= 3;
            }
            let free: Vec<usize> = (0..n).filter(|&i| fixed[i] == 0).collect();
            let mut x = DVector::zeros(n);
            for i in 0..n {
                match fixed[i] {
                    1 => x[i] = bounds.lower[i],
                    2 => x[i] = bounds.upper[i],
                    _ => {}
                }
            }
            if !free.is_empty() {
                let f = free.len();
                let mut h_ff = DMatrix::zeros(f, f);
                let mut rhs = DVector::zeros(f);
                for (a, &i) in free.iter().enumerate() {
                    let mut acc = g[i];
                    for j in 0..n {
                        if fixed[j] != 0 {
                            acc -= h[(i, j)] * x[j];
                        }
                    }
                    rhs[a] = acc;
                    for (b, &j) in free.iter().enumerate() {
                        h_ff[(a, b)] = h[(i, j)];
                    }
                }
                let xf = Cholesky::new(h_ff).unwrap().solve(&rhs);
                for (a, &i) in free.iter().enumerate() {
                    x[i] = xf[a];
                }
            }
            // feasibility + KKT screening
            let r = h * &x - g;
            for i in 0..n {
                match fixed[i] {
                    0 => {
                        if x[i] < bounds.lower[i] - 1e-10
                            || x[i] > bounds.upper[i] + 1e-10
                            || r[i].abs() > 1e-8
                        {
                            continue 'pattern;
                        }
                    }
                    1 => {
                        if r[i] < -1e-8 {
                            continue 'pattern;
                        }
                    }
                    _ => {
                        if r[i] > 1e-8 {
                            continue 'pattern;
                        }
                    }
                }
            }
            let obj = 0.5 * x.dot(&(h * &x)) - g.dot(&x);
            if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                best = Some((obj, x));
            }
        }
        best.expect("at least one KKT point must exist").1
    }

    pub(crate) fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn matches_exhaustive_oracle_on_random_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.gen_range(2..=5);
            let h = random_spd(&mut rng, n);
            let g = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let bounds = BoxBounds::uniform(0.0, 1.0, n).unwrap();
            let x = solve_box_qp(&h, &g, &bounds, 1e-10).unwrap();
            let oracle = brute_force_box_qp(&h, &g, &bounds);
            assert!(
                (&x - &oracle).amax() <= 1e-8,
                "mismatch: {x:?} vs {oracle:?}"
            );
        }
    }

    #[test]
    fn warm_start_reaches_same_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 6;
        let h = random_spd(&mut rng, n);
        let solver = ActiveSetQp::new(h.clone()).unwrap();
        let bounds = BoxBounds::uniform(0.0, 1.0, n).unwrap();
        let g1 = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let (x1, act) = solver.solve_warm(&g1, &bounds, None, 1e-10).unwrap();
        let g2 = &g1 + DVector::from_fn(n, |_, _| rng.gen_range(-0.05..0.05));
        let (x2_warm, _) = solver.solve_warm(&g2, &bounds, Some(&act), 1e-10).unwrap();
        let (x2_cold, _) = solver.solve_warm(&g2, &bounds, None, 1e-10).unwrap();
        assert!((&x2_warm - &x2_cold).amax() <= 1e-8);
        assert!((&x1 - &x2_warm).amax() <= 1.0); // sanity: same problem family
    }
}
