use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian RBF kernel parameters: K(x, z) = exp(-gamma * ||x - z||^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfKernelParams {
    pub gamma: f64,
}

impl RbfKernelParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "RBF gamma must be positive and finite, got {gamma}"
            )));
        }
        Ok(RbfKernelParams { gamma })
    }
}

/// RBF kernel between two feature vectors; value in (0, 1].
pub fn rbf_kernel(x: &[f64], z: &[f64], params: &RbfKernelParams) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel arguments have lengths {} and {}",
            x.len(),
            z.len()
        )));
    }
    Ok(rbf_unchecked(x, z, params.gamma))
}

/// Same as [`rbf_kernel`] but skips the length check; for trusted inner loops.
pub(crate) fn rbf_unchecked(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    let dist_sq: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * dist_sq).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_points_give_one() {
        let p = RbfKernelParams::new(2.5).unwrap();
        let x = [0.3, 0.7, 0.1];
        assert_eq!(rbf_kernel(&x, &x, &p).unwrap(), 1.0);
    }

    #[test]
    fn unit_distance_closed_form() {
        let p = RbfKernelParams::new(0.1).unwrap();
        let v = rbf_kernel(&[0.0, 0.0], &[1.0, 0.0], &p).unwrap();
        assert_relative_eq!(v, 0.904837418035960, epsilon = 1e-12);
    }

    #[test]
    fn large_gamma_localizes() {
        let p = RbfKernelParams::new(1e6).unwrap();
        let v = rbf_kernel(&[0.0], &[0.5], &p).unwrap();
        assert!(v < 1e-300 || v == 0.0);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let p = RbfKernelParams::new(1.0).unwrap();
        assert!(rbf_kernel(&[0.0], &[0.0, 1.0], &p).is_err());
    }

    #[test]
    fn invalid_gamma_rejected() {
        assert!(RbfKernelParams::new(0.0).is_err());
        assert!(RbfKernelParams::new(-1.0).is_err());
        assert!(RbfKernelParams::new(f64::NAN).is_err());
    }
}
