use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::mesh_fem::Mesh;

/// Consistent mass and diffusion matrices assembled at one time level.
///
/// The dispersion tensor is evaluated once per element at the centroid.
/// With zero-flux boundaries there are no Dirichlet rows, so the diffusion
/// matrix annihilates the constant vector.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub mass: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub evaluated_at: f64,
}

impl AssembledSystem {
    /// `1^T M c`, the consistent-mass quadrature of the field.
    pub fn integrate(&self, c: &nalgebra::DVector<f64>) -> f64 {
        (&self.mass * c).sum()
    }

    /// `c^T M c`, the squared M-norm of the field.
    pub fn m_norm_sq(&self, c: &nalgebra::DVector<f64>) -> f64 {
        c.dot(&(&self.mass * c))
    }
}

/// Assemble mass and diffusion matrices for linear triangles.
///
/// `dispersion` must return a symmetric positive-definite 2x2 tensor at any
/// point; it is sampled at element centroids at time `t`.
pub fn assemble<F>(mesh: &Mesh, dispersion: F, t: f64) -> Result<AssembledSystem>
where
    F: Fn([f64; 2], f64) -> Matrix2<f64>,
{
    let n = mesh.n_nodes();
    let mut mass = DMatrix::zeros(n, n);
    let mut diffusion = DMatrix::zeros(n, n);

    for k in 0..mesh.n_triangles() {
        let tri = mesh.triangles()[k];
        let area = mesh.triangle_area(k);
        let d = dispersion(mesh.centroid(k), t);
        check_spd(&d, k)?;

        // consistent mass: area/12 * (1 + delta_ij)
        for (li, &gi) in tri.iter().enumerate() {
            for (lj, &gj) in tri.iter().enumerate() {
                let w = if li == lj { 2.0 } else { 1.0 };
                mass[(gi, gj)] += w * area / 12.0;
            }
        }

        // constant gradients of the linear basis functions
        let p: Vec<[f64; 2]> = tri.iter().map(|&g| mesh.node_coords()[g]).collect();
        let grads = [
            Vector2::new(p[1][1] - p[2][1], p[2][0] - p[1][0]) / (2.0 * area),
            Vector2::new(p[2][1] - p[0][1], p[0][0] - p[2][0]) / (2.0 * area),
            Vector2::new(p[0][1] - p[1][1], p[1][0] - p[0][0]) / (2.0 * area),
        ];
        for li in 0..3 {
            for lj in 0..3 {
                diffusion[(tri[li], tri[lj])] += area * grads[li].dot(&(d * grads[lj]));
            }
        }
    }

    Ok(AssembledSystem {
        mass,
        diffusion,
        evaluated_at: t,
    })
}

fn check_spd(d: &Matrix2<f64>, element: usize) -> Result<()> {
    let sym = (d[(0, 1)] - d[(1, 0)]).abs()
        <= 1e-10 * (1.0 + d[(0, 1)].abs().max(d[(1, 0)].abs()));
    let det = d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)];
    if !sym || !(d[(0, 0)] > 0.0) || !(det > 0.0) {
        return Err(Error::Assembly {
            element,
            reason: format!("dispersion tensor not SPD: {d:?}"),
        });
    }
    Ok(())
}
